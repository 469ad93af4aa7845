//! Tick-by-tick forms of the combinators.

use crate::vbus::{LineProcessor, LogicLevel, SimTime};

/// Rising-edge detector over one sampled input.
#[derive(Debug, Clone, Copy)]
struct Edge {
    prev: LogicLevel,
}

impl Edge {
    fn new(initial: LogicLevel) -> Self {
        Edge { prev: initial }
    }

    fn rose(&mut self, now: LogicLevel) -> bool {
        let rose = !self.prev.is_high() && now.is_high();
        self.prev = now;
        rose
    }
}

macro_rules! io_accessors {
    () => {
        fn sources(&self) -> &[String] {
            &self.sources
        }

        fn output(&self) -> &str {
            &self.output
        }
    };
}

#[derive(Debug, Clone)]
pub struct GatedEventProc {
    sources: Vec<String>,
    output: String,
    window_ms: u64,
    event: Edge,
    last_gate_high: Option<u64>,
}

impl GatedEventProc {
    pub fn new(event: &str, gate: &str, window_ms: u64, output: String) -> Self {
        GatedEventProc {
            sources: vec![event.to_string(), gate.to_string()],
            output,
            window_ms,
            event: Edge::new(LogicLevel::Low),
            last_gate_high: None,
        }
    }
}

impl LineProcessor for GatedEventProc {
    io_accessors!();

    fn start(&mut self, inputs: &[LogicLevel]) -> LogicLevel {
        self.event = Edge::new(inputs[0]);
        LogicLevel::Low
    }

    fn tick(&mut self, now: SimTime, inputs: &[LogicLevel]) -> LogicLevel {
        if inputs[1].is_high() {
            self.last_gate_high = Some(now.0);
        }
        let fire = self.event.rose(inputs[0])
            && self
                .last_gate_high
                .is_some_and(|g| g + self.window_ms >= now.0);
        LogicLevel::from_bool(fire)
    }
}

#[derive(Debug, Clone)]
pub struct DebounceProc {
    sources: Vec<String>,
    output: String,
    hold_ms: u64,
    out: LogicLevel,
    current: LogicLevel,
    since: u64,
}

impl DebounceProc {
    pub fn new(input: &str, hold_ms: u64, output: String) -> Self {
        DebounceProc {
            sources: vec![input.to_string()],
            output,
            hold_ms,
            out: LogicLevel::Low,
            current: LogicLevel::Low,
            since: 0,
        }
    }
}

impl LineProcessor for DebounceProc {
    io_accessors!();

    fn start(&mut self, inputs: &[LogicLevel]) -> LogicLevel {
        self.out = inputs[0];
        self.current = inputs[0];
        self.out
    }

    fn tick(&mut self, now: SimTime, inputs: &[LogicLevel]) -> LogicLevel {
        if inputs[0] != self.current {
            self.current = inputs[0];
            self.since = now.0;
        }
        if self.current != self.out && now.0 - self.since >= self.hold_ms {
            self.out = self.current;
        }
        self.out
    }
}

#[derive(Debug, Clone)]
pub struct PulseStretchProc {
    sources: Vec<String>,
    output: String,
    ms: u64,
    input: Edge,
    until: u64,
}

impl PulseStretchProc {
    pub fn new(input: &str, ms: u64, output: String) -> Self {
        PulseStretchProc {
            sources: vec![input.to_string()],
            output,
            ms,
            input: Edge::new(LogicLevel::Low),
            until: 0,
        }
    }
}

impl LineProcessor for PulseStretchProc {
    io_accessors!();

    fn start(&mut self, inputs: &[LogicLevel]) -> LogicLevel {
        self.input = Edge::new(inputs[0]);
        inputs[0]
    }

    fn tick(&mut self, now: SimTime, inputs: &[LogicLevel]) -> LogicLevel {
        if self.input.rose(inputs[0]) {
            self.until = now.0 + self.ms;
        }
        LogicLevel::from_bool(inputs[0].is_high() || now.0 < self.until)
    }
}

#[derive(Debug, Clone)]
pub struct SrLatchProc {
    sources: Vec<String>,
    output: String,
    set: Edge,
    reset: Edge,
    out: LogicLevel,
}

impl SrLatchProc {
    pub fn new(set: &str, reset: &str, output: String) -> Self {
        SrLatchProc {
            sources: vec![set.to_string(), reset.to_string()],
            output,
            set: Edge::new(LogicLevel::Low),
            reset: Edge::new(LogicLevel::Low),
            out: LogicLevel::Low,
        }
    }
}

impl LineProcessor for SrLatchProc {
    io_accessors!();

    fn start(&mut self, inputs: &[LogicLevel]) -> LogicLevel {
        self.set = Edge::new(inputs[0]);
        self.reset = Edge::new(inputs[1]);
        self.out = LogicLevel::Low;
        self.out
    }

    fn tick(&mut self, _now: SimTime, inputs: &[LogicLevel]) -> LogicLevel {
        let set = self.set.rose(inputs[0]);
        let reset = self.reset.rose(inputs[1]);
        if reset {
            self.out = LogicLevel::Low;
        } else if set {
            self.out = LogicLevel::High;
        }
        self.out
    }
}

#[derive(Debug, Clone)]
pub struct InvertProc {
    sources: Vec<String>,
    output: String,
}

impl InvertProc {
    pub fn new(input: &str, output: String) -> Self {
        InvertProc {
            sources: vec![input.to_string()],
            output,
        }
    }
}

impl LineProcessor for InvertProc {
    io_accessors!();

    fn start(&mut self, inputs: &[LogicLevel]) -> LogicLevel {
        inputs[0].inverted()
    }

    fn tick(&mut self, _now: SimTime, inputs: &[LogicLevel]) -> LogicLevel {
        inputs[0].inverted()
    }
}
