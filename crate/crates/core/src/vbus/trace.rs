use std::fmt;

use serde::{Deserialize, Serialize};

/// Milliseconds since power-on of the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn ms(self) -> u64 {
        self.0
    }

    pub fn plus(self, dt: u64) -> SimTime {
        SimTime(self.0 + dt)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ms", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LogicLevel {
    Low,
    High,
}

impl LogicLevel {
    pub fn is_high(self) -> bool {
        self == LogicLevel::High
    }

    pub fn from_bool(high: bool) -> Self {
        if high {
            LogicLevel::High
        } else {
            LogicLevel::Low
        }
    }

    pub fn inverted(self) -> Self {
        match self {
            LogicLevel::Low => LogicLevel::High,
            LogicLevel::High => LogicLevel::Low,
        }
    }

    /// `0` or `1`, as used in trace dumps.
    pub fn bit(self) -> u8 {
        self.is_high() as u8
    }
}

/// A single level change on a line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub at: SimTime,
    pub level: LogicLevel,
}

/// Half-open `[start, end)` interval during which a line was HIGH.
///
/// `open_ended` marks an interval that was still HIGH when the run ended;
/// its `end` is the run end rather than a falling edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HighInterval {
    pub start: SimTime,
    pub end: SimTime,
    pub open_ended: bool,
}

impl HighInterval {
    pub fn len_ms(&self) -> u64 {
        self.end.0 - self.start.0
    }

    pub fn contains(&self, t: SimTime) -> bool {
        self.start <= t && t < self.end
    }
}

/// Time-ordered record of the level changes on one named line.
///
/// Transitions are strictly increasing in time and alternate in level, the
/// first one differing from `initial_level`. All mutation goes through
/// [`PinTrace::record`], which keeps those invariants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PinTrace {
    line_id: String,
    initial_level: LogicLevel,
    transitions: Vec<Transition>,
}

impl PinTrace {
    pub fn new(line_id: impl Into<String>, initial_level: LogicLevel) -> Self {
        PinTrace {
            line_id: line_id.into(),
            initial_level,
            transitions: Vec::new(),
        }
    }

    /// Builds a trace from raw `(time, level)` pairs, dropping entries that do
    /// not change the level. Times must be non-decreasing.
    pub fn from_levels(
        line_id: impl Into<String>,
        initial_level: LogicLevel,
        levels: impl IntoIterator<Item = (u64, LogicLevel)>,
    ) -> Self {
        let mut trace = PinTrace::new(line_id, initial_level);
        for (t, level) in levels {
            trace.record(SimTime(t), level);
        }
        trace
    }

    pub fn line_id(&self) -> &str {
        &self.line_id
    }

    pub fn initial_level(&self) -> LogicLevel {
        self.initial_level
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Level after the last recorded transition.
    pub fn current_level(&self) -> LogicLevel {
        self.transitions
            .last()
            .map_or(self.initial_level, |tr| tr.level)
    }

    pub fn last_change(&self) -> Option<SimTime> {
        self.transitions.last().map(|tr| tr.at)
    }

    /// Applies a level at time `at`. Returns `true` if the trace changed.
    ///
    /// Same level is a no-op. A change at the same instant as the previous
    /// transition cancels it (a zero-width pulse never becomes visible).
    /// Callers guarantee `at` is not earlier than the last transition.
    pub(crate) fn record(&mut self, at: SimTime, level: LogicLevel) -> bool {
        if level == self.current_level() {
            return false;
        }
        if let Some(last) = self.transitions.last() {
            debug_assert!(at >= last.at, "trace time went backwards");
            if last.at == at {
                self.transitions.pop();
                return true;
            }
        }
        self.transitions.push(Transition { at, level });
        true
    }

    /// Level in force at `t`: the last transition at or before `t`, otherwise
    /// the initial level.
    pub fn level_at(&self, t: SimTime) -> LogicLevel {
        let idx = self.transitions.partition_point(|tr| tr.at <= t);
        if idx == 0 {
            self.initial_level
        } else {
            self.transitions[idx - 1].level
        }
    }

    /// Disjoint, sorted HIGH intervals up to `run_end`.
    ///
    /// Transitions at or after `run_end` are ignored; a line still HIGH at
    /// `run_end` yields an interval closed there and flagged open-ended.
    pub fn high_intervals(&self, run_end: SimTime) -> Vec<HighInterval> {
        let mut out = Vec::new();
        let mut start = if self.initial_level.is_high() {
            Some(SimTime::ZERO)
        } else {
            None
        };
        for tr in self.transitions.iter().take_while(|tr| tr.at < run_end) {
            match (tr.level, start) {
                (LogicLevel::High, None) => start = Some(tr.at),
                (LogicLevel::Low, Some(s)) => {
                    if tr.at > s {
                        out.push(HighInterval {
                            start: s,
                            end: tr.at,
                            open_ended: false,
                        });
                    }
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            if run_end > s {
                out.push(HighInterval {
                    start: s,
                    end: run_end,
                    open_ended: true,
                });
            }
        }
        out
    }

    /// Times at which the line went LOW→HIGH.
    pub fn rising_edges(&self) -> impl Iterator<Item = SimTime> + '_ {
        self.transitions
            .iter()
            .filter(|tr| tr.level.is_high())
            .map(|tr| tr.at)
    }

    /// Times at which the line went HIGH→LOW.
    pub fn falling_edges(&self) -> impl Iterator<Item = SimTime> + '_ {
        self.transitions
            .iter()
            .filter(|tr| !tr.level.is_high())
            .map(|tr| tr.at)
    }

    /// Checks the alternation and monotonicity invariants.
    pub fn is_well_formed(&self) -> bool {
        let mut prev_level = self.initial_level;
        let mut prev_time: Option<SimTime> = None;
        for tr in &self.transitions {
            if tr.level == prev_level {
                return false;
            }
            if prev_time.is_some_and(|p| tr.at <= p) {
                return false;
            }
            prev_level = tr.level;
            prev_time = Some(tr.at);
        }
        true
    }

    pub(crate) fn renamed(mut self, line_id: impl Into<String>) -> Self {
        self.line_id = line_id.into();
        self
    }
}
