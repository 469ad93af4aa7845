//! Pin-level combinators.
//!
//! Every combinator exists twice: as a pure function over recorded traces
//! and as a [`LineProcessor`] the bus evaluates tick by tick. Both forms
//! agree on every tick, which the tests check.
//!
//! Tie-breaks: the gate window is inclusive at both ends, and a reset edge
//! on the same tick as a set edge leaves the latch LOW.
//!
//! ```
//! use mlsensor::compose::{debounce, pulse_stretch};
//! use mlsensor::vbus::{LogicLevel::*, PinTrace, SimTime};
//!
//! let glitch = PinTrace::from_levels("in", Low, [(100, High), (120, Low)]);
//! assert!(debounce(&glitch, 50).transitions().is_empty());
//!
//! let two = PinTrace::from_levels("in", Low, [(0, High), (1, Low), (100, High), (101, Low)]);
//! let merged = pulse_stretch(&two, 300).high_intervals(SimTime(1000));
//! assert_eq!((merged.len(), merged[0].end), (1, SimTime(400)));
//! ```

mod online;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::devkit::{device_ref, SensorKind};
use crate::sensors::{DETECT_PIN, STATE_PIN};
use crate::vbus::{Bus, BusError, DeviceHandle, LineProcessor, LogicLevel, PinTrace, SimTime};

pub use online::{DebounceProc, GatedEventProc, InvertProc, PulseStretchProc, SrLatchProc};

pub const DEFAULT_GATE_WINDOW_MS: u64 = 500;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComposeError {
    #[error("UNKNOWN_LINE: {0}")]
    UnknownLine(String),
    #[error("NOT_A_GAZE_PIN_DEVICE: {0}")]
    NotGaze(String),
    #[error("NOT_A_VOICE_PIN_DEVICE: {0}")]
    NotVoicePin(String),
    #[error(transparent)]
    Bus(#[from] BusError),
}

/// One combinator applied to named source lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Combinator {
    GatedEvent {
        event: String,
        gate: String,
        #[serde(default = "default_window")]
        window_ms: u64,
    },
    Debounce { input: String, hold_ms: u64 },
    PulseStretch { input: String, ms: u64 },
    SrLatch { set: String, reset: String },
    Invert { input: String },
}

fn default_window() -> u64 {
    DEFAULT_GATE_WINDOW_MS
}

impl Combinator {
    pub fn sources(&self) -> Vec<&str> {
        match self {
            Combinator::GatedEvent { event, gate, .. } => vec![event, gate],
            Combinator::Debounce { input, .. }
            | Combinator::PulseStretch { input, .. }
            | Combinator::Invert { input } => vec![input],
            Combinator::SrLatch { set, reset } => vec![set, reset],
        }
    }
}

/// A combinator bound to the line it drives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Composite {
    pub output: String,
    #[serde(flatten)]
    pub combinator: Combinator,
}

impl Composite {
    pub fn new(output: impl Into<String>, combinator: Combinator) -> Self {
        Composite {
            output: output.into(),
            combinator,
        }
    }

    /// Offline evaluation against already recorded traces.
    pub fn evaluate<'a>(
        &self,
        lookup: impl Fn(&str) -> Option<&'a PinTrace>,
    ) -> Result<PinTrace, ComposeError> {
        let get = |id: &str| lookup(id).ok_or_else(|| ComposeError::UnknownLine(id.to_string()));
        let trace = match &self.combinator {
            Combinator::GatedEvent {
                event,
                gate,
                window_ms,
            } => gated_event(get(event)?, get(gate)?, *window_ms),
            Combinator::Debounce { input, hold_ms } => debounce(get(input)?, *hold_ms),
            Combinator::PulseStretch { input, ms } => pulse_stretch(get(input)?, *ms),
            Combinator::SrLatch { set, reset } => sr_latch(get(set)?, get(reset)?),
            Combinator::Invert { input } => invert(get(input)?),
        };
        Ok(trace.renamed(self.output.clone()))
    }

    /// The online form, ready for [`Bus::add_processor`].
    pub fn processor(&self) -> Box<dyn LineProcessor> {
        let out = self.output.clone();
        match &self.combinator {
            Combinator::GatedEvent {
                event,
                gate,
                window_ms,
            } => Box::new(GatedEventProc::new(event, gate, *window_ms, out)),
            Combinator::Debounce { input, hold_ms } => {
                Box::new(DebounceProc::new(input, *hold_ms, out))
            }
            Combinator::PulseStretch { input, ms } => {
                Box::new(PulseStretchProc::new(input, *ms, out))
            }
            Combinator::SrLatch { set, reset } => Box::new(SrLatchProc::new(set, reset, out)),
            Combinator::Invert { input } => Box::new(InvertProc::new(input, out)),
        }
    }
}

/// Evaluates composites in order, each seeing the sources and every earlier
/// output. Returns the derived traces keyed by output line.
pub fn evaluate_all(
    sources: &BTreeMap<String, PinTrace>,
    composites: &[Composite],
) -> Result<BTreeMap<String, PinTrace>, ComposeError> {
    let mut derived: BTreeMap<String, PinTrace> = BTreeMap::new();
    for c in composites {
        let trace = c.evaluate(|id| derived.get(id).or_else(|| sources.get(id)))?;
        derived.insert(c.output.clone(), trace);
    }
    Ok(derived)
}

/// Registers composites on the bus in order.
pub fn install(bus: &mut Bus, composites: &[Composite]) -> Result<(), ComposeError> {
    for c in composites {
        bus.add_processor(c.processor())?;
    }
    Ok(())
}

/// True if `gate` was HIGH at any instant of the closed range `[from, to]`.
fn high_within(gate: &PinTrace, from: SimTime, to: SimTime) -> bool {
    gate.level_at(from).is_high() || gate.rising_edges().any(|t| t > from && t <= to)
}

/// One-tick pulse at each rising edge of `event` preceded by gate activity
/// within `window_ms`.
pub fn gated_event(event: &PinTrace, gate: &PinTrace, window_ms: u64) -> PinTrace {
    let mut out = PinTrace::new(format!("gated_event:{}", event.line_id()), LogicLevel::Low);
    for edge in event.rising_edges() {
        let from = SimTime(edge.0.saturating_sub(window_ms));
        if high_within(gate, from, edge) {
            out.record(edge, LogicLevel::High);
            out.record(SimTime(edge.0 + 1), LogicLevel::Low);
        }
    }
    out
}

/// Follows `line` only once a new level has held for `hold_ms`.
pub fn debounce(line: &PinTrace, hold_ms: u64) -> PinTrace {
    let initial = line.initial_level();
    let mut out = PinTrace::new(format!("debounce:{}", line.line_id()), initial);
    let trs = line.transitions();
    for (i, tr) in trs.iter().enumerate() {
        let settle = tr.at.0 + hold_ms;
        let survives = trs.get(i + 1).is_none_or(|next| next.at.0 > settle);
        if survives {
            out.record(SimTime(settle), tr.level);
        }
    }
    out
}

/// Holds each rising edge HIGH for at least `ms`.
pub fn pulse_stretch(line: &PinTrace, ms: u64) -> PinTrace {
    let mut spans: Vec<(u64, Option<u64>)> = Vec::new();
    let mut start = line.initial_level().is_high().then_some((0, false));
    for tr in line.transitions() {
        match (tr.level.is_high(), start) {
            (true, None) => start = Some((tr.at.0, true)),
            (false, Some((s, edge))) => {
                let end = if edge { tr.at.0.max(s + ms) } else { tr.at.0 };
                spans.push((s, Some(end)));
                start = None;
            }
            _ => {}
        }
    }
    if let Some((s, _)) = start {
        spans.push((s, None));
    }
    let mut out = PinTrace::new(format!("pulse_stretch:{}", line.line_id()), line.initial_level());
    let mut merged: Vec<(u64, Option<u64>)> = Vec::new();
    for (s, e) in spans {
        match merged.last_mut() {
            Some((_, last_end)) if last_end.is_none_or(|le| s <= le) => {
                *last_end = match (*last_end, e) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    _ => None,
                };
            }
            _ => merged.push((s, e)),
        }
    }
    for (s, e) in merged {
        out.record(SimTime(s), LogicLevel::High);
        if let Some(e) = e {
            out.record(SimTime(e), LogicLevel::Low);
        }
    }
    out
}

/// Set/reset latch on rising edges; reset wins a tie. Starts LOW.
pub fn sr_latch(set: &PinTrace, reset: &PinTrace) -> PinTrace {
    let mut edges: Vec<(SimTime, bool)> = set
        .rising_edges()
        .map(|t| (t, false))
        .chain(reset.rising_edges().map(|t| (t, true)))
        .collect();
    // Reset sorts after set at the same tick so it has the last word.
    edges.sort();
    let mut out = PinTrace::new(
        format!("sr_latch:{}:{}", set.line_id(), reset.line_id()),
        LogicLevel::Low,
    );
    for (t, is_reset) in edges {
        out.record(t, LogicLevel::from_bool(!is_reset));
    }
    out
}

pub fn invert(line: &PinTrace) -> PinTrace {
    PinTrace::from_levels(
        format!("invert:{}", line.line_id()),
        line.initial_level().inverted(),
        line.transitions()
            .iter()
            .map(|tr| (tr.at.0, tr.level.inverted())),
    )
}

/// Line ids of a gaze-gated voice composite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GazeVoiceLines {
    pub gaze: String,
    pub voice: String,
    pub light: String,
    pub composites: Vec<Composite>,
}

/// The LIGHT_ON network: a voice "on" edge sets the latch and an "off"
/// edge resets it, each only while gaze was seen within `window_ms`.
/// Intermediate lines are named `<light>.on`, `<light>.off_edge` and
/// `<light>.off`.
pub fn gaze_voice_composites(gaze: &str, voice: &str, window_ms: u64, light: &str) -> Vec<Composite> {
    let off_edge = format!("{light}.off_edge");
    let on = format!("{light}.on");
    let off = format!("{light}.off");
    vec![
        Composite::new(
            &off_edge,
            Combinator::Invert {
                input: voice.to_string(),
            },
        ),
        Composite::new(
            &on,
            Combinator::GatedEvent {
                event: voice.to_string(),
                gate: gaze.to_string(),
                window_ms,
            },
        ),
        Composite::new(
            &off,
            Combinator::GatedEvent {
                event: off_edge,
                gate: gaze.to_string(),
                window_ms,
            },
        ),
        Composite::new(light, Combinator::SrLatch { set: on, reset: off }),
    ]
}

fn wired_pin(bus: &Bus, handle: DeviceHandle, pin: &str) -> Option<String> {
    bus.wiring(handle)?.get(pin).cloned()
}

/// Installs the gaze-gated voice network for two powered devices and
/// returns the line ids involved.
pub fn gaze_voice_demo(
    bus: &mut Bus,
    gaze: DeviceHandle,
    voice: DeviceHandle,
    window_ms: u64,
    light: &str,
) -> Result<GazeVoiceLines, ComposeError> {
    let gaze_line = device_ref(bus, gaze)
        .filter(|d| d.kind() == SensorKind::Gaze)
        .and_then(|_| wired_pin(bus, gaze, DETECT_PIN))
        .ok_or_else(|| ComposeError::NotGaze(format!("{gaze:?}")))?;
    let voice_line = device_ref(bus, voice)
        .filter(|d| d.kind() == SensorKind::Voice && d.interface().serial.is_none())
        .and_then(|_| wired_pin(bus, voice, STATE_PIN))
        .ok_or_else(|| ComposeError::NotVoicePin(format!("{voice:?}")))?;
    let composites = gaze_voice_composites(&gaze_line, &voice_line, window_ms, light);
    install(bus, &composites)?;
    Ok(GazeVoiceLines {
        gaze: gaze_line,
        voice: voice_line,
        light: light.to_string(),
        composites,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use LogicLevel::{High, Low};

    fn t(levels: &[(u64, LogicLevel)]) -> PinTrace {
        PinTrace::from_levels("x", Low, levels.iter().copied())
    }

    #[test]
    fn gate_window_example() {
        let voice = t(&[(900, High)]);
        let gaze = t(&[(700, High), (1000, Low)]);
        let out = gated_event(&voice, &gaze, 500);
        assert_eq!(out.level_at(SimTime(900)), High);
        assert_eq!(out.level_at(SimTime(901)), Low);
        assert!(gated_event(&voice, &t(&[]), 500).transitions().is_empty());
    }

    #[test]
    fn window_boundaries_are_inclusive() {
        let voice = t(&[(900, High)]);
        assert_eq!(gated_event(&voice, &t(&[(900, High)]), 0).level_at(SimTime(900)), High);
        let early = t(&[(300, High), (401, Low)]);
        assert_eq!(gated_event(&voice, &early, 500).level_at(SimTime(900)), High);
        assert_eq!(gated_event(&voice, &early, 499).level_at(SimTime(900)), Low);
    }

    #[test]
    fn latch_reset_wins() {
        let set = t(&[(10, High), (11, Low)]);
        let reset = t(&[(10, High), (11, Low)]);
        assert!(sr_latch(&set, &reset).transitions().is_empty());
        let later = t(&[(20, High)]);
        let out = sr_latch(&set, &later);
        assert_eq!(out.level_at(SimTime(15)), High);
        assert_eq!(out.level_at(SimTime(20)), Low);
    }

    #[test]
    fn debounce_passes_stable_changes() {
        let out = debounce(&t(&[(100, High), (300, Low)]), 50);
        assert_eq!(
            out.transitions().iter().map(|tr| tr.at.0).collect::<Vec<_>>(),
            vec![150, 350]
        );
        assert_eq!(debounce(&t(&[(100, High), (150, Low)]), 50).transitions().len(), 0);
    }

    #[test]
    fn stretch_keeps_long_pulses() {
        let out = pulse_stretch(&t(&[(0, High), (500, Low)]), 100);
        assert_eq!(out.level_at(SimTime(499)), High);
        assert_eq!(out.level_at(SimTime(500)), Low);
    }

    #[test]
    fn composite_serde_shape() {
        let c: Composite = serde_json::from_str(
            r#"{"output":"L","op":"gated_event","event":"V","gate":"G"}"#,
        )
        .unwrap();
        assert_eq!(
            c.combinator,
            Combinator::GatedEvent {
                event: "V".into(),
                gate: "G".into(),
                window_ms: 500
            }
        );
    }
}
