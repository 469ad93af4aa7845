//! Conformance testing: labelled trials over a two-axis grid of conditions,
//! reported as per-cell true and false positive rates.
//!
//! Each trial gets a fresh bus and a fresh device from the caller's
//! factory. A positive trial counts when the device reports within the
//! latency budget; a negative trial counts as a false positive if the
//! device reports at any point of its window. Trial seeds depend only on
//! the protocol seed and the `(cell, trial)` index, so execution order
//! cannot change the report.

mod trial;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::devkit::{DevkitError, SensorDevice, SensorKind};
use crate::seed;
use crate::stimuli::{StimulusError, MAX_DISTANCE_M, MAX_LUX, MIN_DISTANCE_M, MIN_LUX};
use crate::vbus::BusError;

pub use trial::{Condition, TrialOutcome};

pub const DEFAULT_TRIALS_PER_CELL: usize = 200;
pub const DEFAULT_POSITIVE_FRACTION: f64 = 0.5;
pub const DEFAULT_LATENCY_BUDGET_MS: u64 = 1000;
pub const DEFAULT_NEGATIVE_WINDOW_MS: u64 = 5000;
pub const DEFAULT_TPR_MIN: f64 = 0.9;
pub const DEFAULT_FPR_MAX: f64 = 0.05;
pub const MIN_TRIALS_PER_CELL: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConformanceError {
    #[error("INVALID_PROTOCOL: {0}")]
    InvalidProtocol(String),
    #[error("FACTORY_KIND_MISMATCH: protocol is for {expected}, factory built {actual}")]
    FactoryKindMismatch {
        expected: SensorKind,
        actual: SensorKind,
    },
    #[error("SHAPE_MISMATCH: {0}")]
    ShapeMismatch(String),
    #[error("KIND_MISMATCH: report is for {report}, expected {expected}")]
    KindMismatch {
        expected: SensorKind,
        report: SensorKind,
    },
    #[error(transparent)]
    Devkit(#[from] DevkitError),
    #[error(transparent)]
    Stimulus(#[from] StimulusError),
    #[error(transparent)]
    Bus(#[from] BusError),
}

/// A condition that can vary along a grid axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisKind {
    DistanceM,
    Lux,
    NoiseSigma,
    /// Look-alike events per second: sub-threshold bumps for taps, the
    /// homonym "often" for voice.
    DistractorRate,
}

impl AxisKind {
    pub fn name(self) -> &'static str {
        match self {
            AxisKind::DistanceM => "distance_m",
            AxisKind::Lux => "lux",
            AxisKind::NoiseSigma => "noise_sigma",
            AxisKind::DistractorRate => "distractor_rate",
        }
    }

    /// Whether larger values make detection harder.
    pub fn harder_when_higher(self) -> bool {
        !matches!(self, AxisKind::Lux)
    }

    /// The envelope key: `max_distance_m`, `min_lux` and so on.
    pub fn bound_name(self) -> String {
        let side = if self.harder_when_higher() { "max" } else { "min" };
        format!("{side}_{}", self.name())
    }

    /// Axes each kind can be tested along.
    pub fn admissible(kind: SensorKind) -> &'static [AxisKind] {
        match kind {
            SensorKind::Person | SensorKind::Gaze => {
                &[AxisKind::DistanceM, AxisKind::Lux, AxisKind::NoiseSigma]
            }
            SensorKind::Tap | SensorKind::Voice => &[AxisKind::NoiseSigma, AxisKind::DistractorRate],
            SensorKind::TextReader => &[AxisKind::Lux, AxisKind::NoiseSigma],
        }
    }

    fn check_level(self, v: f64) -> Result<(), String> {
        let ok = v.is_finite()
            && match self {
                AxisKind::DistanceM => (MIN_DISTANCE_M..=MAX_DISTANCE_M).contains(&v),
                AxisKind::Lux => (MIN_LUX..=MAX_LUX).contains(&v),
                AxisKind::NoiseSigma | AxisKind::DistractorRate => v >= 0.0,
            };
        if ok {
            Ok(())
        } else {
            Err(format!("{} level {v} is out of range", self.name()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub kind: AxisKind,
    pub levels: Vec<f64>,
}

impl Axis {
    pub fn new(kind: AxisKind, levels: impl Into<Vec<f64>>) -> Self {
        Axis {
            kind,
            levels: levels.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestProtocol {
    pub sensor_kind: SensorKind,
    /// Exactly two axes; cells are ordered first-axis-major.
    pub axes: Vec<Axis>,
    #[serde(default = "default_trials")]
    pub trials_per_cell: usize,
    #[serde(default = "default_fraction")]
    pub positive_fraction: f64,
    #[serde(default = "default_budget")]
    pub latency_budget_ms: u64,
    #[serde(default = "default_window")]
    pub negative_window_ms: u64,
    pub seed: u64,
}

fn default_trials() -> usize {
    DEFAULT_TRIALS_PER_CELL
}
fn default_fraction() -> f64 {
    DEFAULT_POSITIVE_FRACTION
}
fn default_budget() -> u64 {
    DEFAULT_LATENCY_BUDGET_MS
}
fn default_window() -> u64 {
    DEFAULT_NEGATIVE_WINDOW_MS
}

impl TestProtocol {
    /// Defaults for everything but the grid.
    pub fn new(sensor_kind: SensorKind, first: Axis, second: Axis, seed: u64) -> Self {
        TestProtocol {
            sensor_kind,
            axes: vec![first, second],
            trials_per_cell: DEFAULT_TRIALS_PER_CELL,
            positive_fraction: DEFAULT_POSITIVE_FRACTION,
            latency_budget_ms: DEFAULT_LATENCY_BUDGET_MS,
            negative_window_ms: DEFAULT_NEGATIVE_WINDOW_MS,
            seed,
        }
    }

    /// Person detector over {1, 2, 3, 5} m × {50, 200, 800} lux.
    pub fn person_grid(seed: u64) -> Self {
        TestProtocol::new(
            SensorKind::Person,
            Axis::new(AxisKind::DistanceM, [1.0, 2.0, 3.0, 5.0]),
            Axis::new(AxisKind::Lux, [50.0, 200.0, 800.0]),
            seed,
        )
    }

    pub fn validate(&self) -> Result<(), ConformanceError> {
        let bad = |m: String| Err(ConformanceError::InvalidProtocol(m));
        if self.axes.len() != 2 {
            return bad(format!("expected 2 axes, got {}", self.axes.len()));
        }
        if self.axes[0].kind == self.axes[1].kind {
            return bad("both axes vary the same condition".into());
        }
        let admissible = AxisKind::admissible(self.sensor_kind);
        for axis in &self.axes {
            if !admissible.contains(&axis.kind) {
                return bad(format!(
                    "{} is not a test axis for {} sensors",
                    axis.kind.name(),
                    self.sensor_kind
                ));
            }
            if axis.levels.is_empty() {
                return bad(format!("{} has no levels", axis.kind.name()));
            }
            for &v in &axis.levels {
                axis.kind.check_level(v).or_else(bad)?;
            }
        }
        if self.trials_per_cell < MIN_TRIALS_PER_CELL {
            return bad(format!("trials_per_cell must be ≥ {MIN_TRIALS_PER_CELL}"));
        }
        if !(self.positive_fraction > 0.0 && self.positive_fraction < 1.0) {
            return bad("positive_fraction must lie strictly between 0 and 1".into());
        }
        if self.latency_budget_ms == 0 || self.negative_window_ms == 0 {
            return bad("latency budget and negative window must be positive".into());
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.axes.iter().map(|a| a.levels.len()).product()
    }

    /// Grid levels of cell `index`, in axis order.
    pub fn cell_levels(&self, index: usize) -> [f64; 2] {
        let n2 = self.axes[1].levels.len();
        [self.axes[0].levels[index / n2], self.axes[1].levels[index % n2]]
    }

    /// Trials `0..positives()` of every cell are positive.
    pub fn positives(&self) -> usize {
        let n = (self.trials_per_cell as f64 * self.positive_fraction).round() as usize;
        n.clamp(1, self.trials_per_cell - 1)
    }

    pub fn trial_seed(&self, cell: usize, trial: usize) -> u64 {
        seed::derive(self.seed, &[cell as u64, trial as u64])
    }

    pub fn condition(&self, cell: usize) -> Condition {
        let mut c = Condition::nominal(self.sensor_kind);
        for (axis, v) in self.axes.iter().zip(self.cell_levels(cell)) {
            c.set(axis.kind, v);
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    /// Axis levels in protocol axis order.
    pub levels: Vec<f64>,
    pub trials: usize,
    pub positives: usize,
    pub negatives: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    pub tpr: f64,
    pub fpr: f64,
    /// Over true positives; absent when there are none.
    pub latency_mean_ms: Option<f64>,
    pub latency_p95_ms: Option<u64>,
}

/// The region of the grid where a device meets the thresholds: every cell
/// no harder than each bound along both axes qualifies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingEnvelope {
    pub tpr_min: f64,
    pub fpr_max: f64,
    /// Keyed by [`AxisKind::bound_name`].
    pub bounds: BTreeMap<String, f64>,
}

impl OperatingEnvelope {
    pub fn bound(&self, axis: AxisKind) -> Option<f64> {
        self.bounds.get(&axis.bound_name()).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformanceReport {
    pub tool_version: String,
    pub protocol: TestProtocol,
    pub cells: Vec<CellResult>,
    /// At the default thresholds.
    pub envelope: Option<OperatingEnvelope>,
}

impl ConformanceReport {
    pub fn cell(&self, first: usize, second: usize) -> &CellResult {
        &self.cells[first * self.protocol.axes[1].levels.len() + second]
    }

    pub fn to_json(&self) -> String {
        crate::interchange::to_canonical(self)
    }

    pub fn from_json(text: &str) -> Result<Self, crate::interchange::ParseError> {
        crate::interchange::from_str(text)
    }
}

/// Runs one trial with a fresh device.
pub fn run_trial<F>(
    factory: &F,
    protocol: &TestProtocol,
    cell: usize,
    trial_index: usize,
) -> Result<TrialOutcome, ConformanceError>
where
    F: Fn() -> Result<SensorDevice, DevkitError>,
{
    let device = factory()?;
    if device.kind() != protocol.sensor_kind {
        return Err(ConformanceError::FactoryKindMismatch {
            expected: protocol.sensor_kind,
            actual: device.kind(),
        });
    }
    let positive = trial_index < protocol.positives();
    trial::run(
        device,
        &protocol.condition(cell),
        positive,
        protocol.trial_seed(cell, trial_index),
        protocol.latency_budget_ms,
        protocol.negative_window_ms,
    )
}

/// Runs the full grid. Trials may execute in parallel; the report is
/// assembled in cell-then-trial order.
pub fn run<F>(factory: F, protocol: &TestProtocol) -> Result<ConformanceReport, ConformanceError>
where
    F: Fn() -> Result<SensorDevice, DevkitError> + Sync,
{
    protocol.validate()?;
    let n = protocol.trials_per_cell;
    let outcomes: Vec<TrialOutcome> = (0..protocol.cell_count() * n)
        .into_par_iter()
        .map(|i| run_trial(&factory, protocol, i / n, i % n))
        .collect::<Result<_, _>>()?;
    assemble(protocol, &outcomes)
}

/// Builds a report from outcomes listed in cell-then-trial order.
pub fn assemble(
    protocol: &TestProtocol,
    outcomes: &[TrialOutcome],
) -> Result<ConformanceReport, ConformanceError> {
    protocol.validate()?;
    let n = protocol.trials_per_cell;
    if outcomes.len() != protocol.cell_count() * n {
        return Err(ConformanceError::ShapeMismatch(format!(
            "{} outcomes for {} cells of {n} trials",
            outcomes.len(),
            protocol.cell_count()
        )));
    }
    let cells = outcomes
        .chunks(n)
        .enumerate()
        .map(|(i, chunk)| summarize(protocol.cell_levels(i).to_vec(), chunk))
        .collect();
    let mut report = ConformanceReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        protocol: protocol.clone(),
        cells,
        envelope: None,
    };
    report.envelope = envelope(&report, DEFAULT_TPR_MIN, DEFAULT_FPR_MAX);
    Ok(report)
}

fn summarize(levels: Vec<f64>, trials: &[TrialOutcome]) -> CellResult {
    let positives = trials.iter().filter(|t| t.positive).count();
    let negatives = trials.len() - positives;
    let true_positives = trials.iter().filter(|t| t.positive && t.detected).count();
    let false_positives = trials.iter().filter(|t| !t.positive && t.detected).count();
    let mut latencies: Vec<u64> = trials
        .iter()
        .filter(|t| t.positive && t.detected)
        .filter_map(|t| t.latency_ms)
        .collect();
    latencies.sort_unstable();
    let latency_mean_ms = (!latencies.is_empty())
        .then(|| latencies.iter().sum::<u64>() as f64 / latencies.len() as f64);
    // Nearest-rank percentile.
    let latency_p95_ms = (!latencies.is_empty()).then(|| {
        let rank = (0.95 * latencies.len() as f64).ceil() as usize;
        latencies[rank.max(1) - 1]
    });
    CellResult {
        levels,
        trials: trials.len(),
        positives,
        negatives,
        true_positives,
        false_positives,
        tpr: rate(true_positives, positives),
        fpr: rate(false_positives, negatives),
        latency_mean_ms,
        latency_p95_ms,
    }
}

fn rate(hits: usize, of: usize) -> f64 {
    if of == 0 {
        0.0
    } else {
        hits as f64 / of as f64
    }
}

/// Largest easy-corner rectangle of qualifying cells. Ties in area go to
/// the rectangle reaching further along the first axis.
pub fn envelope(report: &ConformanceReport, tpr_min: f64, fpr_max: f64) -> Option<OperatingEnvelope> {
    let axes = &report.protocol.axes;
    // Level indices of each axis, easiest first.
    let order = |axis: &Axis| {
        let mut idx: Vec<usize> = (0..axis.levels.len()).collect();
        idx.sort_by(|&a, &b| {
            let (x, y) = (axis.levels[a], axis.levels[b]);
            if axis.kind.harder_when_higher() {
                x.total_cmp(&y)
            } else {
                y.total_cmp(&x)
            }
        });
        idx
    };
    let (o1, o2) = (order(&axes[0]), order(&axes[1]));
    let ok = |i: usize, j: usize| {
        let c = report.cell(o1[i], o2[j]);
        c.tpr >= tpr_min && c.fpr <= fpr_max
    };
    let mut best: Option<(usize, usize)> = None;
    for a in 1..=o1.len() {
        // Widest second-axis reach valid for every row up to `a`.
        let mut b = o2.len();
        for i in 0..a {
            let reach = (0..o2.len()).take_while(|&j| ok(i, j)).count();
            b = b.min(reach);
        }
        if b == 0 {
            break;
        }
        if best.is_none_or(|(ba, bb)| a * b >= ba * bb) {
            best = Some((a, b));
        }
    }
    let (a, b) = best?;
    let bounds = [
        (axes[0].kind, axes[0].levels[o1[a - 1]]),
        (axes[1].kind, axes[1].levels[o2[b - 1]]),
    ]
    .into_iter()
    .map(|(k, v)| (k.bound_name(), v))
    .collect();
    Some(OperatingEnvelope {
        tpr_min,
        fpr_max,
        bounds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDelta {
    pub levels: Vec<f64>,
    /// `b − a`.
    pub tpr_delta: f64,
    pub fpr_delta: f64,
    pub latency_mean_delta_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportComparison {
    pub cells: Vec<CellDelta>,
    /// Cells where `a` is no worse on both rates and better on one.
    pub a_dominates: usize,
    pub b_dominates: usize,
}

/// Cellwise differences of two reports over the same grid.
pub fn compare(
    a: &ConformanceReport,
    b: &ConformanceReport,
) -> Result<ReportComparison, ConformanceError> {
    let (pa, pb) = (&a.protocol, &b.protocol);
    if pa.sensor_kind != pb.sensor_kind || pa.axes != pb.axes || a.cells.len() != b.cells.len() {
        return Err(ConformanceError::ShapeMismatch(
            "reports cover different kinds or grids".into(),
        ));
    }
    let mut out = ReportComparison {
        cells: Vec::with_capacity(a.cells.len()),
        a_dominates: 0,
        b_dominates: 0,
    };
    for (ca, cb) in a.cells.iter().zip(&b.cells) {
        let tpr_delta = cb.tpr - ca.tpr;
        let fpr_delta = cb.fpr - ca.fpr;
        if tpr_delta >= 0.0 && fpr_delta <= 0.0 && (tpr_delta > 0.0 || fpr_delta < 0.0) {
            out.b_dominates += 1;
        }
        if tpr_delta <= 0.0 && fpr_delta >= 0.0 && (tpr_delta < 0.0 || fpr_delta > 0.0) {
            out.a_dominates += 1;
        }
        out.cells.push(CellDelta {
            levels: ca.levels.clone(),
            tpr_delta,
            fpr_delta,
            latency_mean_delta_ms: ca
                .latency_mean_ms
                .zip(cb.latency_mean_ms)
                .map(|(x, y)| y - x),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake(protocol: TestProtocol, qualifies: impl Fn(f64, f64) -> bool) -> ConformanceReport {
        let cells = (0..protocol.cell_count())
            .map(|i| {
                let l = protocol.cell_levels(i);
                let good = qualifies(l[0], l[1]);
                CellResult {
                    levels: l.to_vec(),
                    trials: 10,
                    positives: 5,
                    negatives: 5,
                    true_positives: if good { 5 } else { 2 },
                    false_positives: 0,
                    tpr: if good { 1.0 } else { 0.4 },
                    fpr: 0.0,
                    latency_mean_ms: None,
                    latency_p95_ms: None,
                }
            })
            .collect();
        ConformanceReport {
            tool_version: "test".into(),
            protocol,
            cells,
            envelope: None,
        }
    }

    #[test]
    fn envelope_corner() {
        let r = fake(TestProtocol::person_grid(0), |d, l| d <= 2.0 && l >= 200.0);
        let env = envelope(&r, 0.9, 0.05).unwrap();
        assert_eq!(env.bound(AxisKind::DistanceM), Some(2.0));
        assert_eq!(env.bound(AxisKind::Lux), Some(200.0));
        assert_eq!(env.bounds.len(), 2);
    }

    #[test]
    fn envelope_extremes() {
        let r = fake(TestProtocol::person_grid(0), |d, _| d <= 1.0);
        let all = envelope(&r, 0.0, 1.0).unwrap();
        assert_eq!(all.bound(AxisKind::DistanceM), Some(5.0));
        assert_eq!(all.bound(AxisKind::Lux), Some(50.0));
        assert!(envelope(&r, 1.01, 0.05).is_none());
    }

    #[test]
    fn protocol_validation() {
        let mut p = TestProtocol::person_grid(1);
        assert!(p.validate().is_ok());
        p.trials_per_cell = 5;
        assert!(p.validate().is_err());
        let mut p = TestProtocol::person_grid(1);
        p.sensor_kind = SensorKind::Tap;
        assert!(p.validate().is_err());
        let mut p = TestProtocol::person_grid(1);
        p.positive_fraction = 1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn compare_self_and_shape() {
        let r = fake(TestProtocol::person_grid(0), |d, _| d < 3.0);
        let c = compare(&r, &r).unwrap();
        assert!(c.cells.iter().all(|d| d.tpr_delta == 0.0 && d.fpr_delta == 0.0));
        assert_eq!((c.a_dominates, c.b_dominates), (0, 0));
        let mut other = TestProtocol::person_grid(0);
        other.axes[1].levels.pop();
        assert!(matches!(
            compare(&r, &fake(other, |_, _| true)),
            Err(ConformanceError::ShapeMismatch(_))
        ));
    }
}
