//! Accelerometer streams and the tap detection core.
//!
//! Taps are damped three-sample transients (30 ms at 100 Hz) with a 3 g
//! peak on a seeded axis. Detection is first-difference high-pass, vector
//! magnitude, upward threshold crossing and a refractory window.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::StimulusError;
use crate::seed;

pub const IMU_SAMPLE_RATE_HZ: u32 = 100;
pub const IMU_SAMPLE_PERIOD_MS: u64 = 10;
pub const TAP_PEAK_G: f64 = 3.0;
/// Per-sample multiplier of the transient: `+1, −½, +¼` of the peak.
pub const TAP_RING: [f64; 3] = [1.0, -0.5, 0.25];
pub const MAX_ABS_G: f64 = 16.0;
pub const DEFAULT_TAP_THRESHOLD_G: f64 = 1.0;
pub const DEFAULT_REFRACTORY_MS: u64 = 100;

/// Accelerometer samples in g, one every [`IMU_SAMPLE_PERIOD_MS`].
#[derive(Debug, Clone, PartialEq)]
pub struct ImuWindow {
    samples: Vec<[f64; 3]>,
}

impl ImuWindow {
    pub fn new(samples: Vec<[f64; 3]>) -> Result<Self, StimulusError> {
        if samples.is_empty() {
            return Err(StimulusError::InvalidImu("window is empty".into()));
        }
        if samples
            .iter()
            .flatten()
            .any(|v| !v.is_finite() || v.abs() > MAX_ABS_G)
        {
            return Err(StimulusError::InvalidImu(
                "axis values must be finite and within ±16 g".into(),
            ));
        }
        Ok(ImuWindow { samples })
    }

    pub fn sample_rate_hz(&self) -> u32 {
        IMU_SAMPLE_RATE_HZ
    }

    pub fn samples(&self) -> &[[f64; 3]] {
        &self.samples
    }

    pub fn duration_ms(&self) -> u64 {
        self.samples.len() as u64 * IMU_SAMPLE_PERIOD_MS
    }
}

/// Generates `duration_ms` of resting accelerometer data (1 g on z plus
/// Gaussian noise) with a 3 g tap transient at each of `tap_times`.
pub fn synth_imu(
    tap_times: &[u64],
    duration_ms: u64,
    noise_sigma: f64,
    seed: u64,
) -> Result<ImuWindow, StimulusError> {
    synth_imu_with_peak(tap_times, duration_ms, noise_sigma, TAP_PEAK_G, seed)
}

/// [`synth_imu`] with a custom tap peak, for firmness sweeps.
pub fn synth_imu_with_peak(
    tap_times: &[u64],
    duration_ms: u64,
    noise_sigma: f64,
    peak_g: f64,
    seed: u64,
) -> Result<ImuWindow, StimulusError> {
    if duration_ms < IMU_SAMPLE_PERIOD_MS {
        return Err(StimulusError::InvalidImu("duration shorter than one sample".into()));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(StimulusError::InvalidImu("noise_sigma must be ≥ 0".into()));
    }
    if let Some(&t) = tap_times.iter().find(|&&t| t >= duration_ms) {
        return Err(StimulusError::InvalidImu(format!(
            "tap at {t} ms is outside the {duration_ms} ms window"
        )));
    }
    let n = (duration_ms / IMU_SAMPLE_PERIOD_MS) as usize;
    let mut samples = vec![[0.0, 0.0, 1.0]; n];
    if noise_sigma > 0.0 {
        let normal = Normal::new(0.0, noise_sigma).expect("sigma validated");
        let mut rng = seed::rng(seed::derive(seed, &[0]));
        for s in samples.iter_mut() {
            for v in s.iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
    }
    let mut tap_rng = seed::rng(seed::derive(seed, &[1]));
    for &t in tap_times {
        let axis = tap_rng.random_range(0..3usize);
        let sign = if tap_rng.random::<bool>() { 1.0 } else { -1.0 };
        let first = t.div_ceil(IMU_SAMPLE_PERIOD_MS) as usize;
        for (k, ring) in TAP_RING.iter().enumerate() {
            if let Some(s) = samples.get_mut(first + k) {
                s[axis] += sign * peak_g * ring;
            }
        }
    }
    for v in samples.iter_mut().flatten() {
        *v = v.clamp(-MAX_ABS_G, MAX_ABS_G);
    }
    ImuWindow::new(samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TapParams {
    pub threshold_g: f64,
    pub refractory_ms: u64,
}

impl Default for TapParams {
    fn default() -> Self {
        TapParams {
            threshold_g: DEFAULT_TAP_THRESHOLD_G,
            refractory_ms: DEFAULT_REFRACTORY_MS,
        }
    }
}

/// Streaming form of [`detect_tap`]; feed samples in time order.
#[derive(Debug, Clone)]
pub struct TapDetector {
    params: TapParams,
    prev_sample: Option<[f64; 3]>,
    prev_above: bool,
    last_detection: Option<u64>,
}

impl TapDetector {
    pub fn new(params: TapParams) -> Self {
        TapDetector {
            params,
            prev_sample: None,
            prev_above: false,
            last_detection: None,
        }
    }

    /// High-pass magnitude of `sample` against the previous one.
    fn magnitude(prev: &[f64; 3], sample: &[f64; 3]) -> f64 {
        prev.iter()
            .zip(sample)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    /// Returns `true` if a tap is detected at `t_ms`.
    pub fn push(&mut self, t_ms: u64, sample: [f64; 3]) -> bool {
        let Some(prev) = self.prev_sample.replace(sample) else {
            return false;
        };
        let above = Self::magnitude(&prev, &sample) >= self.params.threshold_g;
        let crossing = above && !self.prev_above;
        self.prev_above = above;
        if !crossing {
            return false;
        }
        if self
            .last_detection
            .is_some_and(|last| t_ms < last + self.params.refractory_ms)
        {
            return false;
        }
        self.last_detection = Some(t_ms);
        true
    }
}

/// Tap times in ms from the start of the window.
pub fn detect_tap(window: &ImuWindow, params: &TapParams) -> Vec<u64> {
    let mut det = TapDetector::new(*params);
    window
        .samples()
        .iter()
        .enumerate()
        .filter_map(|(i, s)| {
            let t = i as u64 * IMU_SAMPLE_PERIOD_MS;
            det.push(t, *s).then_some(t)
        })
        .collect()
}
