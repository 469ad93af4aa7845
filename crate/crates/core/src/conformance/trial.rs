//! Single-trial drivers, one per stimulus family.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AxisKind, ConformanceError};
use crate::devkit::{feed, power_on, SensorDevice, SensorKind};
use crate::seed;
use crate::stimuli::{
    render_display, render_scene, synth_audio, synth_imu, synth_imu_with_peak, DisplayLayout,
    DisplayScene, Frame, ImuWindow, Reading, Rotation, SceneParams, ScriptEntry, Stimulus, Subject,
    DEFAULT_AUDIO_NOISE, DISPLAY_FRAME_SIZE, HOP_MS, IMU_SAMPLE_PERIOD_MS, WORD_FRAMES,
};
use crate::sensors::decode_reading;
use crate::vbus::{AckStatus, Bus, DeviceHandle, I2cRequest, SimTime};

/// Stimulus onset of tap and voice positives.
const EVENT_ONSET_MS: u64 = 500;
/// Peak of a sub-threshold bump, in g.
const BUMP_PEAK_G: f64 = 0.5;
const DEFAULT_IMU_NOISE: f64 = 0.02;
const DEFAULT_SCENE_NOISE: f64 = 4.0;
const HOST_POLL_MS: u64 = 100;
const BLANK_LEVEL: u8 = 20;

/// Conditions of one grid cell. Axes the protocol does not vary keep
/// their nominal values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub distance_m: f64,
    pub lux: f64,
    pub noise_sigma: f64,
    pub distractor_rate: f64,
}

impl Condition {
    pub fn nominal(kind: SensorKind) -> Self {
        let noise_sigma = match kind {
            SensorKind::Person | SensorKind::Gaze => DEFAULT_SCENE_NOISE,
            SensorKind::Tap => DEFAULT_IMU_NOISE,
            SensorKind::Voice => DEFAULT_AUDIO_NOISE,
            SensorKind::TextReader => 0.0,
        };
        Condition {
            distance_m: 1.0,
            lux: 500.0,
            noise_sigma,
            distractor_rate: 0.0,
        }
    }

    pub fn set(&mut self, axis: AxisKind, v: f64) {
        match axis {
            AxisKind::DistanceM => self.distance_m = v,
            AxisKind::Lux => self.lux = v,
            AxisKind::NoiseSigma => self.noise_sigma = v,
            AxisKind::DistractorRate => self.distractor_rate = v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub positive: bool,
    /// Reported within budget (positives) or at all (negatives).
    pub detected: bool,
    /// From stimulus onset to the report, for detected positives.
    pub latency_ms: Option<u64>,
}

pub(crate) fn run(
    device: SensorDevice,
    cond: &Condition,
    positive: bool,
    seed: u64,
    budget: u64,
    window: u64,
) -> Result<TrialOutcome, ConformanceError> {
    let kind = device.kind();
    let serial = device.interface().serial.as_ref().map(|s| s.address);
    let signal = device.interface().signal_pins().next().map(|p| p.name.clone());
    let wiring: BTreeMap<String, String> = device
        .interface()
        .pins
        .iter()
        .map(|p| (p.name.clone(), p.name.clone()))
        .collect();
    let mut bus = Bus::new();
    let h = power_on(device, &mut bus, &wiring)?;
    let probe = match (serial, signal) {
        (Some(address), _) => Probe::Serial(address),
        (None, Some(line)) => Probe::Pin(line),
        (None, None) => unreachable!("every device declares an output"),
    };
    let t = Trial {
        bus,
        h,
        probe,
        positive,
        budget,
        window,
    };
    match kind {
        SensorKind::Person | SensorKind::Gaze => t.vision(kind, cond, seed),
        SensorKind::Tap => t.tap(cond, seed),
        SensorKind::Voice => t.voice(cond, seed),
        SensorKind::TextReader => t.text(cond, seed),
    }
}

enum Probe {
    Pin(String),
    Serial(u8),
}

struct Trial {
    bus: Bus,
    h: DeviceHandle,
    probe: Probe,
    positive: bool,
    budget: u64,
    window: u64,
}

impl Trial {
    fn horizon(&self, onset: u64) -> u64 {
        if self.positive {
            onset + self.budget + 1
        } else {
            self.window
        }
    }

    fn first_edge(&self, from: u64) -> Option<u64> {
        let Probe::Pin(line) = &self.probe else {
            return None;
        };
        self.bus
            .trace(line)
            .and_then(|tr| tr.rising_edges().map(|t| t.0).find(|&t| t >= from))
    }

    fn outcome(&self, onset: u64, edge: Option<u64>) -> TrialOutcome {
        let edge = edge.filter(|&e| !self.positive || e <= onset + self.budget);
        TrialOutcome {
            positive: self.positive,
            detected: edge.is_some(),
            latency_ms: edge.filter(|_| self.positive).map(|e| e - onset),
        }
    }

    /// A static scene re-captured every frame period with fresh pixel noise.
    fn vision(
        mut self,
        kind: SensorKind,
        cond: &Condition,
        seed: u64,
    ) -> Result<TrialOutcome, ConformanceError> {
        let gaze = kind == SensorKind::Gaze;
        let scene = SceneParams {
            person_present: self.positive || gaze,
            facing_camera: gaze && self.positive,
            distance_m: cond.distance_m,
            illuminance_lux: cond.lux,
            noise_sigma: cond.noise_sigma,
            seed,
            subject: Subject::Person,
            x_position: None,
            noise_seed: None,
        };
        let period = crate::devkit::device_ref(&self.bus, self.h)
            .and_then(|d| d.timing().frame_period_ms)
            .unwrap_or(100);
        let horizon = self.horizon(0);
        let mut t = 0;
        while t < horizon {
            let frame = render_scene(&SceneParams {
                noise_seed: Some(seed::derive(seed, &[t])),
                ..scene.clone()
            })?;
            feed(&mut self.bus, self.h, Stimulus::Frame(frame), SimTime(t))?;
            let dt = period.min(horizon - t);
            self.bus.advance(dt)?;
            t += dt;
            if let Some(edge) = self.first_edge(0) {
                return Ok(self.outcome(0, Some(edge)));
            }
        }
        Ok(self.outcome(0, None))
    }

    fn tap(mut self, cond: &Condition, seed: u64) -> Result<TrialOutcome, ConformanceError> {
        let horizon = self.horizon(EVENT_ONSET_MS);
        let duration = horizon.div_ceil(IMU_SAMPLE_PERIOD_MS) * IMU_SAMPLE_PERIOD_MS;
        let taps: &[u64] = if self.positive { &[EVENT_ONSET_MS] } else { &[] };
        let base = synth_imu(taps, duration, cond.noise_sigma, seed)?;
        let bumps = distractor_times(cond.distractor_rate, duration, seed, None);
        let window = if bumps.is_empty() {
            base
        } else {
            let extra = synth_imu_with_peak(&bumps, duration, 0.0, BUMP_PEAK_G, seed::derive(seed, &[2]))?;
            let samples = base
                .samples()
                .iter()
                .zip(extra.samples())
                .map(|(a, b)| [a[0] + b[0], a[1] + b[1], a[2] + b[2] - 1.0])
                .collect();
            ImuWindow::new(samples)?
        };
        feed(&mut self.bus, self.h, Stimulus::Imu(window), SimTime::ZERO)?;
        self.bus.advance(horizon)?;
        let onset = if self.positive { EVENT_ONSET_MS } else { 0 };
        Ok(self.outcome(onset, self.first_edge(onset)))
    }

    fn voice(mut self, cond: &Condition, seed: u64) -> Result<TrialOutcome, ConformanceError> {
        let word_ms = WORD_FRAMES as u64 * HOP_MS;
        let horizon = self.horizon(EVENT_ONSET_MS + word_ms);
        let duration = horizon.div_ceil(HOP_MS) * HOP_MS;
        let keep_clear = self.positive.then_some(EVENT_ONSET_MS);
        let mut script: Vec<ScriptEntry> =
            distractor_times(cond.distractor_rate, duration.saturating_sub(word_ms), seed, keep_clear)
                .into_iter()
                .map(|t| ScriptEntry::new("often", t))
                .collect();
        if self.positive {
            script.push(ScriptEntry::new("on", EVENT_ONSET_MS));
        }
        let vocabulary = ["on".to_string(), "off".to_string()];
        let audio = synth_audio(&script, &vocabulary, duration, cond.noise_sigma, seed)?;
        feed(&mut self.bus, self.h, Stimulus::Audio(audio), SimTime::ZERO)?;
        self.bus.advance(horizon)?;
        let onset = if self.positive { EVENT_ONSET_MS } else { 0 };
        Ok(self.outcome(onset, self.first_edge(onset)))
    }

    /// The host polls the registers; only the correct reading counts as a
    /// detection for positives, and any reading at all for negatives.
    fn text(mut self, cond: &Condition, seed: u64) -> Result<TrialOutcome, ConformanceError> {
        let Probe::Serial(address) = self.probe else {
            unreachable!("text readers are serial devices");
        };
        let mut rng = seed::rng(seed);
        let (frame, expected) = if self.positive {
            let reading = random_reading(&mut rng);
            let layout = DisplayLayout {
                rotation: Rotation::ALL[rng.random_range(0..4)],
                ..DisplayLayout::default()
            };
            let scene = DisplayScene {
                illuminance_lux: cond.lux,
                noise_sigma: cond.noise_sigma,
                seed: seed::derive(seed, &[1]),
            };
            (render_display(&reading, &layout, &scene)?, Some(reading))
        } else {
            let blank = Frame::filled(DISPLAY_FRAME_SIZE, DISPLAY_FRAME_SIZE, BLANK_LEVEL)?;
            (blank, None)
        };
        feed(&mut self.bus, self.h, Stimulus::Frame(frame), SimTime::ZERO)?;
        let horizon = self.horizon(0);
        let mut t = 0;
        while t < horizon {
            let dt = HOST_POLL_MS.min(horizon - t);
            self.bus.advance(dt)?;
            t += dt;
            let tx = self.bus.i2c_transfer(address, I2cRequest::Read(8));
            if tx.status != AckStatus::Ack {
                continue;
            }
            let bytes: [u8; 8] = tx.payload[..8].try_into().expect("8-byte read");
            let seen = decode_reading(&bytes).ok().flatten();
            let hit = match (&expected, &seen) {
                (Some(want), Some(got)) => want == got,
                (None, Some(_)) => true,
                _ => false,
            };
            if hit {
                return Ok(self.outcome(0, Some(t)));
            }
        }
        Ok(self.outcome(0, None))
    }
}

/// Evenly spread look-alike events at `rate` per second with seeded
/// jitter, skipping anything within 300 ms of `keep_clear`.
fn distractor_times(rate: f64, duration: u64, seed: u64, keep_clear: Option<u64>) -> Vec<u64> {
    let count = (rate * duration as f64 / 1000.0).round() as u64;
    if count == 0 {
        return Vec::new();
    }
    let mut rng = seed::rng(seed::derive(seed, &[3]));
    let slot = duration / count;
    (0..count)
        .map(|i| i * slot + rng.random_range(0..slot.max(1)))
        .filter(|&t| t < duration)
        .filter(|&t| keep_clear.is_none_or(|c| t.abs_diff(c) >= 300))
        .collect()
}

/// Canonical reading with 1 to 4 whole and 0 to 3 fractional digits.
fn random_reading(rng: &mut impl Rng) -> Reading {
    let whole_len = rng.random_range(1..=4);
    let mut whole: String = (0..whole_len)
        .map(|_| char::from(b'0' + rng.random_range(0..10u8)))
        .collect();
    if whole_len > 1 && whole.starts_with('0') {
        whole.replace_range(0..1, "1");
    }
    let frac_len = rng.random_range(0..=3);
    let mut frac: String = (0..frac_len)
        .map(|_| char::from(b'0' + rng.random_range(0..10u8)))
        .collect();
    if frac.ends_with('0') {
        frac.pop();
        frac.push('5');
    }
    Reading::new(rng.random_bool(0.3), whole, frac).expect("digits only")
}
