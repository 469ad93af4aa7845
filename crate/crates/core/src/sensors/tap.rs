//! Tap sensor: a fixed-width pulse per detected tap.

use super::payload::BlobPayload;
use super::queue::TimedQueue;
use super::vision_pin::pin_interface;
use crate::devkit::{Behavior, DeviceTiming, DevkitError, ParameterBlob, SensorDevice, SensorKind};
use crate::stimuli::{ImuWindow, Stimulus, TapDetector, TapParams, IMU_SAMPLE_PERIOD_MS};
use crate::vbus::{LogicLevel, PinPort, SimTime};

pub const TAP_PIN: &str = "TAP";
pub const DEFAULT_PULSE_MS: u64 = 200;
/// The tap sensor samples its input every millisecond.
pub const TAP_CADENCE_MS: u64 = 1;

struct TapPulse {
    params: TapParams,
    pulse_ms: u64,
    windows: TimedQueue<ImuWindow>,
    detector: TapDetector,
    next_sample: usize,
    high_until: Option<u64>,
}

impl TapPulse {
    /// Feeds every sample due by `now`; true if any of them was a tap.
    fn consume(&mut self, now: SimTime) -> bool {
        let mut tapped = false;
        while let Some((start, window)) = self.windows.front() {
            let t = start.ms() + self.next_sample as u64 * IMU_SAMPLE_PERIOD_MS;
            if t > now.ms() {
                break;
            }
            let sample = window.samples()[self.next_sample];
            tapped |= self.detector.push(t, sample);
            self.next_sample += 1;
            if self.next_sample == window.samples().len() {
                self.windows.pop_front();
                self.next_sample = 0;
                self.detector = TapDetector::new(self.params);
            }
        }
        tapped
    }
}

impl Behavior for TapPulse {
    fn cadence_ms(&self) -> u64 {
        TAP_CADENCE_MS
    }

    fn configure(&mut self, payload: &[u8]) -> Result<(), DevkitError> {
        self.params = TapParams::decode(payload)?;
        self.detector = TapDetector::new(self.params);
        Ok(())
    }

    fn feed(&mut self, stimulus: Stimulus, at: SimTime) {
        if let Stimulus::Imu(w) = stimulus {
            self.windows.push(at, w);
        }
    }

    fn step(&mut self, now: SimTime, port: &mut PinPort<'_>) {
        let tapped = self.consume(now);
        match self.high_until {
            // Taps during a pulse, including its last tick, are absorbed.
            Some(end) => {
                if now.ms() >= end {
                    self.high_until = None;
                    port.drive(TAP_PIN, LogicLevel::Low);
                }
            }
            None if tapped => {
                self.high_until = Some(now.ms() + self.pulse_ms);
                port.drive(TAP_PIN, LogicLevel::High);
            }
            None => {}
        }
    }

    fn timing(&self) -> DeviceTiming {
        DeviceTiming {
            cadence_ms: TAP_CADENCE_MS,
            pulse_ms: Some(self.pulse_ms),
            ..Default::default()
        }
    }
}

/// Pins VDD, GND, TAP; TAP goes HIGH for exactly `pulse_ms` per tap.
pub fn tap_sensor(pulse_ms: u64, params: &ParameterBlob) -> Result<SensorDevice, DevkitError> {
    if pulse_ms == 0 {
        return Err(DevkitError::InvalidConfig("pulse_ms must be ≥ 1".into()));
    }
    let defaults = TapParams::default();
    SensorDevice::new(
        SensorKind::Tap,
        pin_interface(TAP_PIN, "HIGH for a fixed pulse after each tap"),
        Box::new(TapPulse {
            params: defaults,
            pulse_ms,
            windows: TimedQueue::default(),
            detector: TapDetector::new(defaults),
            next_sample: 0,
            high_until: None,
        }),
        params.clone(),
    )
}
