//! Person and gaze detectors: one pin held HIGH while the condition holds.

use serde::{Deserialize, Serialize};

use super::payload::BlobPayload;
use super::queue::TimedQueue;
use crate::devkit::{
    Behavior, DeviceTiming, DevkitError, InterfaceDecl, ParameterBlob, PinDecl, PinRole,
    SensorDevice, SensorKind,
};
use crate::stimuli::{detect_gaze, detect_person, Frame, GazeParams, PersonParams, Stimulus};
use crate::vbus::{LogicLevel, PinPort, SimTime};

pub const DETECT_PIN: &str = "DETECT";

/// Frame rate and debounce of the DETECT pin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersonPinPolicy {
    pub frame_period_ms: u64,
    /// Consecutive positive frames needed to assert.
    pub rise_frames: u32,
    /// Consecutive negative frames needed to deassert.
    pub fall_frames: u32,
}

impl Default for PersonPinPolicy {
    fn default() -> Self {
        PersonPinPolicy {
            frame_period_ms: 100,
            rise_frames: 2,
            fall_frames: 2,
        }
    }
}

impl PersonPinPolicy {
    pub fn validate(&self) -> Result<(), DevkitError> {
        if self.frame_period_ms == 0 || self.rise_frames == 0 || self.fall_frames == 0 {
            return Err(DevkitError::InvalidConfig(
                "frame_period_ms, rise_frames and fall_frames must be ≥ 1".into(),
            ));
        }
        Ok(())
    }
}

pub(crate) fn pin_interface(signal: &str, description: &str) -> InterfaceDecl {
    InterfaceDecl {
        pins: vec![
            PinDecl {
                name: "VDD".into(),
                role: PinRole::Power,
            },
            PinDecl {
                name: "GND".into(),
                role: PinRole::Ground,
            },
            PinDecl {
                name: signal.into(),
                role: PinRole::SignalOut,
            },
        ],
        serial: None,
        declared_outputs: vec![format!("{signal}: 1 bit, {description}")],
    }
}

enum Core {
    Person(PersonParams),
    Gaze(GazeParams),
}

impl Core {
    fn positive(&self, frame: &Frame) -> bool {
        match self {
            Core::Person(p) => detect_person(frame, p).present,
            Core::Gaze(p) => detect_gaze(frame, p).present,
        }
    }
}

/// Each step publishes the result for the frame captured at the previous
/// step, then captures the newest frame. A frame therefore takes one frame
/// period to process, and a person who is present from t = 0 is reported
/// after `rise_frames` periods.
struct VisionPin {
    core: Core,
    policy: PersonPinPolicy,
    frames: TimedQueue<Frame>,
    current: Option<Frame>,
    /// Result of `current`, computed once.
    current_result: Option<bool>,
    pending: Option<bool>,
    positives: u32,
    negatives: u32,
    asserted: bool,
}

impl VisionPin {
    fn new(core: Core, policy: PersonPinPolicy) -> Self {
        VisionPin {
            core,
            policy,
            frames: TimedQueue::default(),
            current: None,
            current_result: None,
            pending: None,
            positives: 0,
            negatives: 0,
            asserted: false,
        }
    }
}

impl Behavior for VisionPin {
    fn cadence_ms(&self) -> u64 {
        self.policy.frame_period_ms
    }

    fn configure(&mut self, payload: &[u8]) -> Result<(), DevkitError> {
        self.core = match self.core {
            Core::Person(_) => Core::Person(PersonParams::decode(payload)?),
            Core::Gaze(_) => Core::Gaze(GazeParams::decode(payload)?),
        };
        self.current_result = None;
        Ok(())
    }

    fn feed(&mut self, stimulus: Stimulus, at: SimTime) {
        if let Stimulus::Frame(f) = stimulus {
            self.frames.push(at, f);
        }
    }

    fn step(&mut self, now: SimTime, port: &mut PinPort<'_>) {
        if let Some(positive) = self.pending.take() {
            if positive {
                self.positives += 1;
                self.negatives = 0;
            } else {
                self.negatives += 1;
                self.positives = 0;
            }
            if !self.asserted && self.positives >= self.policy.rise_frames {
                self.asserted = true;
                port.drive(DETECT_PIN, LogicLevel::High);
            } else if self.asserted && self.negatives >= self.policy.fall_frames {
                self.asserted = false;
                port.drive(DETECT_PIN, LogicLevel::Low);
            }
        }
        if let Some((_, frame)) = self.frames.take_latest(now) {
            self.current = Some(frame);
            self.current_result = None;
        }
        if let Some(frame) = &self.current {
            let core = &self.core;
            let result = *self.current_result.get_or_insert_with(|| core.positive(frame));
            self.pending = Some(result);
        }
    }

    fn timing(&self) -> DeviceTiming {
        DeviceTiming {
            cadence_ms: self.policy.frame_period_ms,
            frame_period_ms: Some(self.policy.frame_period_ms),
            rise_frames: Some(self.policy.rise_frames),
            fall_frames: Some(self.policy.fall_frames),
            ..Default::default()
        }
    }
}

/// Pins VDD, GND, DETECT; DETECT is HIGH while a person is present.
pub fn person_detector(
    policy: PersonPinPolicy,
    params: &ParameterBlob,
) -> Result<SensorDevice, DevkitError> {
    policy.validate()?;
    SensorDevice::new(
        SensorKind::Person,
        pin_interface(DETECT_PIN, "HIGH while a person is in view"),
        Box::new(VisionPin::new(Core::Person(PersonParams::default()), policy)),
        params.clone(),
    )
}

/// Same contract as [`person_detector`], HIGH while someone faces the
/// sensor.
pub fn gaze_detector(
    policy: PersonPinPolicy,
    params: &ParameterBlob,
) -> Result<SensorDevice, DevkitError> {
    policy.validate()?;
    SensorDevice::new(
        SensorKind::Gaze,
        pin_interface(DETECT_PIN, "HIGH while a person looks at the sensor"),
        Box::new(VisionPin::new(Core::Gaze(GazeParams::default()), policy)),
        params.clone(),
    )
}
