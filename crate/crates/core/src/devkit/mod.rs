//! The sensor-device framework: interface declarations, parameter blobs,
//! the power lifecycle, the isolation boundary and the exposure audit.
//!
//! A [`SensorDevice`] owns its detector state and stimulus queue privately.
//! The host sees only its declaration, its kind and its timing; everything
//! else reaches the host through pins and serial reads, which the bus
//! records as [`ExposureRecord`](crate::vbus::ExposureRecord)s.
//!
//! There is no host query for stimuli:
//!
//! ```compile_fail
//! use mlsensor::devkit::SensorDevice;
//! fn peek(device: &SensorDevice) {
//!     let _ = device.last_stimulus();
//! }
//! ```

mod audit;
mod blob;
mod device;
mod interface;

pub use audit::{
    audit, exposure_csv, parse_exposure_csv, AuditCode, AuditFinding, AuditVerdict,
};
pub use blob::{ParameterBlob, BLOB_MAGIC, BLOB_VERSION};
pub use device::{
    declared_surface, device_mut, device_ref, feed, power_on, surface_of, Diagnostics, DeviceTiming, SensorDevice,
};
pub(crate) use device::Behavior;
pub use interface::{InterfaceDecl, PinDecl, PinRole, SerialDecl};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stimuli::Modality;
use crate::vbus::BusError;

/// The five device kinds, with their blob codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SensorKind {
    Person = 1,
    Gaze = 2,
    Tap = 3,
    Voice = 4,
    TextReader = 5,
}

impl SensorKind {
    pub const ALL: [SensorKind; 5] = [
        SensorKind::Person,
        SensorKind::Gaze,
        SensorKind::Tap,
        SensorKind::Voice,
        SensorKind::TextReader,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        SensorKind::ALL.into_iter().find(|k| k.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            SensorKind::Person => "PERSON",
            SensorKind::Gaze => "GAZE",
            SensorKind::Tap => "TAP",
            SensorKind::Voice => "VOICE",
            SensorKind::TextReader => "TEXT_READER",
        }
    }

    /// The stimulus modality the kind consumes.
    pub fn modality(self) -> Modality {
        match self {
            SensorKind::Person | SensorKind::Gaze | SensorKind::TextReader => Modality::Frame,
            SensorKind::Tap => Modality::Imu,
            SensorKind::Voice => Modality::Audio,
        }
    }
}

impl fmt::Display for SensorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SensorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SensorKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown sensor kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DevkitError {
    #[error("POWERED: parameters cannot change after power-on")]
    Powered,
    #[error("BAD_CRC: stored {stored:#010x}, computed {computed:#010x}")]
    BadCrc { stored: u32, computed: u32 },
    #[error("KIND_MISMATCH: blob is for {actual}, device is {expected}")]
    KindMismatch {
        expected: SensorKind,
        actual: SensorKind,
    },
    #[error("MISSING_PIN: wiring has no entry for `{0}`")]
    MissingPin(String),
    #[error("ADDRESS_CONFLICT: 0x{0:02X} is already occupied")]
    AddressConflict(u8),
    #[error("MODALITY_MISMATCH: {kind} devices take {expected} stimuli, got {actual}")]
    ModalityMismatch {
        kind: SensorKind,
        expected: Modality,
        actual: Modality,
    },
    #[error("malformed parameter blob: {0}")]
    MalformedBlob(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no sensor device behind that handle")]
    UnknownDevice,
    #[error(transparent)]
    Bus(#[from] BusError),
}

impl DevkitError {
    /// The stable upper-case code at the front of the message, if any.
    pub fn code(&self) -> &'static str {
        match self {
            DevkitError::Powered => "POWERED",
            DevkitError::BadCrc { .. } => "BAD_CRC",
            DevkitError::KindMismatch { .. } => "KIND_MISMATCH",
            DevkitError::MissingPin(_) => "MISSING_PIN",
            DevkitError::AddressConflict(_) => "ADDRESS_CONFLICT",
            DevkitError::ModalityMismatch { .. } => "MODALITY_MISMATCH",
            DevkitError::MalformedBlob(_) => "MALFORMED_BLOB",
            DevkitError::InvalidParams(_) => "INVALID_PARAMS",
            DevkitError::InvalidConfig(_) => "INVALID_CONFIG",
            DevkitError::UnknownDevice => "UNKNOWN_DEVICE",
            DevkitError::Bus(_) => "BUS",
        }
    }
}
