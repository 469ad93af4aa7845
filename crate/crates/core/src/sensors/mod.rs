//! The five concrete ML sensors and their wire formats.
//!
//! | kind        | pins           | serial                       |
//! |-------------|----------------|------------------------------|
//! | PERSON      | VDD GND DETECT | none                         |
//! | GAZE        | VDD GND DETECT | none                         |
//! | TAP         | VDD GND TAP    | none                         |
//! | VOICE (pin) | VDD GND STATE  | none                         |
//! | VOICE (i2c) | VDD GND        | 2-byte command packets       |
//! | TEXT_READER | VDD GND        | 8-byte packed-BCD registers  |

pub mod bcd;
mod payload;
mod queue;
mod tap;
mod text_reader;
mod vision_pin;
mod voice;

pub use bcd::{decode_reading, encode_reading, encode_register, BcdError, RegisterFile};
pub use payload::{default_blob, BlobPayload};
pub use tap::{tap_sensor, DEFAULT_PULSE_MS, TAP_CADENCE_MS, TAP_PIN};
pub use text_reader::{
    text_reader, DEFAULT_TEXT_READER_ADDRESS, REFRESH_PERIOD_MS, REGISTER_MAP_LEN,
    TEXT_PACKET_SPEC,
};
pub use vision_pin::{gaze_detector, person_detector, PersonPinPolicy, DETECT_PIN};
pub use voice::{
    voice_sensor_pin, voice_sensor_serial, CommandPacket, EMPTY_PACKET, PACKET_LEN, QUEUE_DEPTH,
    STATE_PIN, VOICE_CADENCE_MS, VOICE_PACKET_SPEC,
};

use serde::{Deserialize, Serialize};

use crate::devkit::{DevkitError, ParameterBlob, SensorDevice, SensorKind};

/// How a voice sensor reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoiceMode {
    #[default]
    Pin,
    Serial,
}

/// Construction-time settings; which fields apply depends on the kind.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    /// PERSON and GAZE.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PersonPinPolicy>,
    /// TAP.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse_ms: Option<u64>,
    /// VOICE.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<VoiceMode>,
    /// Serial devices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub address: Option<u8>,
}

/// Builds any kind from a config and a blob; unset fields take defaults.
pub fn build_device(
    kind: SensorKind,
    config: &DeviceConfig,
    blob: &ParameterBlob,
) -> Result<SensorDevice, DevkitError> {
    let policy = config.policy.unwrap_or_default();
    let mode = config.mode.unwrap_or_default();
    let misplaced = |field: &str| {
        Err(DevkitError::InvalidConfig(format!(
            "`{field}` does not apply to {kind} devices"
        )))
    };
    if config.policy.is_some() && !matches!(kind, SensorKind::Person | SensorKind::Gaze) {
        return misplaced("policy");
    }
    if config.pulse_ms.is_some() && kind != SensorKind::Tap {
        return misplaced("pulse_ms");
    }
    if config.mode.is_some() && kind != SensorKind::Voice {
        return misplaced("mode");
    }
    let serial = kind == SensorKind::TextReader || (kind == SensorKind::Voice && mode == VoiceMode::Serial);
    if config.address.is_some() && !serial {
        return misplaced("address");
    }
    match kind {
        SensorKind::Person => person_detector(policy, blob),
        SensorKind::Gaze => gaze_detector(policy, blob),
        SensorKind::Tap => tap_sensor(config.pulse_ms.unwrap_or(DEFAULT_PULSE_MS), blob),
        SensorKind::Voice => match mode {
            VoiceMode::Pin => voice_sensor_pin(blob),
            VoiceMode::Serial => voice_sensor_serial(
                config.address.ok_or_else(|| {
                    DevkitError::InvalidConfig("serial voice sensors need an address".into())
                })?,
                blob,
            ),
        },
        SensorKind::TextReader => {
            text_reader(config.address.unwrap_or(DEFAULT_TEXT_READER_ADDRESS), blob)
        }
    }
}
