//! Seven-segment text reader on I2C.

use super::bcd::{encode_register, SENTINEL};
use super::payload::BlobPayload;
use super::queue::TimedQueue;
use super::voice::serial_interface;
use crate::devkit::{Behavior, DeviceTiming, DevkitError, ParameterBlob, SensorDevice, SensorKind};
use crate::stimuli::{decode_display, DisplayParams, Frame, Stimulus};
use crate::vbus::{is_valid_address, PinPort, SimTime};

pub const DEFAULT_TEXT_READER_ADDRESS: u8 = 0x29;
pub const REFRESH_PERIOD_MS: u64 = 500;
pub const REGISTER_MAP_LEN: usize = 8;
pub const TEXT_PACKET_SPEC: &str = "bcd-reading-v1";

struct TextReader {
    params: DisplayParams,
    frames: TimedQueue<Frame>,
    latest: Option<Frame>,
    registers: [u8; 8],
}

impl Behavior for TextReader {
    fn cadence_ms(&self) -> u64 {
        REFRESH_PERIOD_MS
    }

    fn configure(&mut self, payload: &[u8]) -> Result<(), DevkitError> {
        self.params = DisplayParams::decode(payload)?;
        Ok(())
    }

    fn feed(&mut self, stimulus: Stimulus, at: SimTime) {
        if let Stimulus::Frame(f) = stimulus {
            self.frames.push(at, f);
        }
    }

    fn step(&mut self, now: SimTime, _port: &mut PinPort<'_>) {
        if let Some((_, f)) = self.frames.take_latest(now) {
            self.latest = Some(f);
        }
        let reading = self
            .latest
            .as_ref()
            .and_then(|f| decode_display(f, &self.params));
        // Readings the layout cannot hold report as "no reading".
        self.registers = encode_register(reading.as_ref()).unwrap_or(SENTINEL);
    }

    fn serial_read(&mut self, len: usize) -> Vec<u8> {
        self.registers.iter().copied().take(len).collect()
    }

    fn timing(&self) -> DeviceTiming {
        DeviceTiming {
            cadence_ms: REFRESH_PERIOD_MS,
            refresh_period_ms: Some(REFRESH_PERIOD_MS),
            ..Default::default()
        }
    }
}

/// Pins VDD, GND and an I2C responder at `address`. Every 500 ms the
/// newest frame is read and the 8-byte register map rewritten: whole word
/// then fraction word, big-endian packed BCD, or all `FF` when no display
/// is found.
pub fn text_reader(address: u8, params: &ParameterBlob) -> Result<SensorDevice, DevkitError> {
    if !is_valid_address(address) {
        return Err(DevkitError::InvalidConfig(format!(
            "address 0x{address:02X} outside 0x08..=0x77"
        )));
    }
    SensorDevice::new(
        SensorKind::TextReader,
        serial_interface(
            address,
            REGISTER_MAP_LEN,
            TEXT_PACKET_SPEC,
            vec![
                "bytes 0-3: 7 packed-BCD whole digits and a sign nibble".into(),
                "bytes 4-7: 8 packed-BCD fraction digits".into(),
            ],
        ),
        Box::new(TextReader {
            params: DisplayParams::default(),
            frames: TimedQueue::default(),
            latest: None,
            registers: SENTINEL,
        }),
        params.clone(),
    )
}
