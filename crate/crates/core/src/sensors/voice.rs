//! Voice command sensors: a latched on/off pin, or command packets over
//! I2C.

use std::collections::VecDeque;

use super::payload::BlobPayload;
use super::queue::TimedQueue;
use super::vision_pin::pin_interface;
use crate::devkit::{
    Behavior, DeviceTiming, Diagnostics, DevkitError, InterfaceDecl, ParameterBlob, PinDecl,
    PinRole, SensorDevice, SensorKind, SerialDecl,
};
use crate::stimuli::{FeatureWindow, KeywordHit, KeywordParams, KeywordSpotter, Stimulus, HOP_MS};
use crate::vbus::{is_valid_address, LogicLevel, PinPort, SimTime};

pub const STATE_PIN: &str = "STATE";
pub const VOICE_CADENCE_MS: u64 = HOP_MS;
pub const QUEUE_DEPTH: usize = 16;
pub const PACKET_LEN: usize = 2;
pub const EMPTY_PACKET: [u8; PACKET_LEN] = [0xFF, 0xFF];
pub const VOICE_PACKET_SPEC: &str = "voice-command-v1";

/// A recognised command as sent to the host.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CommandPacket {
    pub command_index: u8,
    pub sequence: u8,
}

impl CommandPacket {
    pub fn to_bytes(self) -> [u8; PACKET_LEN] {
        [self.command_index, self.sequence]
    }
}

/// Streams audio frames into the spotter as each 20 ms hop completes.
struct Listener {
    params: KeywordParams,
    spotter: KeywordSpotter,
    windows: TimedQueue<FeatureWindow>,
    next_frame: usize,
}

impl Listener {
    fn new(params: KeywordParams) -> Self {
        Listener {
            spotter: KeywordSpotter::new(params.clone()),
            params,
            windows: TimedQueue::default(),
            next_frame: 0,
        }
    }

    fn hear(&mut self, now: SimTime) -> Vec<KeywordHit> {
        let mut hits = Vec::new();
        while let Some((start, window)) = self.windows.front() {
            let available = start.ms() + (self.next_frame as u64 + 1) * HOP_MS;
            if available > now.ms() {
                break;
            }
            hits.extend(self.spotter.push(window.frames()[self.next_frame]));
            self.next_frame += 1;
            if self.next_frame == window.frames().len() {
                hits.extend(self.spotter.flush());
                self.windows.pop_front();
                self.next_frame = 0;
                self.spotter = KeywordSpotter::new(self.params.clone());
            }
        }
        hits
    }
}

struct VoicePin {
    listener: Listener,
}

fn check_on_off(p: &KeywordParams) -> Result<(), DevkitError> {
    let mut words = p.vocabulary();
    words.sort();
    if words != ["off", "on"] {
        return Err(DevkitError::InvalidParams(
            "the pin-mode vocabulary must be exactly {on, off}".into(),
        ));
    }
    Ok(())
}

impl Behavior for VoicePin {
    fn cadence_ms(&self) -> u64 {
        VOICE_CADENCE_MS
    }

    fn configure(&mut self, payload: &[u8]) -> Result<(), DevkitError> {
        let p = KeywordParams::decode(payload)?;
        check_on_off(&p)?;
        self.listener = Listener::new(p);
        Ok(())
    }

    fn feed(&mut self, stimulus: Stimulus, at: SimTime) {
        if let Stimulus::Audio(w) = stimulus {
            self.listener.windows.push(at, w);
        }
    }

    fn step(&mut self, now: SimTime, port: &mut PinPort<'_>) {
        for hit in self.listener.hear(now) {
            let level = LogicLevel::from_bool(hit.word == "on");
            port.drive(STATE_PIN, level);
        }
    }

    fn timing(&self) -> DeviceTiming {
        DeviceTiming {
            cadence_ms: VOICE_CADENCE_MS,
            ..Default::default()
        }
    }
}

/// Pins VDD, GND, STATE. STATE latches HIGH on "on" and LOW on "off".
pub fn voice_sensor_pin(params: &ParameterBlob) -> Result<SensorDevice, DevkitError> {
    SensorDevice::new(
        SensorKind::Voice,
        pin_interface(STATE_PIN, "HIGH after \"on\", LOW after \"off\""),
        Box::new(VoicePin {
            listener: Listener::new(KeywordParams::for_vocabulary(&["on", "off"])),
        }),
        params.clone(),
    )
}

struct VoiceSerial {
    listener: Listener,
    queue: VecDeque<CommandPacket>,
    sequence: u8,
    dropped: u64,
}

impl Behavior for VoiceSerial {
    fn cadence_ms(&self) -> u64 {
        VOICE_CADENCE_MS
    }

    fn configure(&mut self, payload: &[u8]) -> Result<(), DevkitError> {
        let p = KeywordParams::decode(payload)?;
        if p.templates.len() > 255 {
            return Err(DevkitError::InvalidParams("at most 255 commands".into()));
        }
        self.listener = Listener::new(p);
        Ok(())
    }

    fn feed(&mut self, stimulus: Stimulus, at: SimTime) {
        if let Stimulus::Audio(w) = stimulus {
            self.listener.windows.push(at, w);
        }
    }

    fn step(&mut self, now: SimTime, _port: &mut PinPort<'_>) {
        for hit in self.listener.hear(now) {
            if self.queue.len() == QUEUE_DEPTH {
                self.queue.pop_front();
                self.dropped += 1;
            }
            self.queue.push_back(CommandPacket {
                command_index: hit.index as u8,
                sequence: self.sequence,
            });
            self.sequence = self.sequence.wrapping_add(1);
        }
    }

    /// Each READ pops one packet, whatever its length.
    fn serial_read(&mut self, _len: usize) -> Vec<u8> {
        self.queue
            .pop_front()
            .map_or(EMPTY_PACKET, CommandPacket::to_bytes)
            .to_vec()
    }

    fn timing(&self) -> DeviceTiming {
        DeviceTiming {
            cadence_ms: VOICE_CADENCE_MS,
            queue_depth: Some(QUEUE_DEPTH),
            ..Default::default()
        }
    }

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics {
            dropped_packets: self.dropped,
        }
    }
}

pub(crate) fn serial_interface(
    address: u8,
    register_map_len: usize,
    packet_spec_id: &str,
    outputs: Vec<String>,
) -> InterfaceDecl {
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
        ],
        serial: Some(SerialDecl {
            address,
            register_map_len,
            packet_spec_id: packet_spec_id.into(),
        }),
        declared_outputs: outputs,
    }
}

/// Pins VDD, GND and an I2C responder. Each recognition queues a 2-byte
/// packet `[command_index, sequence]`; a READ pops the oldest, and an
/// empty queue reads `FF FF`.
pub fn voice_sensor_serial(address: u8, params: &ParameterBlob) -> Result<SensorDevice, DevkitError> {
    if !is_valid_address(address) {
        return Err(DevkitError::InvalidConfig(format!(
            "address 0x{address:02X} outside 0x08..=0x77"
        )));
    }
    SensorDevice::new(
        SensorKind::Voice,
        serial_interface(
            address,
            PACKET_LEN,
            VOICE_PACKET_SPEC,
            vec![
                "byte 0: index of the recognised command in the vocabulary".into(),
                "byte 1: wrapping sequence number".into(),
            ],
        ),
        Box::new(VoiceSerial {
            listener: Listener::new(KeywordParams::for_vocabulary(&["on", "off"])),
            queue: VecDeque::new(),
            sequence: 0,
            dropped: 0,
        }),
        params.clone(),
    )
}
