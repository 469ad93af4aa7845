use std::fmt;

use super::SimTime;

/// Where a piece of information left a device.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Channel {
    /// A level change on a signal pin, wired to `line`.
    Pin { pin: String, line: String },
    /// Bytes returned to the controller on a serial READ.
    Serial { address: u8 },
}

impl Channel {
    pub fn kind_tag(&self) -> &'static str {
        match self {
            Channel::Pin { .. } => "PIN",
            Channel::Serial { .. } => "SERIAL",
        }
    }

    /// `DETECT@hall` for pins, `0x29` for serial addresses.
    pub fn detail(&self) -> String {
        match self {
            Channel::Pin { pin, line } => format!("{pin}@{line}"),
            Channel::Serial { address } => format!("0x{address:02X}"),
        }
    }

    /// Name used in datasheet privacy labels: the pin name, or `I2C@0x29`.
    pub fn label(&self) -> String {
        match self {
            Channel::Pin { pin, .. } => pin.clone(),
            Channel::Serial { address } => format!("I2C@0x{address:02X}"),
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind_tag(), self.detail())
    }
}

/// One crossing of the device boundary towards the host.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExposureRecord {
    pub at: SimTime,
    pub channel: Channel,
    pub bits: u64,
}

impl ExposureRecord {
    pub fn pin(at: SimTime, pin: impl Into<String>, line: impl Into<String>) -> Self {
        ExposureRecord {
            at,
            channel: Channel::Pin {
                pin: pin.into(),
                line: line.into(),
            },
            bits: 1,
        }
    }

    pub fn serial(at: SimTime, address: u8, payload_len: usize) -> Self {
        ExposureRecord {
            at,
            channel: Channel::Serial { address },
            bits: 8 * payload_len as u64,
        }
    }
}
