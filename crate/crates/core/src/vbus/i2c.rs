use std::fmt;

use serde::{Deserialize, Serialize};

/// Lowest and highest non-reserved 7-bit addresses.
pub const MIN_ADDRESS: u8 = 0x08;
pub const MAX_ADDRESS: u8 = 0x77;

pub fn is_valid_address(address: u8) -> bool {
    (MIN_ADDRESS..=MAX_ADDRESS).contains(&address)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Direction {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AckStatus {
    Ack,
    Nack,
}

/// What the controller asks for in one transfer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum I2cRequest {
    Read(usize),
    Write(Vec<u8>),
}

impl I2cRequest {
    pub fn direction(&self) -> Direction {
        match self {
            I2cRequest::Read(_) => Direction::Read,
            I2cRequest::Write(_) => Direction::Write,
        }
    }
}

/// One completed transfer. On READ the payload holds the bytes the device
/// returned; on WRITE the bytes the controller sent. NACK always carries an
/// empty payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct I2cTransaction {
    pub address: u8,
    pub direction: Direction,
    pub payload: Vec<u8>,
    pub status: AckStatus,
}

impl I2cTransaction {
    pub(crate) fn nack(address: u8, direction: Direction) -> Self {
        I2cTransaction {
            address,
            direction,
            payload: Vec::new(),
            status: AckStatus::Nack,
        }
    }

    pub fn is_ack(&self) -> bool {
        self.status == AckStatus::Ack
    }

    pub fn payload_hex(&self) -> String {
        hex_bytes(&self.payload)
    }
}

impl fmt::Display for I2cTransaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "0x{:02X} {:?} {:?} [{}]",
            self.address,
            self.direction,
            self.status,
            self.payload_hex()
        )
    }
}

/// Space-separated upper-case hex, e.g. `00 01 23 4C`.
pub fn hex_bytes(bytes: &[u8]) -> String {
    bytes
        .iter()
        .map(|b| format!("{b:02X}"))
        .collect::<Vec<_>>()
        .join(" ")
}
