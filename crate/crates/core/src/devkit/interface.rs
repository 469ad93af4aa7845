use serde::{Deserialize, Serialize};

use super::DevkitError;
use crate::vbus::is_valid_address;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PinRole {
    Power,
    Ground,
    SignalOut,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinDecl {
    pub name: String,
    pub role: PinRole,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SerialDecl {
    pub address: u8,
    pub register_map_len: usize,
    pub packet_spec_id: String,
}

/// Everything a device may emit, declared up front.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfaceDecl {
    pub pins: Vec<PinDecl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub serial: Option<SerialDecl>,
    /// One human-readable line per bit or field the device can emit.
    pub declared_outputs: Vec<String>,
}

impl InterfaceDecl {
    pub fn pin(&self, name: &str) -> Option<&PinDecl> {
        self.pins.iter().find(|p| p.name == name)
    }

    pub fn signal_pins(&self) -> impl Iterator<Item = &PinDecl> {
        self.pins.iter().filter(|p| p.role == PinRole::SignalOut)
    }

    pub fn validate(&self) -> Result<(), DevkitError> {
        let bad = |m: String| Err(DevkitError::InvalidConfig(m));
        let mut names: Vec<&str> = self.pins.iter().map(|p| p.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return bad(format!("pin `{}` declared twice", w[0]));
        }
        if self.declared_outputs.is_empty() {
            return bad("declared_outputs is empty".into());
        }
        if let Some(s) = &self.serial {
            if !is_valid_address(s.address) {
                return bad(format!("serial address 0x{:02X} out of range", s.address));
            }
        }
        Ok(())
    }

    /// Equality ignoring the configurable serial address.
    pub fn same_shape(&self, other: &InterfaceDecl) -> bool {
        let strip = |d: &InterfaceDecl| {
            d.serial
                .as_ref()
                .map(|s| (s.register_map_len, s.packet_spec_id.clone()))
        };
        self.pins == other.pins && strip(self) == strip(other)
    }
}
