//! Structural exposure audit: which channels carried how many bits.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{InterfaceDecl, PinRole};
use crate::vbus::{Channel, ExposureRecord, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AuditCode {
    UndeclaredChannel,
    OversizedPayload,
    MalformedRecord,
}

impl AuditCode {
    pub fn as_str(self) -> &'static str {
        match self {
            AuditCode::UndeclaredChannel => "UNDECLARED_CHANNEL",
            AuditCode::OversizedPayload => "OVERSIZED_PAYLOAD",
            AuditCode::MalformedRecord => "MALFORMED_RECORD",
        }
    }
}

impl fmt::Display for AuditCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditFinding {
    pub code: AuditCode,
    pub at: SimTime,
    pub channel: Channel,
    pub message: String,
}

impl fmt::Display for AuditFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {} on {}: {}", self.code, self.at, self.channel, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditVerdict {
    pub pass: bool,
    pub findings: Vec<AuditFinding>,
}

/// Checks every record against the declaration: pins must be declared
/// signal outputs carrying one bit per event, serial reads must come from
/// the declared address and fit the register map.
pub fn audit(log: &[ExposureRecord], decl: &InterfaceDecl) -> AuditVerdict {
    let mut findings = Vec::new();
    let mut find = |r: &ExposureRecord, code, message: String| {
        findings.push(AuditFinding {
            code,
            at: r.at,
            channel: r.channel.clone(),
            message,
        })
    };
    for r in log {
        match &r.channel {
            Channel::Pin { pin, .. } => {
                let declared = decl
                    .pin(pin)
                    .is_some_and(|p| p.role == PinRole::SignalOut);
                if !declared {
                    find(r, AuditCode::UndeclaredChannel, format!("`{pin}` is not a declared signal pin"));
                } else if r.bits != 1 {
                    find(r, AuditCode::MalformedRecord, format!("pin event carries {} bits", r.bits));
                }
            }
            Channel::Serial { address } => match &decl.serial {
                Some(s) if s.address == *address => {
                    if r.bits % 8 != 0 {
                        find(r, AuditCode::MalformedRecord, format!("{} bits is not whole bytes", r.bits));
                    } else if r.bits / 8 > s.register_map_len as u64 {
                        find(
                            r,
                            AuditCode::OversizedPayload,
                            format!("{} bytes exceed register_map_len {}", r.bits / 8, s.register_map_len),
                        );
                    }
                }
                _ => find(
                    r,
                    AuditCode::UndeclaredChannel,
                    format!("no serial interface declared at 0x{address:02X}"),
                ),
            },
        }
    }
    AuditVerdict {
        pass: findings.is_empty(),
        findings,
    }
}

const EXPOSURE_HEADER: &str = "time_ms,channel,detail,bits";

/// `time_ms,channel,detail,bits` dump, one row per record in log order.
pub fn exposure_csv(log: &[ExposureRecord]) -> String {
    let mut out = format!("{EXPOSURE_HEADER}\n");
    for r in log {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.at.ms(),
            r.channel.kind_tag(),
            r.channel.detail(),
            r.bits
        ));
    }
    out
}

/// Inverse of [`exposure_csv`]. Errors carry the 1-based line number.
pub fn parse_exposure_csv(text: &str) -> Result<Vec<ExposureRecord>, (usize, String)> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == EXPOSURE_HEADER => {}
        _ => return Err((1, format!("expected header `{EXPOSURE_HEADER}`"))),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_row(l.trim_end()).map_err(|m| (i + 1, m)))
        .collect()
}

fn parse_row(line: &str) -> Result<ExposureRecord, String> {
    let cells: Vec<&str> = line.split(',').collect();
    let [time, kind, detail, bits] = cells[..] else {
        return Err(format!("expected 4 cells, got {}", cells.len()));
    };
    let at = SimTime(time.parse().map_err(|_| format!("bad time `{time}`"))?);
    let bits: u64 = bits.parse().map_err(|_| format!("bad bit count `{bits}`"))?;
    let channel = match kind {
        "PIN" => {
            let (pin, line) = detail
                .split_once('@')
                .ok_or_else(|| format!("pin detail `{detail}` is not PIN@line"))?;
            Channel::Pin {
                pin: pin.to_string(),
                line: line.to_string(),
            }
        }
        "SERIAL" => {
            let hex = detail
                .strip_prefix("0x")
                .ok_or_else(|| format!("serial detail `{detail}` is not 0xNN"))?;
            Channel::Serial {
                address: u8::from_str_radix(hex, 16).map_err(|_| format!("bad address `{detail}`"))?,
            }
        }
        other => return Err(format!("unknown channel `{other}`")),
    };
    Ok(ExposureRecord { at, channel, bits })
}
