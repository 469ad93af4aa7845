use super::{DevkitError, SensorKind};

pub const BLOB_MAGIC: [u8; 4] = *b"MLSP";
pub const BLOB_VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 1 + 4;

/// Calibration data for one device kind: numbers only, no code.
///
/// Wire format, little-endian:
///
/// ```text
/// "MLSP" | version u8 | kind u8 | payload_len u32 | payload | crc32 u32
/// ```
///
/// The CRC is CRC-32/IEEE over every preceding byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterBlob {
    pub kind: SensorKind,
    pub payload: Vec<u8>,
}

impl ParameterBlob {
    pub fn new(kind: SensorKind, payload: Vec<u8>) -> Self {
        ParameterBlob { kind, payload }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len() + 4);
        out.extend_from_slice(&BLOB_MAGIC);
        out.push(BLOB_VERSION);
        out.push(self.kind.code());
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DevkitError> {
        let malformed = |m: &str| DevkitError::MalformedBlob(m.to_string());
        if bytes.len() < HEADER_LEN + 4 {
            return Err(malformed("shorter than header and checksum"));
        }
        let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(crc_bytes.try_into().expect("4 bytes"));
        let computed = crc32fast::hash(body);
        if stored != computed {
            return Err(DevkitError::BadCrc { stored, computed });
        }
        if body[..4] != BLOB_MAGIC {
            return Err(malformed("magic is not MLSP"));
        }
        if body[4] != BLOB_VERSION {
            return Err(malformed("unsupported version"));
        }
        let kind = SensorKind::from_code(body[5]).ok_or_else(|| malformed("unknown kind code"))?;
        let len = u32::from_le_bytes(body[6..10].try_into().expect("4 bytes")) as usize;
        if body.len() - HEADER_LEN != len {
            return Err(malformed("payload_len disagrees with blob size"));
        }
        Ok(ParameterBlob {
            kind,
            payload: body[HEADER_LEN..].to_vec(),
        })
    }
}
