//! Packed-BCD register layout of the text reader.
//!
//! ```text
//! whole_word: d d d d d d d s    7 digits, right-aligned, then sign
//! frac_word:  d d d d d d d d    8 digits, left-aligned from tenths
//! ```
//!
//! Each letter is one nibble; words are sent big-endian. The sign nibble
//! is `C` for positive and `D` for negative. Eight `FF` bytes mean "no
//! reading", which can never be confused with a value since `F` is not a
//! digit.

use thiserror::Error;

use crate::stimuli::Reading;

pub const WHOLE_DIGITS: usize = 7;
pub const FRAC_DIGITS: usize = 8;
pub const SIGN_POSITIVE: u8 = 0xC;
pub const SIGN_NEGATIVE: u8 = 0xD;
pub const SENTINEL: [u8; 8] = [0xFF; 8];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BcdError {
    #[error("TOO_MANY_DIGITS: {whole} whole / {frac} fractional digits, limit 7/8")]
    TooManyDigits { whole: usize, frac: usize },
    #[error("MALFORMED_NIBBLE: 0x{nibble:X} at digit position {position}")]
    MalformedNibble { position: usize, nibble: u8 },
    #[error("INVALID_SIGN: sign nibble 0x{0:X} is neither C nor D")]
    InvalidSign(u8),
}

/// The two 32-bit registers a host reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RegisterFile {
    pub whole_word: u32,
    pub frac_word: u32,
}

impl RegisterFile {
    pub const SENTINEL: RegisterFile = RegisterFile {
        whole_word: u32::MAX,
        frac_word: u32::MAX,
    };

    pub fn from_reading(r: Option<&Reading>) -> Result<Self, BcdError> {
        Ok(Self::from_bytes(&encode_register(r)?))
    }

    pub fn to_bytes(self) -> [u8; 8] {
        let mut out = [0u8; 8];
        out[..4].copy_from_slice(&self.whole_word.to_be_bytes());
        out[4..].copy_from_slice(&self.frac_word.to_be_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8; 8]) -> Self {
        RegisterFile {
            whole_word: u32::from_be_bytes(bytes[..4].try_into().expect("4 bytes")),
            frac_word: u32::from_be_bytes(bytes[4..].try_into().expect("4 bytes")),
        }
    }

    pub fn is_sentinel(self) -> bool {
        self == Self::SENTINEL
    }
}

fn pack(nibbles: &[u8; 8]) -> [u8; 4] {
    std::array::from_fn(|i| nibbles[2 * i] << 4 | nibbles[2 * i + 1])
}

fn digit_values(s: &str) -> impl Iterator<Item = u8> + '_ {
    s.bytes().map(|b| b - b'0')
}

/// Encodes a reading, digits copied as-is without numeric conversion.
pub fn encode_reading(r: &Reading) -> Result<[u8; 8], BcdError> {
    let (whole, frac) = (r.whole_digits.len(), r.frac_digits.len());
    if whole > WHOLE_DIGITS || frac > FRAC_DIGITS {
        return Err(BcdError::TooManyDigits { whole, frac });
    }
    let mut w = [0u8; 8];
    for (slot, d) in w[WHOLE_DIGITS - whole..WHOLE_DIGITS]
        .iter_mut()
        .zip(digit_values(&r.whole_digits))
    {
        *slot = d;
    }
    w[7] = if r.negative { SIGN_NEGATIVE } else { SIGN_POSITIVE };
    let mut f = [0u8; 8];
    for (slot, d) in f.iter_mut().zip(digit_values(&r.frac_digits)) {
        *slot = d;
    }
    let mut out = [0u8; 8];
    out[..4].copy_from_slice(&pack(&w));
    out[4..].copy_from_slice(&pack(&f));
    Ok(out)
}

/// [`encode_reading`], or the sentinel for `None`.
pub fn encode_register(r: Option<&Reading>) -> Result<[u8; 8], BcdError> {
    r.map_or(Ok(SENTINEL), encode_reading)
}

/// Decodes register bytes. The result is canonical: leading zeros of the
/// whole part and trailing zeros of the fraction are not representable in
/// the layout, so they do not come back.
pub fn decode_reading(bytes: &[u8; 8]) -> Result<Option<Reading>, BcdError> {
    if *bytes == SENTINEL {
        return Ok(None);
    }
    let nibbles: Vec<u8> = bytes.iter().flat_map(|b| [b >> 4, b & 0xF]).collect();
    let digit = |position: usize| {
        let nibble = nibbles[position];
        if nibble > 9 {
            Err(BcdError::MalformedNibble { position, nibble })
        } else {
            Ok(char::from(b'0' + nibble))
        }
    };
    let whole: String = (0..WHOLE_DIGITS).map(digit).collect::<Result<_, _>>()?;
    let negative = match nibbles[7] {
        SIGN_POSITIVE => false,
        SIGN_NEGATIVE => true,
        other => return Err(BcdError::InvalidSign(other)),
    };
    let frac: String = (8..16).map(digit).collect::<Result<_, _>>()?;
    let whole = whole.trim_start_matches('0');
    Ok(Some(Reading {
        negative,
        whole_digits: if whole.is_empty() { "0".into() } else { whole.into() },
        frac_digits: frac.trim_end_matches('0').into(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Reading {
        Reading::parse(s).unwrap()
    }

    #[test]
    fn documented_layouts() {
        assert_eq!(encode_reading(&r("0")).unwrap(), [0, 0, 0, 0x0C, 0, 0, 0, 0]);
        assert_eq!(
            encode_reading(&r("-7.25")).unwrap(),
            [0x00, 0x00, 0x00, 0x7D, 0x25, 0, 0, 0]
        );
        assert_eq!(
            encode_reading(&r("1234.5")).unwrap(),
            [0x00, 0x01, 0x23, 0x4C, 0x50, 0, 0, 0]
        );
    }

    #[test]
    fn limits() {
        assert!(encode_reading(&r("12345678")).is_err());
        assert!(encode_reading(&r("1.123456789")).is_err());
        assert!(encode_reading(&r("-9999999.99999999")).is_ok());
    }

    #[test]
    fn malformed_nibble_and_sign() {
        let mut b = encode_reading(&r("7.25")).unwrap();
        b[4] = 0x2B;
        assert_eq!(
            decode_reading(&b),
            Err(BcdError::MalformedNibble { position: 9, nibble: 0xB })
        );
        let mut b = encode_reading(&r("7")).unwrap();
        b[3] = 0x7A;
        assert_eq!(decode_reading(&b), Err(BcdError::InvalidSign(0xA)));
    }

    #[test]
    fn sentinel() {
        assert_eq!(decode_reading(&SENTINEL), Ok(None));
        assert_eq!(encode_register(None), Ok(SENTINEL));
        assert!(RegisterFile::from_reading(None).unwrap().is_sentinel());
    }

    #[test]
    fn non_canonical_input_decodes_canonical() {
        let b = encode_reading(&r("007.50")).unwrap();
        assert_eq!(decode_reading(&b).unwrap(), Some(r("7.5")));
    }
}
