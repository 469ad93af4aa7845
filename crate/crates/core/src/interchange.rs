//! Canonical JSON shared by datasheets, reports, protocols and scenarios:
//! sorted keys, two-space indent, LF line ends and one trailing newline.

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

/// A document that failed to parse, with the 1-based position serde_json
/// reported.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl From<serde_json::Error> for ParseError {
    fn from(e: serde_json::Error) -> Self {
        let message = e.to_string();
        // serde_json appends " at line L column C"; the fields carry that.
        let message = match message.rfind(" at line ") {
            Some(i) => message[..i].to_string(),
            None => message,
        };
        ParseError {
            line: e.line(),
            column: e.column(),
            message,
        }
    }
}

pub fn to_canonical<T: Serialize + ?Sized>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("interchange types serialize to JSON");
    let mut text = serde_json::to_string_pretty(&value).expect("JSON values always print");
    text.push('\n');
    text
}

/// Re-renders any JSON document in canonical form.
pub fn canonicalize(text: &str) -> Result<String, ParseError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    Ok(to_canonical(&value))
}

pub fn from_str<T: DeserializeOwned>(text: &str) -> Result<T, ParseError> {
    Ok(serde_json::from_str(text)?)
}
