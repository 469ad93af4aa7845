//! Machine-readable ML sensor datasheets (`.mlsd.json`).
//!
//! Ten sections: the six of a traditional sensor datasheet plus model
//! characteristics, dataset nutrition, a privacy and security label, and
//! environmental impact. Documents are JSON; the canonical form has sorted
//! keys, two-space indent and a trailing newline, and [`render_machine`]
//! always produces it.
//!
//! ```
//! use mlsensor::datasheet::{parse, validate, ViolationCode};
//!
//! let ds = parse("").unwrap();
//! let v = validate(&ds);
//! assert_eq!(v.len(), 10);
//! assert!(v.iter().all(|v| v.code == ViolationCode::MissingSection));
//! ```

mod check;
mod render;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conformance::{Axis, OperatingEnvelope};
use crate::devkit::{DeviceTiming, InterfaceDecl, PinRole, SensorKind};
use crate::interchange::{self, ParseError};
use crate::stimuli::Modality;
use crate::vbus::Channel;

pub use check::{attach_performance, cross_check, Finding, FindingCode};
pub use render::{render, render_human, render_machine, RenderMode};

pub const SCHEMA_VERSION: u32 = 1;
pub const FILE_EXTENSION: &str = ".mlsd.json";
pub const NETWORK_NONE: &str = "none";
/// Update policies compatible with a sealed sensor.
pub const ALLOWED_UPDATE_POLICIES: [&str; 2] = ["none", "factory_only"];
pub const UNREPORTED: &str = "unreported";

/// Section keys in document order, with their printed titles.
pub const SECTIONS: [(&str, &str); 10] = [
    ("description", "Description, Features, and Use Cases"),
    ("compliance", "Compliance"),
    ("model_characteristics", "Model Characteristics"),
    ("dataset_nutrition", "Dataset Nutrition Label"),
    ("privacy_security_label", "IoT Security & Privacy Label"),
    ("environmental_impact", "Environmental Impact"),
    ("end_to_end_performance", "End-to-End Performance Analysis"),
    ("form_factor", "Diagrams and Form Factor"),
    ("hardware_characteristics", "Hardware Characteristics"),
    ("comm_spec_pinout", "Communication Specification and Pinout"),
];

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Datasheet {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<Description>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compliance: Option<Compliance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_characteristics: Option<ModelCharacteristics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_nutrition: Option<DatasetNutrition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub privacy_security_label: Option<PrivacySecurityLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub environmental_impact: Option<EnvironmentalImpact>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_to_end_performance: Option<EndToEndPerformance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form_factor: Option<FormFactor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hardware_characteristics: Option<HardwareCharacteristics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comm_spec_pinout: Option<CommSpecPinout>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Description {
    pub product: String,
    pub sensor_kind: SensorKind,
    /// One or two paragraphs.
    pub summary: String,
    pub features: Vec<String>,
    pub use_cases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Compliance {
    /// Free-form marks such as `RoHS` or `GDPR`.
    pub marks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelCharacteristics {
    pub architecture: String,
    pub input_modality: Modality,
    pub input_shape: Vec<u32>,
    pub train_set_size: u64,
    pub test_set_size: u64,
    pub open_source: bool,
    /// Third party that validated the figures, or `none`.
    pub validation_authority: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetNutrition {
    pub provenance: String,
    pub licensing: String,
    pub ethical_review: bool,
    pub known_skews: Vec<String>,
}

/// One host-visible output. `channel` is a pin name or `I2C@0xNN`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExposedData {
    pub channel: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacySecurityLabel {
    /// What the device senses internally.
    pub data_collected: Vec<String>,
    /// What leaves the device.
    pub data_exposed: Vec<ExposedData>,
    pub update_policy: String,
    pub network_capability: String,
    pub external_audit: String,
}

impl PrivacySecurityLabel {
    pub fn discloses(&self, channel: &Channel) -> bool {
        let label = channel.label();
        self.data_exposed.iter().any(|d| d.channel == label)
    }
}

/// Figures may be given as `unreported`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentalImpact {
    pub training_footprint: String,
    pub inference_energy: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSummary {
    pub levels: Vec<f64>,
    pub tpr: f64,
    pub fpr: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_mean_ms: Option<f64>,
}

/// What [`attach_performance`] copies out of a conformance report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerformanceRecord {
    pub tool_version: String,
    pub seed: u64,
    pub trials_per_cell: usize,
    pub latency_budget_ms: u64,
    pub axes: Vec<Axis>,
    pub cells: Vec<CellSummary>,
    pub envelope: Option<OperatingEnvelope>,
    /// CRC-32 of the canonical report, as 8 hex digits.
    pub report_crc32: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndToEndPerformance {
    pub summary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conformance: Option<PerformanceRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormFactor {
    /// Width, height, depth.
    pub dimensions_mm: Vec<f64>,
    pub mounting: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareCharacteristics {
    pub operating_temperature_c: Range,
    pub power_mw: f64,
    pub input_voltage_v: Range,
    pub esd_rating: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommSpecPinout {
    pub interface: InterfaceDecl,
    pub timing: DeviceTiming,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    MissingSection,
    MissingField,
    Inconsistent,
    ForbiddenValue,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::MissingSection => "MISSING_SECTION",
            ViolationCode::MissingField => "MISSING_FIELD",
            ViolationCode::Inconsistent => "INCONSISTENT",
            ViolationCode::ForbiddenValue => "FORBIDDEN_VALUE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub section: String,
    pub code: ViolationCode,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.code.as_str(), self.section, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ParseErrorCode {
    Syntax,
    DuplicateSection,
    DuplicateField,
    UnsupportedSchema,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{code:?} at {line}:{column}: {message}")]
pub struct DatasheetParseError {
    pub code: ParseErrorCode,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasheetError {
    #[error("INVALID_DATASHEET: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("KIND_MISMATCH: datasheet is for {datasheet}, report is for {report}")]
    KindMismatch {
        datasheet: SensorKind,
        report: SensorKind,
    },
}

impl Datasheet {
    /// A document with no sections.
    pub fn empty() -> Self {
        Datasheet {
            schema: SCHEMA_VERSION,
            ..Default::default()
        }
    }

    pub fn sensor_kind(&self) -> Option<SensorKind> {
        self.description.as_ref().map(|d| d.sensor_kind)
    }

    /// Which of the ten sections are present, in document order.
    pub fn present_sections(&self) -> Vec<&'static str> {
        let flags = [
            self.description.is_some(),
            self.compliance.is_some(),
            self.model_characteristics.is_some(),
            self.dataset_nutrition.is_some(),
            self.privacy_security_label.is_some(),
            self.environmental_impact.is_some(),
            self.end_to_end_performance.is_some(),
            self.form_factor.is_some(),
            self.hardware_characteristics.is_some(),
            self.comm_spec_pinout.is_some(),
        ];
        SECTIONS
            .iter()
            .zip(flags)
            .filter_map(|((key, _), present)| present.then_some(*key))
            .collect()
    }
}

/// Parses a document. Whitespace-only input is an empty datasheet.
pub fn parse(document: &str) -> Result<Datasheet, Vec<DatasheetParseError>> {
    if document.trim().is_empty() {
        return Ok(Datasheet::empty());
    }
    let ds: Datasheet = interchange::from_str(document).map_err(|e| vec![classify(e)])?;
    if ds.schema != SCHEMA_VERSION {
        return Err(vec![DatasheetParseError {
            code: ParseErrorCode::UnsupportedSchema,
            line: 1,
            column: 1,
            message: format!("schema {} is not supported (expected {SCHEMA_VERSION})", ds.schema),
        }]);
    }
    Ok(ds)
}

fn classify(e: ParseError) -> DatasheetParseError {
    let duplicate = e
        .message
        .strip_prefix("duplicate field `")
        .and_then(|rest| rest.split('`').next());
    let code = match duplicate {
        Some(name) if SECTIONS.iter().any(|(k, _)| *k == name) => ParseErrorCode::DuplicateSection,
        Some(_) => ParseErrorCode::DuplicateField,
        None => ParseErrorCode::Syntax,
    };
    DatasheetParseError {
        code,
        line: e.line,
        column: e.column,
        message: e.message,
    }
}

/// Structural checks, ordered by section (document order) then code.
pub fn validate(ds: &Datasheet) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut v = |section: &str, code, message: String| {
        out.push(Violation {
            section: section.to_string(),
            code,
            message,
        })
    };
    let present = ds.present_sections();
    for (key, title) in SECTIONS {
        if !present.contains(&key) {
            v(key, ViolationCode::MissingSection, format!("{title} section is absent"));
        }
    }
    let blank = |s: &str| s.trim().is_empty();

    if let Some(d) = &ds.description {
        for (field, empty) in [
            ("product", blank(&d.product)),
            ("summary", blank(&d.summary)),
            ("features", d.features.is_empty()),
            ("use_cases", d.use_cases.is_empty()),
        ] {
            if empty {
                v("description", ViolationCode::MissingField, format!("`{field}` is empty"));
            }
        }
    }
    if let Some(c) = &ds.compliance {
        if c.marks.is_empty() || c.marks.iter().any(|m| blank(m)) {
            v("compliance", ViolationCode::MissingField, "`marks` is empty".into());
        }
    }
    if let Some(m) = &ds.model_characteristics {
        for (field, empty) in [
            ("architecture", blank(&m.architecture)),
            ("input_shape", m.input_shape.is_empty()),
            ("validation_authority", blank(&m.validation_authority)),
        ] {
            if empty {
                v("model_characteristics", ViolationCode::MissingField, format!("`{field}` is empty"));
            }
        }
        if let Some(kind) = ds.sensor_kind() {
            if kind.modality() != m.input_modality {
                v(
                    "model_characteristics",
                    ViolationCode::Inconsistent,
                    format!("{kind} sensors take {} input, not {}", kind.modality(), m.input_modality),
                );
            }
        }
    }
    if let Some(n) = &ds.dataset_nutrition {
        for (field, empty) in [("provenance", blank(&n.provenance)), ("licensing", blank(&n.licensing))] {
            if empty {
                v("dataset_nutrition", ViolationCode::MissingField, format!("`{field}` is empty"));
            }
        }
    }
    if let Some(p) = &ds.privacy_security_label {
        let s = "privacy_security_label";
        for (field, empty) in [
            ("data_collected", p.data_collected.is_empty()),
            ("data_exposed", p.data_exposed.is_empty()),
            ("external_audit", blank(&p.external_audit)),
        ] {
            if empty {
                v(s, ViolationCode::MissingField, format!("`{field}` is empty"));
            }
        }
        if p.network_capability != NETWORK_NONE {
            v(
                s,
                ViolationCode::ForbiddenValue,
                format!(
                    "network_capability must be \"none\", found {:?}",
                    p.network_capability
                ),
            );
        }
        if !ALLOWED_UPDATE_POLICIES.contains(&p.update_policy.as_str()) {
            v(
                s,
                ViolationCode::ForbiddenValue,
                format!(
                    "update_policy {:?} allows field updates; expected one of {ALLOWED_UPDATE_POLICIES:?}",
                    p.update_policy
                ),
            );
        }
        if let Some(pinout) = &ds.comm_spec_pinout {
            for channel in declared_channels(&pinout.interface) {
                if !p.data_exposed.iter().any(|d| d.channel == channel) {
                    v(
                        s,
                        ViolationCode::Inconsistent,
                        format!("pinout output {channel} is not listed in data_exposed"),
                    );
                }
            }
        }
    }
    if let Some(e) = &ds.environmental_impact {
        for (field, empty) in [
            ("training_footprint", blank(&e.training_footprint)),
            ("inference_energy", blank(&e.inference_energy)),
        ] {
            if empty {
                v("environmental_impact", ViolationCode::MissingField, format!("`{field}` is empty"));
            }
        }
    }
    if let Some(p) = &ds.end_to_end_performance {
        let s = "end_to_end_performance";
        if blank(&p.summary) {
            v(s, ViolationCode::MissingField, "`summary` is empty".into());
        }
        if let Some(r) = &p.conformance {
            let expected: usize = r.axes.iter().map(|a| a.levels.len()).product();
            if r.cells.len() != expected || r.cells.iter().any(|c| c.levels.len() != r.axes.len()) {
                v(
                    s,
                    ViolationCode::Inconsistent,
                    format!("{} cells do not cover the {expected}-cell grid", r.cells.len()),
                );
            }
            if r.cells.iter().any(|c| !(0.0..=1.0).contains(&c.tpr) || !(0.0..=1.0).contains(&c.fpr)) {
                v(s, ViolationCode::Inconsistent, "rates must lie in [0, 1]".into());
            }
        }
    }
    if let Some(f) = &ds.form_factor {
        if f.dimensions_mm.len() != 3 || f.dimensions_mm.iter().any(|d| !positive(*d)) {
            v(
                "form_factor",
                ViolationCode::Inconsistent,
                "dimensions_mm must be three positive lengths".into(),
            );
        }
        if blank(&f.mounting) {
            v("form_factor", ViolationCode::MissingField, "`mounting` is empty".into());
        }
    }
    if let Some(h) = &ds.hardware_characteristics {
        let s = "hardware_characteristics";
        for (name, r) in [
            ("operating_temperature_c", h.operating_temperature_c),
            ("input_voltage_v", h.input_voltage_v),
        ] {
            if r.min.is_nan() || r.max.is_nan() || r.min > r.max {
                v(s, ViolationCode::Inconsistent, format!("{name} has min above max"));
            }
        }
        if !positive(h.power_mw) {
            v(s, ViolationCode::Inconsistent, "power_mw must be positive".into());
        }
        if blank(&h.esd_rating) {
            v(s, ViolationCode::MissingField, "`esd_rating` is empty".into());
        }
    }
    if let Some(c) = &ds.comm_spec_pinout {
        let s = "comm_spec_pinout";
        if let Err(e) = c.interface.validate() {
            v(s, ViolationCode::Inconsistent, e.to_string());
        }
        for role in [PinRole::Power, PinRole::Ground] {
            if !c.interface.pins.iter().any(|p| p.role == role) {
                v(s, ViolationCode::Inconsistent, format!("no {role:?} pin declared"));
            }
        }
        if c.interface.signal_pins().next().is_none() && c.interface.serial.is_none() {
            v(s, ViolationCode::Inconsistent, "no output pin or serial channel".into());
        }
        if c.timing.cadence_ms == 0 {
            v(s, ViolationCode::Inconsistent, "timing.cadence_ms must be positive".into());
        }
    }
    out.sort_by_key(|x| {
        let idx = SECTIONS.iter().position(|(k, _)| *k == x.section);
        (idx, x.code)
    });
    out
}

/// False for NaN too.
fn positive(x: f64) -> bool {
    x > 0.0
}

/// Privacy-label names of every output the interface declares.
fn declared_channels(decl: &InterfaceDecl) -> Vec<String> {
    let mut out: Vec<String> = decl.signal_pins().map(|p| p.name.clone()).collect();
    if let Some(s) = &decl.serial {
        out.push(Channel::Serial { address: s.address }.label());
    }
    out
}
