use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{validate, CellSummary, Datasheet, DatasheetError, EndToEndPerformance, PerformanceRecord};
use crate::conformance::ConformanceReport;
use crate::devkit::{audit, declared_surface, InterfaceDecl, SensorDevice};
use crate::vbus::ExposureRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FindingCode {
    KindMismatch,
    PinoutMismatch,
    TimingMismatch,
    AuditFinding,
    UndisclosedExposure,
}

impl FindingCode {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingCode::KindMismatch => "KIND_MISMATCH",
            FindingCode::PinoutMismatch => "PINOUT_MISMATCH",
            FindingCode::TimingMismatch => "TIMING_MISMATCH",
            FindingCode::AuditFinding => "AUDIT_FINDING",
            FindingCode::UndisclosedExposure => "UNDISCLOSED_EXPOSURE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub code: FindingCode,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code.as_str(), self.message)
    }
}

fn describe(decl: &InterfaceDecl) -> String {
    let pins: Vec<String> = decl
        .pins
        .iter()
        .map(|p| format!("{}:{:?}", p.name, p.role))
        .collect();
    match &decl.serial {
        Some(s) => format!(
            "[{}] + I2C 0x{:02X} ({} bytes, {})",
            pins.join(" "),
            s.address,
            s.register_map_len,
            s.packet_spec_id
        ),
        None => format!("[{}], no serial", pins.join(" ")),
    }
}

/// Compares a valid datasheet with a live device and the exposure log of
/// a run. The datasheet's pinout is the reference for the audit.
pub fn cross_check(
    ds: &Datasheet,
    device: &SensorDevice,
    run_log: &[ExposureRecord],
) -> Result<Vec<Finding>, DatasheetError> {
    let violations = validate(ds);
    if !violations.is_empty() {
        return Err(DatasheetError::Invalid(violations));
    }
    let mut out = Vec::new();
    let mut f = |code, message: String| out.push(Finding { code, message });
    let kind = ds.sensor_kind().expect("validated");
    if kind != device.kind() {
        f(
            FindingCode::KindMismatch,
            format!("datasheet describes {kind}, device is {}", device.kind()),
        );
    }
    let pinout = ds.comm_spec_pinout.as_ref().expect("validated");
    let actual = declared_surface(device);
    if pinout.interface != actual {
        f(
            FindingCode::PinoutMismatch,
            format!(
                "datasheet declares {}, device exposes {}",
                describe(&pinout.interface),
                describe(&actual)
            ),
        );
    }
    let timing = device.timing();
    if pinout.timing != timing {
        let ds_json = serde_json::to_value(&pinout.timing).expect("timing serializes");
        let dev_json = serde_json::to_value(&timing).expect("timing serializes");
        let keys: BTreeSet<&String> = ds_json
            .as_object()
            .into_iter()
            .chain(dev_json.as_object())
            .flat_map(|m| m.keys())
            .collect();
        let diffs: Vec<String> = keys
            .into_iter()
            .filter(|k| ds_json.get(*k) != dev_json.get(*k))
            .map(|k| {
                let show = |v: Option<&serde_json::Value>| v.map_or("unset".into(), |v| v.to_string());
                format!("{k} datasheet {} vs device {}", show(ds_json.get(k)), show(dev_json.get(k)))
            })
            .collect();
        f(FindingCode::TimingMismatch, diffs.join(", "));
    }
    for finding in audit(run_log, &pinout.interface).findings {
        f(FindingCode::AuditFinding, finding.to_string());
    }
    let label = ds.privacy_security_label.as_ref().expect("validated");
    let observed: BTreeSet<_> = run_log.iter().map(|r| &r.channel).collect();
    for channel in observed {
        if !label.discloses(channel) {
            f(
                FindingCode::UndisclosedExposure,
                format!("{} was observed but is not in data_exposed", channel.label()),
            );
        }
    }
    Ok(out)
}

/// Replaces the end-to-end section with a summary of `report`.
pub fn attach_performance(
    ds: &Datasheet,
    report: &ConformanceReport,
) -> Result<Datasheet, DatasheetError> {
    let kind = report.protocol.sensor_kind;
    match ds.sensor_kind() {
        Some(k) if k == kind => {}
        Some(k) => {
            return Err(DatasheetError::KindMismatch {
                datasheet: k,
                report: kind,
            })
        }
        None => return Err(DatasheetError::Invalid(validate(ds))),
    }
    let record = PerformanceRecord {
        tool_version: report.tool_version.clone(),
        seed: report.protocol.seed,
        trials_per_cell: report.protocol.trials_per_cell,
        latency_budget_ms: report.protocol.latency_budget_ms,
        axes: report.protocol.axes.clone(),
        cells: report
            .cells
            .iter()
            .map(|c| CellSummary {
                levels: c.levels.clone(),
                tpr: c.tpr,
                fpr: c.fpr,
                latency_mean_ms: c.latency_mean_ms,
            })
            .collect(),
        envelope: report.envelope.clone(),
        report_crc32: format!("{:08x}", crc32fast::hash(report.to_json().as_bytes())),
    };
    let summary = match &report.envelope {
        Some(env) => {
            let bounds: Vec<String> = env.bounds.iter().map(|(k, v)| format!("{k} = {v}")).collect();
            format!(
                "Meets TPR ≥ {} and FPR ≤ {} for all tested conditions within {}.",
                env.tpr_min,
                env.fpr_max,
                bounds.join(", ")
            )
        }
        None => "No tested condition meets the default TPR and FPR thresholds.".to_string(),
    };
    let mut out = ds.clone();
    out.end_to_end_performance = Some(EndToEndPerformance {
        summary,
        conformance: Some(record),
    });
    Ok(out)
}
