use std::fmt::Write;

use super::{validate, Datasheet, DatasheetError, SECTIONS};
use crate::interchange;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderMode {
    Machine,
    Human,
}

/// Canonical JSON. Works for incomplete datasheets too, so broken
/// documents round-trip.
pub fn render_machine(ds: &Datasheet) -> String {
    interchange::to_canonical(ds)
}

/// A one-page markdown rendering. Only valid datasheets are published.
pub fn render_human(ds: &Datasheet) -> Result<String, DatasheetError> {
    let violations = validate(ds);
    if !violations.is_empty() {
        return Err(DatasheetError::Invalid(violations));
    }
    let d = ds.description.as_ref().expect("validated");
    let mut out = String::new();
    let mut w = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    w(format!("# {} ({} ML sensor)", d.product, d.sensor_kind));
    let heading = |i: usize| format!("\n## {}\n", SECTIONS[i].1);

    w(heading(0));
    w(d.summary.clone());
    w("\nFeatures:\n".into());
    d.features.iter().for_each(|f| w(format!("- {f}")));
    w("\nUse cases:\n".into());
    d.use_cases.iter().for_each(|u| w(format!("- {u}")));

    w(heading(1));
    w(ds.compliance.as_ref().expect("validated").marks.join(", "));

    let m = ds.model_characteristics.as_ref().expect("validated");
    w(heading(2));
    w(format!("- Architecture: {}", m.architecture));
    let shape: Vec<String> = m.input_shape.iter().map(u32::to_string).collect();
    w(format!("- Input: {} {}", m.input_modality, shape.join("×")));
    w(format!("- Training set: {} samples; test set: {} samples", m.train_set_size, m.test_set_size));
    w(format!("- Open source: {}", yes_no(m.open_source)));
    w(format!("- Validated by: {}", m.validation_authority));

    let n = ds.dataset_nutrition.as_ref().expect("validated");
    w(heading(3));
    w(format!("- Provenance: {}", n.provenance));
    w(format!("- Licensing: {}", n.licensing));
    w(format!("- Ethical review: {}", yes_no(n.ethical_review)));
    for s in &n.known_skews {
        w(format!("- Known skew: {s}"));
    }

    let p = ds.privacy_security_label.as_ref().expect("validated");
    w(heading(4));
    w(format!("- Data collected: {}", p.data_collected.join(", ")));
    for e in &p.data_exposed {
        w(format!("- Exposed on {}: {}", e.channel, e.description));
    }
    w(format!("- Updates: {}", p.update_policy));
    w(format!("- Network: {}", p.network_capability));
    w(format!("- External audit: {}", p.external_audit));

    let e = ds.environmental_impact.as_ref().expect("validated");
    w(heading(5));
    w(format!("- Training footprint: {}", e.training_footprint));
    w(format!("- Energy per inference: {}", e.inference_energy));

    let perf = ds.end_to_end_performance.as_ref().expect("validated");
    w(heading(6));
    w(perf.summary.clone());
    if let Some(r) = &perf.conformance {
        let names: Vec<&str> = r.axes.iter().map(|a| a.kind.name()).collect();
        w(String::new());
        w(format!("| {} | {} | TPR | FPR |", names[0], names[1]));
        w("|---|---|---|---|".into());
        for c in &r.cells {
            w(format!(
                "| {} | {} | {:.2} | {:.2} |",
                c.levels[0], c.levels[1], c.tpr, c.fpr
            ));
        }
        w(format!(
            "\n{} trials per cell, seed {}, report CRC-32 {}.",
            r.trials_per_cell, r.seed, r.report_crc32
        ));
    }

    let f = ds.form_factor.as_ref().expect("validated");
    w(heading(7));
    let dims: Vec<String> = f.dimensions_mm.iter().map(|d| d.to_string()).collect();
    w(format!("- Dimensions: {} mm", dims.join(" × ")));
    w(format!("- Mounting: {}", f.mounting));

    let h = ds.hardware_characteristics.as_ref().expect("validated");
    w(heading(8));
    w(format!(
        "- Operating temperature: {} to {} °C",
        h.operating_temperature_c.min, h.operating_temperature_c.max
    ));
    w(format!("- Power: {} mW", h.power_mw));
    w(format!(
        "- Input voltage: {} to {} V",
        h.input_voltage_v.min, h.input_voltage_v.max
    ));
    w(format!("- ESD rating: {}", h.esd_rating));

    let c = ds.comm_spec_pinout.as_ref().expect("validated");
    w(heading(9));
    w("| pin | role |".into());
    w("|---|---|".into());
    for pin in &c.interface.pins {
        w(format!("| {} | {:?} |", pin.name, pin.role));
    }
    if let Some(s) = &c.interface.serial {
        w(format!(
            "\nI2C address 0x{:02X}, {} register bytes, packet format `{}`.",
            s.address, s.register_map_len, s.packet_spec_id
        ));
    }
    w(String::new());
    for o in &c.interface.declared_outputs {
        w(format!("- {o}"));
    }
    let mut timing = format!("\nTiming: cadence {} ms", c.timing.cadence_ms);
    let t = &c.timing;
    for (name, value) in [
        ("frame period", t.frame_period_ms.map(|v| format!("{v} ms"))),
        ("rise", t.rise_frames.map(|v| format!("{v} frames"))),
        ("fall", t.fall_frames.map(|v| format!("{v} frames"))),
        ("pulse", t.pulse_ms.map(|v| format!("{v} ms"))),
        ("refresh", t.refresh_period_ms.map(|v| format!("{v} ms"))),
        ("queue depth", t.queue_depth.map(|v| v.to_string())),
    ] {
        if let Some(value) = value {
            let _ = write!(timing, ", {name} {value}");
        }
    }
    timing.push('.');
    w(timing);
    Ok(out)
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn render(ds: &Datasheet, mode: RenderMode) -> Result<String, DatasheetError> {
    match mode {
        RenderMode::Machine => Ok(render_machine(ds)),
        RenderMode::Human => render_human(ds),
    }
}
