use std::path::{Path, PathBuf};

use mlsensor::conformance::{run, Axis, AxisKind, TestProtocol};
use mlsensor::datasheet::{
    attach_performance, cross_check, parse, render_human, render_machine, validate, Datasheet,
    DatasheetError, FindingCode, ViolationCode, SECTIONS,
};
use mlsensor::devkit::{SensorDevice, SensorKind};
use mlsensor::scenario::Scenario;
use mlsensor::sensors::{build_device, default_blob, DeviceConfig};
use mlsensor::vbus::{ExposureRecord, SimTime};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn load(name: &str) -> (String, Datasheet) {
    let text = std::fs::read_to_string(fixtures().join(format!("{name}.mlsd.json"))).unwrap();
    let ds = parse(&text).unwrap_or_else(|e| panic!("{name}: {e:?}"));
    (text, ds)
}

const HONEST: [&str; 5] = ["person", "gaze", "tap", "voice", "text_reader"];
const BROKEN: [&str; 3] = ["missing_nutrition", "wifi", "pinout_mismatch"];

fn device(kind: SensorKind) -> SensorDevice {
    build_device(kind, &DeviceConfig::default(), &default_blob(kind)).unwrap()
}

#[test]
fn every_fixture_is_in_canonical_form() {
    for name in HONEST.iter().chain(&BROKEN) {
        let (text, ds) = load(name);
        assert_eq!(render_machine(&ds), text, "{name}");
        assert_eq!(parse(&render_machine(&ds)).unwrap(), ds, "{name}");
    }
}

#[test]
fn honest_fixtures_are_complete() {
    for name in HONEST {
        let (_, ds) = load(name);
        assert_eq!(ds.present_sections().len(), 10, "{name}");
        assert_eq!(validate(&ds), vec![], "{name}");
        let page = render_human(&ds).unwrap();
        for (_, title) in SECTIONS {
            assert!(page.contains(&format!("## {title}")), "{name}: {title}");
        }
    }
}

#[test]
fn broken_fixtures_fail_for_exactly_one_reason() {
    let (_, ds) = load("missing_nutrition");
    let v = validate(&ds);
    assert_eq!(v.len(), 1, "{v:?}");
    assert_eq!((v[0].section.as_str(), v[0].code), ("dataset_nutrition", ViolationCode::MissingSection));
    assert!(matches!(render_human(&ds), Err(DatasheetError::Invalid(_))));

    let (_, ds) = load("wifi");
    let v = validate(&ds);
    assert_eq!(v.len(), 1, "{v:?}");
    assert_eq!(v[0].code, ViolationCode::ForbiddenValue);

    let (_, ds) = load("pinout_mismatch");
    assert_eq!(validate(&ds), vec![]);
    let f = cross_check(&ds, &device(SensorKind::Person), &[]).unwrap();
    assert_eq!(f.iter().map(|f| f.code).collect::<Vec<_>>(), vec![FindingCode::PinoutMismatch]);
}

#[test]
fn field_updates_are_forbidden() {
    let (_, mut ds) = load("person");
    ds.privacy_security_label.as_mut().unwrap().update_policy = "ota".into();
    let v = validate(&ds);
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].code, ViolationCode::ForbiddenValue);
}

fn scenario_log(name: &str, device_id: &str) -> Vec<ExposureRecord> {
    let dir = fixtures().join("scenarios");
    let text = std::fs::read_to_string(dir.join(format!("{name}.json"))).unwrap();
    let run = Scenario::parse(&text).unwrap().run(&dir).unwrap();
    run.exposure_log(device_id).unwrap()
}

#[test]
fn honest_fixtures_cross_check_clean_against_real_runs() {
    let runs = [
        ("person", "hall"),
        ("gaze", "desk"),
        ("tap", "knock"),
        ("voice", "switch"),
        ("text_reader", "meter"),
    ];
    for (name, id) in runs {
        let (_, ds) = load(name);
        let log = scenario_log(name, id);
        assert!(!log.is_empty(), "{name} produced no host-visible output");
        let kind = ds.sensor_kind().unwrap();
        assert_eq!(cross_check(&ds, &device(kind), &log).unwrap(), vec![], "{name}");
        // A clean check means every observed channel is on the label.
        let label = ds.privacy_security_label.as_ref().unwrap();
        assert!(log.iter().all(|r| label.discloses(&r.channel)), "{name}");
    }
}

#[test]
fn cross_check_reports_each_kind_of_drift() {
    let (_, tap) = load("tap");
    let config = DeviceConfig { pulse_ms: Some(250), ..Default::default() };
    let slow = build_device(SensorKind::Tap, &config, &default_blob(SensorKind::Tap)).unwrap();
    let f = cross_check(&tap, &slow, &[]).unwrap();
    assert_eq!(f.len(), 1);
    assert_eq!(f[0].code, FindingCode::TimingMismatch);
    assert!(f[0].message.contains("pulse_ms"), "{}", f[0]);

    let (_, person) = load("person");
    let leak = [ExposureRecord::serial(SimTime(40), 0x29, 8)];
    let codes: Vec<_> = cross_check(&person, &device(SensorKind::Person), &leak)
        .unwrap()
        .into_iter()
        .map(|f| f.code)
        .collect();
    assert_eq!(codes, vec![FindingCode::AuditFinding, FindingCode::UndisclosedExposure]);

    let codes: Vec<_> = cross_check(&person, &device(SensorKind::Gaze), &[])
        .unwrap()
        .into_iter()
        .map(|f| f.code)
        .collect();
    assert!(codes.contains(&FindingCode::KindMismatch), "{codes:?}");

    let (_, wifi) = load("wifi");
    assert!(cross_check(&wifi, &device(SensorKind::Person), &[]).is_err());
}

#[test]
fn attaching_performance_keeps_the_sheet_valid() {
    let (_, ds) = load("person");
    let mut p = TestProtocol::new(
        SensorKind::Person,
        Axis::new(AxisKind::DistanceM, [1.0, 3.0]),
        Axis::new(AxisKind::Lux, [200.0, 800.0]),
        4,
    );
    p.trials_per_cell = 10;
    let factory = || build_device(SensorKind::Person, &DeviceConfig::default(), &default_blob(SensorKind::Person));
    let report = run(factory, &p).unwrap();
    let with = attach_performance(&ds, &report).unwrap();
    assert_eq!(validate(&with), vec![]);
    let section = with.end_to_end_performance.as_ref().unwrap();
    let record = section.conformance.as_ref().unwrap();
    assert_eq!(record.cells.len(), 4);
    assert_eq!(record.envelope, report.envelope);
    assert_eq!(record.report_crc32.len(), 8);
    if report.envelope.is_some() {
        assert!(section.summary.contains("distance_m"), "{}", section.summary);
    }
    assert_eq!(parse(&render_machine(&with)).unwrap(), with);

    // A second attach replaces the first.
    let mut p2 = p.clone();
    p2.seed = 5;
    let again = attach_performance(&with, &run(factory, &p2).unwrap()).unwrap();
    assert_eq!(again.end_to_end_performance.unwrap().conformance.unwrap().seed, 5);

    let mut t = TestProtocol::new(
        SensorKind::Tap,
        Axis::new(AxisKind::NoiseSigma, [0.02]),
        Axis::new(AxisKind::DistractorRate, [0.0]),
        1,
    );
    t.trials_per_cell = 10;
    let tap_factory = || build_device(SensorKind::Tap, &DeviceConfig::default(), &default_blob(SensorKind::Tap));
    let tap_report = run(tap_factory, &t).unwrap();
    assert!(matches!(
        attach_performance(&ds, &tap_report),
        Err(DatasheetError::KindMismatch { .. })
    ));
}

#[test]
fn empty_document_lacks_every_section() {
    let v = validate(&parse("  \n").unwrap());
    assert_eq!(v.len(), 10);
    assert!(v.iter().all(|v| v.code == ViolationCode::MissingSection));
}
