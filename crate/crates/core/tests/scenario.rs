use std::path::{Path, PathBuf};

use mlsensor::scenario::{Scenario, ScenarioError, ScenarioRun};
use mlsensor::sensors::encode_reading;
use mlsensor::stimuli::Reading;
use mlsensor::vbus::{Direction, SimTime};

fn dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/scenarios")
}

fn text(name: &str) -> String {
    std::fs::read_to_string(dir().join(format!("{name}.json"))).unwrap()
}

fn run(name: &str) -> ScenarioRun {
    Scenario::parse(&text(name)).unwrap().run(&dir()).unwrap()
}

fn intervals(run: &ScenarioRun, line: &str, end: u64) -> Vec<(u64, u64)> {
    run.bus
        .trace(line)
        .unwrap()
        .high_intervals(SimTime(end))
        .iter()
        .map(|iv| (iv.start.0, iv.end.0))
        .collect()
}

#[test]
fn fixture_files_are_canonical() {
    for name in ["person", "gaze", "tap", "voice", "voice_serial", "text_reader", "gaze_voice"] {
        assert_eq!(Scenario::parse(&text(name)).unwrap().to_json(), text(name), "{name}");
    }
}

#[test]
fn pin_sensors_follow_their_scripts() {
    assert_eq!(intervals(&run("person"), "DETECT", 4000), vec![(1200, 3200)]);
    assert_eq!(intervals(&run("gaze"), "GAZE", 3000), vec![(700, 2200)]);
    let taps = intervals(&run("tap"), "TAP", 2500);
    assert_eq!(taps.len(), 3, "{taps:?}");
    for ((start, end), at) in taps.iter().zip([300, 900, 1600]) {
        assert_eq!(end - start, 200);
        assert!(start.abs_diff(at) <= 30, "{start} vs {at}");
    }
    let voice = intervals(&run("voice"), "STATE", 3000);
    assert_eq!(voice.len(), 1, "{voice:?}");
    assert!(voice[0].0.abs_diff(720) <= 40 && voice[0].1.abs_diff(2220) <= 40, "{voice:?}");
}

#[test]
fn serial_sensors_answer_polls() {
    let r = run("text_reader");
    let reads: Vec<(u64, Vec<u8>)> = r
        .bus
        .transfers()
        .iter()
        .filter(|t| t.transaction.direction == Direction::Read)
        .map(|t| (t.at.0, t.transaction.payload.clone()))
        .collect();
    assert_eq!(reads.len(), 4);
    let first = encode_reading(&Reading::parse("1234.5").unwrap()).unwrap().to_vec();
    let later = encode_reading(&Reading::parse("-7.25").unwrap()).unwrap().to_vec();
    assert_eq!(reads[0], (101, first.clone()));
    assert_eq!(reads[1], (601, first));
    assert_eq!(reads[2], (1101, later.clone()));
    assert_eq!(reads[3], (1601, later));

    let v = run("voice_serial");
    let packets: Vec<Vec<u8>> = v
        .bus
        .transfers()
        .iter()
        .map(|t| t.transaction.payload.clone())
        .filter(|p| p != &[0xFF, 0xFF])
        .collect();
    assert_eq!(packets, vec![vec![0, 0], vec![1, 1]]);
}

#[test]
fn runs_are_byte_identical_and_follow_the_seed() {
    let a = run("tap");
    let b = run("tap");
    assert_eq!(a.trace_csv(), b.trace_csv());
    assert_eq!(a.exposure_csv(), b.exposure_csv());
    let mut s = Scenario::parse(&text("tap")).unwrap();
    s.seed += 1;
    let c = s.run(&dir()).unwrap();
    // Same taps, different noise: pulses move by at most a sample or two.
    assert_eq!(intervals(&c, "TAP", 2500).len(), 3);
}

#[test]
fn malformed_scenarios_are_rejected() {
    assert!(matches!(Scenario::parse(&text("unknown_kind")), Err(ScenarioError::Parse(_))));
    let mut s = Scenario::parse(&text("tap")).unwrap();
    s.duration_ms = 0;
    assert!(matches!(s.validate(), Err(ScenarioError::Invalid(_))));
    let mut s = Scenario::parse(&text("tap")).unwrap();
    s.stimuli[0].device = "ghost".into();
    assert!(s.validate().is_err());
    let mut s = Scenario::parse(&text("tap")).unwrap();
    s.devices[0].params = Some("missing.blob".into());
    assert!(matches!(s.run(&dir()), Err(ScenarioError::Io { .. })));
    let mut s = Scenario::parse(&text("tap")).unwrap();
    s.devices[0].wiring.remove("TAP");
    assert!(matches!(s.run(&dir()), Err(ScenarioError::Devkit(_))));
}
