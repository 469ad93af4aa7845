use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(rel: &str) -> String {
    root().join("fixtures").join(rel).display().to_string()
}

fn mlsensor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlsensor")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn datasheet_validate_exit_codes() {
    let ok = mlsensor(&["datasheet", "validate", &fixture("person.mlsd.json")]);
    assert_eq!(code(&ok), 0, "{}", stdout(&ok));

    let missing = mlsensor(&["datasheet", "validate", &fixture("missing_nutrition.mlsd.json")]);
    assert_eq!(code(&missing), 1);
    let lines: Vec<String> = stdout(&missing).lines().map(String::from).collect();
    assert_eq!(lines.len(), 1);
    assert!(lines[0].starts_with("MISSING_SECTION dataset_nutrition"), "{lines:?}");

    let wifi = mlsensor(&["datasheet", "validate", &fixture("wifi.mlsd.json")]);
    assert_eq!(code(&wifi), 1);
    assert!(stdout(&wifi).starts_with("FORBIDDEN_VALUE"));

    let absent = mlsensor(&["datasheet", "validate", "/nonexistent.mlsd.json"]);
    assert_eq!(code(&absent), 2);
    assert!(!absent.stderr.is_empty());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&mlsensor(&[])), 2);
    assert_eq!(code(&mlsensor(&["frobnicate"])), 2);
    assert_eq!(code(&mlsensor(&["simulate", "--format", "xml", "x.json"])), 2);
    let out = mlsensor(&["simulate", &fixture("scenarios/unknown_kind.json")]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("LIDAR"));
}

fn simulate_into(scenario: &str, dir: &Path, extra: &[&str]) {
    let mut args = vec!["simulate", scenario, "--quiet", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = mlsensor(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
}

const LOGS: [&str; 3] = ["trace.csv", "i2c.csv", "exposure.csv"];

#[test]
fn simulate_matches_golden_files() {
    for name in ["tap", "text_reader", "voice_serial", "gaze_voice"] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let scenario = fixture(&format!("scenarios/{name}.json"));
        simulate_into(&scenario, a.path(), &[]);
        simulate_into(&scenario, b.path(), &[]);
        for log in LOGS {
            let first = std::fs::read(a.path().join(log)).unwrap();
            assert_eq!(first, std::fs::read(b.path().join(log)).unwrap(), "{name}/{log}");
            let golden = std::fs::read(root().join("fixtures/golden").join(name).join(log)).unwrap();
            assert_eq!(first, golden, "{name}/{log}");
        }
    }
}

#[test]
fn json_logs_and_seed_override() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let scenario = fixture("scenarios/person.json");
    simulate_into(&scenario, a.path(), &["--format", "json"]);
    simulate_into(&scenario, b.path(), &["--format", "json", "--seed", "8"]);
    let read = |d: &Path, f: &str| std::fs::read_to_string(d.join(f)).unwrap();
    for f in ["trace.json", "i2c.json", "exposure.json"] {
        let v: serde_json::Value = serde_json::from_str(&read(a.path(), f)).unwrap();
        assert!(!v.is_null());
    }
    let trace: serde_json::Value = serde_json::from_str(&read(a.path(), "trace.json")).unwrap();
    assert_eq!(trace["DETECT"]["transitions"], serde_json::json!([[1200, 1], [3200, 0]]));
    // The scene timing is scripted, so only the noise differs; the pin does not.
    assert_eq!(read(a.path(), "trace.json"), read(b.path(), "trace.json"));
}

#[test]
fn conformance_writes_a_reproducible_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = |n: &str| dir.path().join(n).display().to_string();
    let protocol = fixture("protocols/tap_quick.cfp.json");
    for name in ["a.json", "b.json"] {
        assert_eq!(code(&mlsensor(&["conformance", &protocol, "--out", &path(name), "-q"])), 0);
    }
    assert_eq!(code(&mlsensor(&["conformance", &protocol, "--seed", "6", "--out", &path("c.json"), "-q"])), 0);
    let read = |n: &str| std::fs::read_to_string(path(n)).unwrap();
    assert_eq!(read("a.json"), read("b.json"));
    assert_ne!(read("a.json"), read("c.json"));
    let report = mlsensor::conformance::ConformanceReport::from_json(&read("a.json")).unwrap();
    assert_eq!(report.cells.len(), 4);

    let table = mlsensor(&["conformance", &protocol, "--out", &path("d.json")]);
    assert!(stdout(&table).contains("TPR 1.00"), "{}", stdout(&table));
}

#[test]
fn datasheet_render_and_crosscheck() {
    let human = mlsensor(&["datasheet", "render", &fixture("person.mlsd.json")]);
    assert_eq!(code(&human), 0);
    for (_, title) in mlsensor::datasheet::SECTIONS {
        assert!(stdout(&human).contains(title), "{title}");
    }
    let machine = mlsensor(&["datasheet", "render", "--mode", "machine", &fixture("person.mlsd.json")]);
    assert_eq!(stdout(&machine), std::fs::read_to_string(fixture("person.mlsd.json")).unwrap());
    let broken = mlsensor(&["datasheet", "render", &fixture("missing_nutrition.mlsd.json")]);
    assert_eq!(code(&broken), 1);

    let scenario = fixture("scenarios/person.json");
    let clean = mlsensor(&["datasheet", "crosscheck", &fixture("person.mlsd.json"), "--device-from", &scenario]);
    assert_eq!(code(&clean), 0, "{}", stdout(&clean));
    let mismatch =
        mlsensor(&["datasheet", "crosscheck", &fixture("pinout_mismatch.mlsd.json"), "--device-from", &scenario]);
    assert_eq!(code(&mismatch), 1);
    assert!(stdout(&mismatch).starts_with("PINOUT_MISMATCH"));
    let wrong_kind = mlsensor(&["datasheet", "crosscheck", &fixture("tap.mlsd.json"), "--device-from", &scenario]);
    assert_eq!(code(&wrong_kind), 2);
}

#[test]
fn audit_passes_honest_logs_and_fails_leaks() {
    let dir = tempfile::tempdir().unwrap();
    simulate_into(&fixture("scenarios/person.json"), dir.path(), &[]);
    let log = dir.path().join("exposure.csv").display().to_string();
    assert_eq!(code(&mlsensor(&["audit", &log, &fixture("person.mlsd.json")])), 0);
    // The same log does not fit a serial-only device.
    let out = mlsensor(&["audit", &log, &fixture("text_reader.mlsd.json")]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("FAIL"));

    let leak = dir.path().join("leak.csv");
    std::fs::write(&leak, "time_ms,channel,detail,bits\n10,SERIAL,0x42,32\n").unwrap();
    let out = mlsensor(&["audit", leak.to_str().unwrap(), &fixture("person.mlsd.json")]);
    assert_eq!(code(&out), 1);

    std::fs::write(&leak, "time_ms,channel\n").unwrap();
    assert_eq!(code(&mlsensor(&["audit", leak.to_str().unwrap(), &fixture("person.mlsd.json")])), 2);
}

#[test]
fn compose_demo_gates_on_gaze() {
    let on = stdout(&mlsensor(&["compose-demo"]));
    let light = on.lines().find(|l| l.starts_with("LIGHT_ON")).unwrap();
    assert!(light.contains("[1220, 4000)"), "{on}");
    let away = stdout(&mlsensor(&["compose-demo", "--no-gaze"]));
    assert!(away.lines().any(|l| l.starts_with("LIGHT_ON") && l.ends_with("never")), "{away}");
    let off = stdout(&mlsensor(&["compose-demo", "--say-off"]));
    assert!(off.contains("LIGHT_ON HIGH [1220, 2720)"), "{off}");
}
