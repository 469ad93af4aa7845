//! `mlsensor`: run scenarios, conformance grids and datasheet checks.
//!
//! Exit status is 0 on success, 1 when a check finds violations and 2 on
//! usage or I/O errors.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mlsensor::conformance::{run as run_conformance, TestProtocol};
use mlsensor::datasheet::{self, cross_check, render, validate, Datasheet, RenderMode};
use mlsensor::devkit::{audit, parse_exposure_csv, ParameterBlob};
use mlsensor::interchange;
use mlsensor::scenario::{Scenario, ScenarioRun};
use mlsensor::sensors::{build_device, default_blob, DeviceConfig};
use mlsensor::vbus::{Direction, SimTime};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "mlsensor", version, about = "Emulated ML sensors: simulate, test, document")]
struct Cli {
    /// Overrides the seed of the scenario or protocol.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (simulate, compose-demo) or file (conformance, render).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Format of run logs.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Print nothing but errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its pin traces, I2C log and exposure log.
    Simulate { scenario: PathBuf },
    /// Run a conformance protocol against the reference device of its kind.
    Conformance {
        protocol: PathBuf,
        /// Parameter blob to test instead of the reference one.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Validate, render or cross-check a datasheet.
    Datasheet {
        #[command(subcommand)]
        action: DatasheetAction,
    },
    /// Check an exposure log against a datasheet's declared interface.
    Audit { exposure_log: PathBuf, datasheet: PathBuf },
    /// The gaze-gated voice light switch.
    ComposeDemo {
        /// Look away from the gaze sensor.
        #[arg(long)]
        no_gaze: bool,
        /// Also say "off" at 2.5 s.
        #[arg(long)]
        say_off: bool,
    },
}

#[derive(Subcommand)]
enum DatasheetAction {
    Validate { file: PathBuf },
    Render {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Human)]
        mode: Mode,
    },
    Crosscheck {
        file: PathBuf,
        /// Scenario whose run supplies the device and its exposure log.
        #[arg(long)]
        device_from: PathBuf,
        /// Device id in the scenario; defaults to the only one of the
        /// datasheet's kind.
        #[arg(long)]
        device: Option<String>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Machine,
    Human,
}

/// Reasons to exit with status 2.
struct Fatal(String);

impl<E: std::fmt::Display> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal(e.to_string())
    }
}

/// `Ok(true)` when everything checked out, `Ok(false)` on findings.
type Outcome = Result<bool, Fatal>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { scenario } => simulate(&cli, scenario),
        Command::Conformance { protocol, params } => conformance(&cli, protocol, params.as_deref()),
        Command::Datasheet { action } => match action {
            DatasheetAction::Validate { file } => datasheet_validate(&cli, file),
            DatasheetAction::Render { file, mode } => datasheet_render(&cli, file, *mode),
            DatasheetAction::Crosscheck {
                file,
                device_from,
                device,
            } => datasheet_crosscheck(&cli, file, device_from, device.as_deref()),
        },
        Command::Audit {
            exposure_log,
            datasheet,
        } => audit_log(&cli, exposure_log, datasheet),
        Command::ComposeDemo { no_gaze, say_off } => compose_demo(&cli, !no_gaze, *say_off),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Fatal(msg)) => {
            eprintln!("mlsensor: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String, Fatal> {
    fs::read_to_string(path).map_err(|e| Fatal(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Fatal> {
    fs::write(path, text).map_err(|e| Fatal(format!("{}: {e}", path.display())))
}

fn say(cli: &Cli, text: impl AsRef<str>) {
    if !cli.quiet {
        println!("{}", text.as_ref());
    }
}

fn load_scenario(cli: &Cli, path: &Path) -> Result<Scenario, Fatal> {
    let mut s = Scenario::parse(&read(path)?).map_err(|e| Fatal(format!("{}: {e}", path.display())))?;
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    Ok(s)
}

fn base_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

fn simulate(cli: &Cli, path: &Path) -> Outcome {
    let scenario = load_scenario(cli, path)?;
    let run = scenario.run(base_dir(path))?;
    write_run(cli, &run, scenario.duration_ms)?;
    Ok(true)
}

fn write_run(cli: &Cli, run: &ScenarioRun, end_ms: u64) -> Result<(), Fatal> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| Fatal(format!("{}: {e}", dir.display())))?;
    let files = match cli.format {
        Format::Csv => [
            ("trace.csv", run.trace_csv()),
            ("i2c.csv", run.i2c_csv()),
            ("exposure.csv", run.exposure_csv()),
        ],
        Format::Json => [
            ("trace.json", interchange::to_canonical(&trace_json(run))),
            ("i2c.json", interchange::to_canonical(&i2c_json(run))),
            ("exposure.json", interchange::to_canonical(&exposure_json(run))),
        ],
    };
    for (name, text) in &files {
        write(&dir.join(name), text)?;
    }
    for trace in run.bus.traces() {
        let high: u64 = trace
            .high_intervals(SimTime(end_ms))
            .iter()
            .map(|iv| iv.end.0 - iv.start.0)
            .sum();
        say(
            cli,
            format!(
                "{}: {} transitions, HIGH for {high} of {end_ms} ms",
                trace.line_id(),
                trace.transitions().len()
            ),
        );
    }
    say(cli, format!("i2c: {} transfers", run.bus.transfers().len()));
    say(cli, format!("exposure: {} records", run.bus.exposure_log_all().len()));
    say(cli, format!("wrote {}", dir.display()));
    Ok(())
}

fn trace_json(run: &ScenarioRun) -> Value {
    let lines: serde_json::Map<String, Value> = run
        .bus
        .traces()
        .map(|t| {
            let initial = t.level_at(SimTime::ZERO).bit();
            let changes: Vec<Value> = t
                .transitions()
                .iter()
                .filter(|tr| tr.at.0 > 0)
                .map(|tr| json!([tr.at.0, tr.level.bit()]))
                .collect();
            (t.line_id().to_string(), json!({"initial": initial, "transitions": changes}))
        })
        .collect();
    Value::Object(lines)
}

fn i2c_json(run: &ScenarioRun) -> Value {
    run.bus
        .transfers()
        .iter()
        .map(|t| {
            let tx = &t.transaction;
            json!({
                "time_ms": t.at.0,
                "address": tx.address,
                "direction": if tx.direction == Direction::Read { "READ" } else { "WRITE" },
                "ack": tx.is_ack(),
                "payload": tx.payload_hex(),
            })
        })
        .collect()
}

fn exposure_json(run: &ScenarioRun) -> Value {
    run.bus
        .exposure_log_all()
        .iter()
        .map(|r| {
            json!({
                "time_ms": r.at.0,
                "channel": r.channel.kind_tag(),
                "detail": r.channel.detail(),
                "bits": r.bits,
            })
        })
        .collect()
}

fn conformance(cli: &Cli, path: &Path, params: Option<&Path>) -> Outcome {
    let mut protocol: TestProtocol =
        interchange::from_str(&read(path)?).map_err(|e| Fatal(format!("{}: {e}", path.display())))?;
    if let Some(seed) = cli.seed {
        protocol.seed = seed;
    }
    let kind = protocol.sensor_kind;
    let blob = match params {
        Some(p) => {
            let bytes = fs::read(p).map_err(|e| Fatal(format!("{}: {e}", p.display())))?;
            ParameterBlob::from_bytes(&bytes)?
        }
        None => default_blob(kind),
    };
    let factory = || build_device(kind, &DeviceConfig::default(), &blob);
    let report = run_conformance(factory, &protocol)?;
    match &cli.out {
        Some(out) => write(out, &report.to_json())?,
        None if cli.quiet => {}
        None => print!("{}", report.to_json()),
    }
    if cli.out.is_some() {
        let [a, b] = [&protocol.axes[0], &protocol.axes[1]];
        let mut table = format!("{kind}: {} trials per cell\n", protocol.trials_per_cell);
        for cell in &report.cells {
            let latency = cell.latency_mean_ms.map_or("-".to_string(), |l| format!("{l:.0} ms"));
            let _ = writeln!(
                table,
                "  {}={:<6} {}={:<6} TPR {:.2}  FPR {:.2}  latency {latency}",
                a.kind.name(),
                cell.levels[0],
                b.kind.name(),
                cell.levels[1],
                cell.tpr,
                cell.fpr
            );
        }
        match &report.envelope {
            Some(env) => {
                let bounds: Vec<String> = env.bounds.iter().map(|(k, v)| format!("{k} {v}")).collect();
                let _ = write!(table, "envelope: {}", bounds.join(", "));
            }
            None => table.push_str("envelope: none"),
        }
        say(cli, table);
    }
    Ok(true)
}

fn load_datasheet(path: &Path) -> Result<Result<Datasheet, String>, Fatal> {
    let text = read(path)?;
    Ok(datasheet::parse(&text).map_err(|errs| {
        errs.iter()
            .map(|e| format!("{}: {e}", path.display()))
            .collect::<Vec<_>>()
            .join("\n")
    }))
}

fn datasheet_validate(cli: &Cli, path: &Path) -> Outcome {
    let ds = match load_datasheet(path)? {
        Ok(ds) => ds,
        Err(msg) => {
            say(cli, msg);
            return Ok(false);
        }
    };
    let violations = validate(&ds);
    for v in &violations {
        say(cli, v.to_string());
    }
    if violations.is_empty() {
        say(cli, format!("{}: valid", path.display()));
    }
    Ok(violations.is_empty())
}

fn datasheet_render(cli: &Cli, path: &Path, mode: Mode) -> Outcome {
    let ds = match load_datasheet(path)? {
        Ok(ds) => ds,
        Err(msg) => {
            eprintln!("{msg}");
            return Ok(false);
        }
    };
    let mode = match mode {
        Mode::Machine => RenderMode::Machine,
        Mode::Human => RenderMode::Human,
    };
    let text = match render(&ds, mode) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("{e}");
            return Ok(false);
        }
    };
    match &cli.out {
        Some(out) => write(out, &text)?,
        None => print!("{text}"),
    }
    Ok(true)
}

fn datasheet_crosscheck(cli: &Cli, path: &Path, scenario_path: &Path, id: Option<&str>) -> Outcome {
    let ds = match load_datasheet(path)? {
        Ok(ds) => ds,
        Err(msg) => {
            say(cli, msg);
            return Ok(false);
        }
    };
    let scenario = load_scenario(cli, scenario_path)?;
    let id = match id {
        Some(id) => id.to_string(),
        None => {
            let kind = ds.sensor_kind().ok_or(Fatal("datasheet has no description section".into()))?;
            let matching: Vec<&str> = scenario
                .devices
                .iter()
                .filter(|d| d.kind == kind)
                .map(|d| d.id.as_str())
                .collect();
            match matching.as_slice() {
                [one] => one.to_string(),
                [] => return Err(Fatal(format!("scenario has no {kind} device"))),
                _ => return Err(Fatal(format!("scenario has several {kind} devices; pick one with --device"))),
            }
        }
    };
    let run = scenario.run(base_dir(scenario_path))?;
    let device = run.device(&id).ok_or_else(|| Fatal(format!("no device `{id}` in scenario")))?;
    let log = run.exposure_log(&id).unwrap_or_default();
    match cross_check(&ds, device, &log) {
        Ok(findings) => {
            for f in &findings {
                say(cli, f.to_string());
            }
            if findings.is_empty() {
                say(cli, format!("{}: consistent with `{id}`", path.display()));
            }
            Ok(findings.is_empty())
        }
        Err(e) => {
            say(cli, e.to_string());
            Ok(false)
        }
    }
}

fn audit_log(cli: &Cli, log_path: &Path, ds_path: &Path) -> Outcome {
    let log = parse_exposure_csv(&read(log_path)?)
        .map_err(|(line, msg)| Fatal(format!("{}:{line}: {msg}", log_path.display())))?;
    let ds = load_datasheet(ds_path)?.map_err(Fatal)?;
    let pinout = ds
        .comm_spec_pinout
        .as_ref()
        .ok_or_else(|| Fatal(format!("{}: no comm_spec_pinout section", ds_path.display())))?;
    let verdict = audit(&log, &pinout.interface);
    for f in &verdict.findings {
        say(cli, f.to_string());
    }
    say(cli, if verdict.pass { "PASS" } else { "FAIL" });
    Ok(verdict.pass)
}

fn compose_demo(cli: &Cli, gaze: bool, say_off: bool) -> Outcome {
    let scenario = Scenario::gaze_voice_demo(gaze, say_off, cli.seed.unwrap_or(0));
    let run = scenario.run(Path::new("."))?;
    let end = SimTime(scenario.duration_ms);
    for line in ["GAZE", "VOICE", "LIGHT_ON"] {
        let trace = run.bus.trace(line).ok_or_else(|| Fatal(format!("missing line {line}")))?;
        let spans: Vec<String> = trace
            .high_intervals(end)
            .iter()
            .map(|iv| format!("[{}, {})", iv.start.0, iv.end.0))
            .collect();
        let spans = if spans.is_empty() { "never".to_string() } else { spans.join(" ") };
        say(cli, format!("{line:<8} HIGH {spans}"));
    }
    if cli.out.is_some() {
        write_run(cli, &run, scenario.duration_ms)?;
    }
    Ok(true)
}

