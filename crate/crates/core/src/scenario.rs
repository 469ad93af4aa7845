//! Declarative simulation runs: devices with their wiring, a timed stimulus
//! script, host polls over I2C and pin composites.
//!
//! Every random draw derives from the scenario `seed`. A stimulus entry's
//! own seed only picks which stream it gets, so changing `seed` changes
//! every stimulus while keeping the scenario file the same.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compose::{gaze_voice_composites, install, ComposeError, Composite, DEFAULT_GATE_WINDOW_MS};
use crate::devkit::{
    device_ref, exposure_csv, feed, power_on, DevkitError, ParameterBlob,
    SensorDevice, SensorKind,
};
use crate::interchange::{self, ParseError};
use crate::seed;
use crate::sensors::{build_device, default_blob, DeviceConfig, VoiceMode};
use crate::stimuli::{SceneParams, ScriptEntry, StimulusError, StimulusSpec, Subject};
use crate::vbus::{i2c_log_csv, Bus, BusError, DeviceHandle, ExposureRecord, I2cRequest, SimTime};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("PARSE_ERROR: {0}")]
    Parse(#[from] ParseError),
    #[error("IO_ERROR: {path}: {message}")]
    Io { path: String, message: String },
    #[error("INVALID_SCENARIO: {0}")]
    Invalid(String),
    #[error(transparent)]
    Devkit(#[from] DevkitError),
    #[error(transparent)]
    Compose(#[from] ComposeError),
    #[error(transparent)]
    Bus(#[from] BusError),
    #[error(transparent)]
    Stimulus(#[from] StimulusError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceEntry {
    pub id: String,
    pub kind: SensorKind,
    #[serde(default)]
    pub config: DeviceConfig,
    /// Parameter blob file, relative to the scenario file. Defaults to the
    /// reference blob of the kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<String>,
    /// Pin name to line id.
    pub wiring: BTreeMap<String, String>,
}

/// Feeds `spec` to `device` at `at_ms`, and again every `every_ms` up to
/// but excluding `until_ms` (default: the scenario end).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StimulusEntry {
    pub device: String,
    pub at_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub every_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub until_ms: Option<u64>,
    pub spec: StimulusSpec,
}

/// Host READs of `bytes` bytes at `address`, issued after the tick at
/// each poll time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PollEntry {
    pub address: u8,
    pub bytes: usize,
    pub at_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub every_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub until_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    pub duration_ms: u64,
    pub devices: Vec<DeviceEntry>,
    #[serde(default)]
    pub stimuli: Vec<StimulusEntry>,
    #[serde(default)]
    pub polls: Vec<PollEntry>,
    #[serde(default)]
    pub composites: Vec<Composite>,
}

fn schedule(at: u64, every: Option<u64>, until: Option<u64>, end: u64) -> Vec<u64> {
    let until = until.unwrap_or(end).min(end);
    match every {
        Some(step) if step > 0 => (at..until).step_by(step as usize).collect(),
        _ if at < until => vec![at],
        _ => Vec::new(),
    }
}

/// Rebinds a spec's randomness to the scenario seed. Scenes keep their
/// layout across repeats and only redraw pixel noise.
fn reseed(spec: &StimulusSpec, base: u64, entry: usize, rep: u64) -> StimulusSpec {
    let mut spec = spec.clone();
    let e = entry as u64;
    match &mut spec {
        StimulusSpec::Scene { params } => {
            let layout = seed::derive(base, &[e, params.seed]);
            params.noise_seed = Some(seed::derive(layout, &[rep]));
            params.seed = layout;
        }
        StimulusSpec::Display { scene, .. } => scene.seed = seed::derive(base, &[e, scene.seed, rep]),
        StimulusSpec::Imu { seed: s, .. } | StimulusSpec::Audio { seed: s, .. } => {
            *s = seed::derive(base, &[e, *s, rep])
        }
    }
    spec
}

enum Event<'a> {
    Feed(&'a str, StimulusSpec),
    Poll(u8, usize),
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = interchange::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        interchange::to_canonical(self)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        if self.duration_ms == 0 {
            return bad("duration_ms must be at least 1".into());
        }
        let mut ids: Vec<&str> = self.devices.iter().map(|d| d.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return bad(format!("device id `{}` used twice", w[0]));
        }
        if let Some(s) = self.stimuli.iter().find(|s| !ids.contains(&s.device.as_str())) {
            return bad(format!("stimulus for unknown device `{}`", s.device));
        }
        Ok(())
    }

    /// Runs to `duration_ms`. `base_dir` resolves parameter blob paths.
    pub fn run(&self, base_dir: &Path) -> Result<ScenarioRun, ScenarioError> {
        self.validate()?;
        let mut bus = Bus::new();
        let mut handles = BTreeMap::new();
        for d in &self.devices {
            let blob = match &d.params {
                Some(path) => {
                    let full = base_dir.join(path);
                    let bytes = std::fs::read(&full).map_err(|e| ScenarioError::Io {
                        path: full.display().to_string(),
                        message: e.to_string(),
                    })?;
                    ParameterBlob::from_bytes(&bytes)?
                }
                None => default_blob(d.kind),
            };
            let device = build_device(d.kind, &d.config, &blob)?;
            handles.insert(d.id.clone(), power_on(device, &mut bus, &d.wiring)?);
        }
        install(&mut bus, &self.composites)?;

        // Feeds land before the tick at their time; polls run after it.
        let end = self.duration_ms;
        let mut events: Vec<(u64, usize, Event)> = Vec::new();
        for (i, s) in self.stimuli.iter().enumerate() {
            for (rep, t) in schedule(s.at_ms, s.every_ms, s.until_ms, end).into_iter().enumerate() {
                let spec = reseed(&s.spec, self.seed, i, rep as u64);
                events.push((t, 0, Event::Feed(&s.device, spec)));
            }
        }
        for p in &self.polls {
            for t in schedule(p.at_ms, p.every_ms, p.until_ms, end) {
                events.push((t + 1, 1, Event::Poll(p.address, p.bytes)));
            }
        }
        events.sort_by_key(|(t, order, _)| (*t, *order));
        for (t, _, event) in events {
            if t > bus.clock().0 {
                bus.advance(t - bus.clock().0)?;
            }
            match event {
                Event::Feed(device, spec) => {
                    feed(&mut bus, handles[device], spec.generate()?, SimTime(t))?;
                }
                Event::Poll(address, bytes) => {
                    bus.i2c_transfer(address, I2cRequest::Read(bytes));
                }
            }
        }
        if end > bus.clock().0 {
            bus.advance(end - bus.clock().0)?;
        }
        Ok(ScenarioRun { bus, handles })
    }

    /// A user one metre from a gaze sensor says "on" at 1 s and, if
    /// `say_off`, "off" at 2.5 s. LIGHT_ON is the gaze-gated latch.
    pub fn gaze_voice_demo(facing: bool, say_off: bool, seed: u64) -> Scenario {
        let mut script = vec![ScriptEntry::new("on", 1000)];
        if say_off {
            script.push(ScriptEntry::new("off", 2500));
        }
        let duration_ms = 4000;
        Scenario {
            seed,
            duration_ms,
            devices: vec![
                demo_device("gaze", SensorKind::Gaze, "DETECT", "GAZE"),
                demo_device("voice", SensorKind::Voice, "STATE", "VOICE"),
            ],
            stimuli: vec![
                demo_scene("gaze", facing),
                StimulusEntry {
                    device: "voice".into(),
                    at_ms: 0,
                    every_ms: None,
                    until_ms: None,
                    spec: StimulusSpec::Audio {
                        script,
                        vocabulary: vec!["on".into(), "off".into()],
                        duration_ms,
                        noise_sigma: crate::stimuli::DEFAULT_AUDIO_NOISE,
                        seed: 0,
                    },
                },
            ],
            polls: Vec::new(),
            composites: gaze_voice_composites("GAZE", "VOICE", DEFAULT_GATE_WINDOW_MS, "LIGHT_ON"),
        }
    }
}

fn demo_device(id: &str, kind: SensorKind, pin: &str, line: &str) -> DeviceEntry {
    let wiring = [("VDD", "VDD"), ("GND", "GND"), (pin, line)]
        .into_iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
    DeviceEntry {
        id: id.into(),
        kind,
        config: DeviceConfig {
            mode: (kind == SensorKind::Voice).then_some(VoiceMode::Pin),
            ..Default::default()
        },
        params: None,
        wiring,
    }
}

/// A person at 1 m in the middle of the frame, re-captured every 100 ms.
pub fn demo_scene(device: &str, facing: bool) -> StimulusEntry {
    StimulusEntry {
        device: device.into(),
        at_ms: 0,
        every_ms: Some(100),
        until_ms: None,
        spec: StimulusSpec::Scene {
            params: SceneParams {
                person_present: true,
                facing_camera: facing,
                distance_m: 1.0,
                illuminance_lux: 500.0,
                noise_sigma: 4.0,
                seed: 0,
                subject: Subject::Person,
                x_position: Some(0.5),
                noise_seed: None,
            },
        },
    }
}

/// A finished run.
pub struct ScenarioRun {
    pub bus: Bus,
    pub handles: BTreeMap<String, DeviceHandle>,
}

impl ScenarioRun {
    pub fn device(&self, id: &str) -> Option<&SensorDevice> {
        device_ref(&self.bus, *self.handles.get(id)?)
    }

    pub fn exposure_log(&self, id: &str) -> Option<Vec<ExposureRecord>> {
        Some(self.bus.exposure_log(*self.handles.get(id)?))
    }

    pub fn trace_csv(&self) -> String {
        self.bus.trace_csv()
    }

    pub fn i2c_csv(&self) -> String {
        i2c_log_csv(self.bus.transfers())
    }

    pub fn exposure_csv(&self) -> String {
        exposure_csv(&self.bus.exposure_log_all())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_bounds() {
        assert_eq!(schedule(0, Some(100), Some(350), 1000), vec![0, 100, 200, 300]);
        assert_eq!(schedule(50, None, None, 1000), vec![50]);
        assert!(schedule(1000, None, None, 1000).is_empty());
    }

    #[test]
    fn demo_round_trips_through_json() {
        let s = Scenario::gaze_voice_demo(true, false, 3);
        assert_eq!(Scenario::parse(&s.to_json()).unwrap(), s);
    }
}
