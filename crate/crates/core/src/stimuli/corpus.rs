//! Stimulus corpus files: one JSON object per line, each naming its
//! modality and the generator inputs. Pixels and samples are never stored;
//! they are regenerated from the parameters.

use serde::{Deserialize, Serialize};

use super::audio::{synth_audio, ScriptEntry, DEFAULT_AUDIO_NOISE};
use super::display::{render_display, DisplayLayout, DisplayScene, Reading};
use super::imu::{synth_imu_with_peak, TAP_PEAK_G};
use super::scene::{render_scene, SceneParams};
use super::{Stimulus, StimulusError};

fn default_peak() -> f64 {
    TAP_PEAK_G
}

fn default_audio_noise() -> f64 {
    DEFAULT_AUDIO_NOISE
}

/// A self-describing corpus entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "modality", rename_all = "snake_case", deny_unknown_fields)]
pub enum StimulusSpec {
    Scene {
        #[serde(flatten)]
        params: SceneParams,
    },
    Display {
        /// The reading as text, e.g. `"-7.25"`.
        reading: String,
        #[serde(default)]
        layout: DisplayLayout,
        #[serde(default)]
        scene: DisplayScene,
    },
    Imu {
        tap_times: Vec<u64>,
        duration_ms: u64,
        noise_sigma: f64,
        #[serde(default = "default_peak")]
        peak_g: f64,
        seed: u64,
    },
    Audio {
        script: Vec<ScriptEntry>,
        vocabulary: Vec<String>,
        duration_ms: u64,
        #[serde(default = "default_audio_noise")]
        noise_sigma: f64,
        seed: u64,
    },
}

impl StimulusSpec {
    pub fn generate(&self) -> Result<Stimulus, StimulusError> {
        Ok(match self {
            StimulusSpec::Scene { params } => render_scene(params)?.into(),
            StimulusSpec::Display {
                reading,
                layout,
                scene,
            } => render_display(&Reading::parse(reading)?, layout, scene)?.into(),
            StimulusSpec::Imu {
                tap_times,
                duration_ms,
                noise_sigma,
                peak_g,
                seed,
            } => synth_imu_with_peak(tap_times, *duration_ms, *noise_sigma, *peak_g, *seed)?.into(),
            StimulusSpec::Audio {
                script,
                vocabulary,
                duration_ms,
                noise_sigma,
                seed,
            } => synth_audio(script, vocabulary, *duration_ms, *noise_sigma, *seed)?.into(),
        })
    }
}

/// Parses a corpus. Blank lines are skipped; errors carry the 1-based line.
pub fn parse_corpus(text: &str) -> Result<Vec<StimulusSpec>, (usize, String)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| (i + 1, e.to_string())))
        .collect()
}

/// Writes a corpus with sorted keys, one entry per line.
pub fn write_corpus(specs: &[StimulusSpec]) -> String {
    specs
        .iter()
        .map(|s| {
            let value = serde_json::to_value(s).expect("spec serialises");
            serde_json::to_string(&value).expect("value serialises") + "\n"
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_generate() {
        let specs = vec![
            StimulusSpec::Scene {
                params: SceneParams::nominal_person(3),
            },
            StimulusSpec::Display {
                reading: "-7.25".into(),
                layout: DisplayLayout::default(),
                scene: DisplayScene::default(),
            },
            StimulusSpec::Imu {
                tap_times: vec![500],
                duration_ms: 1000,
                noise_sigma: 0.02,
                peak_g: TAP_PEAK_G,
                seed: 1,
            },
            StimulusSpec::Audio {
                script: vec![ScriptEntry::new("on", 300)],
                vocabulary: vec!["on".into(), "off".into()],
                duration_ms: 2000,
                noise_sigma: 0.3,
                seed: 2,
            },
        ];
        let text = write_corpus(&specs);
        assert!(text.lines().next().unwrap().starts_with(r#"{"distance_m":"#));
        let back = parse_corpus(&text).unwrap();
        assert_eq!(back, specs);
        for s in &back {
            assert_eq!(s.generate().unwrap(), s.generate().unwrap());
        }
    }

    #[test]
    fn bad_line_reports_position() {
        let err = parse_corpus("\n{\"modality\":\"smell\"}\n").unwrap_err();
        assert_eq!(err.0, 2);
    }
}
