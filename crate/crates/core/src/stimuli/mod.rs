//! Synthetic stimuli and the reference inference cores that stand in for
//! trained models.
//!
//! Every generator is a pure function of its arguments, seed included.
//! The cores are template and matched-filter pipelines: person and gaze
//! detection by normalised cross-correlation, tap detection by high-pass
//! thresholding, keyword spotting by per-word correlation, and a
//! seven-segment reader.

mod audio;
mod corpus;
mod display;
mod frame;
mod imu;
mod scene;
mod vision;

pub use audio::{
    detect_keyword, detect_keywords, synth_audio, word_signature, FeatureVector, FeatureWindow,
    KeywordHit, KeywordParams, KeywordSpotter, KeywordTemplate, ScriptEntry,
    DEFAULT_AUDIO_NOISE, DEFAULT_KEYWORD_THRESHOLD, DEFAULT_LOOKAHEAD_FRAMES, DISTRACTORS,
    FEATURE_DIM, HOP_MS, OFTEN_OFF_SIMILARITY, WORD_FRAMES,
};
pub use corpus::{parse_corpus, write_corpus, StimulusSpec};
pub use display::{
    cell_count, decode_display, panel_size, render_display, rotated_panel_size, segment_lookup,
    DisplayLayout, DisplayParams, DisplayScene, Reading, Rotation, SegmentSet, DISPLAY_FRAME_SIZE,
    MAX_FRAC_DIGITS, MAX_WHOLE_DIGITS, SEGMENT_TABLE,
};
pub use frame::{Frame, FRAME_SIZE, MIN_FRAME_SIDE};
pub use imu::{
    detect_tap, synth_imu, synth_imu_with_peak, ImuWindow, TapDetector, TapParams,
    DEFAULT_REFRACTORY_MS, DEFAULT_TAP_THRESHOLD_G, IMU_SAMPLE_PERIOD_MS, IMU_SAMPLE_RATE_HZ,
    MAX_ABS_G, TAP_PEAK_G, TAP_RING,
};
pub use scene::{
    figure_contrast, render_scene, FigureBox, FOOT_OFFSET_AT_1M, HORIZON_FRACTION, NormRect, SceneParams, Subject, FACE_FEATURES,
    FIGURE_HEIGHT_AT_1M, MAX_DISTANCE_M, MAX_LUX, MIN_DISTANCE_M, MIN_LUX, PERSON_ASPECT,
    PERSON_HEAD, PERSON_PARTS, RODENT_ASPECT, RODENT_HEIGHT_AT_1M, RODENT_PARTS,
};
pub use vision::{
    best_match, detect_gaze, detect_person, Detection, GazeParams, GroundPrior, PersonParams, ShapeTemplate,
    TemplateMatch, DEFAULT_GAZE_THRESHOLD, DEFAULT_HEIGHTS, DEFAULT_PERSON_THRESHOLD,
    MIN_FACE_PX, RODENT_HEIGHTS,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StimulusError {
    #[error("frame {width}×{height} is smaller than 16×16")]
    FrameTooSmall { width: usize, height: usize },
    #[error("expected {expected} pixels, got {actual}")]
    PixelCount { expected: usize, actual: usize },
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("invalid IMU window: {0}")]
    InvalidImu(String),
    #[error("invalid audio: {0}")]
    InvalidAudio(String),
    #[error("invalid reading: {0}")]
    InvalidReading(String),
    #[error("LAYOUT_OVERFLOW: {0}")]
    LayoutOverflow(String),
}

/// The physical input kinds a device can be fed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Frame,
    Imu,
    Audio,
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Modality::Frame => "frame",
            Modality::Imu => "imu",
            Modality::Audio => "audio",
        })
    }
}

/// One synthetic physical input.
#[derive(Debug, Clone, PartialEq)]
pub enum Stimulus {
    Frame(Frame),
    Imu(ImuWindow),
    Audio(FeatureWindow),
}

impl Stimulus {
    pub fn modality(&self) -> Modality {
        match self {
            Stimulus::Frame(_) => Modality::Frame,
            Stimulus::Imu(_) => Modality::Imu,
            Stimulus::Audio(_) => Modality::Audio,
        }
    }
}

impl From<Frame> for Stimulus {
    fn from(f: Frame) -> Self {
        Stimulus::Frame(f)
    }
}

impl From<ImuWindow> for Stimulus {
    fn from(w: ImuWindow) -> Self {
        Stimulus::Imu(w)
    }
}

impl From<FeatureWindow> for Stimulus {
    fn from(w: FeatureWindow) -> Self {
        Stimulus::Audio(w)
    }
}
