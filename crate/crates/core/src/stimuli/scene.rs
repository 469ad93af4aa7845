//! Synthetic camera scenes.
//!
//! A scene is a smooth textured background, optionally with a figure made of
//! axis-aligned parts. Apparent figure height is `FIGURE_HEIGHT_AT_1M / d`
//! pixels and figure contrast grows with `ln(lux)`, so distance and lighting
//! degrade detection the way a real camera would.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::frame::{Frame, FRAME_SIZE};
use super::StimulusError;
use crate::seed;

/// Figure height in pixels at one metre.
pub const FIGURE_HEIGHT_AT_1M: f64 = 80.0;
/// Rodent body height in pixels at one metre.
pub const RODENT_HEIGHT_AT_1M: f64 = 24.0;
pub const PERSON_ASPECT: f64 = 0.4;
pub const RODENT_ASPECT: f64 = 2.5;
/// Horizon row as a fraction of frame height; figures stand below it.
pub const HORIZON_FRACTION: f64 = 0.5;
/// Foot row offset at one metre (foot row = horizon + offset / d).
pub const FOOT_OFFSET_AT_1M: f64 = 40.0;
/// Figure contrast per natural-log unit of illuminance.
pub const CONTRAST_PER_LOG_LUX: f64 = 6.0;
const TEXTURE_DEPTH: f64 = 0.06;

pub const MIN_DISTANCE_M: f64 = 0.25;
pub const MAX_DISTANCE_M: f64 = 10.0;
pub const MIN_LUX: f64 = 1.0;
pub const MAX_LUX: f64 = 2000.0;

/// Rectangle in coordinates normalised to a bounding box, `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormRect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl NormRect {
    pub const fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        NormRect { x0, y0, x1, y1 }
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= self.x0 && u < self.x1 && v >= self.y0 && v < self.y1
    }

    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.x0)
            && (0.0..=1.0).contains(&self.x1)
            && (0.0..=1.0).contains(&self.y0)
            && (0.0..=1.0).contains(&self.y1)
            && self.x0 < self.x1
            && self.y0 < self.y1
    }
}

pub const PERSON_HEAD: NormRect = NormRect::new(0.35, 0.0, 0.65, 0.18);
pub const PERSON_PARTS: [NormRect; 4] = [
    PERSON_HEAD,
    NormRect::new(0.15, 0.18, 0.85, 0.55),
    NormRect::new(0.2, 0.55, 0.45, 1.0),
    NormRect::new(0.55, 0.55, 0.8, 1.0),
];
/// Eyes and mouth, normalised to the head box.
pub const FACE_FEATURES: [NormRect; 3] = [
    NormRect::new(0.1, 0.3, 0.4, 0.55),
    NormRect::new(0.6, 0.3, 0.9, 0.55),
    NormRect::new(0.25, 0.7, 0.75, 0.85),
];
pub const RODENT_PARTS: [NormRect; 5] = [
    NormRect::new(0.12, 0.25, 0.78, 0.8),
    NormRect::new(0.78, 0.3, 1.0, 0.65),
    NormRect::new(0.0, 0.55, 0.12, 0.7),
    NormRect::new(0.2, 0.8, 0.32, 1.0),
    NormRect::new(0.6, 0.8, 0.72, 1.0),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subject {
    #[default]
    Person,
    Rodent,
}

/// Inputs to [`render_scene`]. Rendering is a pure function of these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneParams {
    pub person_present: bool,
    #[serde(default)]
    pub facing_camera: bool,
    pub distance_m: f64,
    pub illuminance_lux: f64,
    #[serde(default)]
    pub noise_sigma: f64,
    pub seed: u64,
    /// What stands in the scene when `person_present` is set.
    #[serde(default)]
    pub subject: Subject,
    /// Horizontal placement in `[0, 1]` of the free span; seeded when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_position: Option<f64>,
    /// Separate seed for pixel noise. Frames of one static scene share
    /// `seed` and differ only here.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_seed: Option<u64>,
}

impl SceneParams {
    /// Empty room at 1 m, 500 lux, σ = 4.
    pub fn empty(seed: u64) -> Self {
        SceneParams {
            person_present: false,
            facing_camera: false,
            distance_m: 1.0,
            illuminance_lux: 500.0,
            noise_sigma: 4.0,
            seed,
            subject: Subject::Person,
            x_position: None,
            noise_seed: None,
        }
    }

    /// Person at 1 m, 500 lux, σ = 4, not facing the camera.
    pub fn nominal_person(seed: u64) -> Self {
        SceneParams {
            person_present: true,
            ..SceneParams::empty(seed)
        }
    }

    pub fn validate(&self) -> Result<(), StimulusError> {
        let bad = |msg: &str| Err(StimulusError::InvalidScene(msg.to_string()));
        if !(MIN_DISTANCE_M..=MAX_DISTANCE_M).contains(&self.distance_m) {
            return bad("distance_m outside [0.25, 10]");
        }
        if !(MIN_LUX..=MAX_LUX).contains(&self.illuminance_lux) {
            return bad("illuminance_lux outside [1, 2000]");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be finite and ≥ 0");
        }
        if self.facing_camera && !self.person_present {
            return bad("facing_camera requires person_present");
        }
        if self.x_position.is_some_and(|x| !(0.0..=1.0).contains(&x)) {
            return bad("x_position outside [0, 1]");
        }
        Ok(())
    }
}

/// Placement of the figure in a rendered frame, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigureBox {
    pub x0: f64,
    pub y0: f64,
    pub width: f64,
    pub height: f64,
}

fn background_level(lux: f64) -> f64 {
    24.0 + 72.0 * lux.ln() / MAX_LUX.ln()
}

pub fn figure_contrast(lux: f64) -> f64 {
    CONTRAST_PER_LOG_LUX * lux.ln()
}

fn figure_box(subject: Subject, distance_m: f64, x_position: f64) -> FigureBox {
    let (h1, aspect) = match subject {
        Subject::Person => (FIGURE_HEIGHT_AT_1M, PERSON_ASPECT),
        Subject::Rodent => (RODENT_HEIGHT_AT_1M, RODENT_ASPECT),
    };
    let height = h1 / distance_m;
    let width = height * aspect;
    let foot = HORIZON_FRACTION * FRAME_SIZE as f64 + FOOT_OFFSET_AT_1M / distance_m;
    let span = FRAME_SIZE as f64 - width;
    let x0 = if span > 0.0 { x_position * span } else { span / 2.0 };
    FigureBox {
        x0,
        y0: foot - height,
        width,
        height,
    }
}

/// Renders a scene into a [`FRAME_SIZE`]² frame.
pub fn render_scene(p: &SceneParams) -> Result<Frame, StimulusError> {
    p.validate()?;
    let mut rng = seed::rng(p.seed);
    let phase_x: f64 = rng.random::<f64>() * TAU;
    let phase_y: f64 = rng.random::<f64>() * TAU;
    let drawn_position: f64 = rng.random();
    let x_position = p.x_position.unwrap_or(drawn_position);

    let bg = background_level(p.illuminance_lux);
    let contrast = figure_contrast(p.illuminance_lux);
    let figure = p
        .person_present
        .then(|| figure_box(p.subject, p.distance_m, x_position));
    let mut noise_rng = p.noise_seed.map(seed::rng);
    let noise = (p.noise_sigma > 0.0)
        .then(|| Normal::new(0.0, p.noise_sigma).expect("sigma validated"));

    let n = FRAME_SIZE;
    let col_wave: Vec<f64> = (0..n)
        .map(|x| TEXTURE_DEPTH * (TAU * x as f64 / 37.0 + phase_x).sin())
        .collect();
    let mut pixels = Vec::with_capacity(n * n);
    for y in 0..n {
        let row_wave = (TAU * y as f64 / 29.0 + phase_y).cos();
        for (x, col) in col_wave.iter().enumerate() {
            let texture = 1.0 + col * row_wave;
            let mut value = bg * texture;
            if let Some(fb) = figure {
                let u = (x as f64 + 0.5 - fb.x0) / fb.width;
                let v = (y as f64 + 0.5 - fb.y0) / fb.height;
                if let Some(gain) = figure_gain(p.subject, p.facing_camera, u, v) {
                    value = bg + gain * contrast;
                }
            }
            if let Some(dist) = &noise {
                value += match noise_rng.as_mut() {
                    Some(r) => dist.sample(r),
                    None => dist.sample(&mut rng),
                };
            }
            pixels.push(value.round().clamp(0.0, 255.0) as u8);
        }
    }
    Frame::new(n, n, pixels)
}

/// Contrast multiplier of the figure part covering `(u, v)`, if any.
fn figure_gain(subject: Subject, facing: bool, u: f64, v: f64) -> Option<f64> {
    match subject {
        Subject::Rodent => RODENT_PARTS.iter().any(|r| r.contains(u, v)).then_some(1.0),
        Subject::Person => {
            if PERSON_HEAD.contains(u, v) {
                if !facing {
                    return Some(0.55);
                }
                let hu = (u - PERSON_HEAD.x0) / (PERSON_HEAD.x1 - PERSON_HEAD.x0);
                let hv = (v - PERSON_HEAD.y0) / (PERSON_HEAD.y1 - PERSON_HEAD.y0);
                if FACE_FEATURES.iter().any(|r| r.contains(hu, hv)) {
                    Some(0.15)
                } else {
                    Some(1.3)
                }
            } else {
                PERSON_PARTS[1..]
                    .iter()
                    .any(|r| r.contains(u, v))
                    .then_some(1.0)
            }
        }
    }
}
