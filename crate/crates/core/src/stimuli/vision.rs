//! Reference vision cores: normalised cross-correlation of a part-based
//! binary template over a coarse scale/translation grid.
//!
//! For a window of `n` pixels with sum `S`, sum of squares `Q`, and a
//! template mask of `k` pixels whose covered pixel sum is `M`, the score is
//!
//! ```text
//! ncc = (n·M − k·S) / sqrt(k·(n − k) · (n·Q − S²))
//! ```
//!
//! All window statistics come from integer summed-area tables, which makes
//! the score exactly invariant to integer-preserving intensity scaling.

use serde::{Deserialize, Serialize};

use super::frame::{Frame, Integral};
use super::scene::{
    NormRect, FACE_FEATURES, FIGURE_HEIGHT_AT_1M, FOOT_OFFSET_AT_1M, HORIZON_FRACTION,
    PERSON_ASPECT, PERSON_HEAD, PERSON_PARTS, RODENT_ASPECT, RODENT_HEIGHT_AT_1M, RODENT_PARTS,
};
use super::StimulusError;

/// Head boxes shorter than this cannot resolve a face.
pub const MIN_FACE_PX: usize = 10;

const GROUND_SLACK_PX: usize = 4;
/// Head-box misplacement tolerated by the face check.
const FACE_SHIFT_PX: i64 = 2;

/// Default detection threshold of the person core.
pub const DEFAULT_PERSON_THRESHOLD: f64 = 0.65;
/// Default detection threshold of the gaze core.
pub const DEFAULT_GAZE_THRESHOLD: f64 = 0.6;

/// Window heights (pixels) searched by the default templates.
pub const DEFAULT_HEIGHTS: [u16; 22] = [
    14, 15, 16, 17, 18, 20, 22, 24, 26, 28, 30, 33, 36, 39, 42, 46, 50, 54, 59, 64, 70, 76,
];
/// Window heights for low, wide subjects.
pub const RODENT_HEIGHTS: [u16; 10] = [8, 10, 12, 14, 17, 20, 24, 29, 34, 40];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeTemplate {
    /// Window width divided by height.
    pub aspect: f64,
    /// Non-overlapping parts of the template mask.
    pub parts: Vec<NormRect>,
    /// Window heights of the scale grid, in pixels.
    pub heights: Vec<u16>,
    /// Where subjects stand, when the camera mounting is known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground: Option<GroundPrior>,
}

/// Camera mounting prior: subjects stand on a floor plane, so a window of
/// height `h` has its bottom edge at `horizon · H + foot_drop · h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundPrior {
    /// Horizon row as a fraction of frame height.
    pub horizon: f64,
    /// Distance of the foot row below the horizon, in window heights.
    pub foot_drop: f64,
    /// Rows searched either side of the predicted top edge.
    pub slack_px: usize,
}

impl ShapeTemplate {
    pub fn person() -> Self {
        ShapeTemplate {
            aspect: PERSON_ASPECT,
            parts: PERSON_PARTS.to_vec(),
            heights: DEFAULT_HEIGHTS.to_vec(),
            ground: Some(GroundPrior {
                horizon: HORIZON_FRACTION,
                foot_drop: FOOT_OFFSET_AT_1M / FIGURE_HEIGHT_AT_1M,
                slack_px: GROUND_SLACK_PX,
            }),
        }
    }

    pub fn rodent() -> Self {
        ShapeTemplate {
            aspect: RODENT_ASPECT,
            parts: RODENT_PARTS.to_vec(),
            heights: RODENT_HEIGHTS.to_vec(),
            ground: Some(GroundPrior {
                horizon: HORIZON_FRACTION,
                foot_drop: FOOT_OFFSET_AT_1M / RODENT_HEIGHT_AT_1M,
                slack_px: GROUND_SLACK_PX,
            }),
        }
    }

    pub fn validate(&self) -> Result<(), StimulusError> {
        let bad = |m: &str| Err(StimulusError::InvalidTemplate(m.to_string()));
        if !(self.aspect > 0.0 && self.aspect.is_finite()) {
            return bad("aspect must be positive");
        }
        if self.parts.is_empty() || self.parts.iter().any(|p| !p.is_valid()) {
            return bad("parts must be non-empty normalised rectangles");
        }
        if let Some(g) = &self.ground {
            if !((0.0..=1.0).contains(&g.horizon) && g.foot_drop.is_finite()) {
                return bad("ground prior out of range");
            }
        }
        if self.heights.is_empty() || self.heights.iter().any(|&h| h < 4) {
            return bad("heights must be non-empty and ≥ 4 px");
        }
        for &h in &self.heights {
            let scaled = ScaledTemplate::new(self, h as usize);
            if scaled.overlapping {
                return bad("parts overlap at some scale");
            }
        }
        Ok(())
    }
}

/// A template rasterised at one window size.
struct ScaledTemplate {
    w: usize,
    h: usize,
    /// Part rectangles in window pixels.
    rects: Vec<(usize, usize, usize, usize)>,
    k: i64,
    overlapping: bool,
}

impl ScaledTemplate {
    fn new(t: &ShapeTemplate, h: usize) -> Self {
        let w = ((h as f64 * t.aspect).round() as usize).max(1);
        Self::with_size(&t.parts, w, h)
    }

    fn with_size(parts: &[NormRect], w: usize, h: usize) -> Self {
        let px = |f: f64, len: usize| ((f * len as f64).round() as usize).min(len);
        let rects: Vec<_> = parts
            .iter()
            .map(|r| (px(r.x0, w), px(r.y0, h), px(r.x1, w), px(r.y1, h)))
            .filter(|&(x0, y0, x1, y1)| x1 > x0 && y1 > y0)
            .collect();
        let mut mask = vec![0u8; w * h];
        for &(x0, y0, x1, y1) in &rects {
            for y in y0..y1 {
                for x in x0..x1 {
                    mask[y * w + x] += 1;
                }
            }
        }
        let overlapping = mask.iter().any(|&m| m > 1);
        let k = mask.iter().filter(|&&m| m > 0).count() as i64;
        ScaledTemplate {
            w,
            h,
            rects,
            k,
            overlapping,
        }
    }

    fn place(&self, ii: &Integral, x: usize, y: usize) -> TemplateMatch {
        TemplateMatch {
            x,
            y,
            width: self.w,
            height: self.h,
            score: self.ncc(ii, x, y),
        }
    }

    fn ncc(&self, ii: &Integral, x: usize, y: usize) -> f64 {
        let n = (self.w * self.h) as i64;
        let k = self.k;
        if k == 0 || k == n {
            return 0.0;
        }
        let s = ii.sum(x, y, x + self.w, y + self.h);
        let q = ii.sum_sq(x, y, x + self.w, y + self.h);
        let var = n * q - s * s;
        if var <= 0 {
            return 0.0;
        }
        let m: i64 = self
            .rects
            .iter()
            .map(|&(x0, y0, x1, y1)| ii.sum(x + x0, y + y0, x + x1, y + y1))
            .sum();
        let num = (n * m - k * s) as f64;
        num / ((k * (n - k)) as f64 * var as f64).sqrt()
    }
}

/// Best template placement found in a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemplateMatch {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
    pub score: f64,
}

fn stride_for(h: usize) -> usize {
    (h / 7).max(2)
}

/// Coarse grid search at every scale, each followed by a one-pixel
/// refinement around that scale's best coarse hit.
pub fn best_match(frame: &Frame, template: &ShapeTemplate) -> Option<TemplateMatch> {
    let ii = Integral::new(frame);
    best_match_in(&ii, frame.width(), frame.height(), template)
}

fn best_match_in(
    ii: &Integral,
    fw: usize,
    fh: usize,
    template: &ShapeTemplate,
) -> Option<TemplateMatch> {
    let mut best: Option<TemplateMatch> = None;
    for &h in &template.heights {
        let st = ScaledTemplate::new(template, h as usize);
        if st.w > fw || st.h > fh {
            continue;
        }
        let Some((y_lo, y_hi)) = row_band(template.ground.as_ref(), fh, st.h) else {
            continue;
        };
        let s = stride_for(st.h);
        let y_step = if template.ground.is_some() { 1 } else { s };
        let mut coarse: Option<TemplateMatch> = None;
        for y in (y_lo..=y_hi).step_by(y_step) {
            for x in (0..=fw - st.w).step_by(s) {
                keep_better(&mut coarse, st.place(ii, x, y));
            }
        }
        let Some(c) = coarse else { continue };
        let mut refined = c;
        let r = y_step.min(s);
        for y in c.y.saturating_sub(r).max(y_lo)..=(c.y + r).min(y_hi) {
            for x in c.x.saturating_sub(s)..=(c.x + s).min(fw - st.w) {
                let m = st.place(ii, x, y);
                if m.score > refined.score {
                    refined = m;
                }
            }
        }
        keep_better(&mut best, refined);
    }
    best
}

/// Rows a window of height `h` may start at.
fn row_band(ground: Option<&GroundPrior>, fh: usize, h: usize) -> Option<(usize, usize)> {
    let last = fh - h;
    let Some(g) = ground else {
        return Some((0, last));
    };
    let foot = g.horizon * fh as f64 + g.foot_drop * h as f64;
    let top = (foot - h as f64).round() as i64;
    let lo = (top - g.slack_px as i64).max(0);
    let hi = (top + g.slack_px as i64).min(last as i64);
    (lo <= hi).then_some((lo as usize, hi as usize))
}

fn keep_better(best: &mut Option<TemplateMatch>, m: TemplateMatch) {
    if best.as_ref().is_none_or(|b| m.score > b.score) {
        *best = Some(m);
    }
}

/// Output of a binary detector: a score in `[0, 1]` and its thresholded
/// decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub present: bool,
    pub score: f64,
}

impl Detection {
    fn from_score(score: f64, threshold: f64) -> Self {
        let score = score.clamp(0.0, 1.0);
        Detection {
            present: score >= threshold,
            score,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonParams {
    pub template: ShapeTemplate,
    pub threshold: f64,
}

impl Default for PersonParams {
    fn default() -> Self {
        PersonParams {
            template: ShapeTemplate::person(),
            threshold: DEFAULT_PERSON_THRESHOLD,
        }
    }
}

impl PersonParams {
    /// Parameters retargeted at rodent-shaped subjects.
    pub fn rodent() -> Self {
        PersonParams {
            template: ShapeTemplate::rodent(),
            threshold: DEFAULT_PERSON_THRESHOLD,
        }
    }
}

/// Scores the best template placement. Pure.
pub fn detect_person(frame: &Frame, params: &PersonParams) -> Detection {
    let score = best_match(frame, &params.template).map_or(0.0, |m| m.score);
    Detection::from_score(score, params.threshold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazeParams {
    pub body: ShapeTemplate,
    /// Head box inside the body template.
    pub head: NormRect,
    /// Dark facial features, normalised to the head box.
    pub features: Vec<NormRect>,
    pub threshold: f64,
}

impl Default for GazeParams {
    fn default() -> Self {
        GazeParams {
            body: ShapeTemplate::person(),
            head: PERSON_HEAD,
            features: FACE_FEATURES.to_vec(),
            threshold: DEFAULT_GAZE_THRESHOLD,
        }
    }
}

/// Finds the best body placement, then correlates its head box with a face
/// pattern (bright skin, dark features). The score is the smaller of the
/// body and face scores, so a figure facing away scores low.
pub fn detect_gaze(frame: &Frame, params: &GazeParams) -> Detection {
    let ii = Integral::new(frame);
    let Some(body) = best_match_in(&ii, frame.width(), frame.height(), &params.body) else {
        return Detection::from_score(0.0, params.threshold);
    };
    let face = face_score(&ii, frame, &body, params);
    Detection::from_score(body.score.min(face), params.threshold)
}

fn face_score(ii: &Integral, frame: &Frame, body: &TemplateMatch, params: &GazeParams) -> f64 {
    let px = |f: f64, len: usize| (f * len as f64).round() as i64;
    let hx0 = body.x as i64 + px(params.head.x0, body.width);
    let hx1 = body.x as i64 + px(params.head.x1, body.width);
    let hy0 = body.y as i64 + px(params.head.y0, body.height);
    let hy1 = body.y as i64 + px(params.head.y1, body.height);
    let (hw, hh) = ((hx1 - hx0) as usize, (hy1 - hy0) as usize);
    if hh < MIN_FACE_PX || hw < 3 {
        return 0.0;
    }
    // Skin is everything in the head box that is not a feature, so the
    // negated feature correlation is the skin correlation.
    let mut best = 0.0f64;
    for (sw, sh) in [(hw, hh), (hw + 1, hh + 1), (hw - 1, hh - 1)] {
        let features = ScaledTemplate::with_size(&params.features, sw, sh);
        for dy in -FACE_SHIFT_PX..=FACE_SHIFT_PX {
            for dx in -FACE_SHIFT_PX..=FACE_SHIFT_PX {
                let x = hx0 + dx;
                let y = hy0 + dy;
                if x < 0
                    || y < 0
                    || x as usize + sw > frame.width()
                    || y as usize + sh > frame.height()
                {
                    continue;
                }
                best = best.max(-features.ncc(ii, x as usize, y as usize));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stimuli::scene::{render_scene, SceneParams};

    #[test]
    fn zero_frame_scores_zero() {
        let f = Frame::filled(96, 96, 0).unwrap();
        let d = detect_person(&f, &PersonParams::default());
        assert_eq!(d, Detection { present: false, score: 0.0 });
    }

    #[test]
    fn default_templates_are_valid() {
        ShapeTemplate::person().validate().unwrap();
        ShapeTemplate::rodent().validate().unwrap();
    }

    #[test]
    fn overlapping_parts_rejected() {
        let mut t = ShapeTemplate::person();
        t.parts.push(NormRect::new(0.0, 0.0, 1.0, 1.0));
        assert!(t.validate().is_err());
    }

    #[test]
    fn noiseless_figure_matches_strongly() {
        let mut p = SceneParams::nominal_person(5);
        p.noise_sigma = 0.0;
        let f = render_scene(&p).unwrap();
        let m = best_match(&f, &ShapeTemplate::person()).unwrap();
        assert!(m.score > 0.9, "{m:?}");
    }
}
