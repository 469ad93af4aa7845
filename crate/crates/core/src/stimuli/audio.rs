//! Audio feature streams and the keyword spotting core.
//!
//! Each word owns a fixed [`WORD_FRAMES`] × [`FEATURE_DIM`] signature derived
//! from its spelling. The distractor `often` shares most of its signature
//! with `off`, which is what makes it a false-positive hazard. Detection is a
//! per-template matched filter (normalised correlation) with local-peak
//! picking over a short lookahead.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::StimulusError;
use crate::seed;

pub const FEATURE_DIM: usize = 13;
pub const HOP_MS: u64 = 20;
/// Frames spanned by one spoken word (160 ms).
pub const WORD_FRAMES: usize = 8;
pub const DEFAULT_AUDIO_NOISE: f64 = 0.3;
pub const DEFAULT_KEYWORD_THRESHOLD: f64 = 0.6;
pub const DEFAULT_LOOKAHEAD_FRAMES: usize = 2;
/// Words that may appear in scripts without being in any vocabulary.
pub const DISTRACTORS: [&str; 1] = ["often"];
/// Correlation between the `often` and `off` signatures.
pub const OFTEN_OFF_SIMILARITY: f64 = 0.65;

pub type FeatureVector = [f64; FEATURE_DIM];

/// Feature vectors on a [`HOP_MS`] grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureWindow {
    frames: Vec<FeatureVector>,
}

impl FeatureWindow {
    pub fn new(frames: Vec<FeatureVector>) -> Result<Self, StimulusError> {
        if frames.iter().flatten().any(|v| !v.is_finite()) {
            return Err(StimulusError::InvalidAudio("non-finite feature value".into()));
        }
        Ok(FeatureWindow { frames })
    }

    pub fn frames(&self) -> &[FeatureVector] {
        &self.frames
    }

    pub fn duration_ms(&self) -> u64 {
        self.frames.len() as u64 * HOP_MS
    }
}

fn raw_signature(word: &str) -> Vec<FeatureVector> {
    let mut rng = seed::rng(seed::hash_str(word));
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (0..WORD_FRAMES)
        .map(|_| std::array::from_fn(|_| normal.sample(&mut rng)))
        .collect()
}

/// Clean feature signature of a word.
pub fn word_signature(word: &str) -> Vec<FeatureVector> {
    if word == "often" {
        let off = raw_signature("off");
        let own = raw_signature("often");
        let a = OFTEN_OFF_SIMILARITY;
        let b = (1.0 - a * a).sqrt();
        return off
            .iter()
            .zip(&own)
            .map(|(x, y)| std::array::from_fn(|i| a * x[i] + b * y[i]))
            .collect();
    }
    raw_signature(word)
}

/// One word of a spoken script.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub word: String,
    pub start_ms: u64,
}

impl ScriptEntry {
    pub fn new(word: impl Into<String>, start_ms: u64) -> Self {
        ScriptEntry {
            word: word.into(),
            start_ms,
        }
    }
}

/// Generates `duration_ms` of background noise with each scripted word's
/// signature added at its start frame.
pub fn synth_audio(
    script: &[ScriptEntry],
    vocabulary: &[String],
    duration_ms: u64,
    noise_sigma: f64,
    seed: u64,
) -> Result<FeatureWindow, StimulusError> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(StimulusError::InvalidAudio("noise_sigma must be ≥ 0".into()));
    }
    for entry in script {
        let known = vocabulary.contains(&entry.word)
            || DISTRACTORS.contains(&entry.word.as_str());
        if !known {
            return Err(StimulusError::InvalidAudio(format!(
                "`{}` is neither in the vocabulary nor a distractor",
                entry.word
            )));
        }
    }
    let n = (duration_ms / HOP_MS) as usize;
    let mut frames = vec![[0.0; FEATURE_DIM]; n];
    if noise_sigma > 0.0 {
        let normal = Normal::new(0.0, noise_sigma).expect("sigma validated");
        let mut rng = seed::rng(seed);
        for v in frames.iter_mut().flatten() {
            *v = normal.sample(&mut rng);
        }
    }
    for entry in script {
        let start = (entry.start_ms / HOP_MS) as usize;
        for (k, sig) in word_signature(&entry.word).iter().enumerate() {
            if let Some(frame) = frames.get_mut(start + k) {
                for (v, s) in frame.iter_mut().zip(sig) {
                    *v += s;
                }
            }
        }
    }
    FeatureWindow::new(frames)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordTemplate {
    pub word: String,
    pub frames: Vec<FeatureVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordParams {
    pub templates: Vec<KeywordTemplate>,
    pub threshold: f64,
    pub lookahead_frames: usize,
}

impl KeywordParams {
    /// Clean-signature templates for each word.
    pub fn for_vocabulary<S: AsRef<str>>(vocabulary: &[S]) -> Self {
        KeywordParams {
            templates: vocabulary
                .iter()
                .map(|w| KeywordTemplate {
                    word: w.as_ref().to_string(),
                    frames: word_signature(w.as_ref()),
                })
                .collect(),
            threshold: DEFAULT_KEYWORD_THRESHOLD,
            lookahead_frames: DEFAULT_LOOKAHEAD_FRAMES,
        }
    }

    pub fn vocabulary(&self) -> Vec<String> {
        self.templates.iter().map(|t| t.word.clone()).collect()
    }

    pub fn validate(&self) -> Result<(), StimulusError> {
        if self.templates.is_empty() {
            return Err(StimulusError::InvalidAudio("no keyword templates".into()));
        }
        let len = self.templates[0].frames.len();
        if len == 0 || self.templates.iter().any(|t| t.frames.len() != len) {
            return Err(StimulusError::InvalidAudio(
                "templates must share one non-zero length".into(),
            ));
        }
        Ok(())
    }

    fn template_len(&self) -> usize {
        self.templates.first().map_or(0, |t| t.frames.len())
    }
}

/// A recognised word and the onset time of its best-matching position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordHit {
    /// Index into the template list.
    pub index: usize,
    pub word: String,
    pub t_ms: u64,
}

/// Pearson correlation between a template and the same-length patch.
fn correlation(template: &[FeatureVector], patch: &[FeatureVector]) -> f64 {
    let n = (template.len() * FEATURE_DIM) as f64;
    let flat_t = template.iter().flatten();
    let flat_p = patch.iter().flatten();
    let (mut st, mut sp, mut stt, mut spp, mut stp) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (t, p) in flat_t.zip(flat_p) {
        st += t;
        sp += p;
        stt += t * t;
        spp += p * p;
        stp += t * p;
    }
    let cov = stp - st * sp / n;
    let vt = stt - st * st / n;
    let vp = spp - sp * sp / n;
    if vt <= 0.0 || vp <= 0.0 {
        return 0.0;
    }
    cov / (vt * vp).sqrt()
}

/// Streaming matched filter; feed frames in order with [`push`](Self::push).
#[derive(Debug, Clone)]
pub struct KeywordSpotter {
    params: KeywordParams,
    buffer: Vec<FeatureVector>,
    /// Absolute index of `buffer[0]`.
    base: usize,
    next_position: usize,
    candidate: Option<(usize, usize, f64)>,
    blocked_until: usize,
}

impl KeywordSpotter {
    pub fn new(params: KeywordParams) -> Self {
        KeywordSpotter {
            params,
            buffer: Vec::new(),
            base: 0,
            next_position: 0,
            candidate: None,
            blocked_until: 0,
        }
    }

    fn emit(&mut self) -> Option<KeywordHit> {
        let (pos, index, _) = self.candidate.take()?;
        self.blocked_until = pos + self.params.template_len();
        Some(KeywordHit {
            index,
            word: self.params.templates[index].word.clone(),
            t_ms: pos as u64 * HOP_MS,
        })
    }

    /// Adds one frame; returns a hit once its peak is confirmed.
    pub fn push(&mut self, frame: FeatureVector) -> Option<KeywordHit> {
        let k = self.params.template_len();
        self.buffer.push(frame);
        let end = self.base + self.buffer.len();
        let mut hit = None;
        while self.next_position + k <= end {
            let pos = self.next_position;
            self.next_position += 1;
            if let Some((cpos, _, _)) = self.candidate {
                if pos > cpos + self.params.lookahead_frames {
                    hit = hit.or(self.emit());
                }
            }
            if pos < self.blocked_until {
                continue;
            }
            let patch = &self.buffer[pos - self.base..pos - self.base + k];
            let best = self
                .params
                .templates
                .iter()
                .enumerate()
                .map(|(i, t)| (i, correlation(&t.frames, patch)))
                .max_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((index, score)) = best {
                let beats = self.candidate.is_none_or(|(_, _, s)| score > s);
                if score >= self.params.threshold && beats {
                    self.candidate = Some((pos, index, score));
                }
            }
        }
        // Drop frames no future position can reach.
        let keep_from = self.next_position.min(end);
        if keep_from > self.base {
            self.buffer.drain(..keep_from - self.base);
            self.base = keep_from;
        }
        hit
    }

    /// Emits a pending candidate at end of stream.
    pub fn flush(&mut self) -> Option<KeywordHit> {
        self.emit()
    }
}

/// First keyword recognised in the window, if any.
pub fn detect_keyword(window: &FeatureWindow, params: &KeywordParams) -> Option<KeywordHit> {
    let mut spotter = KeywordSpotter::new(params.clone());
    for frame in window.frames() {
        if let Some(hit) = spotter.push(*frame) {
            return Some(hit);
        }
    }
    spotter.flush()
}

/// Every keyword recognised in the window, in order.
pub fn detect_keywords(window: &FeatureWindow, params: &KeywordParams) -> Vec<KeywordHit> {
    let mut spotter = KeywordSpotter::new(params.clone());
    let mut hits: Vec<KeywordHit> = window
        .frames()
        .iter()
        .filter_map(|f| spotter.push(*f))
        .collect();
    hits.extend(spotter.flush());
    hits
}
