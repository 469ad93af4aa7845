//! Seven-segment displays: rendering and the reading core.
//!
//! A display is a bright panel holding one cell per character plus a label
//! strip along its bottom edge. The strip is what lets the decoder tell the
//! four right-angle orientations apart, since several digit strings read as
//! other valid strings when turned upside down.
//!
//! Canonical (unrotated) panel geometry, in pixels:
//!
//! ```text
//!  margin 3 ┌──────────────────────────────┐
//!           │ ┌─a─┐   ┌─a─┐                 │   cell 10 × 18, pitch 14
//!           │ f   b   f   b                 │   segment thickness 2
//!           │ ├─g─┤   ├─g─┤                 │   decimal point in the
//!           │ e   c   e   c                 │   4 px gap after a cell
//!           │ └─d─┘ . └─d─┘                 │
//!           │ ════════ label strip ════════ │   bottom margin 6
//!           └──────────────────────────────┘
//! ```

use std::fmt;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::frame::Frame;
use super::StimulusError;
use crate::seed;

pub const MAX_WHOLE_DIGITS: usize = 7;
pub const MAX_FRAC_DIGITS: usize = 8;
/// Side of the default display frame.
pub const DISPLAY_FRAME_SIZE: usize = 240;

const CELL_W: usize = 10;
const CELL_H: usize = 18;
const PITCH: usize = 14;
const MARGIN_X: usize = 3;
const MARGIN_TOP: usize = 3;
const MARGIN_BOTTOM: usize = 6;
const STRIP_OFFSET: usize = 2;
const STRIP_H: usize = 2;
const PANEL_H: usize = MARGIN_TOP + CELL_H + MARGIN_BOTTOM;
const LIT_LEVEL: f64 = 230.0;
const PANEL_ABOVE_BACKGROUND: f64 = 50.0;

/// Segment rectangles `[x0, x1) × [y0, y1)` within a cell, in `a..g` order.
const SEGMENT_RECTS: [(usize, usize, usize, usize); 7] = [
    (2, 0, 8, 2),
    (8, 2, 10, 8),
    (8, 10, 10, 16),
    (2, 16, 8, 18),
    (0, 10, 2, 16),
    (0, 2, 2, 8),
    (2, 8, 8, 10),
];
/// Decimal point, in the gap to the right of its cell.
const DP_RECT: (usize, usize, usize, usize) = (11, 16, 13, 18);

/// A set of lit segments; bit 0 is `a`, bit 6 is `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SegmentSet(pub u8);

impl SegmentSet {
    pub const MINUS: SegmentSet = SegmentSet(1 << 6);

    /// Parses segment letters, e.g. `"abcdef"`.
    pub fn from_letters(letters: &str) -> Option<Self> {
        letters.chars().try_fold(SegmentSet(0), |acc, c| {
            let bit = "abcdefg".find(c)?;
            Some(SegmentSet(acc.0 | (1 << bit)))
        })
    }

    pub fn contains(self, segment: usize) -> bool {
        self.0 & (1 << segment) != 0
    }
}

/// Standard decode table for digits 0–9.
pub const SEGMENT_TABLE: [SegmentSet; 10] = [
    SegmentSet(0b011_1111),
    SegmentSet(0b000_0110),
    SegmentSet(0b101_1011),
    SegmentSet(0b100_1111),
    SegmentSet(0b110_0110),
    SegmentSet(0b110_1101),
    SegmentSet(0b111_1101),
    SegmentSet(0b000_0111),
    SegmentSet(0b111_1111),
    SegmentSet(0b110_1111),
];

/// Exact lookup of a segment pattern.
pub fn segment_lookup(segments: SegmentSet) -> Option<u8> {
    SEGMENT_TABLE
        .iter()
        .position(|&s| s == segments)
        .map(|d| d as u8)
}

/// A displayed number as digit strings, never converted to a numeric type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Reading {
    pub negative: bool,
    pub whole_digits: String,
    pub frac_digits: String,
}

impl Reading {
    pub fn new(
        negative: bool,
        whole_digits: impl Into<String>,
        frac_digits: impl Into<String>,
    ) -> Result<Self, StimulusError> {
        let whole_digits = whole_digits.into();
        let frac_digits = frac_digits.into();
        if whole_digits.is_empty() {
            return Err(StimulusError::InvalidReading("whole part is empty".into()));
        }
        if !whole_digits.chars().chain(frac_digits.chars()).all(|c| c.is_ascii_digit()) {
            return Err(StimulusError::InvalidReading("digits only".into()));
        }
        Ok(Reading {
            negative,
            whole_digits,
            frac_digits,
        })
    }

    /// Parses `-7.25`, `1234.5`, `42`, `8.`.
    pub fn parse(s: &str) -> Result<Self, StimulusError> {
        let (negative, rest) = match s.strip_prefix('-') {
            Some(r) => (true, r),
            None => (false, s),
        };
        let (whole, frac) = rest.split_once('.').unwrap_or((rest, ""));
        Reading::new(negative, whole, frac)
    }

    /// No leading zeros in the whole part (except a lone `0`) and no
    /// trailing zeros in the fraction.
    pub fn is_canonical(&self) -> bool {
        (self.whole_digits == "0" || !self.whole_digits.starts_with('0'))
            && !self.frac_digits.ends_with('0')
    }

    pub fn canonical(&self) -> Reading {
        let whole = self.whole_digits.trim_start_matches('0');
        Reading {
            negative: self.negative,
            whole_digits: if whole.is_empty() { "0".into() } else { whole.into() },
            frac_digits: self.frac_digits.trim_end_matches('0').into(),
        }
    }
}

impl fmt::Display for Reading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negative {
            f.write_str("-")?;
        }
        f.write_str(&self.whole_digits)?;
        if !self.frac_digits.is_empty() {
            write!(f, ".{}", self.frac_digits)?;
        }
        Ok(())
    }
}

/// Clockwise rotation of the display in the frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "u16", into = "u16")]
pub enum Rotation {
    #[default]
    R0,
    R90,
    R180,
    R270,
}

impl Rotation {
    pub const ALL: [Rotation; 4] = [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270];

    pub fn degrees(self) -> u16 {
        match self {
            Rotation::R0 => 0,
            Rotation::R90 => 90,
            Rotation::R180 => 180,
            Rotation::R270 => 270,
        }
    }

    fn quarter_turns(self) -> usize {
        self.degrees() as usize / 90
    }

    fn inverse(self) -> Rotation {
        Rotation::ALL[(4 - self.quarter_turns()) % 4]
    }
}

impl TryFrom<u16> for Rotation {
    type Error = String;

    fn try_from(deg: u16) -> Result<Self, Self::Error> {
        match deg {
            0 => Ok(Rotation::R0),
            90 => Ok(Rotation::R90),
            180 => Ok(Rotation::R180),
            270 => Ok(Rotation::R270),
            other => Err(format!("rotation must be 0, 90, 180 or 270, got {other}")),
        }
    }
}

impl From<Rotation> for u16 {
    fn from(r: Rotation) -> u16 {
        r.degrees()
    }
}

/// Where the display sits in the camera frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplayLayout {
    pub frame_width: usize,
    pub frame_height: usize,
    /// Top-left corner of the (rotated) panel.
    pub x: usize,
    pub y: usize,
    pub rotation: Rotation,
}

impl Default for DisplayLayout {
    fn default() -> Self {
        DisplayLayout {
            frame_width: DISPLAY_FRAME_SIZE,
            frame_height: DISPLAY_FRAME_SIZE,
            x: 4,
            y: 4,
            rotation: Rotation::R0,
        }
    }
}

/// Lighting and sensor noise for a display frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplayScene {
    pub illuminance_lux: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for DisplayScene {
    fn default() -> Self {
        DisplayScene {
            illuminance_lux: 500.0,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

/// Number of character cells a reading occupies.
pub fn cell_count(r: &Reading) -> usize {
    r.negative as usize + r.whole_digits.len() + r.frac_digits.len()
}

/// Width and height of the unrotated panel for `cells` characters.
pub fn panel_size(cells: usize) -> (usize, usize) {
    (2 * MARGIN_X + (cells - 1) * PITCH + CELL_W, PANEL_H)
}

/// Panel size after rotation.
pub fn rotated_panel_size(r: &Reading, rotation: Rotation) -> (usize, usize) {
    let (w, h) = panel_size(cell_count(r));
    if rotation.quarter_turns() % 2 == 1 {
        (h, w)
    } else {
        (w, h)
    }
}

/// Single-channel image used for the panel before it is placed in a frame.
#[derive(Clone)]
struct Canvas {
    w: usize,
    h: usize,
    px: Vec<f64>,
}

impl Canvas {
    fn fill_rect(&mut self, x0: usize, y0: usize, x1: usize, y1: usize, v: f64) {
        for y in y0..y1 {
            for x in x0..x1 {
                self.px[y * self.w + x] = v;
            }
        }
    }

    fn at(&self, x: usize, y: usize) -> f64 {
        self.px[y * self.w + x]
    }

    /// One clockwise quarter turn.
    fn turned(&self) -> Canvas {
        let (w, h) = (self.h, self.w);
        let mut px = vec![0.0; w * h];
        for y in 0..self.h {
            for x in 0..self.w {
                px[x * w + (self.h - 1 - y)] = self.at(x, y);
            }
        }
        Canvas { w, h, px }
    }

    fn rotated(&self, rotation: Rotation) -> Canvas {
        (0..rotation.quarter_turns()).fold(self.clone(), |c, _| c.turned())
    }

    fn mean(&self, (x0, y0, x1, y1): (usize, usize, usize, usize)) -> f64 {
        let mut s = 0.0;
        for y in y0..y1 {
            for x in x0..x1 {
                s += self.at(x, y);
            }
        }
        s / ((x1 - x0) * (y1 - y0)) as f64
    }
}

fn background_level(lux: f64) -> f64 {
    10.0 + 30.0 * lux.clamp(1.0, 2000.0).ln() / 2000f64.ln()
}

/// Draws a reading. The decimal point follows the last whole digit when the
/// fraction is non-empty.
pub fn render_display(
    r: &Reading,
    layout: &DisplayLayout,
    scene: &DisplayScene,
) -> Result<Frame, StimulusError> {
    if r.whole_digits.len() > MAX_WHOLE_DIGITS || r.frac_digits.len() > MAX_FRAC_DIGITS {
        return Err(StimulusError::LayoutOverflow(format!(
            "{} whole / {} fractional digits exceed {MAX_WHOLE_DIGITS}/{MAX_FRAC_DIGITS}",
            r.whole_digits.len(),
            r.frac_digits.len()
        )));
    }
    let (rw, rh) = rotated_panel_size(r, layout.rotation);
    if layout.x + rw > layout.frame_width || layout.y + rh > layout.frame_height {
        return Err(StimulusError::LayoutOverflow(format!(
            "{rw}×{rh} panel at ({}, {}) does not fit a {}×{} frame",
            layout.x, layout.y, layout.frame_width, layout.frame_height
        )));
    }
    let bg = background_level(scene.illuminance_lux);
    let panel_level = bg + PANEL_ABOVE_BACKGROUND;

    let cells: Vec<(SegmentSet, bool)> = {
        let mut v = Vec::new();
        if r.negative {
            v.push((SegmentSet::MINUS, false));
        }
        let last_whole = r.whole_digits.len() - 1;
        for (i, c) in r.whole_digits.chars().enumerate() {
            let d = c.to_digit(10).expect("validated digit") as usize;
            v.push((SEGMENT_TABLE[d], i == last_whole && !r.frac_digits.is_empty()));
        }
        for c in r.frac_digits.chars() {
            v.push((SEGMENT_TABLE[c.to_digit(10).expect("validated digit") as usize], false));
        }
        v
    };
    let (pw, ph) = panel_size(cells.len());
    let mut panel = Canvas {
        w: pw,
        h: ph,
        px: vec![panel_level; pw * ph],
    };
    for (i, (segs, dp)) in cells.iter().enumerate() {
        let ox = MARGIN_X + i * PITCH;
        for (s, &(x0, y0, x1, y1)) in SEGMENT_RECTS.iter().enumerate() {
            if segs.contains(s) {
                panel.fill_rect(ox + x0, MARGIN_TOP + y0, ox + x1, MARGIN_TOP + y1, LIT_LEVEL);
            }
        }
        if *dp {
            let (x0, y0, x1, y1) = DP_RECT;
            panel.fill_rect(ox + x0, MARGIN_TOP + y0, ox + x1, MARGIN_TOP + y1, LIT_LEVEL);
        }
    }
    let strip_y = MARGIN_TOP + CELL_H + STRIP_OFFSET;
    panel.fill_rect(MARGIN_X, strip_y, pw - MARGIN_X, strip_y + STRIP_H, LIT_LEVEL);
    let panel = panel.rotated(layout.rotation);

    let noise = (scene.noise_sigma > 0.0)
        .then(|| Normal::new(0.0, scene.noise_sigma))
        .transpose()
        .map_err(|_| StimulusError::InvalidScene("noise_sigma must be ≥ 0".into()))?;
    let mut rng = seed::rng(scene.seed);
    let mut pixels = Vec::with_capacity(layout.frame_width * layout.frame_height);
    for y in 0..layout.frame_height {
        for x in 0..layout.frame_width {
            let inside = x >= layout.x && x < layout.x + rw && y >= layout.y && y < layout.y + rh;
            let mut v = if inside {
                panel.at(x - layout.x, y - layout.y)
            } else {
                bg
            };
            if let Some(n) = &noise {
                v += n.sample(&mut rng);
            }
            pixels.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    Frame::new(layout.frame_width, layout.frame_height, pixels)
}

/// Calibration of the reading core.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplayParams {
    /// Minimum margin of panel pixels above the frame median.
    pub panel_margin: f64,
    /// Fraction of the busiest row/column count that marks panel extent.
    pub extent_fraction: f64,
}

impl Default for DisplayParams {
    fn default() -> Self {
        DisplayParams {
            panel_margin: PANEL_ABOVE_BACKGROUND / 2.0,
            extent_fraction: 0.5,
        }
    }
}

fn median(values: &mut [u8]) -> f64 {
    values.sort_unstable();
    values[values.len() / 2] as f64
}

/// Bounding box `(x0, y0, x1, y1)` of the panel.
fn locate_panel(frame: &Frame, params: &DisplayParams) -> Option<(usize, usize, usize, usize)> {
    let mut all = frame.pixels().to_vec();
    let threshold = median(&mut all) + params.panel_margin;
    let (w, h) = (frame.width(), frame.height());
    let mut rows = vec![0usize; h];
    let mut cols = vec![0usize; w];
    for (y, row) in rows.iter_mut().enumerate() {
        for (x, col) in cols.iter_mut().enumerate() {
            if frame.get(x, y) as f64 > threshold {
                *row += 1;
                *col += 1;
            }
        }
    }
    let extent = |counts: &[usize]| {
        let peak = *counts.iter().max()?;
        if peak < 3 {
            return None;
        }
        let cut = ((peak as f64 * params.extent_fraction) as usize).max(2);
        let first = counts.iter().position(|&c| c >= cut)?;
        let last = counts.iter().rposition(|&c| c >= cut)?;
        Some((first, last + 1))
    };
    let (y0, y1) = extent(&rows)?;
    let (x0, x1) = extent(&cols)?;
    Some((x0, y0, x1, y1))
}

/// Reads the display in `frame`, trying all four right-angle orientations.
/// Returns `None` when no panel is found or any cell is not a known pattern.
pub fn decode_display(frame: &Frame, params: &DisplayParams) -> Option<Reading> {
    let (x0, y0, x1, y1) = locate_panel(frame, params)?;
    let mut crop = Canvas {
        w: x1 - x0,
        h: y1 - y0,
        px: Vec::with_capacity((x1 - x0) * (y1 - y0)),
    };
    for y in y0..y1 {
        for x in x0..x1 {
            crop.px.push(frame.get(x, y) as f64);
        }
    }
    let mut sorted: Vec<u8> = crop.px.iter().map(|&v| v as u8).collect();
    let panel_level = median(&mut sorted);
    let lit = panel_level + (LIT_LEVEL - PANEL_ABOVE_BACKGROUND - 10.0 - panel_level).max(0.0) / 2.0;
    let lit_threshold = lit.max(panel_level + 40.0);
    Rotation::ALL
        .iter()
        .find_map(|&rot| read_upright(&crop.rotated(rot.inverse()), lit_threshold))
}

fn read_upright(c: &Canvas, lit: f64) -> Option<Reading> {
    if c.h != PANEL_H || c.w < 2 * MARGIN_X + CELL_W {
        return None;
    }
    let span = c.w - 2 * MARGIN_X - CELL_W;
    if !span.is_multiple_of(PITCH) {
        return None;
    }
    let cells = span / PITCH + 1;
    let strip_y = MARGIN_TOP + CELL_H + STRIP_OFFSET;
    let strip_mid = (c.w / 2 - 1, strip_y, c.w / 2 + 1, strip_y + STRIP_H);
    let top_mid = (c.w / 2 - 1, 0, c.w / 2 + 1, MARGIN_TOP - 1);
    if c.mean(strip_mid) < lit || c.mean(top_mid) >= lit {
        return None;
    }
    let mut negative = false;
    let mut digits = String::new();
    let mut dp_after: Option<usize> = None;
    for i in 0..cells {
        let ox = MARGIN_X + i * PITCH;
        let mut segs = SegmentSet(0);
        for (s, &(sx0, sy0, sx1, sy1)) in SEGMENT_RECTS.iter().enumerate() {
            if c.mean((ox + sx0, MARGIN_TOP + sy0, ox + sx1, MARGIN_TOP + sy1)) >= lit {
                segs.0 |= 1 << s;
            }
        }
        let dp = i + 1 < cells && {
            let (dx0, dy0, dx1, dy1) = DP_RECT;
            c.mean((ox + dx0, MARGIN_TOP + dy0, ox + dx1, MARGIN_TOP + dy1)) >= lit
        };
        if i == 0 && segs == SegmentSet::MINUS {
            if dp {
                return None;
            }
            negative = true;
            continue;
        }
        let d = segment_lookup(segs)?;
        digits.push(char::from(b'0' + d));
        if dp {
            if dp_after.is_some() {
                return None;
            }
            dp_after = Some(digits.len());
        }
    }
    if digits.is_empty() {
        return None;
    }
    let split = dp_after.unwrap_or(digits.len());
    let (whole, frac) = digits.split_at(split);
    Reading::new(negative, whole, frac).ok()
}
