//! Binary payloads of the parameter blobs. Every field is a number or a
//! short UTF-8 word; there is nothing a device could execute.

use crate::devkit::{DevkitError, ParameterBlob, SensorKind};
use crate::stimuli::{
    DisplayParams, GazeParams, GroundPrior, KeywordParams, KeywordTemplate, NormRect,
    PersonParams, ShapeTemplate, TapParams, FEATURE_DIM,
};

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn len(&mut self, n: usize) {
        self.u8(u8::try_from(n).expect("list lengths fit in a byte"));
    }
    fn rect(&mut self, r: &NormRect) {
        for v in [r.x0, r.y0, r.x1, r.y1] {
            self.f64(v);
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
}

fn short() -> DevkitError {
    DevkitError::InvalidParams("payload ends early".into())
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DevkitError> {
        if self.bytes.len() < n {
            return Err(short());
        }
        let (head, rest) = self.bytes.split_at(n);
        self.bytes = rest;
        Ok(head)
    }
    fn u8(&mut self) -> Result<u8, DevkitError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, DevkitError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }
    fn u32(&mut self) -> Result<u32, DevkitError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn f64(&mut self) -> Result<f64, DevkitError> {
        let v = f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        if v.is_finite() {
            Ok(v)
        } else {
            Err(DevkitError::InvalidParams("non-finite number".into()))
        }
    }
    fn rect(&mut self) -> Result<NormRect, DevkitError> {
        Ok(NormRect::new(self.f64()?, self.f64()?, self.f64()?, self.f64()?))
    }
    fn finish(self) -> Result<(), DevkitError> {
        if self.bytes.is_empty() {
            Ok(())
        } else {
            Err(DevkitError::InvalidParams("trailing bytes after payload".into()))
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> DevkitError {
    DevkitError::InvalidParams(e.to_string())
}

fn check_threshold(t: f64) -> Result<(), DevkitError> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(invalid("threshold outside [0, 1]"))
    }
}

/// Parameters that travel in a [`ParameterBlob`] of one kind.
pub trait BlobPayload: Sized {
    const KIND: SensorKind;

    fn encode(&self) -> Vec<u8>;

    fn decode(payload: &[u8]) -> Result<Self, DevkitError>;

    fn to_blob(&self) -> ParameterBlob {
        ParameterBlob::new(Self::KIND, self.encode())
    }

    fn from_blob(blob: &ParameterBlob) -> Result<Self, DevkitError> {
        if blob.kind != Self::KIND {
            return Err(DevkitError::KindMismatch {
                expected: Self::KIND,
                actual: blob.kind,
            });
        }
        Self::decode(&blob.payload)
    }
}

fn write_template(w: &mut Writer, t: &ShapeTemplate) {
    w.f64(t.aspect);
    match &t.ground {
        None => w.u8(0),
        Some(g) => {
            w.u8(1);
            w.f64(g.horizon);
            w.f64(g.foot_drop);
            w.u16(g.slack_px as u16);
        }
    }
    w.len(t.parts.len());
    t.parts.iter().for_each(|p| w.rect(p));
    w.len(t.heights.len());
    t.heights.iter().for_each(|&h| w.u16(h));
}

fn read_template(r: &mut Reader<'_>) -> Result<ShapeTemplate, DevkitError> {
    let aspect = r.f64()?;
    let ground = match r.u8()? {
        0 => None,
        1 => Some(GroundPrior {
            horizon: r.f64()?,
            foot_drop: r.f64()?,
            slack_px: r.u16()? as usize,
        }),
        _ => return Err(invalid("ground flag must be 0 or 1")),
    };
    let parts = (0..r.u8()?).map(|_| r.rect()).collect::<Result<_, _>>()?;
    let heights = (0..r.u8()?).map(|_| r.u16()).collect::<Result<_, _>>()?;
    let t = ShapeTemplate {
        aspect,
        parts,
        heights,
        ground,
    };
    t.validate().map_err(invalid)?;
    Ok(t)
}

impl BlobPayload for PersonParams {
    const KIND: SensorKind = SensorKind::Person;

    fn encode(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.f64(self.threshold);
        write_template(&mut w, &self.template);
        w.0
    }

    fn decode(payload: &[u8]) -> Result<Self, DevkitError> {
        let mut r = Reader { bytes: payload };
        let threshold = r.f64()?;
        check_threshold(threshold)?;
        let template = read_template(&mut r)?;
        r.finish()?;
        Ok(PersonParams {
            template,
            threshold,
        })
    }
}

impl BlobPayload for GazeParams {
    const KIND: SensorKind = SensorKind::Gaze;

    fn encode(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.f64(self.threshold);
        write_template(&mut w, &self.body);
        w.rect(&self.head);
        w.len(self.features.len());
        self.features.iter().for_each(|f| w.rect(f));
        w.0
    }

    fn decode(payload: &[u8]) -> Result<Self, DevkitError> {
        let mut r = Reader { bytes: payload };
        let threshold = r.f64()?;
        check_threshold(threshold)?;
        let body = read_template(&mut r)?;
        let head = r.rect()?;
        let features: Vec<NormRect> = (0..r.u8()?).map(|_| r.rect()).collect::<Result<_, _>>()?;
        r.finish()?;
        if !head.is_valid() || features.is_empty() || features.iter().any(|f| !f.is_valid()) {
            return Err(invalid("head and feature boxes must be normalised rectangles"));
        }
        Ok(GazeParams {
            body,
            head,
            features,
            threshold,
        })
    }
}

impl BlobPayload for TapParams {
    const KIND: SensorKind = SensorKind::Tap;

    fn encode(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.f64(self.threshold_g);
        w.u32(self.refractory_ms as u32);
        w.0
    }

    fn decode(payload: &[u8]) -> Result<Self, DevkitError> {
        let mut r = Reader { bytes: payload };
        let p = TapParams {
            threshold_g: r.f64()?,
            refractory_ms: r.u32()? as u64,
        };
        r.finish()?;
        if p.threshold_g <= 0.0 {
            return Err(invalid("threshold_g must be positive"));
        }
        Ok(p)
    }
}

impl BlobPayload for KeywordParams {
    const KIND: SensorKind = SensorKind::Voice;

    fn encode(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.f64(self.threshold);
        w.u16(self.lookahead_frames as u16);
        w.len(self.templates.len());
        w.len(self.templates.first().map_or(0, |t| t.frames.len()));
        for t in &self.templates {
            w.len(t.word.len());
            w.0.extend_from_slice(t.word.as_bytes());
            t.frames.iter().flatten().for_each(|&v| w.f64(v));
        }
        w.0
    }

    fn decode(payload: &[u8]) -> Result<Self, DevkitError> {
        let mut r = Reader { bytes: payload };
        let threshold = r.f64()?;
        check_threshold(threshold)?;
        let lookahead_frames = r.u16()? as usize;
        let count = r.u8()?;
        let frames_per_word = r.u8()? as usize;
        let mut templates = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let len = r.u8()? as usize;
            let word = std::str::from_utf8(r.take(len)?)
                .map_err(|_| invalid("word is not UTF-8"))?
                .to_string();
            let mut frames = Vec::with_capacity(frames_per_word);
            for _ in 0..frames_per_word {
                let mut v = [0.0; FEATURE_DIM];
                for x in v.iter_mut() {
                    *x = r.f64()?;
                }
                frames.push(v);
            }
            templates.push(KeywordTemplate { word, frames });
        }
        r.finish()?;
        let p = KeywordParams {
            templates,
            threshold,
            lookahead_frames,
        };
        p.validate().map_err(invalid)?;
        Ok(p)
    }
}

impl BlobPayload for DisplayParams {
    const KIND: SensorKind = SensorKind::TextReader;

    fn encode(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.f64(self.panel_margin);
        w.f64(self.extent_fraction);
        w.0
    }

    fn decode(payload: &[u8]) -> Result<Self, DevkitError> {
        let mut r = Reader { bytes: payload };
        let p = DisplayParams {
            panel_margin: r.f64()?,
            extent_fraction: r.f64()?,
        };
        r.finish()?;
        if p.panel_margin <= 0.0 || !(0.0..=1.0).contains(&p.extent_fraction) {
            return Err(invalid("panel_margin must be positive, extent_fraction in [0, 1]"));
        }
        Ok(p)
    }
}

/// Factory calibration for each kind. Voice defaults to `on`/`off`.
pub fn default_blob(kind: SensorKind) -> ParameterBlob {
    match kind {
        SensorKind::Person => PersonParams::default().to_blob(),
        SensorKind::Gaze => GazeParams::default().to_blob(),
        SensorKind::Tap => TapParams::default().to_blob(),
        SensorKind::Voice => KeywordParams::for_vocabulary(&["on", "off"]).to_blob(),
        SensorKind::TextReader => DisplayParams::default().to_blob(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_default_round_trips() {
        let p = PersonParams::rodent();
        assert_eq!(PersonParams::from_blob(&p.to_blob()).unwrap(), p);
        let g = GazeParams::default();
        assert_eq!(GazeParams::from_blob(&g.to_blob()).unwrap(), g);
        let t = TapParams::default();
        assert_eq!(TapParams::from_blob(&t.to_blob()).unwrap(), t);
        let k = KeywordParams::for_vocabulary(&["go", "stop", "left"]);
        assert_eq!(KeywordParams::from_blob(&k.to_blob()).unwrap(), k);
        let d = DisplayParams::default();
        assert_eq!(DisplayParams::from_blob(&d.to_blob()).unwrap(), d);
    }

    #[test]
    fn truncated_and_padded_payloads_fail() {
        let mut bytes = TapParams::default().encode();
        bytes.push(0);
        assert!(TapParams::decode(&bytes).is_err());
        assert!(TapParams::decode(&bytes[..5]).is_err());
    }

    #[test]
    fn wrong_kind() {
        let blob = TapParams::default().to_blob();
        assert!(matches!(
            PersonParams::from_blob(&blob),
            Err(DevkitError::KindMismatch { .. })
        ));
    }
}
