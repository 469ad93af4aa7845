use super::StimulusError;

/// Default camera resolution (square).
pub const FRAME_SIZE: usize = 96;

/// Smallest accepted frame side.
pub const MIN_FRAME_SIDE: usize = 16;

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, StimulusError> {
        if width < MIN_FRAME_SIDE || height < MIN_FRAME_SIDE {
            return Err(StimulusError::FrameTooSmall { width, height });
        }
        if pixels.len() != width * height {
            return Err(StimulusError::PixelCount {
                expected: width * height,
                actual: pixels.len(),
            });
        }
        Ok(Frame {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, StimulusError> {
        Frame::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Applies `f` to every pixel.
    pub fn map_pixels(&self, f: impl Fn(u8) -> u8) -> Frame {
        Frame {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&p| f(p)).collect(),
        }
    }
}

/// Summed-area tables of pixel values and squared values.
///
/// Integer arithmetic keeps window statistics exact, so correlation scores
/// are invariant under any pixel scaling that maps integers to integers.
pub(crate) struct Integral {
    width: usize,
    sum: Vec<i64>,
    sq: Vec<i64>,
}

impl Integral {
    pub(crate) fn new(frame: &Frame) -> Self {
        let w = frame.width + 1;
        let h = frame.height + 1;
        let mut sum = vec![0i64; w * h];
        let mut sq = vec![0i64; w * h];
        for y in 0..frame.height {
            let mut row_sum = 0i64;
            let mut row_sq = 0i64;
            for x in 0..frame.width {
                let p = frame.get(x, y) as i64;
                row_sum += p;
                row_sq += p * p;
                sum[(y + 1) * w + x + 1] = sum[y * w + x + 1] + row_sum;
                sq[(y + 1) * w + x + 1] = sq[y * w + x + 1] + row_sq;
            }
        }
        Integral { width: w, sum, sq }
    }

    fn rect(table: &[i64], stride: usize, x0: usize, y0: usize, x1: usize, y1: usize) -> i64 {
        table[y1 * stride + x1] - table[y0 * stride + x1] - table[y1 * stride + x0]
            + table[y0 * stride + x0]
    }

    /// Sum of pixels in `[x0, x1) × [y0, y1)`.
    pub(crate) fn sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> i64 {
        Self::rect(&self.sum, self.width, x0, y0, x1, y1)
    }

    pub(crate) fn sum_sq(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> i64 {
        Self::rect(&self.sq, self.width, x0, y0, x1, y1)
    }
}
