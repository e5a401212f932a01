use crate::error::{Error, Result};
use crate::ingest::{GrayFrame, Rect};

/// Summed-area table with a zero first row and column.
///
/// `at(x, y)` is the sum of every pixel strictly above and left of `(x, y)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    sums: Vec<u64>,
}

impl IntegralImage {
    pub fn new(gray: &GrayFrame) -> Self {
        Self::build(gray, |v| u64::from(v))
    }

    /// Integral of squared pixel values, used for window variance.
    pub fn squared(gray: &GrayFrame) -> Self {
        Self::build(gray, |v| u64::from(v) * u64::from(v))
    }

    fn build(gray: &GrayFrame, f: impl Fn(u8) -> u64) -> Self {
        let (w, h) = (gray.width(), gray.height());
        let stride = w + 1;
        let mut sums = vec![0u64; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0u64;
            let src = &gray.data()[y * w..(y + 1) * w];
            for x in 0..w {
                row += f(src[x]);
                sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + row;
            }
        }
        Self {
            width: w,
            height: h,
            sums,
        }
    }

    /// Width of the source image; the table itself is one wider.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> u64 {
        self.sums[y * (self.width + 1) + x]
    }

    pub fn rect_sum(&self, r: Rect) -> Result<u64> {
        if r.is_empty() {
            return Err(Error::invalid(format!("rect {r:?} has zero area")));
        }
        if !r.fits_in(self.width, self.height) {
            return Err(Error::invalid(format!(
                "rect {r:?} outside {}x{} image",
                self.width, self.height
            )));
        }
        Ok(self.sum_unchecked(r.x, r.y, r.w, r.h))
    }

    #[inline]
    pub(crate) fn sum_unchecked(&self, x: usize, y: usize, w: usize, h: usize) -> u64 {
        self.at(x + w, y + h) + self.at(x, y) - self.at(x, y + h) - self.at(x + w, y)
    }
}

pub fn integral_image(gray: &GrayFrame) -> IntegralImage {
    IntegralImage::new(gray)
}

pub fn rect_sum(ii: &IntegralImage, r: Rect) -> Result<u64> {
    ii.rect_sum(r)
}
