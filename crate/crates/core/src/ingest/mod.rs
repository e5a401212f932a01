//! Frame, clip and physiological-recording I/O.

mod manifest;
mod physio;
mod ppm;
mod raw;

pub use manifest::{frame_file_name, Condition, Manifest, TrialEntry, HOLD_BREATH_TASK, MANIFEST_FILE, PHYSIO_FILE};
pub use physio::{load_physio_csv, write_physio_csv, PhysioRecord};
pub use ppm::{decode_ppm, encode_ppm, read_frame_range, read_ppm, read_ppm_sequence, write_ppm};
pub use raw::{read_raw_rgb, write_raw_rgb};

use crate::error::{Error, Result};

/// Scalar type of a colour channel.
///
/// Camera frames are `u8`; synthetic clips rendered without quantization
/// use `f32` in the same 0-255 range.
pub trait Channel: Copy + Send + Sync + PartialEq + std::fmt::Debug + 'static {
    fn to_f64(self) -> f64;
}

impl Channel for u8 {
    #[inline]
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
}

impl Channel for f32 {
    #[inline]
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
}

/// Axis-aligned pixel rectangle, top-left origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

/// A detected face rectangle.
pub type FaceBox = Rect;

impl Rect {
    pub const fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Self { x, y, w, h }
    }

    pub fn right(&self) -> usize {
        self.x + self.w
    }

    pub fn bottom(&self) -> usize {
        self.y + self.h
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn is_empty(&self) -> bool {
        self.w == 0 || self.h == 0
    }

    pub fn fits_in(&self, width: usize, height: usize) -> bool {
        self.right() <= width && self.bottom() <= height
    }

    /// Intersection with the frame; may come back empty.
    pub fn clamp_to(&self, width: usize, height: usize) -> Rect {
        let x = self.x.min(width);
        let y = self.y.min(height);
        Rect {
            x,
            y,
            w: self.right().min(width) - x,
            h: self.bottom().min(height) - y,
        }
    }

    /// Centre in pixel coordinates.
    pub fn centre(&self) -> (f64, f64) {
        (
            self.x as f64 + self.w as f64 / 2.0,
            self.y as f64 + self.h as f64 / 2.0,
        )
    }
}

/// Interleaved RGB frame, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbFrame<T = u8> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Channel> RgbFrame<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("frame dimensions must be non-zero"));
        }
        if data.len() != width * height * 3 {
            return Err(Error::invalid(format!(
                "{}x{} RGB frame needs {} values, got {}",
                width,
                height,
                width * height * 3,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, rgb: [T; 3]) -> Result<Self> {
        let data = std::iter::repeat_n(rgb, width * height).flatten().collect();
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [T; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [T; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Pixels of `rect`, row by row. `rect` must fit the frame.
    pub fn pixels_in(&self, rect: Rect) -> impl Iterator<Item = [T; 3]> + '_ {
        debug_assert!(rect.fits_in(self.width, self.height));
        (rect.y..rect.bottom()).flat_map(move |y| {
            let row = &self.data[(y * self.width + rect.x) * 3..(y * self.width + rect.right()) * 3];
            row.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
        })
    }

    pub fn crop(&self, rect: Rect) -> Result<Self> {
        if rect.is_empty() || !rect.fits_in(self.width, self.height) {
            return Err(Error::invalid(format!(
                "crop {rect:?} does not fit a {}x{} frame",
                self.width, self.height
            )));
        }
        let data = (rect.y..rect.bottom())
            .flat_map(|y| {
                self.data[(y * self.width + rect.x) * 3..(y * self.width + rect.right()) * 3]
                    .iter()
                    .copied()
            })
            .collect();
        Ok(Self {
            width: rect.w,
            height: rect.h,
            data,
        })
    }

    pub fn to_gray(&self) -> GrayFrame {
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| luma(p[0].to_f64(), p[1].to_f64(), p[2].to_f64()))
            .collect();
        GrayFrame {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

impl RgbFrame<f32> {
    /// Rounds and clamps every channel to 8 bits.
    pub fn to_u8(&self) -> RgbFrame<u8> {
        RgbFrame {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| v.round().clamp(0.0, 255.0) as u8).collect(),
        }
    }
}

impl RgbFrame<u8> {
    pub fn to_f32(&self) -> RgbFrame<f32> {
        RgbFrame {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f32::from(v)).collect(),
        }
    }
}

/// Rec.601 luma, rounded to the nearest integer and clamped to 0-255.
#[inline]
pub fn luma(r: f64, g: f64, b: f64) -> u8 {
    (0.299 * r + 0.587 * g + 0.114 * b).round().clamp(0.0, 255.0) as u8
}

/// 8-bit single-channel frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayFrame {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayFrame {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::invalid(format!(
                "{width}x{height} gray frame with {} values",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// Sum and pixel count of `rect`; `rect` must fit the frame.
    pub fn sum_in(&self, rect: Rect) -> (u64, usize) {
        let sum = (rect.y..rect.bottom())
            .map(|y| {
                self.data[y * self.width + rect.x..y * self.width + rect.right()]
                    .iter()
                    .map(|&v| u64::from(v))
                    .sum::<u64>()
            })
            .sum();
        (sum, rect.area())
    }
}

/// Uniformly sampled sequence of equally sized RGB frames.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoClip<T = u8> {
    frames: Vec<RgbFrame<T>>,
    fps: f64,
}

impl<T: Channel> VideoClip<T> {
    pub fn new(frames: Vec<RgbFrame<T>>, fps: f64) -> Result<Self> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::invalid(format!("fps must be positive, got {fps}")));
        }
        let Some(first) = frames.first() else {
            return Err(Error::Empty("video clip"));
        };
        let (w, h) = (first.width, first.height);
        if let Some(i) = frames.iter().position(|f| f.width != w || f.height != h) {
            return Err(Error::invalid(format!(
                "frame {i} is {}x{}, clip is {w}x{h}",
                frames[i].width, frames[i].height
            )));
        }
        Ok(Self { frames, fps })
    }

    pub fn frames(&self) -> &[RgbFrame<T>] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<RgbFrame<T>> {
        self.frames
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn width(&self) -> usize {
        self.frames[0].width
    }

    pub fn height(&self) -> usize {
        self.frames[0].height
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Seconds covered by the clip.
    pub fn duration(&self) -> f64 {
        self.frames.len() as f64 / self.fps
    }

    pub fn to_grayscale(&self) -> Vec<GrayFrame> {
        self.frames.iter().map(RgbFrame::to_gray).collect()
    }
}

impl VideoClip<f32> {
    pub fn to_u8(&self) -> VideoClip<u8> {
        VideoClip {
            frames: self.frames.iter().map(RgbFrame::to_u8).collect(),
            fps: self.fps,
        }
    }
}

impl VideoClip<u8> {
    pub fn to_f32(&self) -> VideoClip<f32> {
        VideoClip {
            frames: self.frames.iter().map(RgbFrame::to_f32).collect(),
            fps: self.fps,
        }
    }
}

/// Pixels removed from each side of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropMargins {
    pub left: usize,
    pub right: usize,
    pub top: usize,
    pub bottom: usize,
}

impl CropMargins {
    pub const NONE: CropMargins = CropMargins {
        left: 0,
        right: 0,
        top: 0,
        bottom: 0,
    };

    /// Full-HD webcam framing: 300 px off each side and 200 px off the top,
    /// leaving 1320x880.
    pub const WEBCAM: CropMargins = CropMargins {
        left: 300,
        right: 300,
        top: 200,
        bottom: 0,
    };

    pub fn new(left: usize, right: usize, top: usize, bottom: usize) -> Self {
        Self {
            left,
            right,
            top,
            bottom,
        }
    }

    /// Remaining rectangle, or an error if nothing would be left.
    pub fn region(&self, width: usize, height: usize) -> Result<Rect> {
        if self.left + self.right >= width || self.top + self.bottom >= height {
            return Err(Error::invalid(format!(
                "crop {}/{}/{}/{} (l/r/t/b) leaves nothing of a {width}x{height} frame",
                self.left, self.right, self.top, self.bottom
            )));
        }
        Ok(Rect::new(
            self.left,
            self.top,
            width - self.left - self.right,
            height - self.top - self.bottom,
        ))
    }
}

impl std::ops::Add for CropMargins {
    type Output = CropMargins;

    fn add(self, o: CropMargins) -> CropMargins {
        CropMargins::new(
            self.left + o.left,
            self.right + o.right,
            self.top + o.top,
            self.bottom + o.bottom,
        )
    }
}

pub fn crop_clip<T: Channel>(clip: &VideoClip<T>, margins: CropMargins) -> Result<VideoClip<T>> {
    let region = margins.region(clip.width(), clip.height())?;
    if region.w == clip.width() && region.h == clip.height() {
        return Ok(clip.clone());
    }
    let frames = clip
        .frames
        .iter()
        .map(|f| f.crop(region))
        .collect::<Result<Vec<_>>>()?;
    VideoClip::new(frames, clip.fps)
}

pub fn to_grayscale<T: Channel>(clip: &VideoClip<T>) -> Vec<GrayFrame> {
    clip.to_grayscale()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gradient(w: usize, h: usize) -> RgbFrame {
        let data = (0..h)
            .flat_map(|y| (0..w).flat_map(move |x| [(x * 10) as u8, (y * 10) as u8, ((x + y) * 5) as u8]))
            .collect();
        RgbFrame::new(w, h, data).unwrap()
    }

    #[test]
    fn luma_cases() {
        assert_eq!(luma(255.0, 255.0, 255.0), 255);
        assert_eq!(luma(0.0, 0.0, 0.0), 0);
        assert_eq!(luma(255.0, 0.0, 0.0), 76);
    }

    #[test]
    fn crop_to_webcam_resolution() {
        let frame = RgbFrame::filled(1920, 1080, [1u8, 2, 3]).unwrap();
        let clip = VideoClip::new(vec![frame], 30.0).unwrap();
        let out = crop_clip(&clip, CropMargins::WEBCAM).unwrap();
        assert_eq!((out.width(), out.height()), (1320, 880));
    }

    #[test]
    fn crop_identity_and_index_shift() {
        let clip = VideoClip::new(vec![gradient(8, 8)], 30.0).unwrap();
        assert_eq!(crop_clip(&clip, CropMargins::NONE).unwrap(), clip);
        let out = crop_clip(&clip, CropMargins::new(1, 1, 1, 1)).unwrap();
        assert_eq!((out.width(), out.height()), (6, 6));
        assert_eq!(out.frames()[0].pixel(0, 0), clip.frames()[0].pixel(1, 1));
        for y in 0..6 {
            for x in 0..6 {
                assert_eq!(out.frames()[0].pixel(x, y), clip.frames()[0].pixel(x + 1, y + 1));
            }
        }
    }

    #[test]
    fn crop_too_large() {
        let clip = VideoClip::new(vec![gradient(8, 8)], 30.0).unwrap();
        assert!(crop_clip(&clip, CropMargins::new(4, 4, 0, 0)).is_err());
        assert!(crop_clip(&clip, CropMargins::new(0, 0, 7, 1)).is_err());
    }

    #[test]
    fn clip_rejects_mixed_sizes() {
        assert!(VideoClip::new(vec![gradient(4, 4), gradient(5, 4)], 30.0).is_err());
        assert!(VideoClip::<u8>::new(vec![], 30.0).is_err());
        assert!(VideoClip::new(vec![gradient(4, 4)], 0.0).is_err());
    }

    #[test]
    fn clamp_rect() {
        assert_eq!(Rect::new(5, 5, 10, 10).clamp_to(8, 12), Rect::new(5, 5, 3, 7));
        assert!(Rect::new(9, 0, 3, 3).clamp_to(8, 8).is_empty());
    }

    proptest! {
        #[test]
        fn crop_composes(
            w in 6usize..20, h in 6usize..20,
            a in (0usize..3, 0usize..3, 0usize..3, 0usize..3),
            b in (0usize..2, 0usize..2, 0usize..2, 0usize..2),
        ) {
            let clip = VideoClip::new(vec![gradient(w, h)], 30.0).unwrap();
            let ma = CropMargins::new(a.0, a.1, a.2, a.3);
            let mb = CropMargins::new(b.0, b.1, b.2, b.3);
            let once = crop_clip(&clip, ma + mb);
            let twice = crop_clip(&clip, ma).and_then(|c| crop_clip(&c, mb));
            match (once, twice) {
                (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
                (Err(_), Err(_)) => {}
                (x, y) => prop_assert!(false, "{:?} vs {:?}", x.is_ok(), y.is_ok()),
            }
        }

        #[test]
        fn gray_mean_equals_mean_of_pixel_grays(data in proptest::collection::vec(any::<u8>(), 48)) {
            let frame = RgbFrame::new(4, 4, data).unwrap();
            let gray = frame.to_gray();
            let direct: f64 = frame
                .pixels_in(Rect::new(0, 0, 4, 4))
                .map(|p| f64::from(luma(p[0].into(), p[1].into(), p[2].into())))
                .sum::<f64>() / 16.0;
            let (sum, n) = gray.sum_in(Rect::new(0, 0, 4, 4));
            let via_frame = sum as f64 / n as f64;
            prop_assert!((direct - via_frame).abs() <= 1e-9 * direct.abs().max(1.0));
        }
    }
}
