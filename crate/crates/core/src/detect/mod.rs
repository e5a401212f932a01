//! Viola-Jones face detection and per-frame ROI tracking.

mod cascade;
mod group;
mod integral;
mod opencv;

pub use cascade::{Cascade, Stage, Tree, WeightedRect};
pub use group::group_rects;
pub use integral::{integral_image, rect_sum, IntegralImage};
pub use opencv::convert_opencv_xml;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::{Channel, FaceBox, GrayFrame, Rect, VideoClip};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectParams {
    /// Geometric step between window sizes, > 1.
    pub scale_factor: f64,
    pub min_neighbors: usize,
    /// Smallest window side considered, pixels.
    pub min_size: usize,
    pub group_eps: f64,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self {
            scale_factor: 1.1,
            min_neighbors: 3,
            min_size: 0,
            group_eps: 0.2,
        }
    }
}

/// Raw window hits before grouping, across all scales.
pub fn detect_candidates(c: &Cascade, gray: &GrayFrame, params: &DetectParams) -> Result<Vec<Rect>> {
    if !(params.scale_factor > 1.0) || !params.scale_factor.is_finite() {
        return Err(Error::invalid(format!("scale factor must exceed 1, got {}", params.scale_factor)));
    }
    let ii = IntegralImage::new(gray);
    let sq = IntegralImage::squared(gray);
    let (fw, fh) = (gray.width(), gray.height());
    let mut hits = Vec::new();
    let mut scale = 1.0f64;
    loop {
        let ww = (c.window_w as f64 * scale).round() as usize;
        let wh = (c.window_h as f64 * scale).round() as usize;
        if ww > fw || wh > fh {
            break;
        }
        if ww.min(wh) >= params.min_size {
            let step = (scale.round() as usize).max(1);
            for y in (0..=fh - wh).step_by(step) {
                for x in (0..=fw - ww).step_by(step) {
                    let win = Rect::new(x, y, ww, wh);
                    if c.evaluate_window(&ii, &sq, win, scale) {
                        hits.push(win);
                    }
                }
            }
        }
        scale *= params.scale_factor;
    }
    Ok(hits)
}

/// Multiscale sliding-window detection, grouped, largest box first.
pub fn detect_faces(c: &Cascade, gray: &GrayFrame, params: &DetectParams) -> Result<Vec<FaceBox>> {
    let hits = detect_candidates(c, gray, params)?;
    group_rects(&hits, params.min_neighbors, params.group_eps)
}

#[derive(Debug, Clone)]
pub enum RoiSource {
    Manual(Rect),
    Cascade { cascade: Cascade, params: DetectParams },
}

/// One face box per frame.
///
/// Cascade mode keeps the largest detection; frames without one reuse the
/// previous box, and leading misses take the first success.
pub fn track_roi<T: Channel>(clip: &VideoClip<T>, source: &RoiSource) -> Result<Vec<FaceBox>> {
    match source {
        RoiSource::Manual(r) => {
            if r.is_empty() || !r.fits_in(clip.width(), clip.height()) {
                return Err(Error::invalid(format!(
                    "manual ROI {r:?} does not fit {}x{} frames",
                    clip.width(),
                    clip.height()
                )));
            }
            Ok(vec![*r; clip.len()])
        }
        RoiSource::Cascade { cascade, params } => {
            let per_frame = clip
                .frames()
                .par_iter()
                .map(|f| Ok(detect_faces(cascade, &f.to_gray(), params)?.first().copied()))
                .collect::<Result<Vec<Option<Rect>>>>()?;
            hold_last(&per_frame)
        }
    }
}

/// Fills missed frames from the last success, backfilling leading misses.
pub fn hold_last(detections: &[Option<FaceBox>]) -> Result<Vec<FaceBox>> {
    let first = detections
        .iter()
        .flatten()
        .next()
        .copied()
        .ok_or(Error::NoFaceFound(detections.len()))?;
    let mut last = first;
    Ok(detections
        .iter()
        .map(|d| {
            if let Some(b) = d {
                last = *b;
            }
            last
        })
        .collect())
}
