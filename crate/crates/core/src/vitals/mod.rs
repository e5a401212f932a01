//! Heart rate from the lower face, respiration rate from the chest.

mod spherical;

pub use spherical::{green_chromaticity_trace, spherical_mean_trace, PulseTrace};

use std::fmt;
use std::str::FromStr;

use crate::dsp::{estimate_rate, FrequencyBand, RateEstimate, StftSpec, TimeSeries};
use crate::error::{Error, Result};
use crate::ingest::{luma, Channel, FaceBox, Rect, VideoClip};

/// Lower half of the face, centre row included.
pub fn hr_roi(face: FaceBox) -> Rect {
    Rect::new(face.x, face.y + face.h / 2, face.w, face.h - face.h / 2)
}

/// Full frame width from the face bottom to the frame bottom.
pub fn rr_roi(face: FaceBox, frame_h: usize, frame_w: usize) -> Result<Rect> {
    let top = face.bottom();
    if top >= frame_h {
        return Err(Error::invalid(format!(
            "face {face:?} reaches the bottom of a {frame_h}-row frame, no chest region"
        )));
    }
    Ok(Rect::new(0, top, frame_w, frame_h - top))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scalarization {
    #[default]
    SphericalLogMap,
    GreenChromaticity,
}

impl fmt::Display for Scalarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scalarization::SphericalLogMap => "spherical_log_map",
            Scalarization::GreenChromaticity => "green_chromaticity",
        })
    }
}

impl FromStr for Scalarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spherical_log_map" => Ok(Scalarization::SphericalLogMap),
            "green_chromaticity" => Ok(Scalarization::GreenChromaticity),
            other => Err(Error::invalid(format!(
                "unknown scalarization {other:?} (spherical_log_map, green_chromaticity)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub hr_band: FrequencyBand,
    pub rr_band: FrequencyBand,
    /// Butterworth order per filtering direction.
    pub filter_order: usize,
    pub stft: StftSpec,
    pub scalarization: Scalarization,
}

pub const DEFAULT_FILTER_ORDER: usize = 3;

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            hr_band: FrequencyBand::HEART,
            rr_band: FrequencyBand::RESPIRATION,
            filter_order: DEFAULT_FILTER_ORDER,
            stft: StftSpec::VIDEO,
            scalarization: Scalarization::SphericalLogMap,
        }
    }
}

pub fn pulse_signal<T: Channel>(clip: &VideoClip<T>, rois: &[Rect], mode: Scalarization) -> Result<TimeSeries> {
    match mode {
        Scalarization::SphericalLogMap => Ok(spherical_mean_trace(clip, rois)?.scalar),
        Scalarization::GreenChromaticity => green_chromaticity_trace(clip, rois),
    }
}

/// `rois` are the heart-rate ROIs, one per frame (see [`hr_roi`]).
pub fn estimate_hr<T: Channel>(clip: &VideoClip<T>, rois: &[Rect], cfg: &EstimatorConfig) -> Result<RateEstimate> {
    let signal = pulse_signal(clip, rois, cfg.scalarization)?;
    estimate_rate(&signal, cfg.hr_band, cfg.filter_order, &cfg.stft)
}

/// Mean Rec.601 gray of each frame's ROI.
pub fn mean_gray_trace<T: Channel>(clip: &VideoClip<T>, rois: &[Rect]) -> Result<TimeSeries> {
    spherical::check_rois(clip, rois)?;
    let samples = clip
        .frames()
        .iter()
        .zip(rois)
        .map(|(f, r)| {
            let sum: u64 = f
                .pixels_in(*r)
                .map(|p| u64::from(luma(p[0].to_f64(), p[1].to_f64(), p[2].to_f64())))
                .sum();
            sum as f64 / r.area() as f64
        })
        .collect();
    TimeSeries::new(samples, clip.fps())
}

/// `rois` are the chest ROIs, one per frame (see [`rr_roi`]).
pub fn estimate_rr<T: Channel>(clip: &VideoClip<T>, rois: &[Rect], cfg: &EstimatorConfig) -> Result<RateEstimate> {
    let signal = mean_gray_trace(clip, rois)?;
    estimate_rate(&signal, cfg.rr_band, cfg.filter_order, &cfg.stft)
}
