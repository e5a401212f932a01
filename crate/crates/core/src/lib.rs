//! Camera-based vital sign estimation.
//!
//! The crate turns a face video into a heart-rate estimate (lower-face
//! spherical-mean colour trace) and a respiration-rate estimate (mean
//! grayscale of the chest region below the face), extracts matching
//! reference rates from ECG and respiration-belt recordings, and scores
//! the two against each other.
//!
//! Modules are layered bottom-up:
//!
//! - [`ingest`]: frame and physiological-recording readers, cropping, luma.
//! - [`detect`]: integral images and Haar cascade face detection.
//! - [`dsp`]: detrending, zero-phase Butterworth filtering, STFT peak
//!   tracking and spline interpolation.
//! - [`vitals`]: the heart-rate and respiration-rate estimators.
//! - [`groundtruth`]: reference rates from ECG and belt signals.
//! - [`synth`]: synthetic clips and recordings with known rates.
//! - [`eval`]: trial segmentation, error statistics and report output.

pub mod detect;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod groundtruth;
pub mod ingest;
pub mod synth;
pub mod vitals;

pub use error::{Error, Result};
