//! Numeric kernels shared by the estimators and the ground-truth path.

mod filter;
mod rate;
mod spline;
mod stft;

pub use filter::{bandpass, BandpassSpec, Biquad, SosFilter};
pub use rate::{dominant_rate, estimate_rate, median, median_rate, RateEstimate};
pub use spline::{cubic_spline, NaturalSpline};
pub use stft::{stft_peak_freqs, stft_peaks, SpectralPeak, StftSpec};

use crate::error::{Error, Result};

/// Uniformly sampled scalar signal.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    samples: Vec<f64>,
    sample_rate: f64,
}

impl TimeSeries {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::invalid(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Length in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Samples `range` as a new series at the same rate.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.end > self.samples.len() || range.start > range.end {
            return Err(Error::invalid(format!(
                "range {range:?} outside series of length {}",
                self.samples.len()
            )));
        }
        Ok(Self {
            samples: self.samples[range].to_vec(),
            sample_rate: self.sample_rate,
        })
    }

    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Self {
        Self {
            samples,
            sample_rate: self.sample_rate,
        }
    }
}

/// Closed frequency interval in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyBand {
    pub low_hz: f64,
    pub high_hz: f64,
}

impl FrequencyBand {
    /// 0.7-2.5 Hz, i.e. 42-150 beats per minute.
    pub const HEART: FrequencyBand = FrequencyBand {
        low_hz: 0.7,
        high_hz: 2.5,
    };

    /// 0.2-0.5 Hz, i.e. 12-30 breaths per minute.
    pub const RESPIRATION: FrequencyBand = FrequencyBand {
        low_hz: 0.2,
        high_hz: 0.5,
    };

    pub fn new(low_hz: f64, high_hz: f64) -> Result<Self> {
        if !(low_hz > 0.0 && high_hz > low_hz && high_hz.is_finite()) {
            return Err(Error::invalid(format!(
                "band must satisfy 0 < low < high, got {low_hz}-{high_hz} Hz"
            )));
        }
        Ok(Self { low_hz, high_hz })
    }

    pub fn contains(&self, hz: f64) -> bool {
        hz >= self.low_hz && hz <= self.high_hz
    }

    /// Checks `0 < low < high < nyquist`.
    pub fn check_rate(&self, sample_rate: f64) -> Result<()> {
        if !(self.low_hz > 0.0 && self.high_hz > self.low_hz && self.high_hz < sample_rate / 2.0) {
            return Err(Error::invalid(format!(
                "band {}-{} Hz is infeasible at {} Hz sampling",
                self.low_hz, self.high_hz, sample_rate
            )));
        }
        Ok(())
    }
}

/// Subtracts a centred moving mean of `window_s` seconds.
///
/// The window spans `round(window_s * fs)` samples rounded down to an odd
/// count around each sample and is truncated at the signal edges.
pub fn detrend(x: &TimeSeries, window_s: f64) -> Result<TimeSeries> {
    let width = (window_s * x.sample_rate).round();
    if !(width >= 3.0) {
        return Err(Error::invalid(format!(
            "detrend window of {window_s} s spans fewer than 3 samples at {} Hz",
            x.sample_rate
        )));
    }
    let half = (width as usize) / 2;
    let n = x.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in &x.samples {
        acc += v;
        prefix.push(acc);
    }
    let out = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            let mean = (prefix[hi] - prefix[lo]) / (hi - lo) as f64;
            x.samples[i] - mean
        })
        .collect();
    Ok(x.with_samples(out))
}

/// Linear-interpolated percentile (`p` in 0..=100) of unsorted values.
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("percentile"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, p / 100.0))
}

/// Inclusive linear-interpolation quantile of an ascending slice.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub(crate) fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(samples: Vec<f64>, fs: f64) -> TimeSeries {
        TimeSeries::new(samples, fs).unwrap()
    }

    fn brute_force_detrend(x: &[f64], half: usize) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let lo = i.saturating_sub(half);
                let hi = (i + half).min(x.len() - 1);
                let window = &x[lo..=hi];
                x[i] - window.iter().sum::<f64>() / window.len() as f64
            })
            .collect()
    }

    #[test]
    fn rejects_bad_series() {
        assert!(TimeSeries::new(vec![1.0], 0.0).is_err());
        assert!(TimeSeries::new(vec![f64::NAN], 10.0).is_err());
    }

    #[test]
    fn detrend_constant_is_zero() {
        let y = detrend(&series(vec![3.5; 200], 128.0), 0.5).unwrap();
        assert!(y.samples().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn detrend_matches_brute_force_moving_mean() {
        let fs = 128.0;
        let x: Vec<f64> = (0..1280)
            .map(|i| (2.0 * std::f64::consts::PI * i as f64 / fs).sin())
            .collect();
        let y = detrend(&series(x.clone(), fs), 1.0).unwrap();
        let oracle = brute_force_detrend(&x, 64);
        let err: Vec<f64> = y.samples().iter().zip(&oracle).map(|(a, b)| a - b).collect();
        assert!(rms(&err) < 1e-6);
    }

    #[test]
    fn detrend_ramp_residual_bounded() {
        let fs = 100.0;
        let slope = 0.5;
        let x: Vec<f64> = (0..1000).map(|i| slope * i as f64).collect();
        let window_s = 0.2;
        let y = detrend(&series(x, fs), window_s).unwrap();
        let bound = slope * (window_s * fs) / 2.0;
        assert!(y.samples().iter().all(|v| v.abs() <= bound + 1e-9));
        // interior is exactly zero for a symmetric window over a ramp
        assert!(y.samples()[50..950].iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn detrend_window_too_small() {
        assert!(detrend(&series(vec![0.0; 10], 10.0), 0.2).is_err());
    }

    #[test]
    fn percentile_interpolates() {
        assert_eq!(percentile(&[1.0, 2.0, 3.0, 4.0, 5.0], 50.0).unwrap(), 3.0);
        assert_eq!(percentile(&[4.0, 1.0, 3.0, 2.0], 25.0).unwrap(), 1.75);
        assert!(percentile(&[], 50.0).is_err());
    }

    #[test]
    fn band_feasibility() {
        assert!(FrequencyBand::HEART.check_rate(30.0).is_ok());
        assert!(FrequencyBand::HEART.check_rate(4.0).is_err());
        assert!(FrequencyBand::new(0.5, 0.2).is_err());
    }
}
