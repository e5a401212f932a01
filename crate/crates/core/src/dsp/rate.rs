use super::{bandpass, rms, stft_peaks, BandpassSpec, FrequencyBand, StftSpec, TimeSeries};
use crate::error::{Error, Result};

/// Filtered signal RMS over raw (mean-removed) RMS below which the band
/// is considered empty.
pub const DEGENERATE_BAND_RATIO: f64 = 0.25;

/// Median of unsorted values; mean of the two central values for even counts.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("median"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Ok(if sorted.len() % 2 == 0 {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    } else {
        sorted[mid]
    })
}

/// Median window frequency in events per minute.
pub fn median_rate(freqs_hz: &[f64]) -> Result<f64> {
    Ok(median(freqs_hz)? * 60.0)
}

/// Rate estimate together with the evidence it was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    /// Median STFT peak frequency, per minute.
    pub per_minute: f64,
    pub window_freqs_hz: Vec<f64>,
    /// Fraction of windows whose peak sat on a band edge bin.
    pub edge_fraction: f64,
    /// RMS of the band-passed signal over RMS of the mean-removed input.
    pub band_ratio: f64,
    pub band: FrequencyBand,
}

impl RateEstimate {
    /// Almost nothing in the input lives inside the band.
    pub fn is_degenerate(&self) -> bool {
        !(self.band_ratio >= DEGENERATE_BAND_RATIO)
    }

    /// Most windows peaked at a band edge, which is what an out-of-band
    /// fundamental looks like after band-limited peak search.
    pub fn is_pinned_to_edge(&self) -> bool {
        self.edge_fraction > 0.5
    }

    pub fn is_low_confidence(&self) -> bool {
        self.is_degenerate() || self.is_pinned_to_edge()
    }
}

/// Bandpass, per-window spectral peak, median.
pub fn estimate_rate(x: &TimeSeries, band: FrequencyBand, order: usize, stft: &StftSpec) -> Result<RateEstimate> {
    let spec = BandpassSpec { band, order };
    let filtered = bandpass(x, &spec)?;
    let peaks = stft_peaks(&filtered, stft, band)?;
    let window_freqs_hz: Vec<f64> = peaks.iter().map(|p| p.freq_hz).collect();
    let per_minute = median_rate(&window_freqs_hz)?;
    let edge_fraction = peaks.iter().filter(|p| p.at_band_edge).count() as f64 / peaks.len() as f64;

    let mean = x.samples().iter().sum::<f64>() / x.len() as f64;
    let centred: Vec<f64> = x.samples().iter().map(|v| v - mean).collect();
    let raw = rms(&centred);
    let band_ratio = if raw > 0.0 { rms(filtered.samples()) / raw } else { 0.0 };

    Ok(RateEstimate {
        per_minute,
        window_freqs_hz,
        edge_fraction,
        band_ratio,
        band,
    })
}

/// The single rate entry point shared by the video estimators and the
/// ground-truth path.
pub fn dominant_rate(x: &TimeSeries, band: FrequencyBand, order: usize, stft: &StftSpec) -> Result<f64> {
    estimate_rate(x, band, order, stft).map(|e| e.per_minute)
}
