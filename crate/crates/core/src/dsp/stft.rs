use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::{FrequencyBand, TimeSeries};
use crate::error::{Error, Result};

/// Hann-windowed STFT layout, all lengths in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftSpec {
    pub window_len: usize,
    pub hop: usize,
    pub fft_size: usize,
}

impl StftSpec {
    /// 256-sample window, 1 s hop and 16x zero padding at 30 fps.
    pub const VIDEO: StftSpec = StftSpec {
        window_len: 256,
        hop: 30,
        fft_size: 4096,
    };

    /// 8 s window, 1 s hop at 128 Hz.
    pub const PHYSIO: StftSpec = StftSpec {
        window_len: 1024,
        hop: 128,
        fft_size: 8192,
    };

    pub fn new(window_len: usize, hop: usize, fft_size: usize) -> Result<Self> {
        let spec = Self {
            window_len,
            hop,
            fft_size,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_len == 0 || self.hop == 0 {
            return Err(Error::invalid("STFT window and hop must be at least 1"));
        }
        if !self.fft_size.is_power_of_two() || self.window_len > self.fft_size {
            return Err(Error::invalid(format!(
                "STFT fft size {} must be a power of two no smaller than the window ({})",
                self.fft_size, self.window_len
            )));
        }
        Ok(())
    }

    /// Number of full windows that fit in `len` samples.
    pub fn window_count(&self, len: usize) -> usize {
        if len < self.window_len {
            0
        } else {
            (len - self.window_len) / self.hop + 1
        }
    }
}

/// Strongest in-band frequency of one STFT window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPeak {
    pub freq_hz: f64,
    pub bin: usize,
    /// The argmax landed on the first or last in-band bin, so no
    /// interpolation was applied.
    pub at_band_edge: bool,
}

/// Per-window in-band spectral peaks.
///
/// A signal with no in-band content (e.g. a constant) still yields one
/// peak per window, located wherever rounding noise happens to be largest.
/// Callers must make sure the band actually holds signal.
pub fn stft_peaks(x: &TimeSeries, spec: &StftSpec, band: FrequencyBand) -> Result<Vec<SpectralPeak>> {
    spec.validate()?;
    if x.len() < spec.window_len {
        return Err(Error::SignalTooShort(format!(
            "{} samples, STFT window needs {}",
            x.len(),
            spec.window_len
        )));
    }
    let fs = x.sample_rate();
    let n = spec.fft_size;
    let bin_hz = fs / n as f64;
    let first = ((band.low_hz / bin_hz) - 1e-9).ceil().max(0.0) as usize;
    let last = (((band.high_hz / bin_hz) + 1e-9).floor() as usize).min(n / 2);
    if first > last {
        return Err(Error::EmptyBand {
            low_hz: band.low_hz,
            high_hz: band.high_hz,
        });
    }

    // periodic Hann
    let window: Vec<f64> = (0..spec.window_len)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / spec.window_len as f64).cos())
        .collect();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let samples = x.samples();

    let mut peaks = Vec::with_capacity(spec.window_count(x.len()));
    let mut start = 0;
    while start + spec.window_len <= samples.len() {
        buf.fill(Complex64::new(0.0, 0.0));
        for (slot, (&v, &w)) in buf
            .iter_mut()
            .zip(samples[start..start + spec.window_len].iter().zip(&window))
        {
            slot.re = v * w;
        }
        fft.process_with_scratch(&mut buf, &mut scratch);

        let mut best = first;
        let mut best_mag = buf[first].norm();
        for (k, c) in buf.iter().enumerate().take(last + 1).skip(first + 1) {
            let mag = c.norm();
            if mag > best_mag {
                best = k;
                best_mag = mag;
            }
        }
        let at_band_edge = best == first || best == last;
        let offset = if at_band_edge {
            0.0
        } else {
            log_parabolic_offset(buf[best - 1].norm(), best_mag, buf[best + 1].norm())
        };
        peaks.push(SpectralPeak {
            freq_hz: (best as f64 + offset) * bin_hz,
            bin: best,
            at_band_edge,
        });
        start += spec.hop;
    }
    Ok(peaks)
}

/// One frequency per window, in Hz.
pub fn stft_peak_freqs(x: &TimeSeries, spec: &StftSpec, band: FrequencyBand) -> Result<Vec<f64>> {
    Ok(stft_peaks(x, spec, band)?.into_iter().map(|p| p.freq_hz).collect())
}

/// Vertex of the parabola through the log-magnitudes of three bins,
/// relative to the centre bin. Ratios keep the result independent of the
/// overall signal scale.
fn log_parabolic_offset(left: f64, centre: f64, right: f64) -> f64 {
    if !(left > 0.0 && centre > 0.0 && right > 0.0) {
        return 0.0;
    }
    let a = (left / centre).ln();
    let c = (right / centre).ln();
    let denom = a + c;
    if !(denom < 0.0) || !denom.is_finite() {
        return 0.0;
    }
    (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(parts: &[(f64, f64)], fs: f64, secs: f64) -> TimeSeries {
        let n = (fs * secs).round() as usize;
        let samples = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                parts.iter().map(|(f, a)| a * (2.0 * PI * f * t).sin()).sum()
            })
            .collect();
        TimeSeries::new(samples, fs).unwrap()
    }

    #[test]
    fn pure_tone_every_window() {
        let x = tone(&[(1.23, 1.0)], 30.0, 20.0);
        let freqs = stft_peak_freqs(&x, &StftSpec::VIDEO, FrequencyBand::HEART).unwrap();
        assert_eq!(freqs.len(), StftSpec::VIDEO.window_count(600));
        assert_eq!(freqs.len(), 12);
        for f in freqs {
            assert!((f - 1.23).abs() < 0.02, "{f}");
        }
    }

    #[test]
    fn dominant_of_two_tones() {
        let x = tone(&[(1.0, 1.0), (2.0, 0.3)], 30.0, 20.0);
        for f in stft_peak_freqs(&x, &StftSpec::VIDEO, FrequencyBand::HEART).unwrap() {
            assert!((f - 1.0).abs() < 0.02, "{f}");
        }
    }

    #[test]
    fn dc_signal_still_reports_one_peak_per_window() {
        let x = TimeSeries::new(vec![5.0; 600], 30.0).unwrap();
        let freqs = stft_peak_freqs(&x, &StftSpec::VIDEO, FrequencyBand::HEART).unwrap();
        assert_eq!(freqs.len(), 12);
        assert!(freqs.iter().all(|f| FrequencyBand::HEART.contains(*f)));
    }

    #[test]
    fn empty_band_is_an_error() {
        let x = tone(&[(1.0, 1.0)], 30.0, 10.0);
        let spec = StftSpec::new(256, 30, 256).unwrap();
        let band = FrequencyBand::new(1.0, 1.05).unwrap();
        assert!(matches!(stft_peak_freqs(&x, &spec, band), Err(Error::EmptyBand { .. })));
    }

    #[test]
    fn short_signal_is_an_error() {
        let x = tone(&[(1.0, 1.0)], 30.0, 5.0);
        assert!(stft_peak_freqs(&x, &StftSpec::VIDEO, FrequencyBand::HEART).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(StftSpec::new(256, 30, 3000).is_err());
        assert!(StftSpec::new(512, 30, 256).is_err());
        assert!(StftSpec::new(256, 0, 4096).is_err());
    }

    #[test]
    fn edge_peak_is_not_refined() {
        // 2.5 Hz sits exactly on bin 160 of an 8192-point FFT at 128 Hz
        let x = tone(&[(2.5, 1.0)], 128.0, 10.0);
        let peaks = stft_peaks(&x, &StftSpec::PHYSIO, FrequencyBand::HEART).unwrap();
        for p in peaks {
            assert!(p.at_band_edge);
            assert_eq!(p.freq_hz, 2.5);
        }
    }
}
