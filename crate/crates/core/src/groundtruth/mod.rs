//! Reference rates from the ECG and respiration-belt channels.

use crate::dsp::{
    cubic_spline, detrend, estimate_rate, median, percentile, FrequencyBand, RateEstimate, StftSpec, TimeSeries,
};
use crate::error::{Error, Result};
use crate::vitals::DEFAULT_FILTER_ORDER;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthConfig {
    /// Moving-mean window for baseline removal, seconds.
    pub detrend_s: f64,
    /// Peak threshold as a fraction of the `threshold_percentile` of |d|.
    pub threshold_fraction: f64,
    pub threshold_percentile: f64,
    pub refractory_s: f64,
    pub hr_band: FrequencyBand,
    pub rr_band: FrequencyBand,
    pub filter_order: usize,
    pub stft: StftSpec,
}

impl Default for GroundTruthConfig {
    fn default() -> Self {
        Self {
            detrend_s: 0.5,
            threshold_fraction: 0.5,
            threshold_percentile: 99.0,
            refractory_s: 0.25,
            hr_band: FrequencyBand::HEART,
            rr_band: FrequencyBand::RESPIRATION,
            filter_order: DEFAULT_FILTER_ORDER,
            stft: StftSpec::PHYSIO,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakList {
    indices: Vec<usize>,
    sample_rate: f64,
}

impl PeakList {
    pub fn new(indices: Vec<usize>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::invalid("peak sample rate must be positive"));
        }
        if indices.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("peak indices must be strictly increasing"));
        }
        Ok(Self { indices, sample_rate })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.indices.iter().map(|&i| i as f64 / self.sample_rate).collect()
    }

    /// 60 / median inter-peak interval.
    pub fn interval_rate(&self) -> Result<f64> {
        if self.indices.len() < 2 {
            return Err(Error::NoPeaks);
        }
        let intervals: Vec<f64> = self
            .indices
            .windows(2)
            .map(|w| (w[1] - w[0]) as f64 / self.sample_rate)
            .collect();
        Ok(60.0 / median(&intervals)?)
    }
}

/// Beat positions as local maxima of the first difference of the
/// baseline-corrected ECG.
///
/// Index `i` refers to the step from sample `i` to `i + 1`, so peaks sit on
/// the steepest part of each upstroke, slightly ahead of the R wave.
pub fn ecg_peaks(ecg: &TimeSeries, cfg: &GroundTruthConfig) -> Result<PeakList> {
    let fs = ecg.sample_rate();
    if (ecg.len() as f64) < 2.0 * fs {
        return Err(Error::SignalTooShort(format!(
            "ECG peak detection needs 2 s, got {:.3} s",
            ecg.duration()
        )));
    }
    let y = detrend(ecg, cfg.detrend_s)?;
    let y = y.samples();
    let d: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let theta = cfg.threshold_fraction * percentile(&abs, cfg.threshold_percentile)?;
    if !(theta > 0.0) {
        return Err(Error::NoPeaks);
    }

    let n = d.len();
    let mut candidates: Vec<usize> = (0..n)
        .filter(|&i| {
            d[i] > theta && (i == 0 || d[i] >= d[i - 1]) && (i + 1 == n || d[i] > d[i + 1])
        })
        .collect();
    // larger first, earlier on ties
    candidates.sort_by(|&a, &b| d[b].total_cmp(&d[a]).then(a.cmp(&b)));
    let refractory = (cfg.refractory_s * fs).round() as usize;
    let mut kept: Vec<usize> = Vec::new();
    for c in candidates {
        if kept.iter().all(|&k| k.abs_diff(c) > refractory) {
            kept.push(c);
        }
    }
    if kept.is_empty() {
        return Err(Error::NoPeaks);
    }
    kept.sort_unstable();
    PeakList::new(kept, fs)
}

/// Spline through +1 at each peak and −1 halfway between neighbours,
/// sampled at the peaks' sample rate over `duration` seconds.
pub fn ppg_like(peaks: &PeakList, duration: f64) -> Result<TimeSeries> {
    if peaks.len() < 3 {
        return Err(Error::invalid(format!(
            "PPG-like reconstruction needs 3 peaks, got {}",
            peaks.len()
        )));
    }
    let times = peaks.times();
    let mut kt = Vec::with_capacity(2 * times.len() - 1);
    let mut kv = Vec::with_capacity(2 * times.len() - 1);
    for (k, &t) in times.iter().enumerate() {
        if k > 0 {
            kt.push(0.5 * (times[k - 1] + t));
            kv.push(-1.0);
        }
        kt.push(t);
        kv.push(1.0);
    }
    cubic_spline(&kt, &kv, peaks.sample_rate(), duration)
}

pub fn gt_hr(ecg: &TimeSeries, cfg: &GroundTruthConfig) -> Result<RateEstimate> {
    let peaks = ecg_peaks(ecg, cfg)?;
    let ppg = ppg_like(&peaks, ecg.duration())?;
    estimate_rate(&ppg, cfg.hr_band, cfg.filter_order, &cfg.stft)
}

pub fn gt_rr(resp: &TimeSeries, cfg: &GroundTruthConfig) -> Result<RateEstimate> {
    estimate_rate(resp, cfg.rr_band, cfg.filter_order, &cfg.stft)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::PI;

    const FS: f64 = 128.0;

    /// Gaussian bumps (σ = 10 ms) at the given beat times.
    fn bumps(beats: &[f64], amps: &[f64], secs: f64) -> TimeSeries {
        let n = (secs * FS).round() as usize;
        let s = (0..n)
            .map(|i| {
                let t = i as f64 / FS;
                beats
                    .iter()
                    .zip(amps)
                    .map(|(b, a)| a * (-0.5 * ((t - b) / 0.01).powi(2)).exp())
                    .sum()
            })
            .collect();
        TimeSeries::new(s, FS).unwrap()
    }

    fn regular(bpm: f64, secs: f64) -> Vec<f64> {
        let step = 60.0 / bpm;
        (0..).map(|k| k as f64 * step).take_while(|&t| t < secs).collect()
    }

    #[test]
    fn sixty_bpm_train() {
        let beats = regular(60.0, 20.0);
        let p = ecg_peaks(&bumps(&beats, &vec![1.0; beats.len()], 20.0), &GroundTruthConfig::default()).unwrap();
        assert!((19..=21).contains(&p.len()), "{}", p.len());
        assert!(p.indices().windows(2).all(|w| (126..=130).contains(&(w[1] - w[0]))));
    }

    #[test]
    fn amplitude_jitter_keeps_count() {
        let beats = regular(60.0, 20.0);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let amps: Vec<f64> = beats.iter().map(|_| 1.0 + 0.1 * rng.random_range(-1.0..=1.0)).collect();
        let cfg = GroundTruthConfig::default();
        let plain = ecg_peaks(&bumps(&beats, &vec![1.0; beats.len()], 20.0), &cfg).unwrap();
        let jittered = ecg_peaks(&bumps(&beats, &amps, 20.0), &cfg).unwrap();
        assert_eq!(plain.len(), jittered.len());
    }

    #[test]
    fn flat_ecg_has_no_peaks() {
        let flat = TimeSeries::new(vec![0.0; 2560], FS).unwrap();
        assert!(matches!(ecg_peaks(&flat, &GroundTruthConfig::default()), Err(Error::NoPeaks)));
        let short = TimeSeries::new(vec![0.0; 200], FS).unwrap();
        assert!(ecg_peaks(&short, &GroundTruthConfig::default()).is_err());
    }

    fn peaks_every(step_s: f64, secs: f64) -> PeakList {
        let idx = (0..).map(|k| (k as f64 * step_s * FS).round() as usize).take_while(|&i| (i as f64) < secs * FS);
        PeakList::new(idx.collect(), FS).unwrap()
    }

    #[test]
    fn ppg_like_rates() {
        let cfg = GroundTruthConfig::default();
        for (step, bpm) in [(1.0, 60.0), (0.5, 120.0)] {
            let ppg = ppg_like(&peaks_every(step, 20.0), 20.0).unwrap();
            let r = estimate_rate(&ppg, cfg.hr_band, cfg.filter_order, &cfg.stft).unwrap();
            assert!((r.per_minute - bpm).abs() <= 0.5, "{} vs {bpm}", r.per_minute);
        }
        assert!(ppg_like(&PeakList::new(vec![0, 128], FS).unwrap(), 2.0).is_err());
    }

    #[test]
    fn ppg_like_is_bounded() {
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let bpm = rng.random_range(50.0..150.0);
            let mut t = 0.0;
            let mut idx = Vec::new();
            while t < 20.0 {
                idx.push((t * FS).round() as usize);
                t += 60.0 / bpm * (1.0 + 0.1 * rng.random_range(-1.0..=1.0));
            }
            let ppg = ppg_like(&PeakList::new(idx, FS).unwrap(), 20.0).unwrap();
            assert!(ppg.samples().iter().all(|v| v.abs() <= 1.25), "seed {seed}");
        }
    }

    #[test]
    fn gt_hr_on_trains() {
        let cfg = GroundTruthConfig::default();
        for (bpm, tol) in [(70.0, 1.0), (150.0, 1.5)] {
            let beats = regular(bpm, 20.0);
            let r = gt_hr(&bumps(&beats, &vec![1.0; beats.len()], 20.0), &cfg).unwrap();
            assert!((r.per_minute - bpm).abs() <= tol, "{} vs {bpm}", r.per_minute);
        }
        let beats = regular(40.0, 20.0);
        let low = gt_hr(&bumps(&beats, &vec![1.0; beats.len()], 20.0), &cfg).unwrap();
        assert!(low.is_low_confidence(), "{low:?}");
    }

    fn belt(freq: f64, noise: f64, seed: u64) -> TimeSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise.max(1e-300)).unwrap();
        let s = (0..2560)
            .map(|i| (2.0 * PI * freq * i as f64 / FS).sin() + if noise > 0.0 { normal.sample(&mut rng) } else { 0.0 })
            .collect();
        TimeSeries::new(s, FS).unwrap()
    }

    #[test]
    fn gt_rr_cases() {
        let cfg = GroundTruthConfig::default();
        assert!((gt_rr(&belt(0.3, 0.0, 0), &cfg).unwrap().per_minute - 18.0).abs() <= 0.5);
        // SNR 10 dB: signal power 0.5, noise power 0.05
        let noisy = gt_rr(&belt(0.25, 0.05f64.sqrt(), 7), &cfg).unwrap();
        assert!((noisy.per_minute - 15.0).abs() <= 1.0, "{}", noisy.per_minute);
        let flat = gt_rr(&TimeSeries::new(vec![3.0; 2560], FS).unwrap(), &cfg).unwrap();
        assert!(flat.is_degenerate());
    }

    #[test]
    fn gt_rr_ignores_scale_and_offset() {
        let cfg = GroundTruthConfig::default();
        let x = belt(0.28, 0.1, 3);
        let y = TimeSeries::new(x.samples().iter().map(|v| 3.5 * v + 40.0).collect(), FS).unwrap();
        let (a, b) = (gt_rr(&x, &cfg).unwrap().per_minute, gt_rr(&y, &cfg).unwrap().per_minute);
        assert!((a - b).abs() < 1e-9, "{a} {b}");
    }
}
