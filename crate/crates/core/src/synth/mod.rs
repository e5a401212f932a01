//! Synthetic face video, ECG and respiration belt with known rates.

mod dataset;

pub use dataset::{synth_dataset, DatasetConfig, DatasetSummary, Protocol, TrialTruth, PIPELINE_CONF_FILE, TRUTH_FILE};

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

use crate::dsp::TimeSeries;
use crate::error::{Error, Result};
use crate::ingest::{luma, FaceBox, Rect, RgbFrame, VideoClip};

pub const BACKGROUND_GRAY: f64 = 40.0;
pub const SKIN_RGB: [f64; 3] = [200.0, 150.0, 130.0];
pub const SHIRT_RGB: [f64; 3] = [90.0, 120.0, 170.0];
/// Width of each ECG bump, seconds.
pub const ECG_BUMP_SIGMA: f64 = 0.01;
pub const RESP_NOISE_SIGMA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub width: usize,
    pub height: usize,
    pub fps: f64,
    pub duration: f64,
    pub hr_bpm: f64,
    pub rr_brpm: f64,
    /// Skin brightness multiplier in (0, 1].
    pub tone: f64,
    /// Relative red-channel modulation of the face.
    pub pulse_amp: f64,
    /// Vertical chest-edge excursion, pixels.
    pub chest_amp: f64,
    /// Additive Gaussian noise, gray levels.
    pub noise_sigma: f64,
    pub quantize: bool,
    pub blur_radius: usize,
    pub seed: u64,
    /// Time of the first frame, seconds; sets the phase of both rhythms.
    pub start_time: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            fps: 30.0,
            duration: 20.0,
            hr_bpm: 72.0,
            rr_brpm: 15.0,
            tone: 1.0,
            pulse_amp: 0.01,
            chest_amp: 2.0,
            noise_sigma: 0.0,
            quantize: true,
            blur_radius: 0,
            seed: 0,
            start_time: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthTruth {
    pub hr_bpm: f64,
    pub rr_brpm: f64,
    pub face_box: FaceBox,
    /// Rec.601 gray of the unmodulated skin colour.
    pub mean_face_gray: f64,
}

/// Scene layout derived from the frame size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub face: Rect,
    /// Resting row of the chest edge; shirt below, background above.
    pub chest_rest: f64,
}

impl SynthConfig {
    pub fn frame_count(&self) -> usize {
        (self.duration * self.fps).round() as usize
    }

    pub fn geometry(&self) -> Result<Geometry> {
        let side = self.height / 3;
        if side < 2 || side > self.width {
            return Err(Error::invalid(format!(
                "{}x{} frame cannot hold a face of side {side}",
                self.width, self.height
            )));
        }
        let face = Rect::new((self.width - side) / 2, (self.height - side) / 2, side, side);
        let below = self.height - face.bottom();
        let chest_rest = face.bottom() as f64 + (below / 2) as f64;
        if below < 4 || chest_rest - self.chest_amp <= face.bottom() as f64 || chest_rest + self.chest_amp >= self.height as f64 {
            return Err(Error::invalid(format!(
                "chest edge at row {chest_rest} ± {} does not fit between the face and the frame bottom",
                self.chest_amp
            )));
        }
        Ok(Geometry { face, chest_rest })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::invalid(what.to_string()));
        if self.width == 0 || self.height == 0 {
            return bad("frame dimensions must be non-zero");
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return bad("fps must be positive");
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return bad("duration must be non-negative");
        }
        if !(30.0..=220.0).contains(&self.hr_bpm) {
            return bad("hr_bpm must lie in 30..220");
        }
        if !(6.0..=60.0).contains(&self.rr_brpm) {
            return bad("rr_brpm must lie in 6..60");
        }
        if !(self.tone > 0.0 && self.tone <= 1.0) {
            return bad("tone must lie in (0, 1]");
        }
        if !(0.0..1.0).contains(&self.pulse_amp) {
            return bad("pulse_amp must lie in [0, 1)");
        }
        if !(self.chest_amp >= 0.0 && self.chest_amp.is_finite()) {
            return bad("chest_amp must be non-negative");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be non-negative");
        }
        if !self.start_time.is_finite() {
            return bad("start_time must be finite");
        }
        self.geometry().map(|_| ())
    }

    pub fn truth(&self) -> Result<SynthTruth> {
        let g = self.geometry()?;
        let [r, gr, b] = SKIN_RGB.map(|c| c * self.tone);
        Ok(SynthTruth {
            hr_bpm: self.hr_bpm,
            rr_brpm: self.rr_brpm,
            face_box: g.face,
            mean_face_gray: 0.299 * r + 0.587 * gr + 0.114 * b,
        })
    }
}

fn render_frame(cfg: &SynthConfig, geo: &Geometry, index: usize) -> RgbFrame<f32> {
    let (w, h) = (cfg.width, cfg.height);
    let t = cfg.start_time + index as f64 / cfg.fps;
    let mut data = vec![BACKGROUND_GRAY as f32; w * h * 3];

    let edge = geo.chest_rest - cfg.chest_amp * (2.0 * PI * cfg.rr_brpm / 60.0 * t).sin();
    for y in geo.face.bottom()..h {
        let cover = ((y + 1) as f64 - edge).clamp(0.0, 1.0);
        if cover == 0.0 {
            continue;
        }
        let px: [f32; 3] = SHIRT_RGB.map(|c| (BACKGROUND_GRAY + (c - BACKGROUND_GRAY) * cover) as f32);
        for x in 0..w {
            data[(y * w + x) * 3..(y * w + x) * 3 + 3].copy_from_slice(&px);
        }
    }

    let pulse = 1.0 + cfg.pulse_amp * (2.0 * PI * cfg.hr_bpm / 60.0 * t).sin();
    let skin = [SKIN_RGB[0] * cfg.tone * pulse, SKIN_RGB[1] * cfg.tone, SKIN_RGB[2] * cfg.tone].map(|c| c as f32);
    for y in geo.face.y..geo.face.bottom() {
        for x in geo.face.x..geo.face.right() {
            data[(y * w + x) * 3..(y * w + x) * 3 + 3].copy_from_slice(&skin);
        }
    }

    if cfg.blur_radius > 0 {
        box_blur(&mut data, w, h, cfg.blur_radius);
    }
    if cfg.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(index as u64);
        let sigma = cfg.noise_sigma as f32;
        for v in data.iter_mut() {
            let n: f32 = StandardNormal.sample(&mut rng);
            *v += sigma * n;
        }
    }
    for v in data.iter_mut() {
        *v = if cfg.quantize { v.round() } else { *v }.clamp(0.0, 255.0);
    }
    RgbFrame::new(w, h, data).expect("frame buffer matches its dimensions")
}

/// Separable mean filter over a (2r+1)² neighbourhood, edges replicated.
fn box_blur(data: &mut [f32], w: usize, h: usize, r: usize) {
    let norm = 1.0 / (2 * r + 1) as f32;
    let mut tmp = vec![0.0f32; data.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let s: f32 = (0..=2 * r)
                    .map(|k| data[(y * w + (x + k).saturating_sub(r).min(w - 1)) * 3 + c])
                    .sum();
                tmp[(y * w + x) * 3 + c] = s * norm;
            }
        }
    }
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let s: f32 = (0..=2 * r)
                    .map(|k| tmp[((y + k).saturating_sub(r).min(h - 1) * w + x) * 3 + c])
                    .sum();
                data[(y * w + x) * 3 + c] = s * norm;
            }
        }
    }
}

/// Renders the clip described by `cfg`. Frames are floats so that
/// unquantized output keeps sub-level detail; `to_u8` gives 8-bit frames.
pub fn synth_clip(cfg: &SynthConfig) -> Result<(VideoClip<f32>, SynthTruth)> {
    cfg.validate()?;
    let n = cfg.frame_count();
    if n == 0 {
        return Err(Error::invalid("clip would have no frames"));
    }
    let geo = cfg.geometry()?;
    let frames: Vec<RgbFrame<f32>> = (0..n).into_par_iter().map(|i| render_frame(cfg, &geo, i)).collect();
    Ok((VideoClip::new(frames, cfg.fps)?, cfg.truth()?))
}

/// Gray of a face pixel as the 8-bit pipeline sees it.
pub fn face_gray_u8(tone: f64) -> u8 {
    let [r, g, b] = SKIN_RGB.map(|c| (c * tone).round());
    luma(r, g, b)
}

fn add_bump(out: &mut [f64], fs: f64, centre: f64, amp: f64) {
    let reach = 6.0 * ECG_BUMP_SIGMA;
    let lo = ((centre - reach) * fs).floor().max(0.0) as usize;
    let hi = (((centre + reach) * fs).ceil().max(0.0) as usize).min(out.len());
    for (i, v) in out.iter_mut().enumerate().take(hi).skip(lo) {
        let dt = (i as f64 / fs - centre) / ECG_BUMP_SIGMA;
        *v += amp * (-0.5 * dt * dt).exp();
    }
}

/// Beat times from `start` (inclusive) to `end` (exclusive); intervals are
/// `60/hr · (1 + jitter·u)`, `u` uniform in [−1, 1].
pub(crate) fn beat_times(hr_bpm: f64, start: f64, end: f64, jitter: f64, rng: &mut impl Rng) -> Vec<f64> {
    let mut out = Vec::new();
    let mut t = start;
    while t < end {
        out.push(t);
        let u: f64 = if jitter > 0.0 { rng.random_range(-1.0..=1.0) } else { 0.0 };
        t += 60.0 / hr_bpm * (1.0 + jitter * u);
    }
    out
}

pub(crate) fn ecg_from_beats(beats: &[f64], fs: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for &b in beats {
        add_bump(&mut out, fs, b, 1.0);
    }
    out
}

/// Zero baseline with unit Gaussian bumps (σ = 10 ms), the first at t = 0.
pub fn synth_ecg(hr_bpm: f64, fs: f64, duration: f64, jitter: f64, seed: u64) -> Result<TimeSeries> {
    if !(30.0..=220.0).contains(&hr_bpm) {
        return Err(Error::invalid(format!("hr_bpm {hr_bpm} outside 30..220")));
    }
    if !(0.0..1.0).contains(&jitter) {
        return Err(Error::invalid(format!("jitter {jitter} outside [0, 1)")));
    }
    let n = (duration * fs).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beats = beat_times(hr_bpm, 0.0, duration, jitter, &mut rng);
    TimeSeries::new(ecg_from_beats(&beats, fs, n), fs)
}

/// Unit sinusoid at `rr_brpm` plus Gaussian noise (σ = 0.05).
pub fn synth_resp(rr_brpm: f64, fs: f64, duration: f64, seed: u64) -> Result<TimeSeries> {
    synth_resp_amplitude(rr_brpm, fs, duration, 1.0, seed)
}

/// As [`synth_resp`] with a chosen sinusoid amplitude; 0 leaves only noise.
pub fn synth_resp_amplitude(rr_brpm: f64, fs: f64, duration: f64, amplitude: f64, seed: u64) -> Result<TimeSeries> {
    if !(6.0..=60.0).contains(&rr_brpm) {
        return Err(Error::invalid(format!("rr_brpm {rr_brpm} outside 6..60")));
    }
    let n = (duration * fs).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, RESP_NOISE_SIGMA).expect("valid sigma");
    let f = rr_brpm / 60.0;
    let s = (0..n)
        .map(|i| amplitude * (2.0 * PI * f * i as f64 / fs).sin() + noise.sample(&mut rng))
        .collect();
    TimeSeries::new(s, fs)
}
