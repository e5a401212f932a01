//! Butterworth bandpass design and zero-phase application.
//!
//! The analog prototype poles are shifted to the band with the usual
//! lowpass-to-bandpass substitution, mapped through a prewarped bilinear
//! transform and grouped into conjugate pairs, one biquad per pair. Every
//! section carries one zero at z = 1 and one at z = -1.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use super::{FrequencyBand, TimeSeries};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandpassSpec {
    pub band: FrequencyBand,
    /// Prototype order; the bandpass has twice as many poles per direction.
    pub order: usize,
}

impl BandpassSpec {
    pub fn new(low_hz: f64, high_hz: f64, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("filter order must be at least 1"));
        }
        Ok(Self {
            band: FrequencyBand::new(low_hz, high_hz)?,
            order,
        })
    }

    /// Samples of odd-reflection padding added to each end before filtering.
    pub fn pad_len(&self) -> usize {
        3 * (2 * self.order + 1)
    }
}

/// Second-order section with `a[0] == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b[0] + z_inv * self.b[1] + z2 * self.b[2]) / (self.a[0] + z_inv * self.a[1] + z2 * self.a[2])
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (self.a[0] + self.a[1] + self.a[2])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    sections: Vec<Biquad>,
}

impl SosFilter {
    pub fn butterworth_bandpass(spec: &BandpassSpec, sample_rate: f64) -> Result<Self> {
        spec.band.check_rate(sample_rate)?;
        if spec.order == 0 {
            return Err(Error::invalid("filter order must be at least 1"));
        }
        let n = spec.order;
        let fs2 = 2.0 * sample_rate;
        let w1 = fs2 * (PI * spec.band.low_hz / sample_rate).tan();
        let w2 = fs2 * (PI * spec.band.high_hz / sample_rate).tan();
        let bw = w2 - w1;
        let w0_sq = w1 * w2;

        let mut poles = Vec::with_capacity(2 * n);
        for k in 0..n {
            let theta = PI * (2 * k + n + 1) as f64 / (2 * n) as f64;
            let proto = Complex64::from_polar(1.0, theta);
            let half = proto * (bw / 2.0);
            let disc = (half * half - w0_sq).sqrt();
            for s in [half + disc, half - disc] {
                poles.push((fs2 + s) / (fs2 - s));
            }
        }

        let mut sections = Vec::with_capacity(n);
        let mut real = Vec::new();
        let tol = 1e-12;
        let mut upper: Vec<Complex64> = poles.iter().copied().filter(|p| p.im > tol).collect();
        upper.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
        for p in upper {
            sections.push(Biquad {
                b: [1.0, 0.0, -1.0],
                a: [1.0, -2.0 * p.re, p.norm_sqr()],
            });
        }
        for p in poles.iter().filter(|p| p.im.abs() <= tol) {
            real.push(p.re);
        }
        real.sort_by(f64::total_cmp);
        for pair in real.chunks(2) {
            let (r1, r2) = (pair[0], pair[1]);
            sections.push(Biquad {
                b: [1.0, 0.0, -1.0],
                a: [1.0, -(r1 + r2), r1 * r2],
            });
        }
        debug_assert_eq!(sections.len(), n);

        // Unit gain at the digital image of the analog centre frequency.
        let centre = 2.0 * (w0_sq.sqrt() / fs2).atan();
        let z_inv = Complex64::from_polar(1.0, -centre);
        let gain: Complex64 = sections.iter().map(|s| s.response(z_inv)).product();
        let per_section = gain.norm().recip().powf(1.0 / n as f64);
        for s in &mut sections {
            for b in &mut s.b {
                *b *= per_section;
            }
        }
        Ok(Self { sections })
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// Complex response at `freq_hz` for a single forward pass.
    pub fn response(&self, freq_hz: f64, sample_rate: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * freq_hz / sample_rate);
        self.sections.iter().map(|s| s.response(z_inv)).product()
    }

    /// Section states that produce a steady output for a unit-step input.
    fn step_state(&self) -> Vec<[f64; 2]> {
        let mut scale = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let gain = s.dc_gain();
                let y = gain * scale;
                let z1 = s.b[2] * scale - s.a[2] * y;
                let z0 = s.b[1] * scale - s.a[1] * y + z1;
                scale = y;
                [z0, z1]
            })
            .collect()
    }

    /// Single causal pass (transposed direct form II), starting from the
    /// steady state for a constant input equal to `x[0]`.
    pub fn filter_forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        let Some(&first) = x.first() else {
            return out;
        };
        let states = self.step_state();
        for (s, init) in self.sections.iter().zip(states) {
            let mut z0 = init[0] * first;
            let mut z1 = init[1] * first;
            for v in out.iter_mut() {
                let input = *v;
                let y = s.b[0] * input + z0;
                z0 = s.b[1] * input - s.a[1] * y + z1;
                z1 = s.b[2] * input - s.a[2] * y;
                *v = y;
            }
        }
        out
    }

    /// Forward-backward pass over an odd-reflected extension of `x`.
    pub fn filtfilt(&self, x: &[f64], pad: usize) -> Result<Vec<f64>> {
        let n = x.len();
        if n <= pad {
            return Err(Error::SignalTooShort(format!(
                "{n} samples, zero-phase filtering needs more than {pad}"
            )));
        }
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        let mut y = self.filter_forward(&ext);
        y.reverse();
        let mut y = self.filter_forward(&y);
        y.reverse();
        Ok(y[pad..pad + n].to_vec())
    }
}

/// Zero-phase Butterworth bandpass.
pub fn bandpass(x: &TimeSeries, spec: &BandpassSpec) -> Result<TimeSeries> {
    let filter = SosFilter::butterworth_bandpass(spec, x.sample_rate())?;
    let y = filter.filtfilt(x.samples(), spec.pad_len())?;
    Ok(x.with_samples(y))
}
