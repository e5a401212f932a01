use super::TimeSeries;
use crate::error::{Error, Result};

/// Natural cubic spline (zero second derivative at both ends).
#[derive(Debug, Clone)]
pub struct NaturalSpline {
    t: Vec<f64>,
    v: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl NaturalSpline {
    pub fn new(t: &[f64], v: &[f64]) -> Result<Self> {
        if t.len() != v.len() {
            return Err(Error::invalid(format!(
                "{} knot times but {} knot values",
                t.len(),
                v.len()
            )));
        }
        if t.len() < 3 {
            return Err(Error::invalid(format!(
                "cubic spline needs at least 3 knots, got {}",
                t.len()
            )));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("knot times must be strictly increasing"));
        }
        let n = t.len();
        let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();

        // Thomas algorithm on the interior equations
        //   h[i-1] m[i-1] + 2 (h[i-1] + h[i]) m[i] + h[i] m[i+1] = rhs[i]
        let interior = n - 2;
        let mut diag = vec![0.0; interior];
        let mut rhs = vec![0.0; interior];
        for k in 0..interior {
            let i = k + 1;
            diag[k] = 2.0 * (h[i - 1] + h[i]);
            rhs[k] = 6.0 * ((v[i + 1] - v[i]) / h[i] - (v[i] - v[i - 1]) / h[i - 1]);
        }
        for k in 1..interior {
            let w = h[k] / diag[k - 1];
            diag[k] -= w * h[k];
            rhs[k] -= w * rhs[k - 1];
        }
        let mut m = vec![0.0; n];
        for k in (0..interior).rev() {
            let upper = if k + 1 < interior { h[k + 1] * m[k + 2] } else { 0.0 };
            m[k + 1] = (rhs[k] - upper) / diag[k];
        }
        Ok(Self {
            t: t.to_vec(),
            v: v.to_vec(),
            m,
        })
    }

    /// Value at `x`; outside the knot range the nearest end value is held.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.t.len();
        if x <= self.t[0] {
            return self.v[0];
        }
        if x >= self.t[n - 1] {
            return self.v[n - 1];
        }
        let i = self.t.partition_point(|&k| k <= x) - 1;
        let h = self.t[i + 1] - self.t[i];
        let a = (self.t[i + 1] - x) / h;
        let b = (x - self.t[i]) / h;
        a * self.v[i]
            + b * self.v[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// Natural cubic spline through the knots, sampled at `query_rate` Hz from
/// t = 0 for `duration` seconds.
pub fn cubic_spline(knots_t: &[f64], knots_v: &[f64], query_rate: f64, duration: f64) -> Result<TimeSeries> {
    let spline = NaturalSpline::new(knots_t, knots_v)?;
    if !(duration >= 0.0) {
        return Err(Error::invalid(format!("negative duration {duration}")));
    }
    let n = (duration * query_rate).round() as usize;
    let samples = (0..n).map(|j| spline.eval(j as f64 / query_rate)).collect();
    TimeSeries::new(samples, query_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{stft_peak_freqs, FrequencyBand, StftSpec};

    #[test]
    fn reproduces_a_line() {
        let t = [0.0, 0.7, 1.5, 2.0, 3.1];
        let v: Vec<f64> = t.iter().map(|x| 3.0 * x - 1.0).collect();
        let y = cubic_spline(&t, &v, 100.0, 3.0).unwrap();
        for (j, val) in y.samples().iter().enumerate() {
            let x = j as f64 / 100.0;
            assert!((val - (3.0 * x - 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn hits_knots_and_clamps_outside() {
        let t = [1.0, 2.0, 3.0, 4.0];
        let v = [0.0, 1.0, -1.0, 2.0];
        let s = NaturalSpline::new(&t, &v).unwrap();
        for (x, y) in t.iter().zip(v) {
            assert!((s.eval(*x) - y).abs() < 1e-12);
        }
        assert_eq!(s.eval(0.0), 0.0);
        assert_eq!(s.eval(10.0), 2.0);
    }

    #[test]
    fn natural_end_conditions() {
        let s = NaturalSpline::new(&[0.0, 1.0, 2.0, 3.0], &[0.0, 2.0, 1.0, 3.0]).unwrap();
        assert_eq!(s.m[0], 0.0);
        assert_eq!(s.m[3], 0.0);
        // second derivative by finite differences near the ends is ~0
        let d2 = |x: f64| (s.eval(x + 1e-4) - 2.0 * s.eval(x) + s.eval(x - 1e-4)) / 1e-8;
        assert!(d2(1e-3).abs() < 0.05);
    }

    #[test]
    fn alternating_extrema_recover_the_cosine_rate() {
        // extrema of cos(2 pi t): +1 at integers, -1 at half-integers
        let t: Vec<f64> = (0..=40).map(|k| k as f64 * 0.5).collect();
        let v: Vec<f64> = (0..=40).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let y = cubic_spline(&t, &v, 30.0, 20.0).unwrap();
        let freqs = stft_peak_freqs(&y, &StftSpec::VIDEO, FrequencyBand::HEART).unwrap();
        let med = crate::dsp::median(&freqs).unwrap();
        assert!((med - 1.0).abs() < 0.05, "{med}");
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(NaturalSpline::new(&[0.0, 1.0], &[0.0, 1.0]).is_err());
        assert!(NaturalSpline::new(&[0.0, 1.0, 1.0], &[0.0, 1.0, 2.0]).is_err());
        assert!(NaturalSpline::new(&[0.0, 2.0, 1.0], &[0.0, 1.0, 2.0]).is_err());
    }
}
