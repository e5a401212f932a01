//! Trial segmentation, error statistics and the results report.

mod report;
mod svg;

pub use report::{
    emit_report, read_trials_csv, trials_csv, write_signal_plot, ConditionSummary, EvaluationReport, Regression, SUMMARY_HEADER,
    TRIALS_HEADER,
};

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::dsp::median;
use crate::error::{Error, Result};
use crate::ingest::{luma, Channel, Condition, Manifest, PhysioRecord, Rect, VideoClip, HOLD_BREATH_TASK};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialSegment {
    pub trial_id: String,
    pub frames: Range<usize>,
    pub physio: Range<usize>,
}

/// Locates every manifest trial in the physio record by its trigger code.
pub fn segment_trials(physio: &PhysioRecord, manifest: &Manifest) -> Result<Vec<TrialSegment>> {
    manifest
        .trials
        .iter()
        .map(|t| {
            let mut hits = physio.trigger.iter().enumerate().filter(|(_, &c)| c == t.trigger_code);
            let start = match (hits.next(), hits.next()) {
                (Some((i, _)), None) => i,
                (None, _) => {
                    return Err(Error::Segmentation(format!(
                        "trigger code {} of trial {} not found",
                        t.trigger_code, t.trial_id
                    )))
                }
                (Some(_), Some(_)) => {
                    return Err(Error::Segmentation(format!(
                        "trigger code {} of trial {} occurs more than once",
                        t.trigger_code, t.trial_id
                    )))
                }
            };
            let len = (t.frame_count as f64 / manifest.fps * physio.sample_rate).round() as usize;
            if start + len > physio.len() {
                return Err(Error::Segmentation(format!(
                    "trial {} needs physio samples {}..{} but the record has {}",
                    t.trial_id,
                    start,
                    start + len,
                    physio.len()
                )));
            }
            Ok(TrialSegment {
                trial_id: t.trial_id.clone(),
                frames: t.frames(),
                physio: start..start + len,
            })
        })
        .collect()
}

pub fn rmse(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("rmse"));
    }
    let ss: f64 = pairs.iter().map(|(e, t)| (e - t) * (e - t)).sum();
    Ok((ss / pairs.len() as f64).sqrt())
}

/// Running gray sum over face pixels, so several clips combine pixel-weighted.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GrayAccumulator {
    pub sum: f64,
    pub pixels: u64,
}

impl GrayAccumulator {
    pub fn add<T: Channel>(&mut self, clip: &VideoClip<T>, rois: &[Rect]) -> Result<()> {
        if rois.len() != clip.len() {
            return Err(Error::invalid(format!("{} ROIs for {} frames", rois.len(), clip.len())));
        }
        for (f, r) in clip.frames().iter().zip(rois) {
            if !r.fits_in(clip.width(), clip.height()) {
                return Err(Error::invalid(format!("ROI {r:?} outside the frame")));
            }
            for p in f.pixels_in(*r) {
                self.sum += f64::from(luma(p[0].to_f64(), p[1].to_f64(), p[2].to_f64()));
            }
            self.pixels += r.area() as u64;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: GrayAccumulator) {
        self.sum += other.sum;
        self.pixels += other.pixels;
    }

    pub fn value(&self) -> Result<f64> {
        if self.pixels == 0 {
            return Err(Error::Empty("skin_tone_gray"));
        }
        Ok(self.sum / self.pixels as f64)
    }
}

/// Mean Rec.601 gray over all face-ROI pixels of all frames.
pub fn skin_tone_gray<T: Channel>(clip: &VideoClip<T>, rois: &[Rect]) -> Result<f64> {
    let mut acc = GrayAccumulator::default();
    acc.add(clip, rois)?;
    acc.value()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% confidence half-widths.
    pub ci95_slope: f64,
    pub ci95_intercept: f64,
    pub n: usize,
    pub x_mean: f64,
    pub sxx: f64,
    pub residual_se: f64,
    pub t_crit: f64,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }

    /// 95% half-width of the mean response at `x`.
    pub fn mean_ci95(&self, x: f64) -> f64 {
        let d = x - self.x_mean;
        self.t_crit * self.residual_se * (1.0 / self.n as f64 + d * d / self.sxx).sqrt()
    }
}

/// Ordinary least squares with t-based 95% intervals (n − 2 degrees of freedom).
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("{} x values for {} y values", x.len(), y.len())));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::invalid(format!("linear fit needs at least 3 points, got {n}")));
    }
    let nf = n as f64;
    let x_mean = x.iter().sum::<f64>() / nf;
    let y_mean = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - x_mean).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::invalid("linear fit needs at least two distinct x values"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - x_mean) * (b - y_mean)).sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let residual_se = (sse / (nf - 2.0)).sqrt();
    let t_crit = StudentsT::new(0.0, 1.0, nf - 2.0)
        .map_err(|e| Error::invalid(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(LinearFit {
        slope,
        intercept,
        ci95_slope: t_crit * residual_se / sxx.sqrt(),
        ci95_intercept: t_crit * residual_se * (1.0 / nf + x_mean * x_mean / sxx).sqrt(),
        n,
        x_mean,
        sxx,
        residual_se,
        t_crit,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxplotStats {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    /// Ascending.
    pub outliers: Vec<f64>,
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Inclusive linear-interpolation quartiles, whiskers at the most extreme
/// values within 1.5·IQR of the box, never inside it.
pub fn boxplot_stats(values: &[f64]) -> Result<BoxplotStats> {
    if values.is_empty() {
        return Err(Error::Empty("boxplot_stats"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("boxplot values must be finite"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = |v: &&f64| **v >= lo_fence && **v <= hi_fence;
    // clamped to the box when interpolated quartiles overshoot the data
    let whisker_lo = sorted.iter().find(inside).map_or(q1, |v| v.min(q1));
    let whisker_hi = sorted.iter().rev().find(inside).map_or(q3, |v| v.max(q3));
    Ok(BoxplotStats {
        median: median(&sorted)?,
        q1,
        q3,
        whisker_lo,
        whisker_hi,
        outliers: sorted.iter().copied().filter(|v| !inside(&v)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Flag {
    HrOutOfBand,
    RrOutOfBand,
    HoldBreathExcluded,
    RoiFailure,
}

impl Flag {
    pub const ALL: [Flag; 4] = [Flag::HrOutOfBand, Flag::RrOutOfBand, Flag::HoldBreathExcluded, Flag::RoiFailure];

    pub fn as_str(&self) -> &'static str {
        match self {
            Flag::HrOutOfBand => "hr_out_of_band",
            Flag::RrOutOfBand => "rr_out_of_band",
            Flag::HoldBreathExcluded => "hold_breath_excluded",
            Flag::RoiFailure => "roi_failure",
        }
    }
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Flag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Flag::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown flag {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial_id: String,
    pub condition: Condition,
    pub task: u8,
    pub hr_est: Option<f64>,
    pub hr_gt: Option<f64>,
    pub rr_est: Option<f64>,
    pub rr_gt: Option<f64>,
    /// Absent when the face could not be located.
    pub skin_gray: Option<f64>,
    pub flags: BTreeSet<Flag>,
}

impl TrialRecord {
    /// Participant key: the trial id up to the first `/`, or the whole id.
    pub fn participant(&self) -> &str {
        participant_of(&self.trial_id)
    }

    pub fn is_hold_breath(&self) -> bool {
        self.task == HOLD_BREATH_TASK
    }

    /// (estimate, truth) if the heart rate is scoreable.
    pub fn hr_pair(&self) -> Option<(f64, f64)> {
        if self.flags.contains(&Flag::HrOutOfBand) || self.flags.contains(&Flag::RoiFailure) {
            return None;
        }
        Some((self.hr_est?, self.hr_gt?))
    }

    /// (estimate, truth) if the respiration rate is scoreable.
    pub fn rr_pair(&self) -> Option<(f64, f64)> {
        if self.flags.contains(&Flag::RrOutOfBand)
            || self.flags.contains(&Flag::HoldBreathExcluded)
            || self.flags.contains(&Flag::RoiFailure)
        {
            return None;
        }
        Some((self.rr_est?, self.rr_gt?))
    }

    pub fn validate(&self) -> Result<()> {
        if self.trial_id.is_empty() || self.trial_id.contains([',', '\n', '\r', '"']) {
            return Err(Error::invalid(format!("trial id {:?} is empty or not CSV-safe", self.trial_id)));
        }
        if !(1..=7).contains(&self.task) {
            return Err(Error::invalid(format!("trial {}: task {} outside 1..7", self.trial_id, self.task)));
        }
        let values = [self.hr_est, self.hr_gt, self.rr_est, self.rr_gt, self.skin_gray];
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("trial {}: non-finite value", self.trial_id)));
        }
        if self.flags.is_empty() && self.hr_pair().is_none() && self.rr_pair().is_none() {
            return Err(Error::invalid(format!(
                "trial {} has no estimate/truth pair and no flag explaining why",
                self.trial_id
            )));
        }
        Ok(())
    }
}

pub fn participant_of(trial_id: &str) -> &str {
    trial_id.split_once('/').map_or(trial_id, |(p, _)| p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::TimeSeries;
    use crate::ingest::{RgbFrame, TrialEntry};
    use proptest::prelude::*;

    fn physio(trigger: Vec<u32>) -> PhysioRecord {
        let n = trigger.len();
        let ts = TimeSeries::new(vec![0.0; n], 128.0).unwrap();
        PhysioRecord::new(ts.clone(), ts, trigger).unwrap()
    }

    fn manifest(frame_count: usize, code: u32) -> Manifest {
        Manifest {
            fps: 30.0,
            width: 8,
            height: 8,
            frames: frame_count,
            trials: vec![TrialEntry {
                trial_id: "P01/001".into(),
                condition: Condition::Respiration,
                task: 1,
                start_frame: 0,
                frame_count,
                trigger_code: code,
            }],
        }
    }

    #[test]
    fn segmentation_arithmetic() {
        let mut trig = vec![0u32; 5000];
        trig[1280] = 1;
        let segs = segment_trials(&physio(trig.clone()), &manifest(600, 1)).unwrap();
        assert_eq!(segs[0].physio, 1280..1280 + 2560);
        assert_eq!(segs[0].frames, 0..600);
        let gaze = segment_trials(&physio(trig), &manifest(300, 1)).unwrap();
        assert_eq!(gaze[0].frames.len(), 300);
        assert_eq!(gaze[0].physio.len(), 1280);
    }

    #[test]
    fn segmentation_errors() {
        let mut trig = vec![0u32; 5000];
        assert!(matches!(segment_trials(&physio(trig.clone()), &manifest(600, 1)), Err(Error::Segmentation(_))));
        trig[10] = 1;
        trig[20] = 1;
        assert!(matches!(segment_trials(&physio(trig.clone()), &manifest(600, 1)), Err(Error::Segmentation(_))));
        let mut late = vec![0u32; 3000];
        late[1000] = 1;
        assert!(segment_trials(&physio(late), &manifest(600, 1)).is_err());
    }

    #[test]
    fn rmse_cases() {
        assert_eq!(rmse(&[(72.0, 72.0), (90.0, 90.0)]).unwrap(), 0.0);
        assert_eq!(rmse(&[(75.0, 72.0)]).unwrap(), 3.0);
        assert!((rmse(&[(75.0, 72.0), (70.0, 70.0)]).unwrap() - 2.1213).abs() < 1e-4);
        assert!(rmse(&[]).is_err());
    }

    proptest! {
        #[test]
        fn rmse_nonnegative_and_order_free(pairs in prop::collection::vec((0.0..200.0f64, 0.0..200.0f64), 1..30)) {
            let r = rmse(&pairs).unwrap();
            prop_assert!(r >= 0.0);
            prop_assert_eq!(r == 0.0, pairs.iter().all(|(a, b)| a == b));
            let mut rev = pairs.clone();
            rev.reverse();
            prop_assert!((rmse(&rev).unwrap() - r).abs() <= 1e-12 * r.max(1.0));
        }

        #[test]
        fn fit_residuals_sum_to_zero(pts in prop::collection::vec((0.0..255.0f64, -10.0..10.0f64), 3..40)) {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1e-3));
            let fit = linear_fit(&x, &y).unwrap();
            let resid: f64 = x.iter().zip(&y).map(|(a, b)| b - fit.predict(*a)).sum();
            prop_assert!(resid.abs() < 1e-9, "{}", resid);
        }

        #[test]
        fn boxplot_median_matches_dsp(v in prop::collection::vec(-50.0..50.0f64, 1..40)) {
            let b = boxplot_stats(&v).unwrap();
            prop_assert_eq!(b.median, median(&v).unwrap());
            prop_assert!(b.whisker_lo <= b.q1 && b.q1 <= b.median && b.median <= b.q3 && b.q3 <= b.whisker_hi);
            prop_assert_eq!(b.outliers.len() + v.iter().filter(|x| **x >= b.whisker_lo && **x <= b.whisker_hi).count(), v.len());
            let iqr = b.q3 - b.q1;
            prop_assert!(b.outliers.iter().all(|o| *o < b.q1 - 1.5 * iqr || *o > b.q3 + 1.5 * iqr));
        }
    }

    #[test]
    fn exact_line_fit() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!(f.ci95_slope.abs() < 1e-9 && f.ci95_intercept.abs() < 1e-9);
        assert!(linear_fit(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(linear_fit(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn fit_interval_against_textbook_values() {
        // x = 1..6, y = [1.1, 1.9, 3.2, 3.8, 5.1, 6.0]; sxy = 17.35, sxx = 17.5, t(0.975, 4) = 2.776445
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let y = [1.1, 1.9, 3.2, 3.8, 5.1, 6.0];
        let f = linear_fit(&x, &y).unwrap();
        let slope = 17.35 / 17.5;
        assert!((f.slope - slope).abs() < 1e-12);
        let sse: f64 = x.iter().zip(&y).map(|(a, b)| (b - f.intercept - slope * a).powi(2)).sum();
        let se = (sse / 4.0).sqrt() / 17.5f64.sqrt();
        assert!((f.t_crit - 2.776_445_105_2).abs() < 1e-8);
        assert!((f.ci95_slope - 2.776445 * se).abs() < 1e-5);
    }

    #[test]
    fn boxplot_cases() {
        let b = boxplot_stats(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!((b.median, b.q1, b.q3), (3.0, 2.0, 4.0));
        assert_eq!(boxplot_stats(&[3.32, 3.62, 4.48]).unwrap().median, 3.62);
        let o = boxplot_stats(&[1.0, 2.0, 3.0, 4.0, 5.0, 100.0]).unwrap();
        // q1 = 2.25, q3 = 4.75, upper fence 8.5
        assert_eq!(o.outliers, vec![100.0]);
        assert_eq!(o.whisker_hi, 5.0);
        assert_eq!(o.whisker_lo, 1.0);
        assert!(boxplot_stats(&[]).is_err());
    }

    #[test]
    fn skin_gray_values() {
        let white = VideoClip::new(vec![RgbFrame::filled(4, 4, [255u8; 3]).unwrap(); 3], 30.0).unwrap();
        assert_eq!(skin_tone_gray(&white, &[Rect::new(1, 1, 2, 2); 3]).unwrap(), 255.0);

        let dark = VideoClip::new(vec![RgbFrame::filled(4, 4, [50u8; 3]).unwrap(); 1], 30.0).unwrap();
        let mut acc = GrayAccumulator::default();
        acc.add(&white, &[Rect::new(0, 0, 4, 4); 3]).unwrap();
        acc.add(&dark, &[Rect::new(0, 0, 2, 2)]).unwrap();
        let expect = (255.0 * 48.0 + 50.0 * 4.0) / 52.0;
        assert!((acc.value().unwrap() - expect).abs() < 1e-12);
        assert!(GrayAccumulator::default().value().is_err());
        assert!(skin_tone_gray(&white, &[]).is_err());
    }

    #[test]
    fn synth_tone_ratio() {
        use crate::synth::{synth_clip, SynthConfig};
        let gray = |tone| {
            let cfg = SynthConfig { tone, duration: 1.0, ..SynthConfig::default() };
            let (clip, t) = synth_clip(&cfg).unwrap();
            skin_tone_gray(&clip, &vec![t.face_box; clip.len()]).unwrap()
        };
        let r = gray(1.0) / gray(0.5);
        assert!((r - 2.0).abs() <= 0.04, "{r}");
    }

    #[test]
    fn flags_and_pairs() {
        let mut r = TrialRecord {
            trial_id: "P03/007".into(),
            condition: Condition::Gaze,
            task: 2,
            hr_est: Some(70.0),
            hr_gt: Some(71.0),
            rr_est: Some(15.0),
            rr_gt: Some(14.0),
            skin_gray: Some(120.0),
            flags: BTreeSet::from([Flag::HoldBreathExcluded]),
        };
        assert_eq!(r.participant(), "P03");
        assert_eq!(r.hr_pair(), Some((70.0, 71.0)));
        assert_eq!(r.rr_pair(), None);
        r.flags.insert(Flag::RoiFailure);
        assert_eq!(r.hr_pair(), None);
        r.flags.clear();
        r.hr_est = None;
        r.rr_est = None;
        assert!(r.validate().is_err());
        for f in Flag::ALL {
            assert_eq!(f.to_string().parse::<Flag>().unwrap(), f);
        }
        assert_eq!(participant_of("single"), "single");
    }
}
