//! Aggregation into per-condition RMSE boxplots and the skin-tone fit, and
//! the CSV/SVG files that carry them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{boxplot_stats, linear_fit, rmse, svg, BoxplotStats, Flag, LinearFit, TrialRecord};
use crate::dsp::TimeSeries;
use crate::error::{Error, Result};
use crate::ingest::Condition;

pub const TRIALS_HEADER: &str = "trial_id,condition,task,hr_est,hr_gt,rr_est,rr_gt,skin_gray,flags";
pub const SUMMARY_HEADER: &str = "section,measure,condition,n_participants,n_trials,pooled_rmse,median,q1,q3,whisker_lo,whisker_hi,outliers,slope,intercept,ci95_slope,ci95_intercept";
const ERRORS_HEADER: &str = "trial_id,participant,condition,task,hr_abs_err,rr_abs_err";

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionSummary {
    pub condition: Condition,
    /// (participant, RMSE over that participant's scored trials), sorted by participant.
    pub participants: Vec<(String, f64)>,
    pub n_trials: usize,
    /// RMSE over all scored trials of the condition pooled together.
    pub pooled_rmse: Option<f64>,
    /// Over the per-participant RMSEs.
    pub stats: Option<BoxplotStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regression {
    /// (participant, mean face gray, HR RMSE over all scored trials).
    pub points: Vec<(String, f64, f64)>,
    /// Absent with fewer than 3 participants or a single distinct gray value.
    pub fit: Option<LinearFit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub records: Vec<TrialRecord>,
    pub hr: Vec<ConditionSummary>,
    pub rr: Vec<ConditionSummary>,
    pub regression: Regression,
}

fn summarize(records: &[TrialRecord], condition: Condition, pair: fn(&TrialRecord) -> Option<(f64, f64)>) -> Result<ConditionSummary> {
    let mut by_participant: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.condition == condition) {
        if let Some(p) = pair(r) {
            by_participant.entry(r.participant()).or_default().push(p);
        }
    }
    let participants = by_participant
        .iter()
        .map(|(p, v)| Ok((p.to_string(), rmse(v)?)))
        .collect::<Result<Vec<_>>>()?;
    let pooled: Vec<(f64, f64)> = by_participant.values().flatten().copied().collect();
    let per: Vec<f64> = participants.iter().map(|p| p.1).collect();
    Ok(ConditionSummary {
        condition,
        n_trials: pooled.len(),
        pooled_rmse: if pooled.is_empty() { None } else { Some(rmse(&pooled)?) },
        stats: if per.is_empty() { None } else { Some(boxplot_stats(&per)?) },
        participants,
    })
}

fn regression(records: &[TrialRecord]) -> Result<Regression> {
    let mut gray: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut pairs: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for r in records {
        if let Some(g) = r.skin_gray {
            gray.entry(r.participant()).or_default().push(g);
        }
        if let Some(p) = r.hr_pair() {
            pairs.entry(r.participant()).or_default().push(p);
        }
    }
    let mut points = Vec::new();
    for (p, g) in &gray {
        if let Some(v) = pairs.get(p) {
            points.push((p.to_string(), g.iter().sum::<f64>() / g.len() as f64, rmse(v)?));
        }
    }
    let x: Vec<f64> = points.iter().map(|p| p.1).collect();
    let y: Vec<f64> = points.iter().map(|p| p.2).collect();
    let fit = linear_fit(&x, &y).ok();
    Ok(Regression { points, fit })
}

impl EvaluationReport {
    pub fn build(records: Vec<TrialRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Empty("evaluation records"));
        }
        let mut seen = BTreeSet::new();
        for r in &records {
            r.validate()?;
            if !seen.insert(r.trial_id.as_str()) {
                return Err(Error::invalid(format!("duplicate trial id {}", r.trial_id)));
            }
        }
        let hr = Condition::ALL
            .iter()
            .map(|&c| summarize(&records, c, TrialRecord::hr_pair))
            .collect::<Result<Vec<_>>>()?;
        let rr = Condition::ALL
            .iter()
            .map(|&c| summarize(&records, c, TrialRecord::rr_pair))
            .collect::<Result<Vec<_>>>()?;
        let regression = regression(&records)?;
        Ok(Self { records, hr, rr, regression })
    }

    pub fn summary_csv(&self) -> String {
        let mut s = format!("{SUMMARY_HEADER}\n");
        for (measure, groups) in [("hr", &self.hr), ("rr", &self.rr)] {
            for g in groups {
                let _ = write!(s, "boxplot,{measure},{},{},{},{},", g.condition, g.participants.len(), g.n_trials, opt(g.pooled_rmse));
                match &g.stats {
                    Some(b) => {
                        let outliers: Vec<String> = b.outliers.iter().map(|v| v.to_string()).collect();
                        let _ = write!(s, "{},{},{},{},{},{}", b.median, b.q1, b.q3, b.whisker_lo, b.whisker_hi, outliers.join("|"));
                    }
                    None => s.push_str(",,,,,"),
                }
                s.push_str(",,,,\n");
            }
        }
        let n = self.regression.points.len();
        let _ = write!(s, "regression,hr_rmse_vs_skin_gray,all,{n},,,,,,,,,");
        match &self.regression.fit {
            Some(f) => {
                let _ = writeln!(s, "{},{},{},{}", f.slope, f.intercept, f.ci95_slope, f.ci95_intercept);
            }
            None => s.push_str(",,,\n"),
        }
        s
    }

    pub fn errors_csv(&self) -> String {
        let mut s = format!("{ERRORS_HEADER}\n");
        let abs = |p: Option<(f64, f64)>| opt(p.map(|(e, t)| (e - t).abs()));
        for r in &self.records {
            let _ = writeln!(s, "{},{},{},{},{},{}", r.trial_id, r.participant(), r.condition, r.task, abs(r.hr_pair()), abs(r.rr_pair()));
        }
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn trials_csv(records: &[TrialRecord]) -> String {
    let mut s = format!("{TRIALS_HEADER}\n");
    for r in records {
        let flags: Vec<&str> = r.flags.iter().map(Flag::as_str).collect();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.trial_id,
            r.condition,
            r.task,
            opt(r.hr_est),
            opt(r.hr_gt),
            opt(r.rr_est),
            opt(r.rr_gt),
            opt(r.skin_gray),
            flags.join("|")
        );
    }
    s
}

pub(crate) fn parse_trials_csv(text: &str) -> Result<Vec<TrialRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == TRIALS_HEADER => {}
        _ => return Err(Error::invalid(format!("trials table must start with {TRIALS_HEADER:?}"))),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let err = |m: String| Error::invalid(format!("line {}: {m}", i + 1));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(err(format!("expected 9 fields, got {}", f.len())));
        }
        let num = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|e| err(format!("{s:?}: {e}")))
            }
        };
        let flags = if f[8].is_empty() {
            BTreeSet::new()
        } else {
            f[8].split('|').map(str::parse).collect::<Result<_>>().map_err(|e| err(e.to_string()))?
        };
        let rec = TrialRecord {
            trial_id: f[0].to_string(),
            condition: f[1].parse().map_err(|e: Error| err(e.to_string()))?,
            task: f[2].parse().map_err(|e| err(format!("task: {e}")))?,
            hr_est: num(f[3])?,
            hr_gt: num(f[4])?,
            rr_est: num(f[5])?,
            rr_gt: num(f[6])?,
            skin_gray: num(f[7])?,
            flags,
        };
        rec.validate().map_err(|e| err(e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_trials_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trials_csv(&text).map_err(|e| match e {
        Error::InvalidArgument(m) => Error::format(path, m),
        other => other,
    })
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, text).map_err(|e| Error::io(&p, e))
}

/// Writes `trials.csv`, `trial_errors.csv`, `summary.csv`, `hr_boxplot.svg`,
/// `rr_boxplot.svg` and `skin_scatter.svg` into `out_dir`.
pub fn emit_report(records: Vec<TrialRecord>, out_dir: &Path) -> Result<EvaluationReport> {
    let report = EvaluationReport::build(records)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write(out_dir, "trials.csv", &trials_csv(&report.records))?;
    write(out_dir, "trial_errors.csv", &report.errors_csv())?;
    write(out_dir, "summary.csv", &report.summary_csv())?;
    write(out_dir, "hr_boxplot.svg", &svg::boxplot("HR RMSE per participant", "RMSE (bpm)", &report.hr))?;
    write(out_dir, "rr_boxplot.svg", &svg::boxplot("RR RMSE per participant (hold breath excluded)", "RMSE (breaths/min)", &report.rr))?;
    write(out_dir, "skin_scatter.svg", &svg::scatter(&report.regression))?;
    Ok(report)
}

/// Raw and band-passed trace of one trial as an SVG figure.
pub fn write_signal_plot(path: &Path, title: &str, raw: &TimeSeries, filtered: &TimeSeries) -> Result<()> {
    fs::write(path, svg::signal(title, raw, filtered)).map_err(|e| Error::io(path, e))
}
