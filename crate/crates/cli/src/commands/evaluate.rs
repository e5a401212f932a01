use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use vitalcam::eval::{emit_report, Flag, TrialRecord};
use vitalcam::ingest::Condition;

use super::{parse_flags, parse_opt, usage, ESTIMATES_FILE, ESTIMATES_HEADER, GROUNDTRUTH_FILE, GROUNDTRUTH_HEADER};
use crate::Globals;

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Dataset directory; supplies default estimates.csv and groundtruth.csv paths
    dataset: Option<PathBuf>,
    /// Estimates CSV from `estimate`
    #[arg(long, value_name = "FILE")]
    estimates: Option<PathBuf>,
    /// Ground-truth CSV from `groundtruth`
    #[arg(long, value_name = "FILE")]
    groundtruth: Option<PathBuf>,
}

struct Row {
    condition: Condition,
    task: u8,
    a: Option<f64>,
    b: Option<f64>,
    extra: Option<f64>,
    flags: BTreeSet<Flag>,
}

fn read_table(path: &Path, header: &[&str]) -> Result<Vec<(String, Row)>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if found != header {
        bail!("{}: header must be {}", path.display(), header.join(","));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: row {}", path.display(), i + 2))?;
        let ctx = || format!("{}: row {}", path.display(), i + 2);
        let has_extra = header.len() == 7;
        let flags_at = header.len() - 1;
        rows.push((
            rec[0].to_string(),
            Row {
                condition: rec[1].parse().with_context(ctx)?,
                task: rec[2].parse().with_context(ctx)?,
                a: parse_opt(&rec[3]).with_context(ctx)?,
                b: parse_opt(&rec[4]).with_context(ctx)?,
                extra: if has_extra { parse_opt(&rec[5]).with_context(ctx)? } else { None },
                flags: parse_flags(&rec[flags_at]).with_context(ctx)?,
            },
        ));
    }
    Ok(rows)
}

fn join(est: Vec<(String, Row)>, gt: Vec<(String, Row)>) -> Result<Vec<TrialRecord>> {
    let mut truth: BTreeMap<String, Row> = BTreeMap::new();
    for (id, row) in gt {
        if truth.insert(id.clone(), row).is_some() {
            bail!("trial {id} appears twice in the ground truth");
        }
    }
    let mut out = Vec::with_capacity(est.len());
    let mut seen = BTreeSet::new();
    for (id, e) in est {
        if !seen.insert(id.clone()) {
            bail!("trial {id} appears twice in the estimates");
        }
        let Some(t) = truth.remove(&id) else {
            bail!("trial {id} is in the estimates but not in the ground truth");
        };
        if (e.condition, e.task) != (t.condition, t.task) {
            bail!("trial {id}: condition/task differ between estimates and ground truth");
        }
        out.push(TrialRecord {
            trial_id: id,
            condition: e.condition,
            task: e.task,
            hr_est: e.a,
            hr_gt: t.a,
            rr_est: e.b,
            rr_gt: t.b,
            skin_gray: e.extra,
            flags: e.flags.union(&t.flags).copied().collect(),
        });
    }
    if let Some(id) = truth.keys().next() {
        bail!("trial {id} is in the ground truth but not in the estimates");
    }
    Ok(out)
}

pub fn run(g: &Globals, a: EvaluateArgs) -> Result<()> {
    let out = g.out.clone().ok_or_else(|| usage("evaluate needs --out DIR"))?;
    let pick = |given: &Option<PathBuf>, name: &str, flag: &str| {
        given
            .clone()
            .or_else(|| a.dataset.as_ref().map(|d| d.join(name)))
            .ok_or_else(|| usage(format!("pass {flag} FILE or a dataset directory")))
    };
    let est_path = pick(&a.estimates, ESTIMATES_FILE, "--estimates")?;
    let gt_path = pick(&a.groundtruth, GROUNDTRUTH_FILE, "--groundtruth")?;
    let records = join(read_table(&est_path, &ESTIMATES_HEADER)?, read_table(&gt_path, &GROUNDTRUTH_HEADER)?)?;
    let report = emit_report(records, &out)?;

    for (name, groups) in [("HR", &report.hr), ("RR", &report.rr)] {
        for grp in groups.iter() {
            match &grp.stats {
                Some(s) => println!(
                    "{name} {}: median participant RMSE {:.3} over {} participants, {} trials",
                    grp.condition,
                    s.median,
                    grp.participants.len(),
                    grp.n_trials
                ),
                None => println!("{name} {}: no scored trials", grp.condition),
            }
        }
    }
    match &report.regression.fit {
        Some(f) => println!("HR RMSE vs face gray: slope {:.5} ± {:.5} per gray level", f.slope, f.ci95_slope),
        None => println!("HR RMSE vs face gray: too few distinct participants for a fit"),
    }
    println!("report written to {}", out.display());
    Ok(())
}
