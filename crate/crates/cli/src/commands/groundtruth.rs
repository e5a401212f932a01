use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use rayon::prelude::*;
use vitalcam::dsp::RateEstimate;
use vitalcam::eval::{segment_trials, Flag};
use vitalcam::groundtruth::{gt_hr, gt_rr};
use vitalcam::ingest::{load_physio_csv, Manifest, MANIFEST_FILE, PHYSIO_FILE};
use vitalcam::Error;

use super::{fmt_flags, fmt_opt, load_config, out_dir, GROUNDTRUTH_FILE, GROUNDTRUTH_HEADER};
use crate::Globals;

#[derive(Args, Debug)]
pub struct GroundtruthArgs {
    /// Dataset directory holding manifest.txt and physio.csv
    dataset: PathBuf,
    /// Physio CSV to use instead of DATASET/physio.csv
    #[arg(long, value_name = "FILE")]
    physio: Option<PathBuf>,
    /// Heart-rate band, Hz [default: 0.7,2.5]
    #[arg(long, value_name = "LO,HI")]
    hr_band: Option<String>,
    /// Respiration band, Hz [default: 0.2,0.5]
    #[arg(long, value_name = "LO,HI")]
    rr_band: Option<String>,
    /// Butterworth order per filtering direction [default: 3]
    #[arg(long, value_name = "N")]
    filter_order: Option<String>,
    /// Physio STFT window,hop,fft in samples [default: 1024,128,8192]
    #[arg(long, value_name = "W,H,F")]
    physio_stft: Option<String>,
}

/// Low-confidence or failed extraction leaves the value flagged.
fn settle(r: vitalcam::Result<RateEstimate>) -> Result<(Option<f64>, bool)> {
    match r {
        Ok(e) => Ok((Some(e.per_minute), e.is_low_confidence())),
        Err(Error::NoPeaks) | Err(Error::SignalTooShort(_)) => Ok((None, true)),
        Err(e) => Err(e.into()),
    }
}

pub fn run(g: &Globals, a: GroundtruthArgs) -> Result<()> {
    let cfg = load_config(
        g,
        Some(&a.dataset),
        &[
            ("hr_band", a.hr_band.as_deref()),
            ("rr_band", a.rr_band.as_deref()),
            ("filter_order", a.filter_order.as_deref()),
            ("physio_stft", a.physio_stft.as_deref()),
        ],
    )?
    .groundtruth;
    let manifest = Manifest::load(&a.dataset.join(MANIFEST_FILE))?;
    let physio = load_physio_csv(&a.physio.clone().unwrap_or_else(|| a.dataset.join(PHYSIO_FILE)))?;
    let segments = segment_trials(&physio, &manifest)?;

    let rows = manifest
        .trials
        .par_iter()
        .zip(&segments)
        .map(|(t, s)| {
            let (hr, hr_bad) = settle(gt_hr(&physio.ecg.slice(s.physio.clone())?, &cfg))?;
            let (rr, rr_bad) = settle(gt_rr(&physio.resp.slice(s.physio.clone())?, &cfg))?;
            let mut flags = BTreeSet::new();
            if hr_bad {
                flags.insert(Flag::HrOutOfBand);
            }
            if rr_bad {
                flags.insert(Flag::RrOutOfBand);
            }
            if t.is_hold_breath() {
                flags.insert(Flag::HoldBreathExcluded);
            }
            Ok((hr, rr, flags))
        })
        .collect::<Result<Vec<_>>>()
        .context("ground truth")?;

    let mut text = GROUNDTRUTH_HEADER.join(",") + "\n";
    for (t, (hr, rr, flags)) in manifest.trials.iter().zip(&rows) {
        let _ = writeln!(text, "{},{},{},{},{},{}", t.trial_id, t.condition, t.task, fmt_opt(*hr), fmt_opt(*rr), fmt_flags(flags));
    }
    let out = out_dir(g, &a.dataset)?;
    let path = out.join(GROUNDTRUTH_FILE);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    println!("{} trials, ground truth written to {}", rows.len(), path.display());
    Ok(())
}
