use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;
use vitalcam::detect::{track_roi, Cascade, RoiSource};
use vitalcam::dsp::{bandpass, BandpassSpec, TimeSeries};
use vitalcam::eval::{skin_tone_gray, write_signal_plot, Flag};
use vitalcam::ingest::{crop_clip, read_frame_range, Manifest, Rect, TrialEntry, MANIFEST_FILE};
use vitalcam::vitals::{estimate_hr, estimate_rr, hr_roi, mean_gray_trace, pulse_signal, rr_roi};
use vitalcam::Error;

use super::{fmt_flags, fmt_opt, load_config, out_dir, usage, ESTIMATES_FILE, ESTIMATES_HEADER};
use crate::config::{PipelineConfig, RoiChoice};
use crate::Globals;

#[derive(Args, Debug)]
pub struct EstimateArgs {
    /// Dataset directory holding manifest.txt and the frame files
    dataset: PathBuf,
    /// Pixels cropped from each side before tracking: left,right,top,bottom [default: 300,300,200,0]
    #[arg(long, value_name = "L,R,T,B")]
    crop: Option<String>,
    /// Fixed face box in cropped-frame coordinates, e.g. manual:0,0,64,64
    #[arg(long, value_name = "manual:X,Y,W,H", conflicts_with = "cascade")]
    roi: Option<String>,
    /// Cascade JSON for per-frame face detection
    #[arg(long, value_name = "FILE")]
    cascade: Option<String>,
    /// Heart-rate band, Hz [default: 0.7,2.5]
    #[arg(long, value_name = "LO,HI")]
    hr_band: Option<String>,
    /// Respiration band, Hz [default: 0.2,0.5]
    #[arg(long, value_name = "LO,HI")]
    rr_band: Option<String>,
    /// Butterworth order per filtering direction [default: 3]
    #[arg(long, value_name = "N")]
    filter_order: Option<String>,
    /// Video STFT window,hop,fft in samples [default: 256,30,4096]
    #[arg(long, value_name = "W,H,F")]
    video_stft: Option<String>,
    /// Pulse feature: spherical_log_map or green_chromaticity [default: spherical_log_map]
    #[arg(long, value_name = "MODE")]
    scalarization: Option<String>,
    /// Also write raw/filtered trace SVGs per trial into OUT/plots
    #[arg(long)]
    plots: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct Row {
    hr: Option<f64>,
    rr: Option<f64>,
    skin: Option<f64>,
    flags: BTreeSet<Flag>,
}

fn plot_name(trial_id: &str, what: &str) -> String {
    format!("{}_{what}.svg", trial_id.replace(['/', '\\'], "_"))
}

fn plot(dir: &Path, trial: &TrialEntry, what: &str, raw: &TimeSeries, spec: BandpassSpec) -> Result<()> {
    let filtered = bandpass(raw, &spec)?;
    write_signal_plot(&dir.join(plot_name(&trial.trial_id, what)), &format!("{} {what}", trial.trial_id), raw, &filtered)?;
    Ok(())
}

fn estimate_trial(dir: &Path, manifest: &Manifest, trial: &TrialEntry, cfg: &PipelineConfig, source: &RoiSource, plots: Option<&Path>) -> Result<Row> {
    let clip = read_frame_range(dir, manifest, trial.start_frame, trial.frame_count)?;
    let clip = crop_clip(&clip, cfg.crop)?;
    let faces = match track_roi(&clip, source) {
        Ok(f) => f,
        Err(Error::NoFaceFound(n)) => {
            log::warn!("trial {}: no face in any of {n} frames", trial.trial_id);
            return Ok(Row {
                hr: None,
                rr: None,
                skin: None,
                flags: BTreeSet::from([Flag::RoiFailure]),
            });
        }
        Err(e) => return Err(e.into()),
    };
    let mut flags = BTreeSet::new();
    let est = &cfg.estimator;

    let hr_rois: Vec<Rect> = faces.iter().map(|f| hr_roi(*f)).collect();
    let hr = estimate_hr(&clip, &hr_rois, est)?;
    if hr.is_degenerate() {
        flags.insert(Flag::HrOutOfBand);
    }

    let rr_rois = faces
        .iter()
        .map(|f| rr_roi(*f, clip.height(), clip.width()))
        .collect::<vitalcam::Result<Vec<_>>>();
    let rr = match &rr_rois {
        Ok(rois) => Some(estimate_rr(&clip, rois, est)?),
        Err(e) => {
            log::warn!("trial {}: {e}", trial.trial_id);
            None
        }
    };
    if rr.as_ref().is_none_or(|r| r.is_degenerate()) {
        flags.insert(Flag::RrOutOfBand);
    }

    if let Some(pdir) = plots {
        let spec = |band| BandpassSpec { band, order: est.filter_order };
        plot(pdir, trial, "hr", &pulse_signal(&clip, &hr_rois, est.scalarization)?, spec(est.hr_band))?;
        if let Ok(rois) = &rr_rois {
            plot(pdir, trial, "rr", &mean_gray_trace(&clip, rois)?, spec(est.rr_band))?;
        }
    }

    Ok(Row {
        hr: Some(hr.per_minute),
        rr: rr.map(|r| r.per_minute),
        skin: Some(skin_tone_gray(&clip, &faces)?),
        flags,
    })
}

pub fn run(g: &Globals, a: EstimateArgs) -> Result<()> {
    let cfg = load_config(
        g,
        Some(&a.dataset),
        &[
            ("crop", a.crop.as_deref()),
            ("roi", a.roi.as_deref()),
            ("cascade", a.cascade.as_deref()),
            ("hr_band", a.hr_band.as_deref()),
            ("rr_band", a.rr_band.as_deref()),
            ("filter_order", a.filter_order.as_deref()),
            ("video_stft", a.video_stft.as_deref()),
            ("scalarization", a.scalarization.as_deref()),
        ],
    )?;
    let source = match &cfg.roi {
        Some(RoiChoice::Manual(r)) => RoiSource::Manual(*r),
        Some(RoiChoice::Cascade(p)) => RoiSource::Cascade {
            cascade: Cascade::load(p)?,
            params: cfg.detect,
        },
        None => return Err(usage("no ROI source: pass --roi manual:X,Y,W,H or --cascade FILE (or set one in the config)")),
    };
    let manifest = Manifest::load(&a.dataset.join(MANIFEST_FILE))?;
    let out = out_dir(g, &a.dataset)?;
    let plots = if a.plots {
        let p = out.join("plots");
        fs::create_dir_all(&p).with_context(|| format!("creating {}", p.display()))?;
        Some(p)
    } else {
        None
    };

    let rows = manifest
        .trials
        .par_iter()
        .map(|t| {
            log::info!("estimating {}", t.trial_id);
            estimate_trial(&a.dataset, &manifest, t, &cfg, &source, plots.as_deref()).with_context(|| format!("trial {}", t.trial_id))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut text = ESTIMATES_HEADER.join(",") + "\n";
    for (t, r) in manifest.trials.iter().zip(&rows) {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{}",
            t.trial_id,
            t.condition,
            t.task,
            fmt_opt(r.hr),
            fmt_opt(r.rr),
            fmt_opt(r.skin),
            fmt_flags(&r.flags)
        );
    }
    let path = out.join(ESTIMATES_FILE);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;

    let failed = rows.iter().filter(|r| r.flags.contains(&Flag::RoiFailure)).count();
    println!("{} trials estimated, {failed} without a face, written to {}", rows.len(), path.display());
    if failed == rows.len() {
        bail!("no face found in any trial");
    }
    Ok(())
}
