pub mod convert;
pub mod estimate;
pub mod evaluate;
pub mod groundtruth;
pub mod synth;

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use vitalcam::eval::Flag;
use vitalcam::synth::PIPELINE_CONF_FILE;

use crate::config::PipelineConfig;
use crate::Globals;

/// Bad flags or configuration; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub const ESTIMATES_FILE: &str = "estimates.csv";
pub const ESTIMATES_HEADER: [&str; 7] = ["trial_id", "condition", "task", "hr_est", "rr_est", "skin_gray", "flags"];
pub const GROUNDTRUTH_FILE: &str = "groundtruth.csv";
pub const GROUNDTRUTH_HEADER: [&str; 6] = ["trial_id", "condition", "task", "hr_gt", "rr_gt", "flags"];

/// Defaults, then `--config` (or `dataset/pipeline.conf`), then flags.
pub fn load_config(g: &Globals, dataset: Option<&Path>, overrides: &[(&str, Option<&str>)]) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    let file = g
        .config
        .clone()
        .or_else(|| dataset.map(|d| d.join(PIPELINE_CONF_FILE)).filter(|p| p.is_file()));
    if let Some(path) = file {
        log::info!("using config {}", path.display());
        cfg.apply_file(&path).map_err(|e| usage(format!("{e:#}")))?;
    }
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, v, Path::new("."))
                .map_err(|e| usage(format!("--{}: {e:#}", key.replace('_', "-"))))?;
        }
    }
    Ok(cfg)
}

pub fn out_dir(g: &Globals, fallback: &Path) -> Result<PathBuf> {
    let dir = g.out.clone().unwrap_or_else(|| fallback.to_path_buf());
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn fmt_flags(flags: &BTreeSet<Flag>) -> String {
    flags.iter().map(Flag::as_str).collect::<Vec<_>>().join("|")
}

pub fn parse_flags(s: &str) -> Result<BTreeSet<Flag>> {
    if s.is_empty() {
        return Ok(BTreeSet::new());
    }
    Ok(s.split('|').map(str::parse).collect::<vitalcam::Result<_>>()?)
}

pub fn parse_opt(s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        Ok(Some(s.parse().with_context(|| format!("not a number: {s:?}"))?))
    }
}
