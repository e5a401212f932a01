//! `key = value` pipeline configuration shared by files and flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use vitalcam::detect::DetectParams;
use vitalcam::dsp::{FrequencyBand, StftSpec};
use vitalcam::groundtruth::GroundTruthConfig;
use vitalcam::ingest::{CropMargins, Rect};
use vitalcam::vitals::EstimatorConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum RoiChoice {
    /// Fixed face box in cropped-frame coordinates.
    Manual(Rect),
    Cascade(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub crop: CropMargins,
    pub roi: Option<RoiChoice>,
    pub detect: DetectParams,
    pub estimator: EstimatorConfig,
    pub groundtruth: GroundTruthConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            crop: CropMargins::WEBCAM,
            roi: None,
            detect: DetectParams::default(),
            estimator: EstimatorConfig::default(),
            groundtruth: GroundTruthConfig::default(),
        }
    }
}

pub const KEYS: [&str; 12] = [
    "crop",
    "roi",
    "cascade",
    "hr_band",
    "rr_band",
    "filter_order",
    "video_stft",
    "physio_stft",
    "scalarization",
    "scale_factor",
    "min_neighbors",
    "min_size",
];

fn numbers<T: std::str::FromStr>(value: &str, n: usize, what: &str) -> Result<Vec<T>> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != n {
        bail!("{what} needs {n} comma-separated values, got {value:?}");
    }
    parts
        .iter()
        .map(|p| p.parse::<T>().map_err(|_| anyhow!("{what}: cannot parse {p:?}")))
        .collect()
}

pub fn parse_crop(value: &str) -> Result<CropMargins> {
    let v = numbers::<usize>(value, 4, "crop (left,right,top,bottom)")?;
    Ok(CropMargins::new(v[0], v[1], v[2], v[3]))
}

pub fn parse_band(value: &str) -> Result<FrequencyBand> {
    let v = numbers::<f64>(value, 2, "band (low_hz,high_hz)")?;
    Ok(FrequencyBand::new(v[0], v[1])?)
}

pub fn parse_stft(value: &str) -> Result<StftSpec> {
    let v = numbers::<usize>(value, 3, "stft (window,hop,fft)")?;
    Ok(StftSpec::new(v[0], v[1], v[2])?)
}

pub fn parse_manual_roi(value: &str) -> Result<Rect> {
    let rest = value
        .strip_prefix("manual:")
        .ok_or_else(|| anyhow!("roi must look like manual:x,y,w,h, got {value:?}"))?;
    let v = numbers::<usize>(rest, 4, "roi")?;
    let r = Rect::new(v[0], v[1], v[2], v[3]);
    if r.is_empty() {
        bail!("roi {value:?} is empty");
    }
    Ok(r)
}

impl PipelineConfig {
    /// `base` resolves relative cascade paths.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        match key {
            "crop" => self.crop = parse_crop(value)?,
            "roi" => self.roi = Some(RoiChoice::Manual(parse_manual_roi(value)?)),
            "cascade" => self.roi = Some(RoiChoice::Cascade(base.join(value))),
            "hr_band" => {
                let b = parse_band(value)?;
                self.estimator.hr_band = b;
                self.groundtruth.hr_band = b;
            }
            "rr_band" => {
                let b = parse_band(value)?;
                self.estimator.rr_band = b;
                self.groundtruth.rr_band = b;
            }
            "filter_order" => {
                let n: usize = value.parse().map_err(|_| anyhow!("filter_order: cannot parse {value:?}"))?;
                if n == 0 {
                    bail!("filter_order must be at least 1");
                }
                self.estimator.filter_order = n;
                self.groundtruth.filter_order = n;
            }
            "video_stft" => self.estimator.stft = parse_stft(value)?,
            "physio_stft" => self.groundtruth.stft = parse_stft(value)?,
            "scalarization" => self.estimator.scalarization = value.parse()?,
            "scale_factor" => {
                self.detect.scale_factor = value.parse().map_err(|_| anyhow!("scale_factor: cannot parse {value:?}"))?
            }
            "min_neighbors" => {
                self.detect.min_neighbors = value.parse().map_err(|_| anyhow!("min_neighbors: cannot parse {value:?}"))?
            }
            "min_size" => self.detect.min_size = value.parse().map_err(|_| anyhow!("min_size: cannot parse {value:?}"))?,
            other => bail!("unknown configuration key {other:?} (known: {})", KEYS.join(", ")),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str, base: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
            self.set(k.trim(), v.trim(), base).with_context(|| format!("line {}", i + 1))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        self.apply_text(&text, base).with_context(|| format!("config {}", path.display()))
    }
}
