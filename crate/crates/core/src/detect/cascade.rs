//! Staged Haar classifier and its JSON file format.
//!
//! ```json
//! {
//!   "window": [24, 24],
//!   "stages": [
//!     {
//!       "threshold": 0.5,
//!       "trees": [
//!         {
//!           "rects": [[0, 0, 24, 12, -1.0], [0, 12, 24, 12, 1.0]],
//!           "threshold": 100.0,
//!           "pass": 1.0,
//!           "fail": 0.0
//!         }
//!       ]
//!     }
//!   ]
//! }
//! ```
//!
//! `rects` entries are `[x, y, w, h, weight]` in base-window pixels. A tree
//! emits `pass` when its normalized feature is at least `threshold`, otherwise
//! `fail`. A window is accepted when every stage's output sum reaches the
//! stage threshold.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IntegralImage;
use crate::error::{Error, Result};
use crate::ingest::Rect;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedRect {
    pub rect: Rect,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub feature: Vec<WeightedRect>,
    pub threshold: f64,
    pub pass_value: f64,
    pub fail_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub threshold: f64,
    pub trees: Vec<Tree>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cascade {
    pub window_w: usize,
    pub window_h: usize,
    pub stages: Vec<Stage>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CascadeFile {
    window: [usize; 2],
    stages: Vec<StageFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StageFile {
    threshold: f64,
    trees: Vec<TreeFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeFile {
    rects: Vec<(usize, usize, usize, usize, f64)>,
    threshold: f64,
    pass: f64,
    fail: f64,
}

impl Cascade {
    pub fn new(window_w: usize, window_h: usize, stages: Vec<Stage>) -> Result<Self> {
        let c = Self {
            window_w,
            window_h,
            stages,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_w == 0 || self.window_h == 0 {
            return Err(Error::Cascade("window has zero size".into()));
        }
        if self.stages.is_empty() {
            return Err(Error::Cascade("cascade has no stages".into()));
        }
        for (si, stage) in self.stages.iter().enumerate() {
            if stage.trees.is_empty() {
                return Err(Error::Cascade(format!("stage {si} has no trees")));
            }
            if !stage.threshold.is_finite() {
                return Err(Error::Cascade(format!("stage {si} threshold is not finite")));
            }
            for (ti, tree) in stage.trees.iter().enumerate() {
                if tree.feature.is_empty() {
                    return Err(Error::Cascade(format!("stage {si} tree {ti} has no rects")));
                }
                if ![tree.threshold, tree.pass_value, tree.fail_value].iter().all(|v| v.is_finite()) {
                    return Err(Error::Cascade(format!("stage {si} tree {ti} has a non-finite value")));
                }
                for wr in &tree.feature {
                    if wr.rect.is_empty() || !wr.rect.fits_in(self.window_w, self.window_h) {
                        return Err(Error::Cascade(format!(
                            "stage {si} tree {ti}: rect {:?} outside {}x{} window",
                            wr.rect, self.window_w, self.window_h
                        )));
                    }
                    if !wr.weight.is_finite() {
                        return Err(Error::Cascade(format!("stage {si} tree {ti}: non-finite weight")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CascadeFile =
            serde_json::from_str(text).map_err(|e| Error::Cascade(format!("schema violation: {e}")))?;
        let stages = file
            .stages
            .into_iter()
            .map(|s| Stage {
                threshold: s.threshold,
                trees: s
                    .trees
                    .into_iter()
                    .map(|t| Tree {
                        feature: t
                            .rects
                            .into_iter()
                            .map(|(x, y, w, h, weight)| WeightedRect {
                                rect: Rect::new(x, y, w, h),
                                weight,
                            })
                            .collect(),
                        threshold: t.threshold,
                        pass_value: t.pass,
                        fail_value: t.fail,
                    })
                    .collect(),
            })
            .collect();
        Self::new(file.window[0], file.window[1], stages)
    }

    /// Canonical pretty-printed JSON.
    pub fn to_json(&self) -> String {
        let file = CascadeFile {
            window: [self.window_w, self.window_h],
            stages: self
                .stages
                .iter()
                .map(|s| StageFile {
                    threshold: s.threshold,
                    trees: s
                        .trees
                        .iter()
                        .map(|t| TreeFile {
                            rects: t
                                .feature
                                .iter()
                                .map(|wr| (wr.rect.x, wr.rect.y, wr.rect.w, wr.rect.h, wr.weight))
                                .collect(),
                            threshold: t.threshold,
                            pass: t.pass_value,
                            fail: t.fail_value,
                        })
                        .collect(),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("cascade serializes");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Cascade(msg) => Error::Cascade(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    /// Runs every stage on `win`, a window of the base size scaled by `scale`.
    ///
    /// Feature sums are divided by `scale²` and by the window's standard
    /// deviation (taken as 1 for a flat window).
    pub fn evaluate_window(&self, ii: &IntegralImage, ii_sq: &IntegralImage, win: Rect, scale: f64) -> bool {
        debug_assert!(win.fits_in(ii.width(), ii.height()));
        let area = (win.w * win.h) as u128;
        let s = u128::from(ii.sum_unchecked(win.x, win.y, win.w, win.h));
        let sq = u128::from(ii_sq.sum_unchecked(win.x, win.y, win.w, win.h));
        // area·Σx² − (Σx)² is exact and never negative in integers
        let var = (area * sq).saturating_sub(s * s) as f64 / (area * area) as f64;
        let sigma = if var > 0.0 { var.sqrt() } else { 1.0 };
        let denom = scale * scale * sigma;

        self.stages.iter().all(|stage| {
            let total: f64 = stage
                .trees
                .iter()
                .map(|tree| {
                    let f: f64 = tree
                        .feature
                        .iter()
                        .map(|wr| {
                            let (x, y, w, h) = scale_rect(wr.rect, scale, win);
                            if w == 0 || h == 0 {
                                0.0
                            } else {
                                wr.weight * ii.sum_unchecked(x, y, w, h) as f64
                            }
                        })
                        .sum();
                    if f / denom >= tree.threshold {
                        tree.pass_value
                    } else {
                        tree.fail_value
                    }
                })
                .sum();
            total >= stage.threshold
        })
    }
}

/// Scales a base-window rect and clips it to the scaled window.
fn scale_rect(r: Rect, scale: f64, win: Rect) -> (usize, usize, usize, usize) {
    let sx = ((r.x as f64 * scale).round() as usize).min(win.w);
    let sy = ((r.y as f64 * scale).round() as usize).min(win.h);
    let sw = ((r.w as f64 * scale).round() as usize).min(win.w - sx);
    let sh = ((r.h as f64 * scale).round() as usize).min(win.h - sy);
    (win.x + sx, win.y + sy, sw, sh)
}
