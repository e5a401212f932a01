//! Dataset manifest: `key=value` lines.
//!
//! ```text
//! # comment
//! fps=30
//! width=64
//! height=64
//! frames=1200
//! trial=P01/001,respiration,1,0,600,1
//! trial=P01/002,workout,2,600,600,2
//! ```
//!
//! `trial` lines carry `id,condition,task,start_frame,frame_count,trigger`
//! and may repeat. Frame `i` lives next to the manifest as
//! `frame_{i:06}.ppm`.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Task number of the breath-holding task, excluded from respiration scoring.
pub const HOLD_BREATH_TASK: u8 = 2;

/// File names inside a dataset directory.
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const PHYSIO_FILE: &str = "physio.csv";

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:06}.ppm")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    Respiration,
    Workout,
    Gaze,
}

impl Condition {
    pub const ALL: [Condition; 3] = [Condition::Respiration, Condition::Workout, Condition::Gaze];

    pub fn as_str(&self) -> &'static str {
        match self {
            Condition::Respiration => "respiration",
            Condition::Workout => "workout",
            Condition::Gaze => "gaze",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "respiration" => Ok(Condition::Respiration),
            "workout" => Ok(Condition::Workout),
            "gaze" => Ok(Condition::Gaze),
            other => Err(Error::invalid(format!("unknown condition {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialEntry {
    pub trial_id: String,
    pub condition: Condition,
    /// 1..=7
    pub task: u8,
    pub start_frame: usize,
    pub frame_count: usize,
    pub trigger_code: u32,
}

impl TrialEntry {
    pub fn is_hold_breath(&self) -> bool {
        self.task == HOLD_BREATH_TASK
    }

    pub fn frames(&self) -> std::ops::Range<usize> {
        self.start_frame..self.start_frame + self.frame_count
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub fps: f64,
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub trials: Vec<TrialEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::InvalidArgument(msg) => Error::format(path, msg),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let (mut fps, mut width, mut height, mut frames) = (None, None, None, None);
        let mut trials = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::invalid(format!("line {}: {msg}", lineno + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got {line:?}")))?;
            let value = value.trim();
            match key.trim() {
                "fps" => fps = Some(value.parse::<f64>().map_err(|e| err(format!("fps: {e}")))?),
                "width" => width = Some(value.parse::<usize>().map_err(|e| err(format!("width: {e}")))?),
                "height" => height = Some(value.parse::<usize>().map_err(|e| err(format!("height: {e}")))?),
                "frames" => frames = Some(value.parse::<usize>().map_err(|e| err(format!("frames: {e}")))?),
                "trial" => trials.push(parse_trial(value).map_err(|e| err(e.to_string()))?),
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        let missing = |k: &str| Error::invalid(format!("manifest lacks `{k}`"));
        let manifest = Manifest {
            fps: fps.ok_or_else(|| missing("fps"))?,
            width: width.ok_or_else(|| missing("width"))?,
            height: height.ok_or_else(|| missing("height"))?,
            frames: frames.ok_or_else(|| missing("frames"))?,
            trials,
        };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::invalid(format!("fps must be positive, got {}", self.fps)));
        }
        if self.width == 0 || self.height == 0 || self.frames == 0 {
            return Err(Error::invalid("width, height and frames must be non-zero"));
        }
        let mut ids = HashSet::new();
        let mut codes = HashSet::new();
        let mut ranges: Vec<_> = Vec::with_capacity(self.trials.len());
        for t in &self.trials {
            if !(1..=7).contains(&t.task) {
                return Err(Error::invalid(format!("trial {}: task {} outside 1..7", t.trial_id, t.task)));
            }
            if t.frame_count == 0 || t.start_frame + t.frame_count > self.frames {
                return Err(Error::invalid(format!(
                    "trial {}: frames {:?} outside 0..{}",
                    t.trial_id,
                    t.frames(),
                    self.frames
                )));
            }
            if t.trigger_code == 0 {
                return Err(Error::invalid(format!("trial {}: trigger code 0 is reserved", t.trial_id)));
            }
            if !ids.insert(t.trial_id.as_str()) {
                return Err(Error::invalid(format!("duplicate trial id {}", t.trial_id)));
            }
            if !codes.insert(t.trigger_code) {
                return Err(Error::invalid(format!("duplicate trigger code {}", t.trigger_code)));
            }
            ranges.push(t.frames());
        }
        ranges.sort_by_key(|r| r.start);
        if let Some(w) = ranges.windows(2).find(|w| w[1].start < w[0].end) {
            return Err(Error::invalid(format!(
                "trial frame ranges {:?} and {:?} overlap",
                w[0], w[1]
            )));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "fps={}\nwidth={}\nheight={}\nframes={}\n",
            self.fps, self.width, self.height, self.frames
        );
        for t in &self.trials {
            out.push_str(&format!(
                "trial={},{},{},{},{},{}\n",
                t.trial_id, t.condition, t.task, t.start_frame, t.frame_count, t.trigger_code
            ));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn parse_trial(value: &str) -> Result<TrialEntry> {
    let fields: Vec<&str> = value.split(',').map(str::trim).collect();
    let [id, condition, task, start, count, trigger] = fields[..] else {
        return Err(Error::invalid(format!(
            "trial needs 6 comma-separated fields, got {}",
            fields.len()
        )));
    };
    if id.is_empty() {
        return Err(Error::invalid("empty trial id"));
    }
    let num = |s: &str, what: &str| -> Result<usize> {
        s.parse().map_err(|_| Error::invalid(format!("bad {what} {s:?}")))
    };
    Ok(TrialEntry {
        trial_id: id.to_string(),
        condition: condition.parse()?,
        task: num(task, "task")? as u8,
        start_frame: num(start, "start frame")?,
        frame_count: num(count, "frame count")?,
        trigger_code: num(trigger, "trigger code")? as u32,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "# demo\nfps=30\nwidth=4\nheight=4\nframes=900\n\
        trial=P01/001,respiration,1,0,600,1\ntrial=P01/002,gaze,5,600,300,2\n";

    #[test]
    fn parses_and_round_trips() {
        let m = Manifest::parse(TEXT).unwrap();
        assert_eq!(m.trials.len(), 2);
        assert_eq!(m.trials[1].condition, Condition::Gaze);
        assert_eq!(m.trials[0].frame_count as f64 / m.fps, 20.0);
        assert_eq!(Manifest::parse(&m.to_text()).unwrap(), m);
    }

    #[test]
    fn rejects_overlap_and_duplicates() {
        let overlap = "fps=30\nwidth=4\nheight=4\nframes=900\n\
            trial=a,respiration,1,0,600,1\ntrial=b,gaze,5,599,300,2\n";
        assert!(Manifest::parse(overlap).is_err());
        let dup_code = "fps=30\nwidth=4\nheight=4\nframes=900\n\
            trial=a,respiration,1,0,300,1\ntrial=b,gaze,5,300,300,1\n";
        assert!(Manifest::parse(dup_code).is_err());
        let out_of_range = "fps=30\nwidth=4\nheight=4\nframes=100\ntrial=a,gaze,3,0,300,1\n";
        assert!(Manifest::parse(out_of_range).is_err());
    }

    #[test]
    fn rejects_missing_keys_and_garbage() {
        assert!(Manifest::parse("fps=30\nwidth=4\nheight=4\n").is_err());
        assert!(Manifest::parse("fps=30\nwidth=4\nheight=4\nframes=3\nbogus line\n").is_err());
        assert!(Manifest::parse("fps=0\nwidth=4\nheight=4\nframes=3\n").is_err());
        assert!(Manifest::parse("fps=30\nwidth=4\nheight=4\nframes=3\ntrial=a,sleep,1,0,1,1\n").is_err());
    }

    #[test]
    fn hold_breath_flag() {
        let m = Manifest::parse(
            "fps=30\nwidth=4\nheight=4\nframes=10\ntrial=a,respiration,2,0,10,1\n",
        )
        .unwrap();
        assert!(m.trials[0].is_hold_breath());
    }
}
