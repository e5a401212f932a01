//! On-disk synthetic recording sessions following the block protocol.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{ecg_from_beats, synth_clip, SynthConfig, RESP_NOISE_SIGMA};
use crate::dsp::TimeSeries;
use crate::error::{Error, Result};
use crate::ingest::{
    frame_file_name, write_physio_csv, write_ppm, Condition, FaceBox, Manifest, PhysioRecord, TrialEntry,
    HOLD_BREATH_TASK, MANIFEST_FILE, PHYSIO_FILE,
};

pub const TRUTH_FILE: &str = "truth.csv";
pub const PIPELINE_CONF_FILE: &str = "pipeline.conf";

const RESPIRATION_TASKS: [u8; 3] = [1, 2, 7];
const GAZE_TASKS: [u8; 5] = [3, 4, 5, 6, 7];

const WORKOUT_HR_RISE: f64 = 25.0;
const WORKOUT_RR_RISE: f64 = 5.0;
const WORKOUT_CHEST_GAIN: f64 = 1.5;
const PARTICIPANT_HR_SPREAD: f64 = 5.0;
const TRIAL_HR_SPREAD: f64 = 3.0;
const TRIAL_RR_SPREAD: f64 = 1.5;
const ECG_JITTER: f64 = 0.02;
const ECG_NOISE_SIGMA: f64 = 0.005;
const ECG_WANDER: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Protocol {
    /// Respiratory part: per condition (normal, workout) `respiration_blocks`
    /// blocks, each a shuffled run of tasks 1, 2, 7. Gaze part: `gaze_blocks`
    /// blocks, each a shuffled run of tasks 3 to 7. The two parts swap order
    /// from one participant to the next.
    Blocks {
        respiration_blocks: usize,
        gaze_blocks: usize,
        respiration_trial_s: f64,
        gaze_trial_s: f64,
    },
    /// One normal-breathing trial per participant at exactly the base rates.
    Single { duration_s: f64 },
}

impl Protocol {
    pub fn paper() -> Self {
        Self::with_blocks(5, 10)
    }

    pub fn with_blocks(respiration_blocks: usize, gaze_blocks: usize) -> Self {
        Protocol::Blocks {
            respiration_blocks,
            gaze_blocks,
            respiration_trial_s: 20.0,
            gaze_trial_s: 10.0,
        }
    }

    pub fn single(duration_s: f64) -> Self {
        Protocol::Single { duration_s }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Protocol::Blocks {
                respiration_blocks,
                gaze_blocks,
                respiration_trial_s,
                gaze_trial_s,
            } => {
                if respiration_blocks + gaze_blocks == 0 {
                    return Err(Error::invalid("protocol has no blocks"));
                }
                if !(respiration_trial_s > 0.0 && gaze_trial_s > 0.0) {
                    return Err(Error::invalid("trial lengths must be positive"));
                }
            }
            Protocol::Single { duration_s } => {
                if !(duration_s > 0.0 && duration_s.is_finite()) {
                    return Err(Error::invalid("trial length must be positive"));
                }
            }
        }
        Ok(())
    }

    /// (condition, task, seconds) for one participant, in recording order.
    pub fn schedule(&self, participant: usize, rng: &mut impl Rng) -> Vec<(Condition, u8, f64)> {
        match *self {
            Protocol::Single { duration_s } => vec![(Condition::Respiration, 1, duration_s)],
            Protocol::Blocks {
                respiration_blocks,
                gaze_blocks,
                respiration_trial_s,
                gaze_trial_s,
            } => {
                let mut resp = Vec::new();
                for condition in [Condition::Respiration, Condition::Workout] {
                    for _ in 0..respiration_blocks {
                        let mut block = RESPIRATION_TASKS;
                        block.shuffle(rng);
                        resp.extend(block.map(|t| (condition, t, respiration_trial_s)));
                    }
                }
                let mut gaze = Vec::new();
                for _ in 0..gaze_blocks {
                    let mut block = GAZE_TASKS;
                    block.shuffle(rng);
                    gaze.extend(block.map(|t| (Condition::Gaze, t, gaze_trial_s)));
                }
                if participant % 2 == 0 {
                    resp.extend(gaze);
                    resp
                } else {
                    gaze.extend(resp);
                    gaze
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub protocol: Protocol,
    /// Frame geometry, base rates, noise and seed shared by all trials.
    pub base: SynthConfig,
    /// One participant per entry; empty means a single participant at `base.tone`.
    pub tones: Vec<f64>,
    pub physio_rate: f64,
    pub lead_in_s: f64,
    pub ready_s: f64,
    pub wait_s: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            protocol: Protocol::paper(),
            base: SynthConfig::default(),
            tones: Vec::new(),
            physio_rate: 128.0,
            lead_in_s: 2.0,
            ready_s: 1.0,
            wait_s: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialTruth {
    pub trial_id: String,
    pub participant: usize,
    pub condition: Condition,
    pub task: u8,
    /// Session time of the first frame, seconds.
    pub start_s: f64,
    pub duration_s: f64,
    pub hr_bpm: f64,
    pub rr_brpm: f64,
    pub chest_amp: f64,
    pub tone: f64,
    pub face_box: FaceBox,
    pub mean_face_gray: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSummary {
    pub manifest: Manifest,
    pub trials: Vec<TrialTruth>,
    pub physio_samples: usize,
}

impl DatasetSummary {
    /// (trial count, total seconds) per condition in `conditions`.
    pub fn totals(&self, conditions: &[Condition]) -> (usize, f64) {
        self.trials
            .iter()
            .filter(|t| conditions.contains(&t.condition))
            .fold((0, 0.0), |(n, s), t| (n + 1, s + t.duration_s))
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn derive_seed(seed: u64, purpose: u64, index: u64) -> u64 {
    splitmix(splitmix(seed ^ purpose.wrapping_mul(0x1000_0000_01b3)).wrapping_add(index))
}

fn plan(cfg: &DatasetConfig) -> Result<Vec<TrialTruth>> {
    cfg.protocol.validate()?;
    cfg.base.validate()?;
    for t in [cfg.lead_in_s, cfg.ready_s, cfg.wait_s] {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::invalid("lead-in, ready and wait times must be non-negative"));
        }
    }
    let tones = if cfg.tones.is_empty() { vec![cfg.base.tone] } else { cfg.tones.clone() };
    let single = matches!(cfg.protocol, Protocol::Single { .. });
    let mut out = Vec::new();
    let mut clock = cfg.lead_in_s;
    for (p, &tone) in tones.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.base.seed, 1, p as u64));
        let schedule = cfg.protocol.schedule(p, &mut rng);
        let spread = |rng: &mut ChaCha8Rng, w: f64| if single { 0.0 } else { rng.random_range(-w..=w) };
        let hr_base = cfg.base.hr_bpm + spread(&mut rng, PARTICIPANT_HR_SPREAD);
        for (k, (condition, task, duration_s)) in schedule.into_iter().enumerate() {
            let (mut hr, mut rr, mut chest) = (hr_base, cfg.base.rr_brpm, cfg.base.chest_amp);
            if condition == Condition::Workout {
                hr += WORKOUT_HR_RISE;
                rr += WORKOUT_RR_RISE;
                chest *= WORKOUT_CHEST_GAIN;
            }
            hr += spread(&mut rng, TRIAL_HR_SPREAD);
            rr += spread(&mut rng, TRIAL_RR_SPREAD);
            if task == HOLD_BREATH_TASK {
                chest = 0.0;
            }
            clock += cfg.ready_s;
            let trial_cfg = SynthConfig {
                tone,
                hr_bpm: hr,
                rr_brpm: rr,
                chest_amp: chest,
                duration: duration_s,
                start_time: clock,
                ..cfg.base
            };
            let truth = trial_cfg.truth()?;
            trial_cfg.validate()?;
            out.push(TrialTruth {
                trial_id: format!("P{:02}/{:03}", p + 1, k + 1),
                participant: p,
                condition,
                task,
                start_s: clock,
                duration_s,
                hr_bpm: hr,
                rr_brpm: rr,
                chest_amp: chest,
                tone,
                face_box: truth.face_box,
                mean_face_gray: truth.mean_face_gray,
            });
            clock += duration_s + cfg.wait_s;
        }
    }
    Ok(out)
}

/// Trial whose [ready start, wait end) span contains `t`; the lead-in maps to the first trial.
fn trial_at<'a>(trials: &'a [TrialTruth], cfg: &DatasetConfig, t: f64) -> &'a TrialTruth {
    let i = trials.partition_point(|tr| tr.start_s + tr.duration_s + cfg.wait_s <= t);
    &trials[i.min(trials.len() - 1)]
}

fn physio(cfg: &DatasetConfig, trials: &[TrialTruth]) -> Result<PhysioRecord> {
    let fs = cfg.physio_rate;
    let last = trials.last().expect("plan yields at least one trial");
    let n = ((last.start_s + last.duration_s + cfg.wait_s) * fs).round() as usize;
    let end = n as f64 / fs;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.base.seed, 2, 0));

    let mut beats = Vec::new();
    let mut t = 0.0;
    while t < end {
        beats.push(t);
        let u: f64 = rng.random_range(-1.0..=1.0);
        t += 60.0 / trial_at(trials, cfg, t).hr_bpm * (1.0 + ECG_JITTER * u);
    }
    let ecg_noise = Normal::new(0.0, ECG_NOISE_SIGMA).expect("valid sigma");
    let mut ecg = ecg_from_beats(&beats, fs, n);
    for (i, v) in ecg.iter_mut().enumerate() {
        *v += ECG_WANDER * (2.0 * PI * 0.15 * i as f64 / fs).sin() + ecg_noise.sample(&mut rng);
    }

    let resp_noise = Normal::new(0.0, RESP_NOISE_SIGMA).expect("valid sigma");
    let resp = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            let tr = trial_at(trials, cfg, t);
            let in_trial = t >= tr.start_s && t < tr.start_s + tr.duration_s;
            let amp = if in_trial && tr.task == HOLD_BREATH_TASK { 0.0 } else { 1.0 };
            amp * (2.0 * PI * tr.rr_brpm / 60.0 * t).sin() + resp_noise.sample(&mut rng)
        })
        .collect();

    let mut trigger = vec![0u32; n];
    for (k, tr) in trials.iter().enumerate() {
        trigger[(tr.start_s * fs).round() as usize] = k as u32 + 1;
    }
    PhysioRecord::new(TimeSeries::new(ecg, fs)?, TimeSeries::new(resp, fs)?, trigger)
}

fn truth_csv(trials: &[TrialTruth]) -> String {
    let mut s = String::from("trial_id,condition,task,hr_bpm,rr_brpm,chest_amp,tone,face_x,face_y,face_w,face_h,mean_face_gray\n");
    for t in trials {
        let f = t.face_box;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            t.trial_id, t.condition, t.task, t.hr_bpm, t.rr_brpm, t.chest_amp, t.tone, f.x, f.y, f.w, f.h, t.mean_face_gray
        );
    }
    s
}

fn pipeline_conf(face: FaceBox) -> String {
    format!(
        "# synthetic frames are small and uncropped; the face box is known\ncrop = 0,0,0,0\nroi = manual:{},{},{},{}\n",
        face.x, face.y, face.w, face.h
    )
}

/// Writes frames, manifest, physio CSV, per-trial truth and a pipeline
/// config into `out_dir`, creating it if needed.
pub fn synth_dataset(out_dir: &Path, cfg: &DatasetConfig) -> Result<DatasetSummary> {
    if !(cfg.physio_rate > 0.0 && cfg.physio_rate.is_finite()) {
        return Err(Error::invalid("physio_rate must be positive"));
    }
    let trials = plan(cfg)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut entries = Vec::with_capacity(trials.len());
    let mut next_frame = 0;
    for (k, tr) in trials.iter().enumerate() {
        let trial_cfg = SynthConfig {
            tone: tr.tone,
            hr_bpm: tr.hr_bpm,
            rr_brpm: tr.rr_brpm,
            chest_amp: tr.chest_amp,
            duration: tr.duration_s,
            start_time: tr.start_s,
            seed: derive_seed(cfg.base.seed, 3, k as u64),
            ..cfg.base
        };
        let (clip, _) = synth_clip(&trial_cfg)?;
        let clip = clip.to_u8();
        clip.frames()
            .par_iter()
            .enumerate()
            .try_for_each(|(i, f)| write_ppm(&out_dir.join(frame_file_name(next_frame + i)), f))?;
        entries.push(TrialEntry {
            trial_id: tr.trial_id.clone(),
            condition: tr.condition,
            task: tr.task,
            start_frame: next_frame,
            frame_count: clip.len(),
            trigger_code: k as u32 + 1,
        });
        next_frame += clip.len();
    }

    let manifest = Manifest {
        fps: cfg.base.fps,
        width: cfg.base.width,
        height: cfg.base.height,
        frames: next_frame,
        trials: entries,
    };
    manifest.validate()?;
    manifest.save(&out_dir.join(MANIFEST_FILE))?;

    let rec = physio(cfg, &trials)?;
    write_physio_csv(&out_dir.join(PHYSIO_FILE), &rec)?;

    let write = |name: &str, text: String| {
        let p = out_dir.join(name);
        fs::write(&p, text).map_err(|e| Error::io(&p, e))
    };
    write(TRUTH_FILE, truth_csv(&trials))?;
    write(PIPELINE_CONF_FILE, pipeline_conf(trials[0].face_box))?;

    Ok(DatasetSummary {
        manifest,
        trials,
        physio_samples: rec.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundtruth::{gt_hr, gt_rr, GroundTruthConfig};
    use crate::ingest::{load_physio_csv, read_frame_range};

    #[test]
    fn paper_protocol_arithmetic() {
        let trials = plan(&DatasetConfig::default()).unwrap();
        let resp: Vec<_> = trials.iter().filter(|t| t.condition != Condition::Gaze).collect();
        let gaze: Vec<_> = trials.iter().filter(|t| t.condition == Condition::Gaze).collect();
        assert_eq!(resp.len(), 30);
        assert_eq!(resp.iter().map(|t| t.duration_s).sum::<f64>(), 600.0);
        assert_eq!(gaze.len(), 50);
        assert_eq!(gaze.iter().map(|t| t.duration_s).sum::<f64>(), 500.0);
        for chunk in resp.chunks(3) {
            let mut tasks: Vec<u8> = chunk.iter().map(|t| t.task).collect();
            tasks.sort();
            assert_eq!(tasks, RESPIRATION_TASKS);
        }
        for chunk in gaze.chunks(5) {
            let mut tasks: Vec<u8> = chunk.iter().map(|t| t.task).collect();
            tasks.sort();
            assert_eq!(tasks, GAZE_TASKS);
        }
        assert_eq!(resp.iter().filter(|t| t.condition == Condition::Workout).count(), 15);
    }

    #[test]
    fn parts_alternate_and_workout_raises_rates() {
        let cfg = DatasetConfig {
            tones: vec![1.0, 0.8],
            ..DatasetConfig::default()
        };
        let trials = plan(&cfg).unwrap();
        let first = |p: usize| trials.iter().find(|t| t.participant == p).unwrap().condition;
        assert_eq!(first(0), Condition::Respiration);
        assert_eq!(first(1), Condition::Gaze);
        let mean = |c: Condition, f: fn(&TrialTruth) -> f64| {
            let v: Vec<f64> = trials.iter().filter(|t| t.condition == c).map(f).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean(Condition::Workout, |t| t.hr_bpm) > mean(Condition::Respiration, |t| t.hr_bpm) + 15.0);
        assert!(mean(Condition::Workout, |t| t.rr_brpm) > mean(Condition::Respiration, |t| t.rr_brpm) + 3.0);
        assert!(trials.iter().filter(|t| t.task == HOLD_BREATH_TASK).all(|t| t.chest_amp == 0.0));
        assert!(trials.iter().all(|t| (12.0..=30.0).contains(&t.rr_brpm) && (42.0..=150.0).contains(&t.hr_bpm)));
    }

    #[test]
    fn single_trial_uses_base_rates() {
        let cfg = DatasetConfig {
            protocol: Protocol::single(20.0),
            tones: vec![0.3, 1.0],
            ..DatasetConfig::default()
        };
        let trials = plan(&cfg).unwrap();
        assert_eq!(trials.len(), 2);
        assert!(trials.iter().all(|t| t.hr_bpm == 72.0 && t.rr_brpm == 15.0 && t.task == 1));
        assert_eq!(trials[1].trial_id, "P02/001");
    }

    #[test]
    fn invalid_protocols() {
        let bad = DatasetConfig {
            protocol: Protocol::with_blocks(0, 0),
            ..DatasetConfig::default()
        };
        assert!(plan(&bad).is_err());
        let bad = DatasetConfig {
            protocol: Protocol::single(0.0),
            ..DatasetConfig::default()
        };
        assert!(plan(&bad).is_err());
    }

    #[test]
    fn writes_a_loadable_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = DatasetConfig {
            protocol: Protocol::Blocks {
                respiration_blocks: 1,
                gaze_blocks: 1,
                respiration_trial_s: 12.0,
                gaze_trial_s: 10.0,
            },
            base: SynthConfig {
                width: 48,
                height: 48,
                noise_sigma: 1.0,
                seed: 5,
                ..SynthConfig::default()
            },
            ..DatasetConfig::default()
        };
        let summary = synth_dataset(dir.path(), &cfg).unwrap();
        let manifest = Manifest::load(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(manifest, summary.manifest);
        assert_eq!(manifest.trials.len(), 11);
        for t in &manifest.trials {
            let truth = summary.trials.iter().find(|x| x.trial_id == t.trial_id).unwrap();
            assert_eq!(t.frame_count as f64 / manifest.fps, truth.duration_s);
        }
        let rec = load_physio_csv(&dir.path().join(PHYSIO_FILE)).unwrap();
        assert_eq!(rec.len(), summary.physio_samples);
        let (mut hold_ratio, mut breath_ratio) = (0.0f64, f64::MAX);
        for (k, tr) in summary.trials.iter().enumerate() {
            let at = rec.trigger.iter().position(|&c| c == k as u32 + 1).unwrap();
            assert_eq!(at as f64, tr.start_s * 128.0);
            let seg_len = (tr.duration_s * 128.0) as usize;
            let gcfg = GroundTruthConfig::default();
            let h = gt_hr(&rec.ecg.slice(at..at + seg_len).unwrap(), &gcfg).unwrap();
            assert!((h.per_minute - tr.hr_bpm).abs() <= 1.5, "{} {} vs {}", tr.trial_id, h.per_minute, tr.hr_bpm);
            let r = gt_rr(&rec.resp.slice(at..at + seg_len).unwrap(), &gcfg).unwrap();
            if tr.task == HOLD_BREATH_TASK {
                hold_ratio = hold_ratio.max(r.band_ratio);
            } else {
                breath_ratio = breath_ratio.min(r.band_ratio);
                // 10 s segments hold only three 8 s windows
                let tol = if tr.duration_s >= 12.0 { 1.0 } else { 2.0 };
                assert!((r.per_minute - tr.rr_brpm).abs() <= tol, "{} {} vs {}", tr.trial_id, r.per_minute, tr.rr_brpm);
            }
        }
        assert!(hold_ratio < breath_ratio, "{hold_ratio} {breath_ratio}");
        let first = &manifest.trials[0];
        let clip = read_frame_range(dir.path(), &manifest, first.start_frame, first.frame_count).unwrap();
        assert_eq!(clip.len(), 360);
        let conf = fs::read_to_string(dir.path().join(PIPELINE_CONF_FILE)).unwrap();
        assert!(conf.contains("roi = manual:16,16,16,16"), "{conf}");
        assert_eq!(fs::read_to_string(dir.path().join(TRUTH_FILE)).unwrap().lines().count(), 12);
    }
}
