use anyhow::Result;
use clap::{Args, ValueEnum};
use vitalcam::ingest::Condition;
use vitalcam::synth::{synth_dataset, DatasetConfig, Protocol, SynthConfig};

use super::usage;
use crate::Globals;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolKind {
    /// One normal-breathing trial per participant at exactly --hr/--rr
    Single,
    /// Respiratory part (tasks 1, 2, 7 x 20 s, 5 blocks per condition, normal
    /// and after workout) and gaze part (tasks 3-7 x 10 s, 10 blocks)
    Paper,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = ProtocolKind::Single)]
    protocol: ProtocolKind,
    /// Respiratory blocks per condition (paper protocol) [default: 5]
    #[arg(long, value_name = "N")]
    respiration_blocks: Option<usize>,
    /// Gaze blocks (paper protocol) [default: 10]
    #[arg(long, value_name = "N")]
    gaze_blocks: Option<usize>,
    /// Base heart rate, beats/min
    #[arg(long, default_value_t = SynthConfig::default().hr_bpm)]
    hr: f64,
    /// Base respiration rate, breaths/min
    #[arg(long, default_value_t = SynthConfig::default().rr_brpm)]
    rr: f64,
    /// Trial length for the single protocol, seconds
    #[arg(long, default_value_t = SynthConfig::default().duration)]
    duration: f64,
    #[arg(long, default_value_t = SynthConfig::default().width)]
    width: usize,
    #[arg(long, default_value_t = SynthConfig::default().height)]
    height: usize,
    #[arg(long, default_value_t = SynthConfig::default().fps)]
    fps: f64,
    /// Skin brightness multiplier in (0, 1]
    #[arg(long, default_value_t = SynthConfig::default().tone)]
    tone: f64,
    /// One participant per tone, comma separated (overrides --tone)
    #[arg(long, value_delimiter = ',', value_name = "T1,T2,...")]
    tones: Vec<f64>,
    /// Relative red-channel pulse modulation
    #[arg(long, default_value_t = SynthConfig::default().pulse_amp)]
    pulse_amp: f64,
    /// Chest edge excursion, pixels
    #[arg(long, default_value_t = SynthConfig::default().chest_amp)]
    chest_amp: f64,
    /// Additive Gaussian pixel noise, gray levels
    #[arg(long, default_value_t = SynthConfig::default().noise_sigma)]
    noise: f64,
    /// Keep unquantized values before the 8-bit write (rounding still happens on disk)
    #[arg(long)]
    no_quantize: bool,
    /// Box blur radius, pixels (compression proxy)
    #[arg(long, default_value_t = SynthConfig::default().blur_radius)]
    blur: usize,
}

pub fn run(g: &Globals, a: SynthArgs) -> Result<()> {
    let out = g.out.clone().ok_or_else(|| usage("synth needs --out DIR"))?;
    let protocol = match a.protocol {
        ProtocolKind::Single => {
            if a.respiration_blocks.is_some() || a.gaze_blocks.is_some() {
                return Err(usage("--respiration-blocks/--gaze-blocks need --protocol paper"));
            }
            Protocol::single(a.duration)
        }
        ProtocolKind::Paper => Protocol::with_blocks(a.respiration_blocks.unwrap_or(5), a.gaze_blocks.unwrap_or(10)),
    };
    let base = SynthConfig {
        width: a.width,
        height: a.height,
        fps: a.fps,
        duration: a.duration,
        hr_bpm: a.hr,
        rr_brpm: a.rr,
        tone: a.tone,
        pulse_amp: a.pulse_amp,
        chest_amp: a.chest_amp,
        noise_sigma: a.noise,
        quantize: !a.no_quantize,
        blur_radius: a.blur,
        seed: g.seed,
        start_time: 0.0,
    };
    base.validate().map_err(|e| usage(e.to_string()))?;
    if let Some(t) = a.tones.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(usage(format!("--tones: {t} outside (0, 1]")));
    }
    let cfg = DatasetConfig {
        protocol,
        base,
        tones: a.tones,
        ..DatasetConfig::default()
    };
    let summary = synth_dataset(&out, &cfg)?;

    println!(
        "wrote {} trials ({} frames, {} physio samples) to {}",
        summary.trials.len(),
        summary.manifest.frames,
        summary.physio_samples,
        out.display()
    );
    let (n, s) = summary.totals(&[Condition::Respiration, Condition::Workout]);
    println!("respiratory part: {n} trials, {s} s");
    let (n, s) = summary.totals(&[Condition::Gaze]);
    println!("gaze part: {n} trials, {s} s");
    println!("trial_id\tcondition\ttask\thr_bpm\trr_brpm\ttone\tface_gray");
    for t in &summary.trials {
        println!(
            "{}\t{}\t{}\t{:.2}\t{:.2}\t{}\t{:.2}",
            t.trial_id, t.condition, t.task, t.hr_bpm, t.rr_brpm, t.tone, t.mean_face_gray
        );
    }
    Ok(())
}
