use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use vitalcam::detect::convert_opencv_xml;

use crate::Globals;

#[derive(Args, Debug)]
pub struct ConvertArgs {
    /// OpenCV haarcascade XML (upright stump features only)
    xml: PathBuf,
}

/// Writes to `--out` if given, stdout otherwise.
pub fn run(g: &Globals, a: ConvertArgs) -> Result<()> {
    let text = fs::read_to_string(&a.xml).with_context(|| format!("reading {}", a.xml.display()))?;
    let cascade = convert_opencv_xml(&text).with_context(|| a.xml.display().to_string())?;
    match &g.out {
        Some(p) => {
            cascade.save(p)?;
            eprintln!("{} stages written to {}", cascade.stages.len(), p.display());
        }
        None => print!("{}", cascade.to_json()),
    }
    Ok(())
}
