//! Binary P6 frames with maxval 255.

use std::fs;
use std::path::Path;

use super::{frame_file_name, Manifest, RgbFrame, VideoClip};
use crate::error::{Error, Result};

/// Decodes a P6 image. `origin` is only used in error messages.
pub fn decode_ppm(bytes: &[u8], origin: &Path) -> Result<RgbFrame> {
    let mut pos = 0;
    let magic = next_token(bytes, &mut pos).ok_or_else(|| Error::format(origin, "empty file"))?;
    if magic != b"P6" {
        return Err(Error::format(
            origin,
            format!("expected P6 magic, found {:?}", String::from_utf8_lossy(magic)),
        ));
    }
    let mut header = [0usize; 3];
    for (slot, name) in header.iter_mut().zip(["width", "height", "maxval"]) {
        let tok = next_token(bytes, &mut pos)
            .ok_or_else(|| Error::format(origin, format!("truncated header, missing {name}")))?;
        *slot = std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(origin, format!("bad {name} {:?}", String::from_utf8_lossy(tok))))?;
    }
    let [width, height, maxval] = header;
    if maxval != 255 {
        return Err(Error::format(origin, format!("maxval {maxval} is not 255")));
    }
    if width == 0 || height == 0 {
        return Err(Error::format(origin, "zero image dimension"));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::format(origin, "missing raster after header"));
    }
    pos += 1;
    let need = width * height * 3;
    let raster = &bytes[pos..];
    if raster.len() != need {
        return Err(Error::format(
            origin,
            format!("{width}x{height} raster needs {need} bytes, found {}", raster.len()),
        ));
    }
    RgbFrame::new(width, height, raster.to_vec())
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    (*pos > start).then(|| &bytes[start..*pos])
}

pub fn encode_ppm(frame: &RgbFrame) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.extend_from_slice(frame.data());
    out
}

pub fn read_ppm(path: &Path) -> Result<RgbFrame> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_ppm(&bytes, path)
}

pub fn write_ppm(path: &Path, frame: &RgbFrame) -> Result<()> {
    fs::write(path, encode_ppm(frame)).map_err(|e| Error::io(path, e))
}

/// Reads `count` frames starting at global index `start` from the dataset
/// directory, checking each against the manifest dimensions.
pub fn read_frame_range(dir: &Path, manifest: &Manifest, start: usize, count: usize) -> Result<VideoClip> {
    let frames = (start..start + count)
        .map(|i| {
            let path = dir.join(frame_file_name(i));
            let frame = read_ppm(&path)?;
            if frame.width() != manifest.width || frame.height() != manifest.height {
                return Err(Error::DimensionMismatch {
                    path,
                    width: manifest.width,
                    height: manifest.height,
                    found_width: frame.width(),
                    found_height: frame.height(),
                });
            }
            Ok(frame)
        })
        .collect::<Result<Vec<_>>>()?;
    VideoClip::new(frames, manifest.fps)
}

/// Loads every frame the manifest declares, in index order.
pub fn read_ppm_sequence(manifest_path: &Path) -> Result<VideoClip> {
    let manifest = Manifest::load(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    read_frame_range(dir, &manifest, 0, manifest.frames)
}
