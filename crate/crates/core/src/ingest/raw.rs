//! Headerless packed RGB24 video.

use std::fs;
use std::path::Path;

use super::{RgbFrame, VideoClip};
use crate::error::{Error, Result};

pub fn read_raw_rgb(path: &Path, width: usize, height: usize, fps: f64) -> Result<VideoClip> {
    if width == 0 || height == 0 {
        return Err(Error::invalid("raw RGB dimensions must be non-zero"));
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let frame_len = width * height * 3;
    if bytes.is_empty() || bytes.len() % frame_len != 0 {
        return Err(Error::format(
            path,
            format!("{} bytes is not a whole number of {width}x{height} RGB frames", bytes.len()),
        ));
    }
    let frames = bytes
        .chunks_exact(frame_len)
        .map(|chunk| RgbFrame::new(width, height, chunk.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    VideoClip::new(frames, fps)
}

pub fn write_raw_rgb(path: &Path, clip: &VideoClip) -> Result<()> {
    let bytes: Vec<u8> = clip.frames().iter().flat_map(|f| f.data().iter().copied()).collect();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_frame() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.rgb");
        fs::write(&path, [0u8; 12]).unwrap();
        let clip = read_raw_rgb(&path, 2, 2, 30.0).unwrap();
        assert_eq!(clip.len(), 1);
        assert!(clip.frames()[0].data().iter().all(|&v| v == 0));
    }

    #[test]
    fn frame_count_from_size() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.rgb");
        fs::write(&path, [7u8; 24]).unwrap();
        assert_eq!(read_raw_rgb(&path, 2, 2, 30.0).unwrap().len(), 2);
    }

    #[test]
    fn partial_frame_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.rgb");
        fs::write(&path, [0u8; 13]).unwrap();
        assert!(read_raw_rgb(&path, 2, 2, 30.0).is_err());
        assert!(read_raw_rgb(&path, 0, 2, 30.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn write_then_read_is_identity(w in 1usize..6, h in 1usize..6, n in 1usize..4, seed in any::<u8>()) {
            let frames: Vec<RgbFrame> = (0..n)
                .map(|k| {
                    let data = (0..w * h * 3).map(|i| (i as u8).wrapping_mul(31).wrapping_add(seed).wrapping_add(k as u8)).collect();
                    RgbFrame::new(w, h, data).unwrap()
                })
                .collect();
            let clip = VideoClip::new(frames, 30.0).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("clip.rgb");
            write_raw_rgb(&path, &clip).unwrap();
            prop_assert_eq!(read_raw_rgb(&path, w, h, 30.0).unwrap(), clip);
        }
    }
}
