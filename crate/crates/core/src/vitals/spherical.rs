//! Spherical-mean pulse feature.
//!
//! Each ROI pixel is reduced to its RGB direction, so brightness drops out
//! and only chromaticity survives. The per-frame mean directions trace a
//! small path on the unit sphere; it is flattened onto the tangent plane at
//! the temporal mean direction and projected onto its main axis.

use crate::dsp::TimeSeries;
use crate::error::{Error, Result};
use crate::ingest::{Channel, Rect, VideoClip};

type V3 = [f64; 3];

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: V3, k: f64) -> V3 {
    [a[0] * k, a[1] * k, a[2] * k]
}

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(a: V3) -> V3 {
    scale(a, 1.0 / norm(a))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseTrace {
    /// Per-frame mean RGB direction, unit length.
    pub unit_means: Vec<V3>,
    pub scalar: TimeSeries,
}

pub(crate) fn check_rois<T: Channel>(clip: &VideoClip<T>, rois: &[Rect]) -> Result<()> {
    if rois.len() != clip.len() {
        return Err(Error::invalid(format!(
            "{} ROIs for {} frames",
            rois.len(),
            clip.len()
        )));
    }
    if let Some((i, r)) = rois
        .iter()
        .enumerate()
        .find(|(_, r)| r.is_empty() || !r.fits_in(clip.width(), clip.height()))
    {
        return Err(Error::invalid(format!(
            "ROI {r:?} of frame {i} is empty or outside the {}x{} frame",
            clip.width(),
            clip.height()
        )));
    }
    Ok(())
}

/// Normalized mean of the unit RGB vectors of the non-black pixels in `roi`.
fn frame_direction<T: Channel>(frame: &crate::ingest::RgbFrame<T>, roi: Rect, index: usize) -> Result<V3> {
    let mut acc = [0.0; 3];
    let mut any = false;
    for p in frame.pixels_in(roi) {
        let v = [p[0].to_f64(), p[1].to_f64(), p[2].to_f64()];
        let n = norm(v);
        if n > 0.0 {
            any = true;
            acc = [acc[0] + v[0] / n, acc[1] + v[1] / n, acc[2] + v[2] / n];
        }
    }
    if !any {
        return Err(Error::invalid(format!("ROI of frame {index} is entirely black")));
    }
    Ok(normalize(acc))
}

/// Orthonormal basis of the plane perpendicular to `mu`.
fn tangent_basis(mu: V3) -> (V3, V3) {
    // cross with the axis least aligned with mu
    let k = (0..3)
        .min_by(|&a, &b| mu[a].abs().total_cmp(&mu[b].abs()))
        .unwrap();
    let mut axis = [0.0; 3];
    axis[k] = 1.0;
    let e1 = normalize(cross(mu, axis));
    let e2 = cross(mu, e1);
    (e1, e2)
}

/// Sphere logarithm map at `mu`: the tangent vector pointing to `m` whose
/// length is the great-circle distance.
fn log_map(mu: V3, m: V3) -> V3 {
    let c = dot(mu, m).clamp(-1.0, 1.0);
    let v = sub(m, scale(mu, c));
    let nv = norm(v);
    if nv < 1e-15 {
        [0.0; 3]
    } else {
        scale(v, c.acos() / nv)
    }
}

pub fn spherical_mean_trace<T: Channel>(clip: &VideoClip<T>, rois: &[Rect]) -> Result<PulseTrace> {
    check_rois(clip, rois)?;
    let unit_means = clip
        .frames()
        .iter()
        .zip(rois)
        .enumerate()
        .map(|(i, (f, r))| frame_direction(f, *r, i))
        .collect::<Result<Vec<_>>>()?;

    let n = unit_means.len() as f64;
    let sum = unit_means.iter().fold([0.0; 3], |a, m| [a[0] + m[0], a[1] + m[1], a[2] + m[2]]);
    let mu = normalize(sum);
    let (e1, e2) = tangent_basis(mu);
    let coords: Vec<[f64; 2]> = unit_means
        .iter()
        .map(|&m| {
            let v = log_map(mu, m);
            [dot(v, e1), dot(v, e2)]
        })
        .collect();

    let mean = coords.iter().fold([0.0; 2], |a, c| [a[0] + c[0] / n, a[1] + c[1] / n]);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for c in &coords {
        let (dx, dy) = (c[0] - mean[0], c[1] - mean[1]);
        sxx += dx * dx / n;
        sxy += dx * dy / n;
        syy += dy * dy / n;
    }

    let samples = if sxx + syy < 1e-20 {
        vec![0.0; coords.len()]
    } else {
        // leading eigenvector of [[sxx, sxy], [sxy, syy]]
        let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
        let (ux, uy) = (theta.cos(), theta.sin());
        let mut s: Vec<f64> = coords
            .iter()
            .map(|c| (c[0] - mean[0]) * ux + (c[1] - mean[1]) * uy)
            .collect();
        let peak = s.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if let Some(first) = s.iter().find(|v| v.abs() > 1e-9 * peak) {
            if *first < 0.0 {
                s.iter_mut().for_each(|v| *v = -*v);
            }
        }
        s
    };
    Ok(PulseTrace {
        unit_means,
        scalar: TimeSeries::new(samples, clip.fps())?,
    })
}

/// Per-frame mean of `G / (R + G + B)` over non-black pixels.
pub fn green_chromaticity_trace<T: Channel>(clip: &VideoClip<T>, rois: &[Rect]) -> Result<TimeSeries> {
    check_rois(clip, rois)?;
    let samples = clip
        .frames()
        .iter()
        .zip(rois)
        .enumerate()
        .map(|(i, (f, r))| {
            let (mut acc, mut count) = (0.0, 0usize);
            for p in f.pixels_in(*r) {
                let total = p[0].to_f64() + p[1].to_f64() + p[2].to_f64();
                if total > 0.0 {
                    acc += p[1].to_f64() / total;
                    count += 1;
                }
            }
            if count == 0 {
                return Err(Error::invalid(format!("ROI of frame {i} is entirely black")));
            }
            Ok(acc / count as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    TimeSeries::new(samples, clip.fps())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::RgbFrame;
    use std::f64::consts::PI;

    fn modulated(n: usize, f: f64, amp: f64, gain: impl Fn(usize) -> f64) -> VideoClip<f32> {
        let frames = (0..n)
            .map(|i| {
                let t = i as f64 / 30.0;
                let k = gain(i);
                let r = 180.0 * (1.0 + amp * (2.0 * PI * f * t).sin());
                let mut fr = RgbFrame::filled(6, 6, [(r * k) as f32, (120.0 * k) as f32, (100.0 * k) as f32]).unwrap();
                // one black pixel that must be skipped
                fr.set_pixel(0, 0, [0.0, 0.0, 0.0]);
                fr
            })
            .collect();
        VideoClip::new(frames, 30.0).unwrap()
    }

    #[test]
    fn constant_clip_is_all_zero() {
        let clip = VideoClip::new(vec![RgbFrame::filled(4, 4, [200u8, 150, 130]).unwrap(); 40], 30.0).unwrap();
        let tr = spherical_mean_trace(&clip, &vec![Rect::new(0, 0, 4, 4); 40]).unwrap();
        assert!(tr.scalar.samples().iter().all(|&v| v == 0.0));
        assert!(tr.unit_means.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn unit_means_are_unit() {
        let clip = modulated(50, 1.2, 0.05, |_| 1.0);
        let tr = spherical_mean_trace(&clip, &vec![Rect::new(0, 0, 6, 6); 50]).unwrap();
        assert!(tr.unit_means.iter().all(|m| (norm(*m) - 1.0).abs() < 1e-9));
        assert_eq!(tr.scalar.len(), 50);
    }

    #[test]
    fn follows_the_modulation() {
        let clip = modulated(120, 1.0, 0.05, |_| 1.0);
        let tr = spherical_mean_trace(&clip, &vec![Rect::new(0, 0, 6, 6); 120]).unwrap();
        let s = tr.scalar.samples();
        let r: Vec<f64> = (0..120).map(|i| (2.0 * PI * i as f64 / 30.0).sin()).collect();
        let corr = s.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>()
            / (s.iter().map(|a| a * a).sum::<f64>() * r.iter().map(|b| b * b).sum::<f64>()).sqrt();
        assert!(corr.abs() > 0.999, "{corr}");
    }

    #[test]
    fn intensity_scaling_cancels() {
        let a = modulated(90, 1.3, 0.02, |_| 1.0);
        let b = modulated(90, 1.3, 0.02, |i| 0.4 + 0.01 * i as f64);
        let rois = vec![Rect::new(0, 0, 6, 6); 90];
        let sa = spherical_mean_trace(&a, &rois).unwrap().scalar;
        let sb = spherical_mean_trace(&b, &rois).unwrap().scalar;
        let rms = (sa.samples().iter().zip(sb.samples()).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / 90.0).sqrt();
        assert!(rms < 1e-6, "{rms}");
    }

    #[test]
    fn black_roi_and_bad_rois() {
        let clip = VideoClip::new(vec![RgbFrame::filled(4, 4, [0u8, 0, 0]).unwrap(); 3], 30.0).unwrap();
        assert!(spherical_mean_trace(&clip, &[Rect::new(0, 0, 2, 2); 3]).is_err());
        assert!(green_chromaticity_trace(&clip, &[Rect::new(0, 0, 2, 2); 3]).is_err());
        let lit = VideoClip::new(vec![RgbFrame::filled(4, 4, [9u8, 9, 9]).unwrap(); 3], 30.0).unwrap();
        assert!(spherical_mean_trace(&lit, &[Rect::new(0, 0, 2, 2); 2]).is_err());
        assert!(spherical_mean_trace(&lit, &[Rect::new(3, 3, 2, 2); 3]).is_err());
    }

    #[test]
    fn green_chromaticity_value() {
        let clip = VideoClip::new(vec![RgbFrame::filled(2, 2, [10u8, 30, 60]).unwrap(); 2], 30.0).unwrap();
        let g = green_chromaticity_trace(&clip, &[Rect::new(0, 0, 2, 2); 2]).unwrap();
        assert!((g.samples()[0] - 0.3).abs() < 1e-12);
    }
}
