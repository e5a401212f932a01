//! Static SVG 1.1 figures. All coordinates are printed with fixed
//! precision so identical input gives identical bytes.

use std::fmt::Write as _;

use super::report::{ConditionSummary, Regression};
use crate::dsp::TimeSeries;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

pub(crate) fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Ticks at 1, 2 or 5 times a power of ten covering [lo, hi].
fn ticks(lo: f64, hi: f64) -> (f64, f64, Vec<f64>, usize) {
    let (lo, hi) = if hi - lo > 1e-12 { (lo, hi) } else { (lo - 1.0, hi + 1.0) };
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).floor() as i64;
    let last = (hi / step).ceil() as i64;
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let t = (first..=last).map(|k| k as f64 * step).collect();
    (first as f64 * step, last as f64 * step, t, decimals)
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(title));
}

fn y_axis(out: &mut String, fr: &Frame, ticks: &[f64], decimals: usize, label: &str) {
    let _ = writeln!(out, r#"<g class="y-axis" stroke="black">"#);
    let _ = writeln!(out, r#"<line x1="{LEFT:.2}" y1="{TOP:.2}" x2="{LEFT:.2}" y2="{:.2}"/>"#, H - BOTTOM);
    for &t in ticks {
        let y = fr.py(t);
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT:.2}" y2="{y:.2}"/>"#, LEFT - 5.0);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" stroke="none">{:.*}</text>"#,
            LEFT - 8.0,
            y + 4.0,
            decimals,
            t
        );
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (TOP + H - BOTTOM) / 2.0,
        (TOP + H - BOTTOM) / 2.0,
        escape(label)
    );
}

fn x_label(out: &mut String, label: &str) {
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 15.0,
        escape(label)
    );
}

pub(crate) fn boxplot(title: &str, y_label: &str, groups: &[ConditionSummary]) -> String {
    let values: Vec<f64> = groups
        .iter()
        .filter_map(|g| g.stats.as_ref())
        .flat_map(|s| [s.whisker_lo, s.whisker_hi].into_iter().chain(s.outliers.iter().copied()))
        .collect();
    let lo = values.iter().copied().fold(0.0f64, f64::min);
    let hi = values.iter().copied().fold(lo + 1.0, f64::max);
    let (y0, y1, yt, dec) = ticks(lo, hi);
    let fr = Frame { x0: 0.0, x1: groups.len().max(1) as f64, y0, y1 };

    let mut out = String::new();
    header(&mut out, title);
    y_axis(&mut out, &fr, &yt, dec, y_label);
    let _ = writeln!(out, r#"<line x1="{LEFT:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#, H - BOTTOM, W - RIGHT, H - BOTTOM);
    let half = 0.2 * (fr.px(1.0) - fr.px(0.0));
    for (i, g) in groups.iter().enumerate() {
        let cx = fr.px(i as f64 + 0.5);
        let _ = writeln!(
            out,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{} (n={})</text>"#,
            H - BOTTOM + 18.0,
            g.condition,
            g.participants.len()
        );
        let Some(s) = &g.stats else { continue };
        let _ = writeln!(out, r#"<g class="box" data-condition="{}" data-median="{}" stroke="black" fill="none">"#, g.condition, s.median);
        let _ = writeln!(out, r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}"/>"#, fr.py(s.whisker_lo), fr.py(s.q1));
        let _ = writeln!(out, r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}"/>"#, fr.py(s.q3), fr.py(s.whisker_hi));
        for w in [s.whisker_lo, s.whisker_hi] {
            let _ = writeln!(out, r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#, cx - half / 2.0, fr.py(w), cx + half / 2.0, fr.py(w));
        }
        let _ = writeln!(
            out,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#9ecae1"/>"##,
            cx - half,
            fr.py(s.q3),
            2.0 * half,
            fr.py(s.q1) - fr.py(s.q3)
        );
        let _ = writeln!(
            out,
            r##"<line class="median" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#d62728" stroke-width="2"/>"##,
            cx - half,
            fr.py(s.median),
            cx + half,
            fr.py(s.median)
        );
        for o in &s.outliers {
            let _ = writeln!(out, r#"<circle class="outlier" cx="{cx:.2}" cy="{:.2}" r="3"/>"#, fr.py(*o));
        }
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    out
}

pub(crate) fn scatter(reg: &Regression) -> String {
    let xs: Vec<f64> = reg.points.iter().map(|p| p.1).collect();
    let ys: Vec<f64> = reg.points.iter().map(|p| p.2).collect();
    let min = |v: &[f64], d: f64| v.iter().copied().fold(f64::INFINITY, f64::min).min(d);
    let max = |v: &[f64], d: f64| v.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(d);
    let (x0, x1, xt, xd) = if xs.is_empty() { ticks(0.0, 255.0) } else { ticks(min(&xs, f64::INFINITY), max(&xs, f64::NEG_INFINITY)) };

    let mut band = Vec::new();
    if let Some(fit) = &reg.fit {
        let steps = 40;
        for k in 0..=steps {
            let x = x0 + (x1 - x0) * k as f64 / steps as f64;
            band.push((x, fit.predict(x) - fit.mean_ci95(x), fit.predict(x) + fit.mean_ci95(x)));
        }
    }
    let lo = min(&ys, band.iter().map(|b| b.1).fold(0.0, f64::min));
    let hi = max(&ys, band.iter().map(|b| b.2).fold(lo + 1e-3, f64::max));
    let (y0, y1, yt, yd) = ticks(lo, hi);
    let fr = Frame { x0, x1, y0, y1 };

    let mut out = String::new();
    header(&mut out, "HR error versus skin grayscale");
    y_axis(&mut out, &fr, &yt, yd, "HR RMSE (bpm)");
    let _ = writeln!(out, r#"<g class="x-axis" stroke="black">"#);
    let _ = writeln!(out, r#"<line x1="{LEFT:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#, H - BOTTOM, W - RIGHT, H - BOTTOM);
    for &t in &xt {
        let x = fr.px(t);
        let _ = writeln!(out, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}"/>"#, H - BOTTOM, H - BOTTOM + 5.0);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" stroke="none">{:.*}</text>"#, H - BOTTOM + 18.0, xd, t);
    }
    let _ = writeln!(out, "</g>");
    x_label(&mut out, "face grayscale (0-255)");

    if let Some(fit) = &reg.fit {
        let mut d = String::new();
        for (i, (x, _, top)) in band.iter().enumerate() {
            let _ = write!(d, "{}{:.2},{:.2} ", if i == 0 { "M" } else { "L" }, fr.px(*x), fr.py(*top));
        }
        for (x, bot, _) in band.iter().rev() {
            let _ = write!(d, "L{:.2},{:.2} ", fr.px(*x), fr.py(*bot));
        }
        d.push('Z');
        let _ = writeln!(out, r##"<path class="ci-band" d="{d}" fill="#d62728" fill-opacity="0.15" stroke="none"/>"##);
        let _ = writeln!(
            out,
            r##"<line class="fit-line" data-slope="{}" data-intercept="{}" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#d62728" stroke-width="2"/>"##,
            fit.slope,
            fit.intercept,
            fr.px(x0),
            fr.py(fit.predict(x0)),
            fr.px(x1),
            fr.py(fit.predict(x1))
        );
    }
    for (id, x, y) in &reg.points {
        let _ = writeln!(
            out,
            r##"<circle class="point" data-participant="{}" cx="{:.2}" cy="{:.2}" r="4" fill="#1f77b4"/>"##,
            escape(id),
            fr.px(*x),
            fr.py(*y)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Raw trace above, band-passed trace below, sharing the time axis.
pub(crate) fn signal(title: &str, raw: &TimeSeries, filtered: &TimeSeries) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let panel_h = (H - TOP - BOTTOM - 20.0) / 2.0;
    for (k, (name, ts)) in [("raw", raw), ("filtered", filtered)].into_iter().enumerate() {
        let top = TOP + k as f64 * (panel_h + 20.0);
        let s = ts.samples();
        let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi - lo > 0.0 { hi - lo } else { 1.0 };
        let n = s.len().max(2) as f64 - 1.0;
        let mut pts = String::new();
        for (i, v) in s.iter().enumerate() {
            let x = LEFT + i as f64 / n * (W - LEFT - RIGHT);
            let y = top + panel_h - (v - lo) / span * panel_h;
            let _ = write!(pts, "{x:.2},{y:.2} ");
        }
        let _ = writeln!(out, r#"<rect x="{LEFT:.2}" y="{top:.2}" width="{:.2}" height="{panel_h:.2}" fill="none" stroke="gray"/>"#, W - LEFT - RIGHT);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{name}</text>"#, LEFT + 4.0, top + 14.0);
        let _ = writeln!(out, r##"<polyline class="{name}" points="{}" fill="none" stroke="#1f77b4"/>"##, pts.trim_end());
    }
    x_label(&mut out, &format!("time (s), {:.1} s at {} Hz", raw.duration(), raw.sample_rate()));
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_steps() {
        let (lo, hi, t, d) = ticks(0.0, 4.3);
        assert_eq!((lo, hi, d), (0.0, 5.0, 0));
        assert_eq!(t, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let (_, _, t, d) = ticks(0.01, 0.04);
        assert_eq!(d, 2);
        assert!(t.len() >= 4);
        let (lo, hi, _, _) = ticks(3.0, 3.0);
        assert!(lo < 3.0 && hi > 3.0);
    }

    #[test]
    fn escaping() {
        assert_eq!(escape("a<b>&\"c\""), "a&lt;b&gt;&amp;&quot;c&quot;");
    }
}
