//! Minimal static SVG charts for figure data.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::{Error, Result};

const W: f64 = 720.0;
const H: f64 = 360.0;
const PAD: f64 = 48.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn frame(title: &str, y_min: f64, y_max: f64, body: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<path d="M{PAD} {PAD} V{} H{}" stroke="black" fill="none"/>"#,
        H - PAD,
        W - PAD / 2.0
    );
    for (v, y) in [(y_max, PAD), (y_min, H - PAD)] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="end">{v:.3}</text>"#,
            PAD - 4.0,
            y + 3.0
        );
    }
    s.push_str(body);
    s.push_str("</svg>\n");
    s
}

fn y_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Line chart of one or more named series over shared x labels.
pub fn line_chart(title: &str, x_labels: &[String], series: &[(&str, Vec<f64>)]) -> String {
    let (lo, hi) = y_range(series.iter().flat_map(|(_, v)| v.iter().copied()));
    let n = x_labels.len().max(2) as f64 - 1.0;
    let x = |i: usize| PAD + (W - 1.5 * PAD) * i as f64 / n;
    let y = |v: f64| H - PAD - (H - 2.0 * PAD) * (v - lo) / (hi - lo);
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    let mut body = String::new();
    for (k, (name, values)) in series.iter().enumerate() {
        let pts: Vec<String> = values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(i, v)| format!("{:.1},{:.1}", x(i), y(*v)))
            .collect();
        let color = colors[k % colors.len()];
        let _ = writeln!(
            body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            body,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            W - PAD * 3.0,
            PAD + 14.0 * k as f64,
            escape(name)
        );
    }
    let step = (x_labels.len() / 8).max(1);
    for (i, l) in x_labels.iter().enumerate().step_by(step) {
        let _ = writeln!(
            body,
            r#"<text x="{:.1}" y="{}" font-family="sans-serif" font-size="9" text-anchor="middle">{}</text>"#,
            x(i),
            H - PAD + 14.0,
            escape(l)
        );
    }
    frame(title, lo, hi, &body)
}

/// Grouped bar chart: each category gets one bar per series.
pub fn bar_chart(title: &str, categories: &[String], series: &[(&str, Vec<f64>)]) -> String {
    let (_, hi) = y_range(
        series
            .iter()
            .flat_map(|(_, v)| v.iter().copied())
            .chain([0.0]),
    );
    let lo = 0.0;
    let slot = (W - 1.5 * PAD) / categories.len().max(1) as f64;
    let bar = slot * 0.8 / series.len().max(1) as f64;
    let y = |v: f64| H - PAD - (H - 2.0 * PAD) * (v - lo) / (hi - lo);
    let colors = ["#1f77b4", "#ff7f0e", "#2ca02c"];
    let mut body = String::new();
    for (k, (name, values)) in series.iter().enumerate() {
        let color = colors[k % colors.len()];
        for (i, v) in values.iter().enumerate() {
            let x0 = PAD + slot * i as f64 + slot * 0.1 + bar * k as f64;
            let top = y(v.max(0.0));
            let _ = writeln!(
                body,
                r#"<rect x="{x0:.1}" y="{top:.1}" width="{bar:.1}" height="{:.1}" fill="{color}"/>"#,
                (H - PAD - top).max(0.0)
            );
        }
        let _ = writeln!(
            body,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            W - PAD * 3.0,
            PAD + 14.0 * k as f64,
            escape(name)
        );
    }
    for (i, c) in categories.iter().enumerate() {
        let _ = writeln!(
            body,
            r#"<text x="{:.1}" y="{}" font-family="sans-serif" font-size="9" text-anchor="middle">{}</text>"#,
            PAD + slot * (i as f64 + 0.5),
            H - PAD + 14.0,
            escape(c)
        );
    }
    frame(title, lo, hi, &body)
}

pub fn write(path: &Path, svg: &str) -> Result<()> {
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_well_formed() {
        let labels: Vec<String> = (0..5).map(|i| format!("d{i}")).collect();
        let svg = line_chart(
            "a < b",
            &labels,
            &[("s", vec![1.0, 2.0, f64::NAN, 3.0, 1.0])],
        );
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a &lt; b"));
        let svg = bar_chart("t", &labels, &[("x", vec![0.0; 5]), ("y", vec![1.0; 5])]);
        assert_eq!(svg.matches("<rect x=").count(), 10);
    }
}
