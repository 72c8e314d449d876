//! Deterministic SVG 1.1 charts. Fixed canvas, fixed fonts, fixed number
//! formatting, so identical input yields identical bytes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analysis::AnalysisResult;
use crate::doe::{ParetoReport, VITAL_FEW_LINE};
use crate::error::{Error, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 70.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub value: f64,
    pub label: String,
}

impl Threshold {
    pub fn new(value: f64, label: impl Into<String>) -> Self {
        Threshold {
            value,
            label: label.into(),
        }
    }
}

/// Everything a chart shows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub bars: Vec<(String, f64)>,
    /// One value per bar (Pareto) or per sample (curve).
    pub line: Vec<f64>,
    pub thresholds: Vec<Threshold>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, spec: &ChartSpec) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="DejaVu Sans, sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="28" text-anchor="middle" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(&spec.title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
        HEIGHT - 15.0,
        escape(&spec.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + (HEIGHT - TOP - BOTTOM) / 2.0,
        TOP + (HEIGHT - TOP - BOTTOM) / 2.0,
        escape(&spec.y_label)
    );
}

fn axes(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<path d="M{LEFT:.2} {TOP:.2} V{:.2} H{:.2}" fill="none" stroke="black"/>"#,
        HEIGHT - BOTTOM,
        WIDTH - RIGHT
    );
}

/// Pareto chart: percentage bars, cumulative line on a right axis, 80% line.
pub fn pareto_chart(report: &ParetoReport) -> ChartSpec {
    ChartSpec {
        title: "Pareto chart of coefficients".into(),
        x_label: "Term".into(),
        y_label: "Contribution (%)".into(),
        bars: report.entries.iter().map(|e| (e.term.to_string(), e.percent)).collect(),
        line: report.entries.iter().map(|e| e.cumulative).collect(),
        thresholds: vec![Threshold::new(VITAL_FEW_LINE, "80%")],
    }
}

pub fn pareto_svg(report: &ParetoReport) -> Result<String> {
    if report.entries.is_empty() {
        return Err(Error::EmptyPareto);
    }
    let spec = pareto_chart(report);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let y = |pct: f64| TOP + plot_h * (1.0 - pct / 100.0);
    let slot = plot_w / spec.bars.len() as f64;

    let mut out = String::new();
    header(&mut out, &spec);
    for tick in (0..=100).step_by(20) {
        let yy = y(tick as f64);
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT:.2}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#dddddd"/>"##,
            WIDTH - RIGHT
        );
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{tick}</text>"#, LEFT - 6.0, yy + 4.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{tick}%</text>"#, WIDTH - RIGHT + 6.0, yy + 4.0);
    }
    axes(&mut out);
    let _ = writeln!(
        out,
        r#"<line x1="{0:.2}" y1="{TOP:.2}" x2="{0:.2}" y2="{1:.2}" stroke="black"/>"#,
        WIDTH - RIGHT,
        HEIGHT - BOTTOM
    );
    for (i, (label, pct)) in spec.bars.iter().enumerate() {
        let x = LEFT + slot * i as f64 + slot * 0.15;
        let w = slot * 0.7;
        let top = y(*pct);
        let _ = writeln!(
            out,
            r##"<rect class="bar" data-term="{label}" x="{x:.2}" y="{top:.2}" width="{w:.2}" height="{:.2}" fill="#4a78b5"/>"##,
            HEIGHT - BOTTOM - top
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{pct:.2}%</text>"#,
            x + w / 2.0,
            top - 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
            x + w / 2.0,
            HEIGHT - BOTTOM + 18.0
        );
    }
    let points: Vec<String> = spec
        .line
        .iter()
        .enumerate()
        .map(|(i, c)| format!("{:.2},{:.2}", LEFT + slot * (i as f64 + 0.5), y(*c)))
        .collect();
    let _ = writeln!(
        out,
        r##"<polyline class="cumulative" points="{}" fill="none" stroke="#d04a02" stroke-width="2"/>"##,
        points.join(" ")
    );
    for p in &points {
        let (px, py) = p.split_once(',').expect("formatted above");
        let _ = writeln!(out, r##"<circle cx="{px}" cy="{py}" r="3" fill="#d04a02"/>"##);
    }
    for t in &spec.thresholds {
        let yy = y(t.value);
        let _ = writeln!(
            out,
            r##"<line class="threshold" x1="{LEFT:.2}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#888888" stroke-dasharray="6 4"/>"##,
            WIDTH - RIGHT
        );
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, LEFT + 4.0, yy - 4.0, escape(&t.label));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn nice_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1000.0 || v.abs() < 0.01 {
        format!("{v:.2e}")
    } else {
        format!("{v:.4}")
    }
}

/// Line plot of a per-sample statistic with horizontal threshold lines.
pub fn curve_svg(result: &AnalysisResult, thresholds: &[Threshold]) -> Result<String> {
    let curve = result.curve()?;
    let spec = ChartSpec {
        title: format!("{:?} per sample", result.metric_id),
        x_label: "Sample".into(),
        y_label: format!("{:?}", result.metric_id),
        bars: Vec::new(),
        line: curve.to_vec(),
        thresholds: thresholds.to_vec(),
    };
    let values = spec.line.iter().chain(spec.thresholds.iter().map(|t| &t.value));
    let (mut lo, mut hi) = values.fold((0.0f64, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi - lo <= 0.0 {
        lo -= 1.0;
        hi += 1.0;
    }
    let pad = (hi - lo) * 0.05;
    let (lo, hi) = (lo - pad, hi + pad);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let n = spec.line.len();
    let x = |i: usize| LEFT + if n > 1 { plot_w * i as f64 / (n - 1) as f64 } else { plot_w / 2.0 };
    let y = |v: f64| TOP + plot_h * (hi - v) / (hi - lo);

    let mut out = String::new();
    header(&mut out, &spec);
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y(v) + 4.0,
            nice_label(v)
        );
    }
    for k in 0..=4 {
        let i = (n.saturating_sub(1)) * k / 4;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{i}</text>"#,
            x(i),
            HEIGHT - BOTTOM + 18.0
        );
    }
    axes(&mut out);
    let _ = writeln!(
        out,
        r##"<line class="zero" x1="{LEFT:.2}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="#bbbbbb"/>"##,
        y(0.0),
        WIDTH - RIGHT
    );
    let points: Vec<String> = spec
        .line
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{:.2},{:.2}", x(i), y(*v)))
        .collect();
    let _ = writeln!(
        out,
        r##"<polyline class="curve" points="{}" fill="none" stroke="#4a78b5" stroke-width="1.5"/>"##,
        points.join(" ")
    );
    for t in &spec.thresholds {
        let yy = y(t.value);
        let _ = writeln!(
            out,
            r##"<line class="threshold" x1="{LEFT:.2}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#d04a02" stroke-dasharray="6 4"/>"##,
            WIDTH - RIGHT
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            WIDTH - RIGHT - 4.0,
            yy - 4.0,
            escape(&t.label)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Terminal rendering of a Pareto report.
pub fn pareto_ascii(report: &ParetoReport) -> String {
    let mut out = String::new();
    for e in &report.entries {
        let bar = "#".repeat((e.percent / 2.0).round() as usize);
        let marker = if report.vital_few.contains(&e.term) { '*' } else { ' ' };
        let _ = writeln!(
            out,
            "{marker}{:<4}{:>7.2}% {:>7.2}% |{bar}",
            e.term.name(),
            e.percent,
            e.cumulative
        );
    }
    out
}
