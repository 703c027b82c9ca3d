//! Standalone SVG line charts.
//!
//! Every series is drawn inside its own `<g class="series">` group: one
//! `<polyline>` for a line series, then one `<line class="error-bar">` per
//! point when error bars are given, then one `<circle class="marker">` per
//! point. A line series with error bars therefore has `2N + 1` primitives.
//! Output bytes depend only on the spec.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Style {
    #[default]
    Line,
    /// Markers only, for scatter plots.
    Markers,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// Half-widths of vertical error bars, one per point.
    pub errors: Option<Vec<f64>>,
    pub style: Style,
}

impl Series {
    pub fn line(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
            ..Default::default()
        }
    }

    pub fn with_errors(mut self, errors: Vec<f64>) -> Self {
        self.errors = Some(errors);
        self
    }

    pub fn markers(mut self) -> Self {
        self.style = Style::Markers;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 450.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Axis limits widened to a 1-2-5 tick grid, with the ticks.
fn nice_axis(lo: f64, hi: f64) -> (f64, f64, Vec<f64>, usize) {
    let (mut lo, mut hi) = (lo, hi);
    if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()).max(1.0) {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        lo -= pad;
        hi += pad;
    }
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let start = (lo / step).floor();
    let end = (hi / step).ceil();
    let ticks: Vec<f64> = (0..=(end - start) as i64)
        .map(|i| (start + i as f64) * step)
        .map(|t| if t == 0.0 { 0.0 } else { t })
        .collect();
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    (start * step, end * step, ticks, decimals)
}

fn check(spec: &PlotSpec) -> CliResult<()> {
    if spec.series.is_empty() {
        return Err(CliError::Data("a plot needs at least one series".into()));
    }
    for s in &spec.series {
        if s.points.is_empty() {
            return Err(CliError::Data(format!("series '{}' has no points", s.name)));
        }
        if s.points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(CliError::Data(format!("series '{}' has non-finite points", s.name)));
        }
        if let Some(e) = &s.errors {
            if e.len() != s.points.len() || e.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(CliError::Data(format!(
                    "series '{}' needs one finite non-negative error per point",
                    s.name
                )));
            }
        }
    }
    Ok(())
}

pub fn render_svg(spec: &PlotSpec) -> CliResult<String> {
    check(spec)?;
    let mut x_range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut y_range = x_range;
    for s in &spec.series {
        for (i, &(x, y)) in s.points.iter().enumerate() {
            let e = s.errors.as_ref().map_or(0.0, |e| e[i]);
            x_range = (x_range.0.min(x), x_range.1.max(x));
            y_range = (y_range.0.min(y - e), y_range.1.max(y + e));
        }
    }
    let (x0, x1, x_ticks, x_dec) = nice_axis(x_range.0, x_range.1);
    let (y0, y1, y_ticks, y_dec) = nice_axis(y_range.0, y_range.1);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| TOP + plot_h - (y - y0) / (y1 - y0) * plot_h;

    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(&spec.title)
    );

    let _ = writeln!(w, r#"<g class="axes" stroke="black" stroke-width="1">"#);
    let _ = writeln!(
        w,
        r#"<line x1="{LEFT:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    );
    let _ = writeln!(
        w,
        r#"<line x1="{LEFT:.2}" y1="{TOP:.2}" x2="{LEFT:.2}" y2="{:.2}"/>"#,
        TOP + plot_h
    );
    for &t in &x_ticks {
        let x = px(t);
        let _ = writeln!(
            w,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}"/>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0
        );
        let _ = writeln!(
            w,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" stroke="none">{t:.x_dec$}</text>"#,
            TOP + plot_h + 18.0
        );
    }
    for &t in &y_ticks {
        let y = py(t);
        let _ = writeln!(
            w,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT:.2}" y2="{y:.2}"/>"#,
            LEFT - 5.0
        );
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" stroke="none">{t:.y_dec$}</text>"#,
            LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(w, "</g>");
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0,
        escape(&spec.x_label)
    );
    let _ = writeln!(
        w,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(&spec.y_label)
    );

    for (i, s) in spec.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(w, r#"<g class="series" data-name="{}">"#, escape(&s.name));
        if s.style == Style::Line {
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            let _ = writeln!(
                w,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                pts.join(" ")
            );
        }
        if let Some(errors) = &s.errors {
            for (&(x, y), e) in s.points.iter().zip(errors) {
                let _ = writeln!(
                    w,
                    r#"<line class="error-bar" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}"/>"#,
                    px(x),
                    py(y - e),
                    px(x),
                    py(y + e)
                );
            }
        }
        for &(x, y) in &s.points {
            let _ = writeln!(
                w,
                r#"<circle class="marker" cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                px(x),
                py(y)
            );
        }
        let _ = writeln!(w, "</g>");
    }

    let _ = writeln!(w, r#"<g class="legend">"#);
    for (i, s) in spec.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = TOP + 10.0 + 18.0 * i as f64;
        let x = LEFT + plot_w + 15.0;
        let _ = writeln!(
            w,
            r#"<rect x="{x:.2}" y="{:.2}" width="12" height="4" fill="{color}"/>"#,
            y - 2.0
        );
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            x + 18.0,
            y + 4.0,
            escape(&s.name)
        );
    }
    let _ = writeln!(w, "</g>");
    let _ = writeln!(w, "</svg>");
    Ok(out)
}

pub fn emit_svg_plot(spec: &PlotSpec, path: &Path) -> CliResult<()> {
    Ok(chronos_nn::atomic_write(path, render_svg(spec)?.as_bytes())?)
}
