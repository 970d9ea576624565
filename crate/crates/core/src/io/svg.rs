//! Minimal SVG figures: error-vs-abscissa traces, box plots of run
//! summaries and the horizon sweep curve.
//!
//! Every document carries the command line that produced it, both as an
//! XML comment and verbatim in the `<desc>` element.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::csv_log::{self, CsvLogError};
use crate::harness::{RunRecord, RunSummary, SweepResult};

const WIDTH: f64 = 820.0;
const PANEL_HEIGHT: f64 = 270.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 32.0;
const MARGIN_BOTTOM: f64 = 46.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: CsvLogError,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("plot needs {0}")]
    Inputs(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    /// `|e_I|` against `s`, one trace per run log (CSV inputs).
    ErrorVsS,
    /// One box per run summary (JSON inputs).
    Boxplot,
    /// Median with interquartile band against `s_h` (one sweep JSON input).
    SweepCurve,
}

/// What to plot, from which files, to where.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub kind: PlotKind,
    pub inputs: Vec<PathBuf>,
    /// Legend or box labels, one per input; file stems when empty.
    pub labels: Vec<String>,
    pub output: PathBuf,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
}

/// Data behind one panel of a figure.
#[derive(Debug, Clone)]
pub enum Panel {
    ErrorVsS {
        title: String,
        series: Vec<(String, Vec<RunRecord>)>,
        /// Abscissae marked with dashed vertical lines.
        markers: Vec<f64>,
    },
    Boxplot {
        title: String,
        boxes: Vec<(String, RunSummary)>,
    },
    SweepCurve {
        title: String,
        sweep: SweepResult,
    },
}

impl PlotSpec {
    /// Load every input and build the panel.
    pub fn load(&self) -> Result<Panel, PlotError> {
        let label = |i: usize, p: &Path| {
            self.labels.get(i).cloned().unwrap_or_else(|| {
                p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
            })
        };
        match self.kind {
            PlotKind::ErrorVsS => {
                if self.inputs.is_empty() {
                    return Err(PlotError::Inputs("at least one run log"));
                }
                let series = self
                    .inputs
                    .iter()
                    .enumerate()
                    .map(|(i, p)| Ok((label(i, p), read_log(p)?)))
                    .collect::<Result<_, PlotError>>()?;
                Ok(Panel::ErrorVsS {
                    title: self.title.clone(),
                    series,
                    markers: Vec::new(),
                })
            }
            PlotKind::Boxplot => {
                if self.inputs.is_empty() {
                    return Err(PlotError::Inputs("at least one summary"));
                }
                let boxes = self
                    .inputs
                    .iter()
                    .enumerate()
                    .map(|(i, p)| Ok((label(i, p), read_summary(p)?)))
                    .collect::<Result<_, PlotError>>()?;
                Ok(Panel::Boxplot {
                    title: self.title.clone(),
                    boxes,
                })
            }
            PlotKind::SweepCurve => match self.inputs.as_slice() {
                [p] => Ok(Panel::SweepCurve {
                    title: self.title.clone(),
                    sweep: read_json(p)?,
                }),
                _ => Err(PlotError::Inputs("exactly one sweep file")),
            },
        }
    }

    /// Load the inputs and write the SVG to `output`.
    pub fn render(&self, command_line: &str) -> Result<(), PlotError> {
        let panel = self.load()?;
        let svg = render_figure(&[panel], &self.x_label, &self.y_label, command_line);
        std::fs::write(&self.output, svg).map_err(|source| PlotError::Io {
            path: self.output.display().to_string(),
            source,
        })
    }
}

fn read_log(p: &Path) -> Result<Vec<RunRecord>, PlotError> {
    let file = std::fs::File::open(p).map_err(|source| PlotError::Io {
        path: p.display().to_string(),
        source,
    })?;
    csv_log::read_records(file).map_err(|source| PlotError::Csv {
        path: p.display().to_string(),
        source,
    })
}

fn read_json<T: serde::de::DeserializeOwned>(p: &Path) -> Result<T, PlotError> {
    let text = std::fs::read_to_string(p).map_err(|source| PlotError::Io {
        path: p.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| PlotError::Json {
        path: p.display().to_string(),
        source,
    })
}

/// A bare summary or a run report holding one under `summary`.
fn read_summary(p: &Path) -> Result<RunSummary, PlotError> {
    let mut value: serde_json::Value = read_json(p)?;
    if let Some(inner) = value.get_mut("summary") {
        value = inner.take();
    }
    serde_json::from_value(value).map_err(|source| PlotError::Json {
        path: p.display().to_string(),
        source,
    })
}

pub fn escape_xml(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if (c as u32) < 0x20 && c != '\n' && c != '\t' => out.push(' '),
            c => out.push(c),
        }
    }
    out
}

/// Comment-safe text: XML forbids `--` inside comments and a trailing `-`.
fn comment_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        if ch == '-' && out.ends_with('-') {
            out.push(' ');
        }
        if (ch as u32) >= 0x20 || ch == '\n' || ch == '\t' {
            out.push(ch);
        }
    }
    if out.ends_with('-') {
        out.push(' ');
    }
    out
}

/// "Nice" tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= target as f64)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let v = if v.abs() < 1e-12 { 0.0 } else { v };
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

impl Frame {
    fn new(top: f64, xr: (f64, f64), yr: (f64, f64)) -> Self {
        let pad = |(a, b): (f64, f64)| if (b - a).abs() < 1e-12 { (a - 0.5, b + 0.5) } else { (a, b) };
        let (xmin, xmax) = pad(xr);
        let (ymin, ymax) = pad(yr);
        Self {
            x0: MARGIN_LEFT,
            y0: top + MARGIN_TOP,
            w: WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
            h: PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM,
            xmin,
            xmax,
            ymin,
            ymax,
        }
    }

    fn x(&self, v: f64) -> f64 {
        self.x0 + (v - self.xmin) / (self.xmax - self.xmin) * self.w
    }

    fn y(&self, v: f64) -> f64 {
        self.y0 + self.h - (v - self.ymin) / (self.ymax - self.ymin) * self.h
    }

    fn axes(&self, svg: &mut String, title: &str, x_label: &str, y_label: &str, x_ticks: bool) {
        let (x0, y0, w, h) = (self.x0, self.y0, self.w, self.h);
        let _ = writeln!(
            svg,
            r##"<rect x="{x0:.2}" y="{y0:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="#333"/>"##
        );
        for t in ticks(self.ymin, self.ymax, 5) {
            let y = self.y(t);
            let _ = writeln!(
                svg,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"##,
                x0,
                x0 + w,
                x0 - 6.0,
                y + 4.0,
                fmt_tick(t)
            );
        }
        if x_ticks {
            for t in ticks(self.xmin, self.xmax, 8) {
                let x = self.x(t);
                let _ = writeln!(
                    svg,
                    r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"##,
                    y0 + h,
                    y0 + h + 4.0,
                    y0 + h + 17.0,
                    fmt_tick(t)
                );
            }
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="13" font-weight="bold">{}</text>"#,
            x0,
            y0 - 10.0,
            escape_xml(title)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
            x0 + w / 2.0,
            y0 + h + 36.0,
            escape_xml(x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text transform="translate({:.2},{:.2}) rotate(-90)" text-anchor="middle" font-size="12">{}</text>"#,
            x0 - 48.0,
            y0 + h / 2.0,
            escape_xml(y_label)
        );
    }

    fn legend(&self, svg: &mut String, entries: &[(String, &str)]) {
        for (i, (label, color)) in entries.iter().enumerate() {
            let x = self.x0 + self.w + 12.0;
            let y = self.y0 + 12.0 + 18.0 * i as f64;
            let _ = writeln!(
                svg,
                r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
                x + 18.0,
                x + 24.0,
                y + 4.0,
                escape_xml(label)
            );
        }
    }
}

fn polyline(svg: &mut String, frame: &Frame, pts: impl Iterator<Item = (f64, f64)>, color: &str) {
    let mut d = String::new();
    for (x, y) in pts {
        let _ = write!(d, "{:.2},{:.2} ", frame.x(x), frame.y(y));
    }
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.4"/>"#,
        d.trim_end()
    );
}

/// At most `max` evenly spaced records, always keeping the last one.
fn decimate(records: &[RunRecord], max: usize) -> impl Iterator<Item = &RunRecord> {
    let stride = records.len().div_ceil(max.max(1)).max(1);
    let last = records.len().saturating_sub(1);
    records
        .iter()
        .enumerate()
        .filter(move |(i, _)| i % stride == 0 || *i == last)
        .map(|(_, r)| r)
}

fn draw_panel(svg: &mut String, panel: &Panel, top: f64, x_label: &str, y_label: &str) {
    match panel {
        Panel::ErrorVsS { title, series, markers } => {
            let all = series.iter().flat_map(|(_, r)| r.iter());
            let (mut xmin, mut xmax, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
            for r in all {
                xmin = xmin.min(r.s);
                xmax = xmax.max(r.s);
                ymax = ymax.max(r.e_i_exact.abs());
            }
            if !xmin.is_finite() {
                (xmin, xmax) = (0.0, 1.0);
            }
            let frame = Frame::new(top, (xmin, xmax), (0.0, ymax * 1.05));
            frame.axes(svg, title, x_label, y_label, true);
            for &m in markers.iter().filter(|m| (xmin..=xmax).contains(*m)) {
                let x = frame.x(m);
                let _ = writeln!(
                    svg,
                    r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#888" stroke-dasharray="4,3"/>"##,
                    frame.y0,
                    frame.y0 + frame.h
                );
            }
            let mut legend = Vec::new();
            for (i, (label, records)) in series.iter().enumerate() {
                let color = PALETTE[i % PALETTE.len()];
                polyline(svg, &frame, decimate(records, 1500).map(|r| (r.s, r.e_i_exact.abs())), color);
                legend.push((label.clone(), color));
            }
            frame.legend(svg, &legend);
        }
        Panel::Boxplot { title, boxes } => {
            let ymax = boxes.iter().map(|(_, b)| b.max).fold(0.0, f64::max);
            let n = boxes.len().max(1) as f64;
            let frame = Frame::new(top, (0.0, n), (0.0, ymax * 1.05));
            frame.axes(svg, title, x_label, y_label, false);
            for (i, (label, b)) in boxes.iter().enumerate() {
                let color = PALETTE[i % PALETTE.len()];
                let cx = frame.x(i as f64 + 0.5);
                let half = 0.3 * frame.w / n;
                let (yq1, ymed, yq3, ymx) = (frame.y(b.q25), frame.y(b.median), frame.y(b.q75), frame.y(b.max));
                let _ = writeln!(
                    svg,
                    r##"<line x1="{cx:.2}" y1="{yq3:.2}" x2="{cx:.2}" y2="{ymx:.2}" stroke="#333"/><line x1="{:.2}" y1="{ymx:.2}" x2="{:.2}" y2="{ymx:.2}" stroke="#333"/>"##,
                    cx - half / 2.0,
                    cx + half / 2.0
                );
                let _ = writeln!(
                    svg,
                    r##"<rect x="{:.2}" y="{yq3:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.35" stroke="{color}"/><line x1="{:.2}" y1="{ymed:.2}" x2="{:.2}" y2="{ymed:.2}" stroke="#000" stroke-width="2"/>"##,
                    cx - half,
                    2.0 * half,
                    (yq1 - yq3).max(0.0),
                    cx - half,
                    cx + half
                );
                // one line per word so long labels do not collide
                for (k, word) in label.split_whitespace().enumerate() {
                    let _ = writeln!(
                        svg,
                        r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle" font-size="10">{}</text>"#,
                        frame.y0 + frame.h + 14.0 + 12.0 * k as f64,
                        escape_xml(word)
                    );
                }
            }
        }
        Panel::SweepCurve { title, sweep } => {
            let pts = &sweep.points;
            let xmin = pts.iter().map(|p| p.s_h).fold(f64::INFINITY, f64::min);
            let xmax = pts.iter().map(|p| p.s_h).fold(f64::NEG_INFINITY, f64::max);
            let ymax = pts.iter().map(|p| p.summary.q75).fold(0.0, f64::max);
            let (xmin, xmax) = if xmin.is_finite() { (xmin, xmax) } else { (0.0, 1.0) };
            let frame = Frame::new(top, (xmin, xmax), (0.0, ymax * 1.1));
            frame.axes(svg, title, x_label, y_label, true);
            let mut band = String::new();
            for p in pts {
                let _ = write!(band, "{:.2},{:.2} ", frame.x(p.s_h), frame.y(p.summary.q75));
            }
            for p in pts.iter().rev() {
                let _ = write!(band, "{:.2},{:.2} ", frame.x(p.s_h), frame.y(p.summary.q25));
            }
            let _ = writeln!(
                svg,
                r#"<polygon points="{}" fill="{}" fill-opacity="0.2" stroke="none"/>"#,
                band.trim_end(),
                PALETTE[0]
            );
            polyline(svg, &frame, pts.iter().map(|p| (p.s_h, p.summary.median)), PALETTE[0]);
            for p in pts {
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                    frame.x(p.s_h),
                    frame.y(p.summary.median),
                    PALETTE[0]
                );
            }
            let ax = frame.x(sweep.argmin_s_h);
            let ay = frame.y(sweep.min_median);
            let _ = writeln!(
                svg,
                r##"<circle id="argmin" cx="{ax:.2}" cy="{ay:.2}" r="6" fill="none" stroke="{}" stroke-width="2"/><text x="{ax:.2}" y="{:.2}" text-anchor="middle" font-size="12">argmin s_h = {} m</text>"##,
                PALETTE[1],
                ay - 12.0,
                sweep.argmin_s_h
            );
            frame.legend(
                svg,
                &[("median".to_string(), PALETTE[0]), ("q25 to q75".to_string(), "#a6c8e4")],
            );
        }
    }
}

/// Panels stacked vertically in one document.
pub fn render_figure(panels: &[Panel], x_label: &str, y_label: &str, command_line: &str) -> String {
    render_figure_with_labels(
        &panels.iter().map(|p| (p, x_label, y_label)).collect::<Vec<_>>(),
        command_line,
    )
}

/// Like [`render_figure`] with per-panel axis labels.
pub fn render_figure_with_labels(panels: &[(&Panel, &str, &str)], command_line: &str) -> String {
    let height = PANEL_HEIGHT * panels.len().max(1) as f64;
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(svg, "<!-- generated by: {} -->", comment_text(command_line));
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, "<desc>{}</desc>", escape_xml(command_line));
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, (panel, xl, yl)) in panels.iter().enumerate() {
        draw_panel(&mut svg, panel, i as f64 * PANEL_HEIGHT, xl, yl);
    }
    svg.push_str("</svg>\n");
    svg
}
