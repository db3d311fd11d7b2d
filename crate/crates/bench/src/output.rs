//! CSV and SVG artifacts.
//!
//! Floats are written with Rust's shortest round-trip formatting, so parsing
//! the CSV back reproduces every value bit for bit (`NaN` and `-inf`
//! included). Exponents use the `ExtRational` text form: `inf`, `2`, `3/2`.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use robustbf::ExtRational;
use thiserror::Error;

use crate::experiment::{summarize, ResultRow};

pub const CSV_HEADER: [&str; 10] = [
    "snr_db",
    "p",
    "q",
    "run",
    "sinr_db",
    "worst_case_sinr_db",
    "opt_bound_db",
    "iterations",
    "cpu_ms",
    "status",
];

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("no rows to write")]
    Empty,
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path} line {line}: {message}")]
    Malformed {
        path: String,
        line: u64,
        message: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> OutputError + '_ {
    move |source| OutputError::Csv {
        path: path.display().to_string(),
        source,
    }
}

fn record(r: &ResultRow) -> [String; 10] {
    [
        r.snr_db.to_string(),
        r.p.to_string(),
        r.q.to_string(),
        r.run.to_string(),
        r.sinr_db.to_string(),
        r.worst_case_sinr_db.to_string(),
        r.opt_bound_db.to_string(),
        r.iterations.to_string(),
        r.cpu_ms.to_string(),
        r.status.to_string(),
    ]
}

/// Serializes rows in the order given.
pub fn write_csv<W: io::Write>(rows: &[ResultRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(record(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<(), OutputError> {
    if rows.is_empty() {
        return Err(OutputError::Empty);
    }
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    write_csv(rows, io::BufWriter::new(file)).map_err(csv_err(path))
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>, OutputError> {
    let mut rd = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = rd.headers().map_err(csv_err(path))?.clone();
    let malformed = |line: u64, message: String| OutputError::Malformed {
        path: path.display().to_string(),
        line,
        message,
    };
    if header.iter().ne(CSV_HEADER) {
        return Err(malformed(1, format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err(path))?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).unwrap_or_default();
        let float = |i: usize| -> Result<f64, OutputError> {
            field(i)
                .parse()
                .map_err(|e| malformed(line, format!("{}: {e}", CSV_HEADER[i])))
        };
        let int = |i: usize| -> Result<usize, OutputError> {
            field(i)
                .parse()
                .map_err(|e| malformed(line, format!("{}: {e}", CSV_HEADER[i])))
        };
        let exp = |i: usize| -> Result<ExtRational, OutputError> {
            field(i)
                .parse()
                .map_err(|e| malformed(line, format!("{}: {e}", CSV_HEADER[i])))
        };
        rows.push(ResultRow {
            snr_db: float(0)?,
            p: exp(1)?,
            q: exp(2)?,
            run: int(3)?,
            sinr_db: float(4)?,
            worst_case_sinr_db: float(5)?,
            opt_bound_db: float(6)?,
            iterations: int(7)?,
            cpu_ms: float(8)?,
            status: field(9).parse().map_err(|e| malformed(line, e))?,
        });
    }
    Ok(rows)
}

/// Quantity plotted against SNR.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    SinrDb,
    CpuMs,
}

impl Metric {
    fn label(self) -> &'static str {
        match self {
            Metric::SinrDb => "Output SINR (dB)",
            Metric::CpuMs => "CPU time per solve (ms)",
        }
    }
}

/// What went into a plot.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlotReport {
    /// Labels of the drawn series.
    pub drawn: Vec<String>,
    /// Series dropped for having no finite point.
    pub skipped: Vec<String>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Lower and upper ends of a padded axis range.
fn axis_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

/// Renders the per-series mean of `metric` versus SNR. For SINR the optimal
/// bound is drawn dashed.
pub fn render_svg(rows: &[ResultRow], metric: Metric) -> (String, PlotReport) {
    let summary = summarize(rows);
    let mut series: Vec<Series> = Vec::new();
    let mut bound: Vec<(f64, f64)> = Vec::new();
    for s in &summary {
        let label = format!("p={}, q={}", s.p, s.q);
        let value = match metric {
            Metric::SinrDb => s.mean_sinr_db,
            Metric::CpuMs => s.mean_cpu_ms,
        };
        let idx = match series.iter().position(|x| x.label == label) {
            Some(i) => i,
            None => {
                series.push(Series {
                    label,
                    points: Vec::new(),
                });
                series.len() - 1
            }
        };
        if value.is_finite() {
            series[idx].points.push((s.snr_db, value));
        }
        if metric == Metric::SinrDb && !bound.iter().any(|b| b.0 == s.snr_db) {
            bound.push((s.snr_db, s.opt_bound_db));
        }
    }
    let mut report = PlotReport::default();
    series.retain(|s| {
        if s.points.is_empty() {
            log::warn!("series {} has no finite points; omitted", s.label);
            report.skipped.push(s.label.clone());
            false
        } else {
            report.drawn.push(s.label.clone());
            true
        }
    });
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    bound.sort_by(|a, b| a.0.total_cmp(&b.0));

    let all = || series.iter().flat_map(|s| s.points.iter()).chain(&bound);
    let (x0, x1) = axis_range(all().map(|p| p.0));
    let (y0, y1) = axis_range(all().map(|p| p.1));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;
    let pts = |p: &[(f64, f64)]| {
        p.iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut svg = String::new();
    // Writing to a String cannot fail.
    let _ = writeln!(
        svg,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let fx = x0 + (x1 - x0) * i as f64 / 5.0;
        let fy = y0 + (y1 - y0) * i as f64 / 5.0;
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{top}" x2="{x:.2}" y2="{bot}" stroke="#ddd"/>
<text x="{x:.2}" y="{lab}" text-anchor="middle">{fx:.1}</text>
<line x1="{LEFT}" y1="{y:.2}" x2="{r}" y2="{y:.2}" stroke="#ddd"/>
<text x="{tx}" y="{y:.2}" text-anchor="end" dominant-baseline="middle">{fy:.1}</text>"##,
            x = sx(fx),
            y = sy(fy),
            top = TOP,
            bot = TOP + ph,
            lab = TOP + ph + 18.0,
            r = LEFT + pw,
            tx = LEFT - 6.0,
        );
    }
    let _ = writeln!(
        svg,
        r#"<text class="xlabel" x="{:.2}" y="{:.2}" text-anchor="middle">SNR (dB)</text>
<text class="ylabel" x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        metric.label()
    );
    let legend_x = LEFT + pw + 15.0;
    let mut legend_y = TOP + 10.0;
    let mut legend = |svg: &mut String, color: &str, dash: &str, label: &str| {
        let _ = writeln!(
            svg,
            r#"<line x1="{legend_x}" y1="{legend_y}" x2="{:.2}" y2="{legend_y}" stroke="{color}" stroke-width="2"{dash}/>
<text x="{:.2}" y="{legend_y}" dominant-baseline="middle">{}</text>"#,
            legend_x + 25.0,
            legend_x + 32.0,
            escape(label)
        );
        legend_y += 20.0;
    };
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let _ = writeln!(
            svg,
            r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts(&s.points)
        );
        for &(x, y) in &s.points {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
        legend(&mut svg, color, "", &s.label);
    }
    if !bound.is_empty() {
        let _ = writeln!(
            svg,
            r#"<polyline class="bound" fill="none" stroke="black" stroke-dasharray="6 4" points="{}"/>"#,
            pts(&bound)
        );
        legend(&mut svg, "black", r#" stroke-dasharray="6 4""#, "optimal");
    }
    svg.push_str("</svg>\n");
    (svg, report)
}

pub fn emit_svg_lines(
    rows: &[ResultRow],
    metric: Metric,
    path: &Path,
) -> Result<PlotReport, OutputError> {
    if rows.is_empty() {
        return Err(OutputError::Empty);
    }
    let (svg, report) = render_svg(rows, metric);
    std::fs::write(path, svg).map_err(io_err(path))?;
    Ok(report)
}
