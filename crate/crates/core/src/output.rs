//! CSV tables and SVG line plots of sweep results.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::sweep::{Output, SweepResult};

pub const PLOT_WIDTH: f64 = 800.0;
pub const PLOT_HEIGHT: f64 = 500.0;
pub const MARGIN_LEFT: f64 = 90.0;
pub const MARGIN_RIGHT: f64 = 30.0;
pub const MARGIN_TOP: f64 = 30.0;
pub const MARGIN_BOTTOM: f64 = 70.0;
const TICKS: usize = 5;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("column `{0}` not present")]
    MissingColumn(String),
    #[error("{path} line {line}: `{value}` is not a number")]
    BadCell { path: String, line: usize, value: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// 17 significant digits, stable across platforms.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(r: &SweepResult, w: W) -> Result<(), OutputError> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    let mut header = vec!["control"];
    header.extend(r.columns.iter().map(|c| c.name()));
    out.write_record(&header)?;
    for row in &r.rows {
        let mut rec = vec![format_float(row.control)];
        let mut values = row.values.iter();
        for c in &r.columns {
            if *c == Output::Stable {
                rec.push(row.stable.to_string());
            } else {
                rec.push(values.next().copied().flatten().map(format_float).unwrap_or_default());
            }
        }
        out.write_record(&rec)?;
    }
    out.flush().map_err(|e| OutputError::Csv(e.into()))?;
    Ok(())
}

pub fn emit_csv(r: &SweepResult, path: &Path) -> Result<(), OutputError> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    write_csv(r, std::io::BufWriter::new(file))
}

/// A numeric table read back from CSV; `true`/`false` become 1/0.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

pub fn read_csv(path: &Path) -> Result<Table, OutputError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|cell| match cell {
                "" => Ok(None),
                "true" => Ok(Some(1.0)),
                "false" => Ok(Some(0.0)),
                s => s.parse().map(Some).map_err(|_| OutputError::BadCell {
                    path: path.display().to_string(),
                    line: i + 2,
                    value: s.to_string(),
                }),
            })
            .collect::<Result<_, _>>()?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}

pub fn xml_escape(s: &str) -> String {
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

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if (1e-3..1e4).contains(&v.abs()) {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

/// Data range, padded when flat so the plot keeps a height.
fn span(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return None;
    }
    if hi > lo {
        Some((lo, hi))
    } else {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.05 };
        Some((lo - pad, hi + pad))
    }
}

/// One-column line plot. Empty cells, and non-positive values on a log axis,
/// break the line instead of being drawn.
pub fn render_svg(x_label: &str, y_label: &str, xs: &[f64], ys: &[Option<f64>], log_y: bool) -> String {
    let y_of = |v: Option<f64>| {
        v.filter(|y| y.is_finite() && (!log_y || *y > 0.0))
            .map(|y| if log_y { y.log10() } else { y })
    };
    let pts: Vec<Option<(f64, f64)>> = xs.iter().zip(ys).map(|(&x, &y)| y_of(y).map(|y| (x, y))).collect();
    let (x0, x1) = span(xs.iter().copied()).unwrap_or((0.0, 1.0));
    let (y0, y1) = span(pts.iter().flatten().map(|p| p.1)).unwrap_or((0.0, 1.0));
    let (pw, ph) = (
        PLOT_WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        PLOT_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM,
    );
    let px = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| MARGIN_TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{PLOT_WIDTH}" height="{PLOT_HEIGHT}" viewBox="0 0 {PLOT_WIDTH} {PLOT_HEIGHT}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{PLOT_WIDTH}" height="{PLOT_HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );

    let _ = writeln!(s, r#"<g font-family="sans-serif" font-size="12">"#);
    for k in 0..TICKS {
        let t = k as f64 / (TICKS - 1) as f64;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let (x, y) = (px(xv), py(yv));
        let bottom = MARGIN_TOP + ph;
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{bottom}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            bottom + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bottom + 20.0,
            xml_escape(&tick_label(xv))
        );
        let ylab = if log_y { format!("1e{yv:.2}") } else { tick_label(yv) };
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN_LEFT}" y2="{y:.2}" stroke="black"/>"#,
            MARGIN_LEFT - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 8.0,
            y + 4.0,
            xml_escape(&ylab)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + pw / 2.0,
        PLOT_HEIGHT - 20.0,
        xml_escape(x_label)
    );
    let (lx, ly) = (20.0, MARGIN_TOP + ph / 2.0);
    let y_text = if log_y {
        format!("{y_label} (log scale)")
    } else {
        y_label.to_string()
    };
    let _ = writeln!(
        s,
        r#"<text x="{lx}" y="{ly:.2}" text-anchor="middle" transform="rotate(-90 {lx} {ly:.2})">{}</text>"#,
        xml_escape(&y_text)
    );
    let _ = writeln!(s, "</g>");

    for run in pts.split(|p| p.is_none()).filter(|r| !r.is_empty()) {
        let coords: Vec<String> = run
            .iter()
            .flatten()
            .map(|&(x, y)| format!("{:.3},{:.3}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}

fn axis_label(name: &str, unit: &str) -> String {
    format!("{name} [{unit}]")
}

pub fn emit_svg(r: &SweepResult, path: &Path, column: &str, log_y: bool) -> Result<(), OutputError> {
    let ys = r
        .column(column)
        .ok_or_else(|| OutputError::MissingColumn(column.to_string()))?;
    let unit = column
        .parse::<Output>()
        .map(|o| o.unit())
        .unwrap_or(r.meta.control.unit());
    let xs: Vec<f64> = r.rows.iter().map(|row| row.control).collect();
    let control = r.meta.control;
    let svg = render_svg(
        &axis_label(control.name(), control.unit()),
        &axis_label(column, unit),
        &xs,
        &ys,
        log_y,
    );
    std::fs::write(path, svg).map_err(io_err(path))
}

/// Plots a column of a CSV written by [`emit_csv`] against its first column.
pub fn plot_csv(csv_path: &Path, svg_path: &Path, column: &str, log_y: bool) -> Result<(), OutputError> {
    let t = read_csv(csv_path)?;
    let ys = t
        .column(column)
        .ok_or_else(|| OutputError::MissingColumn(column.to_string()))?;
    let xs: Vec<f64> = t.rows.iter().map(|r| r[0].unwrap_or(f64::NAN)).collect();
    let unit = column.parse::<Output>().map(|o| o.unit()).unwrap_or("");
    let svg = render_svg(&t.header[0], &axis_label(column, unit), &xs, &ys, log_y);
    std::fs::write(svg_path, svg).map_err(io_err(svg_path))
}
