//! Trajectory CSV files and static SVG line plots.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so reading
//! a file back reproduces every `f64` bit for bit. Files are written to a
//! temporary sibling and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Result, TodaError};
use crate::lattice::LatticeState;

/// Samples of a run as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub times: Vec<f64>,
    pub states: Vec<LatticeState>,
}

/// Write `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent().filter(|d| !d.as_os_str().is_empty()) {
        Some(d) => d,
        None => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.persist(path).map_err(|e| TodaError::Io(e.to_string()))?;
    Ok(())
}

fn csv_err(e: csv::Error) -> TodaError {
    TodaError::Io(e.to_string())
}

pub fn trajectory_header(n: usize) -> Vec<String> {
    let q = (1..=n).map(|i| format!("q{i}"));
    let p = (1..=n).map(|i| format!("p{i}"));
    std::iter::once("t".to_string()).chain(q).chain(p).collect()
}

fn csv_bytes(header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|x| format!("{x:?}"))).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| TodaError::Io(e.to_string()))
}

/// CSV text with header `t,q1..qN,p1..pN`.
pub fn trajectory_csv(times: &[f64], states: &[LatticeState]) -> Result<String> {
    if times.len() != states.len() {
        return Err(TodaError::Dimension(format!(
            "{} times for {} states",
            times.len(),
            states.len()
        )));
    }
    let n = states.first().map_or(0, |s| s.len());
    if states.iter().any(|s| s.len() != n) {
        return Err(TodaError::Dimension("states of different sizes".into()));
    }
    let rows = times.iter().zip(states).map(|(t, s)| {
        std::iter::once(*t).chain(s.q.iter().copied()).chain(s.p.iter().copied()).collect()
    });
    Ok(String::from_utf8(csv_bytes(&trajectory_header(n), rows)?).expect("ASCII output"))
}

pub fn write_trajectory_csv(path: &Path, times: &[f64], states: &[LatticeState]) -> Result<()> {
    write_atomic(path, trajectory_csv(times, states)?.as_bytes())
}

pub fn parse_trajectory_csv(text: &str) -> Result<Samples> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let cols = header.len();
    if cols < 3 || cols.is_multiple_of(2) || header != trajectory_header((cols - 1) / 2) {
        return Err(TodaError::Io(format!("unexpected header '{}'", header.join(","))));
    }
    let n = (cols - 1) / 2;
    let mut samples = Samples { times: Vec::new(), states: Vec::new() };
    for (row, record) in r.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let values = record
            .iter()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| TodaError::Io(format!("row {}: {e}", row + 1)))?;
        samples.times.push(values[0]);
        samples
            .states
            .push(LatticeState { q: values[1..=n].to_vec(), p: values[n + 1..].to_vec() });
    }
    Ok(samples)
}

pub fn read_trajectory_csv(path: &Path) -> Result<Samples> {
    parse_trajectory_csv(&fs::read_to_string(path)?)
}

/// CSV of named columns sharing a time axis.
pub fn write_series_csv(path: &Path, times: &[f64], columns: &[(&str, Vec<f64>)]) -> Result<()> {
    if let Some((name, _)) = columns.iter().find(|(_, v)| v.len() != times.len()) {
        return Err(TodaError::Dimension(format!("column {name} has the wrong length")));
    }
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain(columns.iter().map(|(n, _)| n.to_string()))
        .collect();
    let rows = times
        .iter()
        .enumerate()
        .map(|(k, t)| std::iter::once(*t).chain(columns.iter().map(|(_, v)| v[k])).collect());
    write_atomic(path, &csv_bytes(&header, rows)?)
}

/// One stacked panel of an SVG figure.
pub struct Panel<'a> {
    pub title: String,
    pub times: &'a [f64],
    pub series: Vec<Vec<f64>>,
}

const WIDTH: f64 = 900.0;
const PANEL_HEIGHT: f64 = 320.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 40.0;
const MAX_POINTS: usize = 2000;

fn colour(i: usize, count: usize) -> String {
    let hue = 360.0 * i as f64 / count.max(1) as f64;
    format!("hsl({hue:.0},70%,40%)")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Static vector plot, one polyline per series, panels stacked vertically.
pub fn svg_figure(title: &str, panels: &[Panel]) -> String {
    let height = MARGIN_TOP + PANEL_HEIGHT * panels.len() as f64;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="15">{title}</text>"#,
        WIDTH / 2.0
    )
    .unwrap();
    for (k, panel) in panels.iter().enumerate() {
        let top = MARGIN_TOP + k as f64 * PANEL_HEIGHT + 20.0;
        let plot_h = PANEL_HEIGHT - MARGIN_BOTTOM - 20.0;
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let (t_lo, t_hi) = range(panel.times.iter().copied());
        let (y_lo, y_hi) = range(panel.series.iter().flatten().copied());
        let x_of = |t: f64| MARGIN_LEFT + (t - t_lo) / (t_hi - t_lo) * plot_w;
        let y_of = |y: f64| top + (y_hi - y) / (y_hi - y_lo) * plot_h;

        writeln!(
            out,
            r#"<rect x="{MARGIN_LEFT}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            top - 5.0,
            panel.title
        )
        .unwrap();
        for (label, y) in [(y_hi, top), (y_lo, top + plot_h)] {
            writeln!(
                out,
                r#"<text x="{}" y="{}" text-anchor="end">{label:.3}</text>"#,
                MARGIN_LEFT - 5.0,
                y + 4.0
            )
            .unwrap();
        }
        for (label, x) in [(t_lo, MARGIN_LEFT), (t_hi, MARGIN_LEFT + plot_w)] {
            writeln!(
                out,
                r#"<text x="{x}" y="{}" text-anchor="middle">{label:.3}</text>"#,
                top + plot_h + 16.0
            )
            .unwrap();
        }
        writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">t</text>"#,
            WIDTH / 2.0,
            top + plot_h + 30.0
        )
        .unwrap();

        let stride = panel.times.len().div_ceil(MAX_POINTS).max(1);
        for (i, series) in panel.series.iter().enumerate() {
            let mut points = String::new();
            for (j, (t, y)) in panel.times.iter().zip(series).enumerate() {
                if j % stride == 0 || j + 1 == panel.times.len() {
                    write!(points, "{:.2},{:.2} ", x_of(*t), y_of(*y)).unwrap();
                }
            }
            writeln!(
                out,
                r#"<polyline fill="none" stroke="{}" stroke-width="1" points="{}"/>"#,
                colour(i, panel.series.len()),
                points.trim_end()
            )
            .unwrap();
        }
    }
    out.push_str("</svg>\n");
    out
}
