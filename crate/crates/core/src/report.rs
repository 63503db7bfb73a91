//! Static SVG figures from harness CSVs.
//!
//! `curves.csv` is required. `boxplot.csv`, `counts.csv` and `partitions.csv`
//! are rendered when present.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::harness::{BOXPLOT_CSV, COUNTS_CSV, CURVES_CSV, PARTITIONS_CSV};
use crate::stats::BoxStats;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];
const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 48.0;

#[derive(Debug, Clone, Deserialize)]
pub struct CurveRecord {
    pub algorithm: String,
    pub matrix_id: String,
    pub episode: u64,
    pub mean_raw_reward: f64,
    pub mean_norm_reward: f64,
    pub stderr: f64,
    pub pct_optimal: f64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct BoxplotRecord {
    pub algorithm: String,
    pub matrix_id: String,
    pub pct_optimal: f64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CountRecord {
    pub algorithm: String,
    pub state: usize,
    pub action: usize,
    pub count: u64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct PartitionRecord {
    pub algorithm: String,
    pub signature: String,
    pub count: u64,
}

/// Parses a CSV file into records, reporting the offending line on failure.
pub fn read_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let malformed = |line: u64, message: String| Error::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::io(path, std::io::Error::other(e.to_string())),
        _ => malformed(1, e.to_string()),
    })?;
    let mut out = Vec::new();
    for record in reader.deserialize() {
        let record: T = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        out.push(record);
    }
    if out.is_empty() {
        return Err(malformed(1, "no data rows".into()));
    }
    Ok(out)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(f64::EPSILON);
        MARGIN_LEFT + (v - self.x_min) / span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(f64::EPSILON);
        HEIGHT - MARGIN_BOTTOM - (v - self.y_min) / span * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn svg_open(out: &mut String, width: f64, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        width / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (x0, x1) = (f.x(f.x_min), f.x(f.x_max));
    let (y0, y1) = (f.y(f.y_min), f.y(f.y_max));
    let _ = writeln!(
        out,
        r#"<path d="M{x0:.1},{y1:.1} L{x0:.1},{y0:.1} L{x1:.1},{y0:.1}" fill="none" stroke="black"/>"#
    );
    for k in 0..=5 {
        let t = k as f64 / 5.0;
        let xv = f.x_min + t * (f.x_max - f.x_min);
        let yv = f.y_min + t * (f.y_max - f.y_min);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            f.x(xv),
            y0 + 16.0,
            format_tick(xv)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            x0 - 6.0,
            f.y(yv) + 4.0,
            format_tick(yv)
        );
        let _ = writeln!(
            out,
            r##"<line x1="{x0:.1}" x2="{x1:.1}" y1="{y:.1}" y2="{y:.1}" stroke="#e0e0e0"/>"##,
            y = f.y(yv)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn format_tick(v: f64) -> String {
    if v.abs() >= 1000.0 || v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn legend(out: &mut String, labels: &[String]) {
    let x = WIDTH - MARGIN_RIGHT + 14.0;
    for (i, label) in labels.iter().enumerate() {
        let y = MARGIN_TOP + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{x:.1}" y="{:.1}" width="12" height="12" fill="{}"/><text x="{:.1}" y="{:.1}" class="series-label">{}</text>"#,
            y - 10.0,
            PALETTE[i % PALETTE.len()],
            x + 18.0,
            y,
            escape(label)
        );
    }
}

type Series<'a> = BTreeMap<String, Vec<&'a CurveRecord>>;

fn group_curves(records: &[CurveRecord]) -> Series<'_> {
    let multi_matrix = records.iter().any(|r| r.matrix_id != records[0].matrix_id);
    let mut series: Series = BTreeMap::new();
    for r in records {
        let label = if multi_matrix {
            format!("{} ({})", r.algorithm, r.matrix_id)
        } else {
            r.algorithm.clone()
        };
        series.entry(label).or_default().push(r);
    }
    for points in series.values_mut() {
        points.sort_by_key(|r| r.episode);
    }
    series
}

/// Mean normalized reward per series with a shaded band of one standard error.
pub fn render_reward_curves(records: &[CurveRecord]) -> String {
    render_curves(records, "Mean normalized reward", "normalized reward", true, |r| {
        r.mean_norm_reward
    })
}

/// Fraction of runs whose greedy policy is optimal at each grid point.
pub fn render_optimal_curves(records: &[CurveRecord]) -> String {
    render_curves(records, "Runs with an optimal policy", "fraction optimal", false, |r| {
        r.pct_optimal
    })
}

fn render_curves(
    records: &[CurveRecord],
    title: &str,
    y_label: &str,
    band: bool,
    value: impl Fn(&CurveRecord) -> f64,
) -> String {
    let series = group_curves(records);
    let x_max = records.iter().map(|r| r.episode).max().unwrap_or(1) as f64;
    let lo = records
        .iter()
        .map(|r| value(r) - if band { r.stderr } else { 0.0 })
        .fold(f64::INFINITY, f64::min);
    let f = Frame {
        x_min: 0.0,
        x_max,
        y_min: (lo.clamp(0.0, 0.5) * 10.0).floor() / 10.0,
        y_max: 1.0,
    };
    let mut out = String::new();
    svg_open(&mut out, WIDTH, HEIGHT, title);
    axes(&mut out, &f, "episode", y_label);
    let labels: Vec<String> = series.keys().cloned().collect();
    for (i, points) in series.values().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if band {
            let mut d = String::new();
            for (k, r) in points.iter().enumerate() {
                let _ = write!(
                    d,
                    "{}{:.1},{:.1} ",
                    if k == 0 { "M" } else { "L" },
                    f.x(r.episode as f64),
                    f.y((value(r) + r.stderr).min(f.y_max))
                );
            }
            for r in points.iter().rev() {
                let _ = write!(
                    d,
                    "L{:.1},{:.1} ",
                    f.x(r.episode as f64),
                    f.y((value(r) - r.stderr).max(f.y_min))
                );
            }
            let _ = writeln!(
                out,
                r#"<path d="{}Z" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                d
            );
        }
        let pts: Vec<String> = points
            .iter()
            .map(|r| format!("{:.1},{:.1}", f.x(r.episode as f64), f.y(value(r).max(f.y_min))))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="series" data-label="{}" points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#,
            escape(&labels[i]),
            pts.join(" ")
        );
    }
    legend(&mut out, &labels);
    out.push_str("</svg>\n");
    out
}

/// Box (quartiles), median line and 1.5 IQR whiskers of per-matrix
/// pct-optimal, one box per algorithm.
pub fn render_boxplot(records: &[BoxplotRecord]) -> String {
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for r in records {
        match groups.iter_mut().find(|(a, _)| *a == r.algorithm) {
            Some((_, v)) => v.push(r.pct_optimal),
            None => groups.push((r.algorithm.clone(), vec![r.pct_optimal])),
        }
    }
    let f = Frame {
        x_min: 0.0,
        x_max: groups.len() as f64,
        y_min: 0.0,
        y_max: 1.0,
    };
    let mut out = String::new();
    svg_open(&mut out, WIDTH, HEIGHT, "Per-matrix fraction of optimal runs");
    axes(&mut out, &f, "algorithm", "fraction optimal");
    let slot = f.x(1.0) - f.x(0.0);
    for (i, (alg, values)) in groups.iter().enumerate() {
        let Some(b) = BoxStats::from_samples(values) else {
            continue;
        };
        let color = PALETTE[i % PALETTE.len()];
        let cx = f.x(i as f64 + 0.5);
        let half = slot * 0.3;
        let _ = writeln!(
            out,
            r#"<g class="box" data-label="{}" data-median="{}">"#,
            escape(alg),
            b.median
        );
        let _ = writeln!(
            out,
            r#"<line x1="{cx:.1}" x2="{cx:.1}" y1="{:.1}" y2="{:.1}" stroke="black"/>"#,
            f.y(b.whisker_low),
            f.y(b.whisker_high)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{color}" fill-opacity="0.5" stroke="black"/>"#,
            cx - half,
            f.y(b.q3),
            2.0 * half,
            (f.y(b.q1) - f.y(b.q3)).max(0.5)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" x2="{:.1}" y1="{y:.1}" y2="{y:.1}" stroke="black" stroke-width="2"/>"#,
            cx - half,
            cx + half,
            y = f.y(b.median)
        );
        for v in values.iter().filter(|v| **v < b.whisker_low || **v > b.whisker_high) {
            let _ = writeln!(
                out,
                r#"<circle cx="{cx:.1}" cy="{:.1}" r="2" fill="none" stroke="black"/>"#,
                f.y(*v)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle" font-size="10">{}</text></g>"#,
            HEIGHT - MARGIN_BOTTOM + 30.0,
            escape(alg)
        );
    }
    out.push_str("</svg>\n");
    out
}

type CountTable = BTreeMap<(usize, usize), u64>;

/// One heat table of pooled final `(state, action)` counts per algorithm.
pub fn render_counts(records: &[CountRecord]) -> String {
    let mut tables: Vec<(String, CountTable)> = Vec::new();
    for r in records {
        let idx = match tables.iter().position(|(a, _)| *a == r.algorithm) {
            Some(i) => i,
            None => {
                tables.push((r.algorithm.clone(), BTreeMap::new()));
                tables.len() - 1
            }
        };
        tables[idx].1.insert((r.state, r.action), r.count);
    }
    let n_states = records.iter().map(|r| r.state).max().unwrap_or(1);
    let n_actions = records.iter().map(|r| r.action).max().unwrap_or(1);
    let cell = (240.0 / n_states.max(n_actions) as f64).clamp(6.0, 40.0);
    let panel_w = cell * n_actions as f64 + 60.0;
    let panel_h = cell * n_states as f64 + 60.0;
    let cols = tables.len().clamp(1, 4);
    let rows = tables.len().div_ceil(cols).max(1);
    let (width, height) = (panel_w * cols as f64 + 20.0, panel_h * rows as f64 + 40.0);
    let mut out = String::new();
    svg_open(&mut out, width, height, "Final state-action counts");
    let labels = cell >= 24.0;
    for (t, (alg, counts)) in tables.iter().enumerate() {
        let ox = 10.0 + panel_w * (t % cols) as f64 + 40.0;
        let oy = 40.0 + panel_h * (t / cols) as f64 + 20.0;
        let max = counts.values().copied().max().unwrap_or(0).max(1) as f64;
        let _ = writeln!(out, r#"<text x="{ox:.1}" y="{:.1}">{}</text>"#, oy - 6.0, escape(alg));
        for s in 1..=n_states {
            for a in 1..=n_actions {
                let c = counts.get(&(s, a)).copied().unwrap_or(0);
                let shade = 255.0 - 200.0 * c as f64 / max;
                let (x, y) = (ox + cell * (a - 1) as f64, oy + cell * (s - 1) as f64);
                let _ = writeln!(
                    out,
                    r#"<rect x="{x:.1}" y="{y:.1}" width="{cell:.1}" height="{cell:.1}" fill="rgb({r:.0},{r:.0},255)" stroke="white"><title>s{s} a{a}: {c}</title></rect>"#,
                    r = shade
                );
                if labels {
                    let _ = writeln!(
                        out,
                        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="10">{c}</text>"#,
                        x + cell / 2.0,
                        y + cell / 2.0 + 4.0
                    );
                }
            }
            if labels || s == 1 || s == n_states {
                let _ = writeln!(
                    out,
                    r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">s{s}</text>"#,
                    ox - 4.0,
                    oy + cell * (s as f64 - 0.5) + 4.0
                );
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Table of partition signatures and their share of runs, per algorithm.
pub fn render_partitions(records: &[PartitionRecord]) -> String {
    const MAX_ROWS: usize = 12;
    let mut tables: Vec<(String, Vec<(&str, u64)>)> = Vec::new();
    for r in records {
        match tables.iter_mut().find(|(a, _)| *a == r.algorithm) {
            Some((_, v)) => v.push((&r.signature, r.count)),
            None => tables.push((r.algorithm.clone(), vec![(&r.signature, r.count)])),
        }
    }
    let row_h = 18.0;
    let panel_h = row_h * (MAX_ROWS as f64 + 3.0);
    let width = 720.0;
    let height = 40.0 + panel_h * tables.len() as f64;
    let mut out = String::new();
    svg_open(&mut out, width, height, "Message partitions of the final greedy sender");
    for (t, (alg, rows)) in tables.iter_mut().enumerate() {
        rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let total: u64 = rows.iter().map(|r| r.1).sum::<u64>().max(1);
        let oy = 40.0 + panel_h * t as f64;
        let _ = writeln!(
            out,
            r#"<text x="20" y="{:.1}" font-weight="bold">{}</text>"#,
            oy + 14.0,
            escape(alg)
        );
        for (k, (sig, count)) in rows.iter().take(MAX_ROWS).enumerate() {
            let y = oy + row_h * (k as f64 + 2.0);
            let share = *count as f64 / total as f64;
            let shown = if sig.len() > 60 {
                format!("{}...", &sig[..57])
            } else {
                sig.to_string()
            };
            let _ = writeln!(
                out,
                r##"<text x="30" y="{y:.1}" font-family="monospace">{}</text><rect x="480" y="{:.1}" width="{:.1}" height="12" fill="#1f77b4"/><text x="{:.1}" y="{y:.1}">{:.1}% ({count})</text>"##,
                escape(&shown),
                y - 11.0,
                150.0 * share,
                486.0 + 150.0 * share,
                100.0 * share
            );
        }
        if rows.len() > MAX_ROWS {
            let y = oy + row_h * (MAX_ROWS as f64 + 2.0);
            let _ = writeln!(
                out,
                r#"<text x="30" y="{y:.1}">{} more signatures</text>"#,
                rows.len() - MAX_ROWS
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Renders every available figure from `input` into `svg_dir`; returns the
/// written paths.
pub fn render_report(input: &Path, svg_dir: &Path) -> Result<Vec<PathBuf>> {
    let curves_path = input.join(CURVES_CSV);
    if !curves_path.is_file() {
        return Err(Error::Malformed {
            path: curves_path,
            line: 0,
            message: "file not found".into(),
        });
    }
    let curves: Vec<CurveRecord> = read_records(&curves_path)?;
    let mut figures = vec![
        ("reward.svg", render_reward_curves(&curves)),
        ("pct_optimal.svg", render_optimal_curves(&curves)),
    ];
    let optional = |name: &str| -> Option<PathBuf> { Some(input.join(name)).filter(|p| p.is_file()) };
    if let Some(p) = optional(BOXPLOT_CSV) {
        figures.push(("boxplot.svg", render_boxplot(&read_records(&p)?)));
    }
    if let Some(p) = optional(COUNTS_CSV) {
        figures.push(("counts.svg", render_counts(&read_records(&p)?)));
    }
    if let Some(p) = optional(PARTITIONS_CSV) {
        figures.push(("partitions.svg", render_partitions(&read_records(&p)?)));
    }
    fs::create_dir_all(svg_dir).map_err(|e| Error::io(svg_dir, e))?;
    figures
        .into_iter()
        .map(|(name, svg)| {
            let path = svg_dir.join(name);
            fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}
