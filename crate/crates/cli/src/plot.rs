//! SVG line charts of result tables.
//!
//! A table whose rows all carry baselines is drawn as F against f with the
//! three curves (a), (b), (c). A table without baselines is drawn as R(q)
//! for the total, shadow-layer and regulated-layer counts, anchored at the
//! q = 0 row.

use std::fmt::Write as _;
use std::io::Read;

use thiserror::Error;

use crate::output::{ResultRow, CSV_HEADER};

#[derive(Debug, Error, PartialEq)]
pub enum PlotError {
    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("no data rows")]
    Empty,
    #[error("{0}")]
    Undefined(String),
}

type Result<T> = std::result::Result<T, PlotError>;

pub fn read_rows<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let malformed = |line: u64, reason: String| PlotError::Malformed { line, reason };
    let headers = reader.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
    if headers.iter().ne(CSV_HEADER) {
        return Err(malformed(1, format!("expected header {}", CSV_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("").trim();
        fn parse<T: std::str::FromStr>(s: &str, name: &str, line: u64) -> Result<T> {
            s.parse().map_err(|_| PlotError::Malformed {
                line,
                reason: format!("{name}: cannot parse {s:?}"),
            })
        }
        let optional = |i: usize| -> Result<Option<f64>> {
            match field(i) {
                "" => Ok(None),
                s => parse(s, CSV_HEADER[i], line).map(Some),
            }
        };
        let x: f64 = parse(field(0), "f_or_q", line)?;
        if !x.is_finite() {
            return Err(malformed(line, format!("f_or_q: not finite: {x}")));
        }
        let (b, c) = (optional(4)?, optional(5)?);
        if b.is_some() != c.is_some() {
            return Err(malformed(line, "baseline_b and baseline_c must both be set or both empty".into()));
        }
        if rows.first().is_some_and(|r: &ResultRow| r.baseline_b.is_some() != b.is_some()) {
            return Err(malformed(line, "rows mix f-sweep and q-sweep layouts".into()));
        }
        rows.push(ResultRow {
            f_or_q: x,
            crisis_f: parse(field(1), "crisis_F", line)?,
            crisis_f_shadow: parse(field(2), "crisis_F_shadow", line)?,
            crisis_f_regulated: parse(field(3), "crisis_F_regulated", line)?,
            baseline_b: b.map(|v| v as usize),
            baseline_c: c,
        });
    }
    if rows.is_empty() {
        return Err(PlotError::Empty);
    }
    Ok(rows)
}

struct Curve {
    label: String,
    points: Vec<(f64, f64)>,
}

struct Chart {
    x_label: &'static str,
    y_label: &'static str,
    curves: Vec<Curve>,
}

fn ratio_curve(rows: &[ResultRow], label: &str, pick: impl Fn(&ResultRow) -> usize, zero: &ResultRow) -> Curve {
    let base = pick(zero);
    if base == 0 {
        return Curve {
            label: format!("{label} (undefined, F(0) = 0)"),
            points: Vec::new(),
        };
    }
    let points = rows
        .iter()
        .map(|r| (r.f_or_q, (pick(r) as f64 - base as f64) / base as f64))
        .collect();
    Curve {
        label: label.to_string(),
        points,
    }
}

fn chart(rows: &[ResultRow]) -> Result<Chart> {
    if rows[0].baseline_b.is_some() {
        let curve = |label: &str, y: &dyn Fn(&ResultRow) -> f64| Curve {
            label: label.to_string(),
            points: rows.iter().map(|r| (r.f_or_q, y(r))).collect(),
        };
        return Ok(Chart {
            x_label: "fraction of shadow banks f",
            y_label: "bankruptcies F",
            curves: vec![
                curve("(a) F(f)", &|r| r.crisis_f as f64),
                curve("(b) uniform equity ratio", &|r| r.baseline_b.unwrap_or(0) as f64),
                curve("(c) F(0) + fN", &|r| r.baseline_c.unwrap_or(0.0)),
            ],
        });
    }
    let zero = rows
        .iter()
        .find(|r| r.f_or_q == 0.0)
        .ok_or_else(|| PlotError::Undefined("R(q) needs a q = 0 row".into()))?;
    let curves = vec![
        ratio_curve(rows, "(a) total", |r| r.crisis_f, zero),
        ratio_curve(rows, "(b) shadow layer", |r| r.crisis_f_shadow, zero),
        ratio_curve(rows, "(c) regulated layer", |r| r.crisis_f_regulated, zero),
    ];
    Ok(Chart {
        x_label: "relative inter-layer denseness q",
        y_label: "R(q)",
        curves,
    })
}

/// Tick step of 1, 2 or 5 times a power of ten giving about five intervals.
fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let unit = [1.0, 2.0, 5.0, 10.0].into_iter().find(|u| u * mag >= raw).unwrap_or(10.0);
    unit * mag
}

/// Axis range snapped to whole steps, and the step.
fn axis(lo: f64, hi: f64) -> (f64, f64, f64) {
    let (lo, hi) = if hi - lo < 1e-12 { (lo - 0.5, hi + 0.5) } else { (lo, hi) };
    let step = nice_step(hi - lo);
    ((lo / step).floor() * step, (hi / step).ceil() * step, step)
}

fn decimals(step: f64) -> usize {
    (-step.log10().floor()).max(0.0) as usize
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 220.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];

pub fn render_svg(rows: &[ResultRow]) -> Result<String> {
    let chart = chart(rows)?;
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in rows {
        x_lo = x_lo.min(r.f_or_q);
        x_hi = x_hi.max(r.f_or_q);
    }
    let (mut y_lo, mut y_hi) = (0.0f64, 0.0f64);
    for &(_, y) in chart.curves.iter().flat_map(|c| c.points.iter()) {
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    let (x0, x1, xs) = axis(x_lo, x_hi);
    let (y0, y1, ys) = axis(y_lo, y_hi);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| TOP + plot_h - (y - y0) / (y1 - y0) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );

    let ticks = |lo: f64, hi: f64, step: f64| {
        let n = ((hi - lo) / step).round() as i64;
        (0..=n).map(move |i| lo + i as f64 * step)
    };
    for x in ticks(x0, x1, xs) {
        let (gx, d) = (px(x), decimals(xs));
        let bottom = TOP + plot_h;
        let _ = writeln!(s, r#"<line x1="{gx:.2}" y1="{bottom:.2}" x2="{gx:.2}" y2="{:.2}" stroke="black"/>"#, bottom + 5.0);
        let _ = writeln!(
            s,
            r#"<text x="{gx:.2}" y="{:.2}" text-anchor="middle">{x:.d$}</text>"#,
            bottom + 20.0
        );
    }
    for y in ticks(y0, y1, ys) {
        let (gy, d) = (py(y), decimals(ys));
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{gy:.2}" x2="{LEFT:.2}" y2="{gy:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y:.d$}</text>"#,
            LEFT - 8.0,
            gy + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0,
        chart.x_label
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        chart.y_label
    );

    for (i, curve) in chart.curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        if !curve.points.is_empty() {
            let pts: Vec<String> = curve.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                pts.join(" ")
            );
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 26.0, ly + 4.0, curve.label);
    }
    s.push_str("</svg>\n");
    Ok(s)
}
