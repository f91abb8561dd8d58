//! Plain SVG figures: space-time heatmaps and line plots.
//!
//! [`emit_figures`] rebuilds every figure it can from the CSV files in a
//! result directory and reports the ones it had to skip.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::Result;
use crate::io::{read_numeric_csv, write_atomic};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 52.0;

const PALETTE: [&str; 8] = [
    "#d62728", "#1f77b4", "#2ca02c", "#111111", "#e6b800", "#9467bd", "#8c564b", "#17becf",
];

/// Line dash patterns cycled alongside the palette.
const DASHES: [&str; 4] = ["", "6 3", "2 3", "8 3 2 3"];

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Draw markers instead of a polyline.
    pub markers: bool,
}

impl Series {
    pub fn line(label: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Self {
        Series {
            label: label.into(),
            x,
            y,
            markers: false,
        }
    }

    pub fn points(label: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Self {
        Series {
            markers: true,
            ..Series::line(label, x, y)
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

impl LinePlot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        LinePlot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
        }
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn to_svg(&self) -> String {
        let finite = |v: &f64| v.is_finite();
        let xs = self.series.iter().flat_map(|s| s.x.iter().copied().filter(finite));
        let ys = self.series.iter().flat_map(|s| s.y.iter().copied().filter(finite));
        let (x0, x1) = padded_range(xs, false);
        let (y0, y1) = padded_range(ys, true);
        let frame = Frame { x0, x1, y0, y1 };

        let mut svg = open_svg(&self.title);
        frame.axes(&mut svg, &self.x_label, &self.y_label);
        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            if s.markers {
                for (&x, &y) in s.x.iter().zip(&s.y).filter(|(x, y)| x.is_finite() && y.is_finite()) {
                    let _ = writeln!(
                        svg,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="none" stroke="{color}"/>"#,
                        frame.px(x),
                        frame.py(y)
                    );
                }
            } else {
                // NaNs break the polyline into segments
                for run in s
                    .x
                    .iter()
                    .zip(&s.y)
                    .collect::<Vec<_>>()
                    .split(|(x, y)| !x.is_finite() || !y.is_finite())
                    .filter(|r| !r.is_empty())
                {
                    let pts: Vec<String> = run
                        .iter()
                        .map(|(&x, &y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
                        .collect();
                    let dash = DASHES[i % DASHES.len()];
                    let dash = if dash.is_empty() {
                        String::new()
                    } else {
                        format!(r#" stroke-dasharray="{dash}""#)
                    };
                    let _ = writeln!(
                        svg,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
                        pts.join(" ")
                    );
                }
            }
            let ly = TOP + 14.0 + 16.0 * i as f64;
            let lx = WIDTH - RIGHT - 130.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{ly:.1}" font-size="11">{}</text>"#,
                ly - 4.0,
                lx + 18.0,
                ly - 4.0,
                lx + 24.0,
                escape(&s.label)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

/// Space-time map of `values[[time, site]]`.
#[derive(Clone, Debug)]
pub struct Heatmap {
    pub title: String,
    pub times: Vec<f64>,
    pub values: Array2<f64>,
}

/// At most this many time rows are drawn; longer grids are subsampled.
const HEATMAP_ROWS: usize = 200;

impl Heatmap {
    pub fn to_svg(&self) -> String {
        let n_sites = self.values.ncols();
        let n_t = self.times.len();
        let t_max = self.times.last().copied().unwrap_or(1.0).max(f64::MIN_POSITIVE);
        let v_max = self.values.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
        let v_max = if v_max > 0.0 { v_max } else { 1.0 };
        let frame = Frame {
            x0: 0.5,
            x1: n_sites as f64 + 0.5,
            y0: self.times.first().copied().unwrap_or(0.0),
            y1: t_max,
        };
        let mut svg = open_svg(&self.title);
        let stride = n_t.div_ceil(HEATMAP_ROWS).max(1);
        let cell_w = frame.px(1.5) - frame.px(0.5);
        let rows: Vec<usize> = (0..n_t).step_by(stride).collect();
        for (i, &k) in rows.iter().enumerate() {
            let t_lo = self.times[k];
            let t_hi = rows.get(i + 1).map_or(t_max, |&n| self.times[n]);
            let (y_top, y_bot) = (frame.py(t_hi), frame.py(t_lo));
            for m in 0..n_sites {
                let v = self.values[[k, m]] / v_max;
                let _ = write!(
                    svg,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                    frame.px(m as f64 + 0.5),
                    y_top,
                    cell_w + 0.3,
                    (y_bot - y_top).max(0.3) + 0.3,
                    colormap(v)
                );
            }
            svg.push('\n');
        }
        frame.axes(&mut svg, "site m", "t");
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">max P = {v_max:.3e}</text>"#,
            WIDTH - RIGHT,
            TOP - 8.0
        );
        svg.push_str("</svg>\n");
        svg
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }

    fn axes(&self, svg: &mut String, x_label: &str, y_label: &str) {
        let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
        let _ = writeln!(
            svg,
            r#"<rect x="{l}" y="{t}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
            r - l,
            b - t
        );
        for x in nice_ticks(self.x0, self.x1) {
            let p = self.px(x);
            let _ = writeln!(
                svg,
                r#"<line x1="{p:.2}" y1="{b}" x2="{p:.2}" y2="{:.1}" stroke="black"/><text x="{p:.2}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#,
                b + 4.0,
                b + 17.0,
                tick_label(x)
            );
        }
        for y in nice_ticks(self.y0, self.y1) {
            let p = self.py(y);
            let _ = writeln!(
                svg,
                r#"<line x1="{:.1}" y1="{p:.2}" x2="{l}" y2="{p:.2}" stroke="black"/><text x="{:.1}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#,
                l - 4.0,
                l - 7.0,
                p + 4.0,
                tick_label(y)
            );
        }
        if self.y0 < 0.0 && self.y1 > 0.0 {
            let p = self.py(0.0);
            let _ = writeln!(
                svg,
                r##"<line x1="{l}" y1="{p:.2}" x2="{r}" y2="{p:.2}" stroke="#999" stroke-dasharray="2 2"/>"##
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">{}</text>"#,
            0.5 * (l + r),
            HEIGHT - 12.0,
            escape(x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="16" y="{:.1}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            0.5 * (t + b),
            0.5 * (t + b),
            escape(y_label)
        );
    }
}

fn open_svg(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" font-size="14" text-anchor="middle">{}</text>"#,
        0.5 * WIDTH,
        escape(title)
    );
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn padded_range(values: impl Iterator<Item = f64>, pad: bool) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * lo.abs().max(1e-300) {
        let w = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        return (lo - w, hi + w);
    }
    if pad {
        let w = 0.05 * (hi - lo);
        (lo - w, hi + w)
    } else {
        (lo, hi)
    }
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return Vec::new();
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(x: f64) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    let a = x.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{x:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        format!("{x:.1e}")
    }
}

/// Perceptually ordered dark-blue to yellow ramp on `[0, 1]`.
fn colormap(v: f64) -> String {
    const STOPS: [(f64, [f64; 3]); 5] = [
        (0.00, [68.0, 1.0, 84.0]),
        (0.25, [59.0, 82.0, 139.0]),
        (0.50, [33.0, 145.0, 140.0]),
        (0.75, [94.0, 201.0, 98.0]),
        (1.00, [253.0, 231.0, 37.0]),
    ];
    let v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
    let i = STOPS.iter().rposition(|(s, _)| *s <= v).unwrap_or(0).min(STOPS.len() - 2);
    let (s0, c0) = STOPS[i];
    let (s1, c1) = STOPS[i + 1];
    let f = (v - s0) / (s1 - s0);
    let c: Vec<u8> = (0..3).map(|k| (c0[k] + f * (c1[k] - c0[k])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Which figures were written and which were skipped.
#[derive(Clone, Debug, Default)]
pub struct FigureReport {
    pub written: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

pub const POPULATIONS_CSV: &str = "populations.csv";
pub const CORRELATIONS_CSV: &str = "correlations.csv";
pub const THIRD_ORDER_CSV: &str = "third_order.csv";
pub const SWEEP_CSV: &str = "sweep.csv";

/// Renders all figures whose input series exist in `dir`.
///
/// Correlations are drawn with the customary scalings, `G2 x 10^3` and
/// `G3 x 10^2`; the CSV files keep raw values.
pub fn emit_figures(dir: &Path) -> Result<FigureReport> {
    let mut report = FigureReport::default();
    let emit = |name: &str, svg: String, report: &mut FigureReport| -> Result<()> {
        let path = dir.join(name);
        write_atomic(&path, svg.as_bytes())?;
        report.written.push(path);
        Ok(())
    };

    match load(dir, POPULATIONS_CSV)? {
        Some((_, rows)) => {
            let (times, field) = population_table(&rows);
            let n = field.ncols();
            emit(
                "population_heatmap.svg",
                Heatmap {
                    title: "Excitation populations P_m(t)".to_owned(),
                    times: times.clone(),
                    values: field.clone(),
                }
                .to_svg(),
                &mut report,
            )?;
            let end = field.column(n.saturating_sub(1)).to_vec();
            emit(
                "end_population.svg",
                LinePlot::new("End-site population", "t", format!("P_{n}(t)"))
                    .with(Series::line(format!("P_{n}"), times, end))
                    .to_svg(),
                &mut report,
            )?;
        }
        None => {
            for fig in ["population_heatmap.svg", "end_population.svg"] {
                report.warnings.push(format!("skipped {fig}: {POPULATIONS_CSV} not found"));
            }
        }
    }

    match load(dir, CORRELATIONS_CSV)? {
        Some((_, rows)) => {
            let mut by_r: BTreeMap<i64, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
            for row in rows.iter().filter(|r| (1.0..=5.0).contains(&r[1])) {
                let e = by_r.entry(row[1] as i64).or_default();
                e.0.push(row[0]);
                e.1.push(row[2] * 1e3);
            }
            let mut plot = LinePlot::new("Density-density correlation", "t", "<G2(r)> x 10^3");
            for (r, (t, g)) in by_r {
                plot = plot.with(Series::line(format!("r = {r}"), t, g));
            }
            emit("g2.svg", plot.to_svg(), &mut report)?;
        }
        None => report
            .warnings
            .push(format!("skipped g2.svg: {CORRELATIONS_CSV} not found")),
    }

    match load(dir, THIRD_ORDER_CSV)? {
        Some((_, rows)) if !rows.is_empty() => {
            let t: Vec<f64> = rows.iter().map(|r| r[0]).collect();
            let g: Vec<f64> = rows.iter().map(|r| r[1] * 1e2).collect();
            emit(
                "g3.svg",
                LinePlot::new("Third-order correlation", "t", "<G3> x 10^2")
                    .with(Series::line("G3", t, g))
                    .to_svg(),
                &mut report,
            )?;
        }
        Some(_) => report
            .warnings
            .push(format!("skipped g3.svg: {THIRD_ORDER_CSV} has no rows")),
        None => report
            .warnings
            .push(format!("skipped g3.svg: {THIRD_ORDER_CSV} not found")),
    }

    if let Some((header, rows)) = load(dir, SWEEP_CSV)? {
        // columns: series_d, value, t_c, ...
        let axis = header.get(1).cloned().unwrap_or_else(|| "value".to_owned());
        let mut by_d: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for row in &rows {
            let e = by_d.entry(format!("D = {}", row[0])).or_default();
            e.0.push(row[1]);
            e.1.push(row[2]);
        }
        let mut plot = LinePlot::new("Routing time", axis, "t_c");
        for (label, (x, y)) in by_d {
            plot = plot.with(Series::points(label, x, y));
        }
        emit("tc_sweep.svg", plot.to_svg(), &mut report)?;
    }
    Ok(report)
}

fn load(dir: &Path, name: &str) -> Result<Option<(Vec<String>, Vec<Vec<f64>>)>> {
    let path = dir.join(name);
    if !path.is_file() {
        return Ok(None);
    }
    read_numeric_csv(&path).map(Some)
}

/// Reassembles `t,m,P` rows into a `(times, [time, site])` table.
fn population_table(rows: &[Vec<f64>]) -> (Vec<f64>, Array2<f64>) {
    let n = rows.iter().map(|r| r[1] as usize).max().unwrap_or(0);
    let mut times: Vec<f64> = Vec::new();
    for r in rows {
        if times.last() != Some(&r[0]) {
            times.push(r[0]);
        }
    }
    let mut field = Array2::zeros((times.len(), n));
    let mut k = 0;
    for r in rows {
        if r[0] != times[k] {
            k += 1;
        }
        field[[k, r[1] as usize - 1]] = r[2];
    }
    (times, field)
}
