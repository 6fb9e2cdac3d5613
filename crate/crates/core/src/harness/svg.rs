//! Standalone SVG line charts of the summary metrics versus SNR.
//!
//! One chart per `(m, metric)`: NRMSE on a log axis, mean support size on a
//! linear axis, one polyline per algorithm configuration. Noise-free cells
//! have no SNR coordinate and are left out of the charts.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::runner::CellSummary;
use super::{HarnessError, Result};

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 320.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
/// NRMSE values are clamped to this range before taking logs, so a diverged
/// run is pinned to the top edge instead of flattening every other curve.
const LOG_FLOOR: f64 = 1e-6;
const LOG_CEIL: f64 = 1e2;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Nrmse,
    SupportSize,
}

impl Metric {
    pub fn slug(&self) -> &'static str {
        match self {
            Metric::Nrmse => "nrmse",
            Metric::SupportSize => "support_size",
        }
    }

    fn axis_label(&self) -> &'static str {
        match self {
            Metric::Nrmse => "mean NRMSE",
            Metric::SupportSize => "mean estimated support size",
        }
    }

    fn value(&self, s: &CellSummary) -> f64 {
        match self {
            Metric::Nrmse => s.nrmse_mean,
            Metric::SupportSize => s.support_size_mean,
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

fn collect_series(summaries: &[CellSummary], m: usize, metric: Metric) -> Vec<Series> {
    let mut series: Vec<Series> = Vec::new();
    for s in summaries.iter().filter(|s| s.m == m) {
        let Some(snr) = s.snr_db else { continue };
        let label = s.label();
        let value = metric.value(s);
        match series.iter_mut().find(|x| x.label == label) {
            Some(x) => x.points.push((snr, value)),
            None => series.push(Series { label, points: vec![(snr, value)] }),
        }
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    series
}

/// Rough "nice" tick spacing for a linear axis.
fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

/// Renders one chart as an SVG document.
pub fn render_chart(summaries: &[CellSummary], m: usize, metric: Metric) -> String {
    let series = collect_series(summaries, m, metric);
    let xs: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    let (mut x_lo, mut x_hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if !x_lo.is_finite() {
        (x_lo, x_hi) = (0.0, 1.0);
    }
    if x_hi - x_lo < 1e-9 {
        x_lo -= 1.0;
        x_hi += 1.0;
    }

    let log = metric == Metric::Nrmse;
    let transform = |v: f64| if log { v.clamp(LOG_FLOOR, LOG_CEIL).log10() } else { v };
    let ys: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| transform(p.1))).collect();
    let (y_lo, y_hi) = if log {
        let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo.is_finite() {
            let (lo, hi) = (lo.floor(), hi.ceil());
            (lo, if hi > lo { hi } else { lo + 1.0 })
        } else {
            (-3.0, 0.0)
        }
    } else {
        let hi = ys.iter().copied().fold(0.0, f64::max);
        let step = nice_step(hi.max(1.0));
        (0.0, (hi / step).ceil().max(1.0) * step)
    };

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let py = |y: f64| TOP + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#).unwrap();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(
        svg,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{} versus SNR, m = {m}</text>"#,
        LEFT + plot_w / 2.0,
        escape(metric.axis_label())
    )
    .unwrap();

    // grid and ticks
    writeln!(svg, r##"<g stroke="#dddddd" stroke-width="1">"##).unwrap();
    let mut x_ticks: Vec<f64> = xs.clone();
    x_ticks.sort_by(f64::total_cmp);
    x_ticks.dedup();
    for &x in &x_ticks {
        writeln!(svg, r#"<line x1="{0:.2}" y1="{TOP:.2}" x2="{0:.2}" y2="{1:.2}"/>"#, px(x), TOP + plot_h).unwrap();
    }
    let y_ticks: Vec<f64> = if log {
        (y_lo as i64..=y_hi as i64).map(|e| e as f64).collect()
    } else {
        let step = nice_step(y_hi);
        (0..).map(|i| i as f64 * step).take_while(|v| *v <= y_hi + 1e-9).collect()
    };
    for &y in &y_ticks {
        writeln!(svg, r#"<line x1="{LEFT:.2}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}"/>"#, py(y), LEFT + plot_w).unwrap();
    }
    writeln!(svg, "</g>").unwrap();

    writeln!(
        svg,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    for &x in &x_ticks {
        writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, px(x), TOP + plot_h + 18.0, super::output::format_sig9(x))
            .unwrap();
    }
    for &y in &y_ticks {
        let label = if log { format!("1e{}", y as i64) } else { super::output::format_sig9(y) };
        writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#, LEFT - 6.0, py(y) + 4.0).unwrap();
    }
    writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">SNR (dB)</text>"#, LEFT + plot_w / 2.0, HEIGHT - 18.0)
        .unwrap();
    writeln!(
        svg,
        r#"<text x="18" y="{0:.2}" text-anchor="middle" transform="rotate(-90 18 {0:.2})">{1}</text>"#,
        TOP + plot_h / 2.0,
        escape(metric.axis_label())
    )
    .unwrap();

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(transform(y)))).collect();
        writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, pts.join(" ")).unwrap();
        for &(x, y) in &s.points {
            writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, px(x), py(transform(y))).unwrap();
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + plot_w + 14.0;
        writeln!(svg, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#, lx + 22.0).unwrap();
        writeln!(svg, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 28.0, ly + 4.0, escape(&s.label)).unwrap();
    }
    writeln!(svg, "</svg>").unwrap();
    svg
}

fn prefixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s: OsString = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes `{prefix}m{m}_{metric}.svg` for every `m` in `summaries` and both
/// metrics. Returns the written paths in `m`-ascending order.
pub fn write_svg_plots(summaries: &[CellSummary], path_prefix: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    if summaries.is_empty() {
        return Err(HarnessError::Validation("no summaries to plot".into()));
    }
    let mut ms: Vec<usize> = summaries.iter().map(|s| s.m).collect();
    ms.sort_unstable();
    ms.dedup();
    let mut written = Vec::new();
    for m in ms {
        for metric in [Metric::Nrmse, Metric::SupportSize] {
            let path = prefixed(path_prefix.as_ref(), &format!("m{m}_{}.svg", metric.slug()));
            std::fs::write(&path, render_chart(summaries, m, metric))?;
            written.push(path);
        }
    }
    Ok(written)
}
