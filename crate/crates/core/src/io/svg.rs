//! Self-contained SVG figures: `<Delta m>` curves and time/cell heat maps.
//!
//! Coordinates are rounded to six significant digits so output is stable
//! enough for golden comparisons.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sweeps::{Heatmap, SweepResult};

const WIDTH: f64 = 640.0;
const PANEL_HEIGHT: f64 = 360.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 130.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 50.0;
const MAX_COLUMNS: usize = 200;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// `x` rounded to six significant digits, without trailing zeros.
pub fn fmt6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    let scale = 10f64.powi(5 - magnitude);
    let rounded = (x * scale).round() / scale;
    let mut s = format!("{rounded:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Linear map from data range to pixel range.
#[derive(Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> Self {
        let (lo, hi) = if hi > lo {
            (lo, hi)
        } else {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
            (lo - pad, hi + pad)
        };
        Axis {
            lo,
            hi,
            px_lo,
            px_hi,
        }
    }

    fn map(&self, x: f64) -> f64 {
        self.px_lo + (x - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    /// Round tick positions covering the range.
    fn ticks(&self) -> Vec<f64> {
        let span = self.hi - self.lo;
        let raw = span / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|m| m * mag)
            .find(|s| span / s <= 6.0)
            .unwrap_or(10.0 * mag);
        let first = (self.lo / step).ceil() as i64;
        let last = (self.hi / step).floor() as i64;
        (first..=last).map(|k| k as f64 * step).collect()
    }
}

fn open_svg(out: &mut String, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = fmt6(WIDTH),
        h = fmt6(height)
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

/// Frame, ticks and axis labels of one panel.
fn draw_axes(out: &mut String, x: &Axis, y: &Axis, x_label: &str, y_label: &str, title: &str) {
    let (left, right) = (x.px_lo, x.px_hi);
    let (bottom, top) = (y.px_lo, y.px_hi);
    let _ = writeln!(
        out,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        fmt6(left),
        fmt6(top),
        fmt6(right - left),
        fmt6(bottom - top)
    );
    for t in x.ticks() {
        let px = x.map(t);
        let _ = writeln!(
            out,
            r#"<line x1="{p}" y1="{b}" x2="{p}" y2="{b2}" stroke="black"/><text x="{p}" y="{ty}" text-anchor="middle">{label}</text>"#,
            p = fmt6(px),
            b = fmt6(bottom),
            b2 = fmt6(bottom + 5.0),
            ty = fmt6(bottom + 18.0),
            label = fmt6(t)
        );
    }
    for t in y.ticks() {
        let py = y.map(t);
        let _ = writeln!(
            out,
            r#"<line x1="{l2}" y1="{p}" x2="{l}" y2="{p}" stroke="black"/><text x="{tx}" y="{ty}" text-anchor="end">{label}</text>"#,
            p = fmt6(py),
            l = fmt6(left),
            l2 = fmt6(left - 5.0),
            tx = fmt6(left - 8.0),
            ty = fmt6(py + 4.0),
            label = fmt6(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
        fmt6((left + right) / 2.0),
        fmt6(bottom + 40.0),
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="{x}" y="{y}" text-anchor="middle" font-size="14" transform="rotate(-90 {x} {y})">{label}</text>"#,
        x = fmt6(left - 48.0),
        y = fmt6((top + bottom) / 2.0),
        label = escape(y_label)
    );
    if !title.is_empty() {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#,
            fmt6((left + right) / 2.0),
            fmt6(top - 10.0),
            escape(title)
        );
    }
}

/// `<Delta m>` versus `delta_g`, one polyline per `U`. Holes (NaN points)
/// break the line; curves with a single valid point become markers.
pub fn sweep_svg(result: &SweepResult) -> String {
    let height = PANEL_HEIGHT;
    let grid = &result.spec.delta_g_grid;
    let values = result
        .curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.mean_displacement))
        .filter(|v| v.is_finite());
    let (mut y_lo, mut y_hi) = (0.0f64, 1.0f64);
    for v in values {
        y_lo = y_lo.min(v);
        y_hi = y_hi.max(v);
    }
    let pad = 0.05 * (y_hi - y_lo);
    let x = Axis::new(
        grid[0],
        *grid.last().unwrap(),
        MARGIN_LEFT,
        WIDTH - MARGIN_RIGHT,
    );
    let y = Axis::new(y_lo - pad, y_hi + pad, height - MARGIN_BOTTOM, MARGIN_TOP);

    let mut out = String::new();
    open_svg(&mut out, height);
    let title = format!(
        "model {}, gamma_a = {}{}",
        result.spec.model,
        fmt6(result.spec.gamma_a),
        if result.spec.negate_linear {
            ", negated couplings"
        } else {
            ""
        }
    );
    draw_axes(&mut out, &x, &y, "δg", "⟨Δm⟩", &title);

    for (k, curve) in result.curves.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut segments: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for p in &curve.points {
            if p.mean_displacement.is_finite() {
                segments
                    .last_mut()
                    .unwrap()
                    .push((x.map(p.delta_g), y.map(p.mean_displacement)));
            } else if !segments.last().unwrap().is_empty() {
                segments.push(Vec::new());
            }
        }
        for seg in segments.iter().filter(|s| !s.is_empty()) {
            if seg.len() == 1 {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{}" cy="{}" r="3" fill="{color}"/>"#,
                    fmt6(seg[0].0),
                    fmt6(seg[0].1)
                );
            } else {
                let pts: Vec<String> = seg
                    .iter()
                    .map(|(px, py)| format!("{},{}", fmt6(*px), fmt6(*py)))
                    .collect();
                let _ = writeln!(
                    out,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    pts.join(" ")
                );
            }
        }
        let ly = MARGIN_TOP + 10.0 + 18.0 * k as f64;
        let lx = WIDTH - MARGIN_RIGHT + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">U = {}</text>"#,
            fmt6(lx),
            fmt6(lx + 20.0),
            fmt6(lx + 26.0),
            fmt6(ly + 4.0),
            fmt6(curve.u),
            y = fmt6(ly)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Sequential colour map for values in `[0, 1]`.
fn sequential(v: f64) -> (u8, u8, u8) {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let v = v.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let k = (v.floor() as usize).min(STOPS.len() - 2);
    let f = v - k as f64;
    let (a, b) = (STOPS[k], STOPS[k + 1]);
    let mix = |x: f64, y: f64| (x + (y - x) * f).round() as u8;
    (mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Blue-white-red colour map for values in `[-1, 1]`.
fn diverging(v: f64) -> (u8, u8, u8) {
    let v = v.clamp(-1.0, 1.0);
    let fade = |t: f64| (255.0 * (1.0 - t)).round() as u8;
    if v >= 0.0 {
        (255, fade(v), fade(v))
    } else {
        (fade(-v), fade(-v), 255)
    }
}

pub enum ColorScale {
    /// `0` to the grid maximum.
    Sequential,
    /// Symmetric about zero.
    Diverging,
}

/// Heat map panel with time on the horizontal and cell index on the
/// vertical axis. At most 200 time columns are drawn.
#[allow(clippy::too_many_arguments)]
fn heatmap_panel(
    out: &mut String,
    top: f64,
    times: &[f64],
    cells: &[i64],
    values: &[Vec<f64>],
    window: (usize, usize),
    scale: ColorScale,
    title: &str,
) {
    let (first, last) = window;
    let bottom = top + PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let t_end = times.last().copied().unwrap_or(1.0);
    let t0 = times.first().copied().unwrap_or(0.0);
    let x = Axis::new(t0, t_end, MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let y = Axis::new(
        cells[first] as f64 - 0.5,
        cells[last] as f64 + 0.5,
        bottom,
        top,
    );

    let peak = values
        .iter()
        .flat_map(|row| row[first..=last].iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let peak = if peak > 0.0 { peak } else { 1.0 };

    let stride = times.len().div_ceil(MAX_COLUMNS).max(1);
    let columns: Vec<usize> = (0..times.len()).step_by(stride).collect();
    for (c, &k) in columns.iter().enumerate() {
        let x0 = x.map(times[k]);
        let x1 = match columns.get(c + 1) {
            Some(&next) => x.map(times[next]),
            None => x.px_hi,
        };
        let w = (x1 - x0).max(0.5);
        for i in first..=last {
            let v = values[k][i] / peak;
            let (r, g, b) = match scale {
                ColorScale::Sequential => sequential(v),
                ColorScale::Diverging => diverging(v),
            };
            let y0 = y.map(cells[i] as f64 + 0.5);
            let y1 = y.map(cells[i] as f64 - 0.5);
            let _ = writeln!(
                out,
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#{r:02x}{g:02x}{b:02x}\"/>",
                fmt6(x0),
                fmt6(y0),
                fmt6(w),
                fmt6(y1 - y0)
            );
        }
    }
    let label = match scale {
        ColorScale::Sequential => format!("{title} (max {})", fmt6(peak)),
        ColorScale::Diverging => format!("{title} (±{})", fmt6(peak)),
    };
    draw_axes(out, &x, &y, "t", "m", &label);
}

/// Cell window holding every cell whose occupancy ever exceeds `1e-4` of
/// the peak, padded by two cells.
fn active_window(values: &[Vec<f64>], ncells: usize) -> (usize, usize) {
    let peak = values.iter().flatten().fold(0.0f64, |m, v| m.max(*v));
    let threshold = peak * 1e-4;
    let mut lo = ncells;
    let mut hi = 0;
    for row in values {
        for (i, &v) in row.iter().enumerate() {
            if v > threshold {
                lo = lo.min(i);
                hi = hi.max(i);
            }
        }
    }
    if lo > hi {
        return (0, ncells - 1);
    }
    (lo.saturating_sub(2), (hi + 2).min(ncells - 1))
}

/// Two stacked heat maps: occupancy `|a_m|^2 + |b_m|^2` and contrast `Z_m`.
pub fn heatmap_svg(run: &Heatmap) -> String {
    let occ = &run.occupancy;
    let height = 2.0 * PANEL_HEIGHT;
    let mut out = String::new();
    open_svg(&mut out, height);
    if occ.times.is_empty() || occ.cells.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let window = active_window(&occ.values, occ.cells.len());
    let p = &run.params;
    heatmap_panel(
        &mut out,
        MARGIN_TOP,
        &occ.times,
        &occ.cells,
        &occ.values,
        window,
        ColorScale::Sequential,
        &format!(
            "model {}, δg = {}, U = {}, γa = {}: occupancy",
            p.kind(),
            fmt6(p.delta_g()),
            fmt6(p.u()),
            fmt6(p.gamma_a())
        ),
    );
    heatmap_panel(
        &mut out,
        PANEL_HEIGHT + MARGIN_TOP,
        &run.contrast.times,
        &run.contrast.cells,
        &run.contrast.values,
        window,
        ColorScale::Diverging,
        "contrast Z_m",
    );
    out.push_str("</svg>\n");
    out
}

pub fn emit_svg(svg: &str, path: &Path) -> Result<()> {
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}
