//! SVG rendering of a report: the wave and the bisection trace.
//!
//! The upper panel draws every component of the wave against `x`, shifted
//! so that component 1 crosses its midlevel at 0, with the constrained
//! regions beyond `±L` shaded and vertical markers at `λ⁻`, `λ^{α-}` and
//! `λ⁺`. The lower panel draws `asinh(E/tol_E)` against `c` for every
//! bisection point, with the zero band `|E| ≤ tol_E` shaded.

use std::fmt::Write as _;
use std::path::Path;

use super::Report;
use crate::{Error, Result};

const WIDTH: f64 = 960.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 940.0;
const TOP_PANEL: (f64, f64) = (40.0, 380.0);
const BOTTOM_PANEL: (f64, f64) = (450.0, 680.0);
const HEIGHT: f64 = 720.0;
const MAX_POINTS: usize = 1200;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Axis {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Axis { lo, hi, px_lo, px_hi }
    }

    fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    fn padded(lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> Self {
        let pad = 0.05 * (hi - lo).max(1e-12);
        Axis::new(lo - pad, hi + pad, px_lo, px_hi)
    }

    /// Round tick values inside the axis, about five of them.
    fn ticks(&self) -> Vec<f64> {
        let raw = (self.hi - self.lo) / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .into_iter()
            .map(|m| m * mag)
            .find(|s| *s >= raw)
            .unwrap_or(10.0 * mag);
        let first = (self.lo / step).ceil() as i64;
        let last = (self.hi / step).floor() as i64;
        (first..=last).map(|k| k as f64 * step).collect()
    }
}

fn label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn frame(svg: &mut String, xa: &Axis, ya: &Axis, x_name: &str, y_name: &str) {
    let (top, bottom) = (ya.px_hi, ya.px_lo);
    let _ = writeln!(
        svg,
        r##"<rect class="frame" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444"/>"##,
        xa.px_lo,
        top,
        xa.px_hi - xa.px_lo,
        bottom - top
    );
    for t in xa.ticks() {
        let x = xa.map(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{bottom:.2}" x2="{x:.2}" y2="{:.2}" stroke="#444"/><text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"##,
            bottom + 5.0,
            bottom + 18.0,
            label(t)
        );
    }
    for t in ya.ticks() {
        let y = ya.map(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#444"/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"##,
            xa.px_lo - 5.0,
            xa.px_lo,
            xa.px_lo - 8.0,
            y + 4.0,
            label(t)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{x_name}</text>"#,
        0.5 * (xa.px_lo + xa.px_hi),
        bottom + 34.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="start">{y_name}</text>"#,
        xa.px_lo,
        top - 8.0
    );
}

/// The SVG document for `report`.
pub fn render_svg(report: &Report) -> Result<String> {
    let wave = report.wave.as_ref().ok_or(Error::NothingToPlot)?;
    if wave.is_empty() {
        return Err(Error::NothingToPlot);
    }
    let shift = wave.midlevel_crossing().unwrap_or(0.0);
    let n = wave.len();
    let x_lo = wave.x(0) - shift;
    let x_hi = wave.x(n - 1) - shift;
    let (y_lo, y_hi) = wave
        .components
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let xa = Axis::new(x_lo, x_hi, LEFT, RIGHT);
    let ya = Axis::padded(y_lo, y_hi, TOP_PANEL.1, TOP_PANEL.0);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<g id="profile-panel" data-shift="{shift:.6}" data-rim="{:.6}">"#,
        wave.rim
    );
    for (side, a, b) in [
        ("minus", x_lo, (-wave.rim - shift).max(x_lo)),
        ("plus", (wave.rim - shift).min(x_hi), x_hi),
    ] {
        if b > a {
            let _ = writeln!(
                svg,
                r##"<rect class="cylinder-band" data-side="{side}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#bbbbbb" fill-opacity="0.35"/>"##,
                xa.map(a),
                TOP_PANEL.0,
                xa.map(b) - xa.map(a),
                TOP_PANEL.1 - TOP_PANEL.0
            );
        }
    }
    frame(&mut svg, &xa, &ya, "x - x_mid", "U(x)");
    let stride = n.div_ceil(MAX_POINTS).max(1);
    for (i, comp) in wave.components.iter().enumerate() {
        let mut pts = String::new();
        let mut push = |j: usize| {
            let _ = write!(pts, "{:.2},{:.2} ", xa.map(wave.x(j) - shift), ya.map(comp[j]));
        };
        for j in (0..n).step_by(stride) {
            push(j);
        }
        if (n - 1) % stride != 0 {
            push(n - 1);
        }
        let _ = writeln!(
            svg,
            r#"<polyline class="component" data-index="{}" fill="none" stroke="{}" stroke-width="1.6" points="{}"/>"#,
            i + 1,
            COLORS[i % COLORS.len()],
            pts.trim_end()
        );
    }
    for (name, text, value) in [
        ("lambda_minus", "λ⁻", wave.lambda_minus),
        ("lambda_alpha_minus", "λ^{α-}", wave.lambda_alpha_minus),
        ("lambda_plus", "λ⁺", wave.lambda_plus),
    ] {
        let Some(v) = value else { continue };
        let x = v - shift;
        let px = xa.map(x);
        let _ = writeln!(
            svg,
            r##"<line class="marker" id="marker-{name}" data-x="{x:.6}" x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="#555" stroke-dasharray="4 3"/><text x="{:.2}" y="{:.2}" font-size="11">{text}</text>"##,
            TOP_PANEL.0,
            TOP_PANEL.1,
            px + 3.0,
            TOP_PANEL.0 + 14.0
        );
    }
    let _ = writeln!(svg, "</g>");

    if let Some(speed) = &report.speed {
        let tol = speed.tol_e;
        let f = |e: f64| (e / tol).asinh();
        let mut pts: Vec<_> = speed.trace.iter().map(|t| (t.c, f(t.action), t.in_set)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (c_lo, c_hi) = pts
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
        let (e_lo, e_hi) = pts
            .iter()
            .fold((-2.0f64, 2.0f64), |(a, b), p| (a.min(p.1), b.max(p.1)));
        let ca = Axis::padded(c_lo, c_hi, LEFT, RIGHT);
        let ea = Axis::padded(e_lo, e_hi, BOTTOM_PANEL.1, BOTTOM_PANEL.0);
        let _ = writeln!(
            svg,
            r#"<g id="action-panel" data-tol-e="{tol:e}" data-c-star="{:.8}">"#,
            speed.c_star
        );
        let band = 1f64.asinh();
        let _ = writeln!(
            svg,
            r##"<rect class="zero-band" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#9ecae1" fill-opacity="0.5"/>"##,
            ca.px_lo,
            ea.map(band),
            ca.px_hi - ca.px_lo,
            ea.map(-band) - ea.map(band)
        );
        frame(&mut svg, &ca, &ea, "c", "asinh(E / tol_E)");
        let line: Vec<String> = pts
            .iter()
            .map(|(c, e, _)| format!("{:.2},{:.2}", ca.map(*c), ea.map(*e)))
            .collect();
        let _ = writeln!(
            svg,
            r##"<polyline class="trace" fill="none" stroke="#888" stroke-width="1" points="{}"/>"##,
            line.join(" ")
        );
        for (c, e, in_set) in &pts {
            let _ = writeln!(
                svg,
                r#"<circle class="trace-point" data-c="{c:.8}" data-in-set="{in_set}" cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                ca.map(*c),
                ea.map(*e),
                if *in_set { "#d62728" } else { "#1f77b4" }
            );
        }
        let px = ca.map(speed.c_star);
        let _ = writeln!(
            svg,
            r##"<line class="c-star" x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="#000" stroke-dasharray="2 2"/>"##,
            BOTTOM_PANEL.0,
            BOTTOM_PANEL.1
        );
        let _ = writeln!(svg, "</g>");
    }
    let _ = writeln!(svg, "</svg>");
    Ok(svg)
}

/// Writes [`render_svg`] of `report` to `path`.
pub fn emit_plot(report: &Report, path: &Path) -> Result<()> {
    let svg = render_svg(report)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round() {
        let a = Axis::new(-3.7, 12.2, 0.0, 100.0);
        assert_eq!(a.ticks(), vec![0.0, 5.0, 10.0]);
        let b = Axis::new(0.0, 1.0, 0.0, 100.0);
        assert_eq!(b.ticks().len(), 6);
    }

    #[test]
    fn labels_trim() {
        assert_eq!(label(2.5), "2.5");
        assert_eq!(label(-0.0001), "0");
        assert_eq!(label(10.0), "10");
    }
}
