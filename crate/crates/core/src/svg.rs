//! Minimal hand-rolled SVG output for the two report plots. The markup is a
//! pure function of the inputs, so files are identical across reruns.

use std::fmt::Write as _;

use crate::compare::RankedModel;
use crate::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct Scale {
    lo: f64,
    hi: f64,
    pixel_lo: f64,
    pixel_hi: f64,
}

impl Scale {
    fn map(&self, v: f64) -> f64 {
        let t = if self.hi == self.lo { 0.5 } else { (v - self.lo) / (self.hi - self.lo) };
        self.pixel_lo + t * (self.pixel_hi - self.pixel_lo)
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

fn axis_label(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if a >= 1e4 || a < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        title
    );
    s
}

fn y_axis(s: &mut String, scale: &Scale, label: &str) {
    let x = MARGIN_LEFT;
    let _ = writeln!(
        s,
        r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="black"/>"#,
        MARGIN_TOP,
        HEIGHT - MARGIN_BOTTOM
    );
    for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let v = scale.lo + frac * (scale.hi - scale.lo);
        let y = scale.map(v);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{}" x2="{x}" y2="{}" stroke="black"/>"#,
            x - 5.0,
            fmt(y),
            fmt(y)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            x - 8.0,
            fmt(y + 4.0),
            axis_label(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        fmt(HEIGHT / 2.0),
        fmt(HEIGHT / 2.0),
        label
    );
}

fn x_axis_line(s: &mut String) {
    let y = HEIGHT - MARGIN_BOTTOM;
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN_LEFT}" y1="{y}" x2="{}" y2="{y}" stroke="black"/>"#,
        WIDTH - MARGIN_RIGHT
    );
}

fn vertical_scale(lo: f64, hi: f64) -> Scale {
    let pad = if hi > lo { 0.08 * (hi - lo) } else { 0.5 * hi.abs().max(1.0) };
    Scale {
        lo: lo - pad,
        hi: hi + pad,
        pixel_lo: HEIGHT - MARGIN_BOTTOM,
        pixel_hi: MARGIN_TOP,
    }
}

/// Model-comparison chart: one column per model, two points with one-standard
/// -error bars (WAIC left, cross-validation right).
pub fn comparison_svg(models: &[RankedModel]) -> Result<String> {
    if models.is_empty() {
        return Err(Error::invalid("comparison plot needs at least one model"));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for m in models {
        lo = lo.min(m.waic - m.waic_se).min(m.loo - m.loo_se);
        hi = hi.max(m.waic + m.waic_se).max(m.loo + m.loo_se);
    }
    let scale = vertical_scale(lo, hi);

    let mut s = header("Model comparison");
    y_axis(&mut s, &scale, "criterion (deviance scale)");
    x_axis_line(&mut s);

    let span = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let step = span / models.len() as f64;
    for (idx, m) in models.iter().enumerate() {
        let center = MARGIN_LEFT + (idx as f64 + 0.5) * step;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            fmt(center),
            HEIGHT - MARGIN_BOTTOM + 20.0,
            m.label
        );
        for (offset, value, se, class, color) in [
            (-14.0, m.waic, m.waic_se, "waic", PALETTE[0]),
            (14.0, m.loo, m.loo_se, "loo", PALETTE[1]),
        ] {
            let x = center + offset;
            let y = scale.map(value);
            let y_lo = scale.map(value - se);
            let y_hi = scale.map(value + se);
            let _ = writeln!(s, r#"<g class="errbar" stroke="{color}">"#);
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
                fmt(x),
                fmt(y_lo),
                fmt(x),
                fmt(y_hi)
            );
            for yy in [y_lo, y_hi] {
                let _ = writeln!(
                    s,
                    r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
                    fmt(x - 5.0),
                    fmt(yy),
                    fmt(x + 5.0),
                    fmt(yy)
                );
            }
            let _ = writeln!(s, "</g>");
            let _ = writeln!(
                s,
                r#"<circle class="{class}" cx="{}" cy="{}" r="4" fill="{color}"/>"#,
                fmt(x),
                fmt(y)
            );
        }
    }

    // legend
    for (i, (name, color)) in [("WAIC", PALETTE[0]), ("LOO", PALETTE[1])].iter().enumerate() {
        let x = WIDTH - MARGIN_RIGHT - 130.0 + i as f64 * 70.0;
        let _ = writeln!(s, r#"<circle cx="{}" cy="{}" r="4" fill="{color}"/>"#, fmt(x), MARGIN_TOP);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            fmt(x + 8.0),
            MARGIN_TOP + 4.0,
            name
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Per-observation diagnostic chart: observation index on the x axis, one
/// marker series per measure.
pub fn divergence_svg(series: &[(String, Vec<f64>)], value_label: &str) -> Result<String> {
    if series.is_empty() || series[0].1.is_empty() {
        return Err(Error::invalid("diagnostic plot needs at least one series"));
    }
    let n = series[0].1.len();
    if series.iter().any(|(_, v)| v.len() != n) {
        return Err(Error::invalid("all series must have the same length"));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (_, v) in series {
        for x in v {
            if !x.is_finite() {
                return Err(Error::numerical("plot values must be finite".to_string()));
            }
            lo = lo.min(*x);
            hi = hi.max(*x);
        }
    }
    lo = lo.min(0.0);
    let scale = vertical_scale(lo, hi);

    let mut s = header("Case diagnostics by observation");
    y_axis(&mut s, &scale, value_label);
    x_axis_line(&mut s);

    let span = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let step = span / n as f64;
    let tick_every = (n / 10).max(1);
    for i in (0..n).step_by(tick_every) {
        let x = MARGIN_LEFT + (i as f64 + 0.5) * step;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"#,
            fmt(x),
            HEIGHT - MARGIN_BOTTOM + 16.0,
            i + 1
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">observation</text>"#,
        fmt(MARGIN_LEFT + span / 2.0),
        HEIGHT - 18.0
    );

    for (k, (name, values)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let _ = writeln!(s, r#"<g class="series" fill="{color}">"#);
        for (i, v) in values.iter().enumerate() {
            let x = MARGIN_LEFT + (i as f64 + 0.5) * step;
            let y = scale.map(*v);
            let _ = writeln!(s, r#"<circle cx="{}" cy="{}" r="3"/>"#, fmt(x), fmt(y));
        }
        let _ = writeln!(s, "</g>");
        let lx = WIDTH - MARGIN_RIGHT - 130.0;
        let ly = MARGIN_TOP + 18.0 * k as f64;
        let _ = writeln!(s, r#"<circle cx="{}" cy="{}" r="4" fill="{color}"/>"#, fmt(lx), fmt(ly));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            fmt(lx + 8.0),
            fmt(ly + 4.0),
            name
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
