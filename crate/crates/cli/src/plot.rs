//! Plain SVG line charts of `log10(mean_err)` against the round index.

use std::fmt::Write;

use anyhow::{bail, Result};
use dppa_core::algorithms::TrajectoryRow;

pub const WIDTH: f64 = 960.0;
pub const HEIGHT: f64 = 540.0;

const LEFT: f64 = 80.0;
const RIGHT: f64 = 220.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

pub struct Series<'a> {
    pub label: String,
    pub rows: &'a [TrajectoryRow],
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Step from {1, 2, 5} × 10^k giving at most `max_ticks` ticks over `span`.
fn nice_step(span: f64, max_ticks: usize) -> f64 {
    let raw = span / max_ticks as f64;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| span / s <= max_ticks as f64)
        .unwrap_or(10.0 * mag)
}

fn fmt_tick(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Renders one polyline per series. Non-finite values (a zero error, or an
/// overflowed round) are left out, so a diverged run ends at the last
/// representable point.
pub fn render_svg(series: &[Series<'_>], title: &str) -> Result<String> {
    if series.is_empty() {
        bail!("nothing to plot");
    }
    let points: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            s.rows
                .iter()
                .map(|r| (r.t as f64, r.err.mean_err.log10()))
                .filter(|p| p.1.is_finite())
                .collect()
        })
        .collect();
    let all = points.iter().flatten();
    let t_max = all.clone().fold(0.0_f64, |a, p| a.max(p.0)).max(1.0);
    let (mut y_lo, mut y_hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.1), hi.max(p.1))
    });
    if !y_lo.is_finite() {
        (y_lo, y_hi) = (-1.0, 1.0);
    }
    y_lo = y_lo.floor();
    y_hi = y_hi.ceil();
    if y_hi - y_lo < 1.0 {
        y_hi = y_lo + 1.0;
    }

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |t: f64| LEFT + pw * t / t_max;
    let sy = |y: f64| TOP + ph * (y_hi - y) / (y_hi - y_lo);

    let mut out = String::new();
    let w = &mut out;
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )?;
    writeln!(
        w,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    )?;
    writeln!(
        w,
        r#"<text x="{}" y="28" text-anchor="middle" font-size="16">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    )?;
    writeln!(
        w,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    )?;

    let xs = nice_step(t_max, 8);
    let mut t = 0.0;
    while t <= t_max + 1e-9 * t_max {
        let x = sx(t);
        writeln!(
            w,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/>"##,
            TOP,
            TOP + ph
        )?;
        writeln!(
            w,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph + 18.0,
            fmt_tick(t)
        )?;
        t += xs;
    }
    let ys = nice_step(y_hi - y_lo, 10).max(1.0);
    let mut y = (y_lo / ys).ceil() * ys;
    while y <= y_hi + 1e-9 {
        let yy = sy(y);
        writeln!(
            w,
            r##"<line x1="{LEFT}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#ddd"/>"##,
            LEFT + pw
        )?;
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            yy + 4.0,
            fmt_tick(y)
        )?;
        y += ys;
    }
    writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">round t</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0
    )?;
    writeln!(
        w,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">log10 mean error</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    )?;

    for (i, (s, pts)) in series.iter().zip(&points).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if !pts.is_empty() {
            let path: Vec<String> = pts
                .iter()
                .map(|&(t, y)| format!("{:.2},{:.2}", sx(t), sy(y)))
                .collect();
            writeln!(
                w,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            )?;
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + pw + 15.0;
        writeln!(
            w,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/>"#,
            lx + 25.0
        )?;
        writeln!(
            w,
            r#"<text x="{}" y="{}">{}</text>"#,
            lx + 32.0,
            ly + 4.0,
            escape(&s.label)
        )?;
    }
    writeln!(w, "</svg>")?;
    Ok(out)
}
