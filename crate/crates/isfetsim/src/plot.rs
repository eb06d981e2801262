//! Static SVG of V_O against pH, one polyline per temperature.
//!
//! Output depends only on the samples: coordinates are printed with fixed
//! precision and series are ordered by temperature.

use std::fmt::Write;

use isfetsim_core::analysis::{distinct, Sample};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;

/// Tick positions covering `[lo, hi]` with a 1/2/5 step.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10().floor()) as usize
    };
    let s = format!("{v:.decimals$}");
    if s.trim_start_matches('-')
        .chars()
        .all(|c| c == '0' || c == '.')
    {
        "0".to_string()
    } else {
        s
    }
}

/// Blue for the coldest series through to red for the hottest.
fn color(i: usize, n: usize) -> String {
    let f = if n > 1 {
        i as f64 / (n - 1) as f64
    } else {
        0.0
    };
    let hue = 240.0 * (1.0 - f);
    format!("hsl({hue:.0},70%,45%)")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn render_svg(samples: &[Sample], probe: &str) -> Result<String, String> {
    let ok: Vec<&Sample> = samples
        .iter()
        .filter(|s| s.converged && s.ph.is_some())
        .collect();
    if ok.is_empty() {
        return Err("plot needs converged points with pH values".into());
    }
    let temps = distinct(ok.iter().map(|s| s.temp_c));
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &ok {
        let ph = s.ph.unwrap_or_default();
        x0 = x0.min(ph);
        x1 = x1.max(ph);
        y0 = y0.min(s.vo);
        y1 = y1.max(s.vo);
    }
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let pad = ((y1 - y0) * 0.05).max(1e-3);
    y0 -= pad;
    y1 += pad;

    let pw = WIDTH - LEFT - RIGHT;
    let ph_ = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph_;

    let mut svg = String::new();
    let w = &mut svg;
    // writing to a String cannot fail
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        w,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        w,
        r#"<text x="{:.1}" y="28" text-anchor="middle" font-size="15">Output voltage vs pH</text>"#,
        LEFT + pw / 2.0
    );
    let _ = writeln!(
        w,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph_}" fill="none" stroke="#333"/>"##
    );

    let xt = ticks(x0, x1);
    let xstep = if xt.len() > 1 { xt[1] - xt[0] } else { 1.0 };
    for &t in &xt {
        let x = sx(t);
        let _ = writeln!(
            w,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP + ph_,
            TOP + ph_ + 5.0,
            TOP + ph_ + 20.0,
            tick_label(t, xstep)
        );
    }
    let yt = ticks(y0, y1);
    let ystep = if yt.len() > 1 { yt[1] - yt[0] } else { 1.0 };
    for &t in &yt {
        let y = sy(t);
        let _ = writeln!(
            w,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            tick_label(t, ystep)
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">pH</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 25.0
    );
    let _ = writeln!(
        w,
        r#"<text x="25" y="{:.1}" text-anchor="middle" transform="rotate(-90 25 {:.1})">{} (V)</text>"#,
        TOP + ph_ / 2.0,
        TOP + ph_ / 2.0,
        escape(probe)
    );

    for (i, &t) in temps.iter().enumerate() {
        let mut pts: Vec<(f64, f64)> = ok
            .iter()
            .filter(|s| (s.temp_c - t).abs() <= 1e-6 * t.abs().max(1.0))
            .map(|s| (s.ph.unwrap_or_default(), s.vo))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let c = color(i, temps.len());
        let _ = writeln!(
            w,
            r#"<polyline data-temp-c="{t}" fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = TOP + 10.0 + 16.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            w,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{c}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{t} °C</text>"#,
            lx + 20.0,
            lx + 25.0,
            ly + 4.0
        );
    }
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}
