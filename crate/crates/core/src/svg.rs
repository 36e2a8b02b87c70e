//! Minimal log–log scatter plots.

use std::fmt::Write;

use crate::experiment::loglog_fit;

const W: f64 = 640.0;
const H: f64 = 440.0;
const PAD: f64 = 60.0;

pub(crate) fn loglog_plot(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    points: &[(f64, f64)],
) -> String {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .map(|&(x, y)| (x.log10(), y.log10()))
        .collect();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let (x0, y0, x1, y1) = (PAD, H - PAD, W - PAD / 2.0, PAD / 1.5);
    let _ = writeln!(
        s,
        r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" stroke="black" fill="none"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13">log10 {}</text>"#,
        (x0 + x1) / 2.0,
        H - 18.0,
        escape(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 {})">log10 {}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
    if pts.is_empty() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13">no positive data</text>"#,
            W / 2.0,
            H / 2.0
        );
        s.push_str("</svg>\n");
        return s;
    }
    let (mut lx, mut hx, mut ly, mut hy) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &pts {
        lx = lx.min(x);
        hx = hx.max(x);
        ly = ly.min(y);
        hy = hy.max(y);
    }
    if hx - lx < 1e-9 {
        lx -= 0.5;
        hx += 0.5;
    }
    if hy - ly < 1e-9 {
        ly -= 0.5;
        hy += 0.5;
    }
    let px = |x: f64| x0 + (x - lx) / (hx - lx) * (x1 - x0);
    let py = |y: f64| y0 - (y - ly) / (hy - ly) * (y0 - y1);
    for (v, anchor) in [(lx, "start"), (hx, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="{anchor}" font-family="sans-serif" font-size="11">{v:.2}</text>"#,
            px(v),
            y0 + 16.0
        );
    }
    for v in [ly, hy] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="11">{v:.2}</text>"#,
            x0 - 6.0,
            py(v) + 4.0
        );
    }
    for &(x, y) in &pts {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.1}" cy="{:.1}" r="3.5" fill="steelblue"/>"#,
            px(x),
            py(y)
        );
    }
    let raw: Vec<(f64, f64)> = pts
        .iter()
        .map(|&(x, y)| (10f64.powf(x), 10f64.powf(y)))
        .collect();
    if let Some(fit) = loglog_fit(&raw) {
        let (ya, yb) = (
            fit.intercept + fit.slope * lx,
            fit.intercept + fit.slope * hx,
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="firebrick" stroke-dasharray="5,4"/>"#,
            px(lx),
            py(ya),
            px(hx),
            py(yb)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="start" font-family="sans-serif" font-size="13" fill="firebrick">slope {:.3} (R² {:.3})</text>"#,
            x0 + 10.0,
            y1 + 14.0,
            fit.slope,
            fit.r2
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
