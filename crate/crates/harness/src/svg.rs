//! Minimal log-log error plot: points, fitted line and its slope.

use std::fmt::Write;

use crate::converge::{ConvergenceRow, LineFit};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;

fn decades(lo: f64, hi: f64) -> (f64, f64) {
    let (a, b) = (lo.log10().floor(), hi.log10().ceil());
    if a == b {
        (a, a + 1.0)
    } else {
        (a, b)
    }
}

pub fn render(title: &str, rows: &[ConvergenceRow], fit: Option<&LineFit>) -> String {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.abs_error.filter(|e| *e > 0.0).map(|e| (r.n as f64, e)))
        .collect();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    if pts.is_empty() {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">no data</text>"#, WIDTH / 2.0, HEIGHT / 2.0);
        s.push_str("</svg>\n");
        return s;
    }
    let nmin = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let nmax = pts.iter().map(|p| p.0).fold(0.0, f64::max);
    let emin = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let emax = pts.iter().map(|p| p.1).fold(0.0, f64::max);
    let (x0, x1) = (nmin.ln() - 0.1, nmax.ln() + 0.1);
    let (d0, d1) = decades(emin, emax);
    let px = |n: f64| MARGIN + (n.ln() - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |e: f64| HEIGHT - MARGIN - (e.log10() - d0) / (d1 - d0) * (HEIGHT - 2.0 * MARGIN);

    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for k in d0 as i32..=d1 as i32 {
        let y = py(10f64.powi(k));
        let _ = writeln!(s, r##"<line x1="{MARGIN}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/>"##, WIDTH - MARGIN);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">1e{k}</text>"#, MARGIN - 6.0, y + 4.0);
    }
    for r in rows {
        let x = px(r.n as f64);
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, HEIGHT - MARGIN + 18.0, r.n);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">n</text>"#, WIDTH / 2.0, HEIGHT - 14.0);
    let _ = writeln!(s, r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">absolute error</text>"#, HEIGHT / 2.0, HEIGHT / 2.0);
    for (n, e) in &pts {
        let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="steelblue"/>"#, px(*n), py(*e));
    }
    if let Some(f) = fit {
        let line = |n: f64| (f.intercept + f.slope * n.ln()).exp();
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="firebrick" stroke-width="1.5"/>"#,
            px(nmin),
            py(line(nmin)),
            px(nmax),
            py(line(nmax))
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" fill="firebrick">slope {:.3} ({} points)</text>"#,
            WIDTH - MARGIN - 8.0,
            MARGIN + 18.0,
            f.slope,
            f.points
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
