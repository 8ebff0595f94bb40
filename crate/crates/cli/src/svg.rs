//! Minimal SVG scatter of a front in objective space.

use std::fmt::Write;

use moapg_core::io::FrontTable;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 48.0;

/// `F_1` against `F_2` (or against the row index when `m = 1`), one
/// `<circle class="marker">` per row.
pub fn front_scatter(table: &FrontTable, title: &str) -> String {
    let pts: Vec<(f64, f64)> = table
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| match r.f.as_slice() {
            [f1, f2, ..] => (*f1, *f2),
            [f1] => (i as f64, *f1),
            [] => (i as f64, 0.0),
        })
        .collect();
    let (xlab, ylab) = if table.num_objectives >= 2 {
        ("F_1", "F_2")
    } else {
        ("index", "F_1")
    };
    let (x0, x1) = range(pts.iter().map(|p| p.0));
    let (y0, y1) = range(pts.iter().map(|p| p.1));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, "  <title>{}</title>", escape(title));
    let _ = writeln!(s, r#"  <rect width="100%" height="100%" fill="white"/>"#);
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        s,
        r#"  <path d="M{l} {t} L{l} {b} L{r} {b}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"  <text x="{}" y="{}" text-anchor="middle" font-size="12">{xlab} [{} .. {}]</text>"#,
        WIDTH / 2.0,
        HEIGHT - MARGIN / 3.0,
        fmt_tick(x0),
        fmt_tick(x1)
    );
    let _ = writeln!(
        s,
        r#"  <text x="{}" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 {} {})">{ylab} [{} .. {}]</text>"#,
        MARGIN / 3.0,
        HEIGHT / 2.0,
        MARGIN / 3.0,
        HEIGHT / 2.0,
        fmt_tick(y0),
        fmt_tick(y1)
    );
    for (x, y) in &pts {
        let _ = writeln!(
            s,
            r#"  <circle class="marker" cx="{:.3}" cy="{:.3}" r="2.5" fill="steelblue"/>"#,
            sx(*x),
            sy(*y)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Finite `[lo, hi]` with `hi > lo`, padded when all values coincide.
fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * (1.0 + lo.abs()) {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn fmt_tick(v: f64) -> String {
    format!("{v:.4}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
