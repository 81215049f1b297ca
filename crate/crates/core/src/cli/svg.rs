//! Minimal SVG plot of `log10(error)` against the evaluation index.
//! Model-free segments are solid blue, model-based ones dashed orange, and every
//! accepted step gets a circle.

use std::fmt::Write as _;

use crate::solver::{Event, Regime, TraceRecord};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;
const FLOOR: f64 = 1e-16;

fn log_error(r: &TraceRecord) -> f64 {
    if r.error.is_finite() {
        r.error.max(FLOOR).log10()
    } else {
        FLOOR.log10()
    }
}

pub fn render_svg(records: &[TraceRecord], title: &str) -> String {
    let points: Vec<&TraceRecord> = records
        .iter()
        .filter(|r| matches!(r.event, Event::Initial | Event::Accept))
        .collect();
    let x_max = records.last().map_or(1, |r| r.eval_index.max(1)) as f64;
    let (mut y_lo, mut y_hi) = points
        .iter()
        .map(|r| log_error(r))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !y_lo.is_finite() {
        (y_lo, y_hi) = (0.0, 1.0);
    }
    y_lo = y_lo.floor();
    y_hi = y_hi.ceil().max(y_lo + 1.0);
    let px = |e: u64| MARGIN + (e as f64 / x_max) * (WIDTH - 2.0 * MARGIN);
    let py = |v: f64| HEIGHT - MARGIN - (v - y_lo) / (y_hi - y_lo) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        out,
        "<style>.mf{{stroke:#1f77b4;fill:none}}.mb{{stroke:#ff7f0e;fill:none;stroke-dasharray:4 3}}\
         circle.mf{{fill:#1f77b4;stroke:none}}circle.mb{{fill:#ff7f0e;stroke:none}}\
         text{{font:12px sans-serif}}</style>"
    );
    let _ = writeln!(out, r#"<text x="{MARGIN}" y="24">{}</text>"#, escape(title));
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN);
    let _ = writeln!(
        out,
        r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" stroke="black" fill="none"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}">function evaluations ({})</text>"#,
        WIDTH / 2.0 - 60.0,
        HEIGHT - 20.0,
        x_max as u64
    );
    let mut tick = y_lo;
    while tick <= y_hi {
        let _ = writeln!(out, r#"<text x="10" y="{:.1}">1e{}</text>"#, py(tick) + 4.0, tick as i64);
        tick += 1.0;
    }

    for pair in points.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let class = regime_class(b.regime);
        let _ = writeln!(
            out,
            r#"<path class="{class}" d="M{:.2} {:.2} L{:.2} {:.2} L{:.2} {:.2}"/>"#,
            px(a.eval_index),
            py(log_error(a)),
            px(b.eval_index),
            py(log_error(a)),
            px(b.eval_index),
            py(log_error(b)),
        );
    }
    for r in points.iter().filter(|r| r.event == Event::Accept) {
        let _ = writeln!(
            out,
            r#"<circle class="{}" cx="{:.2}" cy="{:.2}" r="2"/>"#,
            regime_class(r.regime),
            px(r.eval_index),
            py(log_error(r))
        );
    }
    out.push_str("</svg>\n");
    out
}

fn regime_class(r: Regime) -> &'static str {
    match r {
        Regime::ModelBased => "mb",
        Regime::ModelFree => "mf",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
