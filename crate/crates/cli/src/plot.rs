//! Deterministic SVG plots: Bland-Altman scatter and ROC curve.

use std::fmt::Write;

use ecgparam::agreement::BlandAltman;
use ecgparam::{DiagnosticReport, PairedMeasurements};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 64.0;
const TICKS: usize = 5;

/// Data-to-pixel mapping for one plot area.
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Frame {
        let widen = |(lo, hi): (f64, f64)| {
            if hi > lo {
                let pad = (hi - lo) * 0.05;
                (lo - pad, hi + pad)
            } else {
                (lo - 1.0, hi + 1.0)
            }
        };
        Frame { x: widen(x), y: widen(y) }
    }

    fn exact(x: (f64, f64), y: (f64, f64)) -> Frame {
        Frame { x, y }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn open(svg: &mut String, title: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(svg: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (l, r) = (MARGIN, WIDTH - MARGIN);
    let (t, b) = (MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<rect x="{l:.2}" y="{t:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    for i in 0..=TICKS {
        let frac = i as f64 / TICKS as f64;
        let xv = f.x.0 + frac * (f.x.1 - f.x.0);
        let yv = f.y.0 + frac * (f.y.1 - f.y.0);
        let (px, py) = (f.px(xv), f.py(yv));
        let _ = writeln!(svg, r#"<line x1="{px:.2}" y1="{b:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, b + 5.0);
        let _ = writeln!(
            svg,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{xv:.2}</text>"#,
            b + 18.0
        );
        let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{py:.2}" x2="{l:.2}" y2="{py:.2}" stroke="black"/>"#, l - 5.0);
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.2}</text>"#,
            l - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 20.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
}

fn hline(svg: &mut String, f: &Frame, y: f64, colour: &str, label: &str) {
    let py = f.py(y);
    let _ = writeln!(
        svg,
        r#"<line x1="{:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="{colour}" stroke-width="1.5" stroke-dasharray="6,4"/>"#,
        MARGIN,
        WIDTH - MARGIN
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="end" fill="{colour}">{}</text>"#,
        WIDTH - MARGIN - 4.0,
        py - 4.0,
        escape(label)
    );
}

/// Differences (a - b) against pair means, with a red dashed mean line and
/// black dashed limits of agreement.
pub fn bland_altman_svg(pairs: &PairedMeasurements, ba: &BlandAltman) -> String {
    let points: Vec<(f64, f64)> = pairs
        .pairs
        .iter()
        .map(|p| ((p.a_value_ms + p.b_value_ms) / 2.0, p.a_value_ms - p.b_value_ms))
        .collect();
    let xs = points.iter().map(|p| p.0);
    let x_range = (xs.clone().fold(f64::INFINITY, f64::min), xs.fold(f64::NEG_INFINITY, f64::max));
    let ys = points.iter().map(|p| p.1).chain([ba.loa_low, ba.loa_high]);
    let y_range = (ys.clone().fold(f64::INFINITY, f64::min), ys.fold(f64::NEG_INFINITY, f64::max));
    let f = Frame::new(x_range, y_range);

    let mut svg = String::new();
    open(&mut svg, &format!("Bland-Altman: {} ({} vs {})", pairs.parameter, pairs.source_a, pairs.source_b));
    axes(
        &mut svg,
        &f,
        &format!("Mean of two measurements (ms), n = {}", ba.n),
        "Difference a - b (ms)",
    );
    for (x, y) in &points {
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="steelblue" fill-opacity="0.7"/>"#,
            f.px(*x),
            f.py(*y)
        );
    }
    hline(&mut svg, &f, ba.mean_diff, "red", &format!("Mean {:.2}", ba.mean_diff));
    hline(&mut svg, &f, ba.loa_high, "black", &format!("+{} SD {:.2}", ba.z, ba.loa_high));
    hline(&mut svg, &f, ba.loa_low, "black", &format!("-{} SD {:.2}", ba.z, ba.loa_low));
    svg.push_str("</svg>\n");
    svg
}

pub fn roc_svg(report: &DiagnosticReport) -> String {
    let f = Frame::exact((0.0, 1.0), (0.0, 1.0));
    let mut svg = String::new();
    open(&mut svg, &format!("ROC: {} (AUC {:.3})", report.condition, report.auc));
    axes(&mut svg, &f, "1 - Specificity", "Sensitivity");
    let _ = writeln!(
        svg,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4,4"/>"#,
        f.px(0.0),
        f.py(0.0),
        f.px(1.0),
        f.py(1.0)
    );
    let path: Vec<String> = report
        .roc
        .iter()
        .map(|[x, y]| format!("{:.2},{:.2}", f.px(*x), f.py(*y)))
        .collect();
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="firebrick" stroke-width="2"/>"#,
        path.join(" ")
    );
    svg.push_str("</svg>\n");
    svg
}
