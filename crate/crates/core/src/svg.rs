//! Static, self-contained SVG of a comparison: prediction curve, median
//! markers and interquartile band on a log-scale y axis. One panel per metric.

use std::fmt::Write;

use crate::compare::{ComparisonReport, ComparisonRow};
use crate::config::MetricSpec;

const WIDTH: f64 = 640.0;
const PANEL_HEIGHT: f64 = 400.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 48.0;

struct Frame {
    top: f64,
    t_min: f64,
    t_max: f64,
    log_lo: f64,
    log_hi: f64,
}

impl Frame {
    fn x(&self, t: f64) -> f64 {
        let span = (self.t_max - self.t_min).max(1.0);
        LEFT + (t - self.t_min) / span * (WIDTH - LEFT - RIGHT)
    }

    fn y(&self, value: f64) -> f64 {
        let h = PANEL_HEIGHT - TOP - BOTTOM;
        let frac = (value.max(1e-300).log10() - self.log_lo) / (self.log_hi - self.log_lo);
        self.top + TOP + (1.0 - frac.clamp(0.0, 1.0)) * h
    }
}

fn panel(out: &mut String, rows: &[&ComparisonRow], metric: MetricSpec, index: usize) {
    let positive: Vec<f64> = rows
        .iter()
        .flat_map(|r| [r.predicted, r.median, r.p25, r.p75])
        .flatten()
        .filter(|v| *v > 0.0 && v.is_finite())
        .collect();
    let lo = positive.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = positive.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (log_lo, log_hi) = if positive.is_empty() {
        (-3.0, 0.0)
    } else {
        let a = lo.log10().floor();
        let b = hi.log10().ceil();
        (a, if b > a { b } else { a + 1.0 })
    };
    let t_min = rows.iter().map(|r| r.t).min().unwrap_or(1) as f64;
    let t_max = rows.iter().map(|r| r.t).max().unwrap_or(1) as f64;
    let f = Frame {
        top: index as f64 * PANEL_HEIGHT,
        t_min,
        t_max,
        log_lo,
        log_hi,
    };
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (f.top + TOP, f.top + PANEL_HEIGHT - BOTTOM);

    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="15" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        f.top + 24.0,
        metric.name()
    );
    let _ = writeln!(
        out,
        r##"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="#333"/>"##,
        x1 - x0,
        y1 - y0
    );
    // decade gridlines
    let mut decade = log_lo as i32;
    while decade as f64 <= log_hi {
        let y = f.y(10f64.powi(decade));
        let _ = writeln!(
            out,
            r##"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" font-size="12" text-anchor="end">1e{decade}</text>"##,
            x0 - 6.0,
            y + 4.0
        );
        decade += 1;
    }
    for r in rows {
        let x = f.x(r.t as f64);
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
            y1 + 18.0,
            r.t
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">iteration t</text>"#,
        (x0 + x1) / 2.0,
        y1 + 38.0
    );

    // interquartile band
    let band: Vec<&&ComparisonRow> = rows.iter().filter(|r| r.p25.is_some() && r.p75.is_some()).collect();
    if !band.is_empty() {
        let mut pts: Vec<String> = band
            .iter()
            .map(|r| format!("{:.2},{:.2}", f.x(r.t as f64), f.y(r.p75.unwrap())))
            .collect();
        pts.extend(
            band.iter()
                .rev()
                .map(|r| format!("{:.2},{:.2}", f.x(r.t as f64), f.y(r.p25.unwrap()))),
        );
        let _ = writeln!(
            out,
            r##"<polygon points="{}" fill="#1f77b4" fill-opacity="0.2" stroke="none"/>"##,
            pts.join(" ")
        );
    }
    // prediction curve
    let curve: Vec<String> = rows
        .iter()
        .filter_map(|r| r.predicted.map(|p| format!("{:.2},{:.2}", f.x(r.t as f64), f.y(p))))
        .collect();
    if !curve.is_empty() {
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#d62728" stroke-width="2"/>"##,
            curve.join(" ")
        );
    }
    // median markers
    for r in rows {
        if let Some(m) = r.median {
            let (x, y) = (f.x(r.t as f64), f.y(m));
            let _ = writeln!(
                out,
                r##"<path d="M{:.2},{y:.2}H{:.2}M{x:.2},{:.2}V{:.2}" stroke="#1f77b4" stroke-width="2"/>"##,
                x - 5.0,
                x + 5.0,
                y - 5.0,
                y + 5.0
            );
        }
    }
}

/// Render the report. Self-contained: no scripts, fonts or external references.
pub fn comparison_svg(report: &ComparisonReport, title: &str) -> String {
    let metrics = report.metrics();
    let height = PANEL_HEIGHT * metrics.len().max(1) as f64 + 30.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, "<!-- {} config_hash={} -->", crate::TOOL_VERSION, escape(&report.config_hash));
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{} (config {}): line = prediction, + = median, band = IQR, log scale</text>"#,
        WIDTH / 2.0,
        height - 10.0,
        escape(title),
        escape(&report.config_hash)
    );
    for (i, metric) in metrics.iter().enumerate() {
        let rows: Vec<&ComparisonRow> = report.rows.iter().filter(|r| r.metric == *metric).collect();
        panel(&mut out, &rows, *metric, i);
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
