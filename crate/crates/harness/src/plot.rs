//! Static SVG line charts of simple regret with shaded ±1 SE bands.

use std::fmt::Write as _;

use crate::aggregate::AggregateRow;

/// Values at or below this are drawn at the floor on a log axis.
pub const LOG_FLOOR: f64 = 1e-12;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_Y: f64 = 40.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub rows: Vec<AggregateRow>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Scale {
    t_lo: f64,
    t_hi: f64,
    y_lo: f64,
    y_hi: f64,
    log_y: bool,
}

impl Scale {
    fn value(&self, y: f64) -> f64 {
        if self.log_y {
            y.max(LOG_FLOOR).log10()
        } else {
            y
        }
    }

    fn px(&self, t: f64, y: f64) -> (f64, f64) {
        let w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let h = HEIGHT - 2.0 * MARGIN_Y;
        let x = MARGIN_LEFT + (t - self.t_lo) / (self.t_hi - self.t_lo) * w;
        let y = MARGIN_Y + (self.y_hi - self.value(y)) / (self.y_hi - self.y_lo) * h;
        (x, y)
    }
}

fn scale(series: &[Series], log_y: bool) -> Scale {
    let rows = series.iter().flat_map(|s| &s.rows);
    let (mut t_lo, mut t_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in rows {
        t_lo = t_lo.min(r.t as f64);
        t_hi = t_hi.max(r.t as f64);
        for y in [r.mean_simple - r.se_simple, r.mean_simple + r.se_simple] {
            let v = if log_y { y.max(LOG_FLOOR).log10() } else { y };
            y_lo = y_lo.min(v);
            y_hi = y_hi.max(v);
        }
    }
    if !t_lo.is_finite() {
        (t_lo, t_hi, y_lo, y_hi) = (0.0, 1.0, 0.0, 1.0);
    }
    if t_hi <= t_lo {
        t_hi = t_lo + 1.0;
    }
    if y_hi <= y_lo {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    Scale { t_lo, t_hi, y_lo, y_hi, log_y }
}

fn points(pts: impl Iterator<Item = (f64, f64)>) -> String {
    pts.map(|(x, y)| format!("{x:.2},{y:.2}")).collect::<Vec<_>>().join(" ")
}

/// Renders the simple-regret curves of `series`. Each series contributes
/// exactly two polylines: the mean line and the closed ±1 SE band.
pub fn render_svg(series: &[Series], log_y: bool) -> String {
    let sc = scale(series, log_y);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, y0) = (MARGIN_LEFT, HEIGHT - MARGIN_Y);
    let x1 = WIDTH - MARGIN_RIGHT;
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{MARGIN_Y}" stroke="black"/>"#);
    let y_label = if log_y { "log10 simple regret" } else { "simple regret" };
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">round t</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 8.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">{y_label}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (v, anchor_y) in [(sc.y_lo, y0), (sc.y_hi, MARGIN_Y)] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{anchor_y:.2}" font-size="10" text-anchor="end">{v:.3}</text>"#,
            x0 - 4.0
        );
    }
    for (v, anchor_x) in [(sc.t_lo, x0), (sc.t_hi, x1)] {
        let _ = writeln!(
            svg,
            r#"<text x="{anchor_x:.2}" y="{:.2}" font-size="10" text-anchor="middle">{v}</text>"#,
            y0 + 14.0
        );
    }
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let t = |r: &AggregateRow| r.t as f64;
        let upper = s.rows.iter().map(|r| sc.px(t(r), r.mean_simple + r.se_simple));
        let lower = s.rows.iter().rev().map(|r| sc.px(t(r), r.mean_simple - r.se_simple));
        let mut band: Vec<(f64, f64)> = upper.chain(lower).collect();
        if let Some(&first) = band.first() {
            band.push(first);
        }
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            points(band.into_iter())
        );
        let line = s.rows.iter().map(|r| sc.px(t(r), r.mean_simple));
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            points(line)
        );
        let ly = MARGIN_Y + 16.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            x1 + 10.0,
            x1 + 30.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
            x1 + 36.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(v: f64, se: f64) -> Series {
        Series {
            label: "flat".into(),
            rows: (1..=4)
                .map(|t| AggregateRow {
                    t,
                    mean_simple: v,
                    se_simple: se,
                    mean_cum: v * t as f64,
                    se_cum: 0.0,
                    n_runs: 3,
                })
                .collect(),
        }
    }

    #[test]
    fn one_series_gives_line_and_band() {
        let svg = render_svg(&[flat(0.5, 0.0)], false);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("fill-opacity"));
    }

    #[test]
    fn zero_regret_is_clamped_on_log_axis() {
        let svg = render_svg(&[flat(0.0, 0.0)], true);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
        // flat at the floor exponent, padded by half a decade
        assert!(svg.contains(">-12.500<") && svg.contains(">-11.500<"));
    }

    #[test]
    fn labels_are_escaped() {
        let mut s = flat(1.0, 0.1);
        s.label = "a<b & c".into();
        assert!(render_svg(&[s], false).contains("a&lt;b &amp; c"));
    }
}
