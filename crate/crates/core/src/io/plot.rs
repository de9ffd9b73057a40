//! Minimal deterministic SVG line plots.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Curve {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotOptions {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_log: bool,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;
const TICKS: usize = 5;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = values
            .map(|v| if log { v.log10() } else { v })
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            lo -= 0.5;
            hi += 0.5;
        }
        Self { lo, hi, log }
    }

    /// Position in `[0, 1]`.
    fn unit(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn tick_label(&self, u: f64) -> String {
        let v = self.lo + u * (self.hi - self.lo);
        if self.log {
            format!("1e{v:.2}")
        } else {
            format!("{v:.3e}")
        }
    }
}

pub fn render_svg(curves: &[Curve], opts: &PlotOptions) -> Result<String> {
    if curves.is_empty() {
        return Err(Error::Plot("empty series".into()));
    }
    for c in curves {
        if c.points.len() < 2 {
            return Err(Error::Plot(format!("curve `{}` needs at least 2 points", c.label)));
        }
        if c.points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::Plot(format!("curve `{}` has non-finite points", c.label)));
        }
        if opts.log_log && c.points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
            return Err(Error::LogAxis);
        }
    }
    let all = || curves.iter().flat_map(|c| c.points.iter());
    let xa = Axis::fit(all().map(|p| p.0), opts.log_log);
    let ya = Axis::fit(all().map(|p| p.1), opts.log_log);
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let px = |x: f64| MARGIN_L + xa.unit(x) * pw;
    let py = |y: f64| MARGIN_T + (1.0 - ya.unit(y)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        MARGIN_L + pw / 2.0,
        escape(&opts.title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
    );
    for i in 0..=TICKS {
        let u = i as f64 / TICKS as f64;
        let x = MARGIN_L + u * pw;
        let y = MARGIN_T + (1.0 - u) * ph;
        let bottom = MARGIN_T + ph;
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{bottom:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            bottom + 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bottom + 16.0,
            xa.tick_label(u)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN_L}" y2="{y:.2}" stroke="black"/>"#,
            MARGIN_L - 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_L - 6.0,
            y + 4.0,
            ya.tick_label(u)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_L + pw / 2.0,
        HEIGHT - 10.0,
        escape(&opts.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
        MARGIN_T + ph / 2.0,
        MARGIN_T + ph / 2.0,
        escape(&opts.y_label)
    );
    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = c.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = MARGIN_T + 14.0 * (i as f64 + 1.0);
        let lx = WIDTH - MARGIN_R + 10.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#,
            ly - 4.0,
            lx + 18.0,
            ly - 4.0
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#, lx + 22.0, escape(&c.label));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_plot(curves: &[Curve], opts: &PlotOptions, path: &Path) -> Result<()> {
    let svg = render_svg(curves, opts)?;
    super::csv::write_atomic(path, &svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Vec<Curve> {
        vec![Curve::new("a", vec![(0.0, 1.0), (1.0, 2.0)])]
    }

    #[test]
    fn two_point_line_has_one_polyline() {
        let svg = render_svg(&line(), &PlotOptions::default()).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let opts = PlotOptions {
            title: "t<1>".into(),
            ..Default::default()
        };
        assert_eq!(render_svg(&line(), &opts).unwrap(), render_svg(&line(), &opts).unwrap());
    }

    #[test]
    fn log_axis_rejects_zero() {
        let curves = vec![Curve::new("a", vec![(1.0, 0.0), (2.0, 1.0)])];
        let opts = PlotOptions {
            log_log: true,
            ..Default::default()
        };
        let e = render_svg(&curves, &opts).unwrap_err();
        assert_eq!(e.to_string(), "nonpositive value on log axis");
    }

    #[test]
    fn bad_series_rejected() {
        assert!(render_svg(&[], &PlotOptions::default()).is_err());
        let short = vec![Curve::new("a", vec![(0.0, 1.0)])];
        assert!(render_svg(&short, &PlotOptions::default()).is_err());
        let nan = vec![Curve::new("a", vec![(0.0, 1.0), (1.0, f64::NAN)])];
        assert!(render_svg(&nan, &PlotOptions::default()).is_err());
    }
}
