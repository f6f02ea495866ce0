//! Minimal deterministic SVG line charts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{CliError, CliResult};
use crate::simulate::CoverageRow;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// About `target` round tick positions covering `[lo, hi]`.
fn nice_ticks(lo: f64, hi: f64, target: usize) -> (Vec<f64>, usize) {
    let raw = (hi - lo) / target as f64;
    let magnitude = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * magnitude)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * magnitude);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    ((first..=last).map(|i| i as f64 * step).collect(), decimals)
}

/// Renders `series` on shared axes; fails on empty input.
pub fn render_svg(chart: &Chart, series: &[Series]) -> CliResult<String> {
    let points: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    if points.is_empty() {
        return Err(CliError::Parse("cannot draw a chart without data".into()));
    }
    let xmap = |x: f64| if chart.log_x { x.log10() } else { x };
    let (mut x0, mut x1) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
        (a.min(xmap(p.0)), b.max(xmap(p.0)))
    });
    let (mut y0, mut y1) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    if x1 - x0 <= 0.0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let pad = if y1 - y0 > 0.0 { 0.08 * (y1 - y0) } else { 0.5 * y0.abs().max(1.0) };
    y0 -= pad;
    y1 += pad;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (xmap(x) - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="800" height="500" viewBox="0 0 800 500" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="800" height="500" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="28" text-anchor="middle" font-size="16">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(&chart.title)
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT:.1}" y="{TOP:.1}" width="{plot_w:.1}" height="{plot_h:.1}" fill="none" stroke="black"/>"#
    );

    let (yticks, ydec) = nice_ticks(y0, y1, 6);
    for y in yticks {
        let py = sy(y);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.1}" y1="{py:.1}" x2="{LEFT:.1}" y2="{py:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{y:.ydec$}</text>"##,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0
        );
    }
    let xticks: Vec<(f64, String)> = if chart.log_x {
        let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs.into_iter().map(|x| (x, format!("{x}"))).collect()
    } else {
        let (ticks, dec) = nice_ticks(x0, x1, 6);
        ticks.into_iter().map(|x| (x, format!("{x:.dec$}"))).collect()
    };
    let bottom = TOP + plot_h;
    for (x, label) in xticks {
        let px = sx(x);
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.1}" y1="{bottom:.1}" x2="{px:.1}" y2="{:.1}" stroke="black"/><text x="{px:.1}" y="{:.1}" text-anchor="middle">{label}</text>"#,
            bottom + 5.0,
            bottom + 20.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0,
        escape(&chart.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(&chart.y_label)
    );

    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let path: Vec<String> =
            s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#,
            path.join(" ")
        );
        for &(x, y) in &s.points {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(x), sy(y));
        }
        let ly = TOP + 15.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 25.0,
            lx + 30.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn write_svg(chart: &Chart, series: &[Series], path: &Path) -> CliResult<()> {
    let svg = render_svg(chart, series)?;
    fs::write(path, svg).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Bounds-versus-n and level-versus-n charts for coverage rows.
pub fn coverage_charts(rows: &[CoverageRow], alpha: f64) -> [(Chart, Vec<Series>); 2] {
    let along = |f: fn(&CoverageRow) -> f64| rows.iter().map(|r| (r.n as f64, f(r))).collect();
    let bounds = (
        Chart {
            title: "Mean confidence bounds".into(),
            x_label: "n".into(),
            y_label: "objective value".into(),
            log_x: true,
        },
        vec![
            Series { label: "mean lower".into(), points: along(|r| r.mean_lower), dashed: false },
            Series { label: "mean upper".into(), points: along(|r| r.mean_upper), dashed: false },
            Series { label: "lambda0".into(), points: along(|r| r.lambda0), dashed: true },
        ],
    );
    let level = (
        Chart {
            title: "Empirical level".into(),
            x_label: "n".into(),
            y_label: "non-coverage".into(),
            log_x: true,
        },
        vec![
            Series { label: "empirical".into(), points: along(|r| r.empirical_level), dashed: false },
            Series {
                label: "nominal".into(),
                points: rows.iter().map(|r| (r.n as f64, alpha)).collect(),
                dashed: true,
            },
        ],
    );
    [bounds, level]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart() -> Chart {
        Chart { title: "t <1>".into(), x_label: "x".into(), y_label: "y".into(), log_x: false }
    }

    #[test]
    fn rendering_is_deterministic_and_structured() {
        let series = vec![Series {
            label: "a & b".into(),
            points: vec![(1.0, 2.0), (2.0, 3.5), (3.0, 3.0)],
            dashed: false,
        }];
        let a = render_svg(&chart(), &series).unwrap();
        assert_eq!(a, render_svg(&chart(), &series).unwrap());
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(a.contains(r#"viewBox="0 0 800 500""#));
        assert!(a.contains("a &amp; b") && a.contains("t &lt;1&gt;"));
        assert_eq!(a.matches("<circle").count(), 3);
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(render_svg(&chart(), &[]).is_err());
        let empty = Series { label: "e".into(), points: vec![], dashed: false };
        assert!(render_svg(&chart(), &[empty]).is_err());
    }

    #[test]
    fn flat_series_still_render() {
        let flat = Series { label: "c".into(), points: vec![(5.0, 1.0)], dashed: true };
        let svg = render_svg(&Chart { log_x: true, ..chart() }, &[flat]).unwrap();
        assert!(!svg.contains("NaN"));
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn ticks_are_round() {
        let (ticks, decimals) = nice_ticks(0.013, 0.087, 6);
        assert_eq!(decimals, 2);
        assert_eq!(ticks.len(), 4);
        assert!((ticks[0] - 0.02).abs() < 1e-12);
        assert!(ticks.windows(2).all(|w| ((w[1] - w[0]) - 0.02).abs() < 1e-12));
    }
}
