//! Minimal self-contained SVG charts: scatter groups with least-squares
//! lines, and line overlays.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 44.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Points,
    Line,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub mark: Mark,
    /// Draw the least-squares line through the points.
    pub fit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

/// Intercept and slope of the least-squares line; `None` without two
/// distinct abscissae.
pub fn ols(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let unit = raw / mag;
    let nice = if unit < 1.5 {
        1.0
    } else if unit < 3.5 {
        2.0
    } else if unit < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

/// Axis range padded to whole ticks, plus the tick step.
fn axis(values: impl Iterator<Item = f64>) -> (f64, f64, f64) {
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = if lo.abs() > 1e-12 { lo.abs() * 0.1 } else { 0.5 };
        lo -= pad;
        hi += pad;
    }
    let step = nice_step(hi - lo);
    ((lo / step).floor() * step, (hi / step).ceil() * step, step)
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

pub fn render(chart: &Chart) -> String {
    let finite = |p: &&(f64, f64)| p.0.is_finite() && p.1.is_finite();
    let all = || chart.series.iter().flat_map(|s| s.points.iter().filter(finite));
    let (x0, x1, xs) = axis(all().map(|p| p.0));
    let (y0, y1, ys) = axis(all().map(|p| p.1));
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, LEFT + pw / 2.0, escape(&chart.title)).unwrap();

    s.push_str("<g class=\"axes\" stroke=\"#999\" stroke-width=\"1\">\n");
    let nx = ((x1 - x0) / xs).round() as usize;
    for i in 0..=nx {
        let v = x0 + i as f64 * xs;
        writeln!(s, r##"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="#eee"/>"##, px(v), TOP, TOP + ph).unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" stroke="none" fill="black">{}</text>"#,
            px(v),
            TOP + ph + 16.0,
            tick_label(v, xs)
        )
        .unwrap();
    }
    let ny = ((y1 - y0) / ys).round() as usize;
    for i in 0..=ny {
        let v = y0 + i as f64 * ys;
        writeln!(s, r##"<line x1="{0:.2}" y1="{1:.2}" x2="{2:.2}" y2="{1:.2}" stroke="#eee"/>"##, LEFT, py(v), LEFT + pw).unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" stroke="none" fill="black">{}</text>"#,
            LEFT - 6.0,
            py(v) + 4.0,
            tick_label(v, ys)
        )
        .unwrap();
    }
    writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none"/>"#).unwrap();
    s.push_str("</g>\n");
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 16.0,
        escape(&chart.x_label)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="18" y="{0:.2}" text-anchor="middle" transform="rotate(-90 18 {0:.2})">{1}</text>"#,
        TOP + ph / 2.0,
        escape(&chart.y_label)
    )
    .unwrap();

    for (k, series) in chart.series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let pts: Vec<(f64, f64)> = series.points.iter().filter(finite).copied().collect();
        writeln!(s, r#"<g class="series" data-name="{}" fill="{colour}" stroke="{colour}">"#, escape(&series.name)).unwrap();
        match series.mark {
            Mark::Points => {
                for (x, y) in &pts {
                    writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill-opacity="0.7" stroke="none"/>"#, px(*x), py(*y)).unwrap();
                }
            }
            Mark::Line => {
                let path: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
                writeln!(s, r#"<polyline points="{}" fill="none" stroke-width="1.5"/>"#, path.join(" ")).unwrap();
            }
        }
        if series.fit {
            if let Some((a, b)) = ols(&pts) {
                let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
                let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
                writeln!(
                    s,
                    r#"<line class="fit" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke-width="2"/>"#,
                    px(lo),
                    py((a + b * lo).clamp(y0, y1)),
                    px(hi),
                    py((a + b * hi).clamp(y0, y1))
                )
                .unwrap();
            }
        }
        let ly = TOP + 10.0 + 20.0 * k as f64;
        let lx = LEFT + pw + 16.0;
        writeln!(s, r#"<rect x="{lx:.2}" y="{:.2}" width="12" height="12" stroke="none"/>"#, ly - 9.0).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{ly:.2}" stroke="none" fill="black">{}</text>"#, lx + 18.0, escape(&series.name)).unwrap();
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}
