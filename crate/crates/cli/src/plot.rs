//! Minimal SVG charts and the green→red→blue intensity ramp.

use std::fmt::Write as _;

/// Intensity ramp: 0 → green, 0.5 → red, 1 → blue.
pub fn ramp(x: f64) -> (u8, u8, u8) {
    let x = if x.is_finite() { x.clamp(0.0, 1.0) } else { 0.0 };
    let lerp = |a: f64, b: f64, t: f64| (a + (b - a) * t).round() as u8;
    if x <= 0.5 {
        let t = x / 0.5;
        (lerp(0.0, 220.0, t), lerp(180.0, 0.0, t), 0)
    } else {
        let t = (x - 0.5) / 0.5;
        (lerp(220.0, 0.0, t), 0, lerp(0.0, 255.0, t))
    }
}

pub fn hex(rgb: (u8, u8, u8)) -> String {
    format!("#{:02x}{:02x}{:02x}", rgb.0, rgb.1, rgb.2)
}

const PALETTE: [&str; 6] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Lines,
    Markers,
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub style: Style,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.05 };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

impl Chart {
    pub fn to_svg(&self) -> String {
        let ty = |y: f64| {
            if self.log_y {
                y.max(f64::MIN_POSITIVE).log10()
            } else {
                y
            }
        };
        let all = || self.series.iter().flat_map(|s| s.points.iter());
        let (x0, x1) = bounds(all().map(|p| p.0));
        let (y0, y1) = bounds(all().filter(|p| !self.log_y || p.1 > 0.0).map(|p| ty(p.1)));
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + ph - (ty(y) - y0) / (y1 - y0) * ph;

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="22" font-size="15" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            svg,
            r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##
        );
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = x0 + f * (x1 - x0);
            let yv = y0 + f * (y1 - y0);
            let label_y = if self.log_y { format!("1e{yv:.1}") } else { tick(yv) };
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
                sx(xv),
                TOP + ph + 18.0,
                tick(xv)
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                TOP + ph - f * ph + 4.0,
                label_y
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            H - 14.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let pts: Vec<(f64, f64)> = s
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite() && (!self.log_y || p.1 > 0.0))
                .map(|&(x, y)| (sx(x), sy(y)))
                .collect();
            match self.style {
                Style::Lines => {
                    let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                    let _ = writeln!(
                        svg,
                        r#"<polyline class="series" data-name="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                        escape(&s.name),
                        coords.join(" ")
                    );
                }
                Style::Markers => {
                    let _ = writeln!(
                        svg,
                        r#"<g class="series" data-name="{}" fill="{color}">"#,
                        escape(&s.name)
                    );
                    for (x, y) in &pts {
                        let _ = writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3"/>"#);
                    }
                    let _ = writeln!(svg, "</g>");
                }
            }
            let ly = TOP + 14.0 + 18.0 * k as f64;
            let lx = W - RIGHT + 12.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/><text x="{}" y="{}">{}</text>"#,
                lx + 18.0,
                lx + 24.0,
                ly + 4.0,
                escape(&s.name)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e5).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Top view of the sole with each sensor filled by its ramp color.
///
/// `cells` are (label, x, y, intensity 0..1) in a unit box, x to the right
/// and y from toe (0) to heel (1).
pub fn sole_map(title: &str, cells: &[(String, f64, f64, f64, String)]) -> String {
    let (w, h) = (260.0, 520.0);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r##"<path d="M130 40 C 210 40 225 150 205 250 C 190 330 200 420 180 470 C 165 505 95 505 80 470 C 60 420 75 330 60 250 C 40 150 50 40 130 40 Z" fill="#f4f4f4" stroke="#888"/>"##
    );
    for (label, x, y, intensity, caption) in cells {
        let cx = 50.0 + x * 160.0;
        let cy = 60.0 + y * 410.0;
        let fill = hex(ramp(*intensity));
        let _ = writeln!(
            svg,
            r##"<rect class="sensor" data-channel="{}" x="{}" y="{}" width="30" height="30" fill="{fill}" stroke="#222"/>"##,
            escape(label),
            cx - 15.0,
            cy - 15.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{cx}" y="{}" text-anchor="middle">{}</text>"#,
            cy + 28.0,
            escape(caption)
        );
    }
    svg.push_str("</svg>\n");
    svg
}
