//! Minimal SVG writer. Coordinates are printed with two decimals so output
//! bytes depend only on the data.

use std::fmt::Write as _;

pub const WIDTH: f64 = 720.0;
pub const HEIGHT: f64 = 420.0;

/// Plot margins: left, right, top, bottom.
const MARGIN: (f64, f64, f64, f64) = (64.0, 24.0, 36.0, 48.0);

pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

pub fn colour(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// One panel of a figure, `WIDTH × HEIGHT` in its own coordinates.
#[derive(Debug, Default, Clone)]
pub struct Panel {
    body: String,
}

impl Panel {
    pub fn new(title: &str) -> Self {
        let mut p = Self::default();
        p.text(WIDTH / 2.0, 22.0, title, "middle", 15.0);
        p
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64, opacity: f64) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="{width:.2}" stroke-opacity="{opacity:.3}"/>"#
        );
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str, width: f64) {
        if pts.is_empty() {
            return;
        }
        let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width:.2}"/>"#,
            coords.join(" ")
        );
    }

    pub fn polygon(&mut self, pts: &[(f64, f64)], fill: &str, stroke: &str) {
        let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            self.body,
            r#"<polygon points="{}" fill="{fill}" stroke="{stroke}" stroke-width="0.60"/>"#,
            coords.join(" ")
        );
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, opacity: f64) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}" fill-opacity="{opacity:.3}"/>"#
        );
    }

    pub fn text(&mut self, x: f64, y: f64, s: &str, anchor: &str, size: f64) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-size="{size:.1}">{}</text>"#,
            escape(s)
        );
    }

    pub fn text_rotated(&mut self, x: f64, y: f64, s: &str, angle: f64, size: f64) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" transform="rotate({angle:.1} {x:.2} {y:.2})" text-anchor="middle" font-size="{size:.1}">{}</text>"#,
            escape(s)
        );
    }
}

/// Linear map from data ranges onto the plotting area of a panel.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Frame {
    /// Ranges are widened when degenerate so the map stays finite.
    pub fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let fix = |(lo, hi): (f64, f64)| {
            if hi - lo > 1e-12 {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        Self { x: fix(x), y: fix(y) }
    }

    pub fn left() -> f64 {
        MARGIN.0
    }

    pub fn right() -> f64 {
        WIDTH - MARGIN.1
    }

    pub fn top() -> f64 {
        MARGIN.2
    }

    pub fn bottom() -> f64 {
        HEIGHT - MARGIN.3
    }

    pub fn px(&self, x: f64) -> f64 {
        Self::left() + (x - self.x.0) / (self.x.1 - self.x.0) * (Self::right() - Self::left())
    }

    pub fn py(&self, y: f64) -> f64 {
        Self::bottom() - (y - self.y.0) / (self.y.1 - self.y.0) * (Self::bottom() - Self::top())
    }

    /// Box, five ticks per axis and axis labels.
    pub fn axes(&self, p: &mut Panel, xlabel: &str, ylabel: &str) {
        let (l, r, t, b) = (Self::left(), Self::right(), Self::top(), Self::bottom());
        p.polyline(&[(l, t), (l, b), (r, b), (r, t), (l, t)], "#000000", 1.0);
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = self.x.0 + f * (self.x.1 - self.x.0);
            let yv = self.y.0 + f * (self.y.1 - self.y.0);
            let (xp, yp) = (self.px(xv), self.py(yv));
            p.line(xp, b, xp, b + 5.0, "#000000", 1.0, 1.0);
            p.text(xp, b + 18.0, &tick(xv, (self.x.1 - self.x.0) / 4.0), "middle", 11.0);
            p.line(l - 5.0, yp, l, yp, "#000000", 1.0, 1.0);
            p.text(l - 8.0, yp + 4.0, &tick(yv, (self.y.1 - self.y.0) / 4.0), "end", 11.0);
        }
        p.text((l + r) / 2.0, HEIGHT - 8.0, xlabel, "middle", 12.0);
        p.text_rotated(14.0, (t + b) / 2.0, ylabel, -90.0, 12.0);
    }

    /// Legend entries stacked in the top-right corner.
    pub fn legend(&self, p: &mut Panel, entries: &[(String, &str)]) {
        let x = Self::right() - 150.0;
        for (i, (name, c)) in entries.iter().enumerate() {
            let y = Self::top() + 14.0 + 16.0 * i as f64;
            p.line(x, y - 4.0, x + 18.0, y - 4.0, c, 2.0, 1.0);
            p.text(x + 24.0, y, name, "start", 11.0);
        }
    }
}

/// Tick label with as many decimals as the tick spacing needs.
fn tick(v: f64, step: f64) -> String {
    if v.abs() < 1e-9 * step {
        return "0".to_string();
    }
    if !(1e-4..1e6).contains(&step) {
        return format!("{v:.2e}");
    }
    let decimals = (1 - step.log10().floor() as i32).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Panels stacked vertically into one document.
pub fn document(panels: &[Panel]) -> String {
    let h = HEIGHT * panels.len() as f64;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {WIDTH:.0} {h:.0}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n"
    );
    for (i, p) in panels.iter().enumerate() {
        let _ = writeln!(out, r#"<g transform="translate(0 {:.0})">"#, HEIGHT * i as f64);
        out.push_str(&p.body);
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}
