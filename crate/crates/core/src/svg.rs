//! Static SVG rendering of a [`Figure3Bundle`].
//!
//! Every data-bearing mark is a `<path>`: one per scatter point, one per
//! ellipse, density curve and regression line, and one for the identity
//! line. Axes, ticks and legend use `<line>`, `<rect>` and `<text>` only.

use std::fmt::Write;

use crate::figure::{Axis, Figure3Bundle, Group};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 720.0;
/// Left and bottom gutters hold the marginal densities.
const GUTTER: f64 = 110.0;
const MARGIN: f64 = 20.0;
const POINT_RADIUS: f64 = 1.2;

fn group_color(g: Group) -> &'static str {
    match g {
        Group::Boy => "#1b9e4b",
        Group::Girl => "#e7298a",
    }
}

fn dash(g: Group) -> &'static str {
    match g {
        Group::Boy => "",
        Group::Girl => r#" stroke-dasharray="6 4""#,
    }
}

fn axis_color(a: Axis) -> &'static str {
    match a {
        Axis::Y0 => "#d62728",
        Axis::Y1 => "#7b3294",
    }
}

/// Maps data coordinates (kg) onto the square plot panel. Both axes share
/// one range so the identity line is at 45 degrees.
struct Frame {
    lo: f64,
    hi: f64,
}

impl Frame {
    fn left() -> f64 {
        GUTTER
    }
    fn right() -> f64 {
        WIDTH - MARGIN
    }
    fn top() -> f64 {
        MARGIN
    }
    fn bottom() -> f64 {
        HEIGHT - GUTTER
    }
    fn sx(&self, v: f64) -> f64 {
        Self::left() + (v - self.lo) / (self.hi - self.lo) * (Self::right() - Self::left())
    }
    fn sy(&self, v: f64) -> f64 {
        Self::bottom() - (v - self.lo) / (self.hi - self.lo) * (Self::bottom() - Self::top())
    }
}

fn frame(bundle: &Figure3Bundle) -> Frame {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut take = |v: f64| {
        lo = lo.min(v);
        hi = hi.max(v);
    };
    for p in &bundle.points {
        take(p.y0);
        take(p.y1);
    }
    for e in &bundle.ellipses {
        for v in &e.boundary {
            take(v[0]);
            take(v[1]);
        }
    }
    if !lo.is_finite() {
        return Frame { lo: 0.0, hi: 1.0 };
    }
    let pad = ((hi - lo) * 0.03).max(1e-9);
    Frame {
        lo: lo - pad,
        hi: hi + pad,
    }
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let unit = if r < 1.5 {
        1.0
    } else if r < 3.5 {
        2.0
    } else if r < 7.5 {
        5.0
    } else {
        10.0
    };
    unit * mag
}

/// Renders the bundle as one self-contained SVG document.
pub fn render_svg(bundle: &Figure3Bundle) -> String {
    let f = frame(bundle);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    // Axes and ticks.
    let (l, r, t, b) = (Frame::left(), Frame::right(), Frame::top(), Frame::bottom());
    let _ = writeln!(s, r#"<g stroke="black" stroke-width="1">"#);
    let _ = writeln!(s, r#"<line x1="{l:.2}" y1="{b:.2}" x2="{r:.2}" y2="{b:.2}"/>"#);
    let _ = writeln!(s, r#"<line x1="{l:.2}" y1="{b:.2}" x2="{l:.2}" y2="{t:.2}"/>"#);
    let step = nice_step(f.hi - f.lo);
    let mut tick = (f.lo / step).ceil() * step;
    let mut labels = String::new();
    while tick <= f.hi {
        let (x, y) = (f.sx(tick), f.sy(tick));
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{b:.2}" x2="{x:.2}" y2="{:.2}"/>"#, b + 4.0);
        let _ = writeln!(s, r#"<line x1="{l:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}"/>"#, l - 4.0);
        let _ = writeln!(
            labels,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            b + 16.0,
            tick_label(tick, step)
        );
        let _ = writeln!(
            labels,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            l - 6.0,
            y + 4.0,
            tick_label(tick, step)
        );
        tick += step;
    }
    let _ = writeln!(s, "</g>");
    s.push_str(&labels);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Baseline weight Y0 (kg)</text>"#,
        (l + r) / 2.0,
        HEIGHT - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">Follow-up weight Y1 (kg)</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0
    );

    // Scatter.
    let _ = writeln!(s, r#"<g stroke="none" fill-opacity="0.35">"#);
    for p in &bundle.points {
        let (x, y) = (f.sx(p.y0), f.sy(p.y1));
        let rr = POINT_RADIUS;
        let _ = writeln!(
            s,
            r#"<path fill="{}" d="M{:.2} {y:.2}a{rr} {rr} 0 1 0 {} 0a{rr} {rr} 0 1 0 -{} 0Z"/>"#,
            group_color(p.group),
            x - rr,
            2.0 * rr,
            2.0 * rr
        );
    }
    let _ = writeln!(s, "</g>");

    // Identity line.
    if bundle.identity_line {
        let _ = writeln!(
            s,
            r##"<path fill="none" stroke="#555555" stroke-width="1" d="M{:.2} {:.2}L{:.2} {:.2}"/>"##,
            f.sx(f.lo),
            f.sy(f.lo),
            f.sx(f.hi),
            f.sy(f.hi)
        );
    }

    // Ellipses.
    for e in &bundle.ellipses {
        let mut d = String::new();
        for (i, v) in e.boundary.iter().enumerate() {
            let _ = write!(d, "{}{:.2} {:.2}", if i == 0 { "M" } else { "L" }, f.sx(v[0]), f.sy(v[1]));
        }
        d.push('Z');
        let _ = writeln!(
            s,
            r#"<path fill="none" stroke="{}" stroke-width="1.5"{} d="{d}"/>"#,
            group_color(e.group),
            dash(e.group)
        );
    }

    // Regression lines across the panel.
    for line in &bundle.reglines {
        let (x0, x1) = (f.lo, f.hi);
        let (y0, y1) = (line.intercept + line.slope * x0, line.intercept + line.slope * x1);
        let _ = writeln!(
            s,
            r#"<path fill="none" stroke="{}" stroke-width="2"{} d="M{:.2} {:.2}L{:.2} {:.2}"/>"#,
            group_color(line.group),
            dash(line.group),
            f.sx(x0),
            f.sy(y0),
            f.sx(x1),
            f.sy(y1)
        );
    }

    // Marginal densities: Y0 along the bottom gutter, Y1 along the left.
    let peak = bundle
        .densities
        .iter()
        .flat_map(|d| d.density.iter().copied())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let depth = GUTTER - 45.0;
    for d in &bundle.densities {
        let mut path = String::new();
        for (i, (g, v)) in d.grid.iter().zip(&d.density).enumerate() {
            let h = v / peak * depth;
            let (x, y) = match d.axis {
                Axis::Y0 => (f.sx(*g), HEIGHT - 8.0 - 14.0 - h),
                Axis::Y1 => (30.0 + h, f.sy(*g)),
            };
            let _ = write!(path, "{}{x:.2} {y:.2}", if i == 0 { "M" } else { "L" });
        }
        let _ = writeln!(
            s,
            r#"<path fill="none" stroke="{}" stroke-width="1.5"{} d="{path}"/>"#,
            axis_color(d.axis),
            dash(d.group)
        );
    }

    // Legend.
    let (lx, ly) = (Frame::left() + 12.0, Frame::top() + 14.0);
    for (i, g) in [Group::Boy, Group::Girl].into_iter().enumerate() {
        let y = ly + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="2"{}/>"#,
            lx + 24.0,
            group_color(g),
            dash(g)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 30.0,
            y + 4.0,
            if g == Group::Boy { "Boys" } else { "Girls" }
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 { 0 } else { (-step.log10().floor()) as usize };
    let text = format!("{v:.decimals$}");
    if text.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        "0".to_string()
    } else {
        text
    }
}
