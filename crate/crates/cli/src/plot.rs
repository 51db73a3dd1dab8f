//! Minimal static SVG line charts.

use std::fmt::Write as _;

const PANEL_W: f64 = 460.0;
const PANEL_H: f64 = 320.0;
const MARGIN_L: f64 = 62.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 44.0;
const MAX_POINTS: usize = 1500;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            points,
            dashed: false,
        }
    }
}

pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Same scale on both axes (top-down maps).
    pub equal_aspect: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Tick spacing of 1, 2 or 5 times a power of ten giving about `n` ticks.
fn nice_step(span: f64, n: f64) -> f64 {
    let raw = span / n;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let m = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10().floor()) as usize
    };
    format!("{:.*}", decimals, v)
}

fn bounds(panel: &Panel) -> ([f64; 2], [f64; 2]) {
    let mut x = [f64::INFINITY, f64::NEG_INFINITY];
    let mut y = x;
    for (px, py) in panel.series.iter().flat_map(|s| s.points.iter()) {
        if px.is_finite() && py.is_finite() {
            x = [x[0].min(*px), x[1].max(*px)];
            y = [y[0].min(*py), y[1].max(*py)];
        }
    }
    for r in [&mut x, &mut y] {
        if !r[0].is_finite() {
            *r = [0.0, 1.0];
        }
        if r[1] - r[0] < 1e-9 {
            let pad = r[0].abs().max(1.0) * 0.05;
            *r = [r[0] - pad, r[1] + pad];
        }
        let pad = 0.04 * (r[1] - r[0]);
        *r = [r[0] - pad, r[1] + pad];
    }
    (x, y)
}

fn draw_panel(svg: &mut String, panel: &Panel, ox: f64, oy: f64) {
    let (mut xr, mut yr) = bounds(panel);
    let pw = PANEL_W - MARGIN_L - MARGIN_R;
    let ph = PANEL_H - MARGIN_T - MARGIN_B;
    if panel.equal_aspect {
        let scale = ((xr[1] - xr[0]) / pw).max((yr[1] - yr[0]) / ph);
        let cx = 0.5 * (xr[0] + xr[1]);
        let cy = 0.5 * (yr[0] + yr[1]);
        xr = [cx - 0.5 * scale * pw, cx + 0.5 * scale * pw];
        yr = [cy - 0.5 * scale * ph, cy + 0.5 * scale * ph];
    }
    let x0 = ox + MARGIN_L;
    let y0 = oy + MARGIN_T;
    let sx = |x: f64| x0 + (x - xr[0]) / (xr[1] - xr[0]) * pw;
    let sy = |y: f64| y0 + ph - (y - yr[0]) / (yr[1] - yr[0]) * ph;

    let _ = writeln!(
        svg,
        r##"<rect x="{x0:.1}" y="{y0:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="#444" stroke-width="1"/>"##
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle">{}</text>"#,
        x0 + pw / 2.0,
        oy + 20.0,
        escape(&panel.title)
    );

    let xs = nice_step(xr[1] - xr[0], 5.0);
    let mut t = (xr[0] / xs).ceil() * xs;
    while t <= xr[1] {
        let _ = writeln!(
            svg,
            r##"<line x1="{0:.1}" y1="{1:.1}" x2="{0:.1}" y2="{2:.1}" stroke="#ddd"/><text x="{0:.1}" y="{3:.1}" font-size="11" text-anchor="middle">{4}</text>"##,
            sx(t),
            y0,
            y0 + ph,
            y0 + ph + 14.0,
            fmt_tick(t, xs)
        );
        t += xs;
    }
    let ys = nice_step(yr[1] - yr[0], 5.0);
    let mut t = (yr[0] / ys).ceil() * ys;
    while t <= yr[1] {
        let _ = writeln!(
            svg,
            r##"<line x1="{0:.1}" y1="{1:.1}" x2="{2:.1}" y2="{1:.1}" stroke="#ddd"/><text x="{3:.1}" y="{4:.1}" font-size="11" text-anchor="end">{5}</text>"##,
            x0,
            sy(t),
            x0 + pw,
            x0 - 5.0,
            sy(t) + 4.0,
            fmt_tick(t, ys)
        );
        t += ys;
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#,
        x0 + pw / 2.0,
        oy + PANEL_H - 8.0,
        escape(&panel.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate({:.1},{:.1}) rotate(-90)" font-size="12" text-anchor="middle">{}</text>"#,
        ox + 16.0,
        y0 + ph / 2.0,
        escape(&panel.y_label)
    );

    for (i, s) in panel.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let stride = s.points.len().div_ceil(MAX_POINTS).max(1);
        let mut path = String::new();
        for (x, y) in s
            .points
            .iter()
            .step_by(stride)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
        {
            let _ = write!(path, "{:.1},{:.1} ", sx(*x), sy(*y));
        }
        let dash = if s.dashed { r#" stroke-dasharray="5,4""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.3"{dash}/>"#,
            path.trim_end()
        );
        let ly = y0 + 12.0 + 14.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.1}" y="{:.1}" font-size="11">{}</text>"#,
            x0 + 8.0,
            x0 + 26.0,
            x0 + 30.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
}

/// Lays panels out row by row, `columns` per row.
pub fn render(panels: &[Panel], columns: usize) -> String {
    let columns = columns.max(1);
    let rows = panels.len().div_ceil(columns).max(1);
    let width = PANEL_W * columns.min(panels.len().max(1)) as f64;
    let height = PANEL_H * rows as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, panel) in panels.iter().enumerate() {
        let ox = PANEL_W * (i % columns) as f64;
        let oy = PANEL_H * (i / columns) as f64;
        draw_panel(&mut svg, panel, ox, oy);
    }
    svg.push_str("</svg>\n");
    svg
}
