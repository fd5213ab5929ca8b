//! Standalone SVG heatmaps of scan verdicts.

use std::fmt::Write;

use super::output::GridTable;

#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub label: String,
    pub x: f64,
    pub y: f64,
}

impl Marker {
    pub fn new(label: &str, x: f64, y: f64) -> Self {
        Self {
            label: label.to_string(),
            x,
            y,
        }
    }

    /// Parses `label,x,y`.
    pub fn parse(spec: &str) -> Result<Self, String> {
        let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("marker `{spec}` must be `label,x,y`"));
        }
        let coord = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| format!("marker `{spec}`: bad number `{s}`"))
        };
        Ok(Self::new(parts[0], coord(parts[1])?, coord(parts[2])?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvgStyle {
    pub width: u32,
    pub height: u32,
    pub stable_color: String,
    pub unstable_color: String,
    pub markers: Vec<Marker>,
}

impl Default for SvgStyle {
    fn default() -> Self {
        Self {
            width: 800,
            height: 600,
            stable_color: "#2f5d9e".into(),
            unstable_color: "#f4f4f4".into(),
            markers: Vec::new(),
        }
    }
}

/// GRW and Adler benchmark points in `(log10 r_c[m], log10 λ[1/s])`.
pub fn benchmark_markers() -> Vec<Marker> {
    vec![Marker::new("GRW", -7.0, -17.0), Marker::new("Adler", -7.0, -8.0)]
}

const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 56.0;
const TICKS: usize = 5;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders one `<rect>` per cell plus frame, ticks, axis labels and markers.
/// Output depends only on the inputs.
pub fn render_svg(table: &GridTable, style: &SvgStyle) -> Result<String, String> {
    if style.width == 0 || style.height == 0 {
        return Err("SVG dimensions must be positive".into());
    }
    let (w, h) = (f64::from(style.width), f64::from(style.height));
    let plot_w = w - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = h - MARGIN_TOP - MARGIN_BOTTOM;
    if plot_w <= 0.0 || plot_h <= 0.0 {
        return Err(format!(
            "SVG {}x{} leaves no room for the plot",
            style.width, style.height
        ));
    }
    let (x0, x1) = table.x_bounds();
    let (y0, y1) = table.y_bounds();
    let px = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| MARGIN_TOP + (y1 - y) / (y1 - y0) * plot_h;
    let cell_w = plot_w / table.nx() as f64;
    let cell_h = plot_h / table.ny() as f64;

    let mut s = String::with_capacity(96 * table.stable.len() + 4096);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        style.width, style.height, style.width, style.height
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
    for iy in 0..table.ny() {
        // row iy = 0 is the lowest y, drawn at the bottom
        let top = MARGIN_TOP + (table.ny() - 1 - iy) as f64 * cell_h;
        for ix in 0..table.nx() {
            let fill = if table.stable[iy * table.nx() + ix] {
                &style.stable_color
            } else {
                &style.unstable_color
            };
            let left = MARGIN_LEFT + ix as f64 * cell_w;
            let _ = writeln!(
                s,
                r#"<rect x="{left:.3}" y="{top:.3}" width="{cell_w:.3}" height="{cell_h:.3}" fill="{fill}"/>"#
            );
        }
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_LEFT:.3}" y="{MARGIN_TOP:.3}" width="{plot_w:.3}" height="{plot_h:.3}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(s, r#"<g font-family="sans-serif" font-size="12">"#);
    for i in 0..TICKS {
        let f = i as f64 / (TICKS - 1) as f64;
        let xv = x0 + f * (x1 - x0);
        let xp = px(xv);
        let base = MARGIN_TOP + plot_h;
        let _ = writeln!(
            s,
            r#"<line x1="{xp:.3}" y1="{base:.3}" x2="{xp:.3}" y2="{:.3}" stroke="black"/>"#,
            base + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{xp:.3}" y="{:.3}" text-anchor="middle">{xv:.3}</text>"#,
            base + 18.0
        );
        let yv = y0 + f * (y1 - y0);
        let yp = py(yv);
        let _ = writeln!(
            s,
            r#"<line x1="{:.3}" y1="{yp:.3}" x2="{MARGIN_LEFT:.3}" y2="{yp:.3}" stroke="black"/>"#,
            MARGIN_LEFT - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="end">{yv:.3}</text>"#,
            MARGIN_LEFT - 8.0,
            yp + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + 0.5 * plot_w,
        h - 12.0,
        escape(&table.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.3}" text-anchor="middle" transform="rotate(-90 16 {:.3})">{}</text>"#,
        MARGIN_TOP + 0.5 * plot_h,
        MARGIN_TOP + 0.5 * plot_h,
        escape(&table.y_label)
    );
    for m in &style.markers {
        let (mx, my) = (px(m.x), py(m.y));
        let _ = writeln!(
            s,
            r##"<circle cx="{mx:.3}" cy="{my:.3}" r="5" fill="#d62728" stroke="black"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}">{}</text>"#,
            mx + 8.0,
            my - 6.0,
            escape(&m.label)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "</svg>");
    Ok(s)
}
