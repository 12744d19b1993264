//! Deterministic SVG line charts. Text output with a fixed generator comment
//! so golden-file comparisons only ever differ when the data differs.

use std::fmt::Write;

pub const GENERATOR_COMMENT: &str = "<!-- generated by trajcluster -->";

/// Fixed qualitative palette.
pub const PALETTE: [&str; 8] = [
    "#1b6ca8", "#d1495b", "#66a182", "#edae49", "#8d96a3", "#7c4d8b", "#00798c", "#3d405b",
];

pub fn palette_color(index: usize) -> &'static str {
    PALETTE[index % PALETTE.len()]
}

/// One polyline.
pub struct Series {
    pub points: Vec<(f64, f64)>,
    pub color: usize,
    pub width: f64,
    pub label: Option<String>,
}

/// A single panel: data ranges plus pixel geometry.
#[derive(Debug, Clone)]
pub struct Panel {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub origin: (f64, f64),
    pub size: (f64, f64),
}

impl Panel {
    /// Map a data point to pixel coordinates (y axis points up).
    pub fn map_point(&self, x: f64, y: f64) -> (f64, f64) {
        let sx = if self.x_range.1 > self.x_range.0 {
            (x - self.x_range.0) / (self.x_range.1 - self.x_range.0)
        } else {
            0.5
        };
        let sy = if self.y_range.1 > self.y_range.0 {
            (y - self.y_range.0) / (self.y_range.1 - self.y_range.0)
        } else {
            0.5
        };
        (
            self.origin.0 + sx * self.size.0,
            self.origin.1 + (1.0 - sy) * self.size.1,
        )
    }
}

/// Pad a raw data range by 5% on both sides (degenerate ranges get +-1).
pub fn padded_range(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return (0.0, 1.0);
    }
    if lo == hi {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 48.0;

/// Geometry for one panel of a vertically stacked chart of `panels` panels.
pub fn panel_geometry(
    panel_index: usize,
    panels: usize,
    width: f64,
    panel_height: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
) -> Panel {
    debug_assert!(panel_index < panels);
    let top = MARGIN_TOP + panel_index as f64 * panel_height;
    Panel {
        x_range,
        y_range,
        origin: (MARGIN_LEFT, top),
        size: (width - MARGIN_LEFT - MARGIN_RIGHT, panel_height - MARGIN_TOP - MARGIN_BOTTOM),
    }
}

fn axis_ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn fmt_tick(v: f64) -> String {
    if v == v.round() && v.abs() < 1e6 {
        format!("{}", v as i64)
    } else {
        format!("{v:.2}")
    }
}

pub struct PanelSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

/// Render stacked panels into one SVG document.
pub fn render(width: f64, panel_height: f64, panels: &[PanelSpec]) -> String {
    let total_height = panel_height * panels.len() as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{total_height}\" viewBox=\"0 0 {width} {total_height}\">"
    );
    let _ = writeln!(out, "{GENERATOR_COMMENT}");
    let _ = writeln!(
        out,
        "<rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{total_height}\" fill=\"white\"/>"
    );

    for (pi, panel_spec) in panels.iter().enumerate() {
        let (xlo, xhi) = panel_spec
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.0))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        let (ylo, yhi) = panel_spec
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.1))
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        let panel = panel_geometry(
            pi,
            panels.len(),
            width,
            panel_height,
            (xlo, xhi),
            padded_range(ylo, yhi),
        );
        render_panel(&mut out, panel_spec, &panel);
    }
    let _ = writeln!(out, "</svg>");
    out
}

fn render_panel(out: &mut String, spec: &PanelSpec, panel: &Panel) {
    let (ox, oy) = panel.origin;
    let (w, h) = panel.size;
    let _ = writeln!(
        *out,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" fill=\"#333\">{}</text>",
        ox,
        oy - 12.0,
        xml_escape(&spec.title)
    );
    // Frame.
    let _ = writeln!(
        *out,
        "<rect x=\"{ox}\" y=\"{oy}\" width=\"{w}\" height=\"{h}\" fill=\"none\" stroke=\"#888\" stroke-width=\"1\"/>"
    );
    // Ticks and grid.
    for tx in axis_ticks(panel.x_range.0, panel.x_range.1, 5) {
        let (px, _) = panel.map_point(tx, panel.y_range.0);
        let _ = writeln!(
            *out,
            "<line x1=\"{px}\" y1=\"{}\" x2=\"{px}\" y2=\"{}\" stroke=\"#ccc\" stroke-width=\"0.5\"/>",
            oy,
            oy + h
        );
        let _ = writeln!(
            *out,
            "<text x=\"{px}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\" text-anchor=\"middle\">{}</text>",
            oy + h + 16.0,
            fmt_tick(tx)
        );
    }
    for ty in axis_ticks(panel.y_range.0, panel.y_range.1, 5) {
        let (_, py) = panel.map_point(panel.x_range.0, ty);
        let _ = writeln!(
            *out,
            "<line x1=\"{}\" y1=\"{py}\" x2=\"{}\" y2=\"{py}\" stroke=\"#ccc\" stroke-width=\"0.5\"/>",
            ox,
            ox + w
        );
        let _ = writeln!(
            *out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\" text-anchor=\"end\">{}</text>",
            ox - 6.0,
            py + 4.0,
            fmt_tick(ty)
        );
    }
    // Axis labels.
    let _ = writeln!(
        *out,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\" text-anchor=\"middle\">{}</text>",
        ox + w / 2.0,
        oy + h + 34.0,
        xml_escape(&spec.x_label)
    );
    let _ = writeln!(
        *out,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">{}</text>",
        ox - 44.0,
        oy + h / 2.0,
        ox - 44.0,
        oy + h / 2.0,
        xml_escape(&spec.y_label)
    );
    // Series.
    for s in &spec.series {
        let points: Vec<String> = s
            .points
            .iter()
            .filter(|(_, y)| y.is_finite())
            .map(|&(x, y)| {
                let (px, py) = panel.map_point(x, y);
                format!("{px},{py}")
            })
            .collect();
        if points.is_empty() {
            continue;
        }
        let _ = writeln!(
            *out,
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"{}\" points=\"{}\"/>",
            palette_color(s.color),
            s.width,
            points.join(" ")
        );
    }
    // Legend for labeled series.
    let labeled: Vec<&Series> = spec.series.iter().filter(|s| s.label.is_some()).collect();
    for (i, s) in labeled.iter().enumerate() {
        let lx = ox + w - 130.0;
        let ly = oy + 14.0 + 16.0 * i as f64;
        let _ = writeln!(
            *out,
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{}\" stroke-width=\"2\"/>",
            lx + 18.0,
            palette_color(s.color)
        );
        let _ = writeln!(
            *out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">{}</text>",
            lx + 24.0,
            ly + 4.0,
            xml_escape(s.label.as_deref().unwrap_or(""))
        );
    }
}

pub fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
