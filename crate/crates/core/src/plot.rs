//! Static SVG debug plots: dissimilarity heatmap with candidate, validation
//! and graph overlays.

use std::fmt::Write as _;

use crate::eval::PrPoint;
use crate::geo::LocalCoord;
use crate::heading_grid::{DissimilarityField, HeadingGrid};
use crate::intersections::CandidateReport;
use crate::roads::{NodeKind, RoadGraph};

/// What to draw; every layer is optional.
#[derive(Default)]
pub struct Layers<'a> {
    pub grid: Option<(&'a HeadingGrid, &'a DissimilarityField)>,
    /// Cells at or above this value are outlined.
    pub threshold: Option<f64>,
    pub candidates: &'a [CandidateReport],
    pub graph: Option<&'a RoadGraph>,
    /// Ground-truth intersections, drawn as crosses.
    pub truth: &'a [LocalCoord],
}

struct Frame {
    min: LocalCoord,
    max: LocalCoord,
    scale: f64,
    pad: f64,
}

impl Frame {
    fn new(points: impl Iterator<Item = LocalCoord>, target_px: f64) -> Frame {
        let (mut min, mut max) = (
            LocalCoord::new(f64::INFINITY, f64::INFINITY),
            LocalCoord::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for p in points {
            min = LocalCoord::new(min.x.min(p.x), min.y.min(p.y));
            max = LocalCoord::new(max.x.max(p.x), max.y.max(p.y));
        }
        if !min.x.is_finite() {
            min = LocalCoord::new(0.0, 0.0);
            max = LocalCoord::new(1.0, 1.0);
        }
        let span = (max.x - min.x).max(max.y - min.y).max(1.0);
        Frame {
            min,
            max,
            scale: target_px / span,
            pad: 20.0,
        }
    }

    fn width(&self) -> f64 {
        (self.max.x - self.min.x) * self.scale + 2.0 * self.pad
    }

    fn height(&self) -> f64 {
        (self.max.y - self.min.y) * self.scale + 2.0 * self.pad
    }

    /// SVG y grows downwards.
    fn px(&self, p: LocalCoord) -> (f64, f64) {
        (
            self.pad + (p.x - self.min.x) * self.scale,
            self.pad + (self.max.y - p.y) * self.scale,
        )
    }
}

/// Blue (low) to red (high).
fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (255.0 * t) as u8;
    let b = (255.0 * (1.0 - t)) as u8;
    let g = (255.0 * (1.0 - (2.0 * t - 1.0).abs()) * 0.8) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

pub fn render_svg(layers: &Layers, size_px: f64) -> String {
    let mut extent: Vec<LocalCoord> = Vec::new();
    if let Some((grid, _)) = layers.grid {
        for &c in grid.cells.keys() {
            extent.push(grid.cell_center(c));
        }
    }
    if let Some(g) = layers.graph {
        extent.extend(g.nodes.iter().map(|n| n.position));
        extent.extend(g.edges.iter().flat_map(|e| e.polyline.iter().copied()));
    }
    extent.extend(layers.candidates.iter().map(|c| c.position));
    extent.extend(layers.truth.iter().copied());
    let f = Frame::new(extent.into_iter(), size_px);

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.1} {:.1}\">",
        f.width(),
        f.height(),
        f.width(),
        f.height()
    );
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    if let Some((grid, field)) = layers.grid {
        let top = field.max().max(1e-9);
        let side = grid.cell_size * f.scale;
        s.push_str("<g id=\"heatmap\" stroke=\"none\">\n");
        for &cell in grid.cells.keys() {
            let v = field.get(cell).unwrap_or(0.0);
            let c = grid.cell_center(cell);
            let (x, y) = f.px(c);
            let outline = match layers.threshold {
                Some(t) if v >= t => " stroke=\"black\" stroke-width=\"0.6\"",
                _ => "",
            };
            let _ = writeln!(
                s,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{side:.2}\" height=\"{side:.2}\" fill=\"{}\"{outline}/>",
                x - side / 2.0,
                y - side / 2.0,
                ramp(v / top)
            );
        }
        s.push_str("</g>\n");
    }

    if let Some(g) = layers.graph {
        s.push_str("<g id=\"edges\" fill=\"none\" stroke=\"#222\" stroke-width=\"1.5\">\n");
        for e in &g.edges {
            let pts: Vec<String> = e
                .polyline
                .iter()
                .map(|&p| {
                    let (x, y) = f.px(p);
                    format!("{x:.1},{y:.1}")
                })
                .collect();
            let dash = if e.to.is_none() { " stroke-dasharray=\"4 3\"" } else { "" };
            let _ = writeln!(s, "<polyline points=\"{}\"{dash}/>", pts.join(" "));
        }
        s.push_str("</g>\n");
    }

    s.push_str("<g id=\"candidates\">\n");
    for c in layers.candidates {
        let (x, y) = f.px(c.position);
        for check in &c.checks {
            let r_in = check.radius * f.scale;
            let r_out = (check.radius + check.width) * f.scale;
            let color = if check.valid { "#1a9641" } else { "#999" };
            for r in [r_in, r_out] {
                let _ = writeln!(
                    s,
                    "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"{r:.1}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"0.5\" stroke-dasharray=\"2 2\"/>"
                );
            }
        }
        let fill = if c.accepted { "#1a9641" } else { "#d7191c" };
        let _ = writeln!(s, "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"3\" fill=\"{fill}\"/>");
    }
    s.push_str("</g>\n");

    if let Some(g) = layers.graph {
        s.push_str("<g id=\"nodes\" stroke=\"black\">\n");
        for n in &g.nodes {
            let (x, y) = f.px(n.position);
            match n.kind {
                NodeKind::Intersection => {
                    let _ = writeln!(s, "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"6\" fill=\"#fdae61\"/>");
                }
                NodeKind::Load => {
                    let _ = writeln!(s, "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"10\" height=\"10\" fill=\"#2b83ba\"/>", x - 5.0, y - 5.0);
                }
                NodeKind::Dropoff => {
                    let _ = writeln!(
                        s,
                        "<polygon points=\"{x:.1},{:.1} {:.1},{y:.1} {x:.1},{:.1} {:.1},{y:.1}\" fill=\"#abdda4\"/>",
                        y - 6.0,
                        x + 6.0,
                        y + 6.0,
                        x - 6.0
                    );
                }
            }
            let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" stroke=\"none\">{}</text>", x + 7.0, y - 7.0, n.node_id);
        }
        s.push_str("</g>\n");
    }

    s.push_str("<g id=\"truth\" stroke=\"#7b3294\" stroke-width=\"2\">\n");
    for &t in layers.truth {
        let (x, y) = f.px(t);
        let _ = writeln!(
            s,
            "<path d=\"M{:.1} {:.1}L{:.1} {:.1}M{:.1} {:.1}L{:.1} {:.1}\"/>",
            x - 5.0,
            y - 5.0,
            x + 5.0,
            y + 5.0,
            x - 5.0,
            y + 5.0,
            x + 5.0,
            y - 5.0
        );
    }
    s.push_str("</g>\n</svg>\n");
    s
}

/// Precision and recall against the matching tolerance, as an SVG line chart.
pub fn render_pr_svg(curve: &[PrPoint]) -> String {
    let (w, h, pad) = (480.0, 320.0, 40.0);
    let t_max = curve.iter().map(|p| p.tolerance).fold(1.0, f64::max);
    let px = |t: f64, v: f64| (pad + t / t_max * (w - 2.0 * pad), h - pad - v * (h - 2.0 * pad));
    let mut s = String::new();
    let _ = writeln!(s, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">");
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let (x0, y0) = px(0.0, 0.0);
    let (x1, y1) = px(t_max, 1.0);
    let _ = writeln!(s, "<path d=\"M{x0} {y1}L{x0} {y0}L{x1} {y0}\" fill=\"none\" stroke=\"black\"/>");
    let _ = writeln!(s, "<text x=\"{:.0}\" y=\"{:.0}\" font-size=\"11\">distance threshold (m), max {t_max}</text>", w / 2.0 - 80.0, h - 8.0);
    for (name, color, get) in [
        ("precision", "#d7191c", (|p: &PrPoint| p.precision) as fn(&PrPoint) -> f64),
        ("recall", "#2b83ba", |p: &PrPoint| p.recall),
    ] {
        let pts: Vec<String> = curve
            .iter()
            .map(|p| {
                let (x, y) = px(p.tolerance, get(p));
                format!("{x:.1},{y:.1}")
            })
            .collect();
        let _ = writeln!(s, "<polyline id=\"{name}\" points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>", pts.join(" "));
    }
    s.push_str("</svg>\n");
    s
}
