//! Static SVG drawings of mall graphs.
//!
//! Edge values map linearly from the smallest supplied value (pure blue,
//! `#0000ff`) to the largest (pure red, `#ff0000`). When all values are
//! equal every edge is drawn at the midpoint colour. Shops are dots,
//! corridor junctions black triangles and entrances dark-green triangles.

use std::fmt::Write;

use crate::graph::{MallGraph, NodeKind};

const WIDTH: f64 = 800.0;
const MARGIN: f64 = 40.0;
const LEGEND: f64 = 40.0;
const ENTRANCE_FILL: &str = "#006400";

/// Colour for `v` on the linear blue-to-red scale over `[lo, hi]`.
pub fn edge_color(v: f64, lo: f64, hi: f64) -> String {
    let x = if hi > lo { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.5 };
    let r = (255.0 * x).round() as u8;
    let b = 255 - r;
    format!("#{r:02x}00{b:02x}")
}

/// Renders `graph`, colouring edges by `values` (canonical edge order) when
/// given. The caller checks that `values` has one entry per edge.
pub fn render_svg(graph: &MallGraph, values: Option<&[f64]>) -> String {
    let nodes = graph.nodes();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for n in nodes {
        x0 = x0.min(n.pos[0]);
        x1 = x1.max(n.pos[0]);
        y0 = y0.min(n.pos[1]);
        y1 = y1.max(n.pos[1]);
    }
    if nodes.is_empty() {
        (x0, y0, x1, y1) = (0.0, 0.0, 1.0, 1.0);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-9);
    let scale = (WIDTH - 2.0 * MARGIN) / span;
    let height = ((y1 - y0) * scale + 2.0 * MARGIN).ceil() + if values.is_some() { LEGEND } else { 0.0 };
    // SVG y grows downwards.
    let at = |p: [f64; 2]| (MARGIN + (p[0] - x0) * scale, MARGIN + (y1 - p[1]) * scale);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}">"#
    );
    let _ = writeln!(out, r#"<title>{}</title>"#, escape(graph.mall_id()));
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);

    let (lo, hi) = match values {
        Some(v) if !v.is_empty() => (
            v.iter().copied().fold(f64::INFINITY, f64::min),
            v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ),
        _ => (0.0, 1.0),
    };
    let _ = writeln!(out, r#"<g stroke-linecap="round">"#);
    for slot in 0..graph.num_edges() {
        let e = graph.canonical_edge(slot);
        let (ax, ay) = at(graph.nodes()[e.u].pos);
        let (bx, by) = at(graph.nodes()[e.v].pos);
        let (stroke, width) = match values {
            Some(v) => (edge_color(v[slot], lo, hi), 3.0),
            None => ("#808080".to_string(), 1.5),
        };
        let _ = write!(
            out,
            r#"<line x1="{ax:.2}" y1="{ay:.2}" x2="{bx:.2}" y2="{by:.2}" stroke="{stroke}" stroke-width="{width}">"#
        );
        match values {
            Some(v) => {
                let _ = writeln!(out, "<title>edge {slot} ({}, {}): {}</title></line>", e.u, e.v, v[slot]);
            }
            None => {
                let _ = writeln!(out, "<title>edge {slot} ({}, {})</title></line>", e.u, e.v);
            }
        }
    }
    let _ = writeln!(out, "</g>");

    let _ = writeln!(out, "<g>");
    for n in nodes {
        let (x, y) = at(n.pos);
        match n.kind {
            NodeKind::Shop => {
                let _ = writeln!(out, r##"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="#333333"/>"##);
            }
            NodeKind::Corridor | NodeKind::Entrance => {
                let (r, fill) = if n.kind == NodeKind::Entrance { (7.0, ENTRANCE_FILL) } else { (5.0, "#000000") };
                let _ = writeln!(
                    out,
                    r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{fill}"/>"#,
                    x,
                    y - r,
                    x - r * 0.866,
                    y + r * 0.5,
                    x + r * 0.866,
                    y + r * 0.5
                );
            }
        }
    }
    let _ = writeln!(out, "</g>");

    if values.is_some() {
        let y = height - LEGEND + 10.0;
        let w = WIDTH - 2.0 * MARGIN;
        let _ = writeln!(
            out,
            r##"<defs><linearGradient id="scale"><stop offset="0" stop-color="#0000ff"/><stop offset="1" stop-color="#ff0000"/></linearGradient></defs>"##
        );
        let _ = writeln!(
            out,
            r#"<rect x="{MARGIN:.0}" y="{y:.2}" width="{w:.0}" height="10" fill="url(#scale)"/>"#
        );
        let _ = writeln!(
            out,
            r#"<text x="{MARGIN:.0}" y="{:.2}" font-family="sans-serif" font-size="11">{lo:.4}</text>"#,
            y + 24.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.0}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{hi:.4}</text>"#,
            WIDTH - MARGIN,
            y + 24.0
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures;

    #[test]
    fn color_scale_endpoints() {
        assert_eq!(edge_color(0.0, 0.0, 1.0), "#0000ff");
        assert_eq!(edge_color(1.0, 0.0, 1.0), "#ff0000");
        assert_eq!(edge_color(0.5, 0.0, 1.0), "#80007f");
        assert_eq!(edge_color(3.0, 2.0, 2.0), "#80007f");
        assert_eq!(edge_color(-1.0, 0.0, 1.0), "#0000ff");
    }

    #[test]
    fn plain_topology() {
        let g = fixtures::chain();
        let svg = render_svg(&g, None);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<line").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 1);
        assert_eq!(svg.matches("<polygon").count(), 2);
        assert_eq!(svg.matches(ENTRANCE_FILL).count(), 1);
        assert!(!svg.contains("linearGradient"));
        assert_eq!(svg, render_svg(&g, None));
    }

    #[test]
    fn colored_edges() {
        let g = fixtures::chain();
        let svg = render_svg(&g, Some(&[1.0, 0.25]));
        assert!(svg.contains(r##"stroke="#ff0000""##));
        assert!(svg.contains(r##"stroke="#0000ff""##));
        assert!(svg.contains("linearGradient"));
    }
}
