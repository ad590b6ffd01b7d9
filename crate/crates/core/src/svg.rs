//! Static SVG drawing of a design: substations as squares, turbines as
//! numbered circles, cable width and colour by cable index.

use std::fmt::Write as _;

use crate::geometry::Segment;
use crate::model::Instance;
use crate::tsh::EdgeMatrix;

const WIDTH: f64 = 900.0;
const MARGIN: f64 = 30.0;
const PALETTE: [&str; 5] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b"];

pub fn render_svg(instance: &Instance, tree: &EdgeMatrix, title: &str) -> String {
    let pts: Vec<_> = instance.node_ids().map(|id| instance.point(id)).collect();
    let (min_x, max_x) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.x), hi.max(p.x)));
    let (min_y, max_y) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.y), hi.max(p.y)));
    let span = (max_x - min_x).max(max_y - min_y).max(1.0);
    let scale = (WIDTH - 2.0 * MARGIN) / span;
    let height = (max_y - min_y) * scale + 2.0 * MARGIN + 20.0;
    let sx = |x: f64| MARGIN + (x - min_x) * scale;
    // y grows upwards on site, downwards on screen
    let sy = |y: f64| height - MARGIN - (y - min_y) * scale;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ =
        writeln!(out, r#"<text x="{MARGIN}" y="20" font-family="sans-serif" font-size="14">{}</text>"#, escape(title));

    let _ = writeln!(out, r#"<g stroke-linecap="round">"#);
    for r in &tree.rows {
        let (a, b) = (instance.point(r.a), instance.point(r.b));
        let c = r.cable.unwrap_or(0);
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{}" stroke-width="{:.1}"/>"#,
            sx(a.x),
            sy(a.y),
            sx(b.x),
            sy(b.y),
            PALETTE[c % PALETTE.len()],
            1.5 + 1.5 * c as f64
        );
    }
    let _ = writeln!(out, "</g>");

    let segments: Vec<Segment> = tree.segments(instance);
    for (i, j) in tree.crossings(instance) {
        let (cx, cy) = marker(&segments[i], &segments[j]);
        let _ = writeln!(
            out,
            r#"<circle cx="{:.1}" cy="{:.1}" r="6" fill="none" stroke="red" stroke-width="2"/>"#,
            sx(cx),
            sy(cy)
        );
    }

    for id in instance.node_ids() {
        let p = instance.point(id);
        let (x, y) = (sx(p.x), sy(p.y));
        if instance.is_substation(id) {
            let _ =
                writeln!(out, r#"<rect x="{:.1}" y="{:.1}" width="14" height="14" fill="black"/>"#, x - 7.0, y - 7.0);
        } else {
            let _ = writeln!(out, r#"<circle cx="{x:.1}" cy="{y:.1}" r="7" fill="white" stroke="black"/>"#);
            let _ = writeln!(
                out,
                r#"<text x="{x:.1}" y="{:.1}" font-family="sans-serif" font-size="7" text-anchor="middle">{}</text>"#,
                y + 2.5,
                id.0
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Intersection point of two crossing segments; overlapping collinear
/// segments are marked between their midpoints.
fn marker(s: &Segment, t: &Segment) -> (f64, f64) {
    let (dx1, dy1) = (s.b.x - s.a.x, s.b.y - s.a.y);
    let (dx2, dy2) = (t.b.x - t.a.x, t.b.y - t.a.y);
    let den = dx1 * dy2 - dy1 * dx2;
    if den.abs() > 1e-12 * (dx1.hypot(dy1) * dx2.hypot(dy2)).max(f64::MIN_POSITIVE) {
        let u = ((t.a.x - s.a.x) * dy2 - (t.a.y - s.a.y) * dx2) / den;
        (s.a.x + u * dx1, s.a.y + u * dy1)
    } else {
        ((s.a.x + s.b.x + t.a.x + t.b.x) / 4.0, (s.a.y + s.b.y + t.a.y + t.b.y) / 4.0)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
