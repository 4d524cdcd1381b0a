//! SVG rendering of planar diagrams.

use std::fmt::Write as _;

use crate::diagram::Amwvd;
use crate::error::{Error, Result};

const SIZE: f64 = 800.0;

/// Deterministic fill colour for a label.
pub fn label_color(label: u32) -> String {
    let hue = (label as f64 * 0.618_033_988_749_895).fract() * 360.0;
    let light = 45 + (label % 3) * 10;
    format!("hsl({hue:.1},65%,{light}%)")
}

/// Renders every tree node as a rectangle in pre-order, so nested cells paint
/// over their ancestors, then one marker per site scaled by weight. The view
/// is the site bounding box inflated by 1.5.
pub fn render_svg(dgm: &Amwvd) -> Result<String> {
    if dgm.dim() != 2 {
        return Err(Error::UnsupportedDimension(dgm.dim()));
    }
    let (lo, hi) = dgm.sites.bounding_box();
    let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let half = if extent > 0.0 { 0.75 * extent } else { 0.5 * dgm.grid.side };
    let cx = 0.5 * (lo[0] + hi[0]);
    let cy = 0.5 * (lo[1] + hi[1]);
    let scale = SIZE / (2.0 * half);
    let px = |x: f64| (x - (cx - half)) * scale;
    let py = |y: f64| ((cy + half) - y) * scale;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
    for node in dgm.tree.nodes() {
        let (a, b) = dgm.grid.cube_box(&node.cube);
        let (x0, x1) = (px(a[0]).max(-1.0), px(b[0]).min(SIZE + 1.0));
        let (y0, y1) = (py(b[1]).max(-1.0), py(a[1]).min(SIZE + 1.0));
        if x1 <= x0 || y1 <= y0 {
            continue;
        }
        let _ = writeln!(
            s,
            r#"<rect x="{x0:.4}" y="{y0:.4}" width="{:.4}" height="{:.4}" fill="{}"/>"#,
            x1 - x0,
            y1 - y0,
            label_color(node.label.unwrap_or(0))
        );
    }
    let _ = writeln!(s, "</g>");
    let wmax = dgm.sites.iter().map(|t| t.weight).fold(0.0, f64::max);
    let _ = writeln!(s, r#"<g stroke="black" stroke-width="0.8" fill="white">"#);
    for site in dgm.sites.iter() {
        let r = 2.0 + 4.0 * site.weight / wmax;
        let _ = writeln!(
            s,
            r#"<circle cx="{:.4}" cy="{:.4}" r="{r:.3}"/>"#,
            px(site.coords[0]),
            py(site.coords[1])
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}
