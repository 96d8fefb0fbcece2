//! SVG drawings of figures: one outlined polygon per part.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::geometry::{boundary_loops, FigureId, PrimId, TriCell, Universe};

const PALETTE: [&str; 4] = ["#d95f02", "#1b9e77", "#7570b3", "#e7298a"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvgStyle {
    /// Pixels per lattice unit.
    pub scale: i32,
    pub margin: i32,
    /// Fill each part with its primitive's color instead of white.
    pub color_parts: bool,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle {
            scale: 24,
            margin: 4,
            color_parts: false,
        }
    }
}

/// Render parts given as cell lists, each tagged with its primitive slot.
pub fn render_parts(parts: &[(PrimId, Vec<TriCell>)], style: &SvgStyle) -> String {
    let all = parts.iter().flat_map(|(_, c)| c.iter());
    let (mut max_x, mut max_y) = (0, 0);
    let (mut min_x, mut min_y) = (i32::MAX, i32::MAX);
    for c in all {
        min_x = min_x.min(c.x);
        min_y = min_y.min(c.y);
        max_x = max_x.max(c.x + 1);
        max_y = max_y.max(c.y + 1);
    }
    if min_x == i32::MAX {
        (min_x, min_y) = (0, 0);
    }
    let (s, m) = (style.scale, style.margin);
    let width = (max_x - min_x) * s + 2 * m;
    let height = (max_y - min_y) * s + 2 * m;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    )
    .unwrap();
    writeln!(
        out,
        r#"<rect width="{width}" height="{height}" fill="white"/>"#
    )
    .unwrap();
    writeln!(
        out,
        r#"<g stroke="black" stroke-width="2" stroke-linejoin="round" fill-rule="evenodd">"#
    )
    .unwrap();
    for (prim, cells) in parts {
        let fill = if style.color_parts {
            PALETTE[prim.index() % PALETTE.len()]
        } else {
            "white"
        };
        let mut d = String::new();
        for lp in boundary_loops(cells) {
            for (i, (x, y)) in lp.iter().enumerate() {
                let cmd = if i == 0 { 'M' } else { 'L' };
                write!(d, "{cmd}{} {}", (x - min_x) * s + m, (y - min_y) * s + m).unwrap();
            }
            d.push('Z');
        }
        writeln!(out, r#"<path class="{prim}" fill="{fill}" d="{d}"/>"#).unwrap();
    }
    out.push_str("</g>\n</svg>\n");
    out
}

/// Render a universe figure using its first parse.
pub fn render_figure(u: &Universe, id: FigureId, style: &SvgStyle) -> String {
    let fig = &u.figure(id).figure;
    let parts: Vec<(PrimId, Vec<TriCell>)> = fig.parses[0]
        .iter()
        .map(|p| (p.prim, p.cells(&u.prim_shapes()[p.prim.index()])))
        .collect();
    render_parts(&parts, style)
}
