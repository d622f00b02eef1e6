//! Plain SVG 1.1 rendering of modular-current maps: the coarse-grained
//! cells are drawn as a honeycomb of hexagons and every nonzero current
//! entry as an arrow between cell centers, with stroke width proportional
//! to the current magnitude and color keyed to the flow sign. The layout
//! is deterministic: cells and entries are emitted in sorted order and
//! every coordinate is formatted with fixed precision, so equal maps
//! produce byte-identical documents.

use std::fmt::Write as _;

use crate::current::{CurrentData, CurrentMap};
use crate::lattice::Cell;

/// Pixels per lattice spacing.
const SCALE: f64 = 60.0;
/// Padding around the drawing, in lattice units.
const MARGIN: f64 = 0.9;
/// Hexagon circumradius in lattice units (cells touch at this value).
const HEX_RADIUS: f64 = 0.577_35;
/// Fraction of the center-to-center segment trimmed off each arrow end.
const ARROW_INSET: f64 = 0.24;
/// Arrow stroke width range in pixels (linear in relative magnitude).
const STROKE_MIN: f64 = 1.2;
const STROKE_MAX: f64 = 7.0;
/// Arrowhead size in pixels.
const HEAD_LEN: f64 = 9.0;
const HEAD_HALF_WIDTH: f64 = 4.0;
/// Relative magnitude below which an entry is not drawn.
const DRAW_CUTOFF: f64 = 1e-12;

const CELL_FILL: &str = "#f5f2ea";
const CELL_STROKE: &str = "#8a8273";
const FORWARD_COLOR: &str = "#b03a2e";
const BACKWARD_COLOR: &str = "#1f618d";

fn fmt(x: f64) -> String {
    // Normalize negative zero so equal layouts hash identically.
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.4}")
}

/// Screen placement: lattice (x, y) to pixel coordinates with y pointing
/// down, offset so the drawing sits inside the margin.
struct Frame {
    min_x: f64,
    max_y: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn around(cells: &[Cell]) -> Frame {
        let mut min_x = f64::INFINITY;
        let mut max_x = f64::NEG_INFINITY;
        let mut min_y = f64::INFINITY;
        let mut max_y = f64::NEG_INFINITY;
        for c in cells {
            let (x, y) = c.position();
            min_x = min_x.min(x);
            max_x = max_x.max(x);
            min_y = min_y.min(y);
            max_y = max_y.max(y);
        }
        Frame {
            min_x,
            max_y,
            width: (max_x - min_x + 2.0 * MARGIN) * SCALE,
            height: (max_y - min_y + 2.0 * MARGIN) * SCALE,
        }
    }

    fn place(&self, cell: &Cell) -> (f64, f64) {
        let (x, y) = cell.position();
        (
            (x - self.min_x + MARGIN) * SCALE,
            (self.max_y - y + MARGIN) * SCALE,
        )
    }
}

fn hexagon(out: &mut String, cx: f64, cy: f64) {
    let mut points = String::new();
    for k in 0..6 {
        let angle = (30.0 + 60.0 * k as f64).to_radians();
        let px = cx + HEX_RADIUS * SCALE * angle.cos();
        let py = cy + HEX_RADIUS * SCALE * angle.sin();
        if k > 0 {
            points.push(' ');
        }
        let _ = write!(points, "{},{}", fmt(px), fmt(py));
    }
    let _ = writeln!(
        out,
        r#"  <polygon points="{points}" fill="{CELL_FILL}" stroke="{CELL_STROKE}" stroke-width="1"/>"#
    );
}

fn arrow(out: &mut String, from: (f64, f64), to: (f64, f64), width: f64, color: &str) {
    let (x0, y0) = from;
    let (x1, y1) = to;
    let dx = x1 - x0;
    let dy = y1 - y0;
    let len = (dx * dx + dy * dy).sqrt();
    if len <= f64::EPSILON {
        return;
    }
    let (ux, uy) = (dx / len, dy / len);
    let inset = ARROW_INSET * len;
    let (sx, sy) = (x0 + ux * inset, y0 + uy * inset);
    let (tx, ty) = (x1 - ux * inset, y1 - uy * inset);
    // Shaft stops where the head begins.
    let (bx, by) = (tx - ux * HEAD_LEN, ty - uy * HEAD_LEN);
    let _ = writeln!(
        out,
        r#"  <line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="{}" stroke-linecap="round"/>"#,
        fmt(sx),
        fmt(sy),
        fmt(bx),
        fmt(by),
        fmt(width),
    );
    // Perpendicular for the head base corners.
    let (px, py) = (-uy, ux);
    let _ = writeln!(
        out,
        r#"  <polygon points="{},{} {},{} {},{}" fill="{color}"/>"#,
        fmt(tx),
        fmt(ty),
        fmt(bx + px * HEAD_HALF_WIDTH),
        fmt(by + py * HEAD_HALF_WIDTH),
        fmt(bx - px * HEAD_HALF_WIDTH),
        fmt(by - py * HEAD_HALF_WIDTH),
    );
}

/// Render a current map as a standalone SVG 1.1 document.
///
/// Every cell of the map is drawn as a hexagon; every stored entry with a
/// relative magnitude above a small cutoff becomes an arrow pointing in
/// the direction of positive flow, with stroke width linear in
/// `|f| / max |f|`. Symbolic maps are rendered through their exact values
/// converted once to floating point.
pub fn render_current_map(map: &CurrentMap) -> String {
    let frame = Frame::around(map.sites());
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = fmt(frame.width),
        h = fmt(frame.height),
    );
    let _ = writeln!(
        out,
        r##"  <rect x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>"##,
        w = fmt(frame.width),
        h = fmt(frame.height),
    );
    for cell in map.sites() {
        let (cx, cy) = frame.place(cell);
        hexagon(&mut out, cx, cy);
    }
    let entries = map.entries_f64();
    let max = map.max_entry();
    if max > 0.0 {
        for (u, v, f) in &entries {
            let rel = f.abs() / max;
            if rel <= DRAW_CUTOFF {
                continue;
            }
            let width = STROKE_MIN + (STROKE_MAX - STROKE_MIN) * rel;
            // Positive f_uv flows u -> v; entries are keyed u < v, so the
            // sign also selects the color.
            let (from, to, color) = if *f >= 0.0 {
                (frame.place(u), frame.place(v), FORWARD_COLOR)
            } else {
                (frame.place(v), frame.place(u), BACKWARD_COLOR)
            };
            arrow(&mut out, from, to, width, color);
        }
    }
    // Annotate the scale so the figure is self-describing.
    let label = match map.data() {
        CurrentData::Symbolic { .. } => format!("max |f| = {} J", fmt(max)),
        CurrentData::Numeric { .. } => format!("max |f| = {}", fmt(max)),
    };
    let _ = writeln!(
        out,
        r##"  <text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="#333333">{label}</text>"##,
        fmt(6.0),
        fmt(frame.height - 6.0),
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::current::current_report;
    use crate::lattice::{Disk, TriLattice};

    fn radius3_map() -> CurrentMap {
        let lat = TriLattice::new(9, 9);
        let disk = Disk::build(&lat, Cell::new(4, 4), 3).unwrap();
        current_report(&disk).unwrap()
    }

    #[test]
    fn renders_every_cell_and_nonzero_entry() {
        let map = radius3_map();
        let svg = render_current_map(&map);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        let hexes = svg.matches("<polygon points=").count();
        let arrows = svg.matches("<line ").count();
        let nonzero = map
            .entries_f64()
            .iter()
            .filter(|(_, _, f)| f.abs() > 0.0)
            .count();
        // One polygon per cell plus one head per arrow.
        assert_eq!(hexes, map.sites().len() + arrows);
        assert_eq!(arrows, nonzero);
        assert!(nonzero > 0, "radius-3 map should have boundary currents");
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let a = render_current_map(&radius3_map());
        let b = render_current_map(&radius3_map());
        assert_eq!(a, b);
    }

    #[test]
    fn viewbox_is_finite_and_positive() {
        let svg = render_current_map(&radius3_map());
        let view = svg
            .split("viewBox=\"")
            .nth(1)
            .and_then(|s| s.split('"').next())
            .unwrap();
        let dims: Vec<f64> = view.split(' ').map(|t| t.parse().unwrap()).collect();
        assert_eq!(dims.len(), 4);
        assert!(dims[2] > 0.0 && dims[3] > 0.0);
        assert!(dims.iter().all(|d| d.is_finite()));
    }
}
