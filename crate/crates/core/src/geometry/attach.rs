use serde::{Deserialize, Serialize};

use super::{
    rotate_cells, sides_of_cells, Angle, GeometryError, Point, PrimId, Result, Shape, Side, TriCell,
};

/// Maximum number of primitives in one figure.
pub const MAX_PARTS: usize = 3;

/// One primitive placed inside a figure: the primitive rotated by `rotation`,
/// canonicalized, then shifted so its bounding-box corner sits at `offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Placement {
    pub prim: PrimId,
    pub offset: Point,
    pub rotation: Angle,
}

impl Placement {
    pub fn new(prim: PrimId, offset: Point, rotation: Angle) -> Self {
        Placement {
            prim,
            offset,
            rotation,
        }
    }

    /// Cells covered by this part, given the primitive's base shape.
    pub fn cells(&self, prim_shape: &Shape) -> Vec<TriCell> {
        let rotated = super::rotate_shape(prim_shape, self.rotation);
        rotated
            .translated_cells(self.offset.0, self.offset.1)
            .collect()
    }

    fn shifted(self, d: Point) -> Placement {
        Placement {
            offset: (self.offset.0 + d.0, self.offset.1 + d.1),
            ..self
        }
    }
}

/// A figure: a canonical shape together with every known decomposition into parts.
///
/// Equality and ordering are by shape alone.
#[derive(Debug, Clone, Serialize)]
pub struct Figure {
    pub shape: Shape,
    /// Each parse lists the parts sorted; the list of parses is sorted and deduplicated.
    pub parses: Vec<Vec<Placement>>,
    pub part_count: usize,
}

impl PartialEq for Figure {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape
    }
}

impl Eq for Figure {}

impl PartialOrd for Figure {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Figure {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.shape.cmp(&other.shape)
    }
}

impl Figure {
    /// A single primitive at the given orientation.
    pub fn primitive(id: PrimId, shape: &Shape, rotation: Angle) -> Figure {
        Figure {
            shape: super::rotate_shape(shape, rotation),
            parses: vec![vec![Placement::new(id, (0, 0), rotation)]],
            part_count: 1,
        }
    }

    /// Rotate the figure and all of its parses. `prim_shapes[i]` is the base shape of `PrimId(i)`.
    pub fn rotated(&self, angle: Angle, prim_shapes: &[Shape]) -> Figure {
        if angle == Angle::R0 {
            return self.clone();
        }
        let rotated_cells = rotate_cells(self.shape.cells().iter().copied(), angle);
        let (shape_cells, shift) = super::normalize(rotated_cells);
        let shape = Shape { cells: shape_cells };
        let mut parses: Vec<Vec<Placement>> = self
            .parses
            .iter()
            .map(|parse| {
                let mut parts: Vec<Placement> = parse
                    .iter()
                    .map(|p| {
                        let cells =
                            rotate_cells(p.cells(&prim_shapes[p.prim.index()]).into_iter(), angle);
                        let min_x = cells.iter().map(|c| c.x).min().unwrap();
                        let min_y = cells.iter().map(|c| c.y).min().unwrap();
                        Placement::new(
                            p.prim,
                            (min_x + shift.0, min_y + shift.1),
                            p.rotation.plus(angle),
                        )
                    })
                    .collect();
                parts.sort();
                parts
            })
            .collect();
        parses.sort();
        parses.dedup();
        Figure {
            shape,
            parses,
            part_count: self.part_count,
        }
    }
}

/// Translations `t` such that `b + t` shares a full maximal side with `a` and the
/// interiors are disjoint. Sorted and deduplicated.
pub(crate) fn valid_translations(
    a_cells: &[TriCell],
    a_sides: &[Side],
    b_cells: &[TriCell],
    b_sides: &[Side],
) -> Vec<Point> {
    let mut out = Vec::new();
    for sa in a_sides {
        let da = sa.direction();
        for sb in b_sides {
            if sb.kind != sa.kind || sb.squared_length != sa.squared_length {
                continue;
            }
            let db = sb.direction();
            if db != (-da.0, -da.1) {
                continue;
            }
            let t = (sa.end.0 - sb.start.0, sa.end.1 - sb.start.1);
            let overlap = b_cells.iter().any(|cb| {
                let moved = TriCell::new(cb.x + t.0, cb.y + t.1, cb.half);
                a_cells.iter().any(|ca| ca.overlaps(&moved))
            });
            if !overlap {
                out.push(t);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Canonical union shapes for each valid translation, with the shift that
/// canonicalization applied. Sorted by shape, deduplicated; the returned
/// translations are the smallest producing each shape.
pub(crate) fn attachment_results(
    a_cells: &[TriCell],
    a_sides: &[Side],
    b_cells: &[TriCell],
    b_sides: &[Side],
) -> Vec<(Shape, Vec<(Point, Point)>)> {
    let mut results: Vec<(Shape, Point, Point)> =
        valid_translations(a_cells, a_sides, b_cells, b_sides)
            .into_iter()
            .map(|t| {
                let union: Vec<TriCell> = a_cells
                    .iter()
                    .copied()
                    .chain(
                        b_cells
                            .iter()
                            .map(|c| TriCell::new(c.x + t.0, c.y + t.1, c.half)),
                    )
                    .collect();
                let (cells, shift) = super::normalize(union);
                (Shape { cells }, t, shift)
            })
            .collect();
    results.sort();
    let mut grouped: Vec<(Shape, Vec<(Point, Point)>)> = Vec::new();
    for (shape, t, shift) in results {
        match grouped.last_mut() {
            Some((s, ts)) if *s == shape => ts.push((t, shift)),
            _ => grouped.push((shape, vec![(t, shift)])),
        }
    }
    grouped
}

/// All configurations of two shapes joined along a full, equal-length side,
/// in configuration order (lexicographic on canonical cell lists).
pub fn attachment_shapes(a: &Shape, b: &Shape) -> Vec<Shape> {
    let a_sides = sides_of_cells(a.cells());
    let b_sides = sides_of_cells(b.cells());
    attachment_results(a.cells(), &a_sides, b.cells(), &b_sides)
        .into_iter()
        .map(|(s, _)| s)
        .collect()
}

/// Every configuration of `b` attached to `a` by translation, with parses merged.
pub fn enumerate_attachments(a: &Figure, b: &Figure) -> Result<Vec<Figure>> {
    let parts = a.part_count + b.part_count;
    if parts > MAX_PARTS {
        return Err(GeometryError::PartBudgetExceeded(parts, MAX_PARTS));
    }
    let a_sides = sides_of_cells(a.shape.cells());
    let b_sides = sides_of_cells(b.shape.cells());
    let grouped = attachment_results(a.shape.cells(), &a_sides, b.shape.cells(), &b_sides);
    Ok(grouped
        .into_iter()
        .map(|(shape, placements)| {
            let mut parses = Vec::new();
            for (t, shift) in placements {
                for pa in &a.parses {
                    for pb in &b.parses {
                        let mut parse: Vec<Placement> = pa
                            .iter()
                            .map(|p| p.shifted(shift))
                            .chain(pb.iter().map(|p| p.shifted((t.0 + shift.0, t.1 + shift.1))))
                            .collect();
                        parse.sort();
                        parses.push(parse);
                    }
                }
            }
            parses.sort();
            parses.dedup();
            Figure {
                shape,
                parses,
                part_count: parts,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::super::{canonicalize, Half};
    use super::*;

    fn unit_square() -> Figure {
        let s =
            canonicalize(&[TriCell::new(0, 0, Half::NW), TriCell::new(0, 0, Half::SE)]).unwrap();
        Figure::primitive(PrimId(0), &s, Angle::R0)
    }

    #[test]
    fn squares_attach_on_four_sides_giving_two_shapes() {
        let a = unit_square();
        let sides = sides_of_cells(a.shape.cells());
        let ts = valid_translations(a.shape.cells(), &sides, a.shape.cells(), &sides);
        assert_eq!(ts, vec![(-1, 0), (0, -1), (0, 1), (1, 0)]);
        let figs = enumerate_attachments(&a, &a).unwrap();
        assert_eq!(figs.len(), 2);
        // the horizontal domino is reached from the left and from the right
        assert!(figs.iter().all(|f| f.parses.len() == 1));
        assert!(figs.iter().all(|f| f.part_count == 2));
    }

    #[test]
    fn parses_reconstruct_shape() {
        let a = unit_square();
        let b = Figure::primitive(
            PrimId(1),
            &canonicalize(&[TriCell::new(0, 0, Half::SW)]).unwrap(),
            Angle::R0,
        );
        let prims = vec![a.shape.clone(), b.shape.clone()];
        for f in enumerate_attachments(&a, &b).unwrap() {
            for parse in &f.parses {
                let cells: Vec<TriCell> = parse
                    .iter()
                    .flat_map(|p| p.cells(&prims[p.prim.index()]))
                    .collect();
                assert_eq!(canonicalize(&cells).unwrap(), f.shape);
            }
            let r = f.rotated(Angle::R90, &prims);
            for parse in &r.parses {
                let cells: Vec<TriCell> = parse
                    .iter()
                    .flat_map(|p| p.cells(&prims[p.prim.index()]))
                    .collect();
                assert_eq!(canonicalize(&cells).unwrap(), r.shape);
            }
        }
    }

    #[test]
    fn part_budget() {
        let a = unit_square();
        let two = enumerate_attachments(&a, &a).unwrap().remove(0);
        assert!(enumerate_attachments(&two, &a).is_ok());
        assert_eq!(
            enumerate_attachments(&two, &two),
            Err(GeometryError::PartBudgetExceeded(4, 3))
        );
    }
}
