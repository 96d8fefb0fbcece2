mod common;

use std::collections::BTreeSet;

use alien_concepts::geometry::{
    boundary_sides, canonicalize, enumerate_attachments, rotate_shape, Angle, Catalog, Figure,
    Half, PrimId, Shape, SideKind, TriCell, Universe,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{attachment_problem, maximal_sides, raster_overlap, raster_region};

fn random_cell(rng: &mut impl Rng) -> TriCell {
    TriCell::new(
        rng.random_range(0..2),
        rng.random_range(0..2),
        Half::ALL[rng.random_range(0..4)],
    )
}

#[test]
fn overlap_rule_matches_rasterization() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut same_cell = 0;
    for _ in 0..10_000 {
        let (a, b) = (random_cell(&mut rng), random_cell(&mut rng));
        same_cell += usize::from(a.x == b.x && a.y == b.y);
        assert_eq!(a.overlaps(&b), raster_overlap(&a, &b), "{a:?} vs {b:?}");
    }
    assert!(same_cell > 1_000);
}

fn square() -> Figure {
    let s = canonicalize(&[TriCell::new(0, 0, Half::NW), TriCell::new(0, 0, Half::SE)]).unwrap();
    Figure::primitive(PrimId(0), &s, Angle::R0)
}

#[test]
fn unit_squares_brute_force() {
    let cells = [TriCell::new(0, 0, Half::NE), TriCell::new(0, 0, Half::SW)];
    let sides = maximal_sides(&cells);
    // Every translation within the joint box that shares a full side without overlap.
    let mut touching = Vec::new();
    for tx in -2..=2 {
        for ty in -2..=2 {
            let moved: Vec<TriCell> = cells
                .iter()
                .map(|c| TriCell::new(c.x + tx, c.y + ty, c.half))
                .collect();
            let disjoint = raster_region(&cells).is_disjoint(&raster_region(&moved));
            if disjoint && !sides.is_disjoint(&maximal_sides(&moved)) {
                touching.push((tx, ty));
            }
        }
    }
    assert_eq!(touching, vec![(-1, 0), (0, -1), (0, 1), (1, 0)]);
    // Left/right and above/below give the same canonical domino.
    let figs = enumerate_attachments(&square(), &square()).unwrap();
    let extents: Vec<(i32, i32)> = figs.iter().map(|f| f.shape.extent()).collect();
    assert_eq!(extents, vec![(1, 2), (2, 1)]);
}

fn catalog_figures() -> Vec<Figure> {
    let cat = Catalog::builtin();
    let mut out = Vec::new();
    for (i, p) in cat.primitives().iter().enumerate() {
        let mut seen = BTreeSet::new();
        for angle in Angle::ALL {
            let f = Figure::primitive(PrimId(i as u8), &p.shape, angle);
            if seen.insert(f.shape.clone()) {
                out.push(f);
            }
        }
    }
    out
}

#[test]
fn every_attachment_of_catalog_primitives_is_valid() {
    let figs = catalog_figures();
    let mut checked = 0;
    for a in &figs {
        for b in &figs {
            for out in enumerate_attachments(a, b).unwrap() {
                if let Some(problem) = attachment_problem(a, b, &out) {
                    panic!(
                        "{:?} + {:?} -> {:?}: {problem}",
                        a.shape, b.shape, out.shape
                    );
                }
                checked += 1;
            }
        }
    }
    assert!(checked > 1_000, "only {checked} attachments");
}

#[test]
fn three_part_attachments_in_a_trial_universe_are_valid() {
    let u = &common::trial("t01-fixed-configuration").universe;
    let singles: Vec<&Figure> = u
        .figures()
        .iter()
        .map(|f| &f.figure)
        .filter(|f| f.part_count == 1)
        .collect();
    let pairs: Vec<&Figure> = u
        .figures()
        .iter()
        .map(|f| &f.figure)
        .filter(|f| f.part_count == 2)
        .collect();
    for a in pairs.iter().step_by(7) {
        for b in &singles {
            for out in enumerate_attachments(a, b).unwrap() {
                assert_eq!(
                    attachment_problem(a, b, &out),
                    None,
                    "{:?} + {:?}",
                    a.shape,
                    b.shape
                );
            }
        }
    }
}

#[test]
fn attachment_is_symmetric() {
    let figs = catalog_figures();
    for a in figs.iter().step_by(3) {
        for b in figs.iter().step_by(2) {
            let ab: BTreeSet<Shape> = enumerate_attachments(a, b)
                .unwrap()
                .into_iter()
                .map(|f| f.shape)
                .collect();
            let ba: BTreeSet<Shape> = enumerate_attachments(b, a)
                .unwrap()
                .into_iter()
                .map(|f| f.shape)
                .collect();
            assert_eq!(ab, ba);
        }
    }
}

#[test]
fn one_part_figures_are_distinct_rotations() {
    let cat = Catalog::builtin();
    let names = ["bar", "diamond", "chevron", "kite"];
    let prims = cat.select(&names).unwrap();
    let u = Universe::build(&prims, 1).unwrap();
    // Brute force: distinct rasterized regions of each primitive's rotations.
    let expected: usize = prims
        .iter()
        .map(|p| {
            Angle::ALL
                .iter()
                .map(|&a| common::normalized_region(rotate_shape(&p.shape, a).cells()))
                .collect::<BTreeSet<_>>()
                .len()
        })
        .sum();
    assert_eq!(u.len(), expected);
    assert!(u.len() < 16, "bar and diamond have rotational symmetry");
}

#[test]
fn universes_grow_monotonically_with_part_budget() {
    let cat = Catalog::builtin();
    let prims = cat.select(&["bar", "notch", "flag", "diamond"]).unwrap();
    let shapes = |n| -> BTreeSet<Shape> {
        Universe::build(&prims, n)
            .unwrap()
            .figures()
            .iter()
            .map(|f| f.figure.shape.clone())
            .collect()
    };
    let (one, two, three) = (shapes(1), shapes(2), shapes(3));
    assert!(one.is_subset(&two) && two.is_subset(&three));
    assert!(one.len() < two.len() && two.len() < three.len());
}

#[test]
fn universe_is_closed_under_rotation_and_parses_rebuild_shapes() {
    for t in common::trials() {
        let u = &t.universe;
        let mut images = BTreeSet::new();
        for (id, f) in u.figures().iter().enumerate() {
            let rotated = rotate_shape(&f.figure.shape, Angle::R90);
            let image = u.lookup(&rotated).expect("rotation stays in the universe");
            assert_eq!(image, u.rotate(id as u32, Angle::R90));
            images.insert(image);
            let target = raster_region(f.figure.shape.cells());
            for parse in &f.figure.parses {
                let cells: Vec<TriCell> = parse
                    .iter()
                    .flat_map(|p| p.cells(&u.prim_shapes()[p.prim.index()]))
                    .collect();
                assert_eq!(
                    raster_region(&cells),
                    target,
                    "{}: parse of figure {id}",
                    t.id()
                );
                let area: usize = parse
                    .iter()
                    .map(|p| raster_region(&p.cells(&u.prim_shapes()[p.prim.index()])).len())
                    .sum();
                assert_eq!(area, target.len(), "parts overlap");
            }
        }
        assert_eq!(images.len(), u.len());
    }
}

fn arb_figure() -> impl Strategy<Value = Figure> {
    let n = Catalog::builtin().primitives().len();
    (
        0..n,
        0..n,
        0..4usize,
        0..4usize,
        any::<prop::sample::Index>(),
    )
        .prop_filter_map("pair has no configurations", |(i, j, ri, rj, pick)| {
            let cat = Catalog::builtin();
            let p = cat.primitives();
            let a = Figure::primitive(PrimId(i as u8), &p[i].shape, Angle::from_quarter_turns(ri));
            let b = Figure::primitive(PrimId(j as u8), &p[j].shape, Angle::from_quarter_turns(rj));
            let outs = enumerate_attachments(&a, &b).unwrap();
            (!outs.is_empty()).then(|| outs[pick.index(outs.len())].clone())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn canonical_form_is_idempotent_and_translation_free(f in arb_figure(), dx in -5i32..5, dy in -5i32..5) {
        let moved: Vec<TriCell> = f.shape.cells().iter().map(|c| TriCell::new(c.x + dx, c.y + dy, c.half)).collect();
        prop_assert_eq!(canonicalize(&moved).unwrap(), f.shape.clone());
        prop_assert_eq!(canonicalize(f.shape.cells()).unwrap(), f.shape.clone());
    }

    #[test]
    fn four_quarter_turns_are_the_identity(f in arb_figure()) {
        let mut s = f.shape.clone();
        for _ in 0..4 {
            s = rotate_shape(&s, Angle::R90);
        }
        prop_assert_eq!(&s, &f.shape);
        prop_assert_eq!(rotate_shape(&f.shape, Angle::R180), rotate_shape(&rotate_shape(&f.shape, Angle::R90), Angle::R90));
    }

    #[test]
    fn sides_are_maximal_and_cover_the_boundary(f in arb_figure()) {
        let sides = boundary_sides(&f.shape);
        let as_segments: BTreeSet<_> = sides
            .iter()
            .map(|s| if s.start <= s.end { (s.start, s.end) } else { (s.end, s.start) })
            .collect();
        prop_assert_eq!(as_segments.len(), sides.len());
        prop_assert_eq!(as_segments, maximal_sides(f.shape.cells()));
        for s in &sides {
            let (dx, dy) = ((s.end.0 - s.start.0) as i64, (s.end.1 - s.start.1) as i64);
            prop_assert_eq!(s.squared_length, dx * dx + dy * dy);
            if s.kind == SideKind::Diagonal {
                prop_assert_eq!(s.squared_length % 2, 0);
            }
        }
    }

    #[test]
    fn canonical_cells_are_pairwise_disjoint(f in arb_figure()) {
        let cells = f.shape.cells();
        for (i, a) in cells.iter().enumerate() {
            for b in &cells[i + 1..] {
                prop_assert!(!a.overlaps(b));
            }
        }
        prop_assert!(common::edge_connected(cells));
    }
}
