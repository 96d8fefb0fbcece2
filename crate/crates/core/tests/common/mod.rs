//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::sync::OnceLock;

use alien_concepts::geometry::{Figure, Half, TriCell};
use alien_concepts::harness::{assets_dir, bundled_trials, Trial};

/// Bundled trials, loaded once per test binary.
pub fn trials() -> &'static [Trial] {
    static TRIALS: OnceLock<Vec<Trial>> = OnceLock::new();
    TRIALS.get_or_init(|| bundled_trials(&assets_dir(), true).expect("bundled trials load"))
}

pub fn trial(id: &str) -> &'static Trial {
    trials()
        .iter()
        .find(|t| t.id() == id)
        .unwrap_or_else(|| panic!("no bundled trial {id}"))
}

// ---------------------------------------------------------------- raster

pub const SUPERSAMPLE: i32 = 8;

// Unequal offsets keep every sample off both cell diagonals.
const OFFSET: (f64, f64) = (0.3, 0.6);

/// Corners of a half-cell triangle, written out directly from the half's name:
/// the right angle sits at the named corner.
fn corners(c: &TriCell) -> [(f64, f64); 3] {
    let (x, y) = (c.x as f64, c.y as f64);
    let (nw, ne, se, sw) = ((x, y), (x + 1.0, y), (x + 1.0, y + 1.0), (x, y + 1.0));
    match c.half {
        Half::NW => [sw, nw, ne],
        Half::NE => [nw, ne, se],
        Half::SE => [ne, se, sw],
        Half::SW => [se, sw, nw],
    }
}

fn strictly_inside(p: (f64, f64), t: &[(f64, f64); 3]) -> bool {
    let side = |a: (f64, f64), b: (f64, f64)| (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
    let s = [side(t[0], t[1]), side(t[1], t[2]), side(t[2], t[0])];
    s.iter().all(|&v| v > 1e-12) || s.iter().all(|&v| v < -1e-12)
}

/// Sample points strictly inside the triangle, as integer sub-pixel indices.
pub fn raster(c: &TriCell) -> BTreeSet<(i32, i32)> {
    let tri = corners(c);
    let mut out = BTreeSet::new();
    for i in 0..SUPERSAMPLE {
        for j in 0..SUPERSAMPLE {
            let p = (
                c.x as f64 + (i as f64 + OFFSET.0) / SUPERSAMPLE as f64,
                c.y as f64 + (j as f64 + OFFSET.1) / SUPERSAMPLE as f64,
            );
            if strictly_inside(p, &tri) {
                out.insert((c.x * SUPERSAMPLE + i, c.y * SUPERSAMPLE + j));
            }
        }
    }
    out
}

pub fn raster_region(cells: &[TriCell]) -> BTreeSet<(i32, i32)> {
    cells.iter().flat_map(raster).collect()
}

pub fn raster_overlap(a: &TriCell, b: &TriCell) -> bool {
    !raster(a).is_disjoint(&raster(b))
}

// ---------------------------------------------------------------- sides

type Seg = ((i32, i32), (i32, i32));

fn lattice_corners(c: &TriCell) -> [(i32, i32); 3] {
    let (x, y) = (c.x, c.y);
    let (nw, ne, se, sw) = ((x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1));
    match c.half {
        Half::NW => [sw, nw, ne],
        Half::NE => [nw, ne, se],
        Half::SE => [ne, se, sw],
        Half::SW => [se, sw, nw],
    }
}

fn undirected(a: (i32, i32), b: (i32, i32)) -> Seg {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Maximal straight boundary runs of a region, as undirected segments.
///
/// Triangle corners are listed with a common winding, so boundary edges are the
/// directed edges whose reverse is absent; runs only continue in the same direction.
pub fn maximal_sides(cells: &[TriCell]) -> BTreeSet<Seg> {
    let mut directed: BTreeSet<Seg> = BTreeSet::new();
    for c in cells {
        let v = lattice_corners(c);
        for k in 0..3 {
            directed.insert((v[k], v[(k + 1) % 3]));
        }
    }
    let boundary: BTreeSet<Seg> = directed
        .iter()
        .copied()
        .filter(|&(a, b)| !directed.contains(&(b, a)))
        .collect();
    let mut sides = BTreeSet::new();
    for &(a, b) in &boundary {
        let d = (b.0 - a.0, b.1 - a.1);
        if boundary.contains(&((a.0 - d.0, a.1 - d.1), a)) {
            continue;
        }
        let mut end = b;
        while boundary.contains(&(end, (end.0 + d.0, end.1 + d.1))) {
            end = (end.0 + d.0, end.1 + d.1);
        }
        sides.insert(undirected(a, end));
    }
    sides
}

fn shifted(cells: &[TriCell], t: (i32, i32)) -> Vec<TriCell> {
    cells
        .iter()
        .map(|c| TriCell::new(c.x + t.0, c.y + t.1, c.half))
        .collect()
}

/// Covered region after moving the bounding-box corner to the origin.
pub fn normalized_region(cells: &[TriCell]) -> BTreeSet<(i32, i32)> {
    let mx = cells.iter().map(|c| c.x).min().unwrap();
    let my = cells.iter().map(|c| c.y).min().unwrap();
    raster_region(&shifted(cells, (-mx, -my)))
}

/// Triangles are edge-adjacent when they share a full lattice edge.
pub fn edge_connected(cells: &[TriCell]) -> bool {
    if cells.is_empty() {
        return false;
    }
    let edges: Vec<BTreeSet<Seg>> = cells
        .iter()
        .map(|c| {
            let v = lattice_corners(c);
            (0..3).map(|k| undirected(v[k], v[(k + 1) % 3])).collect()
        })
        .collect();
    let mut seen = vec![false; cells.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..cells.len() {
            if !seen[j] && !edges[i].is_disjoint(&edges[j]) {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Why a claimed attachment of `b` to `a` is not valid, if it is not.
///
/// Searches every translation of `b` near `a` for one whose union is the output
/// shape, with disjoint interiors, a coinciding maximal side and a connected union.
pub fn attachment_problem(a: &Figure, b: &Figure, out: &Figure) -> Option<String> {
    let ac = a.shape.cells().to_vec();
    let bc = b.shape.cells().to_vec();
    if out.shape.len() != ac.len() + bc.len() {
        return Some(format!(
            "{} cells, expected {}",
            out.shape.len(),
            ac.len() + bc.len()
        ));
    }
    let target = raster_region(out.shape.cells());
    let (aw, ah) = extent(&ac);
    let (bw, bh) = extent(&bc);
    let a_raster = raster_region(&ac);
    let a_sides = maximal_sides(&ac);
    for tx in -bw - 1..=aw + 1 {
        for ty in -bh - 1..=ah + 1 {
            let moved = shifted(&bc, (tx, ty));
            let union: Vec<TriCell> = ac.iter().chain(&moved).copied().collect();
            if normalized_region(&union) != target {
                continue;
            }
            if !a_raster.is_disjoint(&raster_region(&moved)) {
                continue;
            }
            if a_sides.is_disjoint(&maximal_sides(&moved)) {
                continue;
            }
            if edge_connected(&union) {
                return None;
            }
        }
    }
    Some(
        "no translation reproduces the shape with a shared full side and disjoint interiors".into(),
    )
}

fn extent(cells: &[TriCell]) -> (i32, i32) {
    (
        cells.iter().map(|c| c.x).max().unwrap() + 1,
        cells.iter().map(|c| c.y).max().unwrap() + 1,
    )
}

// ---------------------------------------------------------------- edit distance

/// Edit distance by memoized recursion over suffixes.
pub fn edit_distance_oracle<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn go<T: PartialEq>(
        a: &[T],
        b: &[T],
        i: usize,
        j: usize,
        memo: &mut HashMap<(usize, usize), usize>,
    ) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = if a[i] == b[j] {
            go(a, b, i + 1, j + 1, memo)
        } else {
            1 + go(a, b, i + 1, j, memo)
                .min(go(a, b, i, j + 1, memo))
                .min(go(a, b, i + 1, j + 1, memo))
        };
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}
