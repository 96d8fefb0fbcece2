use std::collections::{BTreeMap, HashMap};
use std::fmt;

use fixedbitset::FixedBitSet;

use super::attach::{attachment_results, MAX_PARTS};
use super::{
    enumerate_attachments, rotate_shape, sides_of_cells, Angle, Figure, GeometryError, PrimId,
    Primitive, Result, Shape, Side,
};

pub type FigureId = u32;

pub const DEFAULT_UNIVERSE_CAP: usize = 200_000;

/// How a figure was assembled: nested pairwise attachments of primitives.
/// `Join(a, b, k)` is the `k`-th (1-based) configuration of `b` attached to `a`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PartTree {
    Prim(PrimId),
    Join(Box<PartTree>, Box<PartTree>, u32),
}

impl PartTree {
    pub fn leaves(&self) -> Vec<PrimId> {
        match self {
            PartTree::Prim(p) => vec![*p],
            PartTree::Join(a, b, _) => {
                let mut v = a.leaves();
                v.extend(b.leaves());
                v
            }
        }
    }

    /// Configuration indices in attachment order (innermost first).
    pub fn config_indices(&self) -> Vec<u32> {
        match self {
            PartTree::Prim(_) => vec![],
            PartTree::Join(a, b, k) => {
                let mut v = a.config_indices();
                v.extend(b.config_indices());
                v.push(*k);
                v
            }
        }
    }
}

impl fmt::Display for PartTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartTree::Prim(p) => write!(f, "{p}"),
            PartTree::Join(a, b, _) => write!(f, "({a}{b})"),
        }
    }
}

/// A part tree plus the global rotation applied to the assembled configuration.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Construction {
    pub tree: PartTree,
    pub rotation: Angle,
}

impl Construction {
    fn key(&self) -> (String, Vec<u32>, i32) {
        (
            self.tree.to_string(),
            self.tree.config_indices(),
            self.rotation.degrees(),
        )
    }
}

impl PartialOrd for Construction {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Construction {
    /// Lexicographic on (parts string, configuration indices, rotation degrees).
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

#[derive(Debug, Clone)]
pub struct UniverseFigure {
    pub figure: Figure,
    /// Sorted, deduplicated; the first entry is the least construction.
    pub constructions: Vec<Construction>,
}

/// Every distinct figure buildable from a trial's primitives with up to
/// `max_parts` parts, in all four orientations.
///
/// Figure ids are assigned in `(part_count, shape)` order.
#[derive(Debug)]
pub struct Universe {
    primitives: Vec<Primitive>,
    prim_shapes: Vec<Shape>,
    figures: Vec<UniverseFigure>,
    index: HashMap<Shape, FigureId>,
    rot90: Vec<FigureId>,
    base: Vec<FigureId>,
    containing: Vec<FixedBitSet>,
    attach: HashMap<(FigureId, FigureId), Box<[Option<FigureId>]>>,
    max_parts: usize,
}

struct Pending {
    figure: Figure,
    constructions: Vec<Construction>,
}

impl Universe {
    pub fn build(primitives: &[Primitive], max_parts: usize) -> Result<Universe> {
        Universe::build_with_cap(primitives, max_parts, DEFAULT_UNIVERSE_CAP)
    }

    pub fn build_with_cap(
        primitives: &[Primitive],
        max_parts: usize,
        cap: usize,
    ) -> Result<Universe> {
        for (i, p) in primitives.iter().enumerate() {
            if primitives[..i].iter().any(|q| q.id == p.id) {
                return Err(GeometryError::DuplicatePrimitive(p.id.clone()));
            }
        }
        if max_parts == 0 || max_parts > MAX_PARTS {
            return Err(GeometryError::PartBudgetExceeded(max_parts, MAX_PARTS));
        }
        let prim_shapes: Vec<Shape> = primitives.iter().map(|p| p.shape.clone()).collect();
        let base_figs: Vec<Figure> = prim_shapes
            .iter()
            .enumerate()
            .map(|(i, s)| Figure::primitive(PrimId(i as u8), s, Angle::R0))
            .collect();

        // Unrotated configurations by part count, keyed by shape.
        let mut levels: Vec<BTreeMap<Shape, (Figure, Vec<PartTree>)>> = Vec::new();
        let mut level1 = BTreeMap::new();
        for (i, f) in base_figs.iter().enumerate() {
            merge_config(&mut level1, f.clone(), PartTree::Prim(PrimId(i as u8)));
        }
        levels.push(level1);
        for n in 2..=max_parts {
            let mut next = BTreeMap::new();
            for (fig, trees) in levels[n - 2].values() {
                for (j, b) in base_figs.iter().enumerate() {
                    let configs = enumerate_attachments(fig, b)?;
                    for (k, c) in configs.into_iter().enumerate() {
                        let k = k as u32 + 1;
                        let leaf = PartTree::Prim(PrimId(j as u8));
                        let mut new_trees = Vec::new();
                        for t in trees {
                            new_trees.push(PartTree::Join(
                                Box::new(t.clone()),
                                Box::new(leaf.clone()),
                                k,
                            ));
                            new_trees.push(PartTree::Join(
                                Box::new(leaf.clone()),
                                Box::new(t.clone()),
                                k,
                            ));
                        }
                        for t in new_trees {
                            merge_config(&mut next, c.clone(), t);
                        }
                    }
                }
                if next.len() * 4 > cap {
                    return Err(GeometryError::UniverseCapExceeded(cap));
                }
            }
            levels.push(next);
        }

        let mut all: BTreeMap<(usize, Shape), Pending> = BTreeMap::new();
        for level in &levels {
            for (fig, trees) in level.values() {
                for angle in Angle::ALL {
                    let rotated = fig.rotated(angle, &prim_shapes);
                    let key = (rotated.part_count, rotated.shape.clone());
                    let entry = all.entry(key).or_insert_with(|| Pending {
                        figure: Figure {
                            shape: rotated.shape.clone(),
                            parses: Vec::new(),
                            part_count: rotated.part_count,
                        },
                        constructions: Vec::new(),
                    });
                    entry.figure.parses.extend(rotated.parses);
                    entry
                        .constructions
                        .extend(trees.iter().map(|t| Construction {
                            tree: t.clone(),
                            rotation: angle,
                        }));
                }
                if all.len() > cap {
                    return Err(GeometryError::UniverseCapExceeded(cap));
                }
            }
        }

        let mut figures = Vec::with_capacity(all.len());
        let mut index = HashMap::with_capacity(all.len());
        for (i, (_, mut pending)) in all.into_iter().enumerate() {
            pending.figure.parses.sort();
            pending.figure.parses.dedup();
            pending.constructions.sort();
            pending.constructions.dedup();
            index.insert(pending.figure.shape.clone(), i as FigureId);
            figures.push(UniverseFigure {
                figure: pending.figure,
                constructions: pending.constructions,
            });
        }

        let rot90 = figures
            .iter()
            .map(|f| {
                let r = rotate_shape(&f.figure.shape, Angle::R90);
                *index.get(&r).expect("universe is closed under rotation")
            })
            .collect();
        let base = prim_shapes.iter().map(|s| index[s]).collect();
        let mut containing = vec![FixedBitSet::with_capacity(figures.len()); primitives.len()];
        for (id, f) in figures.iter().enumerate() {
            for parse in &f.figure.parses {
                for part in parse {
                    containing[part.prim.index()].insert(id);
                }
            }
        }

        let mut universe = Universe {
            primitives: primitives.to_vec(),
            prim_shapes,
            figures,
            index,
            rot90,
            base,
            containing,
            attach: HashMap::new(),
            max_parts,
        };
        universe.attach = universe.build_attach_table();
        Ok(universe)
    }

    /// Precompute configuration lists for every pair whose part counts fit the budget.
    fn build_attach_table(&self) -> HashMap<(FigureId, FigureId), Box<[Option<FigureId>]>> {
        let sides: Vec<Option<Vec<Side>>> = self
            .figures
            .iter()
            .map(|f| {
                (f.figure.part_count < self.max_parts)
                    .then(|| sides_of_cells(f.figure.shape.cells()))
            })
            .collect();
        let small: Vec<FigureId> = (0..self.figures.len() as FigureId)
            .filter(|&id| sides[id as usize].is_some())
            .collect();
        let mut table = HashMap::new();
        for (ia, &a) in small.iter().enumerate() {
            for &b in &small[ia..] {
                let fa = &self.figures[a as usize].figure;
                let fb = &self.figures[b as usize].figure;
                if fa.part_count + fb.part_count > self.max_parts {
                    continue;
                }
                let results = attachment_results(
                    fa.shape.cells(),
                    sides[a as usize].as_ref().unwrap(),
                    fb.shape.cells(),
                    sides[b as usize].as_ref().unwrap(),
                );
                let ids: Box<[Option<FigureId>]> = results
                    .iter()
                    .map(|(s, _)| self.index.get(s).copied())
                    .collect();
                table.insert((a, b), ids);
            }
        }
        table
    }

    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    pub fn prim_shapes(&self) -> &[Shape] {
        &self.prim_shapes
    }

    pub fn max_parts(&self) -> usize {
        self.max_parts
    }

    pub fn len(&self) -> usize {
        self.figures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.figures.is_empty()
    }

    pub fn figures(&self) -> &[UniverseFigure] {
        &self.figures
    }

    pub fn figure(&self, id: FigureId) -> &UniverseFigure {
        &self.figures[id as usize]
    }

    pub fn part_count(&self, id: FigureId) -> usize {
        self.figures[id as usize].figure.part_count
    }

    pub fn lookup(&self, shape: &Shape) -> Option<FigureId> {
        self.index.get(shape).copied()
    }

    pub fn rotate(&self, id: FigureId, angle: Angle) -> FigureId {
        let mut id = id;
        for _ in 0..angle.quarter_turns() {
            id = self.rot90[id as usize];
        }
        id
    }

    /// The one-part figure of a primitive at orientation 0.
    pub fn base(&self, prim: PrimId) -> FigureId {
        self.base[prim.index()]
    }

    /// Figures with some parse using `prim` as a part.
    pub fn containing(&self, prim: PrimId) -> &FixedBitSet {
        &self.containing[prim.index()]
    }

    /// Ordered configurations of `a` and `b`, or `None` when their parts exceed the budget.
    /// Entries are `None` for configurations outside the universe.
    pub fn attachments(&self, a: FigureId, b: FigureId) -> Option<&[Option<FigureId>]> {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.attach.get(&key).map(|v| &v[..])
    }

    pub fn count_by_parts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.max_parts];
        for f in &self.figures {
            counts[f.figure.part_count - 1] += 1;
        }
        counts
    }
}

fn merge_config(map: &mut BTreeMap<Shape, (Figure, Vec<PartTree>)>, fig: Figure, tree: PartTree) {
    match map.get_mut(&fig.shape) {
        Some((existing, trees)) => {
            existing.parses.extend(fig.parses);
            existing.parses.sort();
            existing.parses.dedup();
            if !trees.contains(&tree) {
                trees.push(tree);
            }
        }
        None => {
            map.insert(fig.shape.clone(), (fig, vec![tree]));
        }
    }
}
