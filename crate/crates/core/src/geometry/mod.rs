//! Exact integer-lattice geometry for alien figures.
//!
//! A figure is a set of half-unit-square triangles ([`TriCell`]s). The lattice
//! uses screen orientation: `x` grows to the right and `y` grows downward, so a
//! quarter turn `(x, y) -> (-y, x)` is clockwise on screen.

mod attach;
mod catalog;
mod universe;

pub use attach::{attachment_shapes, enumerate_attachments, Figure, Placement, MAX_PARTS};
pub use catalog::{Catalog, CatalogEntry, Primitive, PrimitiveFile};
pub use universe::{
    Construction, FigureId, PartTree, Universe, UniverseFigure, DEFAULT_UNIVERSE_CAP,
};

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("cells overlap at ({x}, {y})")]
    OverlappingCells { x: i32, y: i32 },
    #[error("shape is not edge-connected")]
    DisconnectedShape,
    #[error("empty shape")]
    EmptyShape,
    #[error("invalid rotation angle {0} (expected 0, 90, 180 or 270)")]
    InvalidAngle(i32),
    #[error("part budget exceeded: {0} parts (max {1})")]
    PartBudgetExceeded(usize, usize),
    #[error("universe exceeds cap of {0} figures")]
    UniverseCapExceeded(usize),
    #[error("primitive {0:?} must have exactly 4 triangles, found {1}")]
    BadPrimitive(String, usize),
    #[error("duplicate primitive id {0:?}")]
    DuplicatePrimitive(String),
    #[error("unknown primitive {0:?}")]
    UnknownPrimitive(String),
    #[error("catalog: {0}")]
    Catalog(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// Which half of a unit cell a triangle covers, named by its right-angle corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Half {
    NW,
    NE,
    SE,
    SW,
}

impl Half {
    pub const ALL: [Half; 4] = [Half::NW, Half::NE, Half::SE, Half::SW];

    /// The other half of the same cell sharing this half's hypotenuse.
    pub fn complement(self) -> Half {
        match self {
            Half::NW => Half::SE,
            Half::SE => Half::NW,
            Half::NE => Half::SW,
            Half::SW => Half::NE,
        }
    }

    /// Quarter turn clockwise on screen.
    pub fn rotated(self) -> Half {
        match self {
            Half::NW => Half::NE,
            Half::NE => Half::SE,
            Half::SE => Half::SW,
            Half::SW => Half::NW,
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }

    /// Bits of the halves whose interiors intersect this one.
    fn overlap_mask(self) -> u8 {
        0b1111 & !self.complement().bit()
    }

    pub fn parse(s: &str) -> Option<Half> {
        match s {
            "NW" => Some(Half::NW),
            "NE" => Some(Half::NE),
            "SE" => Some(Half::SE),
            "SW" => Some(Half::SW),
            _ => None,
        }
    }
}

impl fmt::Display for Half {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

/// Lattice point `(x, y)`.
pub type Point = (i32, i32);

/// A half-unit-square triangle in cell `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TriCell {
    pub x: i32,
    pub y: i32,
    pub half: Half,
}

impl TriCell {
    pub fn new(x: i32, y: i32, half: Half) -> Self {
        TriCell { x, y, half }
    }

    /// True iff the two triangles share interior points.
    pub fn overlaps(&self, other: &TriCell) -> bool {
        self.x == other.x && self.y == other.y && self.half.overlap_mask() & other.half.bit() != 0
    }

    /// Corner points, oriented so the signed area `cross(b - a, c - a)` is positive.
    pub fn vertices(&self) -> [Point; 3] {
        let (x, y) = (self.x, self.y);
        let nw = (x, y);
        let ne = (x + 1, y);
        let se = (x + 1, y + 1);
        let sw = (x, y + 1);
        match self.half {
            Half::NW => [nw, ne, sw],
            Half::NE => [nw, ne, se],
            Half::SE => [ne, se, sw],
            Half::SW => [nw, se, sw],
        }
    }

    /// The three directed edges of the triangle, traversed with positive orientation.
    pub fn edges(&self) -> [(Point, Point); 3] {
        let [a, b, c] = self.vertices();
        [(a, b), (b, c), (c, a)]
    }

    fn translated(self, dx: i32, dy: i32) -> TriCell {
        TriCell::new(self.x + dx, self.y + dy, self.half)
    }

    /// Quarter turn clockwise about the origin: cell `[x, x+1] x [y, y+1]` maps to
    /// `[-y-1, -y] x [x, x+1]`.
    fn rotated(self) -> TriCell {
        TriCell::new(-self.y - 1, self.x, self.half.rotated())
    }
}

/// One of the four discrete figure orientations, in clockwise quarter turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Angle {
    #[default]
    R0,
    R90,
    R180,
    R270,
}

impl Angle {
    pub const ALL: [Angle; 4] = [Angle::R0, Angle::R90, Angle::R180, Angle::R270];

    pub fn from_degrees(deg: i32) -> Result<Angle> {
        match deg {
            0 => Ok(Angle::R0),
            90 => Ok(Angle::R90),
            180 => Ok(Angle::R180),
            270 => Ok(Angle::R270),
            other => Err(GeometryError::InvalidAngle(other)),
        }
    }

    pub fn degrees(self) -> i32 {
        self.quarter_turns() as i32 * 90
    }

    pub fn quarter_turns(self) -> usize {
        self as usize
    }

    pub fn from_quarter_turns(n: usize) -> Angle {
        Angle::ALL[n % 4]
    }

    pub fn plus(self, other: Angle) -> Angle {
        Angle::from_quarter_turns(self.quarter_turns() + other.quarter_turns())
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.degrees())
    }
}

impl Serialize for Angle {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i32(self.degrees())
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let deg = i32::deserialize(d)?;
        Angle::from_degrees(deg).map_err(serde::de::Error::custom)
    }
}

/// Slot of a primitive within a trial (`p1` .. `p4`), zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PrimId(pub u8);

impl PrimId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Parse `p1` .. `p9`.
    pub fn parse(s: &str) -> Option<PrimId> {
        let digits = s.strip_prefix('p')?;
        let n: u8 = digits.parse().ok()?;
        (n >= 1 && digits.len() == 1).then_some(PrimId(n - 1))
    }
}

impl fmt::Display for PrimId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0 + 1)
    }
}

/// A canonical, connected, non-overlapping set of triangles.
///
/// Canonical form: translated so the minimum `x` and `y` are zero, every fully
/// covered cell stored as its `NW`/`SE` pair, and cells sorted by `(x, y, half)`.
/// Two shapes covering the same region therefore compare equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Shape {
    cells: Vec<TriCell>,
}

impl Shape {
    pub fn cells(&self) -> &[TriCell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Width and height of the bounding box in lattice units.
    pub fn extent(&self) -> (i32, i32) {
        let w = self.cells.iter().map(|c| c.x).max().map_or(0, |m| m + 1);
        let h = self.cells.iter().map(|c| c.y).max().map_or(0, |m| m + 1);
        (w, h)
    }

    /// Build from cells that are already known to be valid.
    pub(crate) fn from_valid(cells: impl IntoIterator<Item = TriCell>) -> Shape {
        Shape {
            cells: normalize(cells.into_iter().collect()).0,
        }
    }

    pub(crate) fn translated_cells(&self, dx: i32, dy: i32) -> impl Iterator<Item = TriCell> + '_ {
        self.cells.iter().map(move |c| c.translated(dx, dy))
    }
}

/// Translate to the origin, merge full cells into `NW`/`SE`, sort and dedup.
/// Returns the normalized cells and the translation that was applied.
fn normalize(mut cells: Vec<TriCell>) -> (Vec<TriCell>, Point) {
    if cells.is_empty() {
        return (cells, (0, 0));
    }
    let min_x = cells.iter().map(|c| c.x).min().unwrap();
    let min_y = cells.iter().map(|c| c.y).min().unwrap();
    for c in cells.iter_mut() {
        c.x -= min_x;
        c.y -= min_y;
    }
    cells.sort();
    cells.dedup();
    let mut out = Vec::with_capacity(cells.len());
    let mut i = 0;
    while i < cells.len() {
        let c = cells[i];
        let mut j = i;
        let mut mask = 0u8;
        while j < cells.len() && cells[j].x == c.x && cells[j].y == c.y {
            mask |= cells[j].half.bit();
            j += 1;
        }
        if mask == Half::NE.bit() | Half::SW.bit() {
            out.push(TriCell::new(c.x, c.y, Half::NW));
            out.push(TriCell::new(c.x, c.y, Half::SE));
        } else {
            out.extend_from_slice(&cells[i..j]);
        }
        i = j;
    }
    (out, (-min_x, -min_y))
}

fn check_disjoint(cells: &[TriCell]) -> Result<()> {
    let mut occupied: HashMap<(i32, i32), u8> = HashMap::new();
    for c in cells {
        let m = occupied.entry((c.x, c.y)).or_insert(0);
        if *m & c.half.overlap_mask() != 0 {
            return Err(GeometryError::OverlappingCells { x: c.x, y: c.y });
        }
        *m |= c.half.bit();
    }
    Ok(())
}

fn undirected(e: (Point, Point)) -> (Point, Point) {
    if e.0 <= e.1 {
        e
    } else {
        (e.1, e.0)
    }
}

fn is_connected(cells: &[TriCell]) -> bool {
    if cells.len() <= 1 {
        return true;
    }
    let mut by_edge: HashMap<(Point, Point), Vec<usize>> = HashMap::new();
    for (i, c) in cells.iter().enumerate() {
        for e in c.edges() {
            by_edge.entry(undirected(e)).or_default().push(i);
        }
    }
    let mut seen = vec![false; cells.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = queue.pop_front() {
        for e in cells[i].edges() {
            for &j in &by_edge[&undirected(e)] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
    }
    count == cells.len()
}

/// Validate and canonicalize a set of triangles.
pub fn canonicalize(cells: &[TriCell]) -> Result<Shape> {
    if cells.is_empty() {
        return Err(GeometryError::EmptyShape);
    }
    check_disjoint(cells)?;
    if !is_connected(cells) {
        return Err(GeometryError::DisconnectedShape);
    }
    Ok(Shape::from_valid(cells.iter().copied()))
}

/// Like [`canonicalize`] but also returns the translation applied to the input.
pub fn canonicalize_with_offset(cells: &[TriCell]) -> Result<(Shape, Point)> {
    let shape = canonicalize(cells)?;
    let (_, offset) = normalize(cells.to_vec());
    Ok((shape, offset))
}

/// Rotate clockwise by a multiple of 90 degrees and re-canonicalize.
pub fn rotate_shape(s: &Shape, angle: Angle) -> Shape {
    let turns = angle.quarter_turns();
    if turns == 0 {
        return s.clone();
    }
    Shape::from_valid(s.cells.iter().map(|&c| {
        let mut c = c;
        for _ in 0..turns {
            c = c.rotated();
        }
        c
    }))
}

/// Rotate by an angle given in degrees.
pub fn rotate_shape_degrees(s: &Shape, degrees: i32) -> Result<Shape> {
    Ok(rotate_shape(s, Angle::from_degrees(degrees)?))
}

/// Rotate raw cells without canonicalizing.
pub(crate) fn rotate_cells(cells: impl Iterator<Item = TriCell>, angle: Angle) -> Vec<TriCell> {
    cells
        .map(|mut c| {
            for _ in 0..angle.quarter_turns() {
                c = c.rotated();
            }
            c
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideKind {
    Axis,
    Diagonal,
}

/// A maximal straight run of boundary, directed with the interior on its
/// positive-orientation side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Side {
    pub start: Point,
    pub end: Point,
    pub squared_length: i64,
    pub kind: SideKind,
}

impl Side {
    /// Unit step along the side.
    pub fn direction(&self) -> Point {
        (
            (self.end.0 - self.start.0).signum(),
            (self.end.1 - self.start.1).signum(),
        )
    }

    /// Number of unit lattice steps.
    pub fn steps(&self) -> i32 {
        (self.end.0 - self.start.0)
            .abs()
            .max((self.end.1 - self.start.1).abs())
    }
}

/// Directed unit boundary edges of a set of valid triangles.
pub(crate) fn boundary_edges(cells: &[TriCell]) -> Vec<(Point, Point)> {
    let all: HashSet<(Point, Point)> = cells.iter().flat_map(|c| c.edges()).collect();
    let mut out: Vec<_> = all
        .iter()
        .copied()
        .filter(|&(a, b)| !all.contains(&(b, a)))
        .collect();
    out.sort();
    out
}

/// Maximal straight boundary segments (outer boundary and holes), sorted.
pub fn boundary_sides(s: &Shape) -> Vec<Side> {
    sides_of_cells(s.cells())
}

pub(crate) fn sides_of_cells(cells: &[TriCell]) -> Vec<Side> {
    let edges = boundary_edges(cells);
    let starts: HashSet<(Point, Point)> = edges
        .iter()
        .map(|&(a, b)| (a, (b.0 - a.0, b.1 - a.1)))
        .collect();
    let mut sides = Vec::new();
    for &(a, b) in &edges {
        let dir = (b.0 - a.0, b.1 - a.1);
        let prev = (a.0 - dir.0, a.1 - dir.1);
        if starts.contains(&(prev, dir)) {
            continue;
        }
        let mut end = b;
        while starts.contains(&(end, dir)) {
            end = (end.0 + dir.0, end.1 + dir.1);
        }
        let (dx, dy) = ((end.0 - a.0) as i64, (end.1 - a.1) as i64);
        let kind = if dir.0 != 0 && dir.1 != 0 {
            SideKind::Diagonal
        } else {
            SideKind::Axis
        };
        sides.push(Side {
            start: a,
            end,
            squared_length: dx * dx + dy * dy,
            kind,
        });
    }
    sides.sort();
    sides
}

/// Closed boundary loops as vertex sequences, for rendering.
pub fn boundary_loops(cells: &[TriCell]) -> Vec<Vec<Point>> {
    let sides = sides_of_cells(cells);
    let mut remaining: BTreeSet<Side> = sides.iter().copied().collect();
    let mut loops = Vec::new();
    while let Some(&first) = remaining.iter().next() {
        remaining.remove(&first);
        let mut pts = vec![first.start];
        let mut cur = first;
        loop {
            if cur.end == first.start {
                break;
            }
            let next = remaining.iter().find(|s| s.start == cur.end).copied();
            match next {
                Some(n) => {
                    remaining.remove(&n);
                    pts.push(n.start);
                    cur = n;
                }
                None => break,
            }
        }
        loops.push(pts);
    }
    loops
}
