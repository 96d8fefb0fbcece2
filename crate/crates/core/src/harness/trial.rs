//! Trial specifications: primitives, training examples and test items.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsl::{parse_program, DslError, Evaluator};
use crate::geometry::{
    canonicalize, rotate_shape, Angle, Catalog, FigureId, GeometryError, Half, PrimId, Shape,
    TriCell, Universe,
};

use super::HarnessError;

pub const TRIAL_SCHEMA_VERSION: u32 = 1;
pub const MIN_TEST_ITEMS: usize = 9;
pub const MAX_TEST_ITEMS: usize = 13;

/// Item categories used when analysing generalization patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ItemTag {
    Identity,
    Part,
    NovelConfiguration,
    NovelPart,
    HigherLevel,
    Inconsistent,
    Wider,
    Rotated,
}

impl fmt::Display for ItemTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("tag serializes");
        write!(f, "{}", s.as_str().expect("tag is a string"))
    }
}

/// The kind of compositional structure a trial probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Archetype {
    FixedConfiguration,
    FreeCombination,
    OrientationSelective,
    Repetition,
}

/// One placed part: a trial primitive, rotated about its own frame and then shifted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartSpec {
    pub prim: String,
    #[serde(default)]
    pub dx: i32,
    #[serde(default)]
    pub dy: i32,
    #[serde(default = "zero_angle")]
    pub rotation: Angle,
}

fn zero_angle() -> Angle {
    Angle::R0
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartsSpec {
    pub placements: Vec<PartSpec>,
    /// Rotation of the assembled figure.
    #[serde(default = "zero_angle")]
    pub rotation: Angle,
}

/// The ways a trial file may describe a figure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum FigureSpec {
    /// A program whose extension is exactly this figure.
    Program(String),
    Parts(PartsSpec),
    Cells(Vec<(i32, i32, Half)>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestItemSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<ItemTag>,
    pub figure: FigureSpec,
}

/// A trial file as written on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialSpec {
    pub schema_version: u32,
    pub trial_id: String,
    /// Trials probing the same concept with different example sets share this id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concept_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub archetype: Option<Archetype>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    /// Catalog ids bound to `p1` .. `p4`, in order.
    pub primitives: Vec<String>,
    pub training: Vec<FigureSpec>,
    pub test: Vec<TestItemSpec>,
}

impl TrialSpec {
    pub fn from_json(text: &str) -> Result<TrialSpec, HarnessError> {
        let spec: TrialSpec =
            serde_json::from_str(text).map_err(|e| HarnessError::Schema(e.to_string()))?;
        if spec.schema_version != TRIAL_SCHEMA_VERSION {
            return Err(HarnessError::Schema(format!(
                "{}: unsupported schema_version {}",
                spec.trial_id, spec.schema_version
            )));
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("trial serializes");
        s.push('\n');
        s
    }
}

/// A validated trial with its universe and resolved figures.
#[derive(Debug)]
pub struct Trial {
    pub spec: TrialSpec,
    pub universe: Universe,
    pub training: Vec<FigureId>,
    pub test: Vec<FigureId>,
}

impl Trial {
    pub fn id(&self) -> &str {
        &self.spec.trial_id
    }

    pub fn item_ids(&self) -> Vec<String> {
        self.spec.test.iter().map(|t| t.id.clone()).collect()
    }

    pub fn tags(&self) -> Vec<Option<ItemTag>> {
        self.spec.test.iter().map(|t| t.tag).collect()
    }
}

/// Validate a trial against the catalog and resolve every figure to a universe id.
pub fn resolve_trial(
    spec: TrialSpec,
    catalog: &Catalog,
    strict_test_count: bool,
) -> Result<Trial, HarnessError> {
    let id = spec.trial_id.clone();
    if spec.primitives.len() != 4 {
        return Err(HarnessError::Schema(format!(
            "{id}: expected 4 primitives, found {}",
            spec.primitives.len()
        )));
    }
    let prims = catalog.select(&spec.primitives).map_err(|e| match e {
        GeometryError::UnknownPrimitive(p) => HarnessError::UnknownPrimitive(p),
        other => HarnessError::Geometry(other),
    })?;
    if spec.training.is_empty() {
        return Err(HarnessError::Schema(format!("{id}: no training examples")));
    }
    let n = spec.test.len();
    if strict_test_count && !(MIN_TEST_ITEMS..=MAX_TEST_ITEMS).contains(&n) {
        return Err(HarnessError::Schema(format!(
            "{id}: {n} test items, expected {MIN_TEST_ITEMS} to {MAX_TEST_ITEMS}"
        )));
    }
    for (i, t) in spec.test.iter().enumerate() {
        if spec.test[..i].iter().any(|o| o.id == t.id) {
            return Err(HarnessError::Schema(format!(
                "{id}: duplicate test item {:?}",
                t.id
            )));
        }
    }
    let universe = Universe::build(&prims, 3)?;
    let training = spec
        .training
        .iter()
        .enumerate()
        .map(|(i, f)| resolve_figure(&universe, f, &format!("{id} training[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let test = spec
        .test
        .iter()
        .map(|t| resolve_figure(&universe, &t.figure, &format!("{id} test {}", t.id)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Trial {
        spec,
        universe,
        training,
        test,
    })
}

pub fn load_trial(
    path: &Path,
    catalog: &Catalog,
    strict_test_count: bool,
) -> Result<Trial, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    resolve_trial(TrialSpec::from_json(&text)?, catalog, strict_test_count)
}

fn invalid(what: &str, reason: impl fmt::Display) -> HarnessError {
    HarnessError::InvalidFigure {
        figure: what.to_string(),
        reason: reason.to_string(),
    }
}

fn prim_slot(name: &str) -> Result<PrimId, HarnessError> {
    match PrimId::parse(name) {
        Some(p) if p.index() < 4 => Ok(p),
        _ => Err(HarnessError::UnknownPrimitive(name.to_string())),
    }
}

/// Resolve a figure description to its universe id.
pub fn resolve_figure(u: &Universe, f: &FigureSpec, what: &str) -> Result<FigureId, HarnessError> {
    let shape: Shape = match f {
        FigureSpec::Program(text) => {
            let program = parse_program(text).map_err(|e| match e {
                DslError::UnknownPrimitive { name, .. } => HarnessError::UnknownPrimitive(name),
                other => invalid(what, other),
            })?;
            let ext = Evaluator::new(u)
                .evaluate(&program)
                .map_err(|e| invalid(what, e))?;
            let mut ids = ext.ids();
            return match (ids.next(), ids.next()) {
                (Some(id), None) => Ok(id),
                _ => Err(invalid(
                    what,
                    format!("{text} denotes {} figures, not one", ext.size()),
                )),
            };
        }
        FigureSpec::Parts(parts) => {
            if parts.placements.is_empty() || parts.placements.len() > u.max_parts() {
                return Err(invalid(what, format!("{} parts", parts.placements.len())));
            }
            let mut cells: Vec<TriCell> = Vec::new();
            for p in &parts.placements {
                let slot = prim_slot(&p.prim)?;
                let base = rotate_shape(&u.prim_shapes()[slot.index()], p.rotation);
                cells.extend(
                    base.cells()
                        .iter()
                        .map(|c| TriCell::new(c.x + p.dx, c.y + p.dy, c.half)),
                );
            }
            let assembled = canonicalize(&cells).map_err(|e| invalid(what, e))?;
            rotate_shape(&assembled, parts.rotation)
        }
        FigureSpec::Cells(cells) => {
            let cells: Vec<TriCell> = cells
                .iter()
                .map(|&(x, y, h)| TriCell::new(x, y, h))
                .collect();
            canonicalize(&cells).map_err(|e| invalid(what, e))?
        }
    };
    u.lookup(&shape).ok_or_else(|| {
        invalid(
            what,
            "not constructible from the trial's primitives by side-to-side attachment",
        )
    })
}
