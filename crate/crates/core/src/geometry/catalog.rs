use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{canonicalize, GeometryError, Half, Result, Shape, TriCell};

pub const CATALOG_SCHEMA_VERSION: u32 = 1;

const DEFAULT_CATALOG: &str = include_str!("../../assets/primitives.json");

/// A shape primitive: four half-square triangles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Primitive {
    pub id: String,
    pub shape: Shape,
}

impl Primitive {
    pub fn new(id: impl Into<String>, cells: &[TriCell]) -> Result<Primitive> {
        let id = id.into();
        if cells.len() != 4 {
            return Err(GeometryError::BadPrimitive(id, cells.len()));
        }
        let shape = canonicalize(cells)?;
        Ok(Primitive { id, shape })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogEntry {
    pub id: String,
    pub cells: Vec<(i32, i32, Half)>,
}

/// On-disk catalog document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrimitiveFile {
    pub schema_version: u32,
    pub primitives: Vec<CatalogEntry>,
}

/// The library of primitives trials can draw from.
#[derive(Debug, Clone)]
pub struct Catalog {
    primitives: Vec<Primitive>,
}

impl Catalog {
    pub fn from_json(text: &str) -> Result<Catalog> {
        let file: PrimitiveFile =
            serde_json::from_str(text).map_err(|e| GeometryError::Catalog(e.to_string()))?;
        if file.schema_version != CATALOG_SCHEMA_VERSION {
            return Err(GeometryError::Catalog(format!(
                "unsupported schema_version {}",
                file.schema_version
            )));
        }
        let mut primitives: Vec<Primitive> = Vec::new();
        for entry in file.primitives {
            if primitives.iter().any(|p| p.id == entry.id) {
                return Err(GeometryError::DuplicatePrimitive(entry.id));
            }
            let cells: Vec<TriCell> = entry
                .cells
                .iter()
                .map(|&(x, y, h)| TriCell::new(x, y, h))
                .collect();
            primitives.push(Primitive::new(entry.id, &cells)?);
        }
        Ok(Catalog { primitives })
    }

    pub fn load(path: &Path) -> Result<Catalog> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GeometryError::Catalog(format!("{}: {e}", path.display())))?;
        Catalog::from_json(&text)
    }

    /// The catalog shipped with the crate.
    pub fn builtin() -> Catalog {
        Catalog::from_json(DEFAULT_CATALOG).expect("bundled catalog is valid")
    }

    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    pub fn get(&self, id: &str) -> Result<&Primitive> {
        self.primitives
            .iter()
            .find(|p| p.id == id)
            .ok_or_else(|| GeometryError::UnknownPrimitive(id.to_string()))
    }

    /// Resolve a list of ids into primitives, in order.
    pub fn select(&self, ids: &[impl AsRef<str>]) -> Result<Vec<Primitive>> {
        ids.iter()
            .map(|id| self.get(id.as_ref()).cloned())
            .collect()
    }
}
