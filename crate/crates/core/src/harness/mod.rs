//! Trial files, experiment pipeline, reports, rendering and configuration.

mod config;
mod pipeline;
mod render;
mod report;
mod trial;

pub use config::{sampling_grammar, GcmSettings, GrammarSettings, RunConfig, SamplerSettings};
pub use pipeline::{
    bayesian_prediction, bayesian_report, feature_gcm_prediction, fit_bayesian, fit_string_gcm,
    gcm_report, infer_trial, load_pool, pool_path, prepare_trial, shape_key, string_gcm_prediction,
    string_gcm_q, trial_seed, GCM_FIT_NAMES,
};
pub use render::{render_figure, render_parts, SvgStyle};
pub use report::{
    compare, pearson_r, ComparisonReport, ItemPrediction, ModelKind, PredictionReport,
    ScatterPoint, TrialComparison, TrialPrediction, REPORT_SCHEMA_VERSION,
};
pub use trial::{
    load_trial, resolve_figure, resolve_trial, Archetype, FigureSpec, ItemTag, PartSpec, PartsSpec,
    TestItemSpec, Trial, TrialSpec, MAX_TEST_ITEMS, MIN_TEST_ITEMS, TRIAL_SCHEMA_VERSION,
};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::baselines::BaselineError;
use crate::dsl::DslError;
use crate::fitting::FitError;
use crate::geometry::{Catalog, GeometryError};
use crate::inference::InferenceError;

/// Environment variable that overrides the bundled asset directory.
pub const ASSETS_ENV: &str = "ALIEN_ASSETS_DIR";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("schema: {0}")]
    Schema(String),
    #[error("unknown primitive {0:?}")]
    UnknownPrimitive(String),
    #[error("invalid figure {figure}: {reason}")]
    InvalidFigure { figure: String, reason: String },
    #[error("{0}")]
    Io(String),
    #[error("no response data for {0}")]
    MissingData(String),
    #[error("no hypothesis pool for trial {0:?}")]
    MissingPool(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
}

impl HarnessError {
    /// Stable machine-readable error name.
    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Schema(_) => "SchemaError",
            HarnessError::UnknownPrimitive(_) => "UnknownPrimitive",
            HarnessError::InvalidFigure { .. } => "InvalidFigure",
            HarnessError::Io(_) => "IoError",
            HarnessError::MissingData(_) | HarnessError::Fit(FitError::MissingData(_)) => {
                "MissingData"
            }
            HarnessError::MissingPool(_) | HarnessError::Fit(FitError::MissingPool(_)) => {
                "MissingPool"
            }
            HarnessError::Config(_) => "ConfigError",
            HarnessError::Geometry(_) => "GeometryError",
            HarnessError::Dsl(_) => "ProgramError",
            HarnessError::Inference(InferenceError::AllZeroWeights)
            | HarnessError::Fit(FitError::Inference(InferenceError::AllZeroWeights)) => {
                "AllZeroWeights"
            }
            HarnessError::Fit(FitError::UnknownItem { .. }) => "UnknownItem",
            HarnessError::Inference(_) => "InferenceError",
            HarnessError::Fit(_) => "FitError",
            HarnessError::Baseline(_) => "BaselineError",
        }
    }
}

/// Directory holding the catalog, bundled trials and golden renderings.
pub fn assets_dir() -> PathBuf {
    std::env::var_os(ASSETS_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/assets")))
}

/// The catalog in the asset directory, falling back to the compiled-in copy.
pub fn load_catalog(assets: &Path) -> Result<Catalog, HarnessError> {
    let path = assets.join("primitives.json");
    if path.exists() {
        Ok(Catalog::load(&path)?)
    } else {
        Ok(Catalog::builtin())
    }
}

/// Paths of the bundled trial files, sorted by name.
pub fn bundled_trial_paths(assets: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let dir = assets.join("trials");
    let entries =
        std::fs::read_dir(&dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    Ok(paths)
}

/// Load every bundled trial.
pub fn bundled_trials(assets: &Path, strict_test_count: bool) -> Result<Vec<Trial>, HarnessError> {
    let catalog = load_catalog(assets)?;
    bundled_trial_paths(assets)?
        .iter()
        .map(|p| load_trial(p, &catalog, strict_test_count))
        .collect()
}
