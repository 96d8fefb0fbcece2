//! Exemplar-model (GCM) baselines: similarity to the training examples under a
//! string-encoding distance or a feature-vector cosine distance.

mod features;

pub use features::{cosine_distance, FeatureTable};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{FigureId, Universe};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("figure {0} has no parse")]
    NoParse(FigureId),
    #[error("feature vectors differ in dimension: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("zero feature vector")]
    ZeroVector,
    #[error("no feature vector for figure {0:?}")]
    MissingFeature(String),
    #[error("invalid weights: {0}")]
    BadWeights(String),
    #[error("feature file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, BaselineError>;

/// A figure written as three token strings: parts, configuration indices and orientation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StringEncoding {
    pub parts: Vec<String>,
    pub config: Vec<String>,
    pub orient: Vec<String>,
}

impl StringEncoding {
    pub fn parts_text(&self) -> String {
        self.parts.concat()
    }

    pub fn config_text(&self) -> String {
        self.config.join("-")
    }

    pub fn orient_text(&self) -> String {
        self.orient.concat()
    }
}

impl fmt::Display for StringEncoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}+{}+{}",
            self.parts_text(),
            self.config_text(),
            self.orient_text()
        )
    }
}

fn tokenize_parts(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c == 'p' {
            let mut tok = String::from(c);
            while let Some(d) = chars.next_if(char::is_ascii_digit) {
                tok.push(d);
            }
            out.push(tok);
        } else {
            out.push(c.to_string());
        }
    }
    out
}

/// Encode a universe figure from its least construction.
pub fn encode_string(u: &Universe, id: FigureId) -> Result<StringEncoding> {
    let c = u
        .figure(id)
        .constructions
        .first()
        .ok_or(BaselineError::NoParse(id))?;
    Ok(StringEncoding {
        parts: tokenize_parts(&c.tree.to_string()),
        config: c.tree.config_indices().iter().map(u32::to_string).collect(),
        orient: vec![c.rotation.degrees().to_string()],
    })
}

/// Unit-cost edit distance between token sequences.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GcmParams {
    pub w_parts: f64,
    pub w_config: f64,
    pub w_orient: f64,
    /// Sensitivity of similarity to distance.
    pub w_scale: f64,
}

impl Default for GcmParams {
    fn default() -> Self {
        GcmParams {
            w_parts: 1.0,
            w_config: 1.0,
            w_orient: 1.0,
            w_scale: 1.0,
        }
    }
}

impl GcmParams {
    pub fn validate(&self) -> Result<()> {
        let w = [self.w_parts, self.w_config, self.w_orient];
        if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) || w.iter().sum::<f64>() <= 0.0 {
            return Err(BaselineError::BadWeights(format!(
                "substring weights {w:?} must be non-negative and not all zero"
            )));
        }
        if !(self.w_scale > 0.0) {
            return Err(BaselineError::BadWeights(format!(
                "scale {} must be positive",
                self.w_scale
            )));
        }
        Ok(())
    }
}

/// Weighted mean of the three substring edit distances.
pub fn weighted_distance(a: &StringEncoding, b: &StringEncoding, g: &GcmParams) -> f64 {
    let total = g.w_parts + g.w_config + g.w_orient;
    (g.w_parts * levenshtein(&a.parts, &b.parts) as f64
        + g.w_config * levenshtein(&a.config, &b.config) as f64
        + g.w_orient * levenshtein(&a.orient, &b.orient) as f64)
        / total
}

/// Mean exponential similarity of an item to the examples, given its distances to each.
pub fn gcm_similarity(distances: &[f64], w_scale: f64) -> f64 {
    if distances.is_empty() {
        return 0.0;
    }
    distances.iter().map(|d| (-w_scale * d).exp()).sum::<f64>() / distances.len() as f64
}

/// GCM prediction for `item` from the examples under an arbitrary distance.
pub fn gcm_predict<T>(examples: &[T], item: &T, w_scale: f64, dist: impl Fn(&T, &T) -> f64) -> f64 {
    let d: Vec<f64> = examples.iter().map(|x| dist(item, x)).collect();
    gcm_similarity(&d, w_scale)
}
