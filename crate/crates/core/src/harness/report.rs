//! Prediction and comparison reports.

use serde::{Deserialize, Serialize};

use crate::fitting::ResponseData;

use super::trial::ItemTag;
use super::HarnessError;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Bayesian,
    StringGcm,
    FeatureGcm,
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bayesian" => Ok(ModelKind::Bayesian),
            "string-gcm" => Ok(ModelKind::StringGcm),
            "feature-gcm" => Ok(ModelKind::FeatureGcm),
            other => Err(format!(
                "unknown model {other:?} (bayesian, string-gcm, feature-gcm)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemPrediction {
    pub item_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<ItemTag>,
    /// Model probability that the item belongs to the concept.
    pub q: f64,
    /// Probability of a yes answer after the lapse layer.
    pub response_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialPrediction {
    pub trial_id: String,
    pub items: Vec<ItemPrediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionReport {
    pub schema_version: u32,
    pub model: ModelKind,
    /// Model parameters used, as written in the run configuration.
    pub params: serde_json::Value,
    pub trials: Vec<TrialPrediction>,
}

impl PredictionReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<PredictionReport, HarnessError> {
        let r: PredictionReport =
            serde_json::from_str(text).map_err(|e| HarnessError::Schema(e.to_string()))?;
        if r.schema_version != REPORT_SCHEMA_VERSION {
            return Err(HarnessError::Schema(format!(
                "unsupported schema_version {}",
                r.schema_version
            )));
        }
        for t in &r.trials {
            for i in &t.items {
                if !(0.0..=1.0).contains(&i.q) || !(0.0..=1.0).contains(&i.response_prob) {
                    return Err(HarnessError::Schema(format!(
                        "{}/{}: probabilities must lie in [0, 1]",
                        t.trial_id, i.item_id
                    )));
                }
            }
        }
        Ok(r)
    }
}

/// Sample Pearson correlation; `None` when either vector is constant or lengths are invalid.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterPoint {
    pub item_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<ItemTag>,
    pub model: f64,
    pub observed: f64,
    pub n_total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialComparison {
    pub trial_id: String,
    /// Correlation between model response probabilities and observed proportions;
    /// absent when either side is constant.
    pub r: Option<f64>,
    pub points: Vec<ScatterPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonReport {
    pub schema_version: u32,
    pub model: ModelKind,
    pub trials: Vec<TrialComparison>,
    /// Mean of the defined per-trial correlations.
    pub average_r: Option<f64>,
    /// Trials left out of the average because a correlation was undefined.
    pub warnings: Vec<String>,
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Scatter-ready rows: trial, item, tag, model, observed.
    pub fn scatter_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["trial_id", "item_id", "tag", "model", "observed", "n_total"])
            .expect("in-memory write");
        for t in &self.trials {
            for p in &t.points {
                w.write_record([
                    t.trial_id.clone(),
                    p.item_id.clone(),
                    p.tag.map(|t| t.to_string()).unwrap_or_default(),
                    p.model.to_string(),
                    p.observed.to_string(),
                    p.n_total.to_string(),
                ])
                .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// Per-trial correlations as a plain table, one line per trial plus the average.
    pub fn summary_table(&self) -> String {
        let mut out = String::from("trial_id\tr\n");
        for t in &self.trials {
            let r =
                t.r.map(|r| format!("{r:.3}"))
                    .unwrap_or_else(|| "undefined".into());
            out.push_str(&format!("{}\t{r}\n", t.trial_id));
        }
        let avg = self
            .average_r
            .map(|r| format!("{r:.3}"))
            .unwrap_or_else(|| "undefined".into());
        out.push_str(&format!("average\t{avg}\n"));
        out
    }
}

/// Correlate a prediction report with observed responses, trial by trial.
pub fn compare(
    report: &PredictionReport,
    data: &ResponseData,
) -> Result<ComparisonReport, HarnessError> {
    let mut trials = Vec::new();
    let mut warnings = Vec::new();
    for t in &report.trials {
        let mut points = Vec::new();
        for item in &t.items {
            let row = data
                .rows()
                .iter()
                .find(|r| r.trial_id == t.trial_id && r.item_id == item.item_id);
            if let Some(row) = row.filter(|r| r.n_total > 0) {
                points.push(ScatterPoint {
                    item_id: item.item_id.clone(),
                    tag: item.tag,
                    model: item.response_prob,
                    observed: row.n_yes as f64 / row.n_total as f64,
                    n_total: row.n_total,
                });
            }
        }
        if points.is_empty() {
            return Err(HarnessError::MissingData(t.trial_id.clone()));
        }
        let model: Vec<f64> = points.iter().map(|p| p.model).collect();
        let observed: Vec<f64> = points.iter().map(|p| p.observed).collect();
        let r = pearson_r(&model, &observed);
        if r.is_none() {
            warnings.push(format!(
                "{}: correlation undefined (constant vector)",
                t.trial_id
            ));
        }
        trials.push(TrialComparison {
            trial_id: t.trial_id.clone(),
            r,
            points,
        });
    }
    let defined: Vec<f64> = trials.iter().filter_map(|t| t.r).collect();
    let average_r =
        (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    Ok(ComparisonReport {
        schema_version: REPORT_SCHEMA_VERSION,
        model: report.model,
        trials,
        average_r,
        warnings,
    })
}
