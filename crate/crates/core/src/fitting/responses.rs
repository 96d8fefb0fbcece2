use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FitError, Result};

/// Aggregated answers to one test item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRow {
    pub trial_id: String,
    pub item_id: String,
    pub n_yes: u64,
    pub n_total: u64,
}

/// Yes/no counts per (trial, item), read from and written to CSV.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ResponseData {
    rows: Vec<ResponseRow>,
}

impl ResponseData {
    pub fn new(rows: Vec<ResponseRow>) -> Result<ResponseData> {
        for r in &rows {
            if r.n_yes > r.n_total {
                return Err(FitError::Format(format!(
                    "{}/{}: n_yes {} exceeds n_total {}",
                    r.trial_id, r.item_id, r.n_yes, r.n_total
                )));
            }
        }
        for (i, r) in rows.iter().enumerate() {
            if rows[..i]
                .iter()
                .any(|o| o.trial_id == r.trial_id && o.item_id == r.item_id)
            {
                return Err(FitError::Format(format!(
                    "duplicate row {}/{}",
                    r.trial_id, r.item_id
                )));
            }
        }
        Ok(ResponseData { rows })
    }

    pub fn rows(&self) -> &[ResponseRow] {
        &self.rows
    }

    /// Observed proportion of yes answers, if the item was observed.
    pub fn proportion(&self, trial_id: &str, item_id: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.trial_id == trial_id && r.item_id == item_id && r.n_total > 0)
            .map(|r| r.n_yes as f64 / r.n_total as f64)
    }

    pub fn from_csv(reader: impl std::io::Read) -> Result<ResponseData> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| FitError::Format(e.to_string()))?
            .clone();
        let expected = ["trial_id", "item_id", "n_yes", "n_total"];
        if !headers.iter().eq(expected) {
            return Err(FitError::Format(format!(
                "expected header {}, found {}",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let rows = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<ResponseRow>, _>>()
            .map_err(|e| FitError::Format(e.to_string()))?;
        ResponseData::new(rows)
    }

    pub fn load(path: &Path) -> Result<ResponseData> {
        let file = std::fs::File::open(path)
            .map_err(|e| FitError::Format(format!("{}: {e}", path.display())))?;
        ResponseData::from_csv(file)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}
