use std::collections::BTreeMap;
use std::path::Path;

use super::{BaselineError, Result};

/// `1 - cos(u, v)`.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(BaselineError::DimensionMismatch(u.len(), v.len()));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(BaselineError::ZeroVector);
    }
    Ok((1.0 - dot / (nu * nv)).clamp(0.0, 2.0))
}

/// Precomputed feature vectors keyed by figure key.
///
/// The file is CSV with a header row `figure,f1,...,fn`; every row has the same
/// number of values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureTable {
    dim: usize,
    rows: BTreeMap<String, Vec<f64>>,
}

impl FeatureTable {
    pub fn new(rows: impl IntoIterator<Item = (String, Vec<f64>)>) -> Result<FeatureTable> {
        let mut table = FeatureTable::default();
        for (key, v) in rows {
            if table.rows.is_empty() {
                table.dim = v.len();
            } else if v.len() != table.dim {
                return Err(BaselineError::DimensionMismatch(table.dim, v.len()));
            }
            if table.rows.insert(key.clone(), v).is_some() {
                return Err(BaselineError::Format(format!("duplicate figure {key:?}")));
            }
        }
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, key: &str) -> Result<&[f64]> {
        self.rows
            .get(key)
            .map(Vec::as_slice)
            .ok_or_else(|| BaselineError::MissingFeature(key.to_string()))
    }

    pub fn distance(&self, a: &str, b: &str) -> Result<f64> {
        cosine_distance(self.get(a)?, self.get(b)?)
    }

    pub fn from_csv(reader: impl std::io::Read) -> Result<FeatureTable> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| BaselineError::Format(e.to_string()))?
            .clone();
        if headers.get(0) != Some("figure") || headers.len() < 2 {
            return Err(BaselineError::Format(
                "header must be figure,f1,...,fn".into(),
            ));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| BaselineError::Format(e.to_string()))?;
            let key = rec[0].to_string();
            let values = rec
                .iter()
                .skip(1)
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| BaselineError::Format(format!("{key}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push((key, values));
        }
        FeatureTable::new(rows)
    }

    pub fn load(path: &Path) -> Result<FeatureTable> {
        let f = std::fs::File::open(path)
            .map_err(|e| BaselineError::Format(format!("{}: {e}", path.display())))?;
        FeatureTable::from_csv(f)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["figure".to_string()];
        header.extend((1..=self.dim).map(|i| format!("f{i}")));
        w.write_record(&header).expect("in-memory write");
        for (k, v) in &self.rows {
            let mut rec = vec![k.clone()];
            rec.extend(v.iter().map(|x| x.to_string()));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}
