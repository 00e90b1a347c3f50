use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FeatureVector, PathLabel};
use crate::error::{Error, Result};
use crate::files;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureTableFormat {
    Json,
    Csv,
}

impl FeatureTableFormat {
    /// `.csv` selects CSV; anything else is JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => FeatureTableFormat::Csv,
            _ => FeatureTableFormat::Json,
        }
    }
}

/// Feature matrix (one row per signal or manifold) with its column labels and
/// the configuration that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    #[serde(default)]
    pub config: serde_json::Value,
    pub paths: Vec<Vec<usize>>,
    pub q: Vec<u32>,
    pub values: Vec<Vec<f64>>,
}

impl FeatureTable {
    pub fn from_vectors(config: serde_json::Value, rows: &[FeatureVector]) -> Result<Self> {
        let labels: &[PathLabel] = rows.first().map(|r| r.labels.as_slice()).unwrap_or(&[]);
        if rows.iter().any(|r| r.labels.as_slice() != labels) {
            return Err(Error::Input("feature rows carry different labels".into()));
        }
        Ok(Self {
            config,
            paths: labels.iter().map(|l| l.scales.clone()).collect(),
            q: labels.iter().map(|l| l.q).collect(),
            values: rows.iter().map(|r| r.values.clone()).collect(),
        })
    }

    pub fn labels(&self) -> Vec<PathLabel> {
        self.paths
            .iter()
            .zip(&self.q)
            .map(|(p, &q)| PathLabel { scales: p.clone(), q })
            .collect()
    }

    pub fn n_rows(&self) -> usize {
        self.values.len()
    }

    pub fn n_features(&self) -> usize {
        self.q.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("feature table serializes")
    }

    /// Header of labels such as `S(1,3)q2`, then one row per signal.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header: Vec<String> = self.labels().iter().map(ToString::to_string).collect();
        w.write_record(&header).map_err(|e| Error::Input(e.to_string()))?;
        for row in &self.values {
            w.write_record(row.iter().map(|v| v.to_string())).map_err(|e| Error::Input(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Input(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write(&self, path: &Path, format: FeatureTableFormat) -> Result<()> {
        let text = match format {
            FeatureTableFormat::Json => self.to_json(),
            FeatureTableFormat::Csv => self.to_csv()?,
        };
        files::write_atomic(path, text.as_bytes())
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let table: FeatureTable = serde_json::from_str(text)
            .map_err(|e| Error::parse(origin, format!("line {}, column {}", e.line(), e.column()), e.to_string()))?;
        table.check(origin)?;
        Ok(table)
    }

    pub fn from_csv(text: &str, origin: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header = rdr
            .headers()
            .map_err(|e| Error::parse(origin, "line 1", e.to_string()))?
            .clone();
        let labels: Vec<PathLabel> = header
            .iter()
            .map(|h| h.parse().map_err(|e: Error| Error::parse(origin, "line 1", e.to_string())))
            .collect::<Result<_>>()?;
        let mut values = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = format!("line {}", i + 2);
            let rec = rec.map_err(|e| Error::parse(origin, &line, e.to_string()))?;
            let row = rec
                .iter()
                .map(|f| f.trim().parse::<f64>().map_err(|e| Error::parse(origin, &line, format!("{f:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            values.push(row);
        }
        let table = Self {
            config: serde_json::Value::Null,
            paths: labels.iter().map(|l| l.scales.clone()).collect(),
            q: labels.iter().map(|l| l.q).collect(),
            values,
        };
        table.check(origin)?;
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = files::read_to_string(path)?;
        let origin = path.display().to_string();
        if text.trim_start().starts_with('{') {
            Self::from_json(&text, &origin)
        } else {
            Self::from_csv(&text, &origin)
        }
    }

    fn check(&self, origin: &str) -> Result<()> {
        if self.paths.len() != self.q.len() {
            return Err(Error::parse(origin, "header", "paths and q differ in length"));
        }
        for (i, row) in self.values.iter().enumerate() {
            if row.len() != self.q.len() {
                return Err(Error::parse(
                    origin,
                    format!("row {i}"),
                    format!("{} values for {} labels", row.len(), self.q.len()),
                ));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::parse(origin, format!("row {i}"), "non-finite feature"));
            }
        }
        Ok(())
    }
}
