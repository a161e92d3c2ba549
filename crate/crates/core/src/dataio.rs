//! Datasets, manifests and CSV ingestion.
//!
//! A manifest is a small `key = value` text file:
//!
//! ```text
//! # comments start with '#'
//! name = birthweight
//! file = birthwt.csv
//! source = MASS::birthwt (Hosmer & Lemeshow), 189 births
//! response = bwt
//! covariates = age, lwt, smoke, ptl, ht, ui, ftv, Race-1, Race-2
//! factor race = Race-1:2, Race-2:1
//! intercept = true
//! standardize = false
//! ```
//!
//! `factor <column> = <generated>:<level>, ...` turns a categorical source
//! column into 0/1 indicator columns, one per listed level; unlisted levels
//! form the baseline. Generated names may then appear in `covariates`.
//! `file` is resolved relative to the manifest. `intercept` and
//! `standardize` record the analysis convention for the dataset.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub response_name: String,
    response: Vec<f64>,
    columns: Vec<Column>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        response_name: impl Into<String>,
        response: Vec<f64>,
        columns: Vec<Column>,
    ) -> Result<Self> {
        let n = response.len();
        if n == 0 {
            return Err(Error::InvalidInput("dataset has no observations".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for c in &columns {
            if c.values.len() != n {
                return Err(Error::Dimension(format!(
                    "column `{}` has {} values, response has {n}",
                    c.name,
                    c.values.len()
                )));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column name `{}`", c.name)));
            }
        }
        if response.iter().chain(columns.iter().flat_map(|c| &c.values)).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("dataset values must be finite".into()));
        }
        Ok(Self { name: name.into(), response_name: response_name.into(), response, columns })
    }

    pub fn n(&self) -> usize {
        self.response.len()
    }

    pub fn k(&self) -> usize {
        self.columns.len()
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, index: usize) -> &[f64] {
        &self.columns[index].values
    }

    pub fn column_name(&self, index: usize) -> &str {
        &self.columns[index].name
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn with_response(&self, response: Vec<f64>) -> Result<Self> {
        Self::new(self.name.clone(), self.response_name.clone(), response, self.columns.clone())
    }

    pub fn with_columns(&self, columns: Vec<Column>) -> Result<Self> {
        Self::new(self.name.clone(), self.response_name.clone(), self.response.clone(), columns)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub source_note: String,
    pub file: Option<PathBuf>,
    pub response_column: String,
    pub covariate_columns: Vec<String>,
    /// Source column -> ordered (generated column, level) pairs.
    pub dummy_encodings: BTreeMap<String, Vec<(String, String)>>,
    pub intercept: bool,
    pub standardize: bool,
}

impl DatasetManifest {
    pub fn new(name: impl Into<String>, response: impl Into<String>, covariates: &[&str]) -> Self {
        Self {
            name: name.into(),
            source_note: String::new(),
            file: None,
            response_column: response.into(),
            covariate_columns: covariates.iter().map(|s| s.to_string()).collect(),
            dummy_encodings: BTreeMap::new(),
            intercept: true,
            standardize: false,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Self::new("", "", &[]);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Schema(format!("manifest line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            let list = || value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty());
            let flag = || match value {
                "true" | "yes" | "on" => Ok(true),
                "false" | "no" | "off" => Ok(false),
                other => Err(Error::Schema(format!("manifest line {}: `{other}` is not a flag", lineno + 1))),
            };
            match key {
                "name" => m.name = value.to_string(),
                "source" => m.source_note = value.to_string(),
                "file" => m.file = Some(PathBuf::from(value)),
                "response" => m.response_column = value.to_string(),
                "covariates" => m.covariate_columns = list().collect(),
                "intercept" => m.intercept = flag()?,
                "standardize" => m.standardize = flag()?,
                _ if key.starts_with("factor ") => {
                    let source = key["factor ".len()..].trim().to_string();
                    let mut levels = Vec::new();
                    for item in list() {
                        let (generated, level) = item.split_once(':').ok_or_else(|| {
                            Error::Schema(format!("manifest line {}: expected `name:level`", lineno + 1))
                        })?;
                        levels.push((generated.trim().to_string(), level.trim().to_string()));
                    }
                    m.dummy_encodings.insert(source, levels);
                }
                other => return Err(Error::Schema(format!("manifest line {}: unknown key `{other}`", lineno + 1))),
            }
        }
        if m.response_column.is_empty() {
            return Err(Error::Schema("manifest names no response".into()));
        }
        if m.covariate_columns.contains(&m.response_column) {
            return Err(Error::Schema("the response is listed among the covariates".into()));
        }
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut m = Self::parse(&fs::read_to_string(path)?)?;
        if let (Some(file), Some(dir)) = (&m.file, path.parent()) {
            if file.is_relative() {
                m.file = Some(dir.join(file));
            }
        }
        Ok(m)
    }
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64> {
    let cell = cell.trim();
    let value: f64 = cell.parse().map_err(|_| Error::Parse {
        row,
        column: column.to_string(),
        message: format!("`{cell}` is not a number"),
    })?;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Parse { row, column: column.to_string(), message: "value is not finite".into() })
    }
}

/// Reads the columns named by `manifest` from a headed CSV file.
///
/// Row numbers in parse errors are 1-based data rows (the header is row 0).
pub fn load_csv(path: impl AsRef<Path>, manifest: &DatasetManifest) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|s| s.to_string()).collect();
    let position: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h.as_str(), i)).collect();
    let locate = |name: &str| {
        position.get(name).copied().ok_or_else(|| Error::Schema(format!("column `{name}` not found in the CSV header")))
    };

    let response_at = locate(&manifest.response_column)?;
    let mut generated: HashMap<&str, (usize, &str)> = HashMap::new();
    for (source, levels) in &manifest.dummy_encodings {
        let at = locate(source)?;
        for (name, level) in levels {
            generated.insert(name.as_str(), (at, level.as_str()));
        }
    }
    enum Source<'a> {
        Numeric(usize),
        Indicator(usize, &'a str),
    }
    let sources: Vec<Source> = manifest
        .covariate_columns
        .iter()
        .map(|name| match generated.get(name.as_str()) {
            Some(&(at, level)) => Ok(Source::Indicator(at, level)),
            None => locate(name).map(Source::Numeric),
        })
        .collect::<Result<_>>()?;

    let mut response = Vec::new();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); sources.len()];
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let cell = |at: usize| record.get(at).unwrap_or("");
        response.push(parse_cell(cell(response_at), row, &manifest.response_column)?);
        for ((source, out), name) in sources.iter().zip(values.iter_mut()).zip(&manifest.covariate_columns) {
            let v = match source {
                Source::Numeric(at) => parse_cell(cell(*at), row, name)?,
                Source::Indicator(at, level) => {
                    if cell(*at) == *level {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
            out.push(v);
        }
    }
    let columns = manifest
        .covariate_columns
        .iter()
        .zip(values)
        .map(|(name, values)| Column { name: name.clone(), values })
        .collect();
    Dataset::new(manifest.name.clone(), manifest.response_column.clone(), response, columns)
}

/// Loads a dataset through its manifest's `file` entry.
pub fn load_with_manifest(manifest_path: impl AsRef<Path>) -> Result<(Dataset, DatasetManifest)> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let file = manifest
        .file
        .clone()
        .ok_or_else(|| Error::Schema("manifest has no `file` entry and no data path was given".into()))?;
    Ok((load_csv(file, &manifest)?, manifest))
}

/// Writes the response and covariates as a headed CSV. Values use Rust's
/// shortest round-trip formatting, so reloading is bit-exact.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec![dataset.response_name.clone()];
    header.extend(dataset.columns().iter().map(|c| c.name.clone()));
    writer.write_record(&header)?;
    for i in 0..dataset.n() {
        let mut row = vec![format!("{:?}", dataset.response()[i])];
        row.extend(dataset.columns().iter().map(|c| format!("{:?}", c.values[i])));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Copy of `dataset` with `y[index] = value`, `index` counted from 1.
pub fn perturb_response(dataset: &Dataset, index: usize, value: f64) -> Result<Dataset> {
    if index == 0 || index > dataset.n() {
        return Err(Error::Index { index, len: dataset.n() });
    }
    if !value.is_finite() {
        return Err(Error::InvalidInput("perturbed value must be finite".into()));
    }
    let mut response = dataset.response().to_vec();
    response[index - 1] = value;
    dataset.with_response(response)
}

/// Centres every covariate and scales it to unit sample standard deviation.
pub fn standardize_columns(dataset: &Dataset) -> Result<Dataset> {
    let n = dataset.n();
    if n < 2 {
        return Err(Error::InvalidInput("standardizing needs at least two observations".into()));
    }
    let columns = dataset
        .columns()
        .iter()
        .map(|c| {
            let mean = c.values.iter().sum::<f64>() / n as f64;
            let var = c.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let sd = var.sqrt();
            if sd.is_nan() || sd <= 1e-300 || c.values.iter().all(|v| *v == c.values[0]) {
                return Err(Error::DegenerateColumn(c.name.clone()));
            }
            Ok(Column { name: c.name.clone(), values: c.values.iter().map(|v| (v - mean) / sd).collect() })
        })
        .collect::<Result<Vec<_>>>()?;
    dataset.with_columns(columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn toy() -> Dataset {
        Dataset::new(
            "toy",
            "y",
            vec![1.0, 2.0, 4.0],
            vec![
                Column { name: "x1".into(), values: vec![1.0, 2.0, 3.0] },
                Column { name: "x2".into(), values: vec![0.0, 1.0, 0.0] },
            ],
        )
        .unwrap()
    }

    #[test]
    fn toy_csv() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "y,x1,x2\n1,1,0\n2,2,1\n4,3,0").unwrap();
        let m = DatasetManifest::new("toy", "y", &["x1", "x2"]);
        let d = load_csv(f.path(), &m).unwrap();
        assert_eq!((d.n(), d.k()), (3, 2));
        assert_eq!(d, toy());
    }

    #[test]
    fn missing_column_and_bad_cell() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "y,x1\n1,1\n2,oops").unwrap();
        let m = DatasetManifest::new("toy", "y", &["x1", "x9"]);
        assert!(matches!(load_csv(f.path(), &m), Err(Error::Schema(_))));
        let m = DatasetManifest::new("toy", "y", &["x1"]);
        match load_csv(f.path(), &m) {
            Err(Error::Parse { row, column, .. }) => assert_eq!((row, column.as_str()), (2, "x1")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn factor_encoding() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "w,race,a\n1,1,0\n2,2,1\n3,3,2\n4,1,3").unwrap();
        let m = DatasetManifest::parse("response = w\ncovariates = a, R-1, R-2\nfactor race = R-1:2, R-2:3\n").unwrap();
        let d = load_csv(f.path(), &m).unwrap();
        assert_eq!(d.k(), 3);
        assert_eq!(d.column(1), &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(d.column(2), &[0.0, 0.0, 1.0, 0.0]);
        for i in 0..d.n() {
            assert!(d.column(1)[i] + d.column(2)[i] <= 1.0);
        }
    }

    #[test]
    fn manifest_errors() {
        assert!(DatasetManifest::parse("covariates = a").is_err());
        assert!(DatasetManifest::parse("response = y\ncovariates = y, a").is_err());
        assert!(DatasetManifest::parse("response = y\nbogus = 1").is_err());
        assert!(DatasetManifest::parse("response = y\nintercept = maybe").is_err());
        let m = DatasetManifest::parse("response = y\nintercept = false\nstandardize = true").unwrap();
        assert!(!m.intercept && m.standardize);
    }

    #[test]
    fn perturbation() {
        let d = toy();
        let p = perturb_response(&d, 1, 10.0).unwrap();
        assert_eq!(p.response(), &[10.0, 2.0, 4.0]);
        assert_eq!(d.response(), &[1.0, 2.0, 4.0]);
        assert_eq!(perturb_response(&d, 2, 2.0).unwrap(), d);
        assert!(matches!(perturb_response(&d, 0, 1.0), Err(Error::Index { .. })));
        assert!(matches!(perturb_response(&d, 4, 1.0), Err(Error::Index { .. })));
    }

    #[test]
    fn standardization() {
        let s = standardize_columns(&toy()).unwrap();
        let c = s.column(0);
        assert!(c.iter().sum::<f64>().abs() < 1e-15);
        assert!((c[2] - 1.0).abs() < 1e-15);
        let again = standardize_columns(&s).unwrap();
        for (a, b) in again.column(1).iter().zip(s.column(1)) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(s.response(), toy().response());
        let flat = toy().with_columns(vec![Column { name: "c".into(), values: vec![2.0; 3] }]).unwrap();
        assert!(matches!(standardize_columns(&flat), Err(Error::DegenerateColumn(_))));
    }

    #[test]
    fn dataset_invariants() {
        assert!(Dataset::new("d", "y", vec![1.0], vec![Column { name: "a".into(), values: vec![] }]).is_err());
        let dup = vec![Column { name: "a".into(), values: vec![1.0] }, Column { name: "a".into(), values: vec![2.0] }];
        assert!(Dataset::new("d", "y", vec![1.0], dup).is_err());
    }
}
