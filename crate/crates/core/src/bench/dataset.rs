use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Features;
use crate::forest::InputSchema;

/// Which column holds the label.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    Last,
    Name(String),
    Index(usize),
}

impl std::str::FromStr for LabelColumn {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

/// Labelled data with features scaled to the unit cube.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Features,
    /// Labels in original units.
    pub y: Vec<f64>,
    pub feature_names: Vec<String>,
    pub label_name: String,
    /// Per-feature (min, max) of the raw values.
    pub bounds: Vec<(f64, f64)>,
    /// Level names of integer-coded categorical features.
    pub categories: BTreeMap<String, Vec<String>>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.x.n()
    }

    pub fn d(&self) -> usize {
        self.x.d()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            feature_names: self.feature_names.clone(),
            label_name: self.label_name.clone(),
            bounds: self.bounds.clone(),
            categories: self.categories.clone(),
        }
    }

    pub fn schema(&self) -> InputSchema {
        InputSchema {
            feature_names: self.feature_names.clone(),
            label_name: self.label_name.clone(),
            bounds: self.bounds.clone(),
            categories: self.categories.clone(),
        }
    }

    /// Raw feature values of row `i`.
    pub fn denormalize_row(&self, i: usize) -> Vec<f64> {
        self.x
            .row(i)
            .iter()
            .zip(&self.bounds)
            .map(|(&v, &(lo, hi))| if hi > lo { lo + v * (hi - lo) } else { lo })
            .collect()
    }
}

/// Min-max scales columns in place and returns their bounds. Constant
/// columns map to 0.5.
pub fn normalize_columns(rows: &mut [f64], n: usize, d: usize, names: &[String]) -> Vec<(f64, f64)> {
    let mut bounds = Vec::with_capacity(d);
    for k in 0..d {
        let (lo, hi) = (0..n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            let v = rows[i * d + k];
            (lo.min(v), hi.max(v))
        });
        if hi > lo {
            for i in 0..n {
                rows[i * d + k] = (rows[i * d + k] - lo) / (hi - lo);
            }
        } else {
            log::warn!("feature `{}` is constant; normalized to 0.5", names[k]);
            for i in 0..n {
                rows[i * d + k] = 0.5;
            }
        }
        bounds.push((lo, hi));
    }
    bounds
}

/// Reads a CSV with a header row. Columns whose cells are all non-numeric
/// are integer-coded (levels in sorted order); a column mixing numbers and
/// text is rejected with the offending row numbers.
pub fn ingest_csv(path: &Path, label: &LabelColumn, normalize: bool) -> Result<Dataset> {
    if !path.exists() {
        return Err(Error::Data(format!("no such file: {}", path.display())));
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut cells: Vec<Vec<String>> = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        cells.push(rec.iter().map(str::to_string).collect());
    }
    parse_table(header, cells, label, normalize)
}

pub fn parse_table(header: Vec<String>, cells: Vec<Vec<String>>, label: &LabelColumn, normalize: bool) -> Result<Dataset> {
    let ncol = header.len();
    if ncol < 2 {
        return Err(Error::Data("need at least one feature and a label column".into()));
    }
    let label_idx = match label {
        LabelColumn::Last => ncol - 1,
        LabelColumn::Index(i) if *i < ncol => *i,
        LabelColumn::Index(i) => return Err(Error::Data(format!("label column {i} out of range"))),
        LabelColumn::Name(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("no column named `{name}`")))?,
    };
    let n = cells.len();
    if n < 2 {
        return Err(Error::Data(format!("need at least 2 rows, found {n}")));
    }

    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(ncol);
    let mut categories = BTreeMap::new();
    for c in 0..ncol {
        let raw: Vec<&str> = cells.iter().map(|r| r.get(c).map_or("", String::as_str)).collect();
        let parsed: Vec<Option<f64>> = raw
            .iter()
            .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect();
        let bad: Vec<usize> = parsed
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_none())
            .map(|(i, _)| i + 2)
            .collect();
        if bad.is_empty() {
            columns.push(parsed.into_iter().map(Option::unwrap).collect());
        } else if bad.len() == n && c != label_idx && raw.iter().all(|s| !s.is_empty()) {
            let mut levels: Vec<String> = raw.iter().map(|s| s.to_string()).collect();
            levels.sort();
            levels.dedup();
            let code: Vec<f64> = raw
                .iter()
                .map(|s| levels.binary_search_by(|l| l.as_str().cmp(s)).unwrap() as f64)
                .collect();
            categories.insert(header[c].clone(), levels);
            columns.push(code);
        } else {
            let shown: Vec<String> = bad.iter().take(10).map(usize::to_string).collect();
            return Err(Error::Data(format!(
                "non-numeric cells in column `{}` at rows {}{}",
                header[c],
                shown.join(", "),
                if bad.len() > 10 { ", ..." } else { "" }
            )));
        }
    }

    let y = columns[label_idx].clone();
    let feature_idx: Vec<usize> = (0..ncol).filter(|&c| c != label_idx).collect();
    let feature_names: Vec<String> = feature_idx.iter().map(|&c| header[c].clone()).collect();
    let d = feature_idx.len();
    let mut rows = Vec::with_capacity(n * d);
    for i in 0..n {
        for &c in &feature_idx {
            rows.push(columns[c][i]);
        }
    }
    let bounds = if normalize {
        normalize_columns(&mut rows, n, d, &feature_names)
    } else {
        vec![(0.0, 1.0); d]
    };
    Ok(Dataset {
        x: Features::from_rows(n, d, rows)?,
        y,
        feature_names,
        label_name: header[label_idx].clone(),
        bounds,
        categories,
    })
}

/// Rows of a CSV encoded with a training schema: features are looked up by
/// name, categorical levels mapped to their training codes and values
/// scaled with the training bounds. Labels are returned when the label
/// column is present.
pub fn ingest_with_schema(path: &Path, schema: &InputSchema) -> Result<(Features, Option<Vec<f64>>)> {
    if !path.exists() {
        return Err(Error::Data(format!("no such file: {}", path.display())));
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| header.iter().position(|h| h == name);
    let cols: Vec<usize> = schema
        .feature_names
        .iter()
        .map(|name| find(name).ok_or_else(|| Error::Data(format!("missing feature column `{name}`"))))
        .collect::<Result<_>>()?;
    let label_col = find(&schema.label_name);
    let d = cols.len();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        let rec = rec?;
        for (k, &c) in cols.iter().enumerate() {
            let cell = rec.get(c).unwrap_or("");
            let name = &schema.feature_names[k];
            let raw = match schema.categories.get(name) {
                Some(levels) => levels
                    .iter()
                    .position(|l| l == cell)
                    .ok_or_else(|| Error::Data(format!("unknown level `{cell}` of `{name}` at row {}", r + 2)))?
                    as f64,
                None => cell
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Data(format!("non-numeric cell in column `{name}` at row {}", r + 2)))?,
            };
            let (lo, hi) = schema.bounds[k];
            rows.push(if hi > lo { (raw - lo) / (hi - lo) } else { 0.5 });
        }
        if let Some(c) = label_col {
            let v = rec.get(c).and_then(|s| s.parse::<f64>().ok()).filter(|v| v.is_finite());
            labels.push(v.ok_or_else(|| Error::Data(format!("non-numeric label at row {}", r + 2)))?);
        }
    }
    let n = rows.len() / d.max(1);
    Ok((Features::from_rows(n, d, rows)?, label_col.map(|_| labels)))
}

/// Serializable description of a dataset for manifests.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n: usize,
    pub d: usize,
    pub label: String,
    pub features: Vec<String>,
}

impl From<&Dataset> for DatasetSummary {
    fn from(ds: &Dataset) -> Self {
        DatasetSummary {
            n: ds.n(),
            d: ds.d(),
            label: ds.label_name.clone(),
            features: ds.feature_names.clone(),
        }
    }
}
