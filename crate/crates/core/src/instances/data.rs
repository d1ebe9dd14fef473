//! Dense dataset ingestion from LIBSVM text and headed CSV.

use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Binary-labelled samples with a protected-group mask.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    /// samples × features
    pub features: Mat<f64>,
    /// entries in {−1, +1}
    pub labels: Vec<f64>,
    pub protected: Vec<bool>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    /// Marks samples with a positive value in column `idx` as protected.
    pub fn with_group_feature(mut self, idx: usize) -> Result<Self> {
        if idx >= self.num_features() {
            return Err(Error::Dimension {
                what: "group feature column",
                expected: self.num_features(),
                got: idx,
            });
        }
        self.protected = (0..self.len()).map(|i| self.features[(i, idx)] > 0.0).collect();
        Ok(self)
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn parse_label(tok: &str) -> Option<f64> {
    match tok.parse::<f64>().ok()? {
        1.0 => Some(1.0),
        v if v == -1.0 || v == 0.0 => Some(-1.0),
        _ => None,
    }
}

pub fn load_libsvm(path: impl AsRef<Path>) -> Result<Dataset> {
    load_libsvm_with_dim(path, None)
}

/// Reads `label idx:val ...` lines. Indices are 1-based; `dim` fixes the
/// feature count (otherwise the largest index seen). Blank lines and `#`
/// comments are skipped. No group information is stored; every sample
/// starts unprotected.
pub fn load_libsvm_with_dim(path: impl AsRef<Path>, dim: Option<usize>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut max_idx = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let lab = toks.next().unwrap_or_default();
        let label = parse_label(lab).ok_or_else(|| parse_err(path, lineno, format!("unknown label {lab:?}")))?;
        let mut row = Vec::new();
        for tok in toks {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(path, lineno, format!("expected idx:val, got {tok:?}")))?;
            let i: usize = i
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("bad feature index {i:?}")))?;
            if i == 0 {
                return Err(parse_err(path, lineno, "feature indices are 1-based"));
            }
            if let Some(d) = dim {
                if i > d {
                    return Err(parse_err(path, lineno, format!("feature index {i} exceeds dimension {d}")));
                }
            }
            let v: f64 = v
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("bad feature value {v:?}")))?;
            max_idx = max_idx.max(i);
            row.push((i - 1, v));
        }
        rows.push(row);
        labels.push(label);
    }
    let d = dim.unwrap_or(max_idx);
    let mut features = Mat::zeros(rows.len(), d);
    for (r, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            features[(r, j)] = v;
        }
    }
    Ok(Dataset {
        features,
        protected: vec![false; labels.len()],
        labels,
    })
}

/// Reads a comma-separated file with a header row. `label_col` and
/// `group_col` are header names; the group column is protected where
/// positive. All remaining columns become features.
pub fn load_csv(path: impl AsRef<Path>, label_col: &str, group_col: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Ok(Dataset {
            features: Mat::zeros(0, 0),
            labels: vec![],
            protected: vec![],
        });
    };
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let find = |name: &str| {
        names
            .iter()
            .position(|&n| n == name)
            .ok_or_else(|| parse_err(path, 1, format!("missing column {name:?}")))
    };
    let li = find(label_col)?;
    let gi = find(group_col)?;
    let feat_cols: Vec<usize> = (0..names.len()).filter(|&c| c != li && c != gi).collect();
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut protected = Vec::new();
    for (lineno, line) in lines {
        let lineno = lineno + 1;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != names.len() {
            return Err(parse_err(
                path,
                lineno,
                format!("expected {} fields, got {}", names.len(), cells.len()),
            ));
        }
        let num = |c: usize| {
            cells[c]
                .parse::<f64>()
                .map_err(|_| parse_err(path, lineno, format!("bad number {:?} in column {:?}", cells[c], names[c])))
        };
        labels.push(parse_label(cells[li]).ok_or_else(|| parse_err(path, lineno, format!("unknown label {:?}", cells[li])))?);
        protected.push(num(gi)? > 0.0);
        for &c in &feat_cols {
            data.push(num(c)?);
        }
    }
    Ok(Dataset {
        features: Mat::from_row_major(labels.len(), feat_cols.len(), data),
        labels,
        protected,
    })
}
