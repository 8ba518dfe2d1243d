use crate::error::{Error, Result};

/// Dense `n x d` feature matrix kept in both row- and column-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    n: usize,
    d: usize,
    rows: Vec<f64>,
    cols: Vec<f64>,
}

impl Features {
    pub fn from_rows(n: usize, d: usize, rows: Vec<f64>) -> Result<Self> {
        if rows.len() != n * d {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: n * d,
            });
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite feature value".into()));
        }
        let mut cols = vec![0.0; n * d];
        for i in 0..n {
            for k in 0..d {
                cols[k * n + i] = rows[i * d + k];
            }
        }
        Ok(Features { n, d, rows, cols })
    }

    pub fn from_row_vecs(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Data("ragged feature rows".into()));
        }
        Self::from_rows(rows.len(), d, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.d..(i + 1) * self.d]
    }

    #[inline]
    pub fn col(&self, k: usize) -> &[f64] {
        &self.cols[k * self.n..(k + 1) * self.n]
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.cols[k * self.n + i]
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.rows
    }

    /// Subset of rows, in the given order.
    pub fn select(&self, idx: &[usize]) -> Features {
        let mut rows = Vec::with_capacity(idx.len() * self.d);
        for &i in idx {
            rows.extend_from_slice(self.row(i));
        }
        Features::from_rows(idx.len(), self.d, rows).expect("subset of valid rows")
    }
}
