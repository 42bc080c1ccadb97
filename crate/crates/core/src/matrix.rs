//! Named, column-major feature tables.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVectorView};

use crate::error::{Error, Result};

/// Dense `n x m` table of finite reals: rows are observations, columns are
/// named features. Storage is column-major, so each feature is contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    values: DMatrix<f64>,
    names: Vec<String>,
}

impl FeatureMatrix {
    /// Validates `m >= 1`, `n >= 2`, `m <= n`, finiteness and unique names.
    pub fn new(values: DMatrix<f64>, names: Vec<String>) -> Result<Self> {
        let (n, m) = values.shape();
        if m == 0 {
            return Err(Error::InvalidInput("a feature matrix needs at least one column".into()));
        }
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "a feature matrix needs at least two rows, got {n}"
            )));
        }
        if m > n {
            return Err(Error::InvalidInput(format!(
                "more features ({m}) than observations ({n})"
            )));
        }
        if names.len() != m {
            return Err(Error::InvalidInput(format!(
                "{} names supplied for {m} columns",
                names.len()
            )));
        }
        let mut seen = HashSet::with_capacity(m);
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate feature name `{name}`")));
            }
        }
        for (j, col) in values.column_iter().enumerate() {
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "non-finite value at row {i}, column `{}`",
                    names[j]
                )));
            }
        }
        Ok(Self { values, names })
    }

    /// Builds a matrix with default names `x1..xm`.
    pub fn unnamed(values: DMatrix<f64>) -> Result<Self> {
        let names = default_names(values.ncols());
        Self::new(values, names)
    }

    /// Column-major constructor from per-feature vectors.
    pub fn from_columns(columns: &[Vec<f64>], names: Vec<String>) -> Result<Self> {
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::ShapeMismatch("columns have different lengths".into()));
        }
        let data: Vec<f64> = columns.iter().flatten().copied().collect();
        Self::new(DMatrix::from_vec(n, columns.len(), data), names)
    }

    /// Row-major constructor, convenient for small literals.
    pub fn from_rows(rows: &[Vec<f64>], names: Vec<String>) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::ShapeMismatch("rows have different lengths".into()));
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(rows.len(), m, &data), names)
    }

    pub(crate) fn from_parts_unchecked(values: DMatrix<f64>, names: Vec<String>) -> Self {
        debug_assert_eq!(values.ncols(), names.len());
        Self { values, names }
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.nrows();
        &self.values.as_slice()[j * n..(j + 1) * n]
    }

    pub fn column_view(&self, j: usize) -> DVectorView<'_, f64> {
        self.values.column(j)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Same values under a new set of names.
    pub fn with_names(self, names: Vec<String>) -> Result<Self> {
        Self::new(self.values, names)
    }
}

pub fn default_names(m: usize) -> Vec<String> {
    (1..=m).map(|j| format!("x{j}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(FeatureMatrix::unnamed(DMatrix::zeros(1, 1)).is_err());
        assert!(FeatureMatrix::unnamed(DMatrix::zeros(2, 3)).is_err());
        assert!(FeatureMatrix::unnamed(DMatrix::zeros(3, 0)).is_err());
        let mut v = DMatrix::zeros(3, 2);
        v[(1, 1)] = f64::NAN;
        assert!(FeatureMatrix::unnamed(v).is_err());
        let dup = FeatureMatrix::new(DMatrix::zeros(3, 2), vec!["a".into(), "a".into()]);
        assert!(matches!(dup, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn column_slices_are_contiguous() {
        let f = FeatureMatrix::from_rows(
            &[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        assert_eq!(f.column(0), &[1.0, 3.0, 5.0]);
        assert_eq!(f.column(1), &[2.0, 4.0, 6.0]);
        assert_eq!(f.column_index("b"), Some(1));
    }
}
