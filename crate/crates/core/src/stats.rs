//! Per-feature moments, centering, and correlation-type matrices.
//!
//! Every reduction goes through [`CompensatedSum`] in index order, so results
//! are bit-stable for a given input regardless of how callers schedule columns.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.total()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    compensated_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// Arithmetic mean `(1/n) * sum f_i`.
pub fn column_mean(f: &[f64]) -> Result<f64> {
    if f.is_empty() {
        return Err(Error::InvalidInput("mean of an empty vector".into()));
    }
    Ok(compensated_sum(f.iter().copied()) / f.len() as f64)
}

/// Population variance (divides by `n`), two-pass on explicitly centered data.
pub fn column_variance(f: &[f64]) -> Result<f64> {
    let mean = column_mean(f)?;
    Ok(centered_sum_of_squares(f, mean) / f.len() as f64)
}

/// `sum (f_i - mean)^2` with the usual two-pass correction term.
fn centered_sum_of_squares(f: &[f64], mean: f64) -> f64 {
    let mut squares = CompensatedSum::new();
    let mut deviations = CompensatedSum::new();
    for &x in f {
        let d = x - mean;
        squares.add(d * d);
        deviations.add(d);
    }
    let drift = deviations.total();
    (squares.total() - drift * drift / f.len() as f64).max(0.0)
}

/// Means, population variances, and centered column norms of a table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    /// `||f - mean(f)||_2`, equal to `sqrt(n * variance)`.
    pub centered_norms: Vec<f64>,
}

impl FeatureStats {
    pub fn compute(f: &FeatureMatrix) -> Self {
        let n = f.nrows() as f64;
        let m = f.ncols();
        let mut means = Vec::with_capacity(m);
        let mut variances = Vec::with_capacity(m);
        let mut centered_norms = Vec::with_capacity(m);
        for j in 0..m {
            let col = f.column(j);
            let mean = compensated_sum(col.iter().copied()) / n;
            let ss = centered_sum_of_squares(col, mean);
            means.push(mean);
            variances.push(ss / n);
            centered_norms.push(ss.sqrt());
        }
        Self {
            means,
            variances,
            centered_norms,
        }
    }
}

/// True when the centered norm is indistinguishable from zero at the column's scale.
pub(crate) fn is_effectively_constant(col: &[f64], centered_norm: f64) -> bool {
    let scale = col.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    centered_norm <= 1e-12 * (col.len() as f64).sqrt() * scale
}

/// Projects each column onto the zero-mean hyperplane: `F - 1 * mean(F)^T`.
pub fn center(f: &FeatureMatrix) -> FeatureMatrix {
    let n = f.nrows();
    let mut values = f.values().clone();
    for (j, mut col) in values.column_iter_mut().enumerate() {
        let mean = compensated_sum(f.column(j).iter().copied()) / n as f64;
        for v in col.iter_mut() {
            *v -= mean;
        }
    }
    FeatureMatrix::from_parts_unchecked(values, f.names().to_vec())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationKind {
    Pearson,
    Cosine,
}

/// Symmetric `m x m` matrix with unit diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix {
    pub entries: DMatrix<f64>,
    pub kind: CorrelationKind,
    pub names: Vec<String>,
}

impl CorrelationMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    pub fn max_abs_diff(&self, other: &CorrelationMatrix) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()))
    }

    pub fn max_abs_off_diagonal(&self) -> f64 {
        let m = self.dim();
        let mut max = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    max = max.max(self.entries[(i, j)].abs());
                }
            }
        }
        max
    }
}

/// Normalized Gram matrix; `norms[j]` must be nonzero.
fn normalized_gram(columns: &[&[f64]], norms: &[f64]) -> DMatrix<f64> {
    let m = columns.len();
    let mut g = DMatrix::identity(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let c = (dot(columns[i], columns[j]) / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            g[(i, j)] = c;
            g[(j, i)] = c;
        }
    }
    g
}

/// `S_c(F)[i][j] = F_i . F_j / (|F_i| |F_j|)`.
pub fn cosine_similarity(f: &FeatureMatrix) -> Result<CorrelationMatrix> {
    let columns: Vec<&[f64]> = (0..f.ncols()).map(|j| f.column(j)).collect();
    let mut norms = Vec::with_capacity(columns.len());
    for (j, col) in columns.iter().enumerate() {
        let norm = dot(col, col).sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroNormColumn(f.names()[j].clone()));
        }
        norms.push(norm);
    }
    Ok(CorrelationMatrix {
        entries: normalized_gram(&columns, &norms),
        kind: CorrelationKind::Cosine,
        names: f.names().to_vec(),
    })
}

/// Pearson correlation: cosine similarity of the centered columns.
pub fn pearson_correlation(f: &FeatureMatrix) -> Result<CorrelationMatrix> {
    let centered = center(f);
    let mut norms = Vec::with_capacity(f.ncols());
    for j in 0..f.ncols() {
        let c = centered.column(j);
        let norm = dot(c, c).sqrt();
        if is_effectively_constant(f.column(j), norm) {
            return Err(Error::ConstantColumn(f.names()[j].clone()));
        }
        norms.push(norm);
    }
    let columns: Vec<&[f64]> = (0..f.ncols()).map(|j| centered.column(j)).collect();
    Ok(CorrelationMatrix {
        entries: normalized_gram(&columns, &norms),
        kind: CorrelationKind::Pearson,
        names: f.names().to_vec(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankReport {
    pub full_rank: bool,
    pub numerical_rank: usize,
    /// Nonincreasing.
    pub singular_values: Vec<f64>,
}

/// Numerical rank: the count of singular values above `rel_tol * sigma_max`.
pub fn rank_check(f: &FeatureMatrix, rel_tol: f64) -> RankReport {
    rank_of(f.values(), rel_tol)
}

pub(crate) fn rank_of(values: &DMatrix<f64>, rel_tol: f64) -> RankReport {
    let singular_values = crate::linalg::tall_singular_values(values);
    let cutoff = rel_tol * singular_values.first().copied().unwrap_or(0.0);
    let numerical_rank = singular_values.iter().filter(|&&s| s > cutoff).count();
    RankReport {
        full_rank: numerical_rank == values.ncols(),
        numerical_rank,
        singular_values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(m: usize) -> Vec<String> {
        crate::matrix::default_names(m)
    }

    #[test]
    fn mean_and_variance_by_hand() {
        assert_eq!(column_mean(&[1.0, 2.0, 3.0]).unwrap(), 2.0);
        assert_eq!(column_mean(&[4.25; 17]).unwrap(), 4.25);
        assert!((column_variance(&[1.0, 2.0, 3.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(column_variance(&[-3.5; 9]).unwrap(), 0.0);
    }

    #[test]
    fn empty_vectors_are_rejected() {
        assert!(matches!(column_mean(&[]), Err(Error::InvalidInput(_))));
        assert!(matches!(column_variance(&[]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(xs), 2.0);
    }

    #[test]
    fn center_constant_column_is_zero() {
        let f = FeatureMatrix::from_columns(&[vec![7.0; 4], vec![1.0, 2.0, 3.0, 6.0]], names(2))
            .unwrap();
        let c = center(&f);
        assert!(c.column(0).iter().all(|&v| v == 0.0));
        assert_eq!(c.column(1), &[-2.0, -1.0, 0.0, 3.0]);
    }

    #[test]
    fn cosine_of_orthonormal_columns_is_identity() {
        let f = FeatureMatrix::from_columns(
            &[vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]],
            names(2),
        )
        .unwrap();
        let s = cosine_similarity(&f).unwrap();
        assert_eq!(s.entries, DMatrix::identity(2, 2));
        assert_eq!(s.kind, CorrelationKind::Cosine);
    }

    #[test]
    fn cosine_is_scale_invariant_for_parallel_columns() {
        let f = FeatureMatrix::from_columns(&[vec![1.0, -2.0, 5.0], vec![2.0, -4.0, 10.0]], names(2))
            .unwrap();
        let s = cosine_similarity(&f).unwrap();
        assert!(s.entries.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn zero_norm_column_is_reported() {
        let f = FeatureMatrix::new(
            DMatrix::from_column_slice(3, 2, &[1.0, 2.0, 3.0, 0.0, 0.0, 0.0]),
            vec!["a".into(), "zero".into()],
        )
        .unwrap();
        match cosine_similarity(&f) {
            Err(Error::ZeroNormColumn(name)) => assert_eq!(name, "zero"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pearson_examples() {
        let f = FeatureMatrix::from_columns(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]], names(2))
            .unwrap();
        let c = pearson_correlation(&f).unwrap();
        assert!(c.entries.iter().all(|&v| (v - 1.0).abs() < 1e-15));

        let f = FeatureMatrix::from_columns(&[vec![1.0, -1.0, 0.0], vec![1.0, 1.0, -2.0]], names(2))
            .unwrap();
        let c = pearson_correlation(&f).unwrap();
        assert!((c.entries.clone() - DMatrix::identity(2, 2)).amax() < 1e-15);
    }

    #[test]
    fn pearson_rejects_constant_columns() {
        let f = FeatureMatrix::new(
            DMatrix::from_column_slice(3, 2, &[1.0, 2.0, 3.0, 5.0, 5.0, 5.0]),
            vec!["a".into(), "flat".into()],
        )
        .unwrap();
        match pearson_correlation(&f) {
            Err(Error::ConstantColumn(name)) => assert_eq!(name, "flat"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rank_check_examples() {
        let mut v = DMatrix::zeros(5, 3);
        for j in 0..3 {
            v[(j, j)] = 1.0;
        }
        let r = rank_check(&FeatureMatrix::unnamed(v).unwrap(), 1e-10);
        assert!(r.full_rank);
        assert_eq!(r.numerical_rank, 3);

        let a = [1.0, 2.0, -1.0, 4.0, 0.5];
        let b = [0.0, 1.0, 3.0, -2.0, 1.0];
        let f = FeatureMatrix::from_columns(&[a.to_vec(), b.to_vec(), a.to_vec()], names(3))
            .unwrap();
        let r = rank_check(&f, 1e-10);
        assert!(!r.full_rank);
        assert_eq!(r.numerical_rank, 2);
        assert!(r.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn stats_norms_match_variances() {
        let f = FeatureMatrix::from_columns(
            &[vec![1.0, 4.0, 9.0, 16.0], vec![-1.0, 0.5, 0.25, 3.0]],
            names(2),
        )
        .unwrap();
        let s = FeatureStats::compute(&f);
        for j in 0..2 {
            let lhs = s.centered_norms[j].powi(2);
            let rhs = 4.0 * s.variances[j];
            assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        }
    }
}
