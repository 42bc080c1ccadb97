//! Column-independent baseline sampler and a correlated Gaussian test source.
//!
//! Randomness comes from ChaCha20 (`rand_chacha`). Column `j` always draws
//! from `ChaCha20Rng::seed_from_u64(seed)` switched to stream `j`, so each
//! column has its own substream and the output does not depend on the order
//! in which columns are produced. Bounded integers use Lemire's
//! multiply-and-reject method on `next_u64`, implemented here so the mapping
//! from seed to output does not drift with `rand` releases.

use nalgebra::{Cholesky, DMatrix};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::{default_names, FeatureMatrix};
use crate::stats::CorrelationMatrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SamplerMode {
    /// Draw with replacement from each column.
    #[default]
    Bootstrap,
    /// Shuffle each column independently.
    Permutation,
}

impl std::str::FromStr for SamplerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bootstrap" => Ok(Self::Bootstrap),
            "permutation" => Ok(Self::Permutation),
            other => Err(Error::InvalidConfig(format!(
                "unknown sampler mode `{other}` (expected bootstrap or permutation)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SamplerConfig {
    pub mode: SamplerMode,
    /// Output row count `p`.
    pub rows: usize,
    pub seed: u64,
}

impl SamplerConfig {
    /// Bootstrap with `p = n`.
    pub fn bootstrap(rows: usize, seed: u64) -> Self {
        Self {
            mode: SamplerMode::Bootstrap,
            rows,
            seed,
        }
    }

    pub fn permutation(rows: usize, seed: u64) -> Self {
        Self {
            mode: SamplerMode::Permutation,
            rows,
            seed,
        }
    }
}

pub(crate) fn column_rng(seed: u64, column: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(column as u64);
    rng
}

/// Uniform integer in `0..bound` (Lemire 2019, unbiased).
pub(crate) fn uniform_index<R: RngCore>(rng: &mut R, bound: usize) -> usize {
    debug_assert!(bound > 0);
    let bound = bound as u64;
    let mut wide = u128::from(rng.next_u64()) * u128::from(bound);
    if (wide as u64) < bound {
        let threshold = bound.wrapping_neg() % bound;
        while (wide as u64) < threshold {
            wide = u128::from(rng.next_u64()) * u128::from(bound);
        }
    }
    (wide >> 64) as usize
}

/// Resamples every column of `o` on its own, preserving marginals and
/// discarding inter-feature dependence.
pub fn naive_sample(o: &FeatureMatrix, cfg: &SamplerConfig) -> Result<FeatureMatrix> {
    let n = o.nrows();
    if cfg.rows < 2 {
        return Err(Error::InvalidConfig(format!("rows must be >= 2, got {}", cfg.rows)));
    }
    if cfg.mode == SamplerMode::Permutation && cfg.rows != n {
        return Err(Error::InvalidConfig(format!(
            "permutation mode needs rows = n = {n}, got {}",
            cfg.rows
        )));
    }
    let m = o.ncols();
    let mut data = Vec::with_capacity(cfg.rows * m);
    for j in 0..m {
        let source = o.column(j);
        let mut rng = column_rng(cfg.seed, j);
        match cfg.mode {
            SamplerMode::Bootstrap => {
                data.extend((0..cfg.rows).map(|_| source[uniform_index(&mut rng, n)]));
            }
            SamplerMode::Permutation => {
                let start = data.len();
                data.extend_from_slice(source);
                let col = &mut data[start..];
                // Fisher-Yates, high index downwards
                for i in (1..n).rev() {
                    let k = uniform_index(&mut rng, i + 1);
                    col.swap(i, k);
                }
            }
        }
    }
    FeatureMatrix::new(DMatrix::from_vec(cfg.rows, m, data), o.names().to_vec())
}

/// Gaussian stand-in dataset with population correlation `corr_target`.
///
/// White noise `Z` (column `j` from substream `j`) is colored by the Cholesky
/// factor: `X = Z * L^T` with `L L^T = corr_target`. Columns are named `x1..xm`.
pub fn make_test_dataset(
    n: usize,
    m: usize,
    corr_target: &CorrelationMatrix,
    seed: u64,
) -> Result<FeatureMatrix> {
    if corr_target.entries.shape() != (m, m) {
        return Err(Error::InvalidCorrelation(format!(
            "target is {:?}, expected {m} x {m}",
            corr_target.entries.shape()
        )));
    }
    if n <= m {
        return Err(Error::InvalidInput(format!("need n > m, got n = {n}, m = {m}")));
    }
    let c = &corr_target.entries;
    for i in 0..m {
        if (c[(i, i)] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidCorrelation(format!("diagonal entry {i} is {}", c[(i, i)])));
        }
        for j in 0..i {
            if (c[(i, j)] - c[(j, i)]).abs() > 1e-12 || !c[(i, j)].is_finite() {
                return Err(Error::InvalidCorrelation(format!("entries ({i},{j}) are not symmetric")));
            }
        }
    }
    let chol = Cholesky::new(c.clone()).ok_or_else(|| {
        Error::InvalidCorrelation("target is not positive definite".into())
    })?;
    let l = chol.l();
    if l.diagonal().iter().any(|&d| d <= 1e-8) {
        return Err(Error::InvalidCorrelation("target is numerically singular".into()));
    }

    let mut z = Vec::with_capacity(n * m);
    for j in 0..m {
        let mut rng = column_rng(seed, j);
        z.extend((0..n).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));
    }
    let z = DMatrix::from_vec(n, m, z);
    FeatureMatrix::new(z * l.transpose(), default_names(m))
}

/// Banded target: `corr[i][j] = rho^|i-j|`.
pub fn ar1_correlation(m: usize, rho: f64) -> Result<CorrelationMatrix> {
    if !(rho.abs() < 1.0) {
        return Err(Error::InvalidCorrelation(format!("|rho| must be < 1, got {rho}")));
    }
    Ok(CorrelationMatrix {
        entries: DMatrix::from_fn(m, m, |i, j| rho.powi(i.abs_diff(j) as i32)),
        kind: crate::stats::CorrelationKind::Pearson,
        names: default_names(m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{pearson_correlation, CorrelationKind};

    fn sample_input() -> FeatureMatrix {
        FeatureMatrix::from_columns(
            &[
                (0..50).map(|i| (i as f64).sin()).collect(),
                vec![3.0; 50],
                (0..50).map(|i| i as f64 * 0.5).collect(),
            ],
            default_names(3),
        )
        .unwrap()
    }

    #[test]
    fn constant_column_stays_constant() {
        let o = sample_input();
        let s = naive_sample(&o, &SamplerConfig::bootstrap(80, 1)).unwrap();
        assert_eq!(s.nrows(), 80);
        assert!(s.column(1).iter().all(|&v| v == 3.0));
    }

    #[test]
    fn permutation_preserves_multisets() {
        let o = sample_input();
        let s = naive_sample(&o, &SamplerConfig::permutation(50, 9)).unwrap();
        for j in 0..3 {
            let mut a = o.column(j).to_vec();
            let mut b = s.column(j).to_vec();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            assert_eq!(a, b);
        }
        assert_ne!(s.column(0), o.column(0));
    }

    #[test]
    fn permutation_requires_matching_rows() {
        let o = sample_input();
        assert!(matches!(
            naive_sample(&o, &SamplerConfig::permutation(49, 0)),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            naive_sample(&o, &SamplerConfig::bootstrap(1, 0)),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn same_seed_same_output() {
        let o = sample_input();
        let cfg = SamplerConfig::bootstrap(50, 1234);
        assert_eq!(naive_sample(&o, &cfg).unwrap(), naive_sample(&o, &cfg).unwrap());
        let other = SamplerConfig::bootstrap(50, 1235);
        assert_ne!(naive_sample(&o, &cfg).unwrap(), naive_sample(&o, &other).unwrap());
    }

    #[test]
    fn uniform_index_stays_in_range() {
        let mut rng = column_rng(5, 0);
        let mut seen = [0usize; 7];
        for _ in 0..7000 {
            seen[uniform_index(&mut rng, 7)] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800 && c < 1200), "{seen:?}");
    }

    #[test]
    fn single_feature_dataset() {
        let target = CorrelationMatrix {
            entries: DMatrix::identity(1, 1),
            kind: CorrelationKind::Pearson,
            names: default_names(1),
        };
        let d = make_test_dataset(100, 1, &target, 3).unwrap();
        assert_eq!(d.ncols(), 1);
        assert_eq!(pearson_correlation(&d).unwrap().entries, DMatrix::identity(1, 1));
    }

    #[test]
    fn singular_target_rejected() {
        let target = CorrelationMatrix {
            entries: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
            kind: CorrelationKind::Pearson,
            names: default_names(2),
        };
        assert!(matches!(
            make_test_dataset(100, 2, &target, 0),
            Err(Error::InvalidCorrelation(_))
        ));
    }
}
