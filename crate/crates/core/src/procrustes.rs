//! Nearest matrix with prescribed means, variances and Pearson correlations.
//!
//! Given an original table `O` and a synthetic table `S` of the same shape,
//! [`enforce_correlations`] returns
//!
//! ```text
//! S_hat = U * I_sigma * V^T * (O_c * N) + T
//! ```
//!
//! where `O_c` is `O` with column means removed, `N` rescales each centered
//! column to the target standard deviation, `T` broadcasts the target means,
//! and `U * sigma * V^T` is the SVD of `S_c * (O_c * N)^T`. `I_sigma` keeps the
//! directions with nonzero singular value. Among all `Q * O_c * N + T` with `Q`
//! orthogonal and fixing the all-ones vector, this is the one closest to `S` in
//! Frobenius norm, and every such matrix has `Corr(O)` as its correlation.
//!
//! The `n x n` product is never formed: both operands are reduced by thin QR
//! and only an `m x m` core is decomposed, so the cost is `O(n m^2)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::jacobi_svd;
use crate::matrix::FeatureMatrix;
use crate::stats::{compensated_sum, is_effectively_constant, rank_of, FeatureStats};

/// Default cut-off for the rank mask, relative to the largest singular value.
pub const DEFAULT_REL_TOL: f64 = 1e-12;

/// Target per-feature means and (population) variances for the output.
#[derive(Clone, Debug, PartialEq)]
pub struct StatTargets {
    means: Vec<f64>,
    variances: Vec<f64>,
}

impl StatTargets {
    pub fn new(means: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        if means.len() != variances.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} target means but {} target variances",
                means.len(),
                variances.len()
            )));
        }
        if let Some(j) = means.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("target mean {j} is not finite")));
        }
        if let Some(j) = variances.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::DegenerateTarget(format!("feature {j}")));
        }
        Ok(Self { means, variances })
    }

    /// Targets equal to the observed moments of `stats`.
    pub fn from_stats(stats: &FeatureStats) -> Result<Self> {
        Self::new(stats.means.clone(), stats.variances.clone())
    }

    pub fn of(f: &FeatureMatrix) -> Result<Self> {
        Self::from_stats(&FeatureStats::compute(f))
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn offset(&self) -> MeanOffset {
        MeanOffset {
            row: self.means.clone(),
        }
    }
}

/// Diagonal of `N`: `sigma_i * sqrt(n) / ||O_c_i||`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingMatrix {
    pub diagonal: Vec<f64>,
}

/// The mean matrix `T`, stored as the single row that every output row shares.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanOffset {
    pub row: Vec<f64>,
}

/// Thin factors of `B * A^T = U * diag(sigma) * V^T`.
#[derive(Clone, Debug)]
pub struct ProcrustesFactors {
    /// `n x m`, orthonormal columns.
    pub u: DMatrix<f64>,
    /// `n x m`, orthonormal columns.
    pub v: DMatrix<f64>,
    /// Nonincreasing, nonnegative.
    pub sigma: Vec<f64>,
    /// `rank_mask[i]` iff `sigma[i] > rel_tol * sigma[0]`.
    pub rank_mask: Vec<bool>,
    pub rel_tol: f64,
}

impl ProcrustesFactors {
    pub fn rank(&self) -> usize {
        self.rank_mask.iter().filter(|&&k| k).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Diagnostics {
    /// Number of unmasked singular values.
    pub rank: usize,
    /// Whether the orthogonal factor is pinned down (`rank == n`).
    pub unique: bool,
    /// Masked directions that were routed through a centered orthonormal
    /// completion instead of being dropped.
    pub completed: usize,
}

#[derive(Clone, Debug)]
pub struct Enforcement {
    pub s_hat: FeatureMatrix,
    pub factors: ProcrustesFactors,
    pub scaling: ScalingMatrix,
    pub offset: MeanOffset,
    pub diagnostics: Diagnostics,
}

pub fn scaling_matrix(o_stats: &FeatureStats, targets: &StatTargets, n: usize) -> Result<ScalingMatrix> {
    if o_stats.centered_norms.len() != targets.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} features but {} targets",
            o_stats.centered_norms.len(),
            targets.len()
        )));
    }
    let root_n = (n as f64).sqrt();
    let mut diagonal = Vec::with_capacity(targets.len());
    for (j, (&norm, &var)) in o_stats.centered_norms.iter().zip(targets.variances()).enumerate() {
        if !(norm > 0.0) {
            return Err(Error::ConstantColumn(format!("#{j}")));
        }
        if !(var > 0.0 && var.is_finite()) {
            return Err(Error::DegenerateTarget(format!("#{j}")));
        }
        diagonal.push(var.sqrt() * root_n / norm);
    }
    Ok(ScalingMatrix { diagonal })
}

/// Thin factorization of `b * a^T` from QR factors of the two `n x m` operands.
///
/// With `b = Qb Rb` and `a = Qa Ra`, the core `Rb Ra^T = W diag(sigma) Z^T` gives
/// `U = Qb W` and `V = Qa Z`. The core is decomposed with one-sided Jacobi.
pub fn thin_svd_outer(b: &DMatrix<f64>, a: &DMatrix<f64>, rel_tol: f64) -> Result<ProcrustesFactors> {
    if b.shape() != a.shape() {
        return Err(Error::ShapeMismatch(format!(
            "operands are {:?} and {:?}",
            b.shape(),
            a.shape()
        )));
    }
    let (n, m) = a.shape();
    if m > n || m == 0 {
        return Err(Error::ShapeMismatch(format!(
            "thin factorization needs 1 <= m <= n, got n = {n}, m = {m}"
        )));
    }
    let qr_b = b.clone().qr();
    let qr_a = a.clone().qr();
    let core = qr_b.r() * qr_a.r().transpose();
    let (w, sigma, z) = jacobi_svd(&core);

    let cutoff = rel_tol * sigma[0];
    let rank_mask = sigma.iter().map(|&s| s > cutoff).collect();
    Ok(ProcrustesFactors {
        u: qr_b.q() * w,
        v: qr_a.q() * z,
        sigma,
        rank_mask,
        rel_tol,
    })
}

/// Validated `O_c * N` together with the moments used to build it.
struct ScaledOriginal {
    a: DMatrix<f64>,
    scaling: ScalingMatrix,
}

fn scaled_centered_original(o: &FeatureMatrix, targets: &StatTargets) -> Result<(ScaledOriginal, FeatureStats)> {
    let m = o.ncols();
    if targets.len() != m {
        return Err(Error::ShapeMismatch(format!(
            "{m} features but {} targets",
            targets.len()
        )));
    }
    let stats = FeatureStats::compute(o);
    for j in 0..m {
        if is_effectively_constant(o.column(j), stats.centered_norms[j]) {
            return Err(Error::ConstantColumn(o.names()[j].clone()));
        }
    }
    for (j, &var) in targets.variances().iter().enumerate() {
        if !(var > 0.0 && var.is_finite()) {
            return Err(Error::DegenerateTarget(o.names()[j].clone()));
        }
    }
    let scaling = scaling_matrix(&stats, targets, o.nrows())?;
    let mut a = o.values().clone();
    for (j, mut col) in a.column_iter_mut().enumerate() {
        let mean = stats.means[j];
        let scale = scaling.diagonal[j];
        for v in col.iter_mut() {
            *v = (*v - mean) * scale;
        }
    }
    Ok((ScaledOriginal { a, scaling }, stats))
}

/// Fails with the dependent column names when the centered original is not
/// of full column rank. Columns are unit-normalized first so the test does
/// not depend on feature units.
fn require_full_rank(o: &FeatureMatrix, stats: &FeatureStats, rel_tol: f64) -> Result<()> {
    let mut unit = o.values().clone();
    for (j, mut col) in unit.column_iter_mut().enumerate() {
        let (mean, norm) = (stats.means[j], stats.centered_norms[j]);
        for v in col.iter_mut() {
            *v = (*v - mean) / norm;
        }
    }
    let report = rank_of(&unit, rel_tol);
    if report.full_rank {
        return Ok(());
    }
    let mut kept: Vec<usize> = Vec::new();
    let mut dependent = Vec::new();
    for j in 0..o.ncols() {
        let mut trial = kept.clone();
        trial.push(j);
        if rank_of(&unit.select_columns(&trial), rel_tol).full_rank {
            kept = trial;
        } else {
            dependent.push(o.names()[j].clone());
        }
    }
    Err(Error::RankDeficient {
        rank: report.numerical_rank,
        expected: o.ncols(),
        dependent,
    })
}

/// Left factor actually applied: unmasked columns of `U`, plus an orthonormal
/// completion inside the zero-mean hyperplane for masked directions.
///
/// Masked directions carry zero weight in the Procrustes objective, so any
/// completion is equally close to `S`. Picking centered, mutually orthogonal
/// vectors keeps the map an isometry on `range(O_c N)`, so variances and
/// correlations still hit their targets when `S_c` is rank deficient.
fn completed_left_factor(f: &ProcrustesFactors) -> (DMatrix<f64>, usize) {
    let (n, m) = f.u.shape();
    let mut out = f.u.clone();
    let masked: Vec<usize> = (0..m).filter(|&k| !f.rank_mask[k]).collect();
    if masked.is_empty() {
        return (out, 0);
    }
    let mut accepted: Vec<usize> = (0..m).filter(|&k| f.rank_mask[k]).collect();
    let mut basis_probe = 0usize;
    for &k in &masked {
        // popped from the back: the masked U column first, then V's
        let mut candidates = vec![f.v.column(k).into_owned(), f.u.column(k).into_owned()];
        loop {
            let Some(mut c) = candidates.pop().or_else(|| {
                let mut e = nalgebra::DVector::zeros(n);
                if basis_probe < n {
                    e[basis_probe] = 1.0;
                    basis_probe += 1;
                    Some(e)
                } else {
                    None
                }
            }) else {
                unreachable!("the zero-mean hyperplane has room for m < n directions")
            };
            let mean = compensated_sum(c.iter().copied()) / n as f64;
            c.add_scalar_mut(-mean);
            let start = c.norm();
            if start == 0.0 {
                continue;
            }
            for _ in 0..2 {
                for &j in &accepted {
                    let col = out.column(j);
                    let proj = col.dot(&c);
                    c.axpy(-proj, &col, 1.0);
                }
            }
            let residual = c.norm();
            if residual > 1e-6 * start {
                out.set_column(k, &(c / residual));
                accepted.push(k);
                break;
            }
        }
    }
    (out, masked.len())
}

/// Nearest `S_hat` to `s` with `Corr(S_hat) = Corr(o)` and the given moments.
pub fn enforce_correlations(
    o: &FeatureMatrix,
    s: &FeatureMatrix,
    targets: &StatTargets,
    rel_tol: f64,
) -> Result<Enforcement> {
    if s.nrows() != o.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "synthetic data has p = {} rows but original has n = {} rows; row counts must match",
            s.nrows(),
            o.nrows()
        )));
    }
    if s.ncols() != o.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "synthetic data has {} features but original has {}",
            s.ncols(),
            o.ncols()
        )));
    }
    let (scaled, o_stats) = scaled_centered_original(o, targets)?;
    require_full_rank(o, &o_stats, rel_tol)?;

    let s_centered = crate::stats::center(s);
    let factors = thin_svd_outer(s_centered.values(), &scaled.a, rel_tol)?;
    let (u_applied, completed) = completed_left_factor(&factors);

    let core = factors.v.transpose() * &scaled.a;
    let mut s_hat = u_applied * core;
    for (j, mut col) in s_hat.column_iter_mut().enumerate() {
        col.add_scalar_mut(targets.means()[j]);
    }

    let n = o.nrows();
    let rank = factors.rank();
    Ok(Enforcement {
        s_hat: FeatureMatrix::new(s_hat, s.names().to_vec())?,
        diagnostics: Diagnostics {
            rank,
            unique: rank == n,
            completed,
        },
        factors,
        scaling: scaled.scaling,
        offset: targets.offset(),
    })
}

/// `||s_hat - s||_F`.
pub fn frobenius_gap(s_hat: &FeatureMatrix, s: &FeatureMatrix) -> Result<f64> {
    if s_hat.values().shape() != s.values().shape() {
        return Err(Error::ShapeMismatch(format!(
            "{:?} vs {:?}",
            s_hat.values().shape(),
            s.values().shape()
        )));
    }
    let ss = compensated_sum(
        s_hat
            .values()
            .iter()
            .zip(s.values().iter())
            .map(|(a, b)| (a - b) * (a - b)),
    );
    Ok(ss.sqrt())
}

/// Feasible competitor `Q * O_c * N + T` for a user-supplied `n x n` orthogonal
/// `Q` with `Q * 1 = 1`. Test support for optimality checks; it takes an
/// explicit `n x n` matrix and is not used on the main path.
pub fn constrained_candidate(
    o: &FeatureMatrix,
    targets: &StatTargets,
    q: &DMatrix<f64>,
) -> Result<FeatureMatrix> {
    let n = o.nrows();
    if q.shape() != (n, n) {
        return Err(Error::InvalidCompetitor(format!(
            "Q is {:?}, expected ({n}, {n})",
            q.shape()
        )));
    }
    let gram_error = (q.transpose() * q - DMatrix::<f64>::identity(n, n)).amax();
    if gram_error > 1e-10 {
        return Err(Error::InvalidCompetitor(format!(
            "Q is not orthogonal (max |Q^T Q - I| = {gram_error:e})"
        )));
    }
    let fixed_error = q
        .row_iter()
        .map(|r| (r.sum() - 1.0).abs())
        .fold(0.0f64, f64::max);
    if fixed_error > 1e-10 {
        return Err(Error::InvalidCompetitor(format!(
            "Q does not fix the all-ones vector (max |Q 1 - 1| = {fixed_error:e})"
        )));
    }
    let (scaled, _) = scaled_centered_original(o, targets)?;
    let mut out = q * scaled.a;
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col.add_scalar_mut(targets.means()[j]);
    }
    FeatureMatrix::new(out, o.names().to_vec())
}
