//! Shared generators and independent reference implementations for the
//! integration tests. Nothing here calls into the code paths it is used to check.
#![allow(dead_code)]

use corrsynth::{FeatureMatrix, StatTargets};
use nalgebra::{DMatrix, DVector};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{FromPrimitive, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn names(m: usize) -> Vec<String> {
    (1..=m).map(|j| format!("x{j}")).collect()
}

pub fn table(values: DMatrix<f64>) -> FeatureMatrix {
    let m = values.ncols();
    FeatureMatrix::new(values, names(m)).unwrap()
}

/// Random full-rank original with per-column offsets and scales, a
/// same-shape synthetic table, and random valid targets.
pub fn random_instance(seed: u64, n: usize, m: usize) -> (FeatureMatrix, FeatureMatrix, StatTargets) {
    let mut r = rng(seed);
    let mixing = gaussian(&mut r, m, m) + DMatrix::identity(m, m) * 2.0;
    let mut o = gaussian(&mut r, n, m) * mixing;
    for j in 0..m {
        let scale = r.random_range(0.2..5.0);
        let shift = r.random_range(-10.0..10.0);
        o.column_mut(j).iter_mut().for_each(|v| *v = *v * scale + shift);
    }
    let mut s = gaussian(&mut r, n, m);
    for j in 0..m {
        let shift = r.random_range(-3.0..3.0);
        s.column_mut(j).add_scalar_mut(shift);
    }
    let means = (0..m).map(|_| r.random_range(-10.0..10.0)).collect();
    let variances = (0..m).map(|_| r.random_range(0.1..10.0)).collect();
    (table(o), table(s), StatTargets::new(means, variances).unwrap())
}

/// Haar-ish random orthogonal matrix: QR of a Gaussian with sign-fixed R.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, k: usize) -> DMatrix<f64> {
    let qr = gaussian(rng, k, k).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Random `n x n` orthogonal `Q` with `Q 1 = 1`: conjugate `diag(1, W)` by the
/// Householder reflection that swaps `e_1` and `1 / sqrt(n)`.
pub fn random_ones_fixing_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let h = ones_householder(n);
    let w = random_orthogonal(rng, n - 1);
    let mut block = DMatrix::zeros(n, n);
    block[(0, 0)] = 1.0;
    block.view_mut((1, 1), (n - 1, n - 1)).copy_from(&w);
    &h * block * &h
}

pub fn ones_householder(n: usize) -> DMatrix<f64> {
    let mut w = DVector::from_element(n, -1.0 / (n as f64).sqrt());
    w[0] += 1.0;
    let ww = w.dot(&w);
    DMatrix::identity(n, n) - (&w * w.transpose()) * (2.0 / ww)
}

/// Dense reference: builds `I - D` and the `n x n` cross product `X = S_c (O_c N)^T`
/// explicitly, then gets `U_r V_r^T` from the symmetric eigendecomposition of
/// `X^T X` (right singular vectors) and `U_r = X V_r / sigma_r`. Directions with
/// `sigma < 1e-6 sigma_max` are treated as zero, which is only meant for generic
/// instances where the nonzero spectrum is well separated from zero.
pub fn dense_enforce(o: &DMatrix<f64>, s: &DMatrix<f64>, means: &[f64], variances: &[f64]) -> DMatrix<f64> {
    let (n, m) = o.shape();
    let projector = DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
    let oc = &projector * o;
    let sc = &projector * s;
    let mut a = oc.clone();
    for j in 0..m {
        let norm = oc.column(j).norm();
        let scale = variances[j].sqrt() * (n as f64).sqrt() / norm;
        a.column_mut(j).scale_mut(scale);
    }
    let cross = &sc * a.transpose();
    let eig = (cross.transpose() * &cross).symmetric_eigen();
    let lmax = eig.eigenvalues.max();
    let keep: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > 1e-12 * lmax).collect();
    let v_r = eig.eigenvectors.select_columns(&keep);
    let mut u_r = &cross * &v_r;
    for (c, &k) in keep.iter().enumerate() {
        u_r.column_mut(c).scale_mut(1.0 / eig.eigenvalues[k].sqrt());
    }
    let gram_err = (u_r.transpose() * &u_r - DMatrix::identity(keep.len(), keep.len())).amax();
    assert!(gram_err < 1e-8, "dense reference lost orthogonality: {gram_err:e}");
    let mut out = u_r * v_r.transpose() * a;
    for j in 0..m {
        out.column_mut(j).add_scalar_mut(means[j]);
    }
    out
}

pub fn plain_mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn plain_variance(x: &[f64]) -> f64 {
    let mu = plain_mean(x);
    x.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / x.len() as f64
}

/// Plain (uncompensated) Pearson matrix, formula by formula.
pub fn plain_pearson(f: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m) = f.shape();
    let centered: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            let col: Vec<f64> = f.column(j).iter().copied().collect();
            let mu = plain_mean(&col);
            col.iter().map(|v| v - mu).collect()
        })
        .collect();
    DMatrix::from_fn(m, m, |i, j| {
        let dot: f64 = (0..n).map(|k| centered[i][k] * centered[j][k]).sum();
        let ni: f64 = centered[i].iter().map(|v| v * v).sum::<f64>().sqrt();
        let nj: f64 = centered[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        dot / (ni * nj)
    })
}

fn exact(x: f64) -> BigRational {
    BigRational::from_f64(x).unwrap()
}

/// Exact rational mean, rounded once to f64.
pub fn exact_mean(x: &[f64]) -> f64 {
    let sum = x.iter().fold(BigRational::zero(), |acc, &v| acc + exact(v));
    (sum / BigRational::from_integer(BigInt::from(x.len()))).to_f64().unwrap()
}

/// Exact rational population variance, rounded once to f64.
pub fn exact_variance(x: &[f64]) -> f64 {
    let n = BigRational::from_integer(BigInt::from(x.len()));
    let sum = x.iter().fold(BigRational::zero(), |acc, &v| acc + exact(v));
    let mean = sum / &n;
    let ss = x.iter().fold(BigRational::zero(), |acc, &v| {
        let d = exact(v) - &mean;
        acc + &d * &d
    });
    (ss / n).to_f64().unwrap()
}

pub fn max_abs(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}
