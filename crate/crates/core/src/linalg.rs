//! Small dense kernels: a one-sided Jacobi SVD for the `m x m` cores and
//! QR-based singular values for tall matrices.

use nalgebra::{DMatrix, DVector};

const MAX_SWEEPS: usize = 60;

/// `c = w * diag(sigma) * z^T` for a square `c`, with `sigma` nonincreasing.
///
/// Hestenes one-sided Jacobi: columns of a working copy are rotated pairwise
/// until mutually orthogonal, accumulating the rotations in `z`. Columns of
/// `w` belonging to zero singular values are filled with an orthonormal
/// completion so `w` is always orthogonal.
pub(crate) fn jacobi_svd(c: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let m = c.ncols();
    assert_eq!(c.nrows(), m, "jacobi_svd expects a square matrix");
    let mut g = c.clone();
    let mut z = DMatrix::<f64>::identity(m, m);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..m {
            for q in (p + 1)..m {
                let alpha = g.column(p).norm_squared();
                let beta = g.column(q).norm_squared();
                let gamma = g.column(p).dot(&g.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                rotate(&mut g, p, q, cs, sn);
                rotate(&mut z, p, q, cs, sn);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..m).map(|j| g.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let z = z.select_columns(&order);
    let g = g.select_columns(&order);

    let floor = sigma.first().copied().unwrap_or(0.0) * f64::EPSILON * m as f64;
    let mut w = DMatrix::<f64>::zeros(m, m);
    let mut filled = Vec::with_capacity(m);
    for k in 0..m {
        if sigma[k] > floor && sigma[k] > 0.0 {
            w.set_column(k, &(g.column(k) / sigma[k]));
            filled.push(k);
        }
    }
    let mut probe = 0usize;
    for k in 0..m {
        if filled.contains(&k) {
            continue;
        }
        loop {
            let mut e = DVector::<f64>::zeros(m);
            e[probe % m] = 1.0;
            probe += 1;
            for _ in 0..2 {
                for &j in &filled {
                    let col = w.column(j);
                    let proj = col.dot(&e);
                    e.axpy(-proj, &col, 1.0);
                }
            }
            let norm = e.norm();
            if norm > 0.5 {
                w.set_column(k, &(e / norm));
                filled.push(k);
                break;
            }
            assert!(probe < 4 * m, "orthonormal completion failed");
        }
    }
    (w, sigma, z)
}

fn rotate(x: &mut DMatrix<f64>, p: usize, q: usize, cs: f64, sn: f64) {
    for i in 0..x.nrows() {
        let xp = x[(i, p)];
        let xq = x[(i, q)];
        x[(i, p)] = cs * xp - sn * xq;
        x[(i, q)] = sn * xp + cs * xq;
    }
}

/// Singular values of a tall `n x m` matrix (nonincreasing), via thin QR then Jacobi on `R`.
pub(crate) fn tall_singular_values(values: &DMatrix<f64>) -> Vec<f64> {
    let r = if values.nrows() >= values.ncols() {
        values.clone().qr().r()
    } else {
        values.transpose().qr().r()
    };
    jacobi_svd(&r).1
}
