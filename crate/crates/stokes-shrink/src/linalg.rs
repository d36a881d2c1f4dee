//! Dense symmetric linear algebra kernels.
//!
//! Small dense pencils only (N <= a few hundred); robustness over speed.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenvalues (ascending) and eigenvectors of a symmetric matrix.
///
/// The QR path gets a bounded iteration budget; matrices with extreme
/// dynamic range occasionally stall it, in which case a cyclic Jacobi
/// sweep (unconditionally convergent) takes over.
pub fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let (raw_vals, raw_vecs) = match m.clone().try_symmetric_eigen(f64::EPSILON, 40 * n) {
        Some(se) => (se.eigenvalues.iter().cloned().collect::<Vec<f64>>(), se.eigenvectors),
        None => jacobi_eigen(m),
    };
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| raw_vals[a].partial_cmp(&raw_vals[b]).unwrap());
    let vals: Vec<f64> = idx.iter().map(|&i| raw_vals[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (col, &i) in idx.iter().enumerate() {
        let mut v = raw_vecs.column(i).clone_owned();
        // deterministic sign: largest-magnitude entry positive
        let mut k = 0;
        for j in 0..n {
            if v[j].abs() > v[k].abs() {
                k = j;
            }
        }
        if v[k] < 0.0 {
            v = -v;
        }
        vecs.set_column(col, &v);
    }
    (vals, vecs)
}

/// Cyclic Jacobi eigendecomposition with threshold sweeps.
fn jacobi_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = DMatrix::identity(n, n);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(a[(i, j)].abs());
            }
        }
        let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0f64, f64::max).max(1e-300);
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-18 * scale {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v)
}

/// Solve the symmetric generalized problem A x = lambda B x with B SPD.
///
/// Returns ascending eigenvalues with B-orthonormal eigenvectors.
pub fn gen_sym_eigen(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("B Gram matrix failed Cholesky".into()))?;
    let l = chol.l();
    // C = L^-1 A L^-T, symmetric standard problem
    let linv_a = solve_lower(&l, a);
    let c = solve_lower(&l, &linv_a.transpose()).transpose();
    let c = 0.5 * (&c + c.transpose());
    let (vals, y) = sym_eigen(&c);
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::ConvergenceFailure("nonfinite eigenvalue".into()));
    }
    // x = L^-T y
    let lt = l.transpose();
    let x = solve_upper(&lt, &y);
    Ok((vals, x))
}

fn solve_lower(l: &DMatrix<f64>, rhs: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let m = rhs.ncols();
    let mut x = rhs.clone();
    for col in 0..m {
        for i in 0..n {
            let mut s = x[(i, col)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
    }
    x
}

fn solve_upper(u: &DMatrix<f64>, rhs: &DMatrix<f64>) -> DMatrix<f64> {
    let n = u.nrows();
    let m = rhs.ncols();
    let mut x = rhs.clone();
    for col in 0..m {
        for i in (0..n).rev() {
            let mut s = x[(i, col)];
            for k in (i + 1)..n {
                s -= u[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s / u[(i, i)];
        }
    }
    x
}

/// Smallest eigenpairs of A x = lambda B x with both matrices SPD.
///
/// Works on the inverted pencil B x = (1/lambda) A x after symmetric
/// diagonal equilibration, so the small lambda of interest are the largest
/// and best-conditioned eigenvalues of the reduced symmetric matrix; the
/// direct reduction loses them in the huge S1-norm of boundary-layer
/// bases. Eigenvectors are returned B-orthonormal.
pub fn gen_sym_eigen_smallest(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    k: usize,
) -> Result<Vec<(f64, DVector<f64>)>> {
    let n = a.nrows();
    let d: Vec<f64> = (0..n)
        .map(|i| {
            let v = a[(i, i)];
            if v > 0.0 {
                1.0 / v.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let scale = |m: &DMatrix<f64>| DMatrix::from_fn(n, n, |i, j| d[i] * m[(i, j)] * d[j]);
    let a_s = scale(a);
    let b_s = scale(b);
    // spectral reduction of the equilibrated S1 Gram; directions below the
    // filter are numerically dependent combinations of basis functions
    // (near-zero as functions) and carry no spectrum
    let (sig, u) = sym_eigen(&a_s);
    if sig[n - 1] <= 0.0 {
        return Err(Error::NotPositiveDefinite("S1 Gram not positive".into()));
    }
    let tol = 1e-14 * sig[n - 1];
    let kept: Vec<usize> = (0..n).filter(|&i| sig[i] > tol).collect();
    let m = kept.len();
    // W maps reduced coordinates to equilibrated ones: columns u_i / sqrt(sig)
    let mut w = DMatrix::zeros(n, m);
    for (col, &i) in kept.iter().enumerate() {
        let s = sig[i].sqrt();
        for row in 0..n {
            w[(row, col)] = u[(row, i)] / s;
        }
    }
    let c = w.transpose() * &b_s * &w;
    let c = 0.5 * (&c + c.transpose());
    let (mu, y) = sym_eigen(&c);
    if mu.iter().any(|v| !v.is_finite()) {
        return Err(Error::ConvergenceFailure("nonfinite eigenvalue".into()));
    }
    let keep = k.min(m);
    let mut out = Vec::with_capacity(keep);
    for i in 0..keep {
        let col = m - 1 - i; // largest mu = smallest lambda
        let mu_i = mu[col];
        if mu_i <= 0.0 {
            return Err(Error::NotPositiveDefinite(format!(
                "inverted pencil produced nonpositive eigenvalue {mu_i:.3e}"
            )));
        }
        let mut x = &w * y.column(col).clone_owned();
        for (j, xv) in x.iter_mut().enumerate() {
            *xv *= d[j];
        }
        // B-normalize with a deterministic sign
        let bn = (x.transpose() * b * &x)[(0, 0)].sqrt();
        x /= bn;
        let mut kmax = 0;
        for j in 0..n {
            if x[j].abs() > x[kmax].abs() {
                kmax = j;
            }
        }
        if x[kmax] < 0.0 {
            x = -x;
        }
        out.push((1.0 / mu_i, x));
    }
    Ok(out)
}

/// Solve A x = b for SPD A via Cholesky.
pub fn spd_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("SPD solve failed Cholesky".into()))?;
    Ok(chol.solve(b))
}

/// Operator norm of the difference of the orthogonal projectors onto two
/// subspaces, wrt the inner product encoded by the joint Gram matrix.
///
/// `gram` is the Gram matrix of the concatenated family [u_1..u_p, v_1..v_q]
/// (first block spans U, second spans V).
pub fn projector_difference_norm(gram: &DMatrix<f64>, p: usize) -> f64 {
    let n = gram.nrows();
    let q = n - p;
    let (d, u) = sym_eigen(gram);
    let dmax = d.iter().cloned().fold(0.0, f64::max);
    let tol = dmax * 1e-12;
    // orthonormal coordinates: z_i = D^{1/2} U^T e_i restricted to kept dirs
    let kept: Vec<usize> = (0..n).filter(|&i| d[i] > tol).collect();
    let r = kept.len();
    if r == 0 {
        return 0.0;
    }
    let mut z = DMatrix::zeros(r, n);
    for (row, &i) in kept.iter().enumerate() {
        let s = d[i].sqrt();
        for j in 0..n {
            z[(row, j)] = s * u[(j, i)];
        }
    }
    let zu = z.columns(0, p).clone_owned();
    let zv = z.columns(p, q).clone_owned();
    let pu = projector(&zu);
    let pv = projector(&zv);
    let diff = pu - pv;
    let (dv, _) = sym_eigen(&diff);
    dv.iter().cloned().map(f64::abs).fold(0.0, f64::max)
}

/// Euclidean orthogonal projector onto the column span (rank-revealing).
fn projector(cols: &DMatrix<f64>) -> DMatrix<f64> {
    let g = cols.transpose() * cols;
    let (d, u) = sym_eigen(&g);
    let dmax = d.iter().cloned().fold(0.0, f64::max);
    let tol = dmax * 1e-12;
    let mut p = DMatrix::zeros(cols.nrows(), cols.nrows());
    for i in 0..d.len() {
        if d[i] > tol {
            let dir = cols * u.column(i) / d[i].sqrt();
            p += &dir * dir.transpose();
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_pencil_gives_unit_eigenvalues() {
        let a = DMatrix::from_diagonal_element(4, 4, 1.0);
        let (vals, _) = gen_sym_eigen(&a, &a).unwrap();
        for v in vals {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_pencil() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 6.0]));
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let (vals, vecs) = gen_sym_eigen(&a, &b).unwrap();
        assert!((vals[0] - 2.0).abs() < 1e-13);
        assert!((vals[1] - 3.0).abs() < 1e-13);
        // B-orthonormality
        let g = vecs.transpose() * b * &vecs;
        assert!((g - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn random_pencil_residuals_small() {
        let n = 12;
        let mut rng = crate::rng::Rng::from_seed(3);
        let m = DMatrix::from_fn(n, n, |_, _| rng.next_sym());
        let b = &m * m.transpose() + DMatrix::identity(n, n) * 0.5;
        let m2 = DMatrix::from_fn(n, n, |_, _| rng.next_sym());
        let a = &m2 * m2.transpose();
        let (vals, vecs) = gen_sym_eigen(&a, &b).unwrap();
        for k in 0..n {
            let x = vecs.column(k).clone_owned();
            let r = &a * &x - &b * &x * vals[k];
            assert!(r.norm() < 1e-10 * a.norm() * x.norm(), "k={k} residual {}", r.norm());
        }
        for k in 1..n {
            assert!(vals[k] >= vals[k - 1]);
        }
    }

    #[test]
    fn not_positive_definite_detected() {
        let a = DMatrix::identity(3, 3);
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0, 1.0]));
        assert!(matches!(gen_sym_eigen(&a, &b), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn projector_difference_of_identical_spans_is_zero() {
        // family [e1, e2, e1, e2] in R^2: U = V
        let g = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0, 1.0, 0.0, //
                0.0, 1.0, 0.0, 1.0, //
                1.0, 0.0, 1.0, 0.0, //
                0.0, 1.0, 0.0, 1.0,
            ],
        );
        assert!(projector_difference_norm(&g, 2) < 1e-10);
    }

    #[test]
    fn projector_difference_of_orthogonal_lines_is_one() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert!((projector_difference_norm(&g, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projector_difference_matches_principal_angle() {
        // lines at angle t: norm = sin t
        let t: f64 = 0.3;
        let g = DMatrix::from_row_slice(2, 2, &[1.0, t.cos(), t.cos(), 1.0]);
        assert!((projector_difference_norm(&g, 1) - t.sin()).abs() < 1e-12);
    }
}
