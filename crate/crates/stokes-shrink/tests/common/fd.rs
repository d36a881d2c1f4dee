//! Local low-order oracle for the per-mode clamped eigenproblem on the
//! annulus, with Richardson extrapolation.
//!
//! The quadratic S1/S0 forms are discretized with cubic Hermite elements
//! (value + derivative unknowns per node) on a uniform grid in s = ln r,
//! so the space is H2-conforming and the clamped conditions are imposed
//! essentially by dropping or aliasing boundary unknowns; conformity makes
//! every discrete eigenvalue an upper bound of its continuous counterpart.
//! Modes n >= 1 use the weighted unknown u = phi / r, for which the S1
//! density (u'' + 2u' + (1-n^2)u)^2 has no exponential factor and the
//! pencil stays well conditioned down to hole scale. Mode 0 keeps the
//! plain phi unknown: in the u form the constant stream function would be
//! a near-kernel direction of BOTH forms (its energies are pure rounding),
//! while cubics represent constants exactly in phi so the outer clamp
//! removes them at O(1) energy. Small dense pencils are solved through
//! the library's verified reduction; accuracy comes from fourth-order
//! convergence plus Richardson, not from grid size.

/// Cubic Hermite shape functions (value/deriv at each element end) and
/// their s-derivatives, on xi in [0, 1] with element width h.
fn hermite(xi: f64, h: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let x2 = xi * xi;
    let x3 = x2 * xi;
    let v = [
        1.0 - 3.0 * x2 + 2.0 * x3,
        h * (xi - 2.0 * x2 + x3),
        3.0 * x2 - 2.0 * x3,
        h * (x3 - x2),
    ];
    let d = [
        (-6.0 * xi + 6.0 * x2) / h,
        1.0 - 4.0 * xi + 3.0 * x2,
        (6.0 * xi - 6.0 * x2) / h,
        3.0 * x2 - 2.0 * xi,
    ];
    let dd = [
        (-6.0 + 12.0 * xi) / (h * h),
        (-4.0 + 6.0 * xi) / h,
        (6.0 - 12.0 * xi) / (h * h),
        (6.0 * xi - 2.0) / h,
    ];
    (v, d, dd)
}

/// Global degree of freedom: linear combination of kept unknowns.
type DofMap = Vec<(usize, f64)>;

/// Assemble the mode-n pencil over m Hermite elements.
fn assemble(eps: f64, n: u32, m: usize) -> (nalgebra::DMatrix<f64>, nalgebra::DMatrix<f64>) {
    let s0 = eps.ln();
    let h = -s0 / m as f64;
    let n2 = (n as f64) * (n as f64);
    let weighted = n >= 1;
    // raw unknowns per node: (value, derivative); build the constraint map
    let mut map: Vec<DofMap> = vec![Vec::new(); 2 * (m + 1)];
    let mut dof = 0usize;
    for i in 0..=m {
        if i == m {
            continue; // outer clamp: phi and phi' vanish
        }
        if i == 0 {
            if n >= 1 {
                continue; // inner clamp
            }
            // free trace: keep phi_0; phi'(eps) = 0 drops the derivative
            map[0] = vec![(dof, 1.0)];
            dof += 1;
            continue;
        }
        map[2 * i] = vec![(dof, 1.0)];
        map[2 * i + 1] = vec![(dof + 1, 1.0)];
        dof += 2;
    }

    let mut a = nalgebra::DMatrix::zeros(dof, dof);
    let mut b = nalgebra::DMatrix::zeros(dof, dof);
    let gx =
        [0.069431844202973714, 0.33000947820757187, 0.66999052179242813, 0.93056815579702623];
    let gw =
        [0.17392742256872693, 0.32607257743127307, 0.32607257743127307, 0.17392742256872693];
    for e in 0..m {
        let s_left = s0 + e as f64 * h;
        let mut ae = [[0.0f64; 4]; 4];
        let mut be = [[0.0f64; 4]; 4];
        for (&xi, &w) in gx.iter().zip(&gw) {
            let s = s_left + xi * h;
            let (v, d, dd) = hermite(xi, h);
            for p in 0..4 {
                let (lp, gp, np) = if weighted {
                    // u = phi / r: S1 density (u'' + 2u' + (1-n^2) u)^2,
                    // S0 density e^{2s} [(u' + u)^2 + n^2 u^2]
                    (dd[p] + 2.0 * d[p] + (1.0 - n2) * v[p], d[p] + v[p], v[p])
                } else {
                    // plain phi: S1 density e^{-2s} (phi'')^2,
                    // S0 density (phi')^2
                    (dd[p], d[p], v[p])
                };
                for q in 0..4 {
                    let (lq, gq, nq) = if weighted {
                        (dd[q] + 2.0 * d[q] + (1.0 - n2) * v[q], d[q] + v[q], v[q])
                    } else {
                        (dd[q], d[q], v[q])
                    };
                    if weighted {
                        ae[p][q] += w * h * lp * lq;
                        be[p][q] += w * h * (2.0 * s).exp() * (gp * gq + n2 * np * nq);
                    } else {
                        ae[p][q] += w * h * (-2.0 * s).exp() * lp * lq;
                        be[p][q] += w * h * gp * gq;
                    }
                }
            }
        }
        let locals = [2 * e, 2 * e + 1, 2 * (e + 1), 2 * (e + 1) + 1];
        for p in 0..4 {
            for &(gp, cp) in &map[locals[p]] {
                for q in 0..4 {
                    for &(gq, cq) in &map[locals[q]] {
                        a[(gp, gq)] += cp * cq * ae[p][q];
                        b[(gp, gq)] += cp * cq * be[p][q];
                    }
                }
            }
        }
    }
    (a, b)
}

/// Mode 0 through the vorticity formulation: with a free constant trace,
/// the Q-projector only subtracts a constant and leaves the gradient
/// unchanged, so the eigenproblem is the plain Sturm-Liouville pencil
///   lambda = int omega_s^2 ds / int e^{2s} omega^2 ds
/// over the constraint int e^{2s} omega ds = 0 (zero mean in L2(r dr)),
/// with natural boundary conditions. P1 elements give a tridiagonal,
/// perfectly scaled pencil; the constraint eliminates one unknown.
fn mode0_eigenvalues_grid(eps: f64, count: usize, m: usize) -> Vec<f64> {
    let s0 = eps.ln();
    let h = -s0 / m as f64;
    let nn = m + 1;
    let gx =
        [0.069431844202973714, 0.33000947820757187, 0.66999052179242813, 0.93056815579702623];
    let gw =
        [0.17392742256872693, 0.32607257743127307, 0.32607257743127307, 0.17392742256872693];
    let mut a = nalgebra::DMatrix::zeros(nn, nn);
    let mut b = nalgebra::DMatrix::zeros(nn, nn);
    let mut c = vec![0.0; nn];
    for e in 0..m {
        let s_left = s0 + e as f64 * h;
        // P1 hats: left = 1 - xi, right = xi; derivative -1/h, 1/h
        a[(e, e)] += 1.0 / h;
        a[(e, e + 1)] -= 1.0 / h;
        a[(e + 1, e)] -= 1.0 / h;
        a[(e + 1, e + 1)] += 1.0 / h;
        for (&xi, &w) in gx.iter().zip(&gw) {
            let wgt = w * h * (2.0 * (s_left + xi * h)).exp();
            let v = [1.0 - xi, xi];
            for p in 0..2 {
                c[e + p] += wgt * v[p];
                for q in 0..2 {
                    b[(e + p, e + q)] += wgt * v[p] * v[q];
                }
            }
        }
    }
    // eliminate the dof with the largest constraint weight (outer end)
    let mut k = 0;
    for i in 0..nn {
        if c[i].abs() > c[k].abs() {
            k = i;
        }
    }
    let mut r = nalgebra::DMatrix::zeros(nn, nn - 1);
    let mut col = 0;
    for i in 0..nn {
        if i == k {
            continue;
        }
        r[(i, col)] = 1.0;
        r[(k, col)] = -c[i] / c[k];
        col += 1;
    }
    let ar = r.transpose() * &a * &r;
    let br = r.transpose() * &b * &r;
    let ar = 0.5 * (&ar + ar.transpose());
    let br = 0.5 * (&br + br.transpose());
    stokes_shrink::linalg::gen_sym_eigen_smallest(&ar, &br, count)
        .expect("mode-0 oracle pencil solvable")
        .into_iter()
        .map(|(l, _)| l)
        .collect()
}

/// First `count` eigenvalues of mode n at hole radius eps, on one grid.
pub fn mode_eigenvalues_grid_public(eps: f64, n: u32, count: usize, m: usize) -> Vec<f64> {
    mode_eigenvalues_grid(eps, n, count, m)
}

fn mode_eigenvalues_grid(eps: f64, n: u32, count: usize, m: usize) -> Vec<f64> {
    if n == 0 {
        return mode0_eigenvalues_grid(eps, count, m);
    }
    let (a, b) = assemble(eps, n, m);
    let a = 0.5 * (&a + a.transpose());
    let b = 0.5 * (&b + b.transpose());
    stokes_shrink::linalg::gen_sym_eigen_smallest(&a, &b, count)
        .expect("oracle pencil solvable")
        .into_iter()
        .map(|(l, _)| l)
        .collect()
}

/// Mode eigenvalues with Richardson extrapolation: grids m and 2m, fourth
/// order for the Hermite modes, second order for the mode-0 P1 pencil.
pub fn mode_eigenvalues(eps: f64, n: u32, count: usize, m: usize) -> Vec<f64> {
    let l1 = mode_eigenvalues_grid(eps, n, count, m);
    let l2 = mode_eigenvalues_grid(eps, n, count, 2 * m);
    if n == 0 {
        (0..count).map(|k| (4.0 * l2[k] - l1[k]) / 3.0).collect()
    } else {
        (0..count).map(|k| (16.0 * l2[k] - l1[k]) / 15.0).collect()
    }
}

/// First `count` merged annulus eigenvalues (cos/sin duplication). The
/// second-order mode-0 pencil runs on a finer base grid than the
/// fourth-order Hermite modes.
pub fn annulus_eigenvalues(eps: f64, count: usize, n_max: u32) -> Vec<f64> {
    let mut all = Vec::new();
    for n in 0..=n_max {
        let base = if n == 0 { 384 } else { 128 };
        for lambda in mode_eigenvalues(eps, n, count.min(4), base) {
            all.push(lambda);
            if n >= 1 {
                all.push(lambda);
            }
        }
    }
    all.sort_by(|x, y| x.partial_cmp(y).unwrap());
    all.truncate(count);
    all
}
