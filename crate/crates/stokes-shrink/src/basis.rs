//! Per-mode radial Galerkin bases and Gram matrices.
//!
//! Disk basis functions are recombinations of Legendre polynomials in r;
//! annulus functions take the form r * p(ln r) with p a recombined Legendre
//! polynomial in s = ln r. The r factor makes the S1 integrand a pure
//! polynomial in s (the e^{-2s} of the mode Laplacian cancels against the
//! r dr measure), which keeps the Gram pencil well conditioned across the
//! full hole-scale log range. Every function satisfies the clamped
//! conditions exactly: phi(R_e) = phi'(R_e) = 0 everywhere, phi'(eps) = 0
//! on the annulus, phi(eps) = 0 for n >= 1, and for n = 0 exactly one
//! basis member carries the free constant trace on the inner boundary.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::GeometryConfig;
use crate::profile::{angular_factor, Domain, RadialGrid};
use crate::quad::{gauss_legendre, legendre_table};

/// Galerkin basis for one angular mode on one domain.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    pub domain: Domain,
    pub n: u32,
    pub n_r: usize,
    pub grid: Arc<RadialGrid>,
    /// annulus bases carry the extra factor r in front of the polynomial
    r_weighted: bool,
    /// Legendre-recombination coefficients per basis function.
    coeffs: Vec<Vec<f64>>,
    /// values and r-derivatives (0..=3) cached at the grid nodes
    pub val: Vec<Vec<f64>>,
    pub d1: Vec<Vec<f64>>,
    pub d2: Vec<Vec<f64>>,
    pub d3: Vec<Vec<f64>>,
}

/// S1/S0 Gram pair: `a` holds (L phi_i, L phi_j), `b` the mode-n gradient
/// form, both with the angular factor included.
#[derive(Debug, Clone)]
pub struct GramPair {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

/// Default order of the data grid for a basis of size n_r.
pub fn default_quad_order(domain: Domain, n_r: usize, r_lo: f64, r_hi: f64) -> usize {
    let base = n_r + 16;
    match domain {
        Domain::Annulus => {
            let span = (r_hi.ln() - r_lo.ln()).abs();
            base + (2.0 * span).ceil() as usize
        }
        _ => base,
    }
}

fn endpoint_row(deg_max: usize, t: f64, order: usize) -> Vec<f64> {
    // row of the constraint functional p^(order)(t) over Legendre degrees
    let tab = legendre_table(deg_max, t);
    tab.iter().map(|row| row[order]).collect()
}

/// phi' = 0 at an annulus endpoint means p + (dt/ds) p_t = 0 for phi = r p.
fn weighted_deriv_row(deg_max: usize, t: f64, c: f64) -> Vec<f64> {
    let tab = legendre_table(deg_max, t);
    tab.iter().map(|row| row[0] + c * row[1]).collect()
}

/// Linear constraints (value/derivative at endpoints) for a mode.
fn constraints(domain: Domain, n: u32, deg_max: usize, dt_ds: f64) -> Vec<Vec<f64>> {
    match (domain, n) {
        (Domain::Disk, 0) => vec![
            endpoint_row(deg_max, 1.0, 0),
            endpoint_row(deg_max, 1.0, 1),
            endpoint_row(deg_max, -1.0, 1),
        ],
        (Domain::Disk, 1) => vec![
            endpoint_row(deg_max, 1.0, 0),
            endpoint_row(deg_max, 1.0, 1),
            endpoint_row(deg_max, -1.0, 0),
        ],
        (Domain::Disk, _) => vec![
            endpoint_row(deg_max, 1.0, 0),
            endpoint_row(deg_max, 1.0, 1),
            endpoint_row(deg_max, -1.0, 0),
            endpoint_row(deg_max, -1.0, 1),
        ],
        (Domain::Annulus, _) => vec![
            endpoint_row(deg_max, 1.0, 0),
            weighted_deriv_row(deg_max, 1.0, dt_ds),
            endpoint_row(deg_max, -1.0, 0),
            weighted_deriv_row(deg_max, -1.0, dt_ds),
        ],
        (Domain::Hole, _) => unreachable!("no Galerkin basis on the hole"),
    }
}

/// Null vector of the c x (c+1) constraint block starting at degree `start`.
fn recombination(cons: &[Vec<f64>], start: usize) -> Vec<f64> {
    let c = cons.len();
    let _ = c;
    // pad with a zero row so the SVD exposes the full right-singular basis
    let m = DMatrix::from_fn(c + 1, c + 1, |i, j| if i < c { cons[i][start + j] } else { 0.0 });
    let svd = m.svd(false, true);
    let vt = svd.v_t.unwrap();
    let mut kmin = 0;
    for k in 0..svd.singular_values.len() {
        if svd.singular_values[k] < svd.singular_values[kmin] {
            kmin = k;
        }
    }
    let mut v: Vec<f64> = (0..(c + 1)).map(|j| vt[(kmin, j)]).collect();
    // deterministic orientation: leading (highest-degree) coefficient positive
    if v[c] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
    v
}

impl ModeBasis {
    /// Evaluate basis function j and its first three r-derivatives at radius r.
    pub fn eval(&self, j: usize, r: f64) -> [f64; 4] {
        let c = &self.coeffs[j];
        let t = self.grid.param_of_r(r);
        let tab = legendre_table(c.len() - 1, t);
        let mut f = [0.0; 4];
        for (k, &ck) in c.iter().enumerate() {
            for (d, fd) in f.iter_mut().enumerate() {
                *fd += ck * tab[k][d];
            }
        }
        param_to_r_derivs(&self.grid, self.r_weighted, r, f)
    }
}

/// Convert p-derivatives in the grid parameter to r-derivatives of the
/// basis function (phi = p on the disk, phi = r p on the annulus).
fn param_to_r_derivs(grid: &RadialGrid, r_weighted: bool, r: f64, f: [f64; 4]) -> [f64; 4] {
    if grid.log_mapped {
        let c = 2.0 / (grid.r_hi.ln() - grid.r_lo.ln());
        let ps = f[1] * c;
        let pss = f[2] * c * c;
        let psss = f[3] * c * c * c;
        let (g, gs, gss, gsss) = if r_weighted {
            // phi = e^s p: s-derivatives pick up binomial combinations
            (
                r * f[0],
                r * (f[0] + ps),
                r * (f[0] + 2.0 * ps + pss),
                r * (f[0] + 3.0 * ps + 3.0 * pss + psss),
            )
        } else {
            (f[0], ps, pss, psss)
        };
        let fr = gs / r;
        let frr = (gss - gs) / (r * r);
        let frrr = (gsss - 3.0 * gss + 2.0 * gs) / (r * r * r);
        [g, fr, frr, frrr]
    } else {
        let half = 2.0 / (grid.r_hi - grid.r_lo);
        [f[0], f[1] * half, f[2] * half * half, f[3] * half * half * half]
    }
}

/// Free-constant trace carrier for mode 0 on the annulus: the minimum
/// S1+S0 energy polynomial p with phi = r p satisfying phi(eps) = 1,
/// phi'(eps) = 0, phi(R_e) = 0, phi'(R_e) = 0. Minimizing the energy keeps
/// the column scale of the Gram pencil comparable to the bulk functions;
/// the naive Hermite interpolant carries an e^{2|ln eps|} energy that
/// destroys the pencil conditioning.
fn trace_carrier(grid: &RadialGrid, deg_max: usize, dt_ds: f64) -> Result<Vec<f64>> {
    let s_lo = grid.r_lo.ln();
    let s_hi = grid.r_hi.ln();
    let m = deg_max + 1;
    // raw mode-0 S1 and S0 forms over the unconstrained Legendre family,
    // in the p representation: S1 integrand (p'' + 2p' + p)^2 ds and
    // S0 integrand e^{2s} ((p' + p)^2) ds, both in true s derivatives
    let panels = ((s_hi - s_lo) / 2.0).ceil().max(1.0) as usize;
    let mut breaks = Vec::with_capacity(panels + 1);
    for i in 0..=panels {
        breaks.push(s_lo + (s_hi - s_lo) * i as f64 / panels as f64);
    }
    let rule = crate::quad::Quad1d::composite(deg_max + 8, &breaks);
    let mut gram = DMatrix::zeros(m, m);
    for (&sq, &wq) in rule.x.iter().zip(&rule.w) {
        let t = 2.0 * (sq - s_lo) / (s_hi - s_lo) - 1.0;
        let tab = legendre_table(deg_max, t);
        let w2 = (2.0 * sq).exp();
        for i in 0..m {
            let pi = tab[i][0];
            let pis = tab[i][1] * dt_ds;
            let piss = tab[i][2] * dt_ds * dt_ds;
            let li = piss + 2.0 * pis + pi;
            let gi = pis + pi;
            for j in i..m {
                let pj = tab[j][0];
                let pjs = tab[j][1] * dt_ds;
                let pjss = tab[j][2] * dt_ds * dt_ds;
                let lj = pjss + 2.0 * pjs + pj;
                let gj = pjs + pj;
                let v = wq * (li * lj + w2 * gi * gj);
                gram[(i, j)] += v;
                if i != j {
                    gram[(j, i)] += v;
                }
            }
        }
    }
    // KKT system: minimize p' gram p subject to the four trace conditions
    let e_inv = 1.0 / grid.r_lo;
    let cons: [(f64, bool, f64); 4] = [
        (-1.0, false, e_inv),
        (-1.0, true, 0.0),
        (1.0, false, 0.0),
        (1.0, true, 0.0),
    ];
    let mut kkt = DMatrix::zeros(m + 4, m + 4);
    let mut rhs = nalgebra::DVector::zeros(m + 4);
    kkt.view_mut((0, 0), (m, m)).copy_from(&gram);
    for (row, &(t, deriv, target)) in cons.iter().enumerate() {
        let tab = legendre_table(deg_max, t);
        for k in 0..m {
            let c = if deriv { tab[k][0] + dt_ds * tab[k][1] } else { tab[k][0] };
            kkt[(m + row, k)] = c;
            kkt[(k, m + row)] = c;
        }
        rhs[m + row] = target;
    }
    let sol = kkt
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("trace carrier KKT solve failed".into()))?;
    Ok((0..m).map(|k| sol[k]).collect())
}

/// Build the mode-n basis of dimension n_r on the disk G or the annulus F.
pub fn build_mode_basis(
    cfg: &GeometryConfig,
    domain: Domain,
    n: u32,
    n_r: usize,
) -> Result<ModeBasis> {
    build_mode_basis_q(cfg, domain, n, n_r, 0)
}

/// Same with an explicit quadrature order (0 = default).
pub fn build_mode_basis_q(
    cfg: &GeometryConfig,
    domain: Domain,
    n: u32,
    n_r: usize,
    quad_order: usize,
) -> Result<ModeBasis> {
    if n_r < 4 {
        return Err(Error::TruncationTooSmall(format!("N_r = {n_r} < 4")));
    }
    let (r_lo, r_hi) = match domain {
        Domain::Disk => (0.0, cfg.r_e),
        Domain::Annulus => (cfg.eps_hole, cfg.r_e),
        Domain::Hole => {
            return Err(Error::TruncationTooSmall("no Galerkin basis on the hole".into()))
        }
    };
    let order = if quad_order == 0 {
        default_quad_order(domain, n_r, r_lo.max(f64::MIN_POSITIVE), r_hi)
    } else {
        quad_order
    };
    let grid = RadialGrid::new(domain, r_lo, r_hi, order);
    let r_weighted = domain == Domain::Annulus;
    let dt_ds = if r_weighted { 2.0 / (r_hi.ln() - r_lo.ln()) } else { 1.0 };

    let deg_max = n_r + 4;
    let cons = constraints(domain, n, deg_max, dt_ds);
    let mut coeffs: Vec<Vec<f64>> = Vec::with_capacity(n_r);
    let mut bulk = n_r;
    if domain == Domain::Annulus && n == 0 {
        coeffs.push(trace_carrier(&grid, deg_max, dt_ds)?);
        bulk -= 1;
    }
    for j in 0..bulk {
        let v = recombination(&cons, j);
        let mut row = vec![0.0; deg_max + 1];
        for (m, &vm) in v.iter().enumerate() {
            row[j + m] = vm;
        }
        coeffs.push(row);
    }

    // cache values and derivatives at the quadrature nodes
    let q = grid.len();
    let mut val = vec![vec![0.0; q]; n_r];
    let mut d1 = vec![vec![0.0; q]; n_r];
    let mut d2 = vec![vec![0.0; q]; n_r];
    let mut d3 = vec![vec![0.0; q]; n_r];
    for i in 0..q {
        let tab = legendre_table(deg_max, grid.t[i]);
        for (j, cj) in coeffs.iter().enumerate() {
            let mut f = [0.0; 4];
            for (k, &ck) in cj.iter().enumerate() {
                if ck != 0.0 {
                    for (d, fd) in f.iter_mut().enumerate() {
                        *fd += ck * tab[k][d];
                    }
                }
            }
            let fr = param_to_r_derivs(&grid, r_weighted, grid.r[i], f);
            val[j][i] = fr[0];
            d1[j][i] = fr[1];
            d2[j][i] = fr[2];
            d3[j][i] = fr[3];
        }
    }

    Ok(ModeBasis { domain, n, n_r, grid, r_weighted, coeffs, val, d1, d2, d3 })
}

/// Mode-n Laplacian of basis function j at the grid nodes.
pub fn mode_laplacian(basis: &ModeBasis, j: usize) -> Vec<f64> {
    let n2 = (basis.n as f64) * (basis.n as f64);
    (0..basis.grid.len())
        .map(|i| {
            let r = basis.grid.r[i];
            basis.d2[j][i] + basis.d1[j][i] / r - n2 * basis.val[j][i] / (r * r)
        })
        .collect()
}

/// Quadrature rule for Gram assembly: (r nodes, r-dr weights). The annulus
/// S1 form carries an e^{-2s} factor over the full log span, so the rule is
/// composite Gauss over s-panels of width <= 2; each panel then resolves
/// both the polynomial integrands and the exponential to machine level.
fn gram_rule(basis: &ModeBasis, order: usize) -> (Vec<f64>, Vec<f64>) {
    let grid = &basis.grid;
    if grid.log_mapped {
        let s_lo = grid.r_lo.ln();
        let s_hi = grid.r_hi.ln();
        let panels = ((s_hi - s_lo) / 2.0).ceil().max(1.0) as usize;
        let mut breaks = Vec::with_capacity(panels + 1);
        for i in 0..=panels {
            breaks.push(s_lo + (s_hi - s_lo) * i as f64 / panels as f64);
        }
        let q = crate::quad::Quad1d::composite(order, &breaks);
        let r: Vec<f64> = q.x.iter().map(|&s| s.exp()).collect();
        let w: Vec<f64> = q.w.iter().zip(&r).map(|(&w, &ri)| w * ri * ri).collect();
        (r, w)
    } else {
        let q = crate::quad::Quad1d::gauss(order, grid.r_lo, grid.r_hi);
        let w: Vec<f64> = q.w.iter().zip(&q.x).map(|(&w, &ri)| w * ri).collect();
        (q.x, w)
    }
}

/// The quadrature rule used for Gram assembly, also needed by consumers
/// that pair data against the S1 form (its integrand carries the e^{-2s}
/// weight on the annulus).
pub fn assembly_rule(basis: &ModeBasis) -> (Vec<f64>, Vec<f64>) {
    gram_rule(basis, basis.n_r + 12)
}

/// Assemble the S1/S0 Gram pair, with a quadrature refinement cross-check.
pub fn assemble_gram(basis: &ModeBasis) -> Result<GramPair> {
    let rule = gram_rule(basis, basis.n_r + 12);
    let pair = assemble_on_rule(basis, &rule.0, &rule.1);
    // refinement disagreement check
    let fine = gram_rule(basis, basis.n_r + 28);
    let pair_f = assemble_on_rule(basis, &fine.0, &fine.1);
    let rel = |m: &DMatrix<f64>, mf: &DMatrix<f64>| {
        let scale = m.amax().max(1e-300);
        (m - mf).amax() / scale
    };
    let ra = rel(&pair.a, &pair_f.a);
    let rb = rel(&pair.b, &pair_f.b);
    if ra > 1e-10 || rb > 1e-10 {
        return Err(Error::QuadratureFailure(format!(
            "Gram refinement disagreement: A {ra:.3e}, B {rb:.3e} (domain {:?}, n={}, N_r={})",
            basis.domain, basis.n, basis.n_r
        )));
    }
    Ok(pair)
}

fn assemble_on_rule(basis: &ModeBasis, r_nodes: &[f64], mass: &[f64]) -> GramPair {
    // evaluate the recombined polynomials analytically on the rule
    let n_r = basis.n_r;
    let n2 = (basis.n as f64) * (basis.n as f64);
    let ang = angular_factor(basis.n);
    let deg_max = basis.coeffs[0].len() - 1;
    let q = r_nodes.len();
    let mut val = vec![vec![0.0; q]; n_r];
    let mut d1v = vec![vec![0.0; q]; n_r];
    let mut lap = vec![vec![0.0; q]; n_r];
    for i in 0..q {
        let r = r_nodes[i];
        let t = basis.grid.param_of_r(r);
        let tab = legendre_table(deg_max, t);
        for j in 0..n_r {
            let mut f = [0.0; 4];
            for (k, &ck) in basis.coeffs[j].iter().enumerate() {
                if ck != 0.0 {
                    for (d, fd) in f.iter_mut().enumerate() {
                        *fd += ck * tab[k][d];
                    }
                }
            }
            let fr = param_to_r_derivs(&basis.grid, basis.r_weighted, r, f);
            val[j][i] = fr[0];
            d1v[j][i] = fr[1];
            lap[j][i] = fr[2] + fr[1] / r - n2 * fr[0] / (r * r);
        }
    }
    let mut a = DMatrix::zeros(n_r, n_r);
    let mut b = DMatrix::zeros(n_r, n_r);
    for i in 0..n_r {
        for j in i..n_r {
            let mut sa = 0.0;
            let mut sb = 0.0;
            for (qq, &m) in mass.iter().enumerate() {
                let r = r_nodes[qq];
                sa += m * (lap[i][qq] * lap[j][qq]);
                sb += m * (d1v[i][qq] * d1v[j][qq] + n2 * (val[i][qq] * val[j][qq]) / (r * r));
            }
            a[(i, j)] = ang * sa;
            a[(j, i)] = ang * sa;
            b[(i, j)] = ang * sb;
            b[(j, i)] = ang * sb;
        }
    }
    GramPair { a, b }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_geometry;

    fn cfg() -> GeometryConfig {
        build_geometry(1.0, 0.5, (-9.0f64).exp()).unwrap()
    }

    #[test]
    fn disk_basis_satisfies_clamped_outer_conditions() {
        let b = build_mode_basis(&cfg(), Domain::Disk, 0, 8).unwrap();
        assert_eq!(b.n_r, 8);
        for j in 0..8 {
            let e = b.eval(j, 1.0);
            assert!(e[0].abs() < 1e-12, "phi({j})(1) = {}", e[0]);
            assert!(e[1].abs() < 1e-12, "phi'({j})(1) = {}", e[1]);
            let e0 = b.eval(j, 0.0);
            assert!(e0[1].abs() < 1e-11, "phi'({j})(0) = {}", e0[1]);
        }
    }

    #[test]
    fn annulus_basis_clamped_both_ends_for_positive_modes() {
        let c = cfg();
        let b = build_mode_basis(&c, Domain::Annulus, 2, 8).unwrap();
        for j in 0..8 {
            let outer = b.eval(j, 1.0);
            let inner = b.eval(j, c.eps_hole);
            assert!(outer[0].abs() < 1e-12 && outer[1].abs() < 1e-12);
            assert!(inner[0].abs() < 1e-12, "phi({j})(eps) = {}", inner[0]);
            assert!(inner[1].abs() * c.eps_hole < 1e-10, "phi'({j})(eps) = {}", inner[1]);
        }
    }

    #[test]
    fn annulus_mode0_has_single_trace_carrier() {
        let c = cfg();
        let b = build_mode_basis(&c, Domain::Annulus, 0, 8).unwrap();
        let inner0 = b.eval(0, c.eps_hole);
        assert!((inner0[0] - 1.0).abs() < 1e-12);
        assert!(inner0[1].abs() * c.eps_hole < 1e-12);
        for j in 1..8 {
            let inner = b.eval(j, c.eps_hole);
            assert!(inner[0].abs() < 1e-12, "phi({j})(eps) = {}", inner[0]);
        }
    }

    #[test]
    fn truncation_too_small_detected() {
        assert!(matches!(
            build_mode_basis(&cfg(), Domain::Disk, 0, 3),
            Err(Error::TruncationTooSmall(_))
        ));
    }

    #[test]
    fn gram_matrices_symmetric_and_positive() {
        let c = cfg();
        for (dom, n) in [(Domain::Disk, 0u32), (Domain::Disk, 3), (Domain::Annulus, 0), (Domain::Annulus, 2)] {
            let b = build_mode_basis(&c, dom, n, 10).unwrap();
            let g = assemble_gram(&b).unwrap();
            assert_eq!((&g.a - g.a.transpose()).amax(), 0.0);
            assert_eq!((&g.b - g.b.transpose()).amax(), 0.0);
            assert!(g.b.clone().cholesky().is_some(), "B not PD for {dom:?} n={n}");
            assert!(g.a.clone().cholesky().is_some(), "A not PD for {dom:?} n={n}");
        }
    }

    #[test]
    fn gram_entry_matches_symbolic_integral() {
        // phi = (1-r^2)^2 on the disk, mode 0:
        // B = 2 pi int_0^1 (phi')^2 r dr = 32 pi (1/4 - 2/6 + 1/8) = 4 pi/3
        // A = 2 pi int_0^1 (phi'' + phi'/r)^2 r dr, phi'' + phi'/r = 16 r^2 - 8
        //   = 2 pi int (256 r^5 - 256 r^3 + 64 r) dr = 2 pi * (256/6 - 64 + 32)
        let c = cfg();
        let b = build_mode_basis(&c, Domain::Disk, 0, 8).unwrap();
        // express (1-r^2)^2 in the basis by least squares on the grid
        let target: Vec<f64> = b.grid.r.iter().map(|&r| (1.0 - r * r) * (1.0 - r * r)).collect();
        let nb = b.n_r;
        let mut gram = DMatrix::zeros(nb, nb);
        let mut rhs = nalgebra::DVector::zeros(nb);
        for i in 0..nb {
            rhs[i] = b.grid.inner(&b.val[i], &target);
            for j in 0..nb {
                gram[(i, j)] = b.grid.inner(&b.val[i], &b.val[j]);
            }
        }
        let coef = crate::linalg::spd_solve(&gram, &rhs).unwrap();
        let g = assemble_gram(&b).unwrap();
        let tau = 2.0 * std::f64::consts::PI;
        let b_quad = (coef.transpose() * &g.b * &coef)[(0, 0)];
        let a_quad = (coef.transpose() * &g.a * &coef)[(0, 0)];
        let b_exact = 2.0 * tau / 3.0;
        let a_exact = tau * (256.0 / 6.0 - 64.0 + 32.0);
        assert!((b_quad - b_exact).abs() / b_exact < 1e-10, "B {b_quad} vs {b_exact}");
        assert!((a_quad - a_exact).abs() / a_exact < 1e-10, "A {a_quad} vs {a_exact}");
    }

    #[test]
    fn quadrature_refinement_agreement() {
        // doubling the rule must leave entries essentially unchanged;
        // assemble_gram errors otherwise, so success here is the assertion
        let c = build_geometry(1.0, 0.5, 1e-6).unwrap();
        for n in [0u32, 1, 5] {
            let b = build_mode_basis(&c, Domain::Annulus, n, 24).unwrap();
            assemble_gram(&b).unwrap();
        }
    }
}
