//! Generalized eigensolves, the Biot-Savart solve, and the projectors onto
//! the vorticity space V0 and the stream space S0, all per Fourier mode.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::basis::{mode_laplacian, GramPair, ModeBasis};
use crate::error::{Error, Result};
use crate::linalg::{gen_sym_eigen_smallest, spd_solve};
use crate::profile::{Domain, RadialGrid, RadialProfile};

/// Relative residual tolerance for eigenpairs.
pub const EIG_RESIDUAL_TOL: f64 = 1e-10;

/// Solve A x = lambda B x and return the k_max smallest eigenpairs,
/// ascending, with B-orthonormal eigenvectors and verified residuals.
pub fn solve_gep(g: &GramPair, k_max: usize) -> Result<Vec<(f64, DVector<f64>)>> {
    let out = gen_sym_eigen_smallest(&g.a, &g.b, k_max)?;
    let a_scale = g.a.norm();
    for (k, (lambda, x)) in out.iter().enumerate() {
        let res = (&g.a * x - &g.b * x * *lambda).norm();
        if res > EIG_RESIDUAL_TOL * a_scale * x.norm() {
            return Err(Error::ConvergenceFailure(format!(
                "eigenpair {k} residual {res:.3e} above {:.3e}",
                EIG_RESIDUAL_TOL * a_scale * x.norm()
            )));
        }
    }
    Ok(out)
}

/// A normalized radial harmonic r^p, stored as unit-L2(r dr) samples; the
/// true norm is kept in log form so hole-scale powers never overflow.
#[derive(Debug, Clone)]
pub struct HarmonicRadial {
    pub p: i32,
    pub values: Vec<f64>,
    /// ln of the L2(r dr) norm of the raw monomial over the grid interval
    pub log_norm: f64,
}

/// ln of int_lo^hi r^{2p} r dr (assumes 0 <= lo < hi).
pub fn log_mono_norm_sq(lo: f64, hi: f64, p: i32) -> f64 {
    let e = 2 * p + 2;
    if e > 0 {
        // hi^e (1 - (lo/hi)^e) / e
        let ratio = if lo == 0.0 { 0.0 } else { (e as f64 * (lo / hi).ln()).exp() };
        (e as f64) * hi.ln() + (-(ratio)).ln_1p() - (e as f64).ln()
    } else if e < 0 {
        // lo^e (1 - (lo/hi)^{-e}) / (-e)
        let ratio = ((-e) as f64 * (lo / hi).ln()).exp();
        (e as f64) * lo.ln() + (-(ratio)).ln_1p() - ((-e) as f64).ln()
    } else {
        // p = -1: ln ln(hi/lo)
        (hi / lo).ln().ln()
    }
}

/// Build the normalized harmonic r^p on a grid.
pub fn harmonic_radial(grid: &Arc<RadialGrid>, p: i32) -> HarmonicRadial {
    let log_norm = 0.5 * log_mono_norm_sq(grid.r_lo, grid.r_hi, p);
    let values = grid
        .r
        .iter()
        .map(|&r| ((p as f64) * r.ln() - log_norm).exp())
        .collect();
    HarmonicRadial { p, values, log_norm }
}

/// Normalized d/dr samples of a harmonic r^p (same normalization).
pub fn harmonic_radial_deriv(grid: &Arc<RadialGrid>, h: &HarmonicRadial) -> Vec<f64> {
    grid.r
        .iter()
        .map(|&r| (h.p as f64) * (((h.p as f64) - 1.0) * r.ln() - h.log_norm).exp() * r.signum())
        .collect()
}

/// Zero-flux harmonic span for mode n on a domain: { r^n } on disks,
/// { r^n, r^{-n} } on the annulus for n >= 1, constants for n = 0
/// (ln r is excluded by the zero-flux condition).
pub fn harmonic_span(grid: &Arc<RadialGrid>, n: u32) -> Vec<HarmonicRadial> {
    match grid.domain {
        Domain::Disk | Domain::Hole => vec![harmonic_radial(grid, n as i32)],
        Domain::Annulus => {
            if n == 0 {
                vec![harmonic_radial(grid, 0)]
            } else {
                vec![harmonic_radial(grid, n as i32), harmonic_radial(grid, -(n as i32))]
            }
        }
    }
}

/// Gram matrix of the normalized harmonic span (closed form).
pub fn harmonic_span_gram(grid: &RadialGrid, span: &[HarmonicRadial]) -> DMatrix<f64> {
    let m = span.len();
    DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            1.0
        } else {
            // <r^p, r^q> = int r^{p+q+1} dr, normalized
            let p = span[i].p;
            let q = span[j].p;
            let e = p + q + 2;
            let raw_log = if e != 0 {
                // (hi^e - lo^e)/e, with p+q = 0 in practice (e = 2)
                let hi = grid.r_hi;
                let lo = grid.r_lo;
                ((hi.powi(e) - lo.powi(e)) / e as f64).ln()
            } else {
                (grid.r_hi / grid.r_lo).ln().ln()
            };
            (raw_log - span[i].log_norm - span[j].log_norm).exp()
        }
    })
}

/// Orthogonal projection of a profile onto the zero-flux harmonic space of
/// its mode, returned as span coefficients (normalized basis).
pub fn harmonic_component(f: &RadialProfile) -> (Vec<HarmonicRadial>, DVector<f64>) {
    let span = harmonic_span(&f.grid, f.n);
    let gram = harmonic_span_gram(&f.grid, &span);
    let rhs = DVector::from_iterator(
        span.len(),
        span.iter().map(|h| f.grid.inner(&f.values, &h.values)),
    );
    let coeffs = match spd_solve(&gram, &rhs) {
        Ok(c) => c,
        Err(_) => gram.lu().solve(&rhs).expect("harmonic span gram solvable"),
    };
    (span, coeffs)
}

/// P projector: remove the mode-n zero-flux harmonic component in L2(r dr).
pub fn project_v0(f: &RadialProfile) -> RadialProfile {
    let (span, coeffs) = harmonic_component(f);
    let mut values = f.values.clone();
    for (h, &c) in span.iter().zip(coeffs.iter()) {
        for (v, hv) in values.iter_mut().zip(&h.values) {
            *v -= c * hv;
        }
    }
    RadialProfile::new(f.n, f.parity, f.grid.clone(), values)
}

/// Harmonic trace-matching function h = a (r/r_hi)^n + b (r_lo/r)^n.
#[derive(Debug, Clone, Copy)]
pub struct HarmonicTrace {
    pub n: u32,
    pub a: f64,
    pub b: f64,
    pub r_lo: f64,
    pub r_hi: f64,
}

impl HarmonicTrace {
    pub fn eval(&self, r: f64) -> f64 {
        let n = self.n as f64;
        let interior = if self.n == 0 { 1.0 } else { (n * (r / self.r_hi).ln()).exp() };
        let exterior = if self.n == 0 || self.r_lo == 0.0 {
            0.0
        } else {
            (n * (self.r_lo / r).ln()).exp()
        };
        self.a * interior + self.b * exterior
    }

    pub fn eval_deriv(&self, r: f64) -> f64 {
        let n = self.n as f64;
        if self.n == 0 {
            return 0.0;
        }
        let interior = (n * (r / self.r_hi).ln()).exp() * n / r;
        let exterior = if self.r_lo == 0.0 { 0.0 } else { (n * (self.r_lo / r).ln()).exp() * n / r };
        self.a * interior - self.b * exterior
    }

    /// Dirichlet energy over (lo, hi) within the trace's domain, with the
    /// angular factor included. Interior/exterior gradients of the same mode
    /// are pointwise orthogonal, so the two parts add.
    pub fn dirichlet_energy(&self, lo: f64, hi: f64) -> f64 {
        let n = self.n as f64;
        if self.n == 0 {
            return 0.0;
        }
        let pi = std::f64::consts::PI;
        // |grad (alpha r^n)|^2 -> 2 n^2 alpha^2 r^{2n-2}; integral n alpha^2 (hi^{2n}-lo^{2n})
        let int_part = {
            let alpha_rn = |r: f64| self.a * (n * (r / self.r_hi).ln()).exp();
            let v_hi = alpha_rn(hi);
            let v_lo = alpha_rn(lo);
            pi * n * (v_hi * v_hi - v_lo * v_lo)
        };
        let ext_part = if self.r_lo == 0.0 {
            0.0
        } else {
            let beta_rn = |r: f64| self.b * (n * (self.r_lo / r).ln()).exp();
            let v_lo = beta_rn(lo);
            let v_hi = beta_rn(hi);
            pi * n * (v_lo * v_lo - v_hi * v_hi)
        };
        int_part + ext_part
    }
}

/// Q projector: split psi = Q psi + h where h is the zero-flux harmonic
/// matching the boundary traces, so Q psi has zero outer trace and (for
/// n >= 1) zero inner trace; the split is orthogonal in the Dirichlet
/// seminorm.
pub fn project_s0(f: &RadialProfile) -> Result<(RadialProfile, HarmonicTrace)> {
    let grid = &f.grid;
    let outer = grid.eval(&f.values, grid.r_hi);
    let trace = match grid.domain {
        Domain::Disk | Domain::Hole => {
            if f.n == 0 {
                HarmonicTrace { n: 0, a: outer, b: 0.0, r_lo: grid.r_lo, r_hi: grid.r_hi }
            } else {
                HarmonicTrace { n: f.n, a: outer, b: 0.0, r_lo: grid.r_lo, r_hi: grid.r_hi }
            }
        }
        Domain::Annulus => {
            if f.n == 0 {
                HarmonicTrace { n: 0, a: outer, b: 0.0, r_lo: grid.r_lo, r_hi: grid.r_hi }
            } else {
                let inner = grid.eval(&f.values, grid.r_lo);
                // h(hi) = a + b q, h(lo) = a q + b, with q = (lo/hi)^n
                let q = ((f.n as f64) * (grid.r_lo / grid.r_hi).ln()).exp();
                let det = 1.0 - q * q;
                if det.abs() < 1e-14 {
                    return Err(Error::DegenerateTraceSystem(format!(
                        "inner and outer radii coincide for mode {}",
                        f.n
                    )));
                }
                let a = (outer - q * inner) / det;
                let b = (inner - q * outer) / det;
                HarmonicTrace { n: f.n, a, b, r_lo: grid.r_lo, r_hi: grid.r_hi }
            }
        }
    };
    let values: Vec<f64> =
        grid.r.iter().zip(&f.values).map(|(&r, &v)| v - trace.eval(r)).collect();
    let mut q_part = RadialProfile::new(f.n, f.parity, grid.clone(), values);
    if let Some(d) = &f.deriv {
        let dv: Vec<f64> =
            grid.r.iter().zip(d).map(|(&r, &dv)| dv - trace.eval_deriv(r)).collect();
        q_part = q_part.with_deriv(dv);
    }
    Ok((q_part, trace))
}

/// Galerkin Biot-Savart solve: psi in the basis span with
/// (Delta psi, Delta theta) = (omega, Delta theta) for every basis theta.
/// The input is pre-projected onto V0 of the domain.
pub fn biot_savart(basis: &ModeBasis, gram: &GramPair, omega: &RadialProfile) -> Result<RadialProfile> {
    assert_eq!(omega.n, basis.n, "mode mismatch");
    let w = project_v0(omega);
    let ang = crate::profile::angular_factor(basis.n);
    // pair omega against the mode Laplacians on the assembly rule so the
    // right-hand side sees the same boundary-layer weight as the Gram
    let (r_nodes, mass) = crate::basis::assembly_rule(basis);
    let w_at: Vec<f64> = r_nodes.iter().map(|&r| w.grid.eval(&w.values, r)).collect();
    let n2 = (basis.n as f64) * (basis.n as f64);
    let rhs = DVector::from_iterator(
        basis.n_r,
        (0..basis.n_r).map(|j| {
            let mut s = 0.0;
            for (q, &r) in r_nodes.iter().enumerate() {
                let e = basis.eval(j, r);
                let lap = e[2] + e[1] / r - n2 * e[0] / (r * r);
                s += mass[q] * w_at[q] * lap;
            }
            ang * s
        }),
    );
    let coef = spd_solve(&gram.a, &rhs)
        .map_err(|_| Error::SingularSystem("Biot-Savart stiffness solve failed".into()))?;
    Ok(basis_combination(basis, coef.as_slice(), omega.parity))
}

/// Profile (with exact derivative samples) of a coefficient combination.
pub fn basis_combination(
    basis: &ModeBasis,
    coef: &[f64],
    parity: crate::profile::Parity,
) -> RadialProfile {
    let q = basis.grid.len();
    let mut values = vec![0.0; q];
    let mut deriv = vec![0.0; q];
    for (j, &c) in coef.iter().enumerate() {
        if c != 0.0 {
            for i in 0..q {
                values[i] += c * basis.val[j][i];
                deriv[i] += c * basis.d1[j][i];
            }
        }
    }
    RadialProfile::new(basis.n, parity, basis.grid.clone(), values).with_deriv(deriv)
}

/// Mode Laplacian samples of a coefficient combination.
pub fn combination_laplacian(basis: &ModeBasis, coef: &[f64]) -> Vec<f64> {
    let q = basis.grid.len();
    let n2 = (basis.n as f64) * (basis.n as f64);
    let mut lap = vec![0.0; q];
    for (j, &c) in coef.iter().enumerate() {
        if c != 0.0 {
            for i in 0..q {
                let r = basis.grid.r[i];
                lap[i] +=
                    c * (basis.d2[j][i] + basis.d1[j][i] / r - n2 * basis.val[j][i] / (r * r));
            }
        }
    }
    lap
}
