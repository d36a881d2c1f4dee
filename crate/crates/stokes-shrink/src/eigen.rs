//! Stokes spectra on the disk G and the annulus F_eps: per-mode eigensolves
//! merged into one ordered spectrum, shrinking-hole convergence sweeps, and
//! eigenspace projection gaps.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::basis::{assemble_gram, build_mode_basis, ModeBasis};
use crate::error::{Error, Result};
use crate::geometry::GeometryConfig;
use crate::linalg::projector_difference_norm;
use crate::profile::{angular_factor, Domain, Parity, RadialProfile};
use crate::spectral::{basis_combination, combination_laplacian, solve_gep};

/// Relative tolerance used to cluster eigenvalues into multiplicity groups.
pub const GROUP_TOL: f64 = 1e-6;

/// One eigenpair of the clamped stream-function problem.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: f64,
    pub n: u32,
    pub parity: Parity,
    pub coeffs: DVector<f64>,
    pub residual: f64,
}

/// Merged ascending spectrum with multiplicity bookkeeping.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub domain: Domain,
    pub cfg: GeometryConfig,
    pub n_r: usize,
    pub n_max: u32,
    pub pairs: Vec<EigenPair>,
    /// multiplicity groups I_k: indices into `pairs`, ascending
    pub groups: Vec<Vec<usize>>,
    /// group id of each pair
    pub group_of: Vec<usize>,
    /// first eigenvalue of the smallest omitted mode (a posteriori guard)
    pub first_omitted_lambda: f64,
    bases: BTreeMap<u32, Arc<ModeBasis>>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn basis(&self, n: u32) -> &Arc<ModeBasis> {
        &self.bases[&n]
    }

    /// Stream-function profile of eigenpair k (exact derivative samples).
    pub fn eigenfunction(&self, k: usize) -> RadialProfile {
        let p = &self.pairs[k];
        basis_combination(self.basis(p.n), p.coeffs.as_slice(), p.parity)
    }

    /// Vorticity profile (mode Laplacian) of eigenpair k on the mode grid.
    pub fn vorticity(&self, k: usize) -> Vec<f64> {
        let p = &self.pairs[k];
        combination_laplacian(self.basis(p.n), p.coeffs.as_slice())
    }

    /// Value/derivatives of eigenfunction k at radius r (inside its domain).
    pub fn eval_eigenfunction(&self, k: usize, r: f64) -> [f64; 4] {
        let p = &self.pairs[k];
        let basis = self.basis(p.n);
        let mut out = [0.0; 4];
        for (j, &c) in p.coeffs.iter().enumerate() {
            if c != 0.0 {
                let e = basis.eval(j, r);
                for d in 0..4 {
                    out[d] += c * e[d];
                }
            }
        }
        out
    }
}

fn parity_rank(p: Parity) -> u8 {
    match p {
        Parity::Radial => 0,
        Parity::Cos => 1,
        Parity::Sin => 2,
    }
}

/// Compute the merged spectrum of the first k_max eigenvalues.
///
/// Modes 0..=n_max are solved; the first eigenvalue of mode n_max+1 guards
/// the truncation: only eigenvalues strictly below it are kept, and an error
/// is raised if fewer than k_max survive.
pub fn compute_spectrum(
    cfg: &GeometryConfig,
    domain: Domain,
    k_max: usize,
    n_r: usize,
    n_max: u32,
) -> Result<Spectrum> {
    let mut bases = BTreeMap::new();
    let mut raw: Vec<EigenPair> = Vec::new();
    let per_mode = k_max.min(n_r);
    for n in 0..=n_max {
        let basis = Arc::new(build_mode_basis(cfg, domain, n, n_r)?);
        let gram = assemble_gram(&basis)?;
        let a_scale = gram.a.norm();
        let pairs = solve_gep(&gram, per_mode)?;
        for (lambda, x) in pairs {
            let residual = (&gram.a * &x - &gram.b * &x * lambda).norm() / (a_scale * x.norm());
            if n == 0 {
                raw.push(EigenPair { lambda, n, parity: Parity::Radial, coeffs: x, residual });
            } else {
                raw.push(EigenPair {
                    lambda,
                    n,
                    parity: Parity::Cos,
                    coeffs: x.clone(),
                    residual,
                });
                raw.push(EigenPair { lambda, n, parity: Parity::Sin, coeffs: x, residual });
            }
        }
        bases.insert(n, basis);
    }
    // guard mode
    let guard_basis = build_mode_basis(cfg, domain, n_max + 1, n_r)?;
    let guard = solve_gep(&assemble_gram(&guard_basis)?, 1)?;
    let first_omitted_lambda = guard[0].0;

    raw.sort_by(|a, b| {
        (a.lambda, a.n, parity_rank(a.parity))
            .partial_cmp(&(b.lambda, b.n, parity_rank(b.parity)))
            .unwrap()
    });
    let pairs: Vec<EigenPair> =
        raw.into_iter().filter(|p| p.lambda < first_omitted_lambda).collect();
    if pairs.len() < k_max {
        return Err(Error::ModeTruncationInsufficient(format!(
            "only {} eigenvalues verified below mode-{} head {:.6e}; raise n_max",
            pairs.len(),
            n_max + 1,
            first_omitted_lambda
        )));
    }

    // multiplicity groups
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of = vec![0usize; pairs.len()];
    for (i, p) in pairs.iter().enumerate() {
        let new_group = match groups.last() {
            None => true,
            Some(g) => {
                let head = pairs[g[0]].lambda;
                (p.lambda - head).abs() > GROUP_TOL * head.abs()
            }
        };
        if new_group {
            groups.push(vec![i]);
        } else {
            groups.last_mut().unwrap().push(i);
        }
        group_of[i] = groups.len() - 1;
    }

    Ok(Spectrum {
        domain,
        cfg: *cfg,
        n_r,
        n_max,
        pairs,
        groups,
        group_of,
        first_omitted_lambda,
        bases,
    })
}

/// S0(G) inner products between eigenfunctions of the disk spectrum and the
/// annulus spectrum extended into the hole (constant trace for mode 0, zero
/// for n >= 1; either way the extension has zero gradient in the hole, so
/// the pairing is an integral over F only).
pub fn s0_cross_gram(spec_g: &Spectrum, spec_f: &Spectrum) -> DMatrix<f64> {
    cross_gram(spec_g, spec_f, false)
}

/// S1(G) inner products (Laplacian pairing) with the same extension.
pub fn s1_cross_gram(spec_g: &Spectrum, spec_f: &Spectrum) -> DMatrix<f64> {
    cross_gram(spec_g, spec_f, true)
}

fn cross_gram(spec_g: &Spectrum, spec_f: &Spectrum, s1: bool) -> DMatrix<f64> {
    assert_eq!(spec_g.domain, Domain::Disk);
    assert_eq!(spec_f.domain, Domain::Annulus);
    let mut m = DMatrix::zeros(spec_g.len(), spec_f.len());
    // disk eigenfunction samples on each annulus mode grid, reused per column
    let mut cache: BTreeMap<(usize, u32), (Vec<f64>, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (j, pf) in spec_f.pairs.iter().enumerate() {
        let bf = spec_f.basis(pf.n);
        let grid = bf.grid.clone();
        let fj = basis_combination(bf, pf.coeffs.as_slice(), pf.parity);
        let fj_lap = combination_laplacian(bf, pf.coeffs.as_slice());
        for (i, pg) in spec_g.pairs.iter().enumerate() {
            if pg.n != pf.n || pg.parity != pf.parity {
                continue;
            }
            let key = (i, pf.n);
            let (gi_val, gi_d1, gi_lap) = cache.entry(key).or_insert_with(|| {
                let mut v = vec![0.0; grid.len()];
                let mut d = vec![0.0; grid.len()];
                let mut l = vec![0.0; grid.len()];
                let n2 = (pg.n as f64) * (pg.n as f64);
                for (q, &r) in grid.r.iter().enumerate() {
                    let e = spec_g.eval_eigenfunction(i, r);
                    v[q] = e[0];
                    d[q] = e[1];
                    l[q] = e[2] + e[1] / r - n2 * e[0] / (r * r);
                }
                (v, d, l)
            });
            let ang = angular_factor(pf.n);
            m[(i, j)] = if s1 {
                ang * grid.inner(gi_lap, &fj_lap)
            } else {
                ang * grid.grad_inner(pf.n, gi_val, gi_d1, &fj.values, fj.deriv.as_ref().unwrap())
            };
        }
    }
    m
}

/// Gap between the k-th disk eigenspace and the matching annulus eigenspace
/// sum, measured as the S0(G) operator norm of the projector difference.
pub fn eigenspace_gap(
    k: usize,
    spec_g: &Spectrum,
    spec_f: &Spectrum,
    cross: &DMatrix<f64>,
) -> Result<f64> {
    if k == 0 || k > spec_g.len() {
        return Err(Error::GroupMismatch(format!("eigenvalue index k={k} out of range")));
    }
    let gid = spec_g.group_of[k - 1];
    let idx = &spec_g.groups[gid];
    let m = idx.len();
    if idx.iter().any(|&j| j >= spec_f.len()) {
        return Err(Error::GroupMismatch(format!(
            "annulus spectrum too short for group of k={k} (needs index {})",
            idx.iter().max().unwrap()
        )));
    }
    // joint Gram of [psi^G_j, psi^F_j : j in I_k]
    let mut gram = DMatrix::identity(2 * m, 2 * m);
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            gram[(a, m + b)] = cross[(i, j)];
            gram[(m + b, a)] = cross[(i, j)];
        }
    }
    Ok(projector_difference_norm(&gram, m))
}

/// Row of a shrinking-hole sweep table.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub k: usize,
    pub lambda_eps: f64,
    pub lambda_g: f64,
    pub gap: f64,
    pub eigenspace_gap: f64,
}

/// Eigenvalue/eigenspace convergence sweep over descending hole radii.
pub fn convergence_sweep(
    r_e: f64,
    r_i: f64,
    eps_list: &[f64],
    k_max: usize,
    n_r: usize,
    n_max: u32,
) -> Result<Vec<SweepRow>> {
    let cfg0 = crate::geometry::build_geometry_relaxed(r_e, r_i, eps_list[0])?;
    let spec_g = compute_spectrum(&cfg0, Domain::Disk, k_max, n_r, n_max)?;
    let mut rows = Vec::new();
    for &eps in eps_list {
        let cfg = crate::geometry::build_geometry_relaxed(r_e, r_i, eps)?;
        let spec_f = compute_spectrum(&cfg, Domain::Annulus, k_max, n_r, n_max)?;
        let cross = s0_cross_gram(&spec_g, &spec_f);
        for k in 1..=k_max {
            let le = spec_f.pairs[k - 1].lambda;
            let lg = spec_g.pairs[k - 1].lambda;
            let egap = eigenspace_gap(k, &spec_g, &spec_f, &cross)?;
            rows.push(SweepRow {
                eps,
                k,
                lambda_eps: le,
                lambda_g: lg,
                gap: le - lg,
                eigenspace_gap: egap,
            });
        }
    }
    Ok(rows)
}

/// Growth diagnostics of the eigenvalue sequence.
#[derive(Debug, Clone, serde::Serialize)]
pub struct WeylReport {
    pub slope: f64,
    pub intercept: f64,
    pub max_ratio: f64,
    pub points: usize,
    pub low_confidence: bool,
}

/// Least-squares slope of lambda_m against m and the max of lambda_m / m.
pub fn weyl_check(spec: &Spectrum) -> WeylReport {
    let n = spec.len();
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut max_ratio: f64 = 0.0;
    for (i, p) in spec.pairs.iter().enumerate() {
        let m = (i + 1) as f64;
        sx += m;
        sy += p.lambda;
        sxx += m * m;
        sxy += m * p.lambda;
        max_ratio = max_ratio.max(p.lambda / m);
    }
    let nf = n as f64;
    let denom = nf * sxx - sx * sx;
    let (slope, intercept) = if denom.abs() > 0.0 && n >= 2 {
        ((nf * sxy - sx * sy) / denom, (sy * sxx - sx * sxy) / denom)
    } else {
        (0.0, sy / nf.max(1.0))
    };
    WeylReport { slope, intercept, max_ratio, points: n, low_confidence: n < 20 }
}
