//! Galerkin Navier-Stokes integrator in the Stokes eigenbasis.
//!
//! The stream function is expanded over the S0-orthonormal eigenfunctions,
//! where the viscous part of the flow is diagonal and exactly integrable;
//! the quadratic term is a dense trilinear tensor assembled once per
//! spectrum from radial quadrature and exact angular selection rules.

use crate::eigen::{s0_cross_gram, s1_cross_gram, Spectrum};
use crate::error::{Error, Result};
use crate::profile::{angular_factor, Domain, Parity};
use crate::quad::Quad1d;
use crate::rng::Rng;

/// Dense trilinear coupling tensor N_{kij} = (D^2 psi_k grad-perp psi_i,
/// grad psi_j) over the first `n` eigenpairs.
#[derive(Debug, Clone)]
pub struct TrilinearTensor {
    pub n: usize,
    entries: Vec<f64>,
}

impl TrilinearTensor {
    pub fn zero(n: usize) -> Self {
        TrilinearTensor { n, entries: vec![0.0; n * n * n] }
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.entries[(k * self.n + i) * self.n + j]
    }

    /// Quadratic form F_k(a) = sum_{ij} N_{kij} a_i a_j.
    pub fn apply(&self, a: &[f64], out: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            let mut s = 0.0;
            let base = k * n * n;
            for (i, &ai) in a.iter().enumerate() {
                if ai == 0.0 {
                    continue;
                }
                let row = base + i * n;
                let mut t = 0.0;
                for (j, &aj) in a.iter().enumerate() {
                    t += self.entries[row + j] * aj;
                }
                s += ai * t;
            }
            out[k] = s;
        }
    }

    /// Energy defect of the tensor on a coefficient vector: the signed sum
    /// sum a_k a_i a_j N_{kij} relative to the sum of magnitudes.
    pub fn energy_defect(&self, a: &[f64]) -> f64 {
        let n = self.n;
        let mut signed = 0.0;
        let mut abs = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let term = a[k] * a[i] * a[j] * self.get(k, i, j);
                    signed += term;
                    abs += term.abs();
                }
            }
        }
        signed.abs() / abs.max(1e-300)
    }
}

/// Angular factor of an eigenfunction: cos(m t), sin(m t) or 1.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Trig {
    sin: bool,
    m: i64,
}

fn trig_of(parity: Parity, n: u32) -> Trig {
    match parity {
        Parity::Radial => Trig { sin: false, m: 0 },
        Parity::Cos => Trig { sin: false, m: n as i64 },
        Parity::Sin => Trig { sin: true, m: n as i64 },
    }
}

/// d/dt of cos(mt) is -m sin(mt); of sin(mt) is m cos(mt).
fn trig_deriv(t: Trig) -> (f64, Trig) {
    if t.sin {
        (t.m as f64, Trig { sin: false, m: t.m })
    } else {
        (-(t.m as f64), Trig { sin: true, m: t.m })
    }
}

fn normalize(c: f64, t: Trig) -> (f64, Trig) {
    if t.m < 0 {
        if t.sin {
            (-c, Trig { sin: true, m: -t.m })
        } else {
            (c, Trig { sin: false, m: -t.m })
        }
    } else {
        (c, t)
    }
}

/// Product-to-sum: t1 * t2 as two (coef, trig) terms.
fn trig_product(t1: Trig, t2: Trig) -> [(f64, Trig); 2] {
    let (p, q) = (t1.m, t2.m);
    let (a, b) = match (t1.sin, t2.sin) {
        // cos cos = 1/2 cos(p-q) + 1/2 cos(p+q)
        (false, false) => {
            ((0.5, Trig { sin: false, m: p - q }), (0.5, Trig { sin: false, m: p + q }))
        }
        // sin sin = 1/2 cos(p-q) - 1/2 cos(p+q)
        (true, true) => {
            ((0.5, Trig { sin: false, m: p - q }), (-0.5, Trig { sin: false, m: p + q }))
        }
        // sin cos = 1/2 sin(p-q) + 1/2 sin(p+q)
        (true, false) => {
            ((0.5, Trig { sin: true, m: p - q }), (0.5, Trig { sin: true, m: p + q }))
        }
        // cos sin = -1/2 sin(p-q) + 1/2 sin(p+q)
        (false, true) => {
            ((-0.5, Trig { sin: true, m: p - q }), (0.5, Trig { sin: true, m: p + q }))
        }
    };
    [normalize(a.0, a.1), normalize(b.0, b.1)]
}

/// Exact integral over [0, 2 pi] of a product of three trig factors.
fn trig_triple_integral(t1: Trig, t2: Trig, t3: Trig) -> f64 {
    let mut total = 0.0;
    for &(c12, t12) in trig_product(t1, t2).iter() {
        for &(c, t) in trig_product(t12, t3).iter() {
            if !t.sin && t.m == 0 {
                total += c12 * c * 2.0 * std::f64::consts::PI;
            }
        }
    }
    total
}

/// Radial samples of the selected eigenfunctions on a shared rule.
struct RadialTable {
    f: Vec<Vec<f64>>,
    d1: Vec<Vec<f64>>,
    d2: Vec<Vec<f64>>,
    r: Vec<f64>,
    w: Vec<f64>,
}

fn tensor_rule(spec: &Spectrum, extra: usize) -> (Vec<f64>, Vec<f64>) {
    // each trilinear term keeps exactly one net 1/r, which cancels the r of
    // the 2D measure: the radial weights here are plain dr
    let basis = spec.basis(0);
    let (lo, hi) = (basis.grid.r_lo, basis.grid.r_hi);
    match spec.domain {
        Domain::Disk | Domain::Hole => {
            let q = Quad1d::gauss(2 * spec.n_r + 32 + extra, lo, hi);
            (q.x, q.w)
        }
        Domain::Annulus => {
            let s_lo = lo.ln();
            let s_hi = hi.ln();
            let panels = ((s_hi - s_lo) / 2.0).ceil().max(1.0) as usize;
            let mut breaks = Vec::with_capacity(panels + 1);
            for i in 0..=panels {
                breaks.push(s_lo + (s_hi - s_lo) * i as f64 / panels as f64);
            }
            let q = Quad1d::composite(spec.n_r + 48 + extra, &breaks);
            let r: Vec<f64> = q.x.iter().map(|&s| s.exp()).collect();
            let w: Vec<f64> = q.w.iter().zip(&r).map(|(&w, &ri)| w * ri).collect();
            (r, w)
        }
    }
}

fn radial_table(spec: &Spectrum, n: usize, rule: &(Vec<f64>, Vec<f64>)) -> RadialTable {
    let q = rule.0.len();
    let mut f = vec![vec![0.0; q]; n];
    let mut d1 = vec![vec![0.0; q]; n];
    let mut d2 = vec![vec![0.0; q]; n];
    for k in 0..n {
        for (qq, &r) in rule.0.iter().enumerate() {
            let e = spec.eval_eigenfunction(k, r);
            f[k][qq] = e[0];
            d1[k][qq] = e[1];
            d2[k][qq] = e[2];
        }
    }
    RadialTable { f, d1, d2, r: rule.0.clone(), w: rule.1.clone() }
}

fn tensor_entry(spec: &Spectrum, tab: &RadialTable, k: usize, i: usize, j: usize) -> f64 {
    let (pk, pi, pj) = (&spec.pairs[k], &spec.pairs[i], &spec.pairs[j]);
    let a = trig_of(pk.parity, pk.n);
    let b = trig_of(pi.parity, pi.n);
    let c = trig_of(pj.parity, pj.n);
    let (db_c, db_t) = trig_deriv(b);
    let (da_c, da_t) = trig_deriv(a);
    let (dc_c, dc_t) = trig_deriv(c);
    // angular integrals of the four term templates
    let ang1 = db_c * trig_triple_integral(a, db_t, c);
    let ang2 = da_c * trig_triple_integral(da_t, b, c);
    let ang3 = da_c * db_c * dc_c * trig_triple_integral(da_t, db_t, dc_t);
    let ang4 = dc_c * trig_triple_integral(a, b, dc_t);
    if ang1 == 0.0 && ang2 == 0.0 && ang3 == 0.0 && ang4 == 0.0 {
        return 0.0;
    }
    let a2 = (pk.n as f64) * (pk.n as f64);
    let (fk, fk1, fk2) = (&tab.f[k], &tab.d1[k], &tab.d2[k]);
    let (gi, gi1) = (&tab.f[i], &tab.d1[i]);
    let (hj, hj1) = (&tab.f[j], &tab.d1[j]);
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    let mut s3 = 0.0;
    let mut s4 = 0.0;
    for (q, &r) in tab.r.iter().enumerate() {
        let w = tab.w[q];
        let fpmf = fk1[q] - fk[q] / r;
        if ang1 != 0.0 {
            s1 += w * (-fk2[q] * gi[q] * hj1[q]);
        }
        if ang2 != 0.0 {
            s2 += w * (fpmf * gi1[q] * hj1[q]);
        }
        if ang3 != 0.0 {
            s3 += w * (-(fpmf) * gi[q] * hj[q] / (r * r));
        }
        if ang4 != 0.0 {
            s4 += w * ((fk1[q] - a2 * fk[q] / r) * gi1[q] * hj[q] / r);
        }
    }
    ang1 * s1 + ang2 * s2 + ang3 * s3 + ang4 * s4
}

/// Assemble the trilinear tensor over the first `n` eigenpairs, verifying
/// a deterministic sample of entries against a refined quadrature rule.
pub fn trilinear_tensor(spec: &Spectrum, n: usize) -> Result<TrilinearTensor> {
    assert!(n <= spec.len(), "tensor size exceeds computed spectrum");
    let rule = tensor_rule(spec, 0);
    let tab = radial_table(spec, n, &rule);
    let mut entries = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                entries[(k * n + i) * n + j] = tensor_entry(spec, &tab, k, i, j);
            }
        }
    }
    let fine_rule = tensor_rule(spec, 48);
    let fine_tab = radial_table(spec, n, &fine_rule);
    let scale = entries.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1e-300);
    let mut rng = Rng::from_seed(0x7e);
    for _ in 0..24 {
        let k = (rng.next_u64() % n as u64) as usize;
        let i = (rng.next_u64() % n as u64) as usize;
        let j = (rng.next_u64() % n as u64) as usize;
        let coarse = entries[(k * n + i) * n + j];
        let fine = tensor_entry(spec, &fine_tab, k, i, j);
        if (coarse - fine).abs() > 1e-9 * scale {
            return Err(Error::QuadratureFailure(format!(
                "tensor entry ({k},{i},{j}) moves {:.3e} under refinement",
                (coarse - fine).abs() / scale
            )));
        }
    }
    Ok(TrilinearTensor { n, entries })
}

/// Galerkin state: eigenbasis coefficients of the stream function at time t.
#[derive(Debug, Clone)]
pub struct NsState {
    pub t: f64,
    pub a: Vec<f64>,
}

impl NsState {
    pub fn energy_s0(&self) -> f64 {
        self.a.iter().map(|x| x * x).sum()
    }

    pub fn enstrophy_s1(&self, spec: &Spectrum) -> f64 {
        self.a.iter().zip(&spec.pairs).map(|(x, p)| p.lambda * x * x).sum()
    }
}

/// One Lawson-Heun step: the viscous flow is integrated exactly, the
/// quadratic term with a two-stage predictor-corrector on the transformed
/// variable; the embedded first-order (Lawson-Euler) comparison provides
/// the error estimate.
pub fn step(
    state: &NsState,
    spec: &Spectrum,
    tensor: &TrilinearTensor,
    nu: f64,
    dt: f64,
    tol: f64,
) -> Result<(NsState, f64)> {
    assert!(dt > 0.0);
    let n = tensor.n;
    let decay: Vec<f64> = spec.pairs[..n].iter().map(|p| (-nu * p.lambda * dt).exp()).collect();
    let mut f0 = vec![0.0; n];
    tensor.apply(&state.a, &mut f0);
    // predictor = the embedded Lawson-Euler solution
    let pred: Vec<f64> = (0..n).map(|k| decay[k] * (state.a[k] + dt * f0[k])).collect();
    let mut f1 = vec![0.0; n];
    tensor.apply(&pred, &mut f1);
    let a_new: Vec<f64> = (0..n)
        .map(|k| decay[k] * (state.a[k] + 0.5 * dt * f0[k]) + 0.5 * dt * f1[k])
        .collect();
    let err: f64 =
        a_new.iter().zip(&pred).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    if err > tol {
        return Err(Error::StepRejected(format!(
            "embedded error {err:.3e} above tolerance {tol:.3e} at dt = {dt:.3e}"
        )));
    }
    Ok((NsState { t: state.t + dt, a: a_new }, err))
}

/// Diagnostics recorded at one output time.
#[derive(Debug, Clone, serde::Serialize)]
pub struct NsSample {
    pub t: f64,
    pub energy_s0: f64,
    pub enstrophy_s1: f64,
    /// exp-decay bound minus the actual S0 norm (nonnegative = pass)
    pub decay_margin: f64,
    pub chi_l2: f64,
    pub chi_h1: f64,
}

/// Trajectory on a fixed output grid plus audits.
#[derive(Debug, Clone)]
pub struct NsTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub samples: Vec<NsSample>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// discrete decay audit: ||a(t)|| <= ||a0|| e^{-nu lambda_1 t} (1+tol)
    pub decay_ok: bool,
    /// dissipation audit: int ||psi||_{S1}^2 <= ||a0||^2/(2 nu) (1+tol)
    pub dissipation_ok: bool,
    pub dissipation_integral: f64,
    pub dissipation_bound: f64,
}

/// Audit slack for the energy inequalities.
pub const NS_AUDIT_TOL: f64 = 1e-6;

/// Integrate the Galerkin system on [0, T], landing exactly on the output
/// grid, with adaptive steps controlled by the embedded error estimate.
pub fn solve_ns(
    spec: &Spectrum,
    tensor: &TrilinearTensor,
    a0: Vec<f64>,
    nu: f64,
    t_final: f64,
    dt0: f64,
    out_points: usize,
    chi: Option<&CutoffFunction>,
) -> Result<NsTrajectory> {
    assert!(nu >= 0.0, "viscosity must be nonnegative");
    let n = tensor.n;
    assert_eq!(a0.len(), n);
    let tol = 1e-8;
    let chi_tab = match chi {
        Some(c) => Some(ChiTable::new(spec, c, n)?),
        None => None,
    };
    let out_times: Vec<f64> =
        (0..=out_points).map(|i| t_final * i as f64 / out_points as f64).collect();
    let mut state = NsState { t: 0.0, a: a0.clone() };
    let mut dt = dt0.min(t_final / out_points as f64);
    let mut states = Vec::with_capacity(out_times.len());
    let mut samples = Vec::with_capacity(out_times.len());
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let lambda1 = spec.pairs[0].lambda;
    let e0 = state.energy_s0();
    let mut decay_ok = true;

    let mut record = |st: &NsState,
                      states: &mut Vec<Vec<f64>>,
                      samples: &mut Vec<NsSample>,
                      decay_ok: &mut bool| {
        let energy = st.energy_s0();
        let bound = e0.sqrt() * (-nu * lambda1 * st.t).exp() * (1.0 + NS_AUDIT_TOL);
        let (chi_l2, chi_h1) = match &chi_tab {
            Some(tab) => tab.norms(spec, &st.a),
            None => (0.0, 0.0),
        };
        if energy.sqrt() > bound {
            *decay_ok = false;
        }
        states.push(st.a.clone());
        samples.push(NsSample {
            t: st.t,
            energy_s0: energy,
            enstrophy_s1: st.enstrophy_s1(spec),
            decay_margin: bound - energy.sqrt(),
            chi_l2,
            chi_h1,
        });
    };

    record(&state, &mut states, &mut samples, &mut decay_ok);
    for &t_out in &out_times[1..] {
        while state.t < t_out - 1e-14 {
            let step_dt = dt.min(t_out - state.t);
            match step(&state, spec, tensor, nu, step_dt, tol) {
                Ok((next, err)) => {
                    state = next;
                    accepted += 1;
                    let grow = if err > 0.0 { 0.9 * (tol / err).sqrt() } else { 2.0 };
                    dt = (dt * grow.clamp(0.3, 2.0)).min(t_final);
                }
                Err(_) => {
                    rejected += 1;
                    dt *= 0.5;
                    if dt < 1e-13 {
                        return Err(Error::StepRejected(
                            "step size collapsed below 1e-13".into(),
                        ));
                    }
                }
            }
        }
        record(&state, &mut states, &mut samples, &mut decay_ok);
    }

    let enst: Vec<f64> = samples.iter().map(|s| s.enstrophy_s1).collect();
    let dissipation_integral = simpson(&out_times, &enst);
    let dissipation_bound = e0 / (2.0 * nu.max(1e-300));
    let dissipation_ok =
        nu == 0.0 || dissipation_integral <= dissipation_bound * (1.0 + NS_AUDIT_TOL);
    Ok(NsTrajectory {
        times: out_times,
        states,
        samples,
        accepted_steps: accepted,
        rejected_steps: rejected,
        decay_ok,
        dissipation_ok,
        dissipation_integral,
        dissipation_bound,
    })
}

/// Composite Simpson over a uniform grid (trapezoid on a trailing odd cell).
pub fn simpson(t: &[f64], y: &[f64]) -> f64 {
    assert_eq!(t.len(), y.len());
    let m = t.len();
    if m < 2 {
        return 0.0;
    }
    let h = t[1] - t[0];
    let mut total = 0.0;
    let mut i = 0;
    while i + 2 < m {
        total += h / 3.0 * (y[i] + 4.0 * y[i + 1] + y[i + 2]);
        i += 2;
    }
    if i + 1 < m {
        total += 0.5 * h * (y[i] + y[i + 1]);
    }
    total
}

/// Smooth radial cutoff: quintic smoothstep up on [r_in, r_in + ramp],
/// plateau, down on [r_out - ramp, r_out]; zero outside (r_in, r_out).
#[derive(Debug, Clone, Copy)]
pub struct CutoffFunction {
    pub r_in: f64,
    pub r_out: f64,
    pub ramp: f64,
}

impl CutoffFunction {
    pub fn new(r_in: f64, r_out: f64, ramp: f64) -> Self {
        assert!(r_in > 0.0 && r_out > r_in && ramp > 0.0 && 2.0 * ramp <= r_out - r_in);
        CutoffFunction { r_in, r_out, ramp }
    }

    /// Default bump on (0.3, 0.8) R_e.
    pub fn default_for(r_e: f64) -> Self {
        CutoffFunction::new(0.3 * r_e, 0.8 * r_e, 0.15 * r_e)
    }

    pub fn value(&self, r: f64) -> f64 {
        smoothstep((r - self.r_in) / self.ramp) * smoothstep((self.r_out - r) / self.ramp)
    }

    pub fn deriv(&self, r: f64) -> f64 {
        let up = smoothstep((r - self.r_in) / self.ramp);
        let dn = smoothstep((self.r_out - r) / self.ramp);
        let dup = smoothstep_d((r - self.r_in) / self.ramp) / self.ramp;
        let ddn = -smoothstep_d((self.r_out - r) / self.ramp) / self.ramp;
        dup * dn + up * ddn
    }

    pub fn max_grad(&self) -> f64 {
        // quintic smoothstep slope peaks at 15/8 across the ramp
        1.875 / self.ramp
    }

    /// Quadrature rule resolving the piecewise structure, weights r dr.
    pub fn rule(&self, order: usize) -> (Vec<f64>, Vec<f64>) {
        let breaks =
            [self.r_in, self.r_in + self.ramp, self.r_out - self.ramp, self.r_out];
        let q = Quad1d::composite(order, &breaks);
        let w: Vec<f64> = q.w.iter().zip(&q.x).map(|(&w, &r)| w * r).collect();
        (q.x, w)
    }
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
}

fn smoothstep_d(x: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return 0.0;
    }
    30.0 * x * x * (1.0 - x) * (1.0 - x)
}

/// Cached vorticity samples of the eigenfunctions on the cutoff rule.
struct ChiTable {
    r: Vec<f64>,
    w: Vec<f64>,
    chi: Vec<f64>,
    dchi: Vec<f64>,
    lap: Vec<Vec<f64>>,
    dlap: Vec<Vec<f64>>,
}

impl ChiTable {
    fn new(spec: &Spectrum, chi: &CutoffFunction, n: usize) -> Result<Self> {
        if spec.cfg.eps_hole >= chi.r_in {
            return Err(Error::SupportViolation(format!(
                "hole radius {} reaches the cutoff support starting at {}",
                spec.cfg.eps_hole, chi.r_in
            )));
        }
        let (r, w) = chi.rule(40);
        let chi_v: Vec<f64> = r.iter().map(|&x| chi.value(x)).collect();
        let dchi: Vec<f64> = r.iter().map(|&x| chi.deriv(x)).collect();
        let mut lap = vec![vec![0.0; r.len()]; n];
        let mut dlap = vec![vec![0.0; r.len()]; n];
        for k in 0..n {
            let nf = spec.pairs[k].n as f64;
            let n2 = nf * nf;
            for (q, &rq) in r.iter().enumerate() {
                let e = spec.eval_eigenfunction(k, rq);
                lap[k][q] = e[2] + e[1] / rq - n2 * e[0] / (rq * rq);
                dlap[k][q] = e[3] + e[2] / rq - (1.0 + n2) * e[1] / (rq * rq)
                    + 2.0 * n2 * e[0] / (rq * rq * rq);
            }
        }
        Ok(ChiTable { r, w, chi: chi_v, dchi, lap, dlap })
    }

    /// (||chi omega||^2, ||grad(chi omega)||^2) for coefficients a.
    fn norms(&self, spec: &Spectrum, a: &[f64]) -> (f64, f64) {
        let mut l2 = 0.0;
        let mut h1 = 0.0;
        let mut seen: Vec<(u32, Parity)> = Vec::new();
        for k in 0..a.len() {
            let key = (spec.pairs[k].n, spec.pairs[k].parity);
            if seen.contains(&key) {
                continue;
            }
            seen.push(key);
            let nf = key.0 as f64;
            let ang = angular_factor(key.0);
            for (q, &rq) in self.r.iter().enumerate() {
                let mut om = 0.0;
                let mut dom = 0.0;
                for (j, &aj) in a.iter().enumerate() {
                    if aj != 0.0 && spec.pairs[j].n == key.0 && spec.pairs[j].parity == key.1 {
                        om += aj * self.lap[j][q];
                        dom += aj * self.dlap[j][q];
                    }
                }
                let co = self.chi[q] * om;
                let dco = self.dchi[q] * om + self.chi[q] * dom;
                l2 += ang * self.w[q] * co * co;
                h1 += ang * self.w[q] * (dco * dco + nf * nf * co * co / (rq * rq));
            }
        }
        (l2, h1)
    }
}

/// Localized enstrophy series (t, ||chi omega||_L2, ||grad(chi omega)||^2).
pub fn vorticity_diagnostics(
    spec: &Spectrum,
    traj: &NsTrajectory,
    chi: &CutoffFunction,
) -> Result<Vec<(f64, f64, f64)>> {
    let n = traj.states[0].len();
    let tab = ChiTable::new(spec, chi, n)?;
    Ok(traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, a)| {
            let (l2, h1) = tab.norms(spec, a);
            (t, l2.sqrt(), h1)
        })
        .collect())
}

/// Random initial coefficient mix over the first `modes` eigenpairs.
pub fn initial_mix(n: usize, modes: usize, seed: u64) -> Vec<f64> {
    let mut rng = Rng::from_seed(seed).split("ns-init", 0);
    let mut a = vec![0.0; n];
    for ak in a.iter_mut().take(modes.min(n)) {
        *ak = rng.next_normal();
    }
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in a.iter_mut() {
        *x /= norm;
    }
    a
}

/// Row of the hole-shrinking experiment table.
#[derive(Debug, Clone, serde::Serialize)]
pub struct HoleConvergenceRow {
    pub eps: f64,
    pub d_inf: f64,
    pub d_2: f64,
    pub vort_dist: f64,
    pub sup_chi_l2: f64,
    pub int_chi_h1: f64,
    /// S0 distance of the projected initial datum from psi0
    pub init_defect: f64,
}

/// Parameters of the nonlinear hole-shrinking experiment.
#[derive(Debug, Clone)]
pub struct HoleConvergenceSetup {
    pub r_e: f64,
    pub r_i: f64,
    pub nu: f64,
    pub t_final: f64,
    pub n_coeff: usize,
    pub n_r: usize,
    pub n_max: u32,
    pub dt0: f64,
    pub out_points: usize,
}

/// Solve on the disk and on each punctured annulus from the S1-projected
/// initial data, and measure trajectory distances in S0(G) plus localized
/// vorticity statistics.
pub fn hole_convergence(
    setup: &HoleConvergenceSetup,
    a0_disk: Vec<f64>,
    eps_list: &[f64],
    chi: &CutoffFunction,
) -> Result<Vec<HoleConvergenceRow>> {
    let cfg0 = crate::geometry::build_geometry_relaxed(setup.r_e, setup.r_i, eps_list[0])?;
    let spec_g = crate::eigen::compute_spectrum(
        &cfg0,
        Domain::Disk,
        setup.n_coeff,
        setup.n_r,
        setup.n_max,
    )?;
    let tensor_g = trilinear_tensor(&spec_g, setup.n_coeff)?;
    let traj_g = solve_ns(
        &spec_g,
        &tensor_g,
        a0_disk.clone(),
        setup.nu,
        setup.t_final,
        setup.dt0,
        setup.out_points,
        Some(chi),
    )?;
    let chi_tab_g = ChiTable::new(&spec_g, chi, setup.n_coeff)?;

    let mut rows = Vec::new();
    for &eps in eps_list {
        let cfg = crate::geometry::build_geometry_relaxed(setup.r_e, setup.r_i, eps)?;
        let spec_f = crate::eigen::compute_spectrum(
            &cfg,
            Domain::Annulus,
            setup.n_coeff,
            setup.n_r,
            setup.n_max,
        )?;
        let tensor_f = trilinear_tensor(&spec_f, setup.n_coeff)?;
        let m0 = s0_cross_gram(&spec_g, &spec_f);
        let m1 = s1_cross_gram(&spec_g, &spec_f);
        // S1-orthogonal projection onto S1(F): c_j = (psi0, psi_j^F)_S1 / lambda_j
        let a0_f: Vec<f64> = (0..setup.n_coeff)
            .map(|j| {
                let mut c = 0.0;
                for (i, &ai) in a0_disk.iter().enumerate() {
                    c += ai * m1[(i, j)];
                }
                c / spec_f.pairs[j].lambda
            })
            .collect();
        let traj_f = solve_ns(
            &spec_f,
            &tensor_f,
            a0_f,
            setup.nu,
            setup.t_final,
            setup.dt0,
            setup.out_points,
            Some(chi),
        )?;
        let chi_tab_f = ChiTable::new(&spec_f, chi, setup.n_coeff)?;

        let mut d_inf: f64 = 0.0;
        let mut dist_sq = Vec::with_capacity(traj_g.times.len());
        let mut vort_sq = Vec::with_capacity(traj_g.times.len());
        let mut sup_chi_l2: f64 = 0.0;
        for idx in 0..traj_g.times.len() {
            let ag = &traj_g.states[idx];
            let af = &traj_f.states[idx];
            let mut sq: f64 = ag.iter().map(|x| x * x).sum::<f64>()
                + af.iter().map(|x| x * x).sum::<f64>();
            for (i, &agi) in ag.iter().enumerate() {
                for (j, &afj) in af.iter().enumerate() {
                    sq -= 2.0 * agi * afj * m0[(i, j)];
                }
            }
            let d = sq.max(0.0).sqrt();
            d_inf = d_inf.max(d);
            dist_sq.push(sq.max(0.0));
            let v =
                chi_vorticity_distance_sq(&spec_g, &chi_tab_g, ag, &spec_f, &chi_tab_f, af);
            vort_sq.push(v);
            sup_chi_l2 = sup_chi_l2.max(traj_f.samples[idx].chi_l2.sqrt());
        }
        let chi_h1_series: Vec<f64> = traj_f.samples.iter().map(|s| s.chi_h1).collect();
        rows.push(HoleConvergenceRow {
            eps,
            d_inf,
            d_2: simpson(&traj_g.times, &dist_sq).max(0.0).sqrt(),
            vort_dist: simpson(&traj_g.times, &vort_sq),
            sup_chi_l2,
            int_chi_h1: simpson(&traj_g.times, &chi_h1_series),
            init_defect: dist_sq[0].sqrt(),
        });
    }
    Ok(rows)
}

fn chi_vorticity_distance_sq(
    spec_g: &Spectrum,
    tab_g: &ChiTable,
    ag: &[f64],
    spec_f: &Spectrum,
    tab_f: &ChiTable,
    af: &[f64],
) -> f64 {
    let q = tab_g.r.len();
    let mut keys: Vec<(u32, Parity)> = Vec::new();
    for k in 0..ag.len() {
        let key = (spec_g.pairs[k].n, spec_g.pairs[k].parity);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    for k in 0..af.len() {
        let key = (spec_f.pairs[k].n, spec_f.pairs[k].parity);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut total = 0.0;
    for key in keys {
        let ang = angular_factor(key.0);
        for qq in 0..q {
            let mut diff = 0.0;
            for (k, &a) in ag.iter().enumerate() {
                if a != 0.0 && spec_g.pairs[k].n == key.0 && spec_g.pairs[k].parity == key.1 {
                    diff += a * tab_g.lap[k][qq];
                }
            }
            for (k, &a) in af.iter().enumerate() {
                if a != 0.0 && spec_f.pairs[k].n == key.0 && spec_f.pairs[k].parity == key.1 {
                    diff -= a * tab_f.lap[k][qq];
                }
            }
            let c = tab_g.chi[qq] * diff;
            total += ang * tab_g.w[qq] * c * c;
        }
    }
    total
}

/// ||grad psi||_{L4}^4 over the domain by 2D quadrature (the angular
/// trapezoid rule is exact for the trig-polynomial integrand).
pub fn l4_gradient_norm_4(spec: &Spectrum, a: &[f64]) -> f64 {
    let basis = spec.basis(0);
    let grid = &basis.grid;
    let n_max = spec.pairs[..a.len()].iter().map(|p| p.n).max().unwrap_or(0);
    let m_theta = (4 * n_max as usize + 8).next_power_of_two();
    let mut fr = vec![vec![0.0; grid.len()]; a.len()];
    let mut fv = vec![vec![0.0; grid.len()]; a.len()];
    for (k, &ak) in a.iter().enumerate() {
        if ak == 0.0 {
            continue;
        }
        let f = spec.eigenfunction(k);
        let d = f.deriv.clone().unwrap();
        for q in 0..grid.len() {
            fv[k][q] = f.values[q];
            fr[k][q] = d[q];
        }
    }
    let mut total = 0.0;
    for it in 0..m_theta {
        let theta = 2.0 * std::f64::consts::PI * it as f64 / m_theta as f64;
        for q in 0..grid.len() {
            let mut psi_r = 0.0;
            let mut psi_t_over_r = 0.0;
            for (k, &ak) in a.iter().enumerate() {
                if ak == 0.0 {
                    continue;
                }
                let p = &spec.pairs[k];
                let nf = p.n as f64;
                let (ang, dang) = match p.parity {
                    Parity::Radial => (1.0, 0.0),
                    Parity::Cos => ((nf * theta).cos(), -nf * (nf * theta).sin()),
                    Parity::Sin => ((nf * theta).sin(), nf * (nf * theta).cos()),
                };
                psi_r += ak * fr[k][q] * ang;
                psi_t_over_r += ak * fv[k][q] * dang / grid.r[q];
            }
            let g2 = psi_r * psi_r + psi_t_over_r * psi_t_over_r;
            total += grid.mass[q] * g2 * g2;
        }
    }
    total * 2.0 * std::f64::consts::PI / m_theta as f64
}
