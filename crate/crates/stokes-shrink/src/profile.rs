//! Radial quadrature grids and mode-wise radial profiles.
//!
//! A scalar field on the disk or annulus is handled one Fourier mode at a
//! time as a radial profile sampled on a Gauss grid. Annulus grids are
//! log-mapped (r = e^s) so that hole-scale boundary layers are resolved by
//! polynomials in s.

use std::sync::Arc;

use crate::quad::{gauss_legendre, legendre_table, Quad1d};

/// Domain a radial grid lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Domain {
    /// Full disk (0, R_e).
    Disk,
    /// Fluid annulus (eps, R_e), log-mapped.
    Annulus,
    /// Hole disk (0, eps).
    Hole,
}

/// Angular normalization of a Fourier mode: 2*pi for n = 0, pi otherwise.
pub fn angular_factor(n: u32) -> f64 {
    if n == 0 {
        2.0 * std::f64::consts::PI
    } else {
        std::f64::consts::PI
    }
}

/// Cos/sin branch of a Fourier mode (Radial = the n = 0 branch).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Parity {
    Radial,
    Cos,
    Sin,
}

impl Parity {
    pub fn name(&self) -> &'static str {
        match self {
            Parity::Radial => "radial",
            Parity::Cos => "cos",
            Parity::Sin => "sin",
        }
    }
}

/// Gauss grid on a radial interval with weights for the measure r dr.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    pub domain: Domain,
    pub r_lo: f64,
    pub r_hi: f64,
    /// true when the parameter variable is s = ln r
    pub log_mapped: bool,
    /// Gauss nodes in the parameter variable on [-1, 1]
    pub t: Vec<f64>,
    /// radial positions of the nodes
    pub r: Vec<f64>,
    /// weights m_i with  int f g r dr  ~  sum m_i f_i g_i
    pub mass: Vec<f64>,
    /// barycentric weights in the parameter variable
    bary: Vec<f64>,
}

impl RadialGrid {
    pub fn new(domain: Domain, r_lo: f64, r_hi: f64, order: usize) -> Arc<Self> {
        let log_mapped = matches!(domain, Domain::Annulus);
        let (t, w) = gauss_legendre(order);
        let (r, mass): (Vec<f64>, Vec<f64>) = if log_mapped {
            let s_lo = r_lo.ln();
            let s_hi = r_hi.ln();
            let half = 0.5 * (s_hi - s_lo);
            t.iter()
                .zip(&w)
                .map(|(&ti, &wi)| {
                    let s = s_lo + half * (ti + 1.0);
                    let r = s.exp();
                    (r, wi * half * r * r)
                })
                .unzip()
        } else {
            let half = 0.5 * (r_hi - r_lo);
            t.iter()
                .zip(&w)
                .map(|(&ti, &wi)| {
                    let r = r_lo + half * (ti + 1.0);
                    (r, wi * half * r)
                })
                .unzip()
        };
        let bary = bary_weights(&t, &w);
        Arc::new(RadialGrid { domain, r_lo, r_hi, log_mapped, t, r, mass, bary })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Parameter coordinate of a radius.
    pub fn param_of_r(&self, r: f64) -> f64 {
        if self.log_mapped {
            let s_lo = self.r_lo.ln();
            let s_hi = self.r_hi.ln();
            2.0 * (r.ln() - s_lo) / (s_hi - s_lo) - 1.0
        } else {
            2.0 * (r - self.r_lo) / (self.r_hi - self.r_lo) - 1.0
        }
    }

    /// d(param)/dr at radius r.
    pub fn dparam_dr(&self, r: f64) -> f64 {
        if self.log_mapped {
            2.0 / ((self.r_hi.ln() - self.r_lo.ln()) * r)
        } else {
            2.0 / (self.r_hi - self.r_lo)
        }
    }

    /// int f g r dr over the grid interval.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.mass.iter().zip(f).zip(g).map(|((&m, &a), &b)| m * a * b).sum()
    }

    /// int f r dr.
    pub fn integral(&self, f: &[f64]) -> f64 {
        self.mass.iter().zip(f).map(|(&m, &a)| m * a).sum()
    }

    /// Mode-n gradient pairing int (f' g' + n^2 f g / r^2) r dr.
    pub fn grad_inner(&self, n: u32, f: &[f64], df: &[f64], g: &[f64], dg: &[f64]) -> f64 {
        let n2 = (n as f64) * (n as f64);
        self.mass
            .iter()
            .enumerate()
            .map(|(i, &m)| m * (df[i] * dg[i] + n2 * f[i] * g[i] / (self.r[i] * self.r[i])))
            .sum()
    }

    /// Barycentric evaluation of grid samples at an arbitrary radius in the
    /// closed interval.
    pub fn eval(&self, values: &[f64], r: f64) -> f64 {
        let t = self.param_of_r(r);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..self.t.len() {
            let d = t - self.t[i];
            if d.abs() < 1e-300 {
                return values[i];
            }
            let c = self.bary[i] / d;
            num += c * values[i];
            den += c;
        }
        num / den
    }

    /// Quadrature rule (r nodes, r-dr weights) on a radial subinterval.
    pub fn sub_rule(&self, a: f64, b: f64, order: usize) -> (Vec<f64>, Vec<f64>) {
        if self.log_mapped {
            let q = Quad1d::gauss(order, a.ln(), b.ln());
            let r: Vec<f64> = q.x.iter().map(|&s| s.exp()).collect();
            let w: Vec<f64> = q.w.iter().zip(&r).map(|(&w, &ri)| w * ri * ri).collect();
            (r, w)
        } else {
            let q = Quad1d::gauss(order, a, b);
            let w: Vec<f64> = q.w.iter().zip(&q.x).map(|(&w, &ri)| w * ri).collect();
            (q.x, w)
        }
    }

    /// Legendre coefficients (parameter variable) of grid samples.
    pub fn legendre_coeffs(&self, values: &[f64]) -> Vec<f64> {
        let q = self.t.len();
        // exact for polynomial data of degree < q
        let deg = q - 1;
        let mut coeffs = vec![0.0; deg + 1];
        // Gauss weights in parameter variable
        let (t, w) = gauss_legendre(q);
        for (i, (&ti, &wi)) in t.iter().zip(&w).enumerate() {
            let tab = legendre_table(deg, ti);
            for (k, c) in coeffs.iter_mut().enumerate() {
                *c += wi * values[i] * tab[k][0];
            }
        }
        for (k, c) in coeffs.iter_mut().enumerate() {
            *c *= (2.0 * k as f64 + 1.0) / 2.0;
        }
        coeffs
    }

    /// d/dr of grid samples, via Legendre differentiation in the parameter.
    pub fn spectral_derivative(&self, values: &[f64]) -> Vec<f64> {
        let coeffs = self.legendre_coeffs(values);
        let dc = legendre_derivative_coeffs(&coeffs);
        (0..self.len())
            .map(|i| {
                let tab = legendre_table(dc.len().saturating_sub(1), self.t[i]);
                let ft: f64 = dc.iter().enumerate().map(|(k, &c)| c * tab[k][0]).sum();
                ft * self.dparam_dr(self.r[i])
            })
            .collect()
    }
}

/// Coefficients of the derivative of a Legendre series:
/// b_j = (2j+1) (a_{j+1} + b_{j+2}/(2j+5)), downward.
pub fn legendre_derivative_coeffs(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    if n <= 1 {
        return vec![0.0];
    }
    let mut b = vec![0.0; n - 1];
    for j in (0..n - 1).rev() {
        let add = if j + 2 < n - 1 { b[j + 2] / (2.0 * j as f64 + 5.0) } else { 0.0 };
        b[j] = (2.0 * j as f64 + 1.0) * (a[j + 1] + add);
    }
    b
}

fn bary_weights(t: &[f64], w: &[f64]) -> Vec<f64> {
    // Gauss-Legendre barycentric weights: (-1)^i sqrt((1 - t_i^2) w_i)
    t.iter()
        .zip(w)
        .enumerate()
        .map(|(i, (&ti, &wi))| {
            let v = ((1.0 - ti * ti) * wi).sqrt();
            if i % 2 == 0 {
                v
            } else {
                -v
            }
        })
        .collect()
}

/// One Fourier mode of a scalar field: radial samples plus mode identity.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub n: u32,
    pub parity: Parity,
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
    /// optional exact d/dr samples (spectral differentiation otherwise)
    pub deriv: Option<Vec<f64>>,
}

impl RadialProfile {
    pub fn new(n: u32, parity: Parity, grid: Arc<RadialGrid>, values: Vec<f64>) -> Self {
        assert_eq!(grid.len(), values.len());
        RadialProfile { n, parity, grid, values, deriv: None }
    }

    pub fn with_deriv(mut self, deriv: Vec<f64>) -> Self {
        assert_eq!(deriv.len(), self.values.len());
        self.deriv = Some(deriv);
        self
    }

    pub fn from_fn<F: FnMut(f64) -> f64>(
        n: u32,
        parity: Parity,
        grid: &Arc<RadialGrid>,
        mut f: F,
    ) -> Self {
        let values = grid.r.iter().map(|&r| f(r)).collect();
        RadialProfile::new(n, parity, grid.clone(), values)
    }

    pub fn deriv_values(&self) -> Vec<f64> {
        match &self.deriv {
            Some(d) => d.clone(),
            None => self.grid.spectral_derivative(&self.values),
        }
    }

    /// Squared L2 norm over the 2D domain (angular factor included).
    pub fn l2_norm_sq(&self) -> f64 {
        angular_factor(self.n) * self.grid.inner(&self.values, &self.values)
    }

    /// L2 pairing with another profile of the same mode on the same grid.
    pub fn l2_inner(&self, other: &RadialProfile) -> f64 {
        assert!(Arc::ptr_eq(&self.grid, &other.grid) || self.grid.len() == other.grid.len());
        angular_factor(self.n) * self.grid.inner(&self.values, &other.values)
    }

    /// Squared Dirichlet seminorm over the 2D domain.
    pub fn h1_seminorm_sq(&self) -> f64 {
        let d = self.deriv_values();
        angular_factor(self.n) * self.grid.grad_inner(self.n, &self.values, &d, &self.values, &d)
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.grid.eval(&self.values, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_mass_weights_integrate_r_powers() {
        let g = RadialGrid::new(Domain::Disk, 0.0, 1.0, 24);
        for p in 0..8 {
            let f: Vec<f64> = g.r.iter().map(|&r| r.powi(p)).collect();
            let one = vec![1.0; g.len()];
            let got = g.inner(&f, &one);
            let exact = 1.0 / (p as f64 + 2.0);
            assert!((got - exact).abs() < 1e-14, "p={p}");
        }
    }

    #[test]
    fn annulus_log_grid_integrates_inverse_powers() {
        let eps = 1e-6;
        let g = RadialGrid::new(Domain::Annulus, eps, 1.0, 96);
        // int_eps^1 r^-2 * r dr = ln(1/eps)
        let f: Vec<f64> = g.r.iter().map(|&r| 1.0 / r).collect();
        let got = g.inner(&f, &f);
        let exact = -(eps.ln());
        assert!((got - exact).abs() / exact < 1e-13);
        // int r^-4 r dr = (eps^-2 - 1)/2
        let f2: Vec<f64> = g.r.iter().map(|&r| 1.0 / (r * r)).collect();
        let got2 = g.inner(&f2, &f2);
        let exact2 = (eps.powi(-2) - 1.0) / 2.0;
        assert!((got2 - exact2).abs() / exact2 < 1e-12);
    }

    #[test]
    fn barycentric_eval_reproduces_analytic_values() {
        let g = RadialGrid::new(Domain::Annulus, 1e-4, 1.0, 64);
        let vals: Vec<f64> = g.r.iter().map(|&r| (3.0 * r).sin() + r.ln()).collect();
        for &r in &[2e-4, 1e-3, 0.02, 0.5, 0.93] {
            let got = g.eval(&vals, r);
            let exact = (3.0 * r).sin() + r.ln();
            assert!((got - exact).abs() < 1e-11, "r={r} got={got} exact={exact}");
        }
    }

    #[test]
    fn spectral_derivative_matches_analytic() {
        let g = RadialGrid::new(Domain::Disk, 0.0, 1.0, 48);
        let vals: Vec<f64> = g.r.iter().map(|&r| (2.0 * r).cos() * r).collect();
        let d = g.spectral_derivative(&vals);
        for i in 0..g.len() {
            let r = g.r[i];
            let exact = (2.0 * r).cos() - 2.0 * r * (2.0 * r).sin();
            assert!((d[i] - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn sub_rule_matches_full_integral_split() {
        let g = RadialGrid::new(Domain::Annulus, 1e-3, 1.0, 80);
        let f = |r: f64| 1.0 / r + r;
        let full: f64 = {
            let v: Vec<f64> = g.r.iter().map(|&r| f(r)).collect();
            g.integral(&v)
        };
        let mut split = 0.0;
        for (a, b) in [(1e-3, 0.05), (0.05, 1.0)] {
            let (rr, ww) = g.sub_rule(a, b, 64);
            split += rr.iter().zip(&ww).map(|(&r, &w)| w * f(r)).sum::<f64>();
        }
        assert!((full - split).abs() < 1e-12 * full.abs());
    }
}
