//! Gauss-Legendre quadrature and Legendre polynomial evaluation.

/// Legendre values and first three derivatives of P_0..P_{n_max} at x.
///
/// Returned rows are indexed by degree; columns are (P, P', P'', P''').
pub fn legendre_table(n_max: usize, x: f64) -> Vec<[f64; 4]> {
    let mut out = vec![[0.0; 4]; n_max + 1];
    out[0] = [1.0, 0.0, 0.0, 0.0];
    if n_max == 0 {
        return out;
    }
    out[1] = [x, 1.0, 0.0, 0.0];
    for k in 1..n_max {
        let a = (2 * k + 1) as f64;
        let b = k as f64;
        let c = (k + 1) as f64;
        let p = out[k];
        let q = out[k - 1];
        out[k + 1] = [
            (a * x * p[0] - b * q[0]) / c,
            (a * (p[0] + x * p[1]) - b * q[1]) / c,
            (a * (2.0 * p[1] + x * p[2]) - b * q[2]) / c,
            (a * (3.0 * p[2] + x * p[3]) - b * q[3]) / c,
        ];
    }
    out
}

/// Value and derivative of P_n at x (three-term recurrence).
fn legendre_pd(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut pm, mut p) = (1.0, x);
    let (mut dm, mut d) = (0.0, 1.0);
    for k in 1..n {
        let a = (2 * k + 1) as f64;
        let b = k as f64;
        let c = (k + 1) as f64;
        let pn = (a * x * p - b * pm) / c;
        let dn = (a * (p + x * d) - b * dm) / c;
        pm = p;
        p = pn;
        dm = d;
        d = dn;
    }
    (p, d)
}

/// Gauss-Legendre nodes (ascending) and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Initial guess (Tricomi-type), then Newton.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..64 {
            let (p, d) = legendre_pd(n, z);
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_pd(n, z);
        let wi = 2.0 / ((1.0 - z * z) * d * d);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        let (_, d) = legendre_pd(n, 0.0);
        x[n / 2] = 0.0;
        w[n / 2] = 2.0 / (d * d);
    }
    (x, w)
}

/// Quadrature rule mapped to [a, b].
#[derive(Debug, Clone)]
pub struct Quad1d {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl Quad1d {
    pub fn gauss(n: usize, a: f64, b: f64) -> Self {
        let (x0, w0) = gauss_legendre(n);
        let c = 0.5 * (b - a);
        let m = 0.5 * (a + b);
        Quad1d {
            x: x0.iter().map(|&t| m + c * t).collect(),
            w: w0.iter().map(|&t| c * t).collect(),
        }
    }

    /// Composite Gauss rule over the given breakpoints.
    pub fn composite(n_per: usize, breaks: &[f64]) -> Self {
        let mut x = Vec::new();
        let mut w = Vec::new();
        for seg in breaks.windows(2) {
            let q = Quad1d::gauss(n_per, seg[0], seg[1]);
            x.extend(q.x);
            w.extend(q.w);
        }
        Quad1d { x, w }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.x.iter().zip(&self.w).map(|(&x, &w)| w * f(x)).sum()
    }
}
