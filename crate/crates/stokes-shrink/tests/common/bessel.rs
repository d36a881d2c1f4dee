//! Bessel functions of the first kind and their positive roots, by power
//! series plus bracketed Newton iteration. The clamped disk eigenvalues are
//! squares of roots of J_{n+1}, which makes this an independent oracle for
//! the whole spectral chain.

/// J_n(x) by the alternating power series (adequate for x <= ~15, which
/// covers every eigenvalue compared at desk scale).
pub fn bessel_j(n: u32, x: f64) -> f64 {
    debug_assert!(x.abs() <= 16.0, "series oracle not intended beyond x ~ 16");
    let half = 0.5 * x;
    // (x/2)^n / n!
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let mut sum = term;
    let x2 = half * half;
    for m in 1..80 {
        term *= -x2 / (m as f64 * (m as f64 + n as f64));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-30) {
            break;
        }
    }
    sum
}

/// d/dx J_n(x).
pub fn bessel_j_deriv(n: u32, x: f64) -> f64 {
    if n == 0 {
        -bessel_j(1, x)
    } else {
        0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x))
    }
}

/// Positive roots of J_n below x_cap, ascending.
pub fn bessel_roots_below(n: u32, x_cap: f64) -> Vec<f64> {
    assert!(x_cap <= 15.5, "series oracle capped at x ~ 15.5");
    let mut roots = Vec::new();
    let mut x = (n as f64).max(1.0) * 0.5;
    let mut prev = bessel_j(n, x);
    let step = 0.05;
    while x < x_cap {
        let x_next = x + step;
        let cur = bessel_j(n, x_next);
        if prev == 0.0 {
            roots.push(x);
        } else if prev.signum() != cur.signum() {
            roots.push(refine_root(n, x, x_next));
        }
        x = x_next;
        prev = cur;
    }
    roots
}

fn refine_root(n: u32, mut lo: f64, mut hi: f64) -> f64 {
    // bisect to a tight bracket, then polish with Newton
    let mut flo = bessel_j(n, lo);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let fm = bessel_j(n, mid);
        if flo.signum() == fm.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..6 {
        let f = bessel_j(n, x);
        let d = bessel_j_deriv(n, x);
        let dx = f / d;
        x -= dx;
        if dx.abs() < 1e-15 * x {
            break;
        }
    }
    x
}

/// First `count` clamped-disk eigenvalues on the unit disk with cos/sin
/// duplication: per angular mode n the eigenvalues are the squares of the
/// roots of J_{n+1}, each appearing twice for n >= 1.
pub fn disk_eigenvalues(count: usize, n_max: u32) -> Vec<f64> {
    // roots below 15 cover eigenvalues up to 225, far past desk scale
    let mut all: Vec<f64> = Vec::new();
    for n in 0..=n_max {
        for root in bessel_roots_below(n + 1, 15.0) {
            let lambda = root * root;
            all.push(lambda);
            if n >= 1 {
                all.push(lambda);
            }
        }
    }
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert!(all.len() >= count, "raise n_max or the root cap");
    all.truncate(count);
    all
}
