use stokes_shrink::basis::{assemble_gram, build_mode_basis};
use stokes_shrink::geometry::build_geometry_relaxed;
use stokes_shrink::linalg::sym_eigen;
use stokes_shrink::profile::Domain;
use nalgebra::DMatrix;

fn main() {
    let cfg = build_geometry_relaxed(1.0, 0.5, 1e-6).unwrap();
    for n in [0u32, 2] {
        for n_r in [48usize, 64] {
            let b = build_mode_basis(&cfg, Domain::Annulus, n, n_r).unwrap();
            let g = assemble_gram(&b).unwrap();
            let d: Vec<f64> = (0..n_r).map(|i| 1.0 / g.a[(i, i)].sqrt()).collect();
            let a_s = DMatrix::from_fn(n_r, n_r, |i, j| d[i] * g.a[(i, j)] * d[j]);
            let (ev, _) = sym_eigen(&a_s);
            let db: Vec<f64> = (0..n_r).map(|i| 1.0 / g.b[(i, i)].sqrt()).collect();
            let b_s = DMatrix::from_fn(n_r, n_r, |i, j| db[i] * g.b[(i, j)] * db[j]);
            let (evb, _) = sym_eigen(&b_s);
            println!(
                "n={n} n_r={n_r}: kappa(A_eq)={:.3e}  kappa(B_eq)={:.3e}",
                ev[n_r - 1] / ev[0].max(1e-300),
                evb[n_r - 1] / evb[0].max(1e-300)
            );
        }
    }
}
