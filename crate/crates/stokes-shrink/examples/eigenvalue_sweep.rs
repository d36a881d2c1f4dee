//! Shrinking-hole sweep: eigenvalue gaps and eigenspace projection gaps of
//! the Stokes operator between the punctured annulus and the full disk.
//!
//! Run with `cargo run --release --example eigenvalue_sweep`.

use stokes_shrink::eigen::convergence_sweep;

fn main() -> stokes_shrink::Result<()> {
    let eps_list = [1e-2, 1e-3, 1e-4, 1e-6];
    let k_max = 8;
    println!("# eps, k, lambda_eps, lambda_G, gap, eigenspace_gap");
    let rows = convergence_sweep(1.0, 0.5, &eps_list, k_max, 48, 8)?;
    for r in &rows {
        println!(
            "{:9.1e}  k={}  lam_eps={:16.12}  lam_G={:16.12}  gap={:12.5e}  egap={:12.5e}",
            r.eps, r.k, r.lambda_eps, r.lambda_g, r.gap, r.eigenspace_gap
        );
    }
    Ok(())
}
