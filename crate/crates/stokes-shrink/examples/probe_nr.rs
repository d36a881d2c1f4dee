use stokes_shrink::eigen::{compute_spectrum, eigenspace_gap, s0_cross_gram};
use stokes_shrink::geometry::build_geometry_relaxed;
use stokes_shrink::profile::Domain;

fn main() {
    let cfg = build_geometry_relaxed(1.0, 0.5, 1e-6).unwrap();
    let spec_g = compute_spectrum(&cfg, Domain::Disk, 8, 48, 8).unwrap();
    for n_r in [48usize, 64, 80, 96] {
        let spec_f = compute_spectrum(&cfg, Domain::Annulus, 8, n_r, 8).unwrap();
        let cross = s0_cross_gram(&spec_g, &spec_f);
        print!("n_r={n_r:3}");
        for k in [1usize, 2, 4, 6, 7] {
            let gap = spec_f.pairs[k-1].lambda - spec_g.pairs[k-1].lambda;
            let eg = eigenspace_gap(k, &spec_g, &spec_f, &cross).unwrap();
            print!("  k{k}: g={gap:11.4e} e={eg:9.3e}");
        }
        println!();
    }
}
