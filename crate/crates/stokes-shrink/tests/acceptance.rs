//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured values before asserting.

mod common;

use common::{bessel, fd};
use stokes_shrink::eigen::{compute_spectrum, convergence_sweep};
use stokes_shrink::geometry::{build_geometry, build_geometry_relaxed};
use stokes_shrink::harmonic::{
    decompose_vorticity, lemma_audit_rows, pieces_from_disk_field, ModeField,
};
use stokes_shrink::harness::{run, ExperimentConfig};
use stokes_shrink::ns::{
    hole_convergence, initial_mix, solve_ns, trilinear_tensor, CutoffFunction,
    HoleConvergenceSetup,
};
use stokes_shrink::profile::{Domain, Parity, RadialGrid, RadialProfile};
use stokes_shrink::rng::Rng;
use stokes_shrink::semigroup::{semigroup_gap, time_grid};

fn status(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

#[test]
fn criterion_1_disk_spectrum_matches_bessel_oracle() {
    let cfg = build_geometry_relaxed(1.0, 0.5, 1e-4).unwrap();
    let spec = compute_spectrum(&cfg, Domain::Disk, 10, 32, 6).unwrap();
    let oracle = bessel::disk_eigenvalues(10, 6);
    let mut worst = 0.0f64;
    for k in 0..10 {
        let rel = (spec.pairs[k].lambda - oracle[k]).abs() / oracle[k];
        worst = worst.max(rel);
    }
    let ok = worst <= 1e-8;
    println!("criterion 1 {}: disk spectrum vs Bessel roots, max rel err {worst:.3e}", status(ok));
    assert!(ok, "max relative error {worst:.3e} above 1e-8");
}

#[test]
fn criterion_2_annulus_matches_finite_difference_oracle() {
    let mut worst = 0.0f64;
    for eps in [1e-2, 1e-4] {
        let cfg = build_geometry_relaxed(1.0, 0.5, eps).unwrap();
        let spec = compute_spectrum(&cfg, Domain::Annulus, 6, 48, 4).unwrap();
        let oracle = fd::annulus_eigenvalues(eps, 6, 4);
        for k in 0..6 {
            let rel = (spec.pairs[k].lambda - oracle[k]).abs() / oracle[k];
            worst = worst.max(rel);
        }
    }
    let ok = worst <= 1e-6;
    println!(
        "criterion 2 {}: annulus spectra vs FD+Richardson oracle, max rel err {worst:.3e}",
        status(ok)
    );
    assert!(ok, "max relative error {worst:.3e} above 1e-6");
}

fn sweep_rows() -> Vec<stokes_shrink::eigen::SweepRow> {
    convergence_sweep(1.0, 0.5, &[1e-2, 1e-3, 1e-4, 1e-6], 8, 48, 8).unwrap()
}

#[test]
fn criterion_3_eigenvalue_convergence_audit() {
    let rows = sweep_rows();
    let eps_count = 4;
    let k_max = 8;
    let mut monotone = true;
    let mut nonneg = true;
    for k in 1..=k_max {
        let mut prev = f64::INFINITY;
        for e in 0..eps_count {
            let r = &rows[e * k_max + (k - 1)];
            assert_eq!(r.k, k);
            let slack = 1e-7 * r.lambda_g;
            if r.gap < -slack {
                nonneg = false;
            }
            if r.gap > prev + slack {
                monotone = false;
            }
            prev = r.gap;
        }
    }
    let last_k1 = &rows[(eps_count - 1) * k_max];
    let small = last_k1.gap < 1e-2 * last_k1.lambda_g;
    let ok = monotone && nonneg && small;
    println!(
        "criterion 3 {}: gaps >= -1e-7 lambda ({}), non-increasing ({}), k=1 smallest-eps gap {:.3e} < 1e-2 lambda_1 ({})",
        status(ok),
        status(nonneg),
        status(monotone),
        last_k1.gap,
        status(small)
    );
    assert!(ok);
}

#[test]
fn criterion_4_eigenspace_convergence_audit() {
    let rows = sweep_rows();
    let eps_count = 4;
    let k_max = 8;
    let mut monotone = true;
    let mut under_threshold = true;
    let mut worst_final = 0.0f64;
    for k in 1..=4 {
        let mut prev = f64::INFINITY;
        for e in 0..eps_count {
            let r = &rows[e * k_max + (k - 1)];
            // slack at the eigenvector resolution floor: fast modes saturate
            // near 1e-5 and jitter there without breaking the trend
            if r.eigenspace_gap > prev + 1e-4 {
                monotone = false;
            }
            prev = r.eigenspace_gap;
            if e == eps_count - 1 {
                worst_final = worst_final.max(r.eigenspace_gap);
                if r.eigenspace_gap >= 0.05 {
                    under_threshold = false;
                }
            }
        }
    }
    let ok = monotone && under_threshold;
    println!(
        "criterion 4 {}: eigenspace gaps decreasing ({}), smallest-eps max over k<=4 is {:.4} (< 0.05: {})",
        status(ok),
        status(monotone),
        worst_final,
        status(under_threshold)
    );
    // The decreasing part holds with wide margins. The 0.05 threshold at
    // eps = 1e-6 is missed by the mode-1 pair: the gap follows
    // ~0.74/ln(1/eps) (0.218, 0.125, 0.0867, 0.0537 along the sweep), a
    // converged value stable under N_r and quadrature refinement, so the
    // threshold would first be met near eps ~ 4e-7. Asserted as stated.
    assert!(ok, "smallest-eps eigenspace gap {worst_final:.4} (threshold 0.05)");
}

#[test]
fn criterion_5_harmonic_lemma_audits() {
    // Lemmas 3.2-3.6 at the admissible reference geometry
    let cfg = build_geometry(1.0, 0.5, 1e-4).unwrap();
    let rows = lemma_audit_rows(&cfg, 64, 100, &Rng::from_seed(0)).unwrap();
    let violations: Vec<_> = rows.iter().filter(|r| !r.pass).collect();
    let sharp = rows
        .iter()
        .find(|r| r.label.contains("sharpness"))
        .map(|r| r.value)
        .unwrap_or(f64::INFINITY);

    // Theorem 3.7 with the far-field bound needs delta > 4 delta0
    let cfg_far = build_geometry(1.0, 0.5, (-144.0f64).exp()).unwrap();
    assert!(cfg_far.delta > 4.0 * cfg_far.delta0);
    let mut farfield_ok = true;
    let mut pyth_worst = 0.0f64;
    let mut ortho_worst = 0.0f64;
    let base = Rng::from_seed(0);
    for s in 0..100u64 {
        let field = random_v0_field(&cfg_far, &base, s, &[0, 1, 2, 4]);
        let pieces = pieces_from_disk_field(&cfg_far, &field);
        let d = decompose_vorticity(&cfg_far, &pieces).unwrap();
        pyth_worst = pyth_worst.max(d.pythagoras_rel_err);
        ortho_worst = ortho_worst.max(d.ortho_residual);
        let far = d.farfield.expect("far-field audit present");
        if !far.pass {
            farfield_ok = false;
        }
    }
    let ok = violations.is_empty()
        && sharp <= 1e-12
        && farfield_ok
        && pyth_worst <= 1e-9
        && ortho_worst <= 1e-9;
    println!(
        "criterion 5 {}: lemma audits {} violations; mode-1 sharpness {sharp:.2e}; decomposition pythagoras {pyth_worst:.2e}, orthogonality {ortho_worst:.2e}, far-field bound {}",
        status(ok),
        violations.len(),
        status(farfield_ok)
    );
    for v in violations.iter().take(5) {
        println!("  violation: {} {} margin {:.3e}", v.lemma, v.label, v.margin);
    }
    assert!(ok);
}

fn random_v0_field(
    cfg: &stokes_shrink::geometry::GeometryConfig,
    base: &Rng,
    seed: u64,
    modes: &[u32],
) -> ModeField {
    let grid = RadialGrid::new(Domain::Disk, 0.0, cfg.r_e, 96);
    let mut components = Vec::new();
    for (i, &n) in modes.iter().enumerate() {
        let mut rng = base.split("acc-v0", seed * 37 + i as u64);
        let c: Vec<f64> = (0..5).map(|_| rng.next_sym()).collect();
        let raw = RadialProfile::from_fn(n, Parity::Cos, &grid, |r| {
            let mut v = 0.0;
            let mut p = (n as f64 * r.ln()).exp();
            for &ck in &c {
                v += ck * p;
                p *= r;
            }
            v
        });
        components.push(stokes_shrink::spectral::project_v0(&raw));
    }
    ModeField { components }
}

#[test]
fn criterion_6_semigroup_gap_audit() {
    let cfg0 = build_geometry_relaxed(1.0, 0.5, 1e-2).unwrap();
    let spec_g = compute_spectrum(&cfg0, Domain::Disk, 16, 48, 8).unwrap();
    let grid = time_grid(1e-4, 1.0, 64);
    let mut all_ok = true;
    for (name, theta) in [
        ("eig:1", eig_field(&spec_g, 0, 1.0)),
        ("eig:5", eig_field(&spec_g, 4, 1.0)),
        ("random:0", random_span(&spec_g, 0)),
    ] {
        let mut prev = f64::INFINITY;
        let mut final_gap = f64::INFINITY;
        let mut monotone = true;
        for eps in [1e-2, 1e-3, 1e-4] {
            let cfg = build_geometry_relaxed(1.0, 0.5, eps).unwrap();
            let spec_f = compute_spectrum(&cfg, Domain::Annulus, 16, 48, 8).unwrap();
            let gap = semigroup_gap(&spec_g, &spec_f, &theta, &grid).unwrap();
            if gap.sup_gap > prev * (1.0 + 1e-9) {
                monotone = false;
            }
            prev = gap.sup_gap;
            final_gap = gap.sup_gap;
        }
        let theta_norm = theta.h1_seminorm_sq().sqrt();
        let small = final_gap < 1e-2 * theta_norm;
        let ok = monotone && small;
        all_ok &= ok;
        println!(
            "criterion 6 {} (theta={name}): decreasing ({}), smallest-eps weighted gap {final_gap:.3e} vs 1e-2 ||theta|| = {:.3e}",
            status(ok),
            status(monotone),
            1e-2 * theta_norm
        );
    }
    assert!(all_ok);
}

fn eig_field(spec: &stokes_shrink::eigen::Spectrum, k: usize, scale: f64) -> ModeField {
    let f = spec.eigenfunction(k);
    let vals: Vec<f64> = f.values.iter().map(|v| scale * v).collect();
    let ders: Vec<f64> = f.deriv.as_ref().unwrap().iter().map(|v| scale * v).collect();
    ModeField {
        components: vec![RadialProfile::new(f.n, f.parity, f.grid.clone(), vals).with_deriv(ders)],
    }
}

fn random_span(spec: &stokes_shrink::eigen::Spectrum, seed: u64) -> ModeField {
    let mut rng = Rng::from_seed(seed).split("acc-theta", 0);
    let m = spec.len().min(12);
    let mut coeffs: Vec<f64> = (0..m).map(|_| rng.next_normal()).collect();
    let norm: f64 = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    for c in coeffs.iter_mut() {
        *c /= norm;
    }
    let mut components = Vec::new();
    for (k, &c) in coeffs.iter().enumerate() {
        let f = spec.eigenfunction(k);
        let vals: Vec<f64> = f.values.iter().map(|v| c * v).collect();
        let ders: Vec<f64> = f.deriv.as_ref().unwrap().iter().map(|v| c * v).collect();
        components
            .push(RadialProfile::new(f.n, f.parity, f.grid.clone(), vals).with_deriv(ders));
    }
    ModeField { components }
}

#[test]
fn criterion_7_ns_invariants() {
    let cfg = build_geometry_relaxed(1.0, 0.5, 1e-4).unwrap();
    let spec = compute_spectrum(&cfg, Domain::Disk, 24, 48, 8).unwrap();
    let tensor = trilinear_tensor(&spec, 24).unwrap();
    let base = Rng::from_seed(0);
    let mut worst_defect = 0.0f64;
    for s in 0..50u64 {
        let mut rng = base.split("acc-neutral", s);
        let a: Vec<f64> = (0..24).map(|_| rng.next_sym()).collect();
        worst_defect = worst_defect.max(tensor.energy_defect(&a));
    }
    let neutral_ok = worst_defect <= 1e-10;

    let a0 = initial_mix(24, 6, 0);
    let traj = solve_ns(&spec, &tensor, a0, 0.05, 1.0, 1e-3, 128, None).unwrap();
    let ok = neutral_ok && traj.decay_ok && traj.dissipation_ok;
    println!(
        "criterion 7 {}: trilinear neutrality {worst_defect:.3e} (<=1e-10: {}), decay audit {}, dissipation {:.6} <= {:.6} ({})",
        status(ok),
        status(neutral_ok),
        status(traj.decay_ok),
        traj.dissipation_integral,
        traj.dissipation_bound * (1.0 + 1e-6),
        status(traj.dissipation_ok)
    );
    assert!(ok);
}

#[test]
fn criterion_8_ns_hole_convergence() {
    let setup = HoleConvergenceSetup {
        r_e: 1.0,
        r_i: 0.5,
        nu: 0.05,
        t_final: 1.0,
        n_coeff: 24,
        n_r: 48,
        n_max: 8,
        dt0: 1e-3,
        out_points: 128,
    };
    let a0 = initial_mix(24, 6, 0);
    let chi = CutoffFunction::default_for(1.0);
    let rows = hole_convergence(&setup, a0, &[1e-2, 1e-3, 1e-4], &chi).unwrap();
    let d2_decreasing = rows.windows(2).all(|w| w[1].d_2 < w[0].d_2 * (1.0 + 1e-9));
    let sup_max = rows.iter().map(|r| r.sup_chi_l2).fold(0.0f64, f64::max);
    let sup_min = rows.iter().map(|r| r.sup_chi_l2).fold(f64::INFINITY, f64::min);
    let variation = (sup_max - sup_min) / sup_max;
    let uniform = variation < 0.05;
    let ok = d2_decreasing && uniform;
    println!(
        "criterion 8 {}: D_2 = [{}] decreasing ({}), sup_t ||chi omega|| varies {:.2}% across the sweep (< 5%: {})",
        status(ok),
        rows.iter().map(|r| format!("{:.3e}", r.d_2)).collect::<Vec<_>>().join(", "),
        status(d2_decreasing),
        100.0 * variation,
        status(uniform)
    );
    assert!(ok);
}

#[test]
fn criterion_9_audit_all_determinism() {
    let base = std::env::temp_dir().join(format!("stokes-acc9-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&base);
    let toml = r#"
[geometry]
R_e = 1.0
R_i = 0.5
eps = 1e-4

[solver]
n_r = 32
n_max = 5
k_max = 6

[sweep]
eps_list = [1e-2, 1e-3, 1e-4]
k_max = 4

[ns]
N = 10
T = 0.25
out_points = 32
"#;
    let mut payload_sets = Vec::new();
    for run_idx in 0..2 {
        let mut cfg = ExperimentConfig::from_toml(toml).unwrap();
        cfg.output.directory = base.join(format!("run{run_idx}")).display().to_string();
        let record = run(&cfg, "audit-all").unwrap();
        let mut payloads = std::collections::BTreeMap::new();
        for name in record.checksums.keys() {
            let path = std::path::Path::new(&cfg.output.directory).join(name);
            payloads.insert(name.clone(), std::fs::read(path).unwrap());
        }
        payload_sets.push((record, payloads));
    }
    let ids_match = payload_sets[0].0.id == payload_sets[1].0.id;
    let bytes_match = payload_sets[0].1 == payload_sets[1].1;
    let zero_failures = payload_sets[0].0.failures == 0;
    let ok = ids_match && bytes_match && zero_failures;
    println!(
        "criterion 9 {}: audit-all ids match ({}), payloads byte-identical ({}), zero failures ({}; {} passes)",
        status(ok),
        status(ids_match),
        status(bytes_match),
        status(zero_failures),
        payload_sets[0].0.passes
    );
    let _ = std::fs::remove_dir_all(&base);
    assert!(ok);
}
