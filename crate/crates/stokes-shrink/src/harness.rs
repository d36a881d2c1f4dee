//! Config-driven experiment harness: validated configuration, command
//! dispatch, deterministic CSV/JSON artifacts, and a checksum-verified
//! result cache.
//!
//! Determinism contract: identical configs produce identical experiment ids
//! and byte-identical payloads. All randomness flows from `ns.seed` through
//! counted stream splits; artifacts carry no timestamps, and floats are
//! written with 17 significant digits.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::eigen::{compute_spectrum, convergence_sweep, weyl_check};
use crate::error::{Error, Result};
use crate::geometry::{build_geometry, build_geometry_relaxed, validate_hypothesis};
use crate::harmonic::lemma_audit_rows;
use crate::ns::{
    hole_convergence, initial_mix, solve_ns, trilinear_tensor, CutoffFunction,
    HoleConvergenceSetup,
};
use crate::profile::Domain;
use crate::rng::Rng;
use crate::semigroup::{semigroup_gap, time_grid};

/// Full experiment configuration (TOML on disk).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometryBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub sweep: SweepBlock,
    #[serde(default)]
    pub semigroup: SemigroupBlock,
    #[serde(default)]
    pub ns: NsBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    #[serde(rename = "R_e")]
    pub r_e: f64,
    #[serde(rename = "R_i")]
    pub r_i: f64,
    pub eps: f64,
    #[serde(default)]
    pub delta_override: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub n_r: usize,
    pub n_max: u32,
    pub k_max: usize,
    /// 0 = automatic
    pub quad_order: usize,
    pub eig_tol: f64,
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock { n_r: 48, n_max: 12, k_max: 12, quad_order: 0, eig_tol: 1e-12 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SweepBlock {
    pub eps_list: Vec<f64>,
    pub k_max: usize,
}

impl Default for SweepBlock {
    fn default() -> Self {
        SweepBlock { eps_list: vec![1e-2, 1e-3, 1e-4, 1e-6], k_max: 8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SemigroupBlock {
    #[serde(rename = "T")]
    pub t_final: f64,
    pub theta: String,
    pub time_points: usize,
}

impl Default for SemigroupBlock {
    fn default() -> Self {
        SemigroupBlock { t_final: 1.0, theta: "eig:1".into(), time_points: 64 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct NsBlock {
    pub nu: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(rename = "N")]
    pub n_coeff: usize,
    pub init: String,
    pub seed: u64,
    pub dt0: f64,
    pub out_points: usize,
}

impl Default for NsBlock {
    fn default() -> Self {
        NsBlock {
            nu: 0.05,
            t_final: 1.0,
            n_coeff: 24,
            init: "mix:0".into(),
            seed: 0,
            dt0: 1e-3,
            out_points: 128,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub directory: String,
    pub formats: Vec<String>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock { directory: "out".into(), formats: vec!["csv".into(), "json".into()] }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Apply `section.key=value` overrides.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for ov in overrides {
            let (key, value) = ov
                .split_once('=')
                .ok_or_else(|| Error::ConfigInvalid(format!("override `{ov}` is not key=value")))?;
            self.set_key(key.trim(), value.trim())?;
        }
        self.validate()
    }

    fn set_key(&mut self, key: &str, value: &str) -> Result<()> {
        let parse_f = |v: &str| {
            v.parse::<f64>().map_err(|_| Error::ConfigInvalid(format!("`{v}` is not a number")))
        };
        let parse_u = |v: &str| {
            v.parse::<usize>().map_err(|_| Error::ConfigInvalid(format!("`{v}` is not an integer")))
        };
        match key {
            "geometry.R_e" => self.geometry.r_e = parse_f(value)?,
            "geometry.R_i" => self.geometry.r_i = parse_f(value)?,
            "geometry.eps" => self.geometry.eps = parse_f(value)?,
            "geometry.delta_override" => self.geometry.delta_override = Some(parse_f(value)?),
            "solver.n_r" => self.solver.n_r = parse_u(value)?,
            "solver.n_max" => self.solver.n_max = parse_u(value)? as u32,
            "solver.k_max" => self.solver.k_max = parse_u(value)?,
            "solver.quad_order" => self.solver.quad_order = parse_u(value)?,
            "solver.eig_tol" => self.solver.eig_tol = parse_f(value)?,
            "sweep.k_max" => self.sweep.k_max = parse_u(value)?,
            "sweep.eps_list" => {
                self.sweep.eps_list = value
                    .split(',')
                    .map(|v| parse_f(v.trim()))
                    .collect::<Result<Vec<f64>>>()?
            }
            "semigroup.T" => self.semigroup.t_final = parse_f(value)?,
            "semigroup.theta" => self.semigroup.theta = value.into(),
            "semigroup.time_points" => self.semigroup.time_points = parse_u(value)?,
            "ns.nu" => self.ns.nu = parse_f(value)?,
            "ns.T" => self.ns.t_final = parse_f(value)?,
            "ns.N" => self.ns.n_coeff = parse_u(value)?,
            "ns.init" => self.ns.init = value.into(),
            "ns.seed" => {
                self.ns.seed = value
                    .parse::<u64>()
                    .map_err(|_| Error::ConfigInvalid(format!("`{value}` is not a seed")))?
            }
            "ns.dt0" => self.ns.dt0 = parse_f(value)?,
            "ns.out_points" => self.ns.out_points = parse_u(value)?,
            "output.directory" => self.output.directory = value.into(),
            other => return Err(Error::ConfigInvalid(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        if !(g.eps > 0.0 && g.eps < g.r_i && g.r_i < g.r_e) {
            return Err(Error::ConfigInvalid(
                "geometry: need 0 < geometry.eps < geometry.R_i < geometry.R_e".into(),
            ));
        }
        if self.solver.n_r < 4 {
            return Err(Error::ConfigInvalid("solver.n_r must be at least 4".into()));
        }
        if self.sweep.eps_list.is_empty() {
            return Err(Error::ConfigInvalid("sweep.eps_list must be nonempty".into()));
        }
        if self.sweep.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::ConfigInvalid("sweep.eps_list must be strictly descending".into()));
        }
        if self.ns.nu < 0.0 || self.ns.t_final <= 0.0 || self.ns.n_coeff == 0 {
            return Err(Error::ConfigInvalid("ns block: nu >= 0, T > 0, N >= 1".into()));
        }
        parse_theta(&self.semigroup.theta)?;
        parse_init(&self.ns.init)?;
        Ok(())
    }

    /// Content hash of the scientific config (plus the crate version) —
    /// the cache key. The output block only says where artifacts land, so
    /// it is excluded: the same experiment in two directories is the same
    /// experiment.
    pub fn experiment_id(&self, command: &str) -> String {
        let mut canon = self.clone();
        canon.output = OutputBlock::default();
        let blob = serde_json::to_string(&canon).expect("config serializes");
        let h = fnv64(format!("{}|{}|{}", env!("CARGO_PKG_VERSION"), command, blob).as_bytes());
        format!("{h:016x}")
    }
}

fn parse_theta(s: &str) -> Result<ThetaSpec> {
    if let Some(k) = s.strip_prefix("eig:") {
        let k: usize =
            k.parse().map_err(|_| Error::ConfigInvalid(format!("bad theta `{s}`")))?;
        if k == 0 {
            return Err(Error::ConfigInvalid("theta eig index is 1-based".into()));
        }
        Ok(ThetaSpec::Eig(k))
    } else if let Some(seed) = s.strip_prefix("random:") {
        let seed: u64 =
            seed.parse().map_err(|_| Error::ConfigInvalid(format!("bad theta `{s}`")))?;
        Ok(ThetaSpec::Random(seed))
    } else {
        Err(Error::ConfigInvalid(format!("theta must be eig:k or random:seed, got `{s}`")))
    }
}

fn parse_init(s: &str) -> Result<InitSpec> {
    if let Some(k) = s.strip_prefix("eig:") {
        let k: usize = k.parse().map_err(|_| Error::ConfigInvalid(format!("bad init `{s}`")))?;
        if k == 0 {
            return Err(Error::ConfigInvalid("init eig index is 1-based".into()));
        }
        Ok(InitSpec::Eig(k))
    } else if let Some(seed) = s.strip_prefix("mix:") {
        let seed: u64 =
            seed.parse().map_err(|_| Error::ConfigInvalid(format!("bad init `{s}`")))?;
        Ok(InitSpec::Mix(seed))
    } else {
        Err(Error::ConfigInvalid(format!("init must be eig:k or mix:seed, got `{s}`")))
    }
}

#[derive(Debug, Clone, Copy)]
enum ThetaSpec {
    Eig(usize),
    Random(u64),
}

#[derive(Debug, Clone, Copy)]
enum InitSpec {
    Eig(usize),
    Mix(u64),
}

/// Format a float with 17 significant digits ('.' decimal, RFC-4180 safe).
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Minimal CSV writer with RFC-4180 quoting.
pub struct CsvBuilder {
    buf: String,
}

impl CsvBuilder {
    pub fn new(header: &[&str]) -> Self {
        let mut b = CsvBuilder { buf: String::new() };
        b.row_str(header);
        b
    }

    pub fn row_str(&mut self, fields: &[&str]) {
        let mut first = true;
        for f in fields {
            if !first {
                self.buf.push(',');
            }
            first = false;
            if f.contains(',') || f.contains('"') || f.contains('\n') {
                self.buf.push('"');
                self.buf.push_str(&f.replace('"', "\"\""));
                self.buf.push('"');
            } else {
                self.buf.push_str(f);
            }
        }
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

/// Result of one command run: artifact paths plus an audit summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRecord {
    pub id: String,
    pub command: String,
    pub payloads: BTreeMap<String, String>,
    pub checksums: BTreeMap<String, String>,
    pub passes: usize,
    pub failures: usize,
    /// wall time in milliseconds; informational only, never persisted
    #[serde(skip)]
    pub wall_ms: u128,
}

fn fnv64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

/// Cache directory: $STOKES_SHRINK_CACHE or <output.directory>/cache.
pub fn cache_dir(cfg: &ExperimentConfig) -> PathBuf {
    match std::env::var_os("STOKES_SHRINK_CACHE") {
        Some(dir) => PathBuf::from(dir),
        None => Path::new(&cfg.output.directory).join("cache"),
    }
}

/// Look up a prior record; payload checksums must verify.
pub fn cache_lookup(dir: &Path, id: &str) -> Result<Option<ResultRecord>> {
    let entry = dir.join(id);
    let record_path = entry.join("record.json");
    if !record_path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&record_path)?;
    let record: ResultRecord = serde_json::from_str(&text)
        .map_err(|e| Error::CacheCorrupt(format!("record.json unreadable: {e}")))?;
    for (name, sum) in &record.checksums {
        let payload = entry.join(name);
        let data = fs::read(&payload)
            .map_err(|_| Error::CacheCorrupt(format!("payload `{name}` missing")))?;
        let actual = format!("{:016x}", fnv64(&data));
        if &actual != sum {
            // quarantine the entry so the next run recomputes
            let _ = fs::rename(&entry, entry.with_extension("corrupt"));
            return Err(Error::CacheCorrupt(format!(
                "payload `{name}` checksum {actual} != recorded {sum}"
            )));
        }
    }
    Ok(Some(record))
}

fn atomic_write(path: &Path, data: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(data.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

struct Artifacts {
    payloads: BTreeMap<String, String>,
    passes: usize,
    failures: usize,
}

/// Run a named command; artifacts land atomically under the cache entry and
/// a copy of each CSV/JSON under the output directory.
pub fn run(cfg: &ExperimentConfig, command: &str) -> Result<ResultRecord> {
    let start = std::time::Instant::now();
    let id = cfg.experiment_id(command);
    let dir = cache_dir(cfg);
    match cache_lookup(&dir, &id) {
        Ok(Some(record)) => return Ok(record),
        Ok(None) => {}
        Err(Error::CacheCorrupt(_)) => {} // quarantined; recompute
        Err(e) => return Err(e),
    }

    let artifacts = match command {
        "eigens" => cmd_eigens(cfg)?,
        "sweep" => cmd_sweep(cfg)?,
        "harmonic-audit" => cmd_harmonic_audit(cfg)?,
        "semigroup-gap" => cmd_semigroup_gap(cfg)?,
        "ns-run" => cmd_ns_run(cfg)?,
        "ns-sweep" => cmd_ns_sweep(cfg)?,
        "audit-all" => cmd_audit_all(cfg)?,
        other => return Err(Error::CommandUnknown(other.into())),
    };

    let entry = dir.join(&id);
    fs::create_dir_all(&entry)?;
    let out_dir = Path::new(&cfg.output.directory);
    fs::create_dir_all(out_dir)?;
    let mut checksums = BTreeMap::new();
    let mut payload_names = BTreeMap::new();
    for (name, data) in &artifacts.payloads {
        atomic_write(&entry.join(name), data)?;
        atomic_write(&out_dir.join(name), data)?;
        checksums.insert(name.clone(), format!("{:016x}", fnv64(data.as_bytes())));
        payload_names.insert(name.clone(), entry.join(name).display().to_string());
    }
    let record = ResultRecord {
        id: id.clone(),
        command: command.into(),
        payloads: payload_names,
        checksums,
        passes: artifacts.passes,
        failures: artifacts.failures,
        wall_ms: start.elapsed().as_millis(),
    };
    atomic_write(
        &entry.join("record.json"),
        &serde_json::to_string_pretty(&record).expect("record serializes"),
    )?;
    Ok(record)
}

fn domain_and_cfg(cfg: &ExperimentConfig) -> Result<crate::geometry::GeometryConfig> {
    build_geometry_relaxed(cfg.geometry.r_e, cfg.geometry.r_i, cfg.geometry.eps)
}

fn cmd_eigens(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let gc = domain_and_cfg(cfg)?;
    let mut payloads = BTreeMap::new();
    let mut passes = 0;
    let mut failures = 0;
    for (tag, domain) in [("disk", Domain::Disk), ("annulus", Domain::Annulus)] {
        let spec = compute_spectrum(&gc, domain, cfg.solver.k_max, cfg.solver.n_r, cfg.solver.n_max)?;
        let mut csv = CsvBuilder::new(&["k", "lambda", "mode", "parity", "residual", "group_id"]);
        for (k, p) in spec.pairs.iter().take(cfg.solver.k_max).enumerate() {
            csv.row_str(&[
                &(k + 1).to_string(),
                &fmt_g17(p.lambda),
                &p.n.to_string(),
                p.parity.name(),
                &fmt_g17(p.residual),
                &spec.group_of[k].to_string(),
            ]);
            if p.residual < cfg.solver.eig_tol.max(1e-10) {
                passes += 1;
            } else {
                failures += 1;
            }
        }
        let weyl = weyl_check(&spec);
        payloads.insert(format!("eigens_{tag}.csv"), csv.finish());
        payloads.insert(
            format!("eigens_{tag}_weyl.json"),
            serde_json::to_string_pretty(&weyl).expect("weyl serializes"),
        );
    }
    Ok(Artifacts { payloads, passes, failures })
}

fn cmd_sweep(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let rows = convergence_sweep(
        cfg.geometry.r_e,
        cfg.geometry.r_i,
        &cfg.sweep.eps_list,
        cfg.sweep.k_max,
        cfg.solver.n_r,
        cfg.solver.n_max,
    )?;
    let mut csv =
        CsvBuilder::new(&["eps", "k", "lambda_eps", "lambda_G", "gap", "eigenspace_gap"]);
    let mut passes = 0;
    let mut failures = 0;
    for r in &rows {
        csv.row_str(&[
            &fmt_g17(r.eps),
            &r.k.to_string(),
            &fmt_g17(r.lambda_eps),
            &fmt_g17(r.lambda_g),
            &fmt_g17(r.gap),
            &fmt_g17(r.eigenspace_gap),
        ]);
        if r.gap >= -1e-7 * r.lambda_g {
            passes += 1;
        } else {
            failures += 1;
        }
    }
    let mut payloads = BTreeMap::new();
    payloads.insert("sweep.csv".into(), csv.finish());
    Ok(Artifacts { payloads, passes, failures })
}

fn cmd_harmonic_audit(cfg: &ExperimentConfig) -> Result<Artifacts> {
    // the lemma audits need the full scale hierarchy
    let gc = build_geometry_with_fallback(cfg)?;
    let report = validate_hypothesis(&gc);
    if !report.pass() {
        return Err(Error::HypothesisViolation(report.first_failure()));
    }
    let rng = Rng::from_seed(cfg.ns.seed);
    let rows = lemma_audit_rows(&gc, 64, 100, &rng)?;
    let mut csv = CsvBuilder::new(&[
        "lemma", "epsilon", "delta", "mode_or_seed", "value", "bound", "margin", "pass",
    ]);
    let mut passes = 0;
    let mut failures = 0;
    for r in &rows {
        csv.row_str(&[
            &r.lemma,
            &fmt_g17(r.epsilon),
            &fmt_g17(r.delta),
            &r.label,
            &fmt_g17(r.value),
            &fmt_g17(r.bound),
            &fmt_g17(r.margin),
            if r.pass { "true" } else { "false" },
        ]);
        if r.pass {
            passes += 1;
        } else {
            failures += 1;
        }
    }
    let mut payloads = BTreeMap::new();
    payloads.insert("harmonic_audit.csv".into(), csv.finish());
    Ok(Artifacts { payloads, passes, failures })
}

fn build_geometry_with_fallback(cfg: &ExperimentConfig) -> Result<crate::geometry::GeometryConfig> {
    crate::geometry::build_geometry_with_delta(
        cfg.geometry.r_e,
        cfg.geometry.r_i,
        cfg.geometry.eps,
        cfg.geometry.delta_override,
    )
}

fn cmd_semigroup_gap(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let theta_spec = parse_theta(&cfg.semigroup.theta)?;
    let k_need = match theta_spec {
        ThetaSpec::Eig(k) => k.max(cfg.solver.k_max),
        ThetaSpec::Random(_) => cfg.solver.k_max,
    };
    let gc0 = domain_and_cfg(cfg)?;
    let spec_g = compute_spectrum(&gc0, Domain::Disk, k_need, cfg.solver.n_r, cfg.solver.n_max)?;
    let theta = match theta_spec {
        ThetaSpec::Eig(k) => {
            crate::harmonic::ModeField { components: vec![spec_g.eigenfunction(k - 1)] }
        }
        ThetaSpec::Random(seed) => random_span_field(&spec_g, seed),
    };
    let grid = time_grid(1e-4, cfg.semigroup.t_final, cfg.semigroup.time_points);
    let mut csv = CsvBuilder::new(&["eps", "t", "weighted_gap", "sup_gap"]);
    let mut passes = 0;
    let mut failures = 0;
    let mut prev = f64::INFINITY;
    for &eps in &cfg.sweep.eps_list {
        let gc = build_geometry_relaxed(cfg.geometry.r_e, cfg.geometry.r_i, eps)?;
        let spec_f = compute_spectrum(&gc, Domain::Annulus, k_need, cfg.solver.n_r, cfg.solver.n_max)?;
        let gap = semigroup_gap(&spec_g, &spec_f, &theta, &grid)?;
        for s in &gap.samples {
            csv.row_str(&[
                &fmt_g17(eps),
                &fmt_g17(s.t),
                &fmt_g17(s.weighted_gap),
                &fmt_g17(gap.sup_gap),
            ]);
        }
        if gap.sup_gap <= prev * (1.0 + 1e-9) {
            passes += 1;
        } else {
            failures += 1;
        }
        prev = gap.sup_gap;
    }
    let mut payloads = BTreeMap::new();
    payloads.insert("semigroup_gap.csv".into(), csv.finish());
    Ok(Artifacts { payloads, passes, failures })
}

/// Random S0-normalized field inside the computed span.
fn random_span_field(spec: &crate::eigen::Spectrum, seed: u64) -> crate::harmonic::ModeField {
    let mut rng = Rng::from_seed(seed).split("semigroup-theta", 0);
    let m = spec.len().min(16);
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
        components.push(
            crate::profile::RadialProfile::new(f.n, f.parity, f.grid.clone(), vals)
                .with_deriv(ders),
        );
    }
    crate::harmonic::ModeField { components }
}

fn initial_from_spec(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    Ok(match parse_init(&cfg.ns.init)? {
        InitSpec::Eig(k) => {
            let mut a = vec![0.0; cfg.ns.n_coeff];
            if k > cfg.ns.n_coeff {
                return Err(Error::ConfigInvalid(format!(
                    "init eig:{k} outside the first {} coefficients",
                    cfg.ns.n_coeff
                )));
            }
            a[k - 1] = 1.0;
            a
        }
        InitSpec::Mix(seed) => initial_mix(cfg.ns.n_coeff, 6, seed ^ cfg.ns.seed),
    })
}

fn cmd_ns_run(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let gc = domain_and_cfg(cfg)?;
    let spec = compute_spectrum(&gc, Domain::Disk, cfg.ns.n_coeff, cfg.solver.n_r, cfg.solver.n_max)?;
    let tensor = trilinear_tensor(&spec, cfg.ns.n_coeff)?;
    let a0 = initial_from_spec(cfg)?;
    let chi = CutoffFunction::default_for(1.0);
    let traj = solve_ns(
        &spec,
        &tensor,
        a0,
        cfg.ns.nu,
        cfg.ns.t_final,
        cfg.ns.dt0,
        cfg.ns.out_points,
        Some(&chi),
    )?;
    let mut csv = CsvBuilder::new(&[
        "t",
        "energy_S0",
        "enstrophy_S1",
        "decay_margin",
        "chi_l2",
        "chi_h1",
    ]);
    for s in &traj.samples {
        csv.row_str(&[
            &fmt_g17(s.t),
            &fmt_g17(s.energy_s0),
            &fmt_g17(s.enstrophy_s1),
            &fmt_g17(s.decay_margin),
            &fmt_g17(s.chi_l2.sqrt()),
            &fmt_g17(s.chi_h1),
        ]);
    }
    let passes = usize::from(traj.decay_ok) + usize::from(traj.dissipation_ok);
    let failures = 2 - passes;
    let mut payloads = BTreeMap::new();
    payloads.insert("ns_run.csv".into(), csv.finish());
    Ok(Artifacts { payloads, passes, failures })
}

fn cmd_ns_sweep(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let setup = HoleConvergenceSetup {
        r_e: cfg.geometry.r_e,
        r_i: cfg.geometry.r_i,
        nu: cfg.ns.nu,
        t_final: cfg.ns.t_final,
        n_coeff: cfg.ns.n_coeff,
        n_r: cfg.solver.n_r,
        n_max: cfg.solver.n_max,
        dt0: cfg.ns.dt0,
        out_points: cfg.ns.out_points,
    };
    let a0 = initial_from_spec(cfg)?;
    let chi = CutoffFunction::default_for(1.0);
    let rows = hole_convergence(&setup, a0, &cfg.sweep.eps_list, &chi)?;
    let mut csv = CsvBuilder::new(&[
        "eps",
        "D_inf",
        "D_2",
        "vort_dist",
        "sup_chi_l2",
        "int_chi_h1",
    ]);
    let mut passes = 0;
    let mut failures = 0;
    let mut prev = f64::INFINITY;
    for r in &rows {
        csv.row_str(&[
            &fmt_g17(r.eps),
            &fmt_g17(r.d_inf),
            &fmt_g17(r.d_2),
            &fmt_g17(r.vort_dist),
            &fmt_g17(r.sup_chi_l2),
            &fmt_g17(r.int_chi_h1),
        ]);
        if r.d_2 <= prev * (1.0 + 1e-9) {
            passes += 1;
        } else {
            failures += 1;
        }
        prev = r.d_2;
    }
    let mut payloads = BTreeMap::new();
    payloads.insert("ns_sweep.csv".into(), csv.finish());
    Ok(Artifacts { payloads, passes, failures })
}

fn cmd_audit_all(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let mut payloads = BTreeMap::new();
    let mut passes = 0;
    let mut failures = 0;
    let mut summary = BTreeMap::new();
    for command in ["harmonic-audit", "sweep", "semigroup-gap", "ns-run", "ns-sweep"] {
        let art = match command {
            "harmonic-audit" => cmd_harmonic_audit(cfg)?,
            "sweep" => cmd_sweep(cfg)?,
            "semigroup-gap" => cmd_semigroup_gap(cfg)?,
            "ns-run" => cmd_ns_run(cfg)?,
            "ns-sweep" => cmd_ns_sweep(cfg)?,
            _ => unreachable!(),
        };
        passes += art.passes;
        failures += art.failures;
        summary.insert(
            command.to_string(),
            serde_json::json!({"passes": art.passes, "failures": art.failures}),
        );
        payloads.extend(art.payloads);
    }
    summary.insert(
        "total".into(),
        serde_json::json!({"passes": passes, "failures": failures, "all_pass": failures == 0}),
    );
    payloads.insert(
        "audit_summary.json".into(),
        serde_json::to_string_pretty(&summary).expect("summary serializes"),
    );
    Ok(Artifacts { payloads, passes, failures })
}
