//! Concentric-disk geometry: the outer disk G of radius R_e, the hole O of
//! radius eps, and the derived scale radii R_i > R_+ > R_- that organize the
//! boundary-layer analysis.
//!
//! All lengths are normalized so that R_e = 1 internally; inputs in other
//! units are rescaled on entry (powers r^{2n} condition much better that way).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Validated geometry with all derived scales.
///
/// Invariants (checked by [`build_geometry`] / [`validate_hypothesis`]):
/// `0 < eps_hole <= r_minus < r_plus < r_i < r_e`,
/// `delta0 = 2 + ln(r_e/r_i)`, `r_plus = r_e e^{-delta}`,
/// `r_minus = r_e e^{-delta^2}`, `delta0 < delta <= sqrt(ln(r_e/eps_hole))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    /// Outer disk radius (1.0 after normalization).
    pub r_e: f64,
    /// Fixed intermediate reference radius.
    pub r_i: f64,
    /// Hole radius.
    pub eps_hole: f64,
    /// Boundary-layer exponent.
    pub delta: f64,
    /// Admissibility threshold 2 + ln(r_e/r_i).
    pub delta0: f64,
    /// r_e e^{-delta}.
    pub r_plus: f64,
    /// r_e e^{-delta^2}.
    pub r_minus: f64,
}

/// Named radial regions of the geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionTag {
    /// Hole O = (0, eps).
    Hole,
    /// Fluid annulus F = (eps, R_e).
    Fluid,
    /// Boundary layer F_Sigma = (eps, R_+).
    BoundaryLayer,
    /// Far field F_Gamma = (R_+, R_e).
    FarField,
    /// Annulus C_+ = (R_-, R_+).
    CrownPlus,
    /// Annulus C_e = (R_+, R_e).
    CrownE,
    /// Annulus C_i = (R_-, R_i).
    CrownI,
    /// Disk D_- = (0, R_-).
    DiskMinus,
    /// Disk D_+ = (0, R_+).
    DiskPlus,
    /// Disk D_i = (0, R_i).
    DiskI,
    /// Whole disk G = (0, R_e).
    Full,
}

impl RegionTag {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "O" | "hole" => RegionTag::Hole,
            "F" | "fluid" => RegionTag::Fluid,
            "FS" | "Fsigma" | "boundary-layer" => RegionTag::BoundaryLayer,
            "FG" | "Fgamma" | "far-field" => RegionTag::FarField,
            "C+" | "Cplus" => RegionTag::CrownPlus,
            "Ce" => RegionTag::CrownE,
            "Ci" => RegionTag::CrownI,
            "D-" | "Dminus" => RegionTag::DiskMinus,
            "D+" | "Dplus" => RegionTag::DiskPlus,
            "Di" => RegionTag::DiskI,
            "G" | "full" => RegionTag::Full,
            other => return Err(Error::UnknownTag(other.into())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            RegionTag::Hole => "O",
            RegionTag::Fluid => "F",
            RegionTag::BoundaryLayer => "FS",
            RegionTag::FarField => "FG",
            RegionTag::CrownPlus => "C+",
            RegionTag::CrownE => "Ce",
            RegionTag::CrownI => "Ci",
            RegionTag::DiskMinus => "D-",
            RegionTag::DiskPlus => "D+",
            RegionTag::DiskI => "Di",
            RegionTag::Full => "G",
        }
    }
}

/// Radial interval attached to a region tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub tag: RegionTag,
    pub r_lo: f64,
    pub r_hi: f64,
}

/// Build the geometry, choosing delta maximal: delta = sqrt(ln(r_e/eps)),
/// so that r_minus = eps (tightest bounds, one fewer free parameter).
pub fn build_geometry(r_e: f64, r_i: f64, eps_hole: f64) -> Result<GeometryConfig> {
    build_geometry_with_delta(r_e, r_i, eps_hole, None)
}

/// Build the geometry with an explicit delta in (delta0, sqrt(ln(r_e/eps))].
pub fn build_geometry_with_delta(
    r_e: f64,
    r_i: f64,
    eps_hole: f64,
    delta_override: Option<f64>,
) -> Result<GeometryConfig> {
    if !(r_e.is_finite() && r_i.is_finite() && eps_hole.is_finite()) {
        return Err(Error::NonpositiveRadius("nonfinite input radius".into()));
    }
    if eps_hole <= 0.0 || r_i <= 0.0 || r_e <= 0.0 {
        return Err(Error::NonpositiveRadius(format!(
            "radii must be positive: R_e={r_e}, R_i={r_i}, eps={eps_hole}"
        )));
    }
    if !(eps_hole < r_i && r_i < r_e) {
        return Err(Error::NonpositiveRadius(format!(
            "need 0 < eps < R_i < R_e, got eps={eps_hole}, R_i={r_i}, R_e={r_e}"
        )));
    }
    // normalize to R_e = 1
    let r_i = r_i / r_e;
    let eps = eps_hole / r_e;
    let delta0 = 2.0 - r_i.ln();
    let delta_max = (-eps.ln()).sqrt();
    if delta_max <= delta0 {
        return Err(Error::HypothesisViolation(format!(
            "sqrt(ln(R_e/eps)) = {delta_max:.6} <= delta0 = {delta0:.6}; hole too large"
        )));
    }
    let delta = match delta_override {
        None => delta_max,
        Some(d) => {
            if d <= delta0 || d > delta_max {
                return Err(Error::HypothesisViolation(format!(
                    "delta override {d:.6} outside ({delta0:.6}, {delta_max:.6}]"
                )));
            }
            d
        }
    };
    // at the maximal delta, R_- = eps holds exactly by construction; using
    // exp(-delta^2) instead can land one ulp below eps and break inclusion
    let r_minus = if delta_override.is_none() { eps } else { (-delta * delta).exp() };
    let cfg = GeometryConfig {
        r_e: 1.0,
        r_i,
        eps_hole: eps,
        delta,
        delta0,
        r_plus: (-delta).exp(),
        r_minus,
    };
    let report = validate_hypothesis(&cfg);
    if !report.pass() {
        return Err(Error::HypothesisViolation(report.first_failure()));
    }
    Ok(cfg)
}

/// Geometry for spectral sweeps: validates only 0 < eps < R_i < R_e and
/// fills the scale fields with delta = sqrt(ln(r_e/eps)), without enforcing
/// delta > delta0. The eigenproblems on G and F_eps use only eps and r_e;
/// the boundary-layer hierarchy matters solely for the harmonic-mass audits,
/// which insist on [`build_geometry`]. Large holes (eps >= ~1e-3 with the
/// default R_i) are admissible here but not there.
pub fn build_geometry_relaxed(r_e: f64, r_i: f64, eps_hole: f64) -> Result<GeometryConfig> {
    if !(r_e.is_finite() && r_i.is_finite() && eps_hole.is_finite()) {
        return Err(Error::NonpositiveRadius("nonfinite input radius".into()));
    }
    if eps_hole <= 0.0 || r_i <= 0.0 || r_e <= 0.0 || !(eps_hole < r_i && r_i < r_e) {
        return Err(Error::NonpositiveRadius(format!(
            "need 0 < eps < R_i < R_e, got eps={eps_hole}, R_i={r_i}, R_e={r_e}"
        )));
    }
    let r_i = r_i / r_e;
    let eps = eps_hole / r_e;
    let delta = (-eps.ln()).sqrt();
    Ok(GeometryConfig {
        r_e: 1.0,
        r_i,
        eps_hole: eps,
        delta,
        delta0: 2.0 - r_i.ln(),
        r_plus: (-delta).exp(),
        r_minus: (-delta * delta).exp(),
    })
}

/// Radial interval for a region tag.
pub fn region_bounds(cfg: &GeometryConfig, tag: RegionTag) -> Region {
    let (r_lo, r_hi) = match tag {
        RegionTag::Hole => (0.0, cfg.eps_hole),
        RegionTag::Fluid => (cfg.eps_hole, cfg.r_e),
        RegionTag::BoundaryLayer => (cfg.eps_hole, cfg.r_plus),
        RegionTag::FarField => (cfg.r_plus, cfg.r_e),
        RegionTag::CrownPlus => (cfg.r_minus, cfg.r_plus),
        RegionTag::CrownE => (cfg.r_plus, cfg.r_e),
        RegionTag::CrownI => (cfg.r_minus, cfg.r_i),
        RegionTag::DiskMinus => (0.0, cfg.r_minus),
        RegionTag::DiskPlus => (0.0, cfg.r_plus),
        RegionTag::DiskI => (0.0, cfg.r_i),
        RegionTag::Full => (0.0, cfg.r_e),
    };
    Region { tag, r_lo, r_hi }
}

/// One inclusion check of the geometric hypothesis.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
}

/// Full report over all inclusion checks.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub checks: Vec<HypothesisCheck>,
}

impl HypothesisReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn first_failure(&self) -> String {
        self.checks
            .iter()
            .find(|c| !c.pass)
            .map(|c| format!("{}: value {:.6e} vs bound {:.6e}", c.name, c.value, c.bound))
            .unwrap_or_else(|| "no failure".into())
    }
}

/// Check every inclusion and scale identity of the hypothesis; failures are
/// reported, never raised.
pub fn validate_hypothesis(cfg: &GeometryConfig) -> HypothesisReport {
    // `le`: pass iff value <= bound (with closure contact allowed at equality)
    let le = |name: &str, value: f64, bound: f64| HypothesisCheck {
        name: name.into(),
        value,
        bound,
        margin: bound - value,
        pass: value <= bound,
    };
    let lt = |name: &str, value: f64, bound: f64| HypothesisCheck {
        name: name.into(),
        value,
        bound,
        margin: bound - value,
        pass: value < bound,
    };
    let close = |name: &str, value: f64, target: f64| HypothesisCheck {
        name: name.into(),
        value,
        bound: target,
        margin: (value - target).abs(),
        pass: (value - target).abs() <= 1e-12 * target.abs().max(1.0),
    };
    let delta_max = (-(cfg.eps_hole / cfg.r_e).ln()).sqrt();
    let checks = vec![
        lt("eps > 0", 0.0, cfg.eps_hole),
        le("closure(O) in D-: eps <= R-", cfg.eps_hole, cfg.r_minus),
        lt("closure(D-) in D+: R- < R+", cfg.r_minus, cfg.r_plus),
        lt("closure(D+) in Di: R+ < Ri", cfg.r_plus, cfg.r_i),
        lt("closure(Di) in G: Ri < Re", cfg.r_i, cfg.r_e),
        lt("delta > delta0", cfg.delta0, cfg.delta),
        le("delta <= sqrt(ln(Re/eps))", cfg.delta, delta_max),
        close("delta0 = 2 + ln(Re/Ri)", cfg.delta0, 2.0 + (cfg.r_e / cfg.r_i).ln()),
        close("R+ = Re exp(-delta)", cfg.r_plus, cfg.r_e * (-cfg.delta).exp()),
        close(
            "R- = Re exp(-delta^2)",
            cfg.r_minus,
            cfg.r_e * (-cfg.delta * cfg.delta).exp(),
        ),
    ];
    HypothesisReport { checks }
}
