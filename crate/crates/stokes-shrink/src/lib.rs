//! Stream-function/vorticity toolkit for Stokes and Navier-Stokes flow on a
//! disk with a concentric circular hole.
//!
//! The crate computes the Stokes eigenpairs of the clamped (buckling)
//! stream-function eigenproblem on the full disk and on the perforated
//! annulus, runs shrinking-hole sweeps for eigenvalues, eigenspaces and the
//! Stokes semigroup, audits closed-form mass-concentration bounds for
//! harmonic functions near the hole, decomposes vorticity fields into their
//! fluid/hole/harmonic/transmission parts, and integrates the nonlinear
//! Navier-Stokes equations in the Stokes eigenbasis with localized
//! enstrophy diagnostics.
//!
//! Entry points:
//! - [`geometry::build_geometry`] for the radii and boundary-layer scales;
//! - [`eigen::compute_spectrum`] and [`eigen::convergence_sweep`];
//! - [`harmonic`] for the closed-form polar-series audits;
//! - [`semigroup::semigroup_gap`];
//! - [`ns::solve_ns`] and [`ns::hole_convergence`];
//! - [`harness::run`] for the config-driven CLI commands.
//!
//! The `examples/` directory has one runnable example per capability; the
//! `stokes-shrink` binary drives the same code from a config file.

pub mod basis;
pub mod eigen;
pub mod error;
pub mod geometry;
pub mod harmonic;
pub mod harness;
pub mod linalg;
pub mod ns;
pub mod profile;
pub mod quad;
pub mod rng;
pub mod semigroup;
pub mod spectral;

pub use error::{Error, Result};
