//! Test-only oracles, independent of the spectral implementation they check.

pub mod bessel;
pub mod fd;
