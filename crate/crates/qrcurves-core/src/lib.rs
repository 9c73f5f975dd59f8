//! Numerical toolkit for calibrations by product volume forms and the
//! quasiregular curves they calibrate: comass computation, block-map
//! distortion analytics, explicit counterexample curve constructions,
//! finite-difference field analysis, dyadic piecewise-affine meshes,
//! and randomized verification suites.

pub mod curves;
pub mod exterior;
pub mod linmap;
pub mod mat;
pub mod numdiff;
pub mod plmesh;
pub mod sampling;
pub mod verify;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
