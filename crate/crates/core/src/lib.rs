//! Forward uncertainty quantification for bifurcations of the stochastic
//! Allen-Cahn equation on an interval.
//!
//! The pipeline locates random bifurcation points via symmetric tridiagonal
//! eigenvalue problems, traces random bifurcation branches via
//! pseudo-arclength continuation with a shared arclength grid, and builds
//! generalized polynomial chaos surrogates via sparse-grid collocation to
//! estimate pdfs, cdfs, and mean bifurcation curves.

pub mod continuation;
pub mod eigen;
pub mod error;
pub mod gpc;
pub mod linalg;
pub mod sparse_grid;
pub mod spatial;
pub mod uq;

pub use error::{Error, Result};
