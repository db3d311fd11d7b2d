//! Robust adaptive beamforming for general-rank signal models.
//!
//! The worst-case SINR over a matrix induced `l_{p,q}`-norm ball of signal
//! model errors reduces to maximizing `||Q w||_p - η ||w||_q` under a
//! (possibly robust) power constraint. This crate evaluates those worst
//! cases in closed form and maximizes the resulting difference-of-norms
//! objective by a sequence of second-order cone programs.
//!
//! Modules, bottom up:
//! - [`linalg`]: complex dense vectors/matrices, norms, factorizations.
//! - [`cone_ir`]: a small cone-program IR and `l_q` epigraph compilers.
//! - [`socp`]: a primal-dual interior-point solver for that IR.
//! - [`worst_case`]: closed-form worst-case residuals and perturbations.
//! - [`rab`]: the sequential SOCP beamformer design.
//! - [`scenario`]: array geometry, scattered-source covariances, SINR.

pub mod cone_ir;
pub mod linalg;
pub mod rab;
pub mod scenario;
pub mod socp;
pub mod worst_case;

pub use linalg::{CMatrix, CVector, ExtRational, HermitianMatrix};
pub use num_complex::Complex64;
