//! Primal-dual interior-point solver for second-order cone programs built
//! with [`crate::cone_ir`].
//!
//! The solver works on the homogeneous self-dual embedding, so infeasible
//! and unbounded programs terminate with a certificate instead of stalling.
//! [`verify`] re-evaluates a returned point directly against the program and
//! shares no code with the solve path.

mod cones;
mod ipm;
pub mod planted;
mod standard;
mod verify;

use thiserror::Error;

use crate::cone_ir::{ConeError, ConeProgram, VarId};

pub use verify::{verify, ResidualReport};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Relative tolerance on primal, dual and gap residuals.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Static regularization of the reduced Newton system, relative to its
    /// largest diagonal entry.
    pub regularization: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-8,
            max_iterations: 100,
            regularization: 1e-12,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    PrimalInfeasible,
    /// The maximization is unbounded.
    DualInfeasible,
    MaxIterations,
    NumericalFailure,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationStats {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap_residual: f64,
    pub mu: f64,
    /// Step length taken after this iterate; zero on the last one.
    pub step: f64,
}

/// Multipliers in constraint order. Nonnegative and cone duals lie in the
/// respective (self-dual) cones.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Duals {
    pub equality: Vec<f64>,
    pub nonneg: Vec<f64>,
    /// `(z_t, z_u)` per cone, flattened with `z_t` first.
    pub soc: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub status: Status,
    /// Primal point. For [`Status::DualInfeasible`] this is a normalized
    /// improving ray.
    pub values: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap_residual: f64,
    /// For [`Status::PrimalInfeasible`] these form a normalized certificate.
    pub duals: Duals,
    pub history: Vec<IterationStats>,
}

impl Solution {
    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.index()]
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid program: {0}")]
    InvalidProgram(#[from] ConeError),
    #[error("program data contains non-finite values")]
    NonFinite,
}

/// A backend able to solve a [`ConeProgram`].
pub trait ConeSolver {
    fn solve(&self, prog: &ConeProgram) -> Result<Solution, SolveError>;
}

/// The built-in homogeneous interior-point backend.
#[derive(Clone, Copy, Debug, Default)]
pub struct InteriorPoint {
    pub config: SolverConfig,
}

impl ConeSolver for InteriorPoint {
    fn solve(&self, prog: &ConeProgram) -> Result<Solution, SolveError> {
        solve(prog, &self.config)
    }
}

/// Solves `prog` (a maximization) to the configured tolerance.
pub fn solve(prog: &ConeProgram, config: &SolverConfig) -> Result<Solution, SolveError> {
    prog.validate()?;
    let sf = standard::StandardForm::from_program(prog);
    if !sf.is_finite() {
        return Err(SolveError::NonFinite);
    }
    let out = ipm::run(&sf, config);

    let n_nonneg = prog.nonnegatives().len();
    let z = out.z.as_slice();
    let mut soc = Vec::with_capacity(prog.socs().len());
    let mut row = n_nonneg;
    for b in prog.socs() {
        soc.push(z[row..row + b.dim()].to_vec());
        row += b.dim();
    }
    let duals = Duals {
        equality: out.y.as_slice().to_vec(),
        nonneg: z[..n_nonneg].to_vec(),
        soc,
    };
    Ok(Solution {
        status: out.status,
        values: out.x.as_slice().to_vec(),
        objective: -out.pcost + sf.offset,
        dual_objective: -out.dcost + sf.offset,
        iterations: out.iterations,
        primal_residual: out.pres,
        dual_residual: out.dres,
        gap_residual: out.gap_res,
        duals,
        history: out.history,
    })
}
