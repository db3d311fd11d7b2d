//! Worst-case SINR beamforming by sequential SOCP restriction.
//!
//! The problem is
//!
//! ```text
//! maximize   ||Q w||_p - η ||w||_q
//! subject to w^H (R̂ + γ I) w <= 1                      (quadratic)
//!        or  ||P w||_{p1} + η1 ||w||_{q1} <= 1          (robust norm)
//! ```
//!
//! The convex term `||Q w||_p` is minorized at a reference point `w_r` by
//! the Hölder bound `||Q w||_p >= Re(w_r^H Q^H Q w) / ||Q w_r||_{p*}`, which
//! turns each step into an SOCP whose feasible set lies inside the original
//! one. Iterating the restriction from the previous solution gives a
//! nondecreasing sequence of restricted optima for `p = 2`, where the bound
//! is tight at `w_r`.

use std::time::Instant;

use thiserror::Error;

use crate::cone_ir::{
    complex_linear_map, complex_values, lq_epigraph, lq_epigraph_affine, quad_constraint,
    real_inner, AffineExpr, ComplexVarRef, ConeError, ConeProgram, VarId,
};
use crate::linalg::{
    cholesky_psd, hermitian_eig, solve_lower, solve_lower_adjoint, vec_norm, CMatrix, CVector,
    ExtRational, HermitianMatrix, LinalgError,
};
use crate::socp::{ConeSolver, InteriorPoint, SolveError, SolverConfig, Status};
use crate::worst_case::UncertaintySpec;
use crate::Complex64;

/// Slack allowed on `t_{k+1} >= t_k` before a step counts as descent.
pub const ASCENT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum RabError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("Q w vanishes at the reference point")]
    ZeroSignal,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("restriction at iteration {iteration} reported infeasible")]
    InfeasibleRestriction {
        iteration: usize,
        partial: Box<SequentialResult>,
    },
    #[error("subproblem at iteration {iteration} ended with {status:?}")]
    SubproblemFailed {
        iteration: usize,
        status: Status,
        partial: Box<SequentialResult>,
    },
}

impl RabError {
    /// Best-so-far result of a run that stopped on a failed subproblem.
    pub fn partial(&self) -> Option<&SequentialResult> {
        match self {
            RabError::InfeasibleRestriction { partial, .. }
            | RabError::SubproblemFailed { partial, .. } => Some(partial),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Constraint {
    /// `w^H (R̂ + γ I) w <= 1`.
    Quadratic,
    /// `||P w||_{p1} + η1 ||w||_{q1} <= 1`, with `spec.p = p1`, `spec.q = q1`.
    RobustNorm { p: CMatrix, spec: UncertaintySpec },
}

#[derive(Clone, Debug)]
pub struct RabProblem {
    r_hat: HermitianMatrix,
    q: CMatrix,
    gamma: f64,
    spec: UncertaintySpec,
    constraint: Constraint,
    /// Lower Cholesky factor of `R̂ + γ I`.
    loaded_chol: CMatrix,
}

impl RabProblem {
    pub fn new(
        r_hat: HermitianMatrix,
        q: CMatrix,
        gamma: f64,
        spec: UncertaintySpec,
        constraint: Constraint,
    ) -> Result<Self, RabError> {
        let n = r_hat.dim();
        if q.ncols() != n {
            return Err(RabError::InvalidProblem(format!(
                "Q has {} columns, R̂ is {n}x{n}",
                q.ncols()
            )));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(RabError::InvalidProblem(format!("gamma = {gamma}")));
        }
        if q.iter().all(|z| z.norm_sqr() == 0.0) {
            return Err(RabError::InvalidProblem("Q is zero".into()));
        }
        if q.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(RabError::Linalg(LinalgError::NonFinite));
        }
        if let Constraint::RobustNorm { p, .. } = &constraint {
            if p.ncols() != n {
                return Err(RabError::InvalidProblem(format!(
                    "P has {} columns, expected {n}",
                    p.ncols()
                )));
            }
        }
        let loaded_chol = cholesky_psd(&r_hat.shifted(gamma))?;
        Ok(RabProblem {
            r_hat,
            q,
            gamma,
            spec,
            constraint,
            loaded_chol,
        })
    }

    pub fn dim(&self) -> usize {
        self.r_hat.dim()
    }

    pub fn r_hat(&self) -> &HermitianMatrix {
        &self.r_hat
    }

    pub fn q(&self) -> &CMatrix {
        &self.q
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn spec(&self) -> &UncertaintySpec {
        &self.spec
    }

    pub fn constraint(&self) -> &Constraint {
        &self.constraint
    }

    /// `L` with `L L^H = R̂ + γ I`.
    pub fn loaded_factor(&self) -> &CMatrix {
        &self.loaded_chol
    }

    /// `p* = p / (p - 1)`.
    pub fn dual_order(&self) -> ExtRational {
        self.spec.p.conjugate()
    }

    /// Left-hand side of the constraint, feasible iff `<= 1`.
    pub fn constraint_value(&self, w: &CVector) -> f64 {
        match &self.constraint {
            Constraint::Quadratic => {
                let y = self.loaded_chol.adjoint() * w;
                y.norm_squared()
            }
            Constraint::RobustNorm { p, spec } => {
                vec_norm((p * w).as_slice(), spec.p) + spec.eta * vec_norm(w.as_slice(), spec.q)
            }
        }
    }

    /// Scales `w` down onto the constraint set; feasible points are untouched.
    pub fn project_feasible(&self, w: &CVector) -> CVector {
        let c = self.constraint_value(w);
        if c <= 1.0 {
            return w.clone();
        }
        // The quadratic form is 2-homogeneous, the robust norm 1-homogeneous.
        let mut scale = match self.constraint {
            Constraint::Quadratic => 1.0 / c.sqrt(),
            Constraint::RobustNorm { .. } => 1.0 / c,
        };
        let mut out = w * Complex64::new(scale, 0.0);
        while self.constraint_value(&out) > 1.0 {
            scale *= 1.0 - 1e-15;
            out = w * Complex64::new(scale, 0.0);
        }
        out
    }

    /// `||Q w||_2 / ||Q w||_{p*}`, the quantity whose monotonicity implies
    /// ascent for `p != 2`.
    pub fn norm_ratio(&self, w: &CVector) -> f64 {
        let qw = &self.q * w;
        vec_norm(qw.as_slice(), ExtRational::TWO) / vec_norm(qw.as_slice(), self.dual_order())
    }

    /// `Re(w_r^H Q^H Q w) / ||Q w_r||_{p*} - η ||w||_q`: the restricted
    /// objective at `w` around `w_ref`.
    pub fn restriction_value(&self, w_ref: &CVector, w: &CVector) -> Result<f64, RabError> {
        let qr = &self.q * w_ref;
        let denom = vec_norm(qr.as_slice(), self.dual_order());
        if denom == 0.0 {
            return Err(RabError::ZeroSignal);
        }
        let lin = qr.dotc(&(&self.q * w)).re / denom;
        Ok(lin - self.spec.eta * vec_norm(w.as_slice(), self.spec.q))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeamVector {
    pub w: CVector,
}

/// `||Q w||_p - η ||w||_q`, unclamped.
pub fn objective(problem: &RabProblem, w: &CVector) -> f64 {
    vec_norm((&problem.q * w).as_slice(), problem.spec.p)
        - problem.spec.eta * vec_norm(w.as_slice(), problem.spec.q)
}

/// Guaranteed worst-case signal power `max(objective, 0)^2`.
pub fn worst_case_sinr(problem: &RabProblem, w: &CVector) -> f64 {
    objective(problem, w).max(0.0).powi(2)
}

/// Principal generalized eigenvector of `(Q^H Q, R̂ + γ I)` normalized to
/// the quadratic constraint, then scaled into the robust-norm constraint
/// when that one is active.
pub fn initial_point(problem: &RabProblem) -> Result<BeamVector, RabError> {
    let l = &problem.loaded_chol;
    let n = problem.dim();
    // M = L^{-1} Q^H Q L^{-H}
    let mut linv_qh = CMatrix::zeros(n, problem.q.nrows());
    for (j, row) in problem.q.row_iter().enumerate() {
        let col = CVector::from_iterator(n, row.iter().map(|z| z.conj()));
        linv_qh.set_column(j, &solve_lower(l, &col));
    }
    let m = HermitianMatrix::gram(&linv_qh.adjoint());
    let u = hermitian_eig(&m)?.principal_vector();
    let v = solve_lower_adjoint(l, &u);
    let norm = (l.adjoint() * &v).norm();
    let mut w = v / Complex64::new(norm, 0.0);
    if matches!(problem.constraint, Constraint::RobustNorm { .. }) {
        w = problem.project_feasible(&w);
    }
    if vec_norm((&problem.q * &w).as_slice(), problem.dual_order()) == 0.0 {
        return Err(RabError::ZeroSignal);
    }
    Ok(BeamVector { w })
}

/// A built restriction with handles to its decision variables.
#[derive(Clone, Debug)]
pub struct Restriction {
    pub program: ConeProgram,
    pub w: Vec<ComplexVarRef>,
    pub t: VarId,
}

/// Everything except the linearized row; shared across iterations.
#[derive(Clone, Debug)]
struct Template {
    program: ConeProgram,
    w: Vec<ComplexVarRef>,
    t: VarId,
    s: Option<VarId>,
}

fn build_template(problem: &RabProblem) -> Result<Template, RabError> {
    let mut prog = ConeProgram::new();
    let w = prog.add_complex_vars("w", problem.dim());
    let t = prog.add_var("t");
    let s = if problem.spec.eta > 0.0 {
        let s = prog.add_var("s");
        lq_epigraph(&mut prog, &w, s, problem.spec.q)?;
        Some(s)
    } else {
        None
    };
    match &problem.constraint {
        Constraint::Quadratic => quad_constraint(&mut prog, &w, &problem.loaded_chol)?,
        Constraint::RobustNorm { p, spec } => {
            let r = prog.add_var("r");
            let rows = complex_linear_map(p, &w)?;
            lq_epigraph_affine(&mut prog, &rows, r, spec.p)?;
            let mut lhs = AffineExpr::from(r);
            if spec.eta > 0.0 {
                let s1 = prog.add_var("s1");
                lq_epigraph(&mut prog, &w, s1, spec.q)?;
                lhs.add_term(s1, spec.eta);
            }
            prog.add_le(lhs, AffineExpr::constant(1.0))?;
        }
    }
    prog.maximize(t.into())?;
    Ok(Template {
        program: prog,
        w,
        t,
        s,
    })
}

fn instantiate(
    problem: &RabProblem,
    template: &Template,
    w_ref: &CVector,
) -> Result<Restriction, RabError> {
    let qr = &problem.q * w_ref;
    let denom = vec_norm(qr.as_slice(), problem.dual_order());
    if denom == 0.0 {
        return Err(RabError::ZeroSignal);
    }
    let c = problem.q.adjoint() * qr / Complex64::new(denom, 0.0);
    let mut row = real_inner(&c, &template.w)?;
    row.add_term(template.t, -1.0);
    if let Some(s) = template.s {
        row.add_term(s, -problem.spec.eta);
    }
    let mut program = template.program.clone();
    program.add_nonneg(row)?;
    Ok(Restriction {
        program,
        w: template.w.clone(),
        t: template.t,
    })
}

/// `maximize t` subject to the linearized objective around `w_ref` and the
/// problem's constraint.
pub fn build_restriction(problem: &RabProblem, w_ref: &CVector) -> Result<Restriction, RabError> {
    instantiate(problem, &build_template(problem)?, w_ref)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StoppingRule {
    /// Stop once `t_k - t_{k-1} <= alpha`.
    pub alpha: f64,
    pub max_iter: usize,
}

impl Default for StoppingRule {
    fn default() -> Self {
        StoppingRule {
            alpha: 1e-6,
            max_iter: 300,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Threshold,
    MaxIterations,
    NonAscent,
    SolverFailure,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterateRecord {
    pub k: usize,
    /// Restricted optimum accepted at this step; `t_0` is the restricted
    /// objective of the initial point around itself.
    pub t: f64,
    /// True objective at `w_k`.
    pub objective: f64,
    /// `||Q w_k||_2 / ||Q w_k||_{p*}`.
    pub ratio: f64,
    pub solver_iterations: usize,
    pub millis: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterateTrace {
    pub records: Vec<IterateRecord>,
    pub stop: StopReason,
    /// `t_{k+1} >= t_k - ASCENT_TOL` for every consecutive pair.
    pub monotone: bool,
}

impl IterateTrace {
    fn new() -> Self {
        IterateTrace {
            records: Vec::new(),
            stop: StopReason::MaxIterations,
            monotone: true,
        }
    }

    fn push(&mut self, rec: IterateRecord) {
        if let Some(prev) = self.records.last() {
            if rec.t < prev.t - ASCENT_TOL {
                self.monotone = false;
            }
        }
        self.records.push(rec);
    }

    /// Number of SOCPs solved.
    pub fn steps(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    /// `true` if the norm ratio never decreased (beyond `ASCENT_TOL`).
    pub fn ratio_nondecreasing(&self) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].ratio >= w[0].ratio - ASCENT_TOL)
    }

    pub fn total_millis(&self) -> f64 {
        self.records.iter().map(|r| r.millis).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequentialResult {
    /// Best iterate by true objective.
    pub beam: BeamVector,
    /// Last accepted restricted optimum.
    pub t: f64,
    /// True objective of `beam`.
    pub objective: f64,
    pub trace: IterateTrace,
}

/// Runs the sequential restriction from [`initial_point`] with the built-in
/// solver.
pub fn solve_sequential(
    problem: &RabProblem,
    rule: &StoppingRule,
    cfg: &SolverConfig,
) -> Result<SequentialResult, RabError> {
    let w0 = initial_point(problem)?;
    solve_sequential_from(problem, &w0.w, rule, &InteriorPoint { config: *cfg })
}

/// Runs the sequential restriction from a given feasible `w0`.
///
/// Each SOCP solution is scaled back into the constraint set if the solver
/// left it slightly outside, and its restricted objective is recomputed
/// exactly. A solution that does not beat the reference point under the
/// same restriction is replaced by the reference point, which keeps
/// `t_k` nondecreasing whenever the minorant is tight at the reference
/// (`p = 2`).
pub fn solve_sequential_from<S: ConeSolver + ?Sized>(
    problem: &RabProblem,
    w0: &CVector,
    rule: &StoppingRule,
    solver: &S,
) -> Result<SequentialResult, RabError> {
    if !(rule.alpha > 0.0) {
        return Err(RabError::InvalidProblem(format!("alpha = {}", rule.alpha)));
    }
    let w0 = problem.project_feasible(w0);
    let template = build_template(problem)?;
    let p_is_two = problem.spec.p.is_two();

    let mut trace = IterateTrace::new();
    let mut w_k = w0.clone();
    let mut t_k = problem.restriction_value(&w_k, &w_k)?;
    let obj0 = objective(problem, &w_k);
    trace.push(IterateRecord {
        k: 0,
        t: t_k,
        objective: obj0,
        ratio: problem.norm_ratio(&w_k),
        solver_iterations: 0,
        millis: 0.0,
    });
    let mut best = (w_k.clone(), obj0);

    let result = |best: &(CVector, f64), t: f64, trace: IterateTrace| SequentialResult {
        beam: BeamVector { w: best.0.clone() },
        t,
        objective: best.1,
        trace,
    };

    for k in 1..=rule.max_iter {
        let started = Instant::now();
        let restriction = instantiate(problem, &template, &w_k)?;
        let sol = solver.solve(&restriction.program)?;
        let millis = started.elapsed().as_secs_f64() * 1e3;

        if sol.status != Status::Optimal {
            trace.stop = StopReason::SolverFailure;
            let partial = Box::new(result(&best, t_k, trace));
            return Err(if sol.status == Status::PrimalInfeasible {
                RabError::InfeasibleRestriction {
                    iteration: k,
                    partial,
                }
            } else {
                RabError::SubproblemFailed {
                    iteration: k,
                    status: sol.status,
                    partial,
                }
            });
        }

        let candidate = problem.project_feasible(&complex_values(&restriction.w, &sol.values));
        let t_candidate = problem.restriction_value(&w_k, &candidate)?;
        let t_reference = problem.restriction_value(&w_k, &w_k)?;
        let (w_next, t_next) = if t_candidate >= t_reference {
            (candidate, t_candidate)
        } else {
            (w_k.clone(), t_reference)
        };

        let obj = objective(problem, &w_next);
        trace.push(IterateRecord {
            k,
            t: t_next,
            objective: obj,
            ratio: problem.norm_ratio(&w_next),
            solver_iterations: sol.iterations,
            millis,
        });
        if obj > best.1 {
            best = (w_next.clone(), obj);
        }
        let delta = t_next - t_k;
        w_k = w_next;
        t_k = t_next;

        if !p_is_two && delta < -ASCENT_TOL {
            trace.stop = StopReason::NonAscent;
            return Ok(result(&best, t_k, trace));
        }
        if delta <= rule.alpha {
            trace.stop = StopReason::Threshold;
            return Ok(result(&best, t_k, trace));
        }
    }
    trace.stop = StopReason::MaxIterations;
    Ok(result(&best, t_k, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::socp::solve;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn r(s: &str) -> ExtRational {
        s.parse().unwrap()
    }

    fn cgauss(rng: &mut ChaCha8Rng, m: usize, n: usize) -> CMatrix {
        CMatrix::from_fn(m, n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn random_problem(seed: u64, n: usize, p: &str, q: &str, eta: f64) -> RabProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = cgauss(&mut rng, n + 2, n);
        let qm = cgauss(&mut rng, 2, n);
        RabProblem::new(
            HermitianMatrix::gram(&b),
            qm,
            0.1,
            UncertaintySpec::new(r(p), r(q), eta).unwrap(),
            Constraint::Quadratic,
        )
        .unwrap()
    }

    #[test]
    fn objective_examples() {
        let prob = RabProblem::new(
            HermitianMatrix::identity(2),
            CMatrix::identity(2, 2),
            1.0,
            UncertaintySpec::new(ExtRational::TWO, ExtRational::ONE, 0.3).unwrap(),
            Constraint::Quadratic,
        )
        .unwrap();
        let w = CVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        assert!((objective(&prob, &w) - 0.7).abs() < 1e-15);
        assert_eq!(objective(&prob, &CVector::zeros(2)), 0.0);
        assert!((worst_case_sinr(&prob, &w) - 0.49).abs() < 1e-15);
        assert_eq!(worst_case_sinr(&prob, &(w * Complex64::new(0.0, 0.0))), 0.0);
    }

    #[test]
    fn identity_initial_point() {
        let prob = RabProblem::new(
            HermitianMatrix::identity(3),
            CMatrix::identity(3, 3),
            1.0,
            UncertaintySpec::new(ExtRational::TWO, ExtRational::TWO, 0.0).unwrap(),
            Constraint::Quadratic,
        )
        .unwrap();
        let w0 = initial_point(&prob).unwrap().w;
        assert!((w0.norm() - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((prob.constraint_value(&w0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_one_initial_point_follows_loaded_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 4;
        let b = cgauss(&mut rng, 6, n);
        let qrow = cgauss(&mut rng, 1, n);
        let prob = RabProblem::new(
            HermitianMatrix::gram(&b),
            qrow.clone(),
            0.5,
            UncertaintySpec::new(ExtRational::TWO, ExtRational::TWO, 0.0).unwrap(),
            Constraint::Quadratic,
        )
        .unwrap();
        let w0 = initial_point(&prob).unwrap().w;
        // Direction (R̂ + γI)^{-1} q with q = (row)^H, via a dense LU oracle.
        let loaded = prob.r_hat().shifted(0.5).into_matrix();
        let target = loaded
            .lu()
            .solve(&qrow.adjoint().column(0).into_owned())
            .unwrap();
        let cos = target.dotc(&w0).norm() / (target.norm() * w0.norm());
        assert!((cos - 1.0).abs() < 1e-10, "{cos}");
        assert!((prob.constraint_value(&w0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn restriction_tight_at_reference_for_p2() {
        for q in ["1", "3/2", "2", "4", "inf"] {
            let prob = random_problem(3, 4, "2", q, 0.2);
            let w0 = initial_point(&prob).unwrap().w;
            let rv = prob.restriction_value(&w0, &w0).unwrap();
            assert!((rv - objective(&prob, &w0)).abs() < 1e-12);
            // The built program admits (w0, t = objective(w0)) up to rounding.
            let res = build_restriction(&prob, &w0).unwrap();
            let row = res.program.nonnegatives().last().unwrap();
            let mut x = vec![0.0; res.program.num_vars()];
            for (z, v) in res.w.iter().zip(w0.iter()) {
                x[z.re.index()] = v.re;
                x[z.im.index()] = v.im;
            }
            x[res.t.index()] = rv;
            // Set s to ||w0||_q as the epigraph allows.
            let s_idx = res.t.index() + 1;
            x[s_idx] = vec_norm(w0.as_slice(), prob.spec().q);
            assert!(row.eval(&x).abs() < 1e-12);
        }
    }

    #[test]
    fn restriction_underestimates_for_general_p() {
        for p in ["1", "3/2", "4", "inf"] {
            let prob = random_problem(4, 4, p, "2", 0.1);
            let w0 = initial_point(&prob).unwrap().w;
            let qw = prob.q() * &w0;
            let lin = qw.norm_squared() / vec_norm(qw.as_slice(), prob.dual_order());
            assert!(lin <= vec_norm(qw.as_slice(), prob.spec().p) + 1e-12);
            let rv = prob.restriction_value(&w0, &w0).unwrap();
            assert!((rv - (lin - 0.1 * w0.norm())).abs() < 1e-12);
        }
    }

    #[test]
    fn single_step_point_is_feasible() {
        let prob = random_problem(5, 5, "2", "2", 0.0);
        let w0 = initial_point(&prob).unwrap().w;
        let res = build_restriction(&prob, &w0).unwrap();
        let sol = solve(&res.program, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        let w = complex_values(&res.w, &sol.values);
        assert!(prob.constraint_value(&w) <= 1.0 + 1e-7);
        let t = sol.value(res.t);
        assert!(t <= objective(&prob, &w) + 1e-8);
    }

    #[test]
    fn zero_radius_reaches_pencil_eigenvalue() {
        let prob = random_problem(6, 5, "2", "2", 0.0);
        let out =
            solve_sequential(&prob, &StoppingRule::default(), &SolverConfig::default()).unwrap();
        // Oracle: eigenvalues of (R̂ + γI)^{-1} Q^H Q from a general
        // eigen-solver on the real embedding.
        let loaded = prob.r_hat().shifted(prob.gamma()).into_matrix();
        let m = loaded.lu().solve(&(prob.q().adjoint() * prob.q())).unwrap();
        let n = m.nrows();
        let emb = nalgebra::DMatrix::from_fn(2 * n, 2 * n, |i, j| {
            let z = m[(i % n, j % n)];
            match (i < n, j < n) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        });
        let lmax = emb
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((out.objective - lmax.sqrt()).abs() < 1e-6 * lmax.sqrt());
        assert!(out.trace.monotone);
    }

    #[test]
    fn p2_traces_are_monotone_and_exact() {
        for (seed, q) in [(7, "1"), (8, "3/2"), (9, "4"), (10, "inf")] {
            let prob = random_problem(seed, 4, "2", q, 0.3);
            let out = solve_sequential(&prob, &StoppingRule::default(), &SolverConfig::default())
                .unwrap();
            assert!(out.trace.monotone, "q={q}");
            assert_eq!(out.trace.stop, StopReason::Threshold);
            for rec in &out.trace.records {
                assert!(rec.t <= rec.objective + 1e-8);
            }
        }
    }

    #[test]
    fn robust_norm_iterates_stay_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 4;
        let b = cgauss(&mut rng, n + 3, n);
        let r_hat = HermitianMatrix::gram(&b);
        let p_mat = crate::linalg::gram_factor(&r_hat, 1e-10).unwrap();
        let prob = RabProblem::new(
            r_hat,
            cgauss(&mut rng, 2, n),
            0.1,
            UncertaintySpec::new(ExtRational::TWO, r("3/2"), 0.1).unwrap(),
            Constraint::RobustNorm {
                p: p_mat,
                spec: UncertaintySpec::new(r("4"), ExtRational::ONE, 0.05).unwrap(),
            },
        )
        .unwrap();
        let w0 = initial_point(&prob).unwrap().w;
        assert!(prob.constraint_value(&w0) <= 1.0);
        let out =
            solve_sequential(&prob, &StoppingRule::default(), &SolverConfig::default()).unwrap();
        assert!(prob.constraint_value(&out.beam.w) <= 1.0 + 1e-7);
        assert!(out.trace.monotone);
        assert!(out.objective >= objective(&prob, &w0) - 1e-9);
    }

    #[test]
    fn rejects_invalid_problems() {
        let bad_gamma = RabProblem::new(
            HermitianMatrix::identity(2),
            CMatrix::identity(2, 2),
            0.0,
            UncertaintySpec::new(ExtRational::TWO, ExtRational::TWO, 0.0).unwrap(),
            Constraint::Quadratic,
        );
        assert!(bad_gamma.is_err());
        let zero_q = RabProblem::new(
            HermitianMatrix::identity(2),
            CMatrix::zeros(1, 2),
            1.0,
            UncertaintySpec::new(ExtRational::TWO, ExtRational::TWO, 0.0).unwrap(),
            Constraint::Quadratic,
        );
        assert!(zero_q.is_err());
    }
}
