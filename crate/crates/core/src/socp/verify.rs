//! Direct residual evaluation of a candidate primal-dual pair.
//!
//! With multipliers `y` (equalities), `z_i ≥ 0` (nonnegatives) and
//! `z_j ∈ Q` (cones), the Lagrangian of `maximize o^T x + o0` gives
//!
//! ```text
//! stationarity:  o = Σ y_k a_k - Σ z_i f_i        (linear parts)
//! dual value:    o0 - Σ y_k a_k0 + Σ z_i f_i0     (constant parts)
//! ```
//!
//! so that `dual - primal = Σ z_i f_i(x) - Σ y_k e_k(x) ≥ 0` at any feasible
//! pair.

use crate::cone_ir::{AffineExpr, ConeProgram};

use super::Solution;

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `|e_k(x)|` per equality.
    pub equality: Vec<f64>,
    /// `max(0, -f_i(x))` per nonnegative constraint.
    pub nonneg: Vec<f64>,
    /// `max(0, ||u(x)|| - t(x))` per cone.
    pub soc: Vec<f64>,
    /// Euclidean norm of the stationarity residual.
    pub stationarity: f64,
    /// Largest violation of dual cone membership.
    pub dual_cone: f64,
}

impl ResidualReport {
    pub fn max_equality(&self) -> f64 {
        self.equality.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_nonneg(&self) -> f64 {
        self.nonneg.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_soc(&self) -> f64 {
        self.soc.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_primal_violation(&self) -> f64 {
        self.max_equality()
            .max(self.max_nonneg())
            .max(self.max_soc())
    }

    pub fn gap(&self) -> f64 {
        self.dual_objective - self.primal_objective
    }

    /// Gap relative to `max(1, |primal|)`.
    pub fn relative_gap(&self) -> f64 {
        self.gap().abs() / self.primal_objective.abs().max(1.0)
    }

    /// Indices of cones violated by more than `tol`.
    pub fn violated_socs(&self, tol: f64) -> Vec<usize> {
        (0..self.soc.len()).filter(|&i| self.soc[i] > tol).collect()
    }
}

fn accumulate(grad: &mut [f64], e: &AffineExpr, weight: f64) {
    for (v, c) in e.terms() {
        grad[v.index()] += weight * c;
    }
}

/// Evaluates `sol.values` and `sol.duals` against `prog`.
pub fn verify(prog: &ConeProgram, sol: &Solution) -> ResidualReport {
    let x = &sol.values;
    let duals = &sol.duals;
    let mut grad = vec![0.0; prog.num_vars()];
    accumulate(&mut grad, prog.objective(), -1.0);
    let mut dual_objective = prog.objective().constant_term();
    let mut dual_cone = 0.0f64;

    let mut equality = Vec::new();
    for (k, e) in prog.equalities().iter().enumerate() {
        equality.push(e.eval(x).abs());
        let y = duals.equality.get(k).copied().unwrap_or(0.0);
        accumulate(&mut grad, e, y);
        dual_objective -= y * e.constant_term();
    }
    let mut nonneg = Vec::new();
    for (i, f) in prog.nonnegatives().iter().enumerate() {
        nonneg.push((-f.eval(x)).max(0.0));
        let z = duals.nonneg.get(i).copied().unwrap_or(0.0);
        accumulate(&mut grad, f, -z);
        dual_objective += z * f.constant_term();
        dual_cone = dual_cone.max(-z);
    }
    let mut soc = Vec::new();
    for (j, b) in prog.socs().iter().enumerate() {
        let t = b.t.eval(x);
        let u = b.u.iter().map(|e| e.eval(x).powi(2)).sum::<f64>().sqrt();
        soc.push((u - t).max(0.0));
        let zero = vec![0.0; b.dim()];
        let z = duals.soc.get(j).unwrap_or(&zero);
        for (k, e) in std::iter::once(&b.t).chain(&b.u).enumerate() {
            accumulate(&mut grad, e, -z[k]);
            dual_objective += z[k] * e.constant_term();
        }
        let zu = z[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        dual_cone = dual_cone.max(zu - z[0]);
    }

    ResidualReport {
        primal_objective: prog.objective().eval(x),
        dual_objective,
        equality,
        nonneg,
        soc,
        stationarity: grad.iter().map(|g| g * g).sum::<f64>().sqrt(),
        dual_cone,
    }
}
