//! Solver-agnostic cone programs.
//!
//! A [`ConeProgram`] has real scalar variables, an affine objective that is
//! maximized, and three constraint classes:
//!
//! - linear equalities `e(x) = 0`,
//! - nonnegativity `e(x) >= 0`,
//! - second-order cones `||(u_1(x), ..., u_k(x))||_2 <= t(x)`.
//!
//! All expressions are affine. Complex decision variables are embedded as
//! `(re, im)` pairs of real variables; see [`ComplexVarRef`] and
//! [`ComplexAffine`].

mod dump;
mod epigraph;

pub use epigraph::{
    geo_mean_tower, lq_epigraph, lq_epigraph_affine, modulus_epigraph, modulus_epigraph_affine,
    power_epigraph, quad_constraint,
};

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{CMatrix, CVector};

static NEXT_PROGRAM_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConeError {
    #[error("variable {index} does not belong to this program")]
    ForeignVar { index: usize },
    #[error("second-order cone block needs at least one component")]
    EmptySoc,
    #[error("non-finite coefficient in constraint data")]
    NonFinite,
    #[error("geometric-mean tower needs at least one leaf")]
    EmptyLeaves,
    #[error("invalid exponent for this construction: {0}")]
    InvalidExponent(String),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("program has no variables")]
    NoVariables,
}

/// Handle to one real variable of a specific [`ConeProgram`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId {
    program: u64,
    index: usize,
}

impl VarId {
    pub fn index(&self) -> usize {
        self.index
    }
}

/// Sparse affine expression `Σ c_i x_i + constant` with unique variables.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AffineExpr {
    terms: Vec<(VarId, f64)>,
    constant: f64,
}

impl AffineExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        AffineExpr {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn term(v: VarId, coeff: f64) -> Self {
        let mut e = Self::zero();
        e.add_term(v, coeff);
        e
    }

    /// Adds `coeff · v`, merging with an existing term for `v`.
    pub fn add_term(&mut self, v: VarId, coeff: f64) {
        if let Some(slot) = self.terms.iter_mut().find(|(id, _)| *id == v) {
            slot.1 += coeff;
        } else {
            self.terms.push((v, coeff));
        }
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    pub fn terms(&self) -> &[(VarId, f64)] {
        &self.terms
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    pub fn is_finite(&self) -> bool {
        self.constant.is_finite() && self.terms.iter().all(|(_, c)| c.is_finite())
    }

    /// Value at a full assignment indexed by [`VarId::index`].
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(v, c)| c * x[v.index]).sum::<f64>() + self.constant
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for t in &mut self.terms {
            t.1 *= factor;
        }
        self.constant *= factor;
        self
    }
}

impl From<VarId> for AffineExpr {
    fn from(v: VarId) -> Self {
        AffineExpr::term(v, 1.0)
    }
}

impl From<f64> for AffineExpr {
    fn from(c: f64) -> Self {
        AffineExpr::constant(c)
    }
}

impl Add for AffineExpr {
    type Output = AffineExpr;
    fn add(mut self, rhs: AffineExpr) -> AffineExpr {
        for (v, c) in rhs.terms {
            self.add_term(v, c);
        }
        self.constant += rhs.constant;
        self
    }
}

impl Sub for AffineExpr {
    type Output = AffineExpr;
    fn sub(self, rhs: AffineExpr) -> AffineExpr {
        self + rhs.scaled(-1.0)
    }
}

impl Neg for AffineExpr {
    type Output = AffineExpr;
    fn neg(self) -> AffineExpr {
        self.scaled(-1.0)
    }
}

impl Mul<AffineExpr> for f64 {
    type Output = AffineExpr;
    fn mul(self, rhs: AffineExpr) -> AffineExpr {
        rhs.scaled(self)
    }
}

/// One complex scalar decision variable as a pair of real variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComplexVarRef {
    pub re: VarId,
    pub im: VarId,
}

/// Complex affine expression in real-embedded form.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ComplexAffine {
    pub re: AffineExpr,
    pub im: AffineExpr,
}

impl From<ComplexVarRef> for ComplexAffine {
    fn from(z: ComplexVarRef) -> Self {
        ComplexAffine {
            re: z.re.into(),
            im: z.im.into(),
        }
    }
}

impl ComplexAffine {
    pub fn eval(&self, x: &[f64]) -> Complex64 {
        Complex64::new(self.re.eval(x), self.im.eval(x))
    }
}

/// Rows of `M w` for a complex matrix `M` acting on complex variables `w`.
pub fn complex_linear_map(
    m: &CMatrix,
    w: &[ComplexVarRef],
) -> Result<Vec<ComplexAffine>, ConeError> {
    if m.ncols() != w.len() {
        return Err(ConeError::DimensionMismatch {
            expected: m.ncols(),
            found: w.len(),
        });
    }
    Ok((0..m.nrows())
        .map(|i| {
            let mut out = ComplexAffine::default();
            for (k, z) in w.iter().enumerate() {
                let a = m[(i, k)];
                if a.re != 0.0 {
                    out.re.add_term(z.re, a.re);
                    out.im.add_term(z.im, a.re);
                }
                if a.im != 0.0 {
                    out.re.add_term(z.im, -a.im);
                    out.im.add_term(z.re, a.im);
                }
            }
            out
        })
        .collect())
}

/// `Re(c^H w)` as a real affine expression.
pub fn real_inner(c: &CVector, w: &[ComplexVarRef]) -> Result<AffineExpr, ConeError> {
    if c.len() != w.len() {
        return Err(ConeError::DimensionMismatch {
            expected: c.len(),
            found: w.len(),
        });
    }
    let mut e = AffineExpr::zero();
    for (ck, z) in c.iter().zip(w) {
        e.add_term(z.re, ck.re);
        e.add_term(z.im, ck.im);
    }
    Ok(e)
}

/// Reads complex values back out of a primal assignment.
pub fn complex_values(w: &[ComplexVarRef], x: &[f64]) -> CVector {
    CVector::from_iterator(
        w.len(),
        w.iter()
            .map(|z| Complex64::new(x[z.re.index], x[z.im.index])),
    )
}

/// `||u||_2 <= t`.
#[derive(Clone, Debug, PartialEq)]
pub struct SocBlock {
    pub t: AffineExpr,
    pub u: Vec<AffineExpr>,
}

impl SocBlock {
    pub fn dim(&self) -> usize {
        1 + self.u.len()
    }
}

#[derive(Clone, Debug)]
pub struct ConeProgram {
    id: u64,
    names: Vec<String>,
    objective: AffineExpr,
    equalities: Vec<AffineExpr>,
    nonneg: Vec<AffineExpr>,
    socs: Vec<SocBlock>,
}

impl Default for ConeProgram {
    fn default() -> Self {
        Self::new()
    }
}

impl ConeProgram {
    pub fn new() -> Self {
        ConeProgram {
            id: NEXT_PROGRAM_ID.fetch_add(1, Ordering::Relaxed),
            names: Vec::new(),
            objective: AffineExpr::zero(),
            equalities: Vec::new(),
            nonneg: Vec::new(),
            socs: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> VarId {
        self.names.push(name.into());
        VarId {
            program: self.id,
            index: self.names.len() - 1,
        }
    }

    pub fn add_complex_var(&mut self, name: &str) -> ComplexVarRef {
        ComplexVarRef {
            re: self.add_var(format!("{name}.re")),
            im: self.add_var(format!("{name}.im")),
        }
    }

    pub fn add_complex_vars(&mut self, name: &str, n: usize) -> Vec<ComplexVarRef> {
        (0..n)
            .map(|i| self.add_complex_var(&format!("{name}[{i}]")))
            .collect()
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.names[v.index]
    }

    pub fn var_names(&self) -> &[String] {
        &self.names
    }

    pub fn owns(&self, v: VarId) -> bool {
        v.program == self.id && v.index < self.names.len()
    }

    fn check(&self, e: &AffineExpr) -> Result<(), ConeError> {
        if let Some((v, _)) = e.terms.iter().find(|(v, _)| !self.owns(*v)) {
            return Err(ConeError::ForeignVar { index: v.index });
        }
        if !e.is_finite() {
            return Err(ConeError::NonFinite);
        }
        Ok(())
    }

    /// Sets the objective to be maximized.
    pub fn maximize(&mut self, objective: AffineExpr) -> Result<(), ConeError> {
        self.check(&objective)?;
        self.objective = objective;
        Ok(())
    }

    pub fn add_equality(&mut self, e: AffineExpr) -> Result<(), ConeError> {
        self.check(&e)?;
        self.equalities.push(e);
        Ok(())
    }

    /// `e >= 0`.
    pub fn add_nonneg(&mut self, e: AffineExpr) -> Result<(), ConeError> {
        self.check(&e)?;
        self.nonneg.push(e);
        Ok(())
    }

    /// `lhs <= rhs`.
    pub fn add_le(&mut self, lhs: AffineExpr, rhs: AffineExpr) -> Result<(), ConeError> {
        self.add_nonneg(rhs - lhs)
    }

    pub fn add_soc(&mut self, t: AffineExpr, u: Vec<AffineExpr>) -> Result<(), ConeError> {
        if u.is_empty() {
            return Err(ConeError::EmptySoc);
        }
        self.check(&t)?;
        for e in &u {
            self.check(e)?;
        }
        self.socs.push(SocBlock { t, u });
        Ok(())
    }

    pub fn objective(&self) -> &AffineExpr {
        &self.objective
    }

    pub fn equalities(&self) -> &[AffineExpr] {
        &self.equalities
    }

    pub fn nonnegatives(&self) -> &[AffineExpr] {
        &self.nonneg
    }

    pub fn socs(&self) -> &[SocBlock] {
        &self.socs
    }

    /// Structural well-formedness.
    pub fn validate(&self) -> Result<(), ConeError> {
        if self.names.is_empty() {
            return Err(ConeError::NoVariables);
        }
        self.check(&self.objective)?;
        for e in self.equalities.iter().chain(&self.nonneg) {
            self.check(e)?;
        }
        for b in &self.socs {
            if b.u.is_empty() {
                return Err(ConeError::EmptySoc);
            }
            self.check(&b.t)?;
            for e in &b.u {
                self.check(e)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn affine_expr_merges_duplicates() {
        let mut p = ConeProgram::new();
        let x = p.add_var("x");
        let y = p.add_var("y");
        let e = AffineExpr::from(x) + 2.0 * AffineExpr::from(y) - AffineExpr::term(x, 3.0)
            + AffineExpr::constant(1.5);
        assert_eq!(e.terms().len(), 2);
        assert_eq!(e.eval(&[1.0, 1.0]), -2.0 + 2.0 + 1.5);
    }

    #[test]
    fn dangling_ids_are_rejected() {
        let mut a = ConeProgram::new();
        let mut b = ConeProgram::new();
        let xa = a.add_var("x");
        let _ = b.add_var("x");
        assert!(matches!(
            b.add_nonneg(xa.into()),
            Err(ConeError::ForeignVar { .. })
        ));
        assert!(a.add_nonneg(xa.into()).is_ok());
        assert_eq!(a.add_soc(xa.into(), vec![]), Err(ConeError::EmptySoc));
        assert_eq!(
            a.add_nonneg(AffineExpr::term(xa, f64::NAN)),
            Err(ConeError::NonFinite)
        );
        assert_eq!(ConeProgram::new().validate(), Err(ConeError::NoVariables));
    }

    #[test]
    fn complex_embedding_preserves_inner_products() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut p = ConeProgram::new();
        let n = 6;
        let w = p.add_complex_vars("w", n);
        for _ in 0..50 {
            let c = CVector::from_fn(n, |_, _| Complex64::new(rng.random(), rng.random()));
            let wv = CVector::from_fn(n, |_, _| {
                Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            let mut x = vec![0.0; p.num_vars()];
            for (z, val) in w.iter().zip(wv.iter()) {
                x[z.re.index()] = val.re;
                x[z.im.index()] = val.im;
            }
            let e = real_inner(&c, &w).unwrap();
            assert!((e.eval(&x) - c.dotc(&wv).re).abs() < 1e-12);

            let m = CMatrix::from_fn(3, n, |_, _| Complex64::new(rng.random(), rng.random()));
            let rows = complex_linear_map(&m, &w).unwrap();
            let direct = &m * &wv;
            for (r, d) in rows.iter().zip(direct.iter()) {
                assert!((r.eval(&x) - d).norm() < 1e-12);
            }
            assert_eq!(complex_values(&w, &x), wv);
        }
    }
}
