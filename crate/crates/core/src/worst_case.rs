//! Worst-case residuals over induced-norm uncertainty balls
//!
//! ```text
//! U_{p,q}(η) = { Δ : ||Δ v||_p <= η ||v||_q for all v }
//! ```
//!
//! For the perturbed residual `||(A + Δ) x - b||_p` over `Δ in U_{p,q}(η)`:
//!
//! - the minimum is `max(||Ax - b||_p - η ||x||_q, 0)`, attained by an
//!   explicit rank-one `Δ̂` ([`worst_case_delta`]);
//! - the maximum is `||Ax - b||_p + η ||x||_q`.
//!
//! Both closed forms rest on the Hölder pair `(ŷ, x)` with
//! `ŷ^H x = ||x||_q` and `||ŷ||_{q*} = 1` ([`dual_norm_maximizer`]).
//! [`adversarial_sample`] probes both bounds with certified members of the
//! ball.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::{induced_norm_closed_form, phase, vec_norm, CMatrix, CVector, ExtRational};
use crate::Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorstCaseError {
    #[error("vector must be nonzero")]
    ZeroVector,
    #[error("dimension mismatch: A is {rows}x{cols}, x has {x}, b has {b}")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        x: usize,
        b: usize,
    },
    #[error("radius must be finite and nonnegative, got {0}")]
    InvalidRadius(f64),
}

/// The ball `U_{p,q}(η)`: `p` measures outputs, `q` inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UncertaintySpec {
    pub p: ExtRational,
    pub q: ExtRational,
    pub eta: f64,
}

impl UncertaintySpec {
    pub fn new(p: ExtRational, q: ExtRational, eta: f64) -> Result<Self, WorstCaseError> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(WorstCaseError::InvalidRadius(eta));
        }
        Ok(UncertaintySpec { p, q, eta })
    }

    /// `true` if `||Δ z||_p <= η ||z||_q + tol` on every probe.
    pub fn admits_on(&self, delta: &CMatrix, probes: &[CVector], tol: f64) -> bool {
        probes.iter().all(|z| {
            vec_norm((delta * z).as_slice(), self.p)
                <= self.eta * vec_norm(z.as_slice(), self.q) + tol
        })
    }
}

/// Which closed-form construction produced a perturbation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// `||Ax - b||_p >= η ||x||_q`: shrinks the residual by `η ||x||_q`.
    Shrink,
    /// `||Ax - b||_p < η ||x||_q`: cancels the residual, strictly inside the ball.
    Cancel,
    /// `Ax = b` with nothing to remove.
    Zero,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationMatrix {
    pub delta: CMatrix,
    pub branch: Branch,
}

fn check_dims(a: &CMatrix, x: &CVector, b: &CVector) -> Result<(), WorstCaseError> {
    if a.ncols() != x.len() || a.nrows() != b.len() {
        return Err(WorstCaseError::DimensionMismatch {
            rows: a.nrows(),
            cols: a.ncols(),
            x: x.len(),
            b: b.len(),
        });
    }
    Ok(())
}

/// `Ax - b`.
pub fn residual(a: &CMatrix, x: &CVector, b: &CVector) -> CVector {
    a * x - b
}

/// `||(A + Δ) x - b||_p`.
pub fn perturbed_residual_norm(
    a: &CMatrix,
    delta: &CMatrix,
    x: &CVector,
    b: &CVector,
    p: ExtRational,
) -> f64 {
    vec_norm(((a + delta) * x - b).as_slice(), p)
}

/// `ŷ` with `||ŷ||_{q*} = 1` and `ŷ^H x = ||x||_q`.
///
/// Ties for `q = inf` go to the lowest index; zero entries of `x` map to
/// zero for `q = 1`.
pub fn dual_norm_maximizer(x: &CVector, q: ExtRational) -> Result<CVector, WorstCaseError> {
    let xn = vec_norm(x.as_slice(), q);
    if xn == 0.0 {
        return Err(WorstCaseError::ZeroVector);
    }
    let unit = |z: Complex64| Complex64::from_polar(1.0, phase(z));
    let y = match q {
        ExtRational::Infinity => {
            let big = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let k = x.iter().position(|z| z.norm() == big).unwrap_or(0);
            let mut y = CVector::zeros(x.len());
            y[k] = unit(x[k]);
            y
        }
        _ if q.is_one() => x.map(|z| {
            if z.norm() == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                unit(z)
            }
        }),
        _ => {
            let qm1 = q.value() - 1.0;
            x.map(|z| unit(z) * (z.norm() / xn).powf(qm1))
        }
    };
    Ok(y)
}

/// `min_{Δ in U} ||(A + Δ) x - b||_p = max(||Ax - b||_p - η ||x||_q, 0)`.
pub fn min_residual_value(
    a: &CMatrix,
    x: &CVector,
    b: &CVector,
    spec: &UncertaintySpec,
) -> Result<f64, WorstCaseError> {
    check_dims(a, x, b)?;
    let rn = vec_norm(residual(a, x, b).as_slice(), spec.p);
    let xn = vec_norm(x.as_slice(), spec.q);
    Ok((rn - spec.eta * xn).max(0.0))
}

/// Frobenius-ball counterpart `max(||Ax - b||_2 - η ||x||_2, 0)` of the
/// Euclidean case.
pub fn frobenius_min_residual(
    a: &CMatrix,
    x: &CVector,
    b: &CVector,
    eta: f64,
) -> Result<f64, WorstCaseError> {
    check_dims(a, x, b)?;
    let r = residual(a, x, b);
    let rn = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let xn = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok((rn - eta * xn).max(0.0))
}

/// `max_{Δ in U} ||(A + Δ) x - b||_p = ||Ax - b||_p + η ||x||_q`.
pub fn max_residual_value(
    a: &CMatrix,
    x: &CVector,
    b: &CVector,
    spec: &UncertaintySpec,
) -> Result<f64, WorstCaseError> {
    check_dims(a, x, b)?;
    let rn = vec_norm(residual(a, x, b).as_slice(), spec.p);
    Ok(rn + spec.eta * vec_norm(x.as_slice(), spec.q))
}

/// Rank-one minimizer of the perturbed residual over `U_{p,q}(η)`.
pub fn worst_case_delta(
    a: &CMatrix,
    x: &CVector,
    b: &CVector,
    spec: &UncertaintySpec,
) -> Result<PerturbationMatrix, WorstCaseError> {
    check_dims(a, x, b)?;
    let y = dual_norm_maximizer(x, spec.q)?;
    let r = residual(a, x, b);
    let rn = vec_norm(r.as_slice(), spec.p);
    let xn = vec_norm(x.as_slice(), spec.q);
    let rot = Complex64::from_polar(1.0, -phase(y.dotc(x)));
    let outer = |scale: f64| -> CMatrix { &r * y.adjoint() * (rot * -scale) };
    if rn >= spec.eta * xn {
        if rn == 0.0 {
            return Ok(PerturbationMatrix {
                delta: CMatrix::zeros(a.nrows(), a.ncols()),
                branch: Branch::Zero,
            });
        }
        Ok(PerturbationMatrix {
            delta: outer(spec.eta / rn),
            branch: Branch::Shrink,
        })
    } else {
        Ok(PerturbationMatrix {
            delta: outer(1.0 / xn),
            branch: Branch::Cancel,
        })
    }
}

/// Extremes of the perturbed residual over sampled members of the ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdversarialExtremes {
    pub min: f64,
    pub max: f64,
}

/// A certified upper bound on `||D||_{p,q}`: the exact value when a closed
/// form exists, otherwise the smaller of the bounds through `||.||_{p,1}`
/// and `||.||_{inf,q}`.
fn induced_norm_upper(d: &CMatrix, p: ExtRational, q: ExtRational) -> f64 {
    if let Some(v) = induced_norm_closed_form(d, p, q) {
        return v;
    }
    let (m, n) = (d.nrows() as f64, d.ncols() as f64);
    // ||v||_1 <= n^{1 - 1/q} ||v||_q and ||u||_p <= m^{1/p} ||u||_inf.
    let inv_q = if q.is_infinite() {
        0.0
    } else {
        1.0 / q.value()
    };
    let inv_p = if p.is_infinite() {
        0.0
    } else {
        1.0 / p.value()
    };
    let via_cols = induced_norm_closed_form(d, p, ExtRational::ONE).unwrap_or(f64::INFINITY)
        * n.powf(1.0 - inv_q);
    let via_rows = induced_norm_closed_form(d, ExtRational::INFINITY, q).unwrap_or(f64::INFINITY)
        * m.powf(inv_p);
    // Round up against the floating-point error of the closed forms.
    via_cols.min(via_rows) * (1.0 + 1e-12)
}

fn gaussian_cvec<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    CVector::from_fn(n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Evaluates the perturbed residual at `count` members of `U_{p,q}(η)`.
///
/// Candidates alternate between the tight rank-one family
/// `σ u ŷ(v)^H` with `||u||_p = η` and dense Gaussian matrices scaled by a
/// certified upper bound on their induced norm, with `σ` uniform in `[0, 1]`
/// and every fourth candidate on the boundary.
pub fn adversarial_sample<R: Rng + ?Sized>(
    a: &CMatrix,
    x: &CVector,
    b: &CVector,
    spec: &UncertaintySpec,
    count: usize,
    rng: &mut R,
) -> Result<AdversarialExtremes, WorstCaseError> {
    check_dims(a, x, b)?;
    let (m, n) = (a.nrows(), a.ncols());
    let r = residual(a, x, b);
    let rn = vec_norm(r.as_slice(), spec.p);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..count.max(1) {
        let sigma = if k % 4 == 0 { 1.0 } else { rng.random::<f64>() };
        let delta: CMatrix = if k % 2 == 0 {
            // Output direction: random, or (anti-)aligned with the residual.
            let mut u = match k % 3 {
                0 if rn > 0.0 => {
                    let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    let rot = Complex64::from_polar(s, rng.random::<f64>() * 0.2 - 0.1);
                    r.map(|z| z * rot)
                }
                _ => gaussian_cvec(m, rng),
            };
            let un = vec_norm(u.as_slice(), spec.p);
            if un > 0.0 {
                u /= Complex64::new(un, 0.0);
            }
            // Input direction: x itself, or a random vector.
            let v = if k % 5 == 0 {
                x.clone()
            } else {
                gaussian_cvec(n, rng)
            };
            match dual_norm_maximizer(&v, spec.q) {
                Ok(y) => &u * y.adjoint() * Complex64::new(sigma * spec.eta, 0.0),
                Err(_) => CMatrix::zeros(m, n),
            }
        } else {
            let d = DMatrix::from_fn(m, n, |_, _| {
                Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            let bound = induced_norm_upper(&d, spec.p, spec.q);
            if bound > 0.0 {
                d * Complex64::new(sigma * spec.eta / bound, 0.0)
            } else {
                CMatrix::zeros(m, n)
            }
        };
        let v = perturbed_residual_norm(a, &delta, x, b, spec.p);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(AdversarialExtremes { min: lo, max: hi })
}
