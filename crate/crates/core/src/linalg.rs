//! Dense complex linear algebra: vector norms, Hermitian factorizations and
//! matrix induced norms.
//!
//! Vectors and matrices are plain `nalgebra` containers over [`Complex64`];
//! the eigen-solver is nalgebra's Householder/QR routine, wrapped so that a
//! non-converged or inaccurate decomposition is an error rather than a wrong
//! answer.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use thiserror::Error;

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

/// Relative asymmetry accepted by [`HermitianMatrix::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Relative reconstruction error accepted from factorizations.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;
/// Default relative eigenvalue cut-off for [`gram_factor`].
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

const EIG_EPS: f64 = 1e-15;
const EIG_MAX_ITER: usize = 10_000;
const INDUCED_NORM_PROBES: usize = 10_000;
const INDUCED_NORM_SEED: u64 = 0x1d0c_ed00_5eed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: ||H - H^H||_F = {asymmetry:e} exceeds tolerance for ||H||_F = {scale:e}")]
    NotHermitian { asymmetry: f64, scale: f64 },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("Hermitian eigen-decomposition did not converge")]
    EigenNoConvergence,
    #[error("eigen-decomposition reconstruction error {error:e} exceeds tolerance")]
    EigenInaccurate { error: f64 },
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("matrix has no positive eigenvalue")]
    ZeroMatrix,
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
}

// ---------------------------------------------------------------------------
// Extended rationals
// ---------------------------------------------------------------------------

/// A norm order: a rational number >= 1 or infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExtRational {
    Finite { num: u64, den: u64 },
    Infinity,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

impl ExtRational {
    pub const ONE: ExtRational = ExtRational::Finite { num: 1, den: 1 };
    pub const TWO: ExtRational = ExtRational::Finite { num: 2, den: 1 };
    pub const INFINITY: ExtRational = ExtRational::Infinity;

    /// `num/den` in lowest terms; the value must be at least one.
    pub fn new(num: u64, den: u64) -> Result<Self, LinalgError> {
        if den == 0 {
            return Err(LinalgError::InvalidExponent(format!("{num}/0")));
        }
        if num < den {
            return Err(LinalgError::InvalidExponent(format!(
                "{num}/{den} is smaller than one"
            )));
        }
        let g = gcd(num, den);
        Ok(ExtRational::Finite {
            num: num / g,
            den: den / g,
        })
    }

    pub fn integer(n: u64) -> Result<Self, LinalgError> {
        Self::new(n, 1)
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtRational::Infinity)
    }

    pub fn is_one(&self) -> bool {
        *self == Self::ONE
    }

    pub fn is_two(&self) -> bool {
        *self == Self::TWO
    }

    /// Floating-point value; infinity maps to `f64::INFINITY`.
    pub fn value(&self) -> f64 {
        match *self {
            ExtRational::Finite { num, den } => num as f64 / den as f64,
            ExtRational::Infinity => f64::INFINITY,
        }
    }

    /// The Hölder conjugate `q*` with `1/q + 1/q* = 1`.
    pub fn conjugate(&self) -> ExtRational {
        match *self {
            ExtRational::Infinity => Self::ONE,
            ExtRational::Finite { num, den } if num == den => ExtRational::Infinity,
            ExtRational::Finite { num, den } => {
                let g = gcd(num, num - den);
                ExtRational::Finite {
                    num: num / g,
                    den: (num - den) / g,
                }
            }
        }
    }
}

impl fmt::Display for ExtRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ExtRational::Infinity => write!(f, "inf"),
            ExtRational::Finite { num, den: 1 } => write!(f, "{num}"),
            ExtRational::Finite { num, den } => write!(f, "{num}/{den}"),
        }
    }
}

impl FromStr for ExtRational {
    type Err = LinalgError;

    /// Accepts `inf`, integers, fractions `a/b` and terminating decimals
    /// such as `1.5`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || LinalgError::InvalidExponent(s.to_string());
        match s.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => return Ok(ExtRational::Infinity),
            _ => {}
        }
        if let Some((a, b)) = s.split_once('/') {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            return ExtRational::new(a, b);
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.is_empty() || frac.len() > 12 || !frac.bytes().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            let int: u64 = if int.is_empty() {
                0
            } else {
                int.parse().map_err(|_| bad())?
            };
            let den = 10u64.pow(frac.len() as u32);
            let frac: u64 = frac.parse().map_err(|_| bad())?;
            return ExtRational::new(int * den + frac, den);
        }
        let n: u64 = s.parse().map_err(|_| bad())?;
        ExtRational::integer(n)
    }
}

// ---------------------------------------------------------------------------
// Hermitian matrices
// ---------------------------------------------------------------------------

/// A square complex matrix equal to its conjugate transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Validates Hermitian symmetry up to [`HERMITIAN_TOL`] (relative to
    /// `||H||_F`) and stores the exactly symmetrized matrix.
    pub fn new(m: CMatrix) -> Result<Self, LinalgError> {
        if m.nrows() != m.ncols() {
            return Err(LinalgError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        let adj = m.adjoint();
        let asymmetry = (&m - &adj).norm();
        let scale = m.norm();
        if asymmetry > HERMITIAN_TOL * scale {
            return Err(LinalgError::NotHermitian { asymmetry, scale });
        }
        let sym = (m + adj).scale(0.5);
        Ok(HermitianMatrix(sym))
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix(CMatrix::identity(n, n))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        HermitianMatrix(CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    /// `B^H B`, Hermitian by construction.
    pub fn gram(b: &CMatrix) -> Self {
        HermitianMatrix::new(b.adjoint() * b).expect("B^H B is Hermitian")
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// `H + shift·I`.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut m = self.0.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += Complex64::new(shift, 0.0);
        }
        HermitianMatrix(m)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        HermitianMatrix(self.0.scale(factor))
    }

    pub fn add(&self, other: &HermitianMatrix) -> Result<Self, LinalgError> {
        if self.dim() != other.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(HermitianMatrix(&self.0 + &other.0))
    }

    /// Real quadratic form `v^H H v`.
    pub fn quad_form(&self, v: &CVector) -> f64 {
        v.dotc(&(&self.0 * v)).re
    }
}

// ---------------------------------------------------------------------------
// Vector norms
// ---------------------------------------------------------------------------

/// `||v||_q`. Exact closed forms for `q` in {1, 2, inf}; otherwise computed
/// from moduli with scaling by the largest modulus to avoid overflow.
pub fn vec_norm(v: &[Complex64], q: ExtRational) -> f64 {
    match q {
        ExtRational::Infinity => v.iter().map(|z| z.norm()).fold(0.0, f64::max),
        _ if q.is_one() => v.iter().map(|z| z.norm()).sum(),
        _ if q.is_two() => v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
        _ => {
            let big = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if big == 0.0 {
                return 0.0;
            }
            let qv = q.value();
            let sum: f64 = v.iter().map(|z| (z.norm() / big).powf(qv)).sum();
            big * sum.powf(1.0 / qv)
        }
    }
}

/// Real-vector counterpart of [`vec_norm`].
pub fn real_norm(v: &[f64], q: ExtRational) -> f64 {
    let c: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    vec_norm(&c, q)
}

/// `arg(z)` with `arg(0) = 0`.
pub fn phase(z: Complex64) -> f64 {
    if z == Complex64::new(0.0, 0.0) {
        0.0
    } else {
        z.arg()
    }
}

// ---------------------------------------------------------------------------
// Factorizations
// ---------------------------------------------------------------------------

/// Eigenvalues in descending order with unitary eigenvector columns.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn max_value(&self) -> f64 {
        self.values[0]
    }

    pub fn principal_vector(&self) -> CVector {
        self.vectors.column(0).into_owned()
    }
}

pub fn hermitian_eig(h: &HermitianMatrix) -> Result<HermitianEigen, LinalgError> {
    let n = h.dim();
    if n == 0 {
        return Ok(HermitianEigen {
            values: Vec::new(),
            vectors: CMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::try_new(h.matrix().clone(), EIG_EPS, EIG_MAX_ITER)
        .ok_or(LinalgError::EigenNoConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(Ordering::Equal)
    });
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);

    let lambda = CMatrix::from_diagonal(&CVector::from_iterator(
        n,
        values.iter().map(|&v| Complex64::new(v, 0.0)),
    ));
    let error = (&vectors * lambda * vectors.adjoint() - h.matrix()).norm();
    let scale = h.frobenius_norm();
    if !(error <= RECONSTRUCTION_TOL * scale.max(f64::MIN_POSITIVE)) && error > 0.0 {
        return Err(LinalgError::EigenInaccurate { error });
    }
    Ok(HermitianEigen { values, vectors })
}

/// Lower-triangular `L` with `L L^H = H`.
pub fn cholesky_psd(h: &HermitianMatrix) -> Result<CMatrix, LinalgError> {
    let n = h.dim();
    let a = h.matrix();
    let max_diag = (0..n).map(|i| a[(i, i)].re).fold(0.0, f64::max);
    let floor = 1e-12 * max_diag;
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > floor) || d <= 0.0 {
            return Err(LinalgError::NotPositiveDefinite { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = Complex64::new(djj, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn solve_lower(l: &CMatrix, b: &CVector) -> CVector {
    let n = l.nrows();
    let mut x = b.clone();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solves `L^H x = b` for lower-triangular `L`.
pub fn solve_lower_adjoint(l: &CMatrix, b: &CVector) -> CVector {
    let n = l.nrows();
    let mut x = b.clone();
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= l[(k, i)].conj() * x[k];
        }
        x[i] = s / l[(i, i)].conj();
    }
    x
}

/// `Q` (M x N) with `Q^H Q = H`, built from the eigenpairs whose eigenvalue
/// exceeds `rank_tol · λ_max`, so `M` is the numerical rank of `H`.
pub fn gram_factor(h: &HermitianMatrix, rank_tol: f64) -> Result<CMatrix, LinalgError> {
    let eig = hermitian_eig(h)?;
    let lmax = eig.values.first().copied().unwrap_or(0.0);
    if !(lmax > 0.0) {
        return Err(LinalgError::ZeroMatrix);
    }
    let keep: Vec<usize> = (0..eig.values.len())
        .filter(|&i| eig.values[i] > rank_tol * lmax)
        .collect();
    let n = h.dim();
    Ok(CMatrix::from_fn(keep.len(), n, |r, c| {
        let i = keep[r];
        eig.vectors[(c, i)].conj() * eig.values[i].sqrt()
    }))
}

/// A PSD square root `C` with `C C^H = H` (negative eigenvalues clipped).
pub fn psd_sqrt(h: &HermitianMatrix) -> Result<CMatrix, LinalgError> {
    let eig = hermitian_eig(h)?;
    let n = h.dim();
    Ok(CMatrix::from_fn(n, n, |r, c| {
        eig.vectors[(r, c)] * eig.values[c].max(0.0).sqrt()
    }))
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> Result<f64, LinalgError> {
    if m.is_empty() {
        return Ok(0.0);
    }
    let g = if m.nrows() < m.ncols() {
        HermitianMatrix::gram(&m.adjoint())
    } else {
        HermitianMatrix::gram(m)
    };
    let eig = hermitian_eig(&g)?;
    Ok(eig.max_value().max(0.0).sqrt())
}

// ---------------------------------------------------------------------------
// Induced norms
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InducedNorm {
    pub value: f64,
    /// `true` when `value` is the exact norm, `false` when it is a sampled
    /// lower bound.
    pub exact: bool,
}

/// `||D||_{p,q}` when one of the closed forms applies, else `None`.
pub fn induced_norm_closed_form(d: &CMatrix, p: ExtRational, q: ExtRational) -> Option<f64> {
    if d.iter().all(|z| z.norm_sqr() == 0.0) {
        return Some(0.0);
    }
    if q.is_one() {
        return Some(
            d.column_iter()
                .map(|c| vec_norm(c.as_slice(), p))
                .fold(0.0, f64::max),
        );
    }
    if p.is_infinite() {
        let qs = q.conjugate();
        return Some(
            (0..d.nrows())
                .map(|i| {
                    let row: Vec<Complex64> = d.row(i).iter().copied().collect();
                    vec_norm(&row, qs)
                })
                .fold(0.0, f64::max),
        );
    }
    if p.is_two() && q.is_two() {
        return spectral_norm(d).ok();
    }
    None
}

/// `||D||_{p,q} = max ||D v||_p` over `||v||_q = 1`.
///
/// Closed forms: `q = 1` (largest column `p`-norm), `p = inf` (largest row
/// `q*`-norm) and `p = q = 2` (spectral norm). Any other pair yields a
/// flagged lower bound from seeded random probes.
pub fn induced_norm(d: &CMatrix, p: ExtRational, q: ExtRational) -> InducedNorm {
    if let Some(value) = induced_norm_closed_form(d, p, q) {
        return InducedNorm { value, exact: true };
    }
    let ncols = d.ncols();
    let ratio = |v: &CVector| {
        let denom = vec_norm(v.as_slice(), q);
        if denom == 0.0 {
            0.0
        } else {
            vec_norm((d * v).as_slice(), p) / denom
        }
    };
    let mut best = 0.0f64;
    for j in 0..ncols {
        let mut e = CVector::zeros(ncols);
        e[j] = Complex64::new(1.0, 0.0);
        best = best.max(ratio(&e));
    }
    // Rows phase-aligned: the maximizers for the p = inf closed form.
    for i in 0..d.nrows() {
        let v = CVector::from_iterator(ncols, d.row(i).iter().map(|z| z.conj()));
        best = best.max(ratio(&v));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(INDUCED_NORM_SEED);
    for _ in 0..INDUCED_NORM_PROBES {
        let v = CVector::from_fn(ncols, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        best = best.max(ratio(&v));
    }
    InducedNorm {
        value: best,
        exact: false,
    }
}
