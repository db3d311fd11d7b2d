//! Nonnegative orthant and second-order cone primitives: Jordan products,
//! Nesterov-Todd scaling and step-to-boundary computations.
//!
//! For a second-order cone element `u = (u0, u1)`:
//! - `u ∘ v = (u^T v, u0 v1 + v0 u1)`, identity `e = (1, 0)`;
//! - the NT scaling `W` satisfies `W z = W^{-1} s = λ`.

use nalgebra::DMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ConeKind {
    Orthant,
    Soc,
}

/// A contiguous block of cone rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Block {
    pub kind: ConeKind,
    pub offset: usize,
    pub dim: usize,
}

impl Block {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.dim
    }

    /// Contribution to the barrier degree.
    pub fn degree(&self) -> usize {
        match self.kind {
            ConeKind::Orthant => self.dim,
            ConeKind::Soc => 1,
        }
    }
}

/// Smallest eigenvalue of `u` in the Jordan algebra of the block.
pub(crate) fn min_eig(kind: ConeKind, u: &[f64]) -> f64 {
    match kind {
        ConeKind::Orthant => u.iter().copied().fold(f64::INFINITY, f64::min),
        ConeKind::Soc => u[0] - norm(&u[1..]),
    }
}

/// Adds `alpha · e`.
pub(crate) fn add_identity(kind: ConeKind, u: &mut [f64], alpha: f64) {
    match kind {
        ConeKind::Orthant => u.iter_mut().for_each(|x| *x += alpha),
        ConeKind::Soc => u[0] += alpha,
    }
}

pub(crate) fn identity(kind: ConeKind, out: &mut [f64]) {
    out.fill(0.0);
    add_identity(kind, out, 1.0);
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `u^T J u = u0^2 - ||u1||^2`.
fn jdot(u: &[f64]) -> f64 {
    (u[0] - norm(&u[1..])) * (u[0] + norm(&u[1..]))
}

pub(crate) fn jordan_product(kind: ConeKind, u: &[f64], v: &[f64], out: &mut [f64]) {
    match kind {
        ConeKind::Orthant => {
            for i in 0..u.len() {
                out[i] = u[i] * v[i];
            }
        }
        ConeKind::Soc => {
            out[0] = dot(u, v);
            for i in 1..u.len() {
                out[i] = u[0] * v[i] + v[0] * u[i];
            }
        }
    }
}

/// Solves `λ ∘ out = d`.
pub(crate) fn jordan_solve(kind: ConeKind, lambda: &[f64], d: &[f64], out: &mut [f64]) {
    match kind {
        ConeKind::Orthant => {
            for i in 0..d.len() {
                out[i] = d[i] / lambda[i];
            }
        }
        ConeKind::Soc => {
            let l0 = lambda[0];
            let l1 = &lambda[1..];
            let rho = jdot(lambda);
            let v0 = (l0 * d[0] - dot(l1, &d[1..])) / rho;
            out[0] = v0;
            for i in 1..d.len() {
                out[i] = (d[i] - v0 * lambda[i]) / l0;
            }
        }
    }
}

/// Largest `α` with `u + α d` in the cone, or infinity.
pub(crate) fn max_step(kind: ConeKind, u: &[f64], d: &[f64]) -> f64 {
    match kind {
        ConeKind::Orthant => u
            .iter()
            .zip(d)
            .filter(|(_, &di)| di < 0.0)
            .map(|(&ui, &di)| -ui / di)
            .fold(f64::INFINITY, f64::min),
        ConeKind::Soc => soc_step(u, d),
    }
}

fn soc_step(u: &[f64], d: &[f64]) -> f64 {
    // f(α) = a α² + 2 b α + c with c = u^T J u > 0; first positive root.
    let a = d[0] * d[0] - dot(&d[1..], &d[1..]);
    let b = u[0] * d[0] - dot(&u[1..], &d[1..]);
    let c = jdot(u).max(0.0);
    let mut alpha = f64::INFINITY;
    if d[0] < 0.0 {
        alpha = -u[0] / d[0];
    }
    if a == 0.0 {
        if b < 0.0 {
            alpha = alpha.min(-c / (2.0 * b));
        }
        return alpha;
    }
    let disc = b * b - a * c;
    if disc < 0.0 {
        return alpha;
    }
    let sq = disc.sqrt();
    let qq = -(b + b.signum() * sq);
    let roots = if qq == 0.0 {
        [-b / a, f64::NAN]
    } else {
        [qq / a, c / qq]
    };
    for r in roots {
        if r > 0.0 {
            alpha = alpha.min(r);
        }
    }
    alpha
}

/// Nesterov-Todd scaling of one block.
#[derive(Clone, Debug)]
pub(crate) enum Scaling {
    /// `W = diag(w)`.
    Orthant { w: Vec<f64> },
    /// `W`, `W^{-1}` as dense symmetric matrices.
    Soc { w: DMatrix<f64>, winv: DMatrix<f64> },
}

impl Scaling {
    /// Scaling for `s, z` in the interior; also returns `λ = W z`.
    pub fn new(kind: ConeKind, s: &[f64], z: &[f64]) -> (Scaling, Vec<f64>) {
        match kind {
            ConeKind::Orthant => {
                let w: Vec<f64> = s.iter().zip(z).map(|(a, b)| (a / b).sqrt()).collect();
                let lambda = s.iter().zip(z).map(|(a, b)| (a * b).sqrt()).collect();
                (Scaling::Orthant { w }, lambda)
            }
            ConeKind::Soc => {
                let dim = s.len();
                let sj = jdot(s).max(f64::MIN_POSITIVE).sqrt();
                let zj = jdot(z).max(f64::MIN_POSITIVE).sqrt();
                let sbar: Vec<f64> = s.iter().map(|x| x / sj).collect();
                let zbar: Vec<f64> = z.iter().map(|x| x / zj).collect();
                let gamma = ((1.0 + dot(&sbar, &zbar)) / 2.0).sqrt();
                let mut wbar = vec![0.0; dim];
                wbar[0] = (sbar[0] + zbar[0]) / (2.0 * gamma);
                for i in 1..dim {
                    wbar[i] = (sbar[i] - zbar[i]) / (2.0 * gamma);
                }
                let eta = (sj / zj).sqrt();
                let w0 = wbar[0];
                let w1 = &wbar[1..];
                let mut w = DMatrix::zeros(dim, dim);
                let mut winv = DMatrix::zeros(dim, dim);
                w[(0, 0)] = w0;
                winv[(0, 0)] = w0;
                for i in 1..dim {
                    w[(0, i)] = w1[i - 1];
                    w[(i, 0)] = w1[i - 1];
                    winv[(0, i)] = -w1[i - 1];
                    winv[(i, 0)] = -w1[i - 1];
                    for j in 1..dim {
                        let v = w1[i - 1] * w1[j - 1] / (1.0 + w0) + if i == j { 1.0 } else { 0.0 };
                        w[(i, j)] = v;
                        winv[(i, j)] = v;
                    }
                }
                w *= eta;
                winv /= eta;
                let lambda = (&w * nalgebra::DVector::from_column_slice(z))
                    .as_slice()
                    .to_vec();
                (Scaling::Soc { w, winv }, lambda)
            }
        }
    }

    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Orthant { w } => {
                for i in 0..v.len() {
                    out[i] = w[i] * v[i];
                }
            }
            Scaling::Soc { w, .. } => mat_vec(w, v, out),
        }
    }

    pub fn apply_inv(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Orthant { w } => {
                for i in 0..v.len() {
                    out[i] = v[i] / w[i];
                }
            }
            Scaling::Soc { winv, .. } => mat_vec(winv, v, out),
        }
    }
}

fn mat_vec(m: &DMatrix<f64>, v: &[f64], out: &mut [f64]) {
    for i in 0..m.nrows() {
        out[i] = (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nt_scaling_maps_s_and_z_to_lambda() {
        let s = [2.0, 0.3, -1.1, 0.4];
        let z = [1.5, -0.7, 0.2, 0.9];
        let (sc, lambda) = Scaling::new(ConeKind::Soc, &s, &z);
        let mut a = [0.0; 4];
        let mut b = [0.0; 4];
        sc.apply(&z, &mut a);
        sc.apply_inv(&s, &mut b);
        for i in 0..4 {
            assert!((a[i] - lambda[i]).abs() < 1e-12);
            assert!((b[i] - lambda[i]).abs() < 1e-12);
        }
        // W W^{-1} = I
        if let Scaling::Soc { w, winv } = &sc {
            assert!((w * winv - DMatrix::identity(4, 4)).norm() < 1e-12);
        }
        assert!(min_eig(ConeKind::Soc, &lambda) > 0.0);
    }

    #[test]
    fn orthant_scaling() {
        let (sc, lambda) = Scaling::new(ConeKind::Orthant, &[4.0, 1.0], &[1.0, 9.0]);
        assert_eq!(lambda, vec![2.0, 3.0]);
        let mut out = [0.0; 2];
        sc.apply(&[1.0, 9.0], &mut out);
        assert_eq!(out, [2.0, 3.0]);
    }

    #[test]
    fn jordan_solve_inverts_product() {
        let lambda = [3.0, 1.0, -0.5];
        let v = [0.2, -1.0, 4.0];
        let mut d = [0.0; 3];
        jordan_product(ConeKind::Soc, &lambda, &v, &mut d);
        let mut back = [0.0; 3];
        jordan_solve(ConeKind::Soc, &lambda, &d, &mut back);
        for i in 0..3 {
            assert!((back[i] - v[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn soc_step_hits_boundary() {
        let u = [2.0, 0.0, 0.0];
        let d = [-1.0, 1.0, 0.0];
        // 2 - a = a  ->  a = 1
        assert!((max_step(ConeKind::Soc, &u, &d) - 1.0).abs() < 1e-12);
        assert_eq!(max_step(ConeKind::Soc, &u, &[1.0, 0.5, 0.0]), f64::INFINITY);
        assert_eq!(max_step(ConeKind::Orthant, &[1.0, 2.0], &[-2.0, -1.0]), 0.5);
    }
}
