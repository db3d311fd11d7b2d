//! Lowering of a [`ConeProgram`] to the conic standard form
//!
//! ```text
//! minimize c^T x  subject to  A x = b,  G x + s = h,  s in K
//! ```
//!
//! with `K` a nonnegative orthant block followed by second-order cones, plus
//! diagonal (Ruiz) equilibration of the constraint matrices.

use nalgebra::{DMatrix, DVector};

use super::cones::{Block, ConeKind};
use crate::cone_ir::{AffineExpr, ConeProgram};

#[derive(Clone, Debug)]
pub(crate) struct StandardForm {
    pub c: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
    pub blocks: Vec<Block>,
    /// Constant of the maximized objective, `obj = -c^T x + offset`.
    pub offset: f64,
}

/// Diagonal scalings: `x = D x̃`, `ỹ = E_A^{-1} y`, `s̃ = E_G s`.
#[derive(Clone, Debug)]
pub(crate) struct Equilibration {
    pub d: DVector<f64>,
    pub e_a: DVector<f64>,
    pub e_g: DVector<f64>,
}

fn put_row(m: &mut DMatrix<f64>, row: usize, e: &AffineExpr, sign: f64) {
    for (v, c) in e.terms() {
        m[(row, v.index())] += sign * c;
    }
}

impl StandardForm {
    pub fn from_program(prog: &ConeProgram) -> StandardForm {
        let n = prog.num_vars();
        let mut c = DVector::zeros(n);
        for (v, coef) in prog.objective().terms() {
            c[v.index()] -= coef;
        }

        let eqs = prog.equalities();
        let mut a = DMatrix::zeros(eqs.len(), n);
        let mut b = DVector::zeros(eqs.len());
        for (i, e) in eqs.iter().enumerate() {
            put_row(&mut a, i, e, 1.0);
            b[i] = -e.constant_term();
        }

        let nonneg = prog.nonnegatives();
        let m: usize = nonneg.len() + prog.socs().iter().map(|s| s.dim()).sum::<usize>();
        let mut g = DMatrix::zeros(m, n);
        let mut h = DVector::zeros(m);
        let mut blocks = Vec::new();
        let mut row = 0;
        // Rows hold s = h - G x = expr.
        let mut emit = |e: &AffineExpr, row: usize| {
            put_row(&mut g, row, e, -1.0);
            h[row] = e.constant_term();
        };
        for e in nonneg {
            emit(e, row);
            row += 1;
        }
        if !nonneg.is_empty() {
            blocks.push(Block {
                kind: ConeKind::Orthant,
                offset: 0,
                dim: nonneg.len(),
            });
        }
        for soc in prog.socs() {
            let offset = row;
            emit(&soc.t, row);
            row += 1;
            for e in &soc.u {
                emit(e, row);
                row += 1;
            }
            blocks.push(Block {
                kind: ConeKind::Soc,
                offset,
                dim: soc.dim(),
            });
        }

        StandardForm {
            c,
            a,
            b,
            g,
            h,
            blocks,
            offset: prog.objective().constant_term(),
        }
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn p(&self) -> usize {
        self.b.len()
    }

    pub fn m(&self) -> usize {
        self.h.len()
    }

    pub fn degree(&self) -> usize {
        self.blocks.iter().map(|b| b.degree()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|x| x.is_finite())
            && self.a.iter().all(|x| x.is_finite())
            && self.b.iter().all(|x| x.is_finite())
            && self.g.iter().all(|x| x.is_finite())
            && self.h.iter().all(|x| x.is_finite())
    }

    /// Ruiz equilibration in place; row scalings are uniform over each
    /// second-order cone so that cone membership is preserved.
    pub fn equilibrate(&mut self, passes: usize) -> Equilibration {
        let (n, p, m) = (self.n(), self.p(), self.m());
        let mut d = DVector::from_element(n, 1.0);
        let mut e_a = DVector::from_element(p, 1.0);
        let mut e_g = DVector::from_element(m, 1.0);
        let inv_sqrt = |x: f64| if x > 0.0 { 1.0 / x.sqrt() } else { 1.0 };

        for _ in 0..passes {
            let mut col = DVector::from_element(n, 0.0f64);
            for j in 0..n {
                let ma = (0..p).map(|i| self.a[(i, j)].abs()).fold(0.0, f64::max);
                let mg = (0..m).map(|i| self.g[(i, j)].abs()).fold(0.0, f64::max);
                col[j] = inv_sqrt(ma.max(mg));
            }
            let row_a: Vec<f64> = (0..p)
                .map(|i| inv_sqrt((0..n).map(|j| self.a[(i, j)].abs()).fold(0.0, f64::max)))
                .collect();
            let mut row_g = vec![1.0; m];
            for blk in &self.blocks {
                let rmax = |i: usize| (0..n).map(|j| self.g[(i, j)].abs()).fold(0.0, f64::max);
                match blk.kind {
                    ConeKind::Orthant => {
                        for i in blk.range() {
                            row_g[i] = inv_sqrt(rmax(i));
                        }
                    }
                    ConeKind::Soc => {
                        let v = inv_sqrt(blk.range().map(rmax).fold(0.0, f64::max));
                        for i in blk.range() {
                            row_g[i] = v;
                        }
                    }
                }
            }
            for j in 0..n {
                for i in 0..p {
                    self.a[(i, j)] *= row_a[i] * col[j];
                }
                for i in 0..m {
                    self.g[(i, j)] *= row_g[i] * col[j];
                }
                d[j] *= col[j];
                self.c[j] *= col[j];
            }
            for i in 0..p {
                e_a[i] *= row_a[i];
                self.b[i] *= row_a[i];
            }
            for i in 0..m {
                e_g[i] *= row_g[i];
                self.h[i] *= row_g[i];
            }
        }
        Equilibration { d, e_a, e_g }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowering_signs() {
        let mut p = ConeProgram::new();
        let x = p.add_var("x");
        let y = p.add_var("y");
        p.maximize(AffineExpr::from(x) + AffineExpr::constant(3.0))
            .unwrap();
        p.add_equality(AffineExpr::from(y) - AffineExpr::constant(1.0))
            .unwrap();
        p.add_le(x.into(), AffineExpr::constant(5.0)).unwrap();
        p.add_soc(y.into(), vec![x.into()]).unwrap();
        let sf = StandardForm::from_program(&p);
        assert_eq!(sf.c.as_slice(), &[-1.0, 0.0]);
        assert_eq!(sf.a[(0, 1)], 1.0);
        assert_eq!(sf.b[0], 1.0);
        // s = 5 - x  ->  G row = [1, 0], h = 5
        assert_eq!(sf.g[(0, 0)], 1.0);
        assert_eq!(sf.h[0], 5.0);
        assert_eq!(sf.blocks.len(), 2);
        assert_eq!(sf.blocks[1].offset, 1);
        assert_eq!(sf.degree(), 2);
        assert_eq!(sf.offset, 3.0);
    }
}
