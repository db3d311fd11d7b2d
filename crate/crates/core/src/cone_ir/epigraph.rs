//! Second-order cone representations of moduli, rational powers and
//! `l_q`-norm epigraphs.
//!
//! The rational power `ξ <= s^{(a-b)/a} v^{b/a}` is built as a binary tree
//! of geometric means. Every internal node `y <= sqrt(a b)` becomes the
//! standard cone `||(y, (a - b)/2)||_2 <= (a + b)/2`; identical siblings
//! collapse to the leaf itself because `sqrt(a a) = a` for `a >= 0`.

use super::{
    complex_linear_map, AffineExpr, ComplexAffine, ComplexVarRef, ConeError, ConeProgram, VarId,
};
use crate::linalg::{CMatrix, ExtRational};

/// `|z| <= xi`.
pub fn modulus_epigraph(
    prog: &mut ConeProgram,
    z: ComplexVarRef,
    xi: VarId,
) -> Result<(), ConeError> {
    modulus_epigraph_affine(prog, &z.into(), xi.into())
}

pub fn modulus_epigraph_affine(
    prog: &mut ConeProgram,
    z: &ComplexAffine,
    bound: AffineExpr,
) -> Result<(), ConeError> {
    prog.add_soc(bound, vec![z.re.clone(), z.im.clone()])
}

/// `y <= sqrt(a b)` as `||(y, (a - b)/2)|| <= (a + b)/2`.
fn geo_mean_pair(prog: &mut ConeProgram, y: VarId, a: VarId, b: VarId) -> Result<(), ConeError> {
    let half_sum = 0.5 * (AffineExpr::from(a) + AffineExpr::from(b));
    let half_diff = 0.5 * (AffineExpr::from(a) - AffineExpr::from(b));
    prog.add_soc(half_sum, vec![y.into(), half_diff])
}

/// Enforces `xi <= (Π leaves)^{1/|leaves|}` for a power-of-two number of
/// leaves, all of which the caller keeps nonnegative.
pub fn geo_mean_tower(
    prog: &mut ConeProgram,
    xi: VarId,
    leaves: &[VarId],
) -> Result<(), ConeError> {
    if leaves.is_empty() {
        return Err(ConeError::EmptyLeaves);
    }
    if !leaves.len().is_power_of_two() {
        return Err(ConeError::InvalidExponent(format!(
            "{} leaves is not a power of two",
            leaves.len()
        )));
    }
    for &v in leaves.iter().chain(std::iter::once(&xi)) {
        if !prog.owns(v) {
            return Err(ConeError::ForeignVar { index: v.index() });
        }
    }

    let mut level = leaves.to_vec();
    let mut depth = 0;
    while level.len() > 2 {
        level = pair_level(prog, &level, depth)?;
        depth += 1;
    }
    match level.as_slice() {
        [only] => prog.add_le(xi.into(), (*only).into()),
        [a, b] if a == b => prog.add_le(xi.into(), (*a).into()),
        [a, b] => geo_mean_pair(prog, xi, *a, *b),
        _ => unreachable!(),
    }
}

/// One tree level: identical leaves pair with themselves, the remaining
/// ones are paired in order through fresh auxiliary variables.
fn pair_level(
    prog: &mut ConeProgram,
    level: &[VarId],
    depth: usize,
) -> Result<Vec<VarId>, ConeError> {
    let mut groups: Vec<(VarId, usize)> = Vec::new();
    for &v in level {
        match groups.iter_mut().find(|(g, _)| *g == v) {
            Some(g) => g.1 += 1,
            None => groups.push((v, 1)),
        }
    }
    let mut next = Vec::with_capacity(level.len() / 2);
    let mut singles = Vec::new();
    for &(v, count) in &groups {
        next.extend(std::iter::repeat_n(v, count / 2));
        if count % 2 == 1 {
            singles.push(v);
        }
    }
    for pair in singles.chunks(2) {
        let y = prog.add_var(format!("gm{depth}"));
        geo_mean_pair(prog, y, pair[0], pair[1])?;
        next.push(y);
    }
    Ok(next)
}

/// `xi <= s^{(a-b)/a} v^{b/a}` for `q = a/b > 1`, i.e. `xi^a <= s^{a-b} v^b`.
///
/// Leaves are `s` repeated `a - b` times, `v` repeated `b` times and `xi`
/// itself filling up to the next power of two, which keeps the set a cone.
pub fn power_epigraph(
    prog: &mut ConeProgram,
    xi: VarId,
    s: VarId,
    v: VarId,
    q: ExtRational,
) -> Result<(), ConeError> {
    let (a, b) = match q {
        ExtRational::Finite { num, den } if num > den => (num as usize, den as usize),
        _ => return Err(ConeError::InvalidExponent(q.to_string())),
    };
    let width = a.next_power_of_two();
    let mut leaves = Vec::with_capacity(width);
    leaves.extend(std::iter::repeat_n(s, a - b));
    leaves.extend(std::iter::repeat_n(v, b));
    leaves.extend(std::iter::repeat_n(xi, width - a));
    geo_mean_tower(prog, xi, &leaves)
}

/// `||w||_q <= s` for complex variables.
pub fn lq_epigraph(
    prog: &mut ConeProgram,
    w: &[ComplexVarRef],
    s: VarId,
    q: ExtRational,
) -> Result<(), ConeError> {
    let exprs: Vec<ComplexAffine> = w.iter().map(|&z| z.into()).collect();
    lq_epigraph_affine(prog, &exprs, s, q)
}

/// `||w||_q <= s` where each entry of `w` is a complex affine expression.
pub fn lq_epigraph_affine(
    prog: &mut ConeProgram,
    w: &[ComplexAffine],
    s: VarId,
    q: ExtRational,
) -> Result<(), ConeError> {
    if w.is_empty() {
        return Err(ConeError::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    prog.add_nonneg(s.into())?;

    if q.is_infinite() {
        for z in w {
            modulus_epigraph_affine(prog, z, s.into())?;
        }
        return Ok(());
    }
    if q.is_two() {
        let mut u: Vec<AffineExpr> = w.iter().map(|z| z.re.clone()).collect();
        u.extend(w.iter().map(|z| z.im.clone()));
        return prog.add_soc(s.into(), u);
    }

    let mut moduli = Vec::with_capacity(w.len());
    for (n, z) in w.iter().enumerate() {
        let xi = prog.add_var(format!("xi[{n}]"));
        prog.add_nonneg(xi.into())?;
        modulus_epigraph_affine(prog, z, xi.into())?;
        moduli.push(xi);
    }
    if q.is_one() {
        let total = moduli
            .iter()
            .fold(AffineExpr::zero(), |acc, &xi| acc + xi.into());
        return prog.add_le(total, s.into());
    }

    let mut total = AffineExpr::zero();
    for (n, &xi) in moduli.iter().enumerate() {
        let v = prog.add_var(format!("v[{n}]"));
        prog.add_nonneg(v.into())?;
        total.add_term(v, 1.0);
        power_epigraph(prog, xi, s, v, q)?;
    }
    prog.add_le(total, s.into())
}

/// `w^H (L L^H) w <= 1` as `||L^H w||_2 <= 1`.
pub fn quad_constraint(
    prog: &mut ConeProgram,
    w: &[ComplexVarRef],
    l: &CMatrix,
) -> Result<(), ConeError> {
    if l.nrows() != l.ncols() {
        return Err(ConeError::DimensionMismatch {
            expected: l.nrows(),
            found: l.ncols(),
        });
    }
    let rows = complex_linear_map(&l.adjoint(), w)?;
    let mut u: Vec<AffineExpr> = rows.iter().map(|z| z.re.clone()).collect();
    u.extend(rows.iter().map(|z| z.im.clone()));
    prog.add_soc(AffineExpr::constant(1.0), u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn soc_holds(prog: &ConeProgram, x: &[f64], slack: f64) -> bool {
        prog.socs().iter().all(|b| {
            let t = b.t.eval(x);
            let n = b.u.iter().map(|e| e.eval(x).powi(2)).sum::<f64>().sqrt();
            n <= t + slack
        }) && prog.nonnegatives().iter().all(|e| e.eval(x) >= -slack)
    }

    #[test]
    fn quartic_tower_matches_displayed_constraints() {
        let mut p = ConeProgram::new();
        let s = p.add_var("s");
        let v = p.add_var("v");
        let xi = p.add_var("xi");
        power_epigraph(&mut p, xi, s, v, "4".parse().unwrap()).unwrap();
        // xi <= sqrt(s y), y <= sqrt(s v): two three-dimensional cones.
        assert_eq!(p.socs().len(), 2);
        assert!(p.socs().iter().all(|b| b.dim() == 3));
        assert_eq!(p.num_vars(), 4);
        let y = VarId {
            program: s.program,
            index: 3,
        };
        let inner = &p.socs()[0];
        assert_eq!(inner.u[0], AffineExpr::from(y));
        let root = &p.socs()[1];
        assert_eq!(root.u[0], AffineExpr::from(xi));

        // Feasibility boundary with the tight auxiliary y = sqrt(s v).
        for &(sv, vv) in &[(1.0, 1.0), (2.0, 0.5), (0.3, 5.0)] {
            let bound = f64::powf(sv, 0.75) * f64::powf(vv, 0.25);
            let mut x = vec![sv, vv, bound * (1.0 - 1e-9), (sv * vv).sqrt()];
            assert!(soc_holds(&p, &x, 1e-12));
            x[2] = bound * (1.0 + 1e-6);
            assert!(!soc_holds(&p, &x, 0.0));
        }
    }

    #[test]
    fn three_halves_tower_self_pads() {
        let mut p = ConeProgram::new();
        let s = p.add_var("s");
        let v = p.add_var("v");
        let xi = p.add_var("xi");
        power_epigraph(&mut p, xi, s, v, "3/2".parse().unwrap()).unwrap();
        // z <= sqrt(xi s) and xi <= sqrt(z v).
        assert_eq!(p.socs().len(), 2);
        let (sv, vv) = (2.0f64, 3.0f64);
        let bound = sv.powf(1.0 / 3.0) * vv.powf(2.0 / 3.0);
        let tight = |xv: f64| vec![sv, vv, xv, (xv * sv).sqrt()];
        assert!(soc_holds(&p, &tight(bound * (1.0 - 1e-9)), 1e-12));
        assert!(!soc_holds(&p, &tight(bound * (1.0 + 1e-6)), 0.0));
    }

    #[test]
    fn identical_leaves_give_linear_bound() {
        let mut p = ConeProgram::new();
        let v = p.add_var("v");
        let xi = p.add_var("xi");
        geo_mean_tower(&mut p, xi, &[v, v]).unwrap();
        assert!(p.socs().is_empty());
        assert_eq!(p.nonnegatives().len(), 1);
        assert_eq!(p.nonnegatives()[0].eval(&[2.0, 1.5]), 0.5);
    }

    #[test]
    fn tower_rejects_bad_leaf_sets() {
        let mut p = ConeProgram::new();
        let v = p.add_var("v");
        let xi = p.add_var("xi");
        assert_eq!(geo_mean_tower(&mut p, xi, &[]), Err(ConeError::EmptyLeaves));
        assert!(geo_mean_tower(&mut p, xi, &[v, v, v]).is_err());
        assert!(power_epigraph(&mut p, xi, v, v, ExtRational::ONE).is_err());
        assert!(power_epigraph(&mut p, xi, v, v, ExtRational::INFINITY).is_err());
    }

    #[test]
    fn seven_thirds_leaf_multiset() {
        let mut p = ConeProgram::new();
        let s = p.add_var("s");
        let v = p.add_var("v");
        let xi = p.add_var("xi");
        power_epigraph(&mut p, xi, s, v, "7/3".parse().unwrap()).unwrap();
        // Leaves {s x4, v x3, xi x1}: y1 <= sqrt(v xi), y2 <= sqrt(v y1),
        // xi <= sqrt(s y2).
        assert_eq!(p.socs().len(), 3);
        let (sv, vv) = (1.7f64, 0.6f64);
        let bound = sv.powf(4.0 / 7.0) * vv.powf(3.0 / 7.0);
        let tight = |xv: f64| {
            let y1 = (vv * xv).sqrt();
            let y2 = (vv * y1).sqrt();
            vec![sv, vv, xv, y1, y2]
        };
        assert!(soc_holds(&p, &tight(bound * (1.0 - 1e-9)), 1e-12));
        assert!(!soc_holds(&p, &tight(bound * (1.0 + 1e-6)), 0.0));
    }

    #[test]
    fn modulus_block_is_three_dimensional() {
        let mut p = ConeProgram::new();
        let z = p.add_complex_var("z");
        let xi = p.add_var("xi");
        modulus_epigraph(&mut p, z, xi).unwrap();
        assert_eq!(p.socs()[0].dim(), 3);
        assert!(soc_holds(&p, &[3.0, 4.0, 5.0], 0.0));
        assert!(!soc_holds(&p, &[3.0, 4.0, 4.999], 0.0));
        assert!(soc_holds(&p, &[0.0, 0.0, 0.0], 0.0));
    }

    #[test]
    fn quad_constraint_matches_direct_quadratic() {
        use crate::linalg::{cholesky_psd, CVector, HermitianMatrix};
        use num_complex::Complex64;
        use rand::{Rng, SeedableRng};

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let n = 4;
        let b = CMatrix::from_fn(6, n, |_, _| Complex64::new(rng.random(), rng.random()));
        let r = HermitianMatrix::gram(&b).shifted(0.5);
        let l = cholesky_psd(&r).unwrap();
        let mut p = ConeProgram::new();
        let w = p.add_complex_vars("w", n);
        quad_constraint(&mut p, &w, &l).unwrap();
        let block = &p.socs()[0];
        for _ in 0..100 {
            let scale = rng.random::<f64>();
            let wv = CVector::from_fn(n, |_, _| {
                Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * scale
            });
            let mut x = vec![0.0; p.num_vars()];
            for (z, val) in w.iter().zip(wv.iter()) {
                x[z.re.index()] = val.re;
                x[z.im.index()] = val.im;
            }
            let norm_sq: f64 = block.u.iter().map(|e| e.eval(&x).powi(2)).sum();
            assert!((norm_sq - r.quad_form(&wv)).abs() <= 1e-9 * (1.0 + norm_sq));
        }
    }
}
