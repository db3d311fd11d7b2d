//! Random SOCPs with a known optimum.
//!
//! A point `x*` and multipliers are drawn first; constraints are then built
//! so that complementary slackness holds at `x*`, and the objective is set
//! to the stationarity combination. The optimal value is `o^T x*`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cone_ir::{AffineExpr, ConeProgram};

/// Random program with a planted optimal primal-dual pair.
pub struct Planted {
    pub prog: ConeProgram,
    pub optimum: f64,
}

pub fn planted(seed: u64) -> Planted {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..9);
    let mut prog = ConeProgram::new();
    let vars: Vec<_> = (0..n).map(|i| prog.add_var(format!("x{i}"))).collect();
    let xstar: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mut grad = vec![0.0; n];

    // f(x) = a^T x + (target - a^T x*), so f(x*) = target.
    let row = |rng: &mut ChaCha8Rng, target: f64| {
        let mut e = AffineExpr::zero();
        let mut ax = 0.0;
        for (j, v) in vars.iter().enumerate() {
            if rng.random_bool(0.7) {
                let c = rng.random_range(-1.0..1.0);
                e.add_term(*v, c);
                ax += c * xstar[j];
            }
        }
        e.add_constant(target - ax);
        e
    };

    let n_eq = rng.random_range(0..n / 2);
    for _ in 0..n_eq {
        let e = row(&mut rng, 0.0);
        let y: f64 = rng.random_range(-1.0..1.0);
        for (v, c) in e.terms() {
            grad[v.index()] += y * c;
        }
        prog.add_equality(e).unwrap();
    }
    for _ in 0..rng.random_range(1..6) {
        let (s, z) = if rng.random_bool(0.5) {
            (0.0, rng.random_range(0.1..2.0))
        } else {
            (rng.random_range(0.1..2.0), 0.0)
        };
        let e = row(&mut rng, s);
        for (v, c) in e.terms() {
            grad[v.index()] -= z * c;
        }
        prog.add_nonneg(e).unwrap();
    }
    for _ in 0..rng.random_range(1..4) {
        let d = rng.random_range(2..5);
        let mut dir: Vec<f64> = (0..d - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
        let nrm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        dir.iter_mut().for_each(|x| *x /= nrm);
        let (s, z): (Vec<f64>, Vec<f64>) = match rng.random_range(0..3) {
            0 => {
                // Both on the boundary, opposite directions.
                let a = rng.random_range(0.2..2.0);
                let b = rng.random_range(0.2..2.0);
                let s = std::iter::once(a)
                    .chain(dir.iter().map(|x| a * x))
                    .collect();
                let z = std::iter::once(b)
                    .chain(dir.iter().map(|x| -b * x))
                    .collect();
                (s, z)
            }
            1 => {
                let s = std::iter::once(2.0)
                    .chain(dir.iter().map(|x| 0.5 * x))
                    .collect();
                (s, vec![0.0; d])
            }
            _ => {
                let z = std::iter::once(2.0)
                    .chain(dir.iter().map(|x| 0.5 * x))
                    .collect();
                (vec![0.0; d], z)
            }
        };
        let exprs: Vec<AffineExpr> = s.iter().map(|&si| row(&mut rng, si)).collect();
        for (e, zi) in exprs.iter().zip(&z) {
            for (v, c) in e.terms() {
                grad[v.index()] -= zi * c;
            }
        }
        prog.add_soc(exprs[0].clone(), exprs[1..].to_vec()).unwrap();
    }

    let mut obj = AffineExpr::zero();
    for (v, g) in vars.iter().zip(&grad) {
        obj.add_term(*v, *g);
    }
    let optimum = obj.eval(&xstar);
    prog.maximize(obj).unwrap();
    Planted { prog, optimum }
}
