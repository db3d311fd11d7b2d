//! Homogeneous self-dual interior-point method with Nesterov-Todd scaling
//! and Mehrotra predictor-corrector steps.
//!
//! Embedding (all blocks of `(x, y, z, τ)` skew-symmetric):
//!
//! ```text
//! 0 =  A^T y + G^T z + c τ
//! 0 = -A x           + b τ
//! s = -G x           + h τ
//! κ = -c^T x - b^T y - h^T z
//! ```
//!
//! Newton systems `[0 A^T G^T; A 0 0; G 0 -W^2]` are factored densely with
//! a small static regularization and polished by iterative refinement.

use nalgebra::{DMatrix, DVector};

use super::cones::{
    add_identity, identity, jordan_product, jordan_solve, max_step, min_eig, Block, Scaling,
};
use super::standard::StandardForm;
use super::{IterationStats, SolverConfig, Status};

const STEP_FRACTION: f64 = 0.99;
const RUIZ_PASSES: usize = 10;
const REFINE_STEPS: usize = 3;
const MIN_STEP: f64 = 1e-13;

pub(crate) struct IpmOutcome {
    pub status: Status,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub z: DVector<f64>,
    pub iterations: usize,
    pub pres: f64,
    pub dres: f64,
    pub gap_res: f64,
    pub pcost: f64,
    pub dcost: f64,
    pub history: Vec<IterationStats>,
}

struct Kkt {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    scalings: Vec<Scaling>,
}

struct Problem<'a> {
    sf: &'a StandardForm,
    bnorm: f64,
    hnorm: f64,
    cnorm: f64,
    reg: f64,
}

impl Problem<'_> {
    fn blocks(&self) -> &[Block] {
        &self.sf.blocks
    }

    /// Factors `[δI A^T G^T; A -δI 0; G 0 -W^2]` at the scaling point of
    /// `(s, z)`.
    fn assemble(&self, s: &[f64], z: &[f64]) -> Option<Kkt> {
        let sf = self.sf;
        let (n, p, m) = (sf.n(), sf.p(), sf.m());
        let dim = n + p + m;
        let mut k = DMatrix::<f64>::zeros(dim, dim);
        let mut scalings = Vec::with_capacity(self.blocks().len());
        for blk in self.blocks() {
            let r = blk.range();
            let (sc, _) = Scaling::new(blk.kind, &s[r.clone()], &z[r.clone()]);
            let o = n + p + blk.offset;
            match &sc {
                Scaling::Orthant { w } => {
                    for (i, wi) in w.iter().enumerate() {
                        k[(o + i, o + i)] = -wi * wi;
                    }
                }
                Scaling::Soc { w, .. } => {
                    let w2 = w * w;
                    for i in 0..blk.dim {
                        for j in 0..blk.dim {
                            k[(o + i, o + j)] = -w2[(i, j)];
                        }
                    }
                }
            }
            scalings.push(sc);
        }
        for i in 0..p {
            for j in 0..n {
                k[(n + i, j)] = sf.a[(i, j)];
                k[(j, n + i)] = sf.a[(i, j)];
            }
        }
        for i in 0..m {
            for j in 0..n {
                k[(n + p + i, j)] = sf.g[(i, j)];
                k[(j, n + p + i)] = sf.g[(i, j)];
            }
        }
        let delta = self.reg;
        for i in 0..n {
            k[(i, i)] += delta;
        }
        for i in n..n + p {
            k[(i, i)] -= delta;
        }
        if k.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some(Kkt {
            lu: k.lu(),
            scalings,
        })
    }

    fn apply_w(&self, kkt: &Kkt, v: &[f64], out: &mut [f64], inverse: bool) {
        for (blk, sc) in self.blocks().iter().zip(&kkt.scalings) {
            let r = blk.range();
            if inverse {
                sc.apply_inv(&v[r.clone()], &mut out[r]);
            } else {
                sc.apply(&v[r.clone()], &mut out[r]);
            }
        }
    }

    /// One pass through the regularized factorization.
    fn solve_once(
        &self,
        kkt: &Kkt,
        r1: &DVector<f64>,
        r2: &DVector<f64>,
        r3: &DVector<f64>,
    ) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let (n, p, m) = (self.sf.n(), self.sf.p(), self.sf.m());
        let mut rhs = DVector::zeros(n + p + m);
        rhs.rows_mut(0, n).copy_from(r1);
        rhs.rows_mut(n, p).copy_from(r2);
        rhs.rows_mut(n + p, m).copy_from(r3);
        let sol = kkt.lu.solve(&rhs)?;
        Some((
            sol.rows(0, n).into_owned(),
            sol.rows(n, p).into_owned(),
            sol.rows(n + p, m).into_owned(),
        ))
    }

    /// Solves `[0 A^T G^T; A 0 0; G 0 -W^2] (dx, dy, dz) = (r1, r2, r3)`,
    /// refining against the unregularized system.
    fn solve(
        &self,
        kkt: &Kkt,
        r1: &DVector<f64>,
        r2: &DVector<f64>,
        r3: &DVector<f64>,
    ) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let sf = self.sf;
        let m = sf.m();
        let (mut dx, mut dy, mut dz) = self.solve_once(kkt, r1, r2, r3)?;
        let scale = r1.amax().max(r2.amax()).max(r3.amax()).max(1.0);
        let mut t1 = vec![0.0; m];
        let mut t2 = vec![0.0; m];
        for _ in 0..REFINE_STEPS {
            let e1 = r1 - sf.a.transpose() * &dy - sf.g.transpose() * &dz;
            let e2 = r2 - &sf.a * &dx;
            self.apply_w(kkt, dz.as_slice(), &mut t1, false);
            self.apply_w(kkt, &t1, &mut t2, false);
            let e3 = r3 - &sf.g * &dx + DVector::from_column_slice(&t2);
            let err = e1.amax().max(e2.amax()).max(e3.amax());
            if !err.is_finite() {
                return None;
            }
            if err <= 1e-14 * scale {
                break;
            }
            let (cx, cy, cz) = self.solve_once(kkt, &e1, &e2, &e3)?;
            dx += cx;
            dy += cy;
            dz += cz;
        }
        let finite = dx
            .iter()
            .chain(dy.iter())
            .chain(dz.iter())
            .all(|v| v.is_finite());
        finite.then_some((dx, dy, dz))
    }

    fn shift_into_cone(&self, u: &mut [f64]) {
        let worst = self
            .blocks()
            .iter()
            .map(|b| -min_eig(b.kind, &u[b.range()]))
            .fold(f64::NEG_INFINITY, f64::max);
        if worst >= 0.0 {
            for b in self.blocks() {
                add_identity(b.kind, &mut u[b.range()], 1.0 + worst);
            }
        }
    }

    fn step_length(&self, s: &[f64], ds: &[f64], z: &[f64], dz: &[f64]) -> f64 {
        self.blocks()
            .iter()
            .map(|b| {
                let r = b.range();
                max_step(b.kind, &s[r.clone()], &ds[r.clone()]).min(max_step(
                    b.kind,
                    &z[r.clone()],
                    &dz[r],
                ))
            })
            .fold(f64::INFINITY, f64::min)
    }
}

struct Iterate {
    x: DVector<f64>,
    y: DVector<f64>,
    z: DVector<f64>,
    s: DVector<f64>,
    tau: f64,
    kappa: f64,
}

struct Direction {
    dx: DVector<f64>,
    dy: DVector<f64>,
    dz: DVector<f64>,
    ds: DVector<f64>,
    dtau: f64,
    dkappa: f64,
}

struct Residuals {
    rx: DVector<f64>,
    ry: DVector<f64>,
    rz: DVector<f64>,
    rtau: f64,
}

fn scaled_norm(v: &DVector<f64>, scale: &DVector<f64>, invert: bool) -> f64 {
    v.iter()
        .zip(scale.iter())
        .map(|(a, s)| if invert { a / s } else { a * s })
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn run(original: &StandardForm, cfg: &SolverConfig) -> IpmOutcome {
    let mut sf = original.clone();
    let eq = sf.equilibrate(RUIZ_PASSES);
    let (n, p, m) = (sf.n(), sf.p(), sf.m());
    let nu = sf.degree() as f64;

    let prob = Problem {
        sf: &sf,
        bnorm: original.b.norm().max(1.0),
        hnorm: original.h.norm().max(1.0),
        cnorm: original.c.norm().max(1.0),
        reg: cfg.regularization,
    };

    let mut history = Vec::new();
    let fail = |status: Status, history: Vec<IterationStats>, iterations: usize| IpmOutcome {
        status,
        x: DVector::from_element(n, f64::NAN),
        y: DVector::from_element(p, f64::NAN),
        z: DVector::from_element(m, f64::NAN),
        iterations,
        pres: f64::NAN,
        dres: f64::NAN,
        gap_res: f64::NAN,
        pcost: f64::NAN,
        dcost: f64::NAN,
        history,
    };

    // Initial point from two least-squares solves with W = I.
    let mut e_all = vec![0.0; m];
    for b in prob.blocks() {
        identity(b.kind, &mut e_all[b.range()]);
    }
    let Some(kkt0) = prob.assemble(&e_all, &e_all) else {
        return fail(Status::NumericalFailure, history, 0);
    };
    let zeros_n = DVector::zeros(n);
    let zeros_p = DVector::zeros(p);
    let zeros_m = DVector::zeros(m);
    let Some((x0, _, dz0)) = prob.solve(&kkt0, &zeros_n, &sf.b, &sf.h) else {
        return fail(Status::NumericalFailure, history, 0);
    };
    let mut s0 = -dz0;
    prob.shift_into_cone(s0.as_mut_slice());
    let Some((_, y0, mut z0)) = prob.solve(&kkt0, &(-&sf.c), &zeros_p, &zeros_m) else {
        return fail(Status::NumericalFailure, history, 0);
    };
    prob.shift_into_cone(z0.as_mut_slice());

    let mut it = Iterate {
        x: x0,
        y: y0,
        z: z0,
        s: s0,
        tau: 1.0,
        kappa: 1.0,
    };

    for iter in 0..=cfg.max_iterations {
        let res = Residuals {
            rx: sf.a.transpose() * &it.y + sf.g.transpose() * &it.z + &sf.c * it.tau,
            ry: -(&sf.a * &it.x) + &sf.b * it.tau,
            rz: -(&sf.g * &it.x) + &sf.h * it.tau - &it.s,
            rtau: -sf.c.dot(&it.x) - sf.b.dot(&it.y) - sf.h.dot(&it.z) - it.kappa,
        };

        let tau = it.tau;
        let pres = (scaled_norm(&res.ry, &eq.e_a, true) / tau / prob.bnorm)
            .max(scaled_norm(&res.rz, &eq.e_g, true) / tau / prob.hnorm);
        let dres = scaled_norm(&res.rx, &eq.d, true) / tau / prob.cnorm;
        let pcost = sf.c.dot(&it.x) / tau;
        let dcost = -(sf.b.dot(&it.y) + sf.h.dot(&it.z)) / tau;
        let gap = it.s.dot(&it.z) / (tau * tau);
        let gap_res = gap / pcost.abs().min(dcost.abs()).max(1.0);
        let mu = (it.s.dot(&it.z) + it.tau * it.kappa) / (nu + 1.0);
        let mut stats = IterationStats {
            iteration: iter,
            primal_objective: -pcost,
            dual_objective: -dcost,
            primal_residual: pres,
            dual_residual: dres,
            gap_residual: gap_res,
            mu,
            step: 0.0,
        };

        let finish = |status: Status, history: Vec<IterationStats>| {
            let x = it.x.component_mul(&eq.d) / tau;
            let y = it.y.component_mul(&eq.e_a) / tau;
            let z = it.z.component_mul(&eq.e_g) / tau;
            IpmOutcome {
                status,
                x,
                y,
                z,
                iterations: iter,
                pres,
                dres,
                gap_res,
                pcost,
                dcost,
                history,
            }
        };

        if pres <= cfg.tolerance && dres <= cfg.tolerance && gap_res <= cfg.tolerance {
            history.push(stats);
            return finish(Status::Optimal, history);
        }

        let bz = sf.b.dot(&it.y) + sf.h.dot(&it.z);
        if bz < 0.0 {
            let aty = sf.a.transpose() * &it.y + sf.g.transpose() * &it.z;
            if scaled_norm(&aty, &eq.d, true) / -bz <= cfg.tolerance {
                history.push(stats);
                let mut out = finish(Status::PrimalInfeasible, history);
                out.y = it.y.component_mul(&eq.e_a) / -bz;
                out.z = it.z.component_mul(&eq.e_g) / -bz;
                return out;
            }
        }
        let cx = sf.c.dot(&it.x);
        if cx < 0.0 {
            let ax = &sf.a * &it.x;
            let gxs = &sf.g * &it.x + &it.s;
            let r = scaled_norm(&ax, &eq.e_a, true).max(scaled_norm(&gxs, &eq.e_g, true));
            if r / -cx <= cfg.tolerance {
                history.push(stats);
                let mut out = finish(Status::DualInfeasible, history);
                out.x = it.x.component_mul(&eq.d) / -cx;
                return out;
            }
        }
        if iter == cfg.max_iterations {
            history.push(stats);
            return finish(Status::MaxIterations, history);
        }

        let Some(kkt) = prob.assemble(it.s.as_slice(), it.z.as_slice()) else {
            history.push(stats);
            return finish(Status::NumericalFailure, history);
        };
        let mut lambda = vec![0.0; m];
        for (blk, sc) in prob.blocks().iter().zip(&kkt.scalings) {
            let r = blk.range();
            sc.apply(&it.z.as_slice()[r.clone()], &mut lambda[r]);
        }
        let Some(u1) = prob.solve(&kkt, &(-&sf.c), &sf.b, &sf.h) else {
            history.push(stats);
            return finish(Status::NumericalFailure, history);
        };
        let denom_base = -sf.c.dot(&u1.0) - sf.b.dot(&u1.1) - sf.h.dot(&u1.2);

        let direction = |f: f64, d_s: &[f64], d_k: f64| -> Option<Direction> {
            let mut tmp = vec![0.0; m];
            for blk in prob.blocks() {
                let r = blk.range();
                jordan_solve(blk.kind, &lambda[r.clone()], &d_s[r.clone()], &mut tmp[r]);
            }
            let mut wtmp = vec![0.0; m];
            prob.apply_w(&kkt, &tmp, &mut wtmp, false);
            let wtmp = DVector::from_vec(wtmp);
            let r1 = &res.rx * -f;
            let r2 = &res.ry * f;
            let r3 = &res.rz * f - &wtmp;
            let (ux, uy, uz) = prob.solve(&kkt, &r1, &r2, &r3)?;
            let num = -f * res.rtau + sf.c.dot(&ux) + sf.b.dot(&uy) + sf.h.dot(&uz) + d_k / it.tau;
            let den = it.kappa / it.tau + denom_base;
            let dtau = num / den;
            let dx = ux + &u1.0 * dtau;
            let dy = uy + &u1.1 * dtau;
            let dz = uz + &u1.2 * dtau;
            let dkappa = (d_k - it.kappa * dtau) / it.tau;
            let mut wdz = vec![0.0; m];
            let mut w2dz = vec![0.0; m];
            prob.apply_w(&kkt, dz.as_slice(), &mut wdz, false);
            prob.apply_w(&kkt, &wdz, &mut w2dz, false);
            let ds = wtmp - DVector::from_vec(w2dz);
            let ok = dtau.is_finite()
                && dkappa.is_finite()
                && dx
                    .iter()
                    .chain(dz.iter())
                    .chain(ds.iter())
                    .all(|v| v.is_finite());
            ok.then_some(Direction {
                dx,
                dy,
                dz,
                ds,
                dtau,
                dkappa,
            })
        };
        let full_step = |d: &Direction| {
            let mut a = prob.step_length(
                it.s.as_slice(),
                d.ds.as_slice(),
                it.z.as_slice(),
                d.dz.as_slice(),
            );
            if d.dtau < 0.0 {
                a = a.min(-it.tau / d.dtau);
            }
            if d.dkappa < 0.0 {
                a = a.min(-it.kappa / d.dkappa);
            }
            a
        };

        // Predictor.
        let mut d_s = vec![0.0; m];
        for blk in prob.blocks() {
            let r = blk.range();
            jordan_product(
                blk.kind,
                &lambda[r.clone()],
                &lambda[r.clone()],
                &mut d_s[r],
            );
        }
        d_s.iter_mut().for_each(|v| *v = -*v);
        let Some(aff) = direction(1.0, &d_s, -it.tau * it.kappa) else {
            history.push(stats);
            return finish(Status::NumericalFailure, history);
        };
        let alpha_aff = full_step(&aff).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

        // Corrector.
        let mut ws = vec![0.0; m];
        let mut wz = vec![0.0; m];
        prob.apply_w(&kkt, aff.ds.as_slice(), &mut ws, true);
        prob.apply_w(&kkt, aff.dz.as_slice(), &mut wz, false);
        let mut cross = vec![0.0; m];
        let mut ident = vec![0.0; m];
        for blk in prob.blocks() {
            let r = blk.range();
            jordan_product(
                blk.kind,
                &ws[r.clone()],
                &wz[r.clone()],
                &mut cross[r.clone()],
            );
            identity(blk.kind, &mut ident[r]);
        }
        for i in 0..m {
            d_s[i] += sigma * mu * ident[i] - cross[i];
        }
        let d_k = -it.tau * it.kappa + sigma * mu - aff.dtau * aff.dkappa;
        let Some(dir) = direction(1.0 - sigma, &d_s, d_k) else {
            history.push(stats);
            return finish(Status::NumericalFailure, history);
        };
        let alpha = (STEP_FRACTION * full_step(&dir)).min(1.0);
        stats.step = alpha;
        history.push(stats);
        if !(alpha > MIN_STEP) {
            return finish(Status::NumericalFailure, history);
        }

        it.x += &dir.dx * alpha;
        it.y += &dir.dy * alpha;
        it.z += &dir.dz * alpha;
        it.s += &dir.ds * alpha;
        it.tau += alpha * dir.dtau;
        it.kappa += alpha * dir.dkappa;
    }
    unreachable!("loop returns at max_iterations")
}
