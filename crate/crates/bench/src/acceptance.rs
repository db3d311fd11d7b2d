//! Acceptance checks, shared by the `selftest` subcommand and the
//! `acceptance` test target.
//!
//! Each check draws its instances from a fixed seed and compares the
//! library against an oracle that does not share its code path: closed
//! forms against sampled adversaries, SOC towers against direct norms, the
//! sequential method against a Schur eigensolver and a dense grid search.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use robustbf::cone_ir::{lq_epigraph_affine, AffineExpr, ComplexAffine, ConeProgram};
use robustbf::linalg::{spectral_norm, vec_norm};
use robustbf::rab::{solve_sequential, Constraint, RabProblem, StopReason, StoppingRule};
use robustbf::scenario::{sample_covariance, sinr, Scenario};
use robustbf::socp::planted::planted;
use robustbf::socp::{self, SolverConfig, Status};
use robustbf::worst_case::{
    adversarial_sample, frobenius_min_residual, max_residual_value, min_residual_value,
    perturbed_residual_norm, worst_case_delta, UncertaintySpec,
};
use robustbf::{CMatrix, CVector, Complex64, ExtRational, HermitianMatrix};

use crate::config::ExperimentConfig;
use crate::experiment::{run_experiment, summarize, RowStatus};
use crate::output::{emit_csv, emit_svg_lines, Metric};

/// Result of one check.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub label: String,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {:<4} {} ({:.1} s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.label,
            self.title,
            self.seconds,
            self.detail
        )
    }
}

pub const CRITERIA: [(u8, &str); 10] = [
    (1, "worst-case perturbation attains the closed-form minimum"),
    (
        2,
        "sampled perturbations stay below the closed-form maximum",
    ),
    (3, "Euclidean case equals the Frobenius-ball formula"),
    (4, "lq-norm SOC epigraph is exact"),
    (5, "sequential restriction ascends monotonically"),
    (6, "zero radius recovers the pencil eigenvalue"),
    (7, "two-sensor problems match a brute-force grid"),
    (
        8,
        "cone solver recovers planted optima and flags infeasibility",
    ),
    (9, "reference Monte Carlo protocol"),
    (10, "SINR is invariant to complex scaling"),
];

/// Runs criterion `id`; artifacts of criterion 9 go to `out_dir`.
pub fn run_criterion(id: u8, out_dir: &Path) -> Outcome {
    let title = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map_or("unknown criterion", |c| c.1);
    let started = Instant::now();
    let result = match id {
        1 => criterion_attainment(),
        2 => criterion_bracketing(),
        3 => criterion_frobenius(),
        4 => criterion_epigraph(),
        5 => criterion_ascent(),
        6 => criterion_zero_radius(),
        7 => criterion_grid(),
        8 => criterion_solver(),
        9 => criterion_protocol(out_dir),
        10 => criterion_invariance(),
        _ => Err(format!("no criterion {id}")),
    };
    finish(format!("C{id}"), title, result, started)
}

/// Bound discipline with the presumed model equal to the true one and the
/// sample covariance replaced by the true covariance.
pub fn run_exact_model_check() -> Outcome {
    let started = Instant::now();
    finish(
        "EXACT".into(),
        "worst-case SINR below actual SINR on an exact model",
        exact_model_bounds(),
        started,
    )
}

fn finish(
    label: String,
    title: &'static str,
    result: Result<String, String>,
    started: Instant,
) -> Outcome {
    let (passed, detail) = match result {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    Outcome {
        label,
        title,
        passed,
        detail,
        seconds: started.elapsed().as_secs_f64(),
    }
}

fn complex_entry(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn random_matrix(m: usize, n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(m, n, |_, _| complex_entry(rng))
}

fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> CVector {
    CVector::from_fn(n, |_, _| complex_entry(rng))
}

/// `B^H B / k` for a random `k x n` matrix `B`, `k >= n`.
fn random_psd(n: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
    let k = n + rng.random_range(0..4);
    let b = random_matrix(k, n, rng);
    HermitianMatrix::gram(&b).scaled(1.0 / k as f64)
}

fn exponent(s: &str) -> ExtRational {
    s.parse().expect("literal exponent")
}

const ORDERS: [&str; 5] = ["1", "3/2", "2", "4", "inf"];
const RADII: [f64; 3] = [0.0, 0.3, 3.0];

struct LsInstance {
    a: CMatrix,
    x: CVector,
    b: CVector,
    spec: UncertaintySpec,
}

/// 200 instances with dimensions up to 4 x 5, cycling through all
/// `(p, q, η)` combinations.
fn ls_instances() -> Vec<LsInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    (0..200)
        .map(|i| {
            let combo = i % (ORDERS.len() * ORDERS.len() * RADII.len());
            let p = exponent(ORDERS[combo % 5]);
            let q = exponent(ORDERS[(combo / 5) % 5]);
            let eta = RADII[combo / 25];
            let m = rng.random_range(1..=4);
            let n = rng.random_range(1..=5);
            let a = random_matrix(m, n, &mut rng);
            let mut x = random_vector(n, &mut rng);
            if x.iter().all(|z| z.norm() < 1e-3) {
                x[0] = Complex64::new(1.0, 0.0);
            }
            let b = random_vector(m, &mut rng);
            LsInstance {
                a,
                x,
                b,
                spec: UncertaintySpec { p, q, eta },
            }
        })
        .collect()
}

/// Unit-`q`-norm probes: `x` itself plus random directions.
fn probes(x: &CVector, q: ExtRational, count: usize, rng: &mut ChaCha8Rng) -> Vec<CVector> {
    let mut out = Vec::with_capacity(count);
    out.push(x / Complex64::new(vec_norm(x.as_slice(), q), 0.0));
    while out.len() < count {
        let z = random_vector(x.len(), rng);
        let nz = vec_norm(z.as_slice(), q);
        if nz > 0.0 {
            out.push(z / Complex64::new(nz, 0.0));
        }
    }
    out
}

fn criterion_attainment() -> Result<String, String> {
    let instances = ls_instances();
    let failures: Vec<String> = instances
        .par_iter()
        .enumerate()
        .filter_map(|(i, inst)| {
            let LsInstance { a, x, b, spec } = inst;
            let mut rng = ChaCha8Rng::seed_from_u64(0xa770 + i as u64);
            let min = match min_residual_value(a, x, b, spec) {
                Ok(v) => v,
                Err(e) => return Some(format!("#{i}: {e}")),
            };
            let pert = match worst_case_delta(a, x, b, spec) {
                Ok(p) => p,
                Err(e) => return Some(format!("#{i}: {e}")),
            };
            let attained = perturbed_residual_norm(a, &pert.delta, x, b, spec.p);
            if (attained - min).abs() > 1e-10 {
                return Some(format!("#{i}: attained {attained} vs closed form {min}"));
            }
            let zs = probes(x, spec.q, 10_000, &mut rng);
            if !spec.admits_on(&pert.delta, &zs, 1e-12) {
                return Some(format!("#{i}: worst-case perturbation leaves the ball"));
            }
            match adversarial_sample(a, x, b, spec, 1000, &mut rng) {
                Ok(ext) if ext.min < min - 1e-8 => {
                    Some(format!("#{i}: sample {} undercuts {min}", ext.min))
                }
                Ok(_) => None,
                Err(e) => Some(format!("#{i}: {e}")),
            }
        })
        .collect();
    if failures.is_empty() {
        Ok(format!(
            "{} instances, 1000 samples and 10000 probes each",
            instances.len()
        ))
    } else {
        Err(failures.join("; "))
    }
}

fn criterion_bracketing() -> Result<String, String> {
    let instances = ls_instances();
    let worst: Vec<Result<f64, String>> = instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            let LsInstance { a, x, b, spec } = inst;
            let mut rng = ChaCha8Rng::seed_from_u64(0xb4ac + i as u64);
            let max = max_residual_value(a, x, b, spec).map_err(|e| e.to_string())?;
            let ext =
                adversarial_sample(a, x, b, spec, 1000, &mut rng).map_err(|e| e.to_string())?;
            if ext.max > max + 1e-8 {
                return Err(format!("#{i}: sample {} exceeds {max}", ext.max));
            }
            Ok(ext.max - max)
        })
        .collect();
    let errors: Vec<String> = worst.iter().filter_map(|r| r.clone().err()).collect();
    if !errors.is_empty() {
        return Err(errors.join("; "));
    }
    let closest = worst
        .iter()
        .filter_map(|r| r.as_ref().ok().copied())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(format!(
        "{} instances, largest sample minus bound {closest:.3e}",
        instances.len()
    ))
}

fn criterion_frobenius() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xf40b);
    let two = ExtRational::TWO;
    for i in 0..100 {
        let m = rng.random_range(1..=6);
        let n = rng.random_range(1..=6);
        let a = random_matrix(m, n, &mut rng);
        let x = random_vector(n, &mut rng);
        let b = random_vector(m, &mut rng);
        let eta = rng.random_range(0.0..3.0);
        let spec = UncertaintySpec::new(two, two, eta).map_err(|e| e.to_string())?;
        let induced = min_residual_value(&a, &x, &b, &spec).map_err(|e| e.to_string())?;
        let frob = frobenius_min_residual(&a, &x, &b, eta).map_err(|e| e.to_string())?;
        if induced != frob {
            return Err(format!("#{i}: {induced} != {frob}"));
        }
    }
    Ok("100 instances, bitwise equal".into())
}

fn criterion_epigraph() -> Result<String, String> {
    let orders = ["1", "3/2", "2", "7/3", "4", "inf"];
    let mut rng = ChaCha8Rng::seed_from_u64(0xe916);
    let cfg = SolverConfig::default();
    let mut worst = 0.0f64;
    for qs in orders {
        let q = exponent(qs);
        for i in 0..50 {
            let w = random_vector(10, &mut rng);
            let mut prog = ConeProgram::new();
            let s = prog.add_var("s");
            let entries: Vec<ComplexAffine> = w
                .iter()
                .map(|z| ComplexAffine {
                    re: AffineExpr::constant(z.re),
                    im: AffineExpr::constant(z.im),
                })
                .collect();
            lq_epigraph_affine(&mut prog, &entries, s, q).map_err(|e| e.to_string())?;
            prog.maximize(AffineExpr::term(s, -1.0))
                .map_err(|e| e.to_string())?;
            let sol = socp::solve(&prog, &cfg).map_err(|e| e.to_string())?;
            if sol.status != Status::Optimal {
                return Err(format!("q={qs} #{i}: {:?}", sol.status));
            }
            let exact = vec_norm(w.as_slice(), q);
            let rel = (sol.value(s) - exact).abs() / exact;
            worst = worst.max(rel);
            if rel > 1e-6 {
                return Err(format!("q={qs} #{i}: {} vs {exact}", sol.value(s)));
            }
        }
    }
    Ok(format!("300 programs, worst relative error {worst:.2e}"))
}

/// Reference scenario with randomized SNR and interferer.
fn random_reference(rng: &mut ChaCha8Rng) -> (Scenario, f64) {
    let snr = rng.random_range(0.0..40.0);
    let mut sc = Scenario::reference().with_snr_db(snr);
    let inr_db: f64 = rng.random_range(0.0..20.0);
    sc.interferers[0].power = 10f64.powf(inr_db / 10.0);
    sc.interferers[0].center = rng.random_range(-30.0..15.0);
    (sc, snr)
}

fn criterion_ascent() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa5c3);
    let cases: Vec<(Scenario, f64, u64)> = (0..100)
        .map(|_| {
            let (sc, snr) = random_reference(&mut rng);
            (sc, snr, rng.random())
        })
        .collect();
    let rule = StoppingRule::default();
    let results: Vec<Result<usize, String>> = cases
        .par_iter()
        .enumerate()
        .map(|(i, (sc, snr, seed))| {
            let model = sc.model().map_err(|e| e.to_string())?;
            let mut srng = ChaCha8Rng::seed_from_u64(*seed);
            let r_hat = sample_covariance(&model.r_total, sc.snapshots, &mut srng)
                .map_err(|e| e.to_string())?;
            let q = robustbf::linalg::gram_factor(&model.r_s_presumed, 1e-8)
                .map_err(|e| e.to_string())?;
            let eta = 0.05 * spectral_norm(&q).map_err(|e| e.to_string())?;
            let gamma = 0.005 * r_hat.frobenius_norm();
            let mut steps = 0;
            for qs in ORDERS {
                let spec = UncertaintySpec::new(ExtRational::TWO, exponent(qs), eta)
                    .map_err(|e| e.to_string())?;
                let problem =
                    RabProblem::new(r_hat.clone(), q.clone(), gamma, spec, Constraint::Quadratic)
                        .map_err(|e| e.to_string())?;
                let res = solve_sequential(&problem, &rule, &SolverConfig::default())
                    .map_err(|e| format!("#{i} snr {snr:.1} q={qs}: {e}"))?;
                let recs = &res.trace.records;
                if let Some(k) = recs.windows(2).position(|w| w[1].t < w[0].t - 1e-9) {
                    return Err(format!(
                        "#{i} q={qs}: t fell from {} to {}",
                        recs[k].t,
                        recs[k + 1].t
                    ));
                }
                if res.trace.stop != StopReason::Threshold || res.trace.steps() > rule.max_iter {
                    return Err(format!(
                        "#{i} q={qs}: stopped by {:?} after {} steps",
                        res.trace.stop,
                        res.trace.steps()
                    ));
                }
                steps = steps.max(res.trace.steps());
            }
            Ok(steps)
        })
        .collect();
    let errors: Vec<String> = results.iter().filter_map(|r| r.clone().err()).collect();
    if !errors.is_empty() {
        return Err(errors.join("; "));
    }
    let longest = results
        .iter()
        .filter_map(|r| r.clone().ok())
        .max()
        .unwrap_or(0);
    Ok(format!(
        "500 traces monotone and stopped by the threshold, longest {longest} steps"
    ))
}

/// Largest eigenvalue of `(R + γ I)^{-1} Q^H Q` from a complex Schur form.
fn pencil_max_eig(r_hat: &HermitianMatrix, gamma: f64, q: &CMatrix) -> Result<f64, String> {
    let loaded = r_hat.shifted(gamma).into_matrix();
    let qhq = q.adjoint() * q;
    let m = loaded
        .lu()
        .solve(&qhq)
        .ok_or("singular loaded covariance")?;
    let eig = m.schur().eigenvalues().ok_or("Schur form not triangular")?;
    Ok(eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

fn criterion_zero_radius() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x2e40);
    let two = ExtRational::TWO;
    let mut worst = 0.0f64;
    for i in 0..50 {
        let n = rng.random_range(2..=8);
        let m = rng.random_range(1..=n);
        let q = random_matrix(m, n, &mut rng);
        let r_hat = random_psd(n, &mut rng);
        let gamma = rng.random_range(0.01..1.0);
        let spec = UncertaintySpec::new(two, two, 0.0).map_err(|e| e.to_string())?;
        let problem = RabProblem::new(r_hat.clone(), q.clone(), gamma, spec, Constraint::Quadratic)
            .map_err(|e| e.to_string())?;
        let res = solve_sequential(&problem, &StoppingRule::default(), &SolverConfig::default())
            .map_err(|e| format!("#{i}: {e}"))?;
        let expect = pencil_max_eig(&r_hat, gamma, &q)?.sqrt();
        let rel = (res.t - expect).abs() / expect;
        worst = worst.max(rel);
        if rel > 1e-5 {
            return Err(format!("#{i}: t = {} vs {expect}", res.t));
        }
    }
    Ok(format!("50 instances, worst relative error {worst:.2e}"))
}

/// Maximum over a 1000 x 1000 grid of boundary directions
/// `(cos θ, sin θ e^{jφ})`, with the first entry real by phase invariance.
fn grid_optimum(q: &CMatrix, loaded: &HermitianMatrix, eta: f64, order: ExtRational) -> f64 {
    const STEPS: usize = 1000;
    let l = loaded.matrix();
    let mut best = 0.0f64;
    for i in 0..STEPS {
        let theta = 0.5 * PI * i as f64 / (STEPS - 1) as f64;
        let (s, c) = theta.sin_cos();
        for j in 0..STEPS {
            let phi = 2.0 * PI * j as f64 / STEPS as f64;
            let w1 = Complex64::from_polar(s, phi);
            let w0 = Complex64::new(c, 0.0);
            let quad =
                (l[(0, 0)].re * c * c + l[(1, 1)].re * s * s + 2.0 * (w0 * l[(0, 1)] * w1).re)
                    .max(0.0);
            let qw: f64 = (0..q.nrows())
                .map(|r| (q[(r, 0)] * w0 + q[(r, 1)] * w1).norm_sqr())
                .sum();
            let val = (qw.sqrt() - eta * vec_norm(&[w0, w1], order)) / quad.sqrt();
            best = best.max(val);
        }
    }
    best
}

fn criterion_grid() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x621d);
    let instances: Vec<(CMatrix, HermitianMatrix, f64, f64)> = (0..20)
        .map(|_| {
            let q = random_matrix(2, 2, &mut rng);
            let r_hat = random_psd(2, &mut rng);
            let gamma = rng.random_range(0.05..0.5);
            let eta_factor = rng.random_range(0.05..0.3);
            (q, r_hat, gamma, eta_factor)
        })
        .collect();
    let results: Vec<Result<f64, String>> = instances
        .par_iter()
        .enumerate()
        .map(|(i, (q, r_hat, gamma, eta_factor))| {
            let eta = eta_factor * spectral_norm(q).map_err(|e| e.to_string())?;
            let mut worst = 0.0f64;
            for qs in ["1", "2", "inf"] {
                let order = exponent(qs);
                let spec = UncertaintySpec::new(ExtRational::TWO, order, eta)
                    .map_err(|e| e.to_string())?;
                let problem = RabProblem::new(
                    r_hat.clone(),
                    q.clone(),
                    *gamma,
                    spec,
                    Constraint::Quadratic,
                )
                .map_err(|e| e.to_string())?;
                let res =
                    solve_sequential(&problem, &StoppingRule::default(), &SolverConfig::default())
                        .map_err(|e| format!("#{i} q={qs}: {e}"))?;
                let grid = grid_optimum(q, &r_hat.shifted(*gamma), eta, order);
                let err = (res.t - grid).abs();
                if err > 1e-3 {
                    return Err(format!("#{i} q={qs}: t = {} vs grid {grid}", res.t));
                }
                worst = worst.max(err);
            }
            Ok(worst)
        })
        .collect();
    let errors: Vec<String> = results.iter().filter_map(|r| r.clone().err()).collect();
    if !errors.is_empty() {
        return Err(errors.join("; "));
    }
    let worst = results
        .iter()
        .filter_map(|r| r.clone().ok())
        .fold(0.0, f64::max);
    Ok(format!(
        "20 instances x 3 orders, worst gap to grid {worst:.2e}"
    ))
}

/// Five primal-infeasible programs.
fn infeasible_programs() -> Vec<(&'static str, ConeProgram)> {
    let c = AffineExpr::constant;
    let mut out = Vec::new();

    let mut p = ConeProgram::new();
    let x = p.add_var("x");
    p.maximize(x.into()).unwrap();
    p.add_le(c(1.0), x.into()).unwrap();
    p.add_le(x.into(), c(0.0)).unwrap();
    out.push(("1 <= x <= 0", p));

    let mut p = ConeProgram::new();
    let t = p.add_var("t");
    p.maximize(t.into()).unwrap();
    p.add_soc(c(1.0), vec![AffineExpr::from(t) - c(3.0)])
        .unwrap();
    p.add_le(t.into(), c(1.0)).unwrap();
    out.push(("|t - 3| <= 1, t <= 1", p));

    let mut p = ConeProgram::new();
    let x = p.add_var("x");
    let y = p.add_var("y");
    p.maximize(AffineExpr::from(x) - AffineExpr::from(y))
        .unwrap();
    p.add_equality(AffineExpr::from(x) + AffineExpr::from(y) - c(1.0))
        .unwrap();
    p.add_equality(AffineExpr::from(x) + AffineExpr::from(y) - c(2.0))
        .unwrap();
    out.push(("x + y = 1, x + y = 2", p));

    let mut p = ConeProgram::new();
    let x = p.add_var("x");
    let y = p.add_var("y");
    p.maximize(y.into()).unwrap();
    p.add_soc(c(1.0), vec![x.into(), y.into()]).unwrap();
    p.add_le(c(2.0), x.into()).unwrap();
    out.push(("||(x, y)|| <= 1, x >= 2", p));

    let mut p = ConeProgram::new();
    let t = p.add_var("t");
    let u = p.add_var("u");
    let v = p.add_var("v");
    p.maximize(u.into()).unwrap();
    p.add_soc(t.into(), vec![u.into(), v.into()]).unwrap();
    p.add_le(t.into(), c(-1.0)).unwrap();
    out.push(("||(u, v)|| <= t <= -1", p));
    out
}

fn criterion_solver() -> Result<String, String> {
    let cfg = SolverConfig::default();
    let mut worst = 0.0f64;
    for seed in 1000..1020 {
        let pl = planted(seed);
        let sol = socp::solve(&pl.prog, &cfg).map_err(|e| e.to_string())?;
        if sol.status != Status::Optimal {
            return Err(format!("planted seed {seed}: {:?}", sol.status));
        }
        let rel = (sol.objective - pl.optimum).abs() / pl.optimum.abs().max(1.0);
        worst = worst.max(rel);
        if rel > 1e-6 {
            return Err(format!(
                "planted seed {seed}: {} vs {}",
                sol.objective, pl.optimum
            ));
        }
    }
    for (name, prog) in infeasible_programs() {
        let sol = socp::solve(&prog, &cfg).map_err(|e| e.to_string())?;
        if sol.status != Status::PrimalInfeasible {
            return Err(format!("{name}: reported {:?}", sol.status));
        }
    }
    Ok(format!(
        "20 planted optima (worst relative error {worst:.2e}), 5 infeasible programs flagged"
    ))
}

fn criterion_protocol(out_dir: &Path) -> Result<String, String> {
    let cfg = ExperimentConfig::default();
    let rows = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let expected = cfg.snr_list_db.len() * cfg.pq_list.len() * cfg.runs;
    if rows.len() != expected {
        return Err(format!("{} rows, expected {expected}", rows.len()));
    }
    let csv = out_dir.join("protocol.csv");
    let svg = out_dir.join("protocol_sinr.svg");
    let cpu = out_dir.join("protocol_cpu.svg");
    emit_csv(&rows, &csv).map_err(|e| e.to_string())?;
    emit_svg_lines(&rows, Metric::SinrDb, &svg).map_err(|e| e.to_string())?;
    emit_svg_lines(&rows, Metric::CpuMs, &cpu).map_err(|e| e.to_string())?;

    let mut problems = Vec::new();
    if let Some(r) = rows.iter().find(|r| r.sinr_db > r.opt_bound_db + 1e-6) {
        problems.push(format!("row above the optimal bound: {r:?}"));
    }
    let unconverged = rows.iter().filter(|r| !r.status.converged()).count();
    let failed = rows
        .iter()
        .filter(|r| r.status == RowStatus::SetupFailed)
        .count();
    if failed > 0 {
        problems.push(format!("{failed} rows without a beamvector"));
    }
    let summary = summarize(&rows);
    let mut lines = Vec::new();
    for &snr in &cfg.snr_list_db {
        let at: Vec<_> = summary.iter().filter(|s| s.snr_db == snr).collect();
        let best = at
            .iter()
            .max_by(|a, b| a.mean_sinr_db.total_cmp(&b.mean_sinr_db))
            .expect("nonempty sweep");
        let fastest = at
            .iter()
            .min_by(|a, b| a.mean_cpu_ms.total_cmp(&b.mean_cpu_ms))
            .expect("nonempty sweep");
        let means: Vec<String> = at
            .iter()
            .map(|s| format!("q={}:{:.2}", s.q, s.mean_sinr_db))
            .collect();
        lines.push(format!(
            "snr {snr}: opt {:.2} dB, mean SINR [{}], best q={}, fastest q={} ({:.1} ms)",
            best.opt_bound_db,
            means.join(" "),
            best.q,
            fastest.q,
            fastest.mean_cpu_ms
        ));
        for s in &at {
            let gap = s.opt_bound_db - s.mean_sinr_db;
            if !s.mean_sinr_db.is_finite() || s.count != cfg.runs || gap > 20.0 {
                problems.push(format!(
                    "snr {snr} q={}: mean {:.2} dB over {} finite rows, {:.2} dB below the bound",
                    s.q, s.mean_sinr_db, s.count, gap
                ));
            }
        }
    }
    let report = format!(
        "{} rows, {unconverged} not converged; {}",
        rows.len(),
        lines.join("; ")
    );
    if problems.is_empty() {
        Ok(report)
    } else {
        Err(format!("{}. {report}", problems.join("; ")))
    }
}

fn criterion_invariance() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a7e);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let n = rng.random_range(2..=10);
        let r_s = random_psd(n, &mut rng);
        let r_ipn = random_psd(n, &mut rng).shifted(0.1);
        let w = random_vector(n, &mut rng);
        let r = 10f64.powf(rng.random_range(-3.0..3.0));
        let theta = rng.random_range(0.0..2.0 * PI);
        let base = sinr(&w, &r_s, &r_ipn).map_err(|e| e.to_string())?;
        let moved = sinr(&(&w * Complex64::from_polar(r, theta)), &r_s, &r_ipn)
            .map_err(|e| e.to_string())?;
        let rel = (moved - base).abs() / base.abs();
        worst = worst.max(rel);
        if rel > 1e-12 {
            return Err(format!("#{i}: {base} vs {moved} (r={r}, θ={theta})"));
        }
    }
    Ok(format!("100 draws, worst relative change {worst:.2e}"))
}

fn exact_model_bounds() -> Result<String, String> {
    let mut cfg = ExperimentConfig {
        runs: 1,
        exact_covariance: true,
        ..ExperimentConfig::default()
    };
    cfg.scenario.signal_presumed = cfg.scenario.signal_true;
    let rows = run_experiment(&cfg).map_err(|e| e.to_string())?;
    for r in &rows {
        if !(r.sinr_db <= r.opt_bound_db + 1e-6) {
            return Err(format!("SINR above the bound: {r:?}"));
        }
        if !(r.worst_case_sinr_db <= r.sinr_db + 1e-6) {
            return Err(format!("worst case above actual: {r:?}"));
        }
    }
    Ok(format!("{} rows", rows.len()))
}
