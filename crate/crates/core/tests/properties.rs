//! Randomized invariants of the public API.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use robustbf::linalg::{hermitian_eig, vec_norm};
use robustbf::rab::{
    objective, solve_sequential, Constraint, RabProblem, StopReason, StoppingRule,
};
use robustbf::scenario::{sample_covariance, sinr};
use robustbf::socp::SolverConfig;
use robustbf::worst_case::{
    dual_norm_maximizer, frobenius_min_residual, max_residual_value, min_residual_value,
    perturbed_residual_norm, residual, worst_case_delta, UncertaintySpec,
};
use robustbf::{CMatrix, CVector, Complex64, ExtRational, HermitianMatrix};

fn order() -> impl Strategy<Value = ExtRational> {
    prop::sample::select(vec!["1", "5/4", "3/2", "2", "7/3", "3", "4", "inf"])
        .prop_map(|s| s.parse().unwrap())
}

fn entries(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
        .prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
}

fn matrix(m: usize, n: usize) -> impl Strategy<Value = CMatrix> {
    entries(m * n).prop_map(move |v| CMatrix::from_vec(m, n, v))
}

fn vector(n: usize) -> impl Strategy<Value = CVector> {
    entries(n).prop_map(CVector::from_vec)
}

fn nonzero_vector(n: usize) -> impl Strategy<Value = CVector> {
    vector(n).prop_filter("nonzero", |v| v.norm() > 1e-3)
}

/// `(A, x, b)` with `A` of size up to 5 x 6.
fn ls_triple() -> impl Strategy<Value = (CMatrix, CVector, CVector)> {
    (1usize..=5, 1usize..=6).prop_flat_map(|(m, n)| (matrix(m, n), nonzero_vector(n), vector(m)))
}

fn psd(n: usize) -> impl Strategy<Value = HermitianMatrix> {
    matrix(n + 2, n).prop_map(|b| HermitianMatrix::gram(&b))
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn worst_case_delta_attains_min(
        (a, x, b) in ls_triple(), p in order(), q in order(), eta in 0.0f64..4.0,
    ) {
        let spec = UncertaintySpec::new(p, q, eta).unwrap();
        let min = min_residual_value(&a, &x, &b, &spec).unwrap();
        let pert = worst_case_delta(&a, &x, &b, &spec).unwrap();
        let got = perturbed_residual_norm(&a, &pert.delta, &x, &b, p);
        prop_assert!((got - min).abs() <= 1e-10, "{got} vs {min}");
    }

    #[test]
    fn worst_case_delta_is_rank_one_member(
        (a, x, b) in ls_triple(), p in order(), q in order(), eta in 0.0f64..4.0,
        probe_seed in any::<u64>(),
    ) {
        let spec = UncertaintySpec::new(p, q, eta).unwrap();
        let d = worst_case_delta(&a, &x, &b, &spec).unwrap().delta;
        let sv = d.singular_values();
        let top = sv.max();
        prop_assert!(sv.iter().filter(|&&s| s > 1e-12 * top.max(1.0)).count() <= 1);
        let mut rng = ChaCha8Rng::seed_from_u64(probe_seed);
        let mut probes = vec![x.clone()];
        for _ in 0..64 {
            probes.push(CVector::from_fn(x.len(), |_, _| {
                use rand::Rng;
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            }));
        }
        for z in &probes {
            let lhs = vec_norm((&d * z).as_slice(), p);
            let rhs = eta * vec_norm(z.as_slice(), q);
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12, "{lhs} > {rhs}");
        }
    }

    #[test]
    fn residual_bracketed((a, x, b) in ls_triple(), p in order(), q in order(), eta in 0.0f64..4.0) {
        let spec = UncertaintySpec::new(p, q, eta).unwrap();
        let nominal = vec_norm(residual(&a, &x, &b).as_slice(), p);
        let lo = min_residual_value(&a, &x, &b, &spec).unwrap();
        let hi = max_residual_value(&a, &x, &b, &spec).unwrap();
        prop_assert!(lo >= 0.0);
        prop_assert!(lo <= nominal && nominal <= hi);
        let spread = eta * vec_norm(x.as_slice(), q);
        prop_assert!(rel_close(hi - nominal, spread, 1e-12));
        prop_assert!(nominal - lo <= spread * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn euclidean_case_is_frobenius((a, x, b) in ls_triple(), eta in 0.0f64..4.0) {
        let two = ExtRational::TWO;
        let spec = UncertaintySpec::new(two, two, eta).unwrap();
        prop_assert_eq!(
            min_residual_value(&a, &x, &b, &spec).unwrap(),
            frobenius_min_residual(&a, &x, &b, eta).unwrap()
        );
    }

    #[test]
    fn dual_norm_maximizer_is_tight(x in (1usize..8).prop_flat_map(nonzero_vector), q in order()) {
        let y = dual_norm_maximizer(&x, q).unwrap();
        prop_assert!(rel_close(vec_norm(y.as_slice(), q.conjugate()), 1.0, 1e-12));
        let inner = y.dotc(&x);
        let xq = vec_norm(x.as_slice(), q);
        prop_assert!((inner.re - xq).abs() <= 1e-12 * xq.max(1.0));
        prop_assert!(inner.im.abs() <= 1e-12 * xq.max(1.0));
    }

    #[test]
    fn norms_decrease_with_order(v in (1usize..8).prop_flat_map(vector), q in order(), r in order()) {
        let (lo, hi) = if q.value() <= r.value() { (q, r) } else { (r, q) };
        prop_assert!(vec_norm(v.as_slice(), lo) >= vec_norm(v.as_slice(), hi) * (1.0 - 1e-12));
    }

    #[test]
    fn exponent_text_round_trips(num in 1u64..50, den in 1u64..50) {
        prop_assume!(num >= den);
        let e = ExtRational::new(num, den).unwrap();
        prop_assert_eq!(e.to_string().parse::<ExtRational>().unwrap(), e);
        prop_assert_eq!(e.conjugate().conjugate(), e);
    }

    #[test]
    fn sinr_ignores_complex_scaling(
        (r_s, r_ipn, w) in (2usize..7).prop_flat_map(|n| (psd(n), psd(n), nonzero_vector(n))),
        r in 1e-3f64..1e3, theta in 0.0f64..std::f64::consts::TAU,
    ) {
        let r_ipn = r_ipn.shifted(0.1);
        let base = sinr(&w, &r_s, &r_ipn).unwrap();
        let moved = sinr(&(&w * Complex64::from_polar(r, theta)), &r_s, &r_ipn).unwrap();
        prop_assert!(rel_close(base, moved, 1e-12), "{base} vs {moved}");
    }
}

/// Small worst-case SINR problem with `p = 2`.
fn rab_problem() -> impl Strategy<Value = RabProblem> {
    (2usize..=5)
        .prop_flat_map(|n| {
            (
                (1usize..=n).prop_flat_map(move |m| matrix(m, n)),
                psd(n),
                0.05f64..1.0,
                order(),
                0.0f64..0.3,
            )
        })
        .prop_map(|(q, r_hat, gamma, order, eta_factor)| {
            let eta = eta_factor * q.norm() / (q.nrows() as f64).sqrt();
            let spec = UncertaintySpec::new(ExtRational::TWO, order, eta).unwrap();
            RabProblem::new(r_hat, q, gamma, spec, Constraint::Quadratic).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sequential_method_invariants(problem in rab_problem()) {
        let res = solve_sequential(&problem, &StoppingRule::default(), &SolverConfig::default())
            .unwrap();
        let trace = &res.trace;
        prop_assert!(trace.monotone);
        prop_assert!(trace.records.windows(2).all(|w| w[1].t >= w[0].t - 1e-9));
        prop_assert_eq!(trace.stop, StopReason::Threshold);
        for rec in &trace.records {
            // Each restricted optimum is a lower bound on the true objective
            // at the accepted point.
            prop_assert!(rec.t <= rec.objective + 1e-8, "{rec:?}");
        }
        let w = &res.beam.w;
        prop_assert!(problem.constraint_value(w) <= 1.0 + 1e-9);
        prop_assert!((objective(&problem, w) - res.objective).abs() <= 1e-12);
        // With p = 2 the minorant is tight at its reference point.
        let at_ref = problem.restriction_value(w, w).unwrap();
        prop_assert!((at_ref - res.objective).abs() <= 1e-10 * res.objective.abs().max(1.0));
    }

    #[test]
    fn objective_is_phase_invariant(problem in rab_problem(), theta in 0.0f64..std::f64::consts::TAU) {
        let w = CVector::from_fn(problem.dim(), |i, _| Complex64::new(1.0 + i as f64, -0.5));
        let rot = &w * Complex64::from_polar(1.0, theta);
        let (a, b) = (objective(&problem, &w), objective(&problem, &rot));
        prop_assert!(rel_close(a, b, 1e-12));
    }
}

#[test]
fn sample_covariance_is_unbiased() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let b = CMatrix::from_fn(6, 4, |i, j| {
        Complex64::new((i + 2 * j) as f64 * 0.1, 0.3 - j as f64 * 0.2)
    });
    let r = HermitianMatrix::gram(&b).shifted(0.5);
    let draws = 2000;
    let mut acc = CMatrix::zeros(4, 4);
    for _ in 0..draws {
        acc += sample_covariance(&r, 50, &mut rng).unwrap().matrix();
    }
    acc /= Complex64::new(draws as f64, 0.0);
    let err = (&acc - r.matrix()).norm() / r.frobenius_norm();
    // Standard error of the mean is about 1/sqrt(50 * 2000).
    assert!(err < 0.02, "relative error {err}");
    let sym = (&acc + acc.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = hermitian_eig(&HermitianMatrix::new(sym).unwrap()).unwrap();
    assert!(eig.values.iter().all(|&v| v > 0.0));
}
