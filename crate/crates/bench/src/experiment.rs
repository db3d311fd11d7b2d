//! Monte Carlo sweep over SNR points and norm pairs.
//!
//! Every `(snr, run)` cell draws one sample covariance from its own random
//! stream and solves all configured `(p, q)` pairs against it, so the norm
//! pairs are compared on identical data. Cells run on the rayon pool and the
//! rows are sorted afterwards, which makes the output independent of the
//! thread count.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use robustbf::linalg::{gram_factor, spectral_norm, DEFAULT_RANK_TOL};
use robustbf::rab::{
    objective, solve_sequential, Constraint, RabError, RabProblem, SequentialResult, StopReason,
    StoppingRule,
};
use robustbf::scenario::{optimal_sinr, sample_covariance, sinr, ModelCovariances};
use robustbf::socp::SolverConfig;
use robustbf::worst_case::UncertaintySpec;
use robustbf::{CMatrix, ExtRational, HermitianMatrix};
use thiserror::Error;

use crate::config::{ConstraintMode, ExperimentConfig};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("snr {snr_db} dB: {message}")]
    Model { snr_db: f64, message: String },
}

/// How a single solve ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RowStatus {
    Threshold,
    MaxIterations,
    NonAscent,
    /// A restriction came back infeasible; the row holds the best iterate.
    InfeasibleRestriction,
    /// A restriction ended without an optimal status; the row holds the
    /// best iterate.
    SubproblemFailed,
    /// No beamvector was produced.
    SetupFailed,
}

impl RowStatus {
    pub const ALL: [RowStatus; 6] = [
        RowStatus::Threshold,
        RowStatus::MaxIterations,
        RowStatus::NonAscent,
        RowStatus::InfeasibleRestriction,
        RowStatus::SubproblemFailed,
        RowStatus::SetupFailed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Threshold => "threshold",
            RowStatus::MaxIterations => "max_iterations",
            RowStatus::NonAscent => "non_ascent",
            RowStatus::InfeasibleRestriction => "infeasible_restriction",
            RowStatus::SubproblemFailed => "subproblem_failed",
            RowStatus::SetupFailed => "setup_failed",
        }
    }

    /// `true` when the sequential method ran to its own stopping rule.
    pub fn converged(self) -> bool {
        matches!(self, RowStatus::Threshold | RowStatus::NonAscent)
    }

    fn from_stop(stop: StopReason) -> Self {
        match stop {
            StopReason::Threshold => RowStatus::Threshold,
            StopReason::MaxIterations => RowStatus::MaxIterations,
            StopReason::NonAscent => RowStatus::NonAscent,
            StopReason::SolverFailure => RowStatus::SubproblemFailed,
        }
    }
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RowStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RowStatus::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown status {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub snr_db: f64,
    pub p: ExtRational,
    pub q: ExtRational,
    pub run: usize,
    /// Output SINR with the true covariances; NaN when no beamvector exists.
    pub sinr_db: f64,
    /// `max(objective, 0)^2 / w^H (R_hat + gamma I) w`; `-inf` when the
    /// objective is not positive.
    pub worst_case_sinr_db: f64,
    pub opt_bound_db: f64,
    /// Number of SOCPs solved.
    pub iterations: usize,
    /// Wall time of the sequential solve alone.
    pub cpu_ms: f64,
    pub status: RowStatus,
}

impl ResultRow {
    /// Ordering key: snr, then the position of `(p, q)` in the sweep, then
    /// run.
    fn sort_key(&self, pq_list: &[(ExtRational, ExtRational)]) -> (f64, usize, usize) {
        let pos = pq_list
            .iter()
            .position(|pq| *pq == (self.p, self.q))
            .unwrap_or(usize::MAX);
        (self.snr_db, pos, self.run)
    }
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce5_e9b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the snapshot stream for one `(snr, run)` cell.
pub fn stream_seed(seed: u64, snr_db: f64, run: usize) -> u64 {
    mix(mix(mix(seed) ^ snr_db.to_bits()) ^ run as u64)
}

/// Quantities shared by every run at one SNR point.
struct SnrPoint {
    snr_db: f64,
    model: ModelCovariances,
    q: CMatrix,
    q_norm: f64,
    opt_bound_db: f64,
}

fn snr_point(cfg: &ExperimentConfig, snr_db: f64) -> Result<SnrPoint, ExperimentError> {
    let err = |message: String| ExperimentError::Model { snr_db, message };
    let model = cfg
        .scenario
        .clone()
        .with_snr_db(snr_db)
        .model()
        .map_err(|e| err(e.to_string()))?;
    let q = gram_factor(&model.r_s_presumed, DEFAULT_RANK_TOL).map_err(|e| err(e.to_string()))?;
    let q_norm = spectral_norm(&q).map_err(|e| err(e.to_string()))?;
    let opt = optimal_sinr(&model.r_s, &model.r_ipn).map_err(|e| err(e.to_string()))?;
    Ok(SnrPoint {
        snr_db,
        model,
        q,
        q_norm,
        opt_bound_db: to_db(opt),
    })
}

fn build_problem(
    cfg: &ExperimentConfig,
    point: &SnrPoint,
    r_hat: &HermitianMatrix,
    p: ExtRational,
    q: ExtRational,
) -> Result<RabProblem, RabError> {
    let gamma = cfg.gamma_factor * r_hat.frobenius_norm();
    let spec = UncertaintySpec::new(p, q, cfg.eta_factor * point.q_norm)
        .map_err(|e| RabError::InvalidProblem(e.to_string()))?;
    let constraint = match cfg.constraint_mode {
        ConstraintMode::Quadratic => Constraint::Quadratic,
        ConstraintMode::RobustNorm {
            p1,
            q1,
            eta1_factor,
        } => {
            let pm = gram_factor(r_hat, DEFAULT_RANK_TOL)?;
            let eta1 = eta1_factor * spectral_norm(&pm)?;
            let spec1 = UncertaintySpec::new(p1, q1, eta1)
                .map_err(|e| RabError::InvalidProblem(e.to_string()))?;
            Constraint::RobustNorm { p: pm, spec: spec1 }
        }
    };
    RabProblem::new(r_hat.clone(), point.q.clone(), gamma, spec, constraint)
}

fn row_from(
    point: &SnrPoint,
    problem: &RabProblem,
    (p, q): (ExtRational, ExtRational),
    run: usize,
    outcome: Option<(&SequentialResult, RowStatus)>,
    cpu_ms: f64,
) -> ResultRow {
    let mut row = ResultRow {
        snr_db: point.snr_db,
        p,
        q,
        run,
        sinr_db: f64::NAN,
        worst_case_sinr_db: f64::NAN,
        opt_bound_db: point.opt_bound_db,
        iterations: 0,
        cpu_ms,
        status: RowStatus::SetupFailed,
    };
    if let Some((res, status)) = outcome {
        let w = &res.beam.w;
        row.status = status;
        row.iterations = res.trace.steps();
        if let Ok(s) = sinr(w, &point.model.r_s, &point.model.r_ipn) {
            row.sinr_db = to_db(s);
        }
        let loaded = problem.r_hat().shifted(problem.gamma()).quad_form(w);
        row.worst_case_sinr_db = to_db(objective(problem, w).max(0.0).powi(2) / loaded);
    }
    row
}

/// Solves every `(p, q)` pair on one sample covariance.
fn run_cell(cfg: &ExperimentConfig, point: &SnrPoint, run: usize) -> Vec<ResultRow> {
    let r_hat = if cfg.exact_covariance {
        Ok(point.model.r_total.clone())
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, point.snr_db, run));
        sample_covariance(&point.model.r_total, cfg.scenario.snapshots, &mut rng)
    };
    let rule = StoppingRule {
        alpha: cfg.alpha,
        max_iter: cfg.max_iter,
    };
    let solver = SolverConfig::default();
    let mut rows = Vec::with_capacity(cfg.pq_list.len());
    for &(p, q) in &cfg.pq_list {
        let problem = match &r_hat {
            Ok(r) => build_problem(cfg, point, r, p, q),
            Err(e) => Err(RabError::InvalidProblem(e.to_string())),
        };
        let problem = match problem {
            Ok(pr) => pr,
            Err(e) => {
                log::warn!("snr {} run {run} ({p},{q}): {e}", point.snr_db);
                rows.push(ResultRow {
                    snr_db: point.snr_db,
                    p,
                    q,
                    run,
                    sinr_db: f64::NAN,
                    worst_case_sinr_db: f64::NAN,
                    opt_bound_db: point.opt_bound_db,
                    iterations: 0,
                    cpu_ms: 0.0,
                    status: RowStatus::SetupFailed,
                });
                continue;
            }
        };
        let started = Instant::now();
        let outcome = solve_sequential(&problem, &rule, &solver);
        let cpu_ms = started.elapsed().as_secs_f64() * 1e3;
        let row = match &outcome {
            Ok(res) => row_from(
                point,
                &problem,
                (p, q),
                run,
                Some((res, RowStatus::from_stop(res.trace.stop))),
                cpu_ms,
            ),
            Err(e) => {
                log::warn!("snr {} run {run} ({p},{q}): {e}", point.snr_db);
                let status = match e {
                    RabError::InfeasibleRestriction { .. } => RowStatus::InfeasibleRestriction,
                    _ => RowStatus::SubproblemFailed,
                };
                let partial = e.partial().map(|r| (r, status));
                let mut row = row_from(point, &problem, (p, q), run, partial, cpu_ms);
                if partial.is_none() {
                    row.status = RowStatus::SetupFailed;
                }
                row
            }
        };
        rows.push(row);
    }
    rows
}

/// Runs the full sweep. Rows come back ordered by snr, then `(p, q)` in
/// configuration order, then run.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, ExperimentError> {
    cfg.validate()?;
    let points = cfg
        .snr_list_db
        .iter()
        .map(|&s| snr_point(cfg, s))
        .collect::<Result<Vec<_>, _>>()?;
    let cells: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|i| (0..cfg.runs).map(move |r| (i, r)))
        .collect();
    let mut rows: Vec<ResultRow> = cells
        .par_iter()
        .flat_map_iter(|&(i, run)| run_cell(cfg, &points[i], run))
        .collect();
    rows.sort_by(|a, b| {
        let (ka, kb) = (a.sort_key(&cfg.pq_list), b.sort_key(&cfg.pq_list));
        ka.0.total_cmp(&kb.0)
            .then(ka.1.cmp(&kb.1))
            .then(ka.2.cmp(&kb.2))
    });
    Ok(rows)
}

/// Per-series statistics at one SNR point.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesSummary {
    pub snr_db: f64,
    pub p: ExtRational,
    pub q: ExtRational,
    /// Rows with a finite SINR.
    pub count: usize,
    pub mean_sinr_db: f64,
    pub mean_cpu_ms: f64,
    pub mean_iterations: f64,
    pub opt_bound_db: f64,
}

/// Means over runs for every `(snr, p, q)` present in `rows`, in row order.
pub fn summarize(rows: &[ResultRow]) -> Vec<SeriesSummary> {
    let mut out: Vec<SeriesSummary> = Vec::new();
    let mut sums: Vec<(f64, f64, f64, usize, usize)> = Vec::new();
    for r in rows {
        let idx = match out
            .iter()
            .position(|s| s.snr_db == r.snr_db && s.p == r.p && s.q == r.q)
        {
            Some(i) => i,
            None => {
                out.push(SeriesSummary {
                    snr_db: r.snr_db,
                    p: r.p,
                    q: r.q,
                    count: 0,
                    mean_sinr_db: f64::NAN,
                    mean_cpu_ms: f64::NAN,
                    mean_iterations: f64::NAN,
                    opt_bound_db: r.opt_bound_db,
                });
                sums.push((0.0, 0.0, 0.0, 0, 0));
                out.len() - 1
            }
        };
        let acc = &mut sums[idx];
        if r.sinr_db.is_finite() {
            acc.0 += r.sinr_db;
            acc.3 += 1;
        }
        acc.1 += r.cpu_ms;
        acc.2 += r.iterations as f64;
        acc.4 += 1;
    }
    for (s, acc) in out.iter_mut().zip(&sums) {
        s.count = acc.3;
        if acc.3 > 0 {
            s.mean_sinr_db = acc.0 / acc.3 as f64;
        }
        s.mean_cpu_ms = acc.1 / acc.4 as f64;
        s.mean_iterations = acc.2 / acc.4 as f64;
    }
    out
}
