//! Experiment configuration, read from TOML.
//!
//! ```toml
//! seed = 1
//! runs = 100
//! snr_list_db = [0, 10, 20, 30, 40]
//! pq_list = [["2", "1"], ["2", "3/2"], ["2", "inf"]]
//! eta_factor = 0.05          # eta = eta_factor * ||Q||_2
//! gamma_factor = 0.005       # gamma = gamma_factor * ||R_hat||_F
//! alpha = 1e-6
//! max_iter = 300
//! exact_covariance = false   # use the model covariances in place of samples
//!
//! [constraint_mode]          # omitted means quadratic
//! kind = "robust_norm"
//! p1 = "2"
//! q1 = "2"
//! eta1_factor = 0.05         # eta1 = eta1_factor * ||P||_2, R_hat = P^H P
//!
//! [output]
//! csv = "results.csv"
//! svg = "sinr.svg"
//! cpu_svg = "cpu.svg"
//!
//! [scenario]                 # every key optional, defaults shown
//! sensors = 10
//! spacing = 0.5              # wavelengths
//! noise_power_db = 0
//! snapshots = 50
//! grid_points = 2048
//! signal = { density = "gaussian", center = 30, spread = 4 }
//! presumed = { density = "gaussian", center = 34, spread = 6 }
//! interferers = [{ density = "uniform", center = 10, spread = 10, inr_db = 10 }]
//! ```
//!
//! Exponents are strings so that `"3/2"` and `"inf"` stay exact.

use std::path::{Path, PathBuf};

use robustbf::scenario::{AngularDensity, ScatteredSource, Scenario, UlaConfig};
use robustbf::ExtRational;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConstraintMode {
    Quadratic,
    RobustNorm {
        p1: ExtRational,
        q1: ExtRational,
        eta1_factor: f64,
    },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub cpu_svg: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// Signal powers are overwritten per SNR point.
    pub scenario: Scenario,
    pub snr_list_db: Vec<f64>,
    pub pq_list: Vec<(ExtRational, ExtRational)>,
    pub eta_factor: f64,
    pub gamma_factor: f64,
    pub runs: usize,
    pub alpha: f64,
    pub max_iter: usize,
    pub constraint_mode: ConstraintMode,
    pub seed: u64,
    pub exact_covariance: bool,
    pub output: OutputPaths,
}

impl Default for ExperimentConfig {
    /// The reference simulation: p = 2 with all five q values.
    fn default() -> Self {
        let two = ExtRational::TWO;
        let pq_list = ["1", "3/2", "2", "4", "inf"]
            .iter()
            .map(|q| (two, q.parse().expect("literal exponent")))
            .collect();
        ExperimentConfig {
            scenario: Scenario::reference(),
            snr_list_db: vec![0.0, 10.0, 20.0, 30.0, 40.0],
            pq_list,
            eta_factor: 0.05,
            gamma_factor: 0.005,
            runs: 100,
            alpha: 1e-6,
            max_iter: 300,
            constraint_mode: ConstraintMode::Quadratic,
            seed: 1,
            exact_covariance: false,
            output: OutputPaths::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if self.snr_list_db.is_empty() {
            return bad("snr_list_db is empty".into());
        }
        if let Some(s) = self.snr_list_db.iter().find(|s| !s.is_finite()) {
            return bad(format!("snr {s} is not finite"));
        }
        if self.pq_list.is_empty() {
            return bad("pq_list is empty".into());
        }
        for (name, v) in [
            ("eta_factor", self.eta_factor),
            ("gamma_factor", self.gamma_factor),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} = {v}"));
            }
        }
        if !(self.gamma_factor > 0.0) {
            return bad("gamma_factor must be positive".into());
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return bad(format!("alpha = {}", self.alpha));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        if let ConstraintMode::RobustNorm { eta1_factor, .. } = self.constraint_mode {
            if !(eta1_factor.is_finite() && eta1_factor >= 0.0) {
                return bad(format!("eta1_factor = {eta1_factor}"));
            }
        }
        self.scenario
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text)?;
        let cfg = raw.into_config()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    runs: Option<usize>,
    snr_list_db: Option<Vec<f64>>,
    pq_list: Option<Vec<[String; 2]>>,
    eta_factor: Option<f64>,
    gamma_factor: Option<f64>,
    alpha: Option<f64>,
    max_iter: Option<usize>,
    exact_covariance: Option<bool>,
    constraint_mode: Option<RawConstraint>,
    output: Option<RawOutput>,
    scenario: Option<RawScenario>,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawConstraint {
    Quadratic,
    RobustNorm {
        p1: String,
        q1: String,
        eta1_factor: Option<f64>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    csv: Option<PathBuf>,
    svg: Option<PathBuf>,
    cpu_svg: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    sensors: Option<usize>,
    spacing: Option<f64>,
    noise_power_db: Option<f64>,
    snapshots: Option<usize>,
    grid_points: Option<usize>,
    signal: Option<RawSource>,
    presumed: Option<RawSource>,
    interferers: Option<Vec<RawSource>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSource {
    density: String,
    center: f64,
    spread: f64,
    /// Interferers only; power relative to noise.
    inr_db: Option<f64>,
}

fn exponent(s: &str) -> Result<ExtRational, ConfigError> {
    s.parse()
        .map_err(|e| ConfigError::Invalid(format!("exponent {s:?}: {e}")))
}

impl RawSource {
    fn build(&self, power: f64) -> Result<ScatteredSource, ConfigError> {
        let density = match self.density.to_ascii_lowercase().as_str() {
            "gaussian" => AngularDensity::Gaussian,
            "uniform" => AngularDensity::Uniform,
            other => return Err(ConfigError::Invalid(format!("density {other:?}"))),
        };
        ScatteredSource::new(density, self.center, self.spread, power)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

impl RawScenario {
    fn build(self) -> Result<Scenario, ConfigError> {
        let mut sc = Scenario::reference();
        if let Some(n) = self.sensors {
            sc.ula.sensors = n;
        }
        if let Some(d) = self.spacing {
            sc.ula.spacing = d;
        }
        UlaConfig::new(sc.ula.sensors, sc.ula.spacing)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if let Some(db) = self.noise_power_db {
            sc.noise_power = 10f64.powf(db / 10.0);
        }
        if let Some(t) = self.snapshots {
            sc.snapshots = t;
        }
        if let Some(g) = self.grid_points {
            sc.grid_points = g;
        }
        if let Some(s) = self.signal {
            if s.inr_db.is_some() {
                return Err(ConfigError::Invalid("inr_db on the signal".into()));
            }
            sc.signal_true = s.build(1.0)?;
        }
        if let Some(s) = self.presumed {
            if s.inr_db.is_some() {
                return Err(ConfigError::Invalid("inr_db on the presumed signal".into()));
            }
            sc.signal_presumed = s.build(1.0)?;
        }
        // Reference interferer power is relative to unit noise.
        for i in &mut sc.interferers {
            i.power *= sc.noise_power;
        }
        if let Some(list) = self.interferers {
            sc.interferers = list
                .iter()
                .map(|s| {
                    let inr = s
                        .inr_db
                        .ok_or_else(|| ConfigError::Invalid("interferer without inr_db".into()))?;
                    s.build(sc.noise_power * 10f64.powf(inr / 10.0))
                })
                .collect::<Result<_, _>>()?;
        }
        Ok(sc)
    }
}

impl RawConfig {
    fn into_config(self) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.runs {
            cfg.runs = r;
        }
        if let Some(l) = self.snr_list_db {
            cfg.snr_list_db = l;
        }
        if let Some(l) = self.pq_list {
            cfg.pq_list = l
                .iter()
                .map(|[p, q]| Ok((exponent(p)?, exponent(q)?)))
                .collect::<Result<_, ConfigError>>()?;
        }
        if let Some(v) = self.eta_factor {
            cfg.eta_factor = v;
        }
        if let Some(v) = self.gamma_factor {
            cfg.gamma_factor = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.max_iter {
            cfg.max_iter = v;
        }
        if let Some(v) = self.exact_covariance {
            cfg.exact_covariance = v;
        }
        if let Some(c) = self.constraint_mode {
            cfg.constraint_mode = match c {
                RawConstraint::Quadratic => ConstraintMode::Quadratic,
                RawConstraint::RobustNorm {
                    p1,
                    q1,
                    eta1_factor,
                } => ConstraintMode::RobustNorm {
                    p1: exponent(&p1)?,
                    q1: exponent(&q1)?,
                    eta1_factor: eta1_factor.unwrap_or(cfg.eta_factor),
                },
            };
        }
        if let Some(o) = self.output {
            cfg.output = OutputPaths {
                csv: o.csv,
                svg: o.svg,
                cpu_svg: o.cpu_svg,
            };
        }
        if let Some(s) = self.scenario {
            cfg.scenario = s.build()?;
        }
        Ok(cfg)
    }
}
