//! Uniform linear array scenarios with locally incoherently scattered
//! sources.
//!
//! A scattered source with angular power density `ρ(θ)` has covariance
//! `power · ∫ ρ(θ) a(θ) a(θ)^H dθ`, discretized here with trapezoidal
//! weights on a uniform grid. Traces are normalized to `N · power`, so the
//! per-sensor SNR equals `power / noise_power`.
//!
//! Spread conventions: the standard deviation for Gaussian densities
//! (truncated at four of them on each side) and the full support width for
//! uniform densities.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::{
    cholesky_psd, hermitian_eig, psd_sqrt, solve_lower, solve_lower_adjoint, CMatrix, CVector,
    HermitianMatrix, LinalgError,
};
use crate::Complex64;

pub const DEFAULT_GRID_POINTS: usize = 2048;
pub const MIN_GRID_POINTS: usize = 64;
/// Gaussian densities are truncated at this many standard deviations.
pub const GAUSSIAN_SUPPORT: f64 = 4.0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("grid of {0} points is coarser than the minimum of {MIN_GRID_POINTS}")]
    GridTooCoarse(usize),
    #[error("beamvector must be nonzero")]
    ZeroVector,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UlaConfig {
    pub sensors: usize,
    /// Inter-element spacing in wavelengths.
    pub spacing: f64,
}

impl UlaConfig {
    pub fn new(sensors: usize, spacing: f64) -> Result<Self, ScenarioError> {
        if sensors < 2 {
            return Err(ScenarioError::Invalid(format!("{sensors} sensors")));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(ScenarioError::Invalid(format!("spacing {spacing}")));
        }
        Ok(UlaConfig { sensors, spacing })
    }

    /// Half-wavelength spacing.
    pub fn half_wavelength(sensors: usize) -> Result<Self, ScenarioError> {
        Self::new(sensors, 0.5)
    }
}

/// `a_n = exp(j 2π d n sin θ)` for `n = 0..N`, with `θ` in degrees.
pub fn steering_vector(ula: &UlaConfig, theta_deg: f64) -> CVector {
    let k = 2.0 * PI * ula.spacing * theta_deg.to_radians().sin();
    CVector::from_fn(ula.sensors, |n, _| Complex64::from_polar(1.0, k * n as f64))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AngularDensity {
    Gaussian,
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatteredSource {
    pub density: AngularDensity,
    /// Degrees.
    pub center: f64,
    /// Degrees; see the module docs for the convention.
    pub spread: f64,
    /// Linear power.
    pub power: f64,
}

impl ScatteredSource {
    pub fn new(
        density: AngularDensity,
        center: f64,
        spread: f64,
        power: f64,
    ) -> Result<Self, ScenarioError> {
        let src = ScatteredSource {
            density,
            center,
            spread,
            power,
        };
        src.validate()?;
        Ok(src)
    }

    /// Angular interval carrying the density.
    pub fn support(&self) -> (f64, f64) {
        let half = match self.density {
            AngularDensity::Gaussian => GAUSSIAN_SUPPORT * self.spread,
            AngularDensity::Uniform => 0.5 * self.spread,
        };
        (self.center - half, self.center + half)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.spread.is_finite() && self.spread >= 0.0) {
            return Err(ScenarioError::Invalid(format!("spread {}", self.spread)));
        }
        if !(self.power.is_finite() && self.power > 0.0) {
            return Err(ScenarioError::Invalid(format!("power {}", self.power)));
        }
        let (lo, hi) = self.support();
        if !(lo > -90.0 && hi < 90.0) {
            return Err(ScenarioError::Invalid(format!(
                "angular support [{lo}, {hi}] leaves (-90, 90)"
            )));
        }
        Ok(())
    }

    pub fn with_power(mut self, power: f64) -> Self {
        self.power = power;
        self
    }
}

/// Grid angles and normalized trapezoidal weights of the density.
fn quadrature(src: &ScatteredSource, points: usize) -> Vec<(f64, f64)> {
    let (lo, hi) = src.support();
    let h = (hi - lo) / (points - 1) as f64;
    let mut nodes: Vec<(f64, f64)> = (0..points)
        .map(|g| {
            let theta = lo + g as f64 * h;
            let density = match src.density {
                AngularDensity::Gaussian => {
                    let u = (theta - src.center) / src.spread;
                    (-0.5 * u * u).exp()
                }
                AngularDensity::Uniform => 1.0,
            };
            let end = g == 0 || g == points - 1;
            (theta, if end { 0.5 * density } else { density })
        })
        .collect();
    let total: f64 = nodes.iter().map(|n| n.1).sum();
    nodes.iter_mut().for_each(|n| n.1 /= total);
    nodes
}

/// `power · Σ_g ρ_g a(θ_g) a(θ_g)^H` over `grid_points` nodes.
pub fn scattered_covariance(
    ula: &UlaConfig,
    src: &ScatteredSource,
    grid_points: usize,
) -> Result<HermitianMatrix, ScenarioError> {
    if grid_points < MIN_GRID_POINTS {
        return Err(ScenarioError::GridTooCoarse(grid_points));
    }
    src.validate()?;
    let n = ula.sensors;
    if src.spread == 0.0 {
        let a = steering_vector(ula, src.center);
        let r = &a * a.adjoint() * Complex64::new(src.power, 0.0);
        return Ok(HermitianMatrix::new(r)?);
    }
    // Toeplitz: R[i, k] depends on i - k only.
    let mut lags = vec![Complex64::new(0.0, 0.0); n];
    for (theta, w) in quadrature(src, grid_points) {
        let k = 2.0 * PI * ula.spacing * theta.to_radians().sin();
        for (d, lag) in lags.iter_mut().enumerate() {
            *lag += Complex64::from_polar(w, k * d as f64);
        }
    }
    let r = CMatrix::from_fn(n, n, |i, k| {
        let v = if i >= k {
            lags[i - k]
        } else {
            lags[k - i].conj()
        };
        v * src.power
    });
    Ok(HermitianMatrix::new(r)?)
}

/// `(1/T) Σ_t y_t y_t^H` with `y_t = C z_t`, `C C^H = R`,
/// `z_t ~ CN(0, I)`.
pub fn sample_covariance<R: Rng + ?Sized>(
    r_total: &HermitianMatrix,
    snapshots: usize,
    rng: &mut R,
) -> Result<HermitianMatrix, ScenarioError> {
    if snapshots == 0 {
        return Err(ScenarioError::Invalid("zero snapshots".into()));
    }
    let c = psd_sqrt(r_total)?;
    let n = r_total.dim();
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let z = CMatrix::from_fn(n, snapshots, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    });
    let y = c * z;
    let r = &y * y.adjoint() / Complex64::new(snapshots as f64, 0.0);
    Ok(HermitianMatrix::new(r)?)
}

/// `w^H R_s w / w^H R_ipn w`.
pub fn sinr(
    w: &CVector,
    r_s: &HermitianMatrix,
    r_ipn: &HermitianMatrix,
) -> Result<f64, ScenarioError> {
    if w.iter().all(|z| z.norm_sqr() == 0.0) {
        return Err(ScenarioError::ZeroVector);
    }
    Ok(r_s.quad_form(w) / r_ipn.quad_form(w))
}

/// Largest SINR over all beamvectors and a maximizer.
pub fn optimal_beamformer(
    r_s: &HermitianMatrix,
    r_ipn: &HermitianMatrix,
) -> Result<(f64, CVector), ScenarioError> {
    let l = cholesky_psd(r_ipn)?;
    let n = r_s.dim();
    // M = L^{-1} R_s L^{-H}
    let mut left = CMatrix::zeros(n, n);
    for j in 0..n {
        left.set_column(j, &solve_lower(&l, &r_s.matrix().column(j).into_owned()));
    }
    let mut m = CMatrix::zeros(n, n);
    let la = left.adjoint();
    for j in 0..n {
        m.set_column(j, &solve_lower(&l, &la.column(j).into_owned()));
    }
    let eig = hermitian_eig(&HermitianMatrix::new(m.adjoint())?)?;
    let w = solve_lower_adjoint(&l, &eig.principal_vector());
    Ok((eig.max_value(), w))
}

/// `λ_max(R_ipn^{-1/2} R_s R_ipn^{-1/2})`.
pub fn optimal_sinr(r_s: &HermitianMatrix, r_ipn: &HermitianMatrix) -> Result<f64, ScenarioError> {
    optimal_beamformer(r_s, r_ipn).map(|(v, _)| v)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub ula: UlaConfig,
    pub signal_true: ScatteredSource,
    pub signal_presumed: ScatteredSource,
    pub interferers: Vec<ScatteredSource>,
    pub noise_power: f64,
    pub snapshots: usize,
    pub grid_points: usize,
}

impl Scenario {
    /// Ten half-wavelength sensors, unit noise, a Gaussian 30°/4° signal
    /// presumed at 34°/6°, one uniform 10°/10° interferer at 10 dB INR and
    /// 50 snapshots. Signal power is set by [`Scenario::with_snr_db`].
    pub fn reference() -> Self {
        Scenario {
            ula: UlaConfig {
                sensors: 10,
                spacing: 0.5,
            },
            signal_true: ScatteredSource {
                density: AngularDensity::Gaussian,
                center: 30.0,
                spread: 4.0,
                power: 1.0,
            },
            signal_presumed: ScatteredSource {
                density: AngularDensity::Gaussian,
                center: 34.0,
                spread: 6.0,
                power: 1.0,
            },
            interferers: vec![ScatteredSource {
                density: AngularDensity::Uniform,
                center: 10.0,
                spread: 10.0,
                power: 10.0,
            }],
            noise_power: 1.0,
            snapshots: 50,
            grid_points: DEFAULT_GRID_POINTS,
        }
    }

    /// Sets both true and presumed signal powers to `noise · 10^{snr/10}`.
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        let p = self.noise_power * 10f64.powf(snr_db / 10.0);
        self.signal_true.power = p;
        self.signal_presumed.power = p;
        self
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        UlaConfig::new(self.ula.sensors, self.ula.spacing)?;
        self.signal_true.validate()?;
        self.signal_presumed.validate()?;
        for s in &self.interferers {
            s.validate()?;
        }
        if !(self.noise_power.is_finite() && self.noise_power > 0.0) {
            return Err(ScenarioError::Invalid(format!(
                "noise power {}",
                self.noise_power
            )));
        }
        if self.snapshots == 0 {
            return Err(ScenarioError::Invalid("zero snapshots".into()));
        }
        if self.grid_points < MIN_GRID_POINTS {
            return Err(ScenarioError::GridTooCoarse(self.grid_points));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<ModelCovariances, ScenarioError> {
        self.validate()?;
        let g = self.grid_points;
        let r_s = scattered_covariance(&self.ula, &self.signal_true, g)?;
        let r_s_presumed = scattered_covariance(&self.ula, &self.signal_presumed, g)?;
        let mut r_ipn = HermitianMatrix::identity(self.ula.sensors).scaled(self.noise_power);
        for src in &self.interferers {
            r_ipn = r_ipn.add(&scattered_covariance(&self.ula, src, g)?)?;
        }
        let r_total = r_s.add(&r_ipn)?;
        Ok(ModelCovariances {
            r_s,
            r_s_presumed,
            r_ipn,
            r_total,
        })
    }
}

/// Exact second-order statistics of a scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelCovariances {
    pub r_s: HermitianMatrix,
    pub r_s_presumed: HermitianMatrix,
    pub r_ipn: HermitianMatrix,
    /// `R_s + R_ipn`.
    pub r_total: HermitianMatrix,
}

/// Model covariances plus one sample covariance drawn from them.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceSet {
    pub model: ModelCovariances,
    pub r_hat: HermitianMatrix,
}

impl CovarianceSet {
    pub fn draw<R: Rng + ?Sized>(
        model: &ModelCovariances,
        snapshots: usize,
        rng: &mut R,
    ) -> Result<Self, ScenarioError> {
        Ok(CovarianceSet {
            model: model.clone(),
            r_hat: sample_covariance(&model.r_total, snapshots, rng)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ula(n: usize) -> UlaConfig {
        UlaConfig::half_wavelength(n).unwrap()
    }

    fn numerical_rank(h: &HermitianMatrix, tol: f64) -> usize {
        let eig = hermitian_eig(h).unwrap();
        let top = eig.max_value();
        eig.values.iter().filter(|&&v| v > tol * top).count()
    }

    #[test]
    fn steering_examples() {
        let a = steering_vector(&ula(5), 0.0);
        assert!(a
            .iter()
            .all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
        let a = steering_vector(&ula(2), 30.0);
        assert!((a[1] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        for th in [-70.0, -3.3, 12.0, 45.0, 89.0] {
            assert!((steering_vector(&ula(10), th).norm_squared() - 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn point_source_is_rank_one() {
        let src = ScatteredSource::new(AngularDensity::Gaussian, 20.0, 0.0, 3.0).unwrap();
        let r = scattered_covariance(&ula(6), &src, 128).unwrap();
        assert_eq!(numerical_rank(&r, 1e-10), 1);
        let a = steering_vector(&ula(6), 20.0);
        assert!((r.matrix() - &a * a.adjoint() * Complex64::new(3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn trace_normalization() {
        for src in [
            ScatteredSource::new(AngularDensity::Gaussian, 30.0, 4.0, 2.5).unwrap(),
            ScatteredSource::new(AngularDensity::Uniform, 10.0, 10.0, 0.7).unwrap(),
        ] {
            let r = scattered_covariance(&ula(10), &src, 2048).unwrap();
            let tr: f64 = (0..10).map(|i| r.matrix()[(i, i)].re).sum();
            assert!((tr - 10.0 * src.power).abs() < 1e-10 * tr);
        }
    }

    #[test]
    fn grid_refinement_is_stable() {
        for src in [
            ScatteredSource::new(AngularDensity::Gaussian, 30.0, 4.0, 1.0).unwrap(),
            ScatteredSource::new(AngularDensity::Uniform, 10.0, 10.0, 1.0).unwrap(),
        ] {
            let a = scattered_covariance(&ula(10), &src, 2048).unwrap();
            let b = scattered_covariance(&ula(10), &src, 4096).unwrap();
            let drift = (a.matrix() - b.matrix()).norm();
            assert!(drift < 1e-6, "{drift}");
            assert!(numerical_rank(&a, 1e-8) > 1);
            assert!(hermitian_eig(&a)
                .unwrap()
                .values
                .iter()
                .all(|&v| v > -1e-10));
        }
    }

    #[test]
    fn rejects_coarse_grid_and_bad_sources() {
        let src = ScatteredSource::new(AngularDensity::Gaussian, 30.0, 4.0, 1.0).unwrap();
        assert!(matches!(
            scattered_covariance(&ula(4), &src, 32),
            Err(ScenarioError::GridTooCoarse(32))
        ));
        assert!(ScatteredSource::new(AngularDensity::Gaussian, 85.0, 4.0, 1.0).is_err());
        assert!(ScatteredSource::new(AngularDensity::Uniform, 0.0, -1.0, 1.0).is_err());
        assert!(ScatteredSource::new(AngularDensity::Uniform, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn single_snapshot_is_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = sample_covariance(&HermitianMatrix::identity(4), 1, &mut rng).unwrap();
        assert_eq!(numerical_rank(&r, 1e-10), 1);
    }

    #[test]
    fn sample_covariance_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = sample_covariance(&HermitianMatrix::identity(4), 10_000, &mut rng).unwrap();
        let err = (r.matrix() - CMatrix::identity(4, 4)).norm() / 2.0;
        assert!(err < 0.05, "{err}");
    }

    #[test]
    fn sample_covariance_is_reproducible() {
        let model = Scenario::reference().with_snr_db(10.0).model().unwrap();
        let a = sample_covariance(&model.r_total, 50, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_covariance(&model.r_total, 50, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sinr_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = CMatrix::from_fn(5, 4, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let r = HermitianMatrix::gram(&b);
        let w = CVector::from_fn(4, |i, _| Complex64::new(i as f64 + 1.0, -0.5));
        assert!((sinr(&w, &r, &r).unwrap() - 1.0).abs() < 1e-14);
        assert!(sinr(&CVector::zeros(4), &r, &r).is_err());

        let two = r.scaled(2.0);
        assert!((optimal_sinr(&two, &r).unwrap() - 2.0).abs() < 1e-10);

        let a = steering_vector(&ula(4), 17.0);
        let rs = HermitianMatrix::new(&a * a.adjoint() * Complex64::new(3.0, 0.0)).unwrap();
        let id = HermitianMatrix::identity(4);
        assert!((optimal_sinr(&rs, &id).unwrap() - 12.0).abs() < 1e-10);

        let (best, w) = optimal_beamformer(&rs, &r).unwrap();
        assert!((sinr(&w, &rs, &r).unwrap() - best).abs() < 1e-10 * best);
    }

    #[test]
    fn optimal_sinr_dominates_random_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = Scenario::reference().with_snr_db(0.0).model().unwrap();
        let opt = optimal_sinr(&model.r_s, &model.r_ipn).unwrap();
        let mut best = 0.0f64;
        for _ in 0..100_000 {
            let w = CVector::from_fn(10, |_, _| {
                Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            best = best.max(sinr(&w, &model.r_s, &model.r_ipn).unwrap());
        }
        assert!(best <= opt * (1.0 + 1e-9));
        // Random search over 10 complex dimensions only gets close-ish; the
        // exact maximizer closes the gap.
        let (_, w) = optimal_beamformer(&model.r_s, &model.r_ipn).unwrap();
        assert!((sinr(&w, &model.r_s, &model.r_ipn).unwrap() - opt).abs() < 1e-10 * opt);
    }

    #[test]
    fn model_composition() {
        let model = Scenario::reference().with_snr_db(20.0).model().unwrap();
        let sum = model.r_s.add(&model.r_ipn).unwrap();
        assert_eq!(&sum, &model.r_total);
        let tr: f64 = (0..10).map(|i| model.r_s.matrix()[(i, i)].re).sum();
        assert!((tr - 1000.0).abs() < 1e-8);
    }
}
