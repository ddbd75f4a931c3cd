//! Monte Carlo discrimination between the orthodox prediction (atoms move
//! with Born-rule momenta and shift the mirror phase on every bounce) and
//! the pilot-wave prediction (atoms at rest, no phase shift).
//!
//! A run is a series of bounces off one mirror wall. Each bounce carries a
//! wall-normal momentum drawn from the theory under test; it is mapped to
//! a phase shift and observed with additive Gaussian homodyne noise. Atoms
//! whose kinetic energy reaches the barrier top are recorded as lost.
//!
//! Two tests are applied to a series:
//!
//! * zero-signal: one-sided z-test of the mean observed phase against 0 at
//!   the known noise level, in the direction of the phase-shift sign;
//! * distribution: Kolmogorov-Smirnov distance between the observed phases
//!   and the orthodox predictive distribution (momentum density pushed
//!   through `φ = K p²` and convolved with the noise). Its p-value comes
//!   from the Kolmogorov distribution; a Monte Carlo p-value from
//!   simulated orthodox runs of the same length is reported beside it.
//!
//! Successive bounces are treated as independent draws.

use std::sync::{Arc, OnceLock};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mirror::{self, Barrier, MirrorError, MirrorParams};
use crate::momentum::{MomentumError, MomentumSampler};
use crate::phaseshift::{self, PhaseError, PhaseMeasurement};
use crate::rng::{self, Purpose, SimRng};
use crate::stats::{self, normal_cdf};
use crate::wellqm::{ModeIndex, WellGeometry};

/// Quantile nodes used to convolve the momentum law with the noise.
const PREDICTIVE_QUANTILES: usize = 4096;
/// Interpolation nodes of the tabulated predictive CDF.
const PREDICTIVE_GRID: usize = 4096;
/// Draws used to tabulate the normal-momentum law under first-hit wall
/// selection.
const EMPIRICAL_DRAWS: usize = 1 << 18;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Momentum(#[from] MomentumError),
    #[error(transparent)]
    Mirror(#[from] MirrorError),
    #[error(transparent)]
    Phase(#[from] PhaseError),
    #[error("series contains no measured bounces (all atoms lost)")]
    NoData,
}

/// Which wall's normal component a bounce reads out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WallSelection {
    /// Every bounce is off the x walls; the normal momentum is `|p_x|`.
    #[default]
    XWall,
    /// The wall a straight-line path from a `|Ψ|²`-sampled position
    /// reaches first under the sampled velocity.
    FirstHit,
}

fn default_target_sigma() -> f64 {
    5.0
}
fn default_alpha() -> f64 {
    stats::sigma_to_alpha(5.0)
}
fn default_null_replicates() -> usize {
    10_000
}
fn default_power_replicates() -> usize {
    1000
}
fn default_power_level() -> f64 {
    0.95
}
fn default_max_bounces() -> usize {
    10_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: WellGeometry,
    pub mode: ModeIndex,
    pub mirror: MirrorParams,
    /// Incident atomic density (m⁻³).
    pub rho_in: f64,
    /// Homodyne phase noise (rad).
    pub noise_sigma: f64,
    pub n_bounces: usize,
    pub seed: u64,
    /// Significance (in one-sided Gaussian σ) required by the power analysis.
    #[serde(default = "default_target_sigma")]
    pub target_sigma: f64,
    /// Level of both tests in the verdict rule.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub wall_selection: WallSelection,
    /// Orthodox replicates for the Monte Carlo KS p-value (0 disables).
    #[serde(default = "default_null_replicates")]
    pub null_replicates: usize,
    #[serde(default = "default_power_replicates")]
    pub power_replicates: usize,
    /// Fraction of replicate runs that must reach the target significance.
    #[serde(default = "default_power_level")]
    pub power_level: f64,
    /// Bounce cap of the power search.
    #[serde(default = "default_max_bounces")]
    pub max_bounces: usize,
}

impl ExperimentConfig {
    /// Configuration with the default test settings.
    pub fn new(
        geometry: WellGeometry,
        mode: ModeIndex,
        mirror: MirrorParams,
        rho_in: f64,
        noise_sigma: f64,
        n_bounces: usize,
        seed: u64,
    ) -> Self {
        Self {
            geometry,
            mode,
            mirror,
            rho_in,
            noise_sigma,
            n_bounces,
            seed,
            target_sigma: default_target_sigma(),
            alpha: default_alpha(),
            wall_selection: WallSelection::XWall,
            null_replicates: default_null_replicates(),
            power_replicates: default_power_replicates(),
            power_level: default_power_level(),
            max_bounces: default_max_bounces(),
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let cfg = |m: String| Err(ExperimentError::Config(m));
        self.geometry.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        self.mirror.validate()?;
        if !(self.rho_in > 0.0 && self.rho_in.is_finite()) {
            return cfg(format!("rho_in must be positive, got {}", self.rho_in));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return cfg(format!("noise_sigma must be non-negative, got {}", self.noise_sigma));
        }
        if self.n_bounces == 0 {
            return cfg("n_bounces must be at least 1".into());
        }
        if !(self.target_sigma > 0.0 && self.target_sigma.is_finite()) {
            return cfg(format!("target_sigma must be positive, got {}", self.target_sigma));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return cfg(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.power_level > 0.0 && self.power_level < 1.0) {
            return cfg(format!("power_level must lie in (0, 1), got {}", self.power_level));
        }
        if self.power_replicates == 0 || self.max_bounces == 0 {
            return cfg("power_replicates and max_bounces must be at least 1".into());
        }
        Ok(())
    }
}

/// Distribution of the wall-normal momentum magnitude under an
/// alternative pilot-wave scenario in which the stationary state was
/// disturbed and the atom accelerated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbedDistribution {
    /// The orthodox normal-momentum law rescaled by `scale`.
    ScaledMarginal { scale: f64 },
    /// Discrete momentum magnitudes (kg·m/s) with normalized weights.
    Tabulated { momenta: Vec<f64>, weights: Vec<f64> },
}

impl DisturbedDistribution {
    pub fn tabulated(momenta: Vec<f64>, weights: Vec<f64>) -> Result<Self, ExperimentError> {
        let d = Self::Tabulated { momenta, weights };
        d.normalized()
    }

    /// Validates and rescales tabulated weights to unit sum.
    pub fn normalized(self) -> Result<Self, ExperimentError> {
        match self {
            Self::ScaledMarginal { scale } => {
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(ExperimentError::Config(format!("scale must be positive, got {scale}")));
                }
                Ok(self)
            }
            Self::Tabulated { momenta, weights } => {
                if momenta.is_empty() || momenta.len() != weights.len() {
                    return Err(ExperimentError::Config("tabulated momenta and weights must be nonempty and equal length".into()));
                }
                if momenta.iter().any(|p| !(*p >= 0.0 && p.is_finite())) || weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
                    return Err(ExperimentError::Config("tabulated momenta and weights must be finite and non-negative".into()));
                }
                let total: f64 = weights.iter().sum();
                if !(total > 0.0) {
                    return Err(ExperimentError::Config("tabulated weights sum to zero".into()));
                }
                let weights = weights.iter().map(|w| w / total).collect();
                Ok(Self::Tabulated { momenta, weights })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "theory", rename_all = "snake_case", deny_unknown_fields)]
pub enum TheoryModel {
    Oqt,
    DebbStationary,
    DebbDisturbed { distribution: DisturbedDistribution },
}

impl TheoryModel {
    pub fn name(&self) -> &'static str {
        match self {
            TheoryModel::Oqt => "oqt",
            TheoryModel::DebbStationary => "debb_stationary",
            TheoryModel::DebbDisturbed { .. } => "debb_disturbed",
        }
    }
}

/// One bounce. `measurement` is `None` for an atom lost to the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BounceRecord {
    /// True wall-normal momentum magnitude, when known (kg·m/s).
    pub momentum: Option<f64>,
    pub measurement: Option<PhaseMeasurement>,
}

impl BounceRecord {
    pub fn is_lost(&self) -> bool {
        self.measurement.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSeries {
    pub records: Vec<BounceRecord>,
}

impl RunSeries {
    pub fn observed_phases(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.measurement.map(|m| m.phi_observed)).collect()
    }

    pub fn lost_count(&self) -> usize {
        self.records.iter().filter(|r| r.is_lost()).count()
    }
}

/// Law of the orthodox wall-normal momentum magnitude.
#[derive(Debug, Clone)]
enum NormalLaw {
    Axis(Arc<MomentumSampler>),
    Empirical(Vec<f64>),
}

impl NormalLaw {
    fn cdf(&self, q: f64) -> f64 {
        match self {
            NormalLaw::Axis(s) => s.abs_axis_cdf(0, q),
            NormalLaw::Empirical(sorted) => sorted.partition_point(|&v| v <= q) as f64 / sorted.len() as f64,
        }
    }

    fn quantile(&self, u: f64) -> f64 {
        match self {
            NormalLaw::Axis(s) => s.abs_axis_quantile(0, u),
            NormalLaw::Empirical(sorted) => {
                let i = ((u * sorted.len() as f64) as usize).min(sorted.len() - 1);
                sorted[i]
            }
        }
    }
}

/// Orthodox predictive CDF of an observed phase.
#[derive(Debug, Clone)]
struct PredictiveCdf {
    k: f64,
    table: Option<(f64, f64, f64, Vec<f64>)>,
}

impl PredictiveCdf {
    fn build(k: f64, sigma: f64, law: &NormalLaw, p_lost: f64) -> Self {
        if sigma == 0.0 {
            return Self { k, table: None };
        }
        let lost_mass = 1.0 - law.cdf(p_lost);
        let kept = 1.0 - lost_mass;
        let phases: Vec<f64> = (0..PREDICTIVE_QUANTILES)
            .map(|j| {
                let u = (j as f64 + 0.5) / PREDICTIVE_QUANTILES as f64 * kept;
                k * law.quantile(u).powi(2)
            })
            .collect();
        let lo = phases.iter().cloned().fold(0.0f64, f64::min) - 10.0 * sigma;
        let hi = phases.iter().cloned().fold(0.0f64, f64::max) + 10.0 * sigma;
        let scale = sigma;
        let (s_lo, s_hi) = ((lo / scale).asinh(), (hi / scale).asinh());
        let ds = (s_hi - s_lo) / (PREDICTIVE_GRID - 1) as f64;
        let values: Vec<f64> = (0..PREDICTIVE_GRID)
            .into_par_iter()
            .map(|i| {
                let phi = scale * (s_lo + i as f64 * ds).sinh();
                phases.iter().map(|&c| normal_cdf((phi - c) / sigma)).sum::<f64>() / phases.len() as f64
            })
            .collect();
        Self { k, table: Some((s_lo, ds, scale, values)) }
    }

    fn cdf(&self, phi: f64, law: &NormalLaw, p_lost: f64) -> f64 {
        match &self.table {
            None => {
                // Noiseless: F(φ) = P(K p² ≤ φ) restricted to kept atoms.
                let kept = law.cdf(p_lost);
                let r = phi / self.k;
                let below = if r < 0.0 { 0.0 } else { (law.cdf(r.sqrt()) / kept).min(1.0) };
                if self.k < 0.0 { 1.0 - below } else { below }
            }
            Some((s_lo, ds, scale, values)) => {
                let s = (phi / scale).asinh();
                let x = (s - s_lo) / ds;
                if x <= 0.0 {
                    return 0.0;
                }
                let i = x.floor() as usize;
                if i >= values.len() - 1 {
                    return 1.0;
                }
                let w = x - i as f64;
                (values[i] * (1.0 - w) + values[i + 1] * w).clamp(0.0, 1.0)
            }
        }
    }
}

/// Precomputed state for simulating and testing one configuration.
#[derive(Debug)]
pub struct Engine {
    config: ExperimentConfig,
    sampler: Arc<MomentumSampler>,
    prefactor: f64,
    /// Momentum at which the kinetic energy reaches the barrier top.
    p_lost: f64,
    law: NormalLaw,
    predictive: OnceLock<PredictiveCdf>,
}

impl Engine {
    pub fn new(config: ExperimentConfig) -> Result<Self, ExperimentError> {
        config.validate()?;
        let sampler = Arc::new(MomentumSampler::new(&config.geometry, config.mode));
        let prefactor = phaseshift::prefactor(config.rho_in, &config.mirror)?;
        let profile = mirror::barrier_analysis(&config.mirror)?;
        let p_lost = match profile.barrier {
            Barrier::Interior { height, .. } | Barrier::Surface { height } if height > 0.0 => {
                (2.0 * config.mirror.atom_mass * height).sqrt()
            }
            _ => 0.0,
        };
        let law = match config.wall_selection {
            WallSelection::XWall => NormalLaw::Axis(sampler.clone()),
            WallSelection::FirstHit => {
                let mut r = rng::substream(config.seed, Purpose::Sampling, 1);
                let mut draws: Vec<f64> =
                    (0..EMPIRICAL_DRAWS).map(|_| first_hit_normal(&config.geometry, config.mode, &sampler, &mut r)).collect();
                draws.sort_by(f64::total_cmp);
                NormalLaw::Empirical(draws)
            }
        };
        Ok(Self { config, sampler, prefactor, p_lost, law, predictive: OnceLock::new() })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    /// `φ / p²` (rad per (kg·m/s)²).
    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    /// Normal momentum at or above which an atom is lost.
    pub fn lost_threshold(&self) -> f64 {
        self.p_lost
    }

    /// Orthodox mean `|φ|` per bounce, `|K| ⟨p_n²⟩`, ignoring atom loss.
    pub fn mean_abs_phase_oqt(&self) -> f64 {
        let mean_p2 = match &self.law {
            NormalLaw::Axis(_) => {
                let n = self.config.mode.nx() as f64;
                (n * std::f64::consts::PI * crate::constants::HBAR / self.config.geometry.side_x).powi(2)
            }
            NormalLaw::Empirical(v) => v.iter().map(|p| p * p).sum::<f64>() / v.len() as f64,
        };
        self.prefactor.abs() * mean_p2
    }

    /// CDF of the orthodox wall-normal momentum magnitude (no loss cut).
    pub fn normal_momentum_cdf(&self, q: f64) -> f64 {
        self.law.cdf(q)
    }

    fn draw_normal<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.config.wall_selection {
            WallSelection::XWall => self.sampler.sample_axis(0, rng).abs(),
            WallSelection::FirstHit => first_hit_normal(&self.config.geometry, self.config.mode, &self.sampler, rng),
        }
    }

    fn draw_momentum<R: Rng + ?Sized>(&self, model: &TheoryModel, rng: &mut R) -> f64 {
        match model {
            TheoryModel::Oqt => self.draw_normal(rng),
            TheoryModel::DebbStationary => 0.0,
            TheoryModel::DebbDisturbed { distribution } => match distribution {
                DisturbedDistribution::ScaledMarginal { scale } => scale * self.draw_normal(rng),
                DisturbedDistribution::Tabulated { momenta, weights } => {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    for (p, w) in momenta.iter().zip(weights) {
                        acc += w;
                        if u < acc {
                            return *p;
                        }
                    }
                    *momenta.last().expect("validated nonempty")
                }
            },
        }
    }

    fn simulate_with(&self, model: &TheoryModel, n: usize, rng: &mut SimRng) -> Result<RunSeries, ExperimentError> {
        let mut records = Vec::with_capacity(n);
        for _ in 0..n {
            let p = self.draw_momentum(model, rng);
            let noise = phaseshift::noise_draw(self.config.noise_sigma, rng)?;
            if p >= self.p_lost {
                records.push(BounceRecord { momentum: Some(p), measurement: None });
                continue;
            }
            let phi_true = if p == 0.0 { 0.0 } else { self.prefactor * p * p };
            records.push(BounceRecord {
                momentum: Some(p),
                measurement: Some(PhaseMeasurement {
                    phi_true,
                    phi_observed: phi_true + noise,
                    noise_sigma: self.config.noise_sigma,
                    seed: self.config.seed,
                }),
            });
        }
        Ok(RunSeries { records })
    }

    /// The configured run under `model`.
    pub fn simulate(&self, model: &TheoryModel) -> Result<RunSeries, ExperimentError> {
        let mut r = rng::substream(self.config.seed, Purpose::Run, 0);
        self.simulate_with(model, self.config.n_bounces, &mut r)
    }

    /// Replicate `index` of `purpose` with `n` bounces.
    pub fn simulate_replicate(
        &self,
        model: &TheoryModel,
        purpose: Purpose,
        index: u32,
        n: usize,
    ) -> Result<RunSeries, ExperimentError> {
        let mut r = rng::substream(self.config.seed, purpose, index);
        self.simulate_with(model, n, &mut r)
    }

    fn predictive(&self) -> &PredictiveCdf {
        self.predictive
            .get_or_init(|| PredictiveCdf::build(self.prefactor, self.config.noise_sigma, &self.law, self.p_lost))
    }

    /// Orthodox predictive CDF of one observed phase.
    pub fn predictive_cdf(&self, phi: f64) -> f64 {
        self.predictive().cdf(phi, &self.law, self.p_lost)
    }

    /// Zero-signal test of observed phases.
    pub fn zero_signal_test(&self, phases: &[f64]) -> ZeroSignalTest {
        zero_signal(phases, self.config.noise_sigma, self.prefactor.signum())
    }

    fn ks_against_oqt(&self, phases: &mut [f64]) -> f64 {
        phases.sort_by(f64::total_cmp);
        let cdf: Vec<f64> = phases.iter().map(|&p| self.predictive_cdf(p)).collect();
        stats::ks_statistic_sorted(&cdf)
    }

    /// Runs both tests on a series and applies the verdict rule.
    pub fn hypothesis_test(&self, series: &RunSeries) -> Result<DiscriminationReport, ExperimentError> {
        let phases = series.observed_phases();
        if phases.is_empty() {
            return Err(ExperimentError::NoData);
        }
        let zero = self.zero_signal_test(&phases);
        let mut sorted = phases.clone();
        let ks = self.ks_against_oqt(&mut sorted);
        let ks_p = stats::ks_p_value(ks, phases.len());
        let mc_p_value = if self.config.null_replicates > 0 {
            let exceed = (0..self.config.null_replicates as u32)
                .into_par_iter()
                .map(|r| -> Result<bool, ExperimentError> {
                    let rep = self.simulate_replicate(&TheoryModel::Oqt, Purpose::NullReplicate, r, series.records.len())?;
                    let mut p = rep.observed_phases();
                    if p.is_empty() {
                        return Ok(true);
                    }
                    Ok(self.ks_against_oqt(&mut p) >= ks)
                })
                .collect::<Result<Vec<bool>, _>>()?
                .into_iter()
                .filter(|&b| b)
                .count();
            Some((1 + exceed) as f64 / (1 + self.config.null_replicates) as f64)
        } else {
            None
        };
        let inferred: Vec<Option<f64>> = series
            .records
            .iter()
            .map(|r| r.measurement.map(|m| (m.phi_observed / self.prefactor).max(0.0).sqrt()))
            .collect();
        let mut measured: Vec<f64> = inferred.iter().flatten().copied().collect();
        let kept = self.law.cdf(self.p_lost);
        let momentum_ks = stats::ks_statistic(&mut measured, |q| (self.law.cdf(q) / kept).min(1.0));

        let reject_stationary = zero.p_value < self.config.alpha;
        let reject_oqt = ks_p < self.config.alpha;
        let verdict = match (reject_stationary, reject_oqt) {
            (true, false) => Verdict::FavorsOqt,
            (true, true) => Verdict::FavorsDebbDisturbed,
            (false, true) => Verdict::FavorsDebbStationary,
            (false, false) => Verdict::Inconclusive,
        };
        Ok(DiscriminationReport {
            n_bounces: series.records.len(),
            n_measured: phases.len(),
            n_lost: series.lost_count(),
            phases: series.records.iter().map(|r| r.measurement.map(|m| m.phi_observed)).collect(),
            inferred_momenta: inferred,
            p_value_debb_stationary: zero.p_value,
            p_value_oqt: ks_p,
            zero_signal: zero,
            distribution: DistributionTest {
                ks_statistic: ks,
                p_value: ks_p,
                mc_p_value,
                mc_replicates: self.config.null_replicates,
                momentum_ks_statistic: momentum_ks,
            },
            alpha: self.config.alpha,
            required_bounces: None,
            verdict,
        })
    }

    /// Fraction of orthodox replicate runs of length `n` whose zero-signal
    /// p-value falls below `alpha`.
    pub fn power(&self, n: usize, alpha: f64) -> Result<f64, ExperimentError> {
        let hits = (0..self.config.power_replicates as u32)
            .into_par_iter()
            .map(|r| -> Result<bool, ExperimentError> {
                let rep = self.simulate_replicate(&TheoryModel::Oqt, Purpose::PowerReplicate, r, n)?;
                let phases = rep.observed_phases();
                Ok(!phases.is_empty() && self.zero_signal_test(&phases).p_value < alpha)
            })
            .collect::<Result<Vec<bool>, _>>()?
            .into_iter()
            .filter(|&b| b)
            .count();
        Ok(hits as f64 / self.config.power_replicates as f64)
    }

    /// Smallest run length whose Monte Carlo power reaches the configured
    /// level at `target_sigma`: doubling search, then bisection.
    pub fn required_bounces(&self, target_sigma: f64) -> Result<RequiredBounces, ExperimentError> {
        let alpha = stats::sigma_to_alpha(target_sigma);
        let level = self.config.power_level;
        let cap = self.config.max_bounces;
        let mut hi = 1usize;
        while self.power(hi, alpha)? < level {
            if hi >= cap {
                return Ok(RequiredBounces::NotAchievable { cap });
            }
            hi = (hi * 2).min(cap);
        }
        let mut lo = hi / 2; // fails (or zero)
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.power(mid, alpha)? >= level {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(RequiredBounces::Count(hi))
    }

    /// Gaussian mean-shift estimate `(target σ · noise / mean|φ|)²`.
    pub fn analytic_required_bounces(&self, target_sigma: f64) -> f64 {
        (target_sigma * self.config.noise_sigma / self.mean_abs_phase_oqt()).powi(2)
    }
}

/// Normal momentum of the wall a ballistic path reaches first.
fn first_hit_normal<R: Rng + ?Sized>(geom: &WellGeometry, mode: ModeIndex, sampler: &MomentumSampler, rng: &mut R) -> f64 {
    let p = sampler.sample(rng);
    let sides = geom.sides();
    let mut best = (f64::INFINITY, 0.0);
    for (axis, &n) in mode.as_array().iter().enumerate() {
        let x = sample_sine_squared(n, sides[axis], rng);
        let v = p[axis];
        if v == 0.0 {
            continue;
        }
        let distance = if v > 0.0 { sides[axis] - x } else { x };
        let time = distance / v.abs();
        if time < best.0 {
            best = (time, v.abs());
        }
    }
    best.1
}

/// Position on one axis from `(2/L) sin²(nπx/L)`.
fn sample_sine_squared<R: Rng + ?Sized>(n: u32, side: f64, rng: &mut R) -> f64 {
    loop {
        let x = rng.random::<f64>() * side;
        let s = (n as f64 * std::f64::consts::PI * x / side).sin();
        if rng.random::<f64>() < s * s {
            return x;
        }
    }
}

fn zero_signal(phases: &[f64], sigma: f64, direction: f64) -> ZeroSignalTest {
    let n = phases.len() as f64;
    let mean = phases.iter().sum::<f64>() / n;
    if sigma == 0.0 {
        let signal = mean * direction > 0.0;
        return ZeroSignalTest {
            mean_phase: mean,
            z_score: if signal { f64::INFINITY * direction.signum() } else { 0.0 },
            p_value: if signal { 0.0 } else { 1.0 },
        };
    }
    let z = mean * n.sqrt() / sigma;
    ZeroSignalTest { mean_phase: mean, z_score: z, p_value: normal_cdf(-z * direction) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroSignalTest {
    pub mean_phase: f64,
    pub z_score: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionTest {
    /// KS distance of observed phases from the orthodox predictive law.
    pub ks_statistic: f64,
    /// Kolmogorov-distribution p-value of `ks_statistic`.
    pub p_value: f64,
    /// Monte Carlo p-value from orthodox replicates, if computed.
    pub mc_p_value: Option<f64>,
    pub mc_replicates: usize,
    /// KS distance of inferred momenta from the orthodox normal-momentum law.
    pub momentum_ks_statistic: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequiredBounces {
    Count(usize),
    NotAchievable { cap: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    FavorsOqt,
    FavorsDebbStationary,
    FavorsDebbDisturbed,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::FavorsOqt => "favors-OQT",
            Verdict::FavorsDebbStationary => "favors-deBB-stationary",
            Verdict::FavorsDebbDisturbed => "favors-deBB-disturbed",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationReport {
    pub n_bounces: usize,
    pub n_measured: usize,
    pub n_lost: usize,
    /// Observed phase per bounce; `None` for lost atoms.
    pub phases: Vec<Option<f64>>,
    /// `√(max(φ/K, 0))` per measured bounce.
    pub inferred_momenta: Vec<Option<f64>>,
    pub zero_signal: ZeroSignalTest,
    pub distribution: DistributionTest,
    /// p-value against the stationary pilot-wave hypothesis (zero signal).
    pub p_value_debb_stationary: f64,
    /// p-value against the orthodox hypothesis (distribution test).
    pub p_value_oqt: f64,
    pub alpha: f64,
    pub required_bounces: Option<RequiredBounces>,
    pub verdict: Verdict,
}

/// Generates a run under `model` for `config`.
pub fn simulate_run(config: &ExperimentConfig, model: &TheoryModel) -> Result<RunSeries, ExperimentError> {
    Engine::new(config.clone())?.simulate(model)
}

/// Tests a series against both hypotheses.
pub fn hypothesis_test(series: &RunSeries, config: &ExperimentConfig) -> Result<DiscriminationReport, ExperimentError> {
    Engine::new(config.clone())?.hypothesis_test(series)
}

/// Monte Carlo power analysis for `config` at `target_sigma`.
pub fn required_bounces(config: &ExperimentConfig, target_sigma: f64) -> Result<RequiredBounces, ExperimentError> {
    Engine::new(config.clone())?.required_bounces(target_sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::RB87_MASS;

    pub(crate) fn config(noise_sigma: f64, n_bounces: usize) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(
            WellGeometry::cubic(1e-6, RB87_MASS).unwrap(),
            ModeIndex::GROUND,
            MirrorParams { atom_mass: RB87_MASS, ..MirrorParams::rb87_example() },
            1e16,
            noise_sigma,
            n_bounces,
            2024,
        );
        c.null_replicates = 0;
        c.power_replicates = 200;
        c
    }

    #[test]
    fn stationary_noiseless_is_all_zero() {
        let s = simulate_run(&config(0.0, 100), &TheoryModel::DebbStationary).unwrap();
        assert!(s.observed_phases().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn oqt_noiseless_is_negative() {
        let s = simulate_run(&config(0.0, 1000), &TheoryModel::Oqt).unwrap();
        assert!(s.observed_phases().iter().all(|&p| p < 0.0));
    }

    #[test]
    fn zero_noise_needs_one_bounce() {
        assert_eq!(required_bounces(&config(0.0, 10), 5.0).unwrap(), RequiredBounces::Count(1));
    }

    #[test]
    fn all_lost_series_is_no_data() {
        let series = RunSeries { records: vec![BounceRecord { momentum: Some(1.0), measurement: None }; 3] };
        assert!(matches!(hypothesis_test(&series, &config(0.0, 3)), Err(ExperimentError::NoData)));
    }

    #[test]
    fn invalid_config_rejected() {
        let mut c = config(0.0, 0);
        assert!(Engine::new(c.clone()).is_err());
        c.n_bounces = 5;
        c.noise_sigma = -1.0;
        assert!(Engine::new(c).is_err());
        assert!(DisturbedDistribution::tabulated(vec![1.0], vec![0.0]).is_err());
        assert!(DisturbedDistribution::ScaledMarginal { scale: 0.0 }.normalized().is_err());
    }

    #[test]
    fn verdict_for_noiseless_stationary() {
        let c = config(0.0, 200);
        let engine = Engine::new(c).unwrap();
        let s = engine.simulate(&TheoryModel::DebbStationary).unwrap();
        let r = engine.hypothesis_test(&s).unwrap();
        assert_eq!(r.verdict, Verdict::FavorsDebbStationary);
        assert_eq!(r.zero_signal.p_value, 1.0);
    }

    #[test]
    fn tabulated_disturbance_draws_listed_values() {
        let engine = Engine::new(config(0.0, 50)).unwrap();
        let d = DisturbedDistribution::tabulated(vec![1e-28, 2e-28], vec![1.0, 3.0]).unwrap();
        let s = engine.simulate(&TheoryModel::DebbDisturbed { distribution: d }).unwrap();
        assert!(s.records.iter().all(|r| matches!(r.momentum, Some(p) if p == 1e-28 || p == 2e-28)));
    }

    #[test]
    fn first_hit_selection_runs() {
        let mut c = config(0.0, 500);
        c.wall_selection = WallSelection::FirstHit;
        let engine = Engine::new(c).unwrap();
        let s = engine.simulate(&TheoryModel::Oqt).unwrap();
        let r = engine.hypothesis_test(&s).unwrap();
        assert_eq!(r.verdict, Verdict::FavorsOqt);
    }
}
