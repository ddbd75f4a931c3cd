//! Guidance-law trajectories `dx/dt = ∇S / m` inside the well and ensemble
//! diagnostics (equivariance, relaxation toward `|Ψ|²`).

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::constants::HBAR;
use crate::ode::{StepFailure, Stepper, Tolerance};
use crate::rng::{self, Purpose};
use crate::vec3::Vec3;
use crate::wellqm::{self, cell_probability, Position3, QuantumState, WellError, WellGeometry};

/// Maximum share of particles allowed to fail in [`evolve_ensemble`].
pub const MAX_FAILED_FRACTION: f64 = 0.01;

/// Minimum ensemble size for [`relaxation_metric`].
pub const MIN_RELAXATION_ENSEMBLE: usize = 100;

const MAX_STEPS: usize = 2_000_000;
const MAX_RETRIES: usize = 40;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PilotError {
    #[error(transparent)]
    Well(#[from] WellError),
    #[error("start position is not a valid trajectory origin: {0}")]
    InvalidStart(WellError),
    #[error("trajectory approached a node at t = {t:e} s; last good position ({x:e}, {y:e}, {z:e})", x = .position.x, y = .position.y, z = .position.z)]
    NodeApproach { t: f64, position: Position3 },
    #[error("step size underflow at t = {t:e} s (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step budget exhausted at t = {t:e} s")]
    TooManySteps { t: f64 },
    #[error("{failed} of {total} particles failed, above the {limit}% limit", limit = MAX_FAILED_FRACTION * 100.0)]
    EnsembleQuality { failed: usize, total: usize },
    #[error("ensemble needs at least {min} particles, got {got}")]
    EnsembleTooSmall { min: usize, got: usize },
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),
}

/// Positions and velocities at each accepted integration step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub positions: Vec<Position3>,
    pub velocities: Vec<Vec3>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn end(&self) -> Position3 {
        *self.positions.last().expect("trajectory has at least the start point")
    }
}

/// Equally weighted particle positions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ensemble {
    particles: Vec<Position3>,
}

impl Ensemble {
    pub fn new(geom: &WellGeometry, particles: Vec<Position3>) -> Result<Self, PilotError> {
        if particles.is_empty() {
            return Err(PilotError::InvalidEnsemble("no particles".into()));
        }
        if let Some(p) = particles.iter().find(|p| !geom.contains_strictly(**p)) {
            return Err(PilotError::InvalidEnsemble(format!("particle at {p:?} is outside the well")));
        }
        Ok(Self { particles })
    }

    pub fn particles(&self) -> &[Position3] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }
}

/// Guidance velocity `∇S / m`.
pub fn velocity(geom: &WellGeometry, state: &QuantumState, pos: Position3, t: f64) -> Result<Vec3, WellError> {
    Ok(wellqm::grad_s(geom, state, pos, t)? * (1.0 / geom.mass))
}

/// Shortest beat period `2πħ/|ΔE|` among the state's terms, if any.
pub fn beat_period(geom: &WellGeometry, state: &QuantumState) -> Option<f64> {
    let energies: Vec<f64> = state.terms().iter().map(|t| wellqm::energy(geom, t.mode)).collect();
    let mut gap: f64 = 0.0;
    for (i, a) in energies.iter().enumerate() {
        for b in &energies[i + 1..] {
            gap = gap.max((a - b).abs());
        }
    }
    (gap > 0.0).then(|| 2.0 * std::f64::consts::PI * HBAR / gap)
}

fn rhs<'a>(
    geom: &'a WellGeometry,
    state: &'a QuantumState,
) -> impl FnMut(f64, &[f64; 3]) -> Result<[f64; 3], WellError> + 'a {
    move |t, y| velocity(geom, state, Vec3::from_array(*y), t).map(Vec3::to_array)
}

fn integrate(
    geom: &WellGeometry,
    state: &QuantumState,
    start: Position3,
    t0: f64,
    t1: f64,
    tol: f64,
    mut record: Option<&mut Trajectory>,
) -> Result<Position3, PilotError> {
    let mut f = rhs(geom, state);
    let first = velocity(geom, state, start, t0).map_err(PilotError::InvalidStart)?;
    if let Some(traj) = record.as_deref_mut() {
        traj.times.push(t0);
        traj.positions.push(start);
        traj.velocities.push(first);
    }
    if t1 == t0 {
        return Ok(start);
    }
    let span = t1 - t0;
    let h0 = beat_period(geom, state).map_or(span.abs(), |p| (p / 200.0).min(span.abs()));
    let tolerance = Tolerance { atol: [tol; 3], rtol: 0.0 };
    let mut stepper = Stepper::new(&mut f, t0, start.to_array(), h0.copysign(span), tolerance)?;
    stepper.min_step = h0 * 1e-12;
    let mut steps = 0;
    let mut retries = 0;
    while stepper.t != t1 {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(PilotError::TooManySteps { t: stepper.t });
        }
        match stepper.advance(&mut f, t1) {
            Ok(()) => {
                retries = 0;
                let pos = Vec3::from_array(stepper.y);
                if !geom.contains_strictly(pos) {
                    return Err(PilotError::NodeApproach { t: stepper.t, position: pos });
                }
                if let Some(traj) = record.as_deref_mut() {
                    traj.times.push(stepper.t);
                    traj.positions.push(pos);
                    traj.velocities.push(Vec3::from_array(stepper.dy));
                }
            }
            // A trial stage strayed outside the box or onto a node; retry shorter.
            Err(StepFailure::Rhs(_)) if retries < MAX_RETRIES => {
                retries += 1;
                stepper.h *= 0.25;
            }
            Err(StepFailure::Rhs(_)) => {
                return Err(PilotError::NodeApproach { t: stepper.t, position: Vec3::from_array(stepper.y) });
            }
            Err(StepFailure::Underflow { t, h }) => return Err(PilotError::StepUnderflow { t, h }),
        }
    }
    Ok(Vec3::from_array(stepper.y))
}

/// Integrates the guidance equation from `t0` to `t1` (either direction)
/// with absolute per-step position tolerance `tol` (m).
pub fn integrate_trajectory(
    geom: &WellGeometry,
    state: &QuantumState,
    start: Position3,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<Trajectory, PilotError> {
    let mut traj = Trajectory { times: Vec::new(), positions: Vec::new(), velocities: Vec::new() };
    integrate(geom, state, start, t0, t1, tol, Some(&mut traj))?;
    Ok(traj)
}

/// Endpoint of [`integrate_trajectory`] without storing intermediate steps.
pub fn integrate_endpoint(
    geom: &WellGeometry,
    state: &QuantumState,
    start: Position3,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<Position3, PilotError> {
    integrate(geom, state, start, t0, t1, tol, None)
}

#[derive(Debug, Clone)]
pub struct EnsembleEvolution {
    /// Advanced positions; failed particles keep their starting position.
    pub ensemble: Ensemble,
    pub failures: Vec<(usize, PilotError)>,
}

/// Advances every particle independently, in parallel.
pub fn evolve_ensemble(
    geom: &WellGeometry,
    state: &QuantumState,
    ensemble: &Ensemble,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<EnsembleEvolution, PilotError> {
    let results: Vec<Result<Position3, PilotError>> = ensemble
        .particles
        .par_iter()
        .map(|&p| integrate_endpoint(geom, state, p, t0, t1, tol))
        .collect();
    let mut particles = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(p) => particles.push(p),
            Err(e) => {
                particles.push(ensemble.particles[i]);
                failures.push((i, e));
            }
        }
    }
    if failures.len() as f64 > MAX_FAILED_FRACTION * ensemble.len() as f64 {
        return Err(PilotError::EnsembleQuality { failed: failures.len(), total: ensemble.len() });
    }
    Ok(EnsembleEvolution { ensemble: Ensemble { particles }, failures })
}

/// Draws an equilibrium (`|Ψ(t)|²`-distributed) ensemble by rejection.
pub fn sample_equilibrium(geom: &WellGeometry, state: &QuantumState, t: f64, count: usize, seed: u64) -> Ensemble {
    let bound = state.peak_amplitude(geom).powi(2);
    let sides = geom.sides();
    let mut rng = rng::substream(seed, Purpose::Ensemble, 0);
    let mut particles = Vec::with_capacity(count);
    while particles.len() < count {
        let p = Vec3::new(
            rng.random::<f64>() * sides[0],
            rng.random::<f64>() * sides[1],
            rng.random::<f64>() * sides[2],
        );
        if !geom.contains_strictly(p) {
            continue;
        }
        if rng.random::<f64>() * bound < wellqm::probability_density(geom, state, p, t) {
            particles.push(p);
        }
    }
    Ensemble { particles }
}

/// CDF of the `axis` position marginal of `|Ψ(t)|²`.
pub fn marginal_cdf(geom: &WellGeometry, state: &QuantumState, t: f64, axis: usize, coord: f64) -> f64 {
    let mut hi = geom.sides();
    hi[axis] = coord;
    cell_probability(geom, state, t, Vec3::ZERO, Vec3::from_array(hi))
}

/// Coarse-grained L1 distance between the ensemble histogram and the
/// `|Ψ(t)|²` cell probabilities on a uniform `bins` grid; in `[0, 2]`.
pub fn relaxation_metric(
    geom: &WellGeometry,
    state: &QuantumState,
    ensemble: &Ensemble,
    t: f64,
    bins: [usize; 3],
) -> Result<f64, PilotError> {
    if ensemble.len() < MIN_RELAXATION_ENSEMBLE {
        return Err(PilotError::EnsembleTooSmall { min: MIN_RELAXATION_ENSEMBLE, got: ensemble.len() });
    }
    let sides = geom.sides();
    let widths: Vec<f64> = (0..3).map(|a| sides[a] / bins[a] as f64).collect();
    let mut counts = vec![0usize; bins[0] * bins[1] * bins[2]];
    let cell_of = |p: &Position3| -> usize {
        let idx: Vec<usize> = (0..3).map(|a| ((p[a] / widths[a]) as usize).min(bins[a] - 1)).collect();
        (idx[0] * bins[1] + idx[1]) * bins[2] + idx[2]
    };
    for p in &ensemble.particles {
        counts[cell_of(p)] += 1;
    }
    let n = ensemble.len() as f64;
    let mut distance = 0.0;
    for i in 0..bins[0] {
        for j in 0..bins[1] {
            for k in 0..bins[2] {
                let lo = Vec3::new(i as f64 * widths[0], j as f64 * widths[1], k as f64 * widths[2]);
                let hi = Vec3::new(lo.x + widths[0], lo.y + widths[1], lo.z + widths[2]);
                let expected = cell_probability(geom, state, t, lo, hi);
                let observed = counts[(i * bins[1] + j) * bins[2] + k] as f64 / n;
                distance += (observed - expected).abs();
            }
        }
    }
    Ok(distance.min(2.0))
}
