//! Evanescent-wave atom mirror.
//!
//! A laser totally internally reflected inside a glass prism leaves an
//! evanescent field `I_ev e^{−2κz}` on the vacuum side. For blue detuning
//! (`Δ > 0`) the dipole potential repels atoms. The resultant potential
//! seen by an atom at height `z` above the surface is
//!
//! ```text
//! U(z) = U₀ e^{−2κz} − C₃ / z³ + M g z
//! ```
//!
//! **Imported result.** The surface value is taken as the far-detuned
//! two-level dipole potential `U₀ = (ħΓ²/8Δ)(I_ev/I_sat)`, the standard
//! optical dipole trap expression; it is not derived here. `C₃` is an
//! input rather than computed from atomic polarizabilities.
//!
//! Bounces are classical point-particle dynamics in `U`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{HBAR, SPEED_OF_LIGHT};
use crate::ode::{dopri_step, StepFailure, Stepper, Tolerance};

/// `|Δ|/Γ` below which the coherent (negligible spontaneous emission)
/// regime is flagged.
pub const COHERENT_DETUNING_RATIO: f64 = 100.0;

/// Barrier search interval upper end, in decay lengths.
pub const BARRIER_SEARCH_DECAY_LENGTHS: f64 = 10.0;

const SCAN_POINTS: usize = 4000;
const SCAN_START_DECAY_LENGTHS: f64 = 1e-9;
const BOUNCE_MAX_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MirrorError {
    #[error("invalid mirror parameters: {0}")]
    InvalidParams(String),
    #[error("incidence angle {angle} rad does not exceed the critical angle {critical} rad; no total internal reflection")]
    NoTotalInternalReflection { angle: f64, critical: f64 },
    #[error("height z = {0:e} m must be positive")]
    Domain(f64),
    #[error("atom energy {energy:e} J reaches the barrier top {barrier:e} J; it hits the surface")]
    SurfaceCollision { energy: f64, barrier: f64 },
    #[error("van der Waals attraction dominates everywhere; the atom is captured by the surface")]
    Capture,
    #[error("invalid bounce: {0}")]
    InvalidBounce(String),
    #[error("bounce integration failed: {0}")]
    Integration(String),
}

fn default_zero() -> f64 {
    0.0
}

fn default_gain() -> f64 {
    1.0
}

/// Laser, prism, atom and surface parameters of one mirror wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MirrorParams {
    /// Laser wavelength λ (m).
    pub wavelength: f64,
    /// Prism refractive index n (> 1).
    pub refractive_index: f64,
    /// Angle of incidence θ inside the prism (rad).
    pub incidence_angle: f64,
    /// Incident laser intensity I_L (W/m²).
    pub intensity_incident: f64,
    /// Natural linewidth Γ (rad/s).
    pub linewidth: f64,
    /// Detuning Δ = ω_L − ω_A (rad/s); positive for a mirror.
    pub detuning: f64,
    /// Atomic mass M (kg).
    pub atom_mass: f64,
    /// Van der Waals coefficient C₃ (J·m³).
    #[serde(default = "default_zero")]
    pub vdw_coefficient: f64,
    /// Gravitational acceleration toward the surface (m/s²).
    #[serde(default = "default_zero")]
    pub gravity: f64,
    /// Multiplier on the phase shift from coated prism faces.
    #[serde(default = "default_gain")]
    pub enhancement_gain: f64,
}

impl MirrorParams {
    pub fn validate(&self) -> Result<(), MirrorError> {
        let positive = [
            ("wavelength", self.wavelength),
            ("intensity_incident", self.intensity_incident),
            ("linewidth", self.linewidth),
            ("detuning", self.detuning),
            ("atom_mass", self.atom_mass),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(MirrorError::InvalidParams(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.refractive_index.is_finite() && self.refractive_index > 1.0) {
            return Err(MirrorError::InvalidParams(format!(
                "refractive_index must exceed 1, got {}",
                self.refractive_index
            )));
        }
        if !(self.incidence_angle > 0.0 && self.incidence_angle < PI / 2.0) {
            return Err(MirrorError::InvalidParams(format!(
                "incidence_angle must lie in (0, π/2), got {}",
                self.incidence_angle
            )));
        }
        for (name, v) in [("vdw_coefficient", self.vdw_coefficient), ("gravity", self.gravity)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(MirrorError::InvalidParams(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(self.enhancement_gain.is_finite() && self.enhancement_gain >= 1.0) {
            return Err(MirrorError::InvalidParams(format!(
                "enhancement_gain must be at least 1, got {}",
                self.enhancement_gain
            )));
        }
        Ok(())
    }

    /// Rubidium-87 D2 line, 780 nm laser at 60° in n = 1.5 glass, detuned
    /// by 1000 linewidths, with `I_L` set so that `I_ev = 100 I_sat`.
    pub fn rb87_example() -> Self {
        let linewidth = 2.0 * PI * 6.07e6;
        let wavelength = 780e-9;
        let n: f64 = 1.5;
        let theta = PI / 3.0;
        let i_sat = saturation_intensity(linewidth, wavelength);
        let intensity_incident = 100.0 * i_sat * (n * n - 1.0) / (4.0 * n * theta.cos().powi(2));
        Self {
            wavelength,
            refractive_index: n,
            incidence_angle: theta,
            intensity_incident,
            linewidth,
            detuning: 1000.0 * linewidth,
            atom_mass: 1.443e-25,
            vdw_coefficient: 0.0,
            gravity: 0.0,
            enhancement_gain: 1.0,
        }
    }
}

/// `asin(1/n)`.
pub fn critical_angle(refractive_index: f64) -> f64 {
    (1.0 / refractive_index).asin()
}

fn check_tir(params: &MirrorParams) -> Result<(), MirrorError> {
    params.validate()?;
    let critical = critical_angle(params.refractive_index);
    if params.incidence_angle <= critical {
        return Err(MirrorError::NoTotalInternalReflection { angle: params.incidence_angle, critical });
    }
    Ok(())
}

/// Decay constant `κ = (2π/λ)(n² sin²θ − 1)^{1/2}` (1/m).
pub fn decay_kappa(params: &MirrorParams) -> Result<f64, MirrorError> {
    check_tir(params)?;
    let n = params.refractive_index;
    let s = params.incidence_angle.sin();
    Ok(2.0 * PI / params.wavelength * (n * n * s * s - 1.0).sqrt())
}

/// Decay length `1/κ` (m).
pub fn decay_length(params: &MirrorParams) -> Result<f64, MirrorError> {
    Ok(1.0 / decay_kappa(params)?)
}

/// TE-polarized evanescent intensity at the surface,
/// `I_ev = 4n cos²θ I_L / (n² − 1)`.
pub fn evanescent_intensity(params: &MirrorParams) -> Result<f64, MirrorError> {
    check_tir(params)?;
    let n = params.refractive_index;
    Ok(4.0 * n * params.incidence_angle.cos().powi(2) * params.intensity_incident / (n * n - 1.0))
}

/// Two-level saturation intensity `2π²ħΓc / 3λ³` (W/m²).
pub fn saturation_intensity(linewidth: f64, wavelength: f64) -> f64 {
    2.0 * PI * PI * HBAR * linewidth * SPEED_OF_LIGHT / (3.0 * wavelength.powi(3))
}

/// Potential at the surface, `U₀ = (ħΓ²/8Δ)(I_ev/I_sat)` (J).
pub fn surface_potential(params: &MirrorParams) -> Result<f64, MirrorError> {
    let i_ev = evanescent_intensity(params)?;
    let i_sat = saturation_intensity(params.linewidth, params.wavelength);
    Ok(HBAR * params.linewidth.powi(2) / (8.0 * params.detuning) * (i_ev / i_sat))
}

/// Detuning too small for spontaneous emission to be negligible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherenceWarning {
    pub detuning_ratio: f64,
}

impl std::fmt::Display for CoherenceWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "|Δ|/Γ = {:.3} is below {COHERENT_DETUNING_RATIO}; spontaneous emission may not be negligible",
            self.detuning_ratio
        )
    }
}

pub fn coherence_warning(params: &MirrorParams) -> Option<CoherenceWarning> {
    let ratio = params.detuning.abs() / params.linewidth;
    (ratio < COHERENT_DETUNING_RATIO).then_some(CoherenceWarning { detuning_ratio: ratio })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSample {
    pub value: f64,
    pub warning: Option<CoherenceWarning>,
}

/// Precomputed constants of `U(z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potential {
    pub u0: f64,
    pub kappa: f64,
    pub c3: f64,
    pub weight: f64,
}

impl Potential {
    pub fn new(params: &MirrorParams) -> Result<Self, MirrorError> {
        Ok(Self {
            u0: surface_potential(params)?,
            kappa: decay_kappa(params)?,
            c3: params.vdw_coefficient,
            weight: params.atom_mass * params.gravity,
        })
    }

    pub fn value(&self, z: f64) -> f64 {
        self.u0 * (-2.0 * self.kappa * z).exp() - self.c3 / z.powi(3) + self.weight * z
    }

    pub fn derivative(&self, z: f64) -> f64 {
        -2.0 * self.kappa * self.u0 * (-2.0 * self.kappa * z).exp() + 3.0 * self.c3 / z.powi(4) + self.weight
    }
}

/// `U(z)` with the coherent-regime warning attached.
pub fn resultant_potential(params: &MirrorParams, z: f64) -> Result<PotentialSample, MirrorError> {
    if !(z > 0.0) {
        return Err(MirrorError::Domain(z));
    }
    let pot = Potential::new(params)?;
    Ok(PotentialSample { value: pot.value(z), warning: coherence_warning(params) })
}

/// Shape of the potential in front of the wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Barrier {
    /// Local maximum at `z > 0`.
    Interior { z: f64, height: f64 },
    /// No interior maximum; `U` rises monotonically toward the surface
    /// and approaches `height = U₀` as `z → 0⁺`.
    Surface { height: f64 },
    /// Van der Waals attraction wins everywhere; nothing is reflected.
    None,
}

/// Sampled potential and its barrier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialProfile {
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub barrier: Barrier,
}

impl PotentialProfile {
    pub fn barrier_z(&self) -> Option<f64> {
        match self.barrier {
            Barrier::Interior { z, .. } => Some(z),
            Barrier::Surface { .. } => Some(0.0),
            Barrier::None => None,
        }
    }

    pub fn barrier_height(&self) -> Option<f64> {
        match self.barrier {
            Barrier::Interior { height, .. } | Barrier::Surface { height } => Some(height),
            Barrier::None => None,
        }
    }
}

/// Golden-section maximization on `[a, b]`, assumed unimodal.
fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * (a.abs() + b.abs()) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Locates the barrier of `U` on `(0, 10/κ)`: scans a log-spaced grid to
/// bracket the largest local maximum, then refines by golden section.
pub fn barrier_analysis(params: &MirrorParams) -> Result<PotentialProfile, MirrorError> {
    let pot = Potential::new(params)?;
    let z_max = BARRIER_SEARCH_DECAY_LENGTHS / pot.kappa;
    let z_min = SCAN_START_DECAY_LENGTHS / pot.kappa;
    let ratio = (z_max / z_min).ln() / (SCAN_POINTS - 1) as f64;
    let z: Vec<f64> = (0..SCAN_POINTS).map(|i| z_min * (ratio * i as f64).exp()).collect();
    let u: Vec<f64> = z.iter().map(|&z| pot.value(z)).collect();

    let mut best: Option<usize> = None;
    for i in 1..SCAN_POINTS - 1 {
        if u[i] > u[i - 1] && u[i] >= u[i + 1] && best.is_none_or(|b| u[i] > u[b]) {
            best = Some(i);
        }
    }
    let barrier = match best {
        Some(i) => {
            let zb = golden_max(|z| pot.value(z), z[i - 1], z[i + 1]);
            Barrier::Interior { z: zb, height: pot.value(zb) }
        }
        None if pot.c3 == 0.0 => Barrier::Surface { height: pot.u0 },
        None => {
            if u[1] < u[0] {
                // Maximum hides below the first scan point.
                let zb = golden_max(|z| pot.value(z), z_min * 1e-6, z[1]);
                Barrier::Interior { z: zb, height: pot.value(zb) }
            } else {
                Barrier::None
            }
        }
    };
    Ok(PotentialProfile { z, u, barrier })
}

/// Height-resolved bounce path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BounceTrajectory {
    pub times: Vec<f64>,
    pub z: Vec<f64>,
    pub velocity: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BounceOutcome {
    pub trajectory: BounceTrajectory,
    /// Outgoing momentum when the atom is back at `z_start` (kg·m/s).
    pub p_out: f64,
    /// Closest approach to the surface (m).
    pub turning_point: f64,
    /// Largest `|E(t) − E(0)| / |E(0)|` over accepted steps.
    pub max_energy_drift: f64,
}

/// Finds `h* ∈ (0, h]` with `g(state after one step of h*) = 0`, given
/// `g` changes sign across the full step.
fn locate<F>(rhs: &mut F, t: f64, y: &[f64; 2], dy: &[f64; 2], h: f64, tol: &Tolerance<2>, g: impl Fn(&[f64; 2]) -> f64) -> Result<(f64, [f64; 2]), MirrorError>
where
    F: FnMut(f64, &[f64; 2]) -> Result<[f64; 2], MirrorError>,
{
    let g0 = g(y);
    let (mut lo, mut hi) = (0.0, h);
    let mut best = *y;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let trial = dopri_step(rhs, t, y, dy, mid, tol)?;
        best = trial.y;
        if g(&trial.y).signum() == g0.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * h.abs() {
            break;
        }
    }
    Ok((0.5 * (lo + hi), best))
}

/// Classical reflection of an atom arriving at height `z_start` with
/// momentum `p_in ≤ 0` (toward the wall). Integrates `M z̈ = −U'(z)` until
/// the atom is back at `z_start` (or at its apex, if lower).
pub fn bounce(params: &MirrorParams, p_in: f64, z_start: f64) -> Result<BounceOutcome, MirrorError> {
    if !(z_start > 0.0 && z_start.is_finite()) {
        return Err(MirrorError::Domain(z_start));
    }
    if !(p_in <= 0.0 && p_in.is_finite()) {
        return Err(MirrorError::InvalidBounce(format!("p_in = {p_in:e} must be finite and directed toward the wall (≤ 0)")));
    }
    let pot = Potential::new(params)?;
    let mass = params.atom_mass;
    let profile = barrier_analysis(params)?;
    let energy0 = p_in * p_in / (2.0 * mass) + pot.value(z_start);
    match profile.barrier {
        Barrier::None => return Err(MirrorError::Capture),
        Barrier::Interior { height, .. } | Barrier::Surface { height } if energy0 >= height => {
            return Err(MirrorError::SurfaceCollision { energy: energy0, barrier: height });
        }
        _ => {}
    }
    if p_in == 0.0 && pot.weight == 0.0 {
        return Ok(BounceOutcome {
            trajectory: BounceTrajectory { times: vec![0.0], z: vec![z_start], velocity: vec![0.0] },
            p_out: 0.0,
            turning_point: z_start,
            max_energy_drift: 0.0,
        });
    }

    let mut rhs = |_t: f64, y: &[f64; 2]| -> Result<[f64; 2], MirrorError> {
        if !(y[0] > 0.0) {
            return Err(MirrorError::Capture);
        }
        Ok([y[1], -pot.derivative(y[0]) / mass])
    };
    let v_in = p_in / mass;
    let v_scale = v_in.abs().max((2.0 * pot.u0 / mass).sqrt());
    let tol = Tolerance { atol: [1e-14 / pot.kappa, 1e-14 * v_scale], rtol: 1e-13 };
    let h0 = 0.01 / (pot.kappa * v_scale);
    let mut stepper = Stepper::new(&mut rhs, 0.0, [z_start, v_in], h0, tol)?;
    stepper.min_step = h0 * 1e-12;
    let energy = |y: &[f64; 2]| 0.5 * mass * y[1] * y[1] + pot.value(y[0]);

    let mut traj = BounceTrajectory { times: vec![0.0], z: vec![z_start], velocity: vec![v_in] };
    let mut max_drift: f64 = 0.0;
    let mut turning_point = if v_in == 0.0 { Some(z_start) } else { None };
    let horizon = f64::INFINITY;
    for _ in 0..BOUNCE_MAX_STEPS {
        let before = stepper;
        stepper.advance(&mut rhs, horizon).map_err(|e| match e {
            StepFailure::Rhs(e) => e,
            StepFailure::Underflow { t, h } => MirrorError::Integration(format!("step underflow at t = {t:e} (h = {h:e})")),
        })?;
        let h = stepper.t - before.t;
        let y = stepper.y;
        if turning_point.is_none() && y[1] >= 0.0 {
            let (_, at) = locate(&mut rhs, before.t, &before.y, &before.dy, h, &tol, |s| s[1])?;
            turning_point = Some(at[0]);
        }
        let finished = turning_point.is_some() && ((y[0] >= z_start && y[1] > 0.0) || (y[1] < 0.0 && before.y[1] >= 0.0));
        if finished {
            let upward = y[0] >= z_start && y[1] > 0.0;
            let (dt, at) = if upward {
                locate(&mut rhs, before.t, &before.y, &before.dy, h, &tol, |s| s[0] - z_start)?
            } else {
                locate(&mut rhs, before.t, &before.y, &before.dy, h, &tol, |s| s[1])?
            };
            max_drift = max_drift.max(((energy(&at) - energy0) / energy0).abs());
            traj.times.push(before.t + dt);
            traj.z.push(at[0]);
            traj.velocity.push(at[1]);
            return Ok(BounceOutcome {
                trajectory: traj,
                p_out: mass * at[1],
                turning_point: turning_point.expect("set before finishing"),
                max_energy_drift: max_drift,
            });
        }
        max_drift = max_drift.max(((energy(&y) - energy0) / energy0).abs());
        traj.times.push(stepper.t);
        traj.z.push(y[0]);
        traj.velocity.push(y[1]);
    }
    Err(MirrorError::Integration("step budget exhausted before the atom returned".into()))
}
