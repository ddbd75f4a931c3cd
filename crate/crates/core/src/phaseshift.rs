//! Phase shift of the reflected mirror laser caused by bouncing atoms, its
//! inversion to an atomic momentum, and the homodyne noise model.
//!
//! For TE polarization the shift is
//!
//! ```text
//! φ = −(12/π) · n cosθ/(n² − 1) · p²/(MħΓ) · I_sat/I_ev · λ²/κ · ρ_in · G
//! ```
//!
//! which is dimensionless: `p²/(MħΓ)` and `λ²ρ_in/κ` are both pure numbers.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::HBAR;
use crate::mirror::{self, MirrorError, MirrorParams};
use crate::rng::{self, Purpose};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhaseError {
    #[error(transparent)]
    Mirror(#[from] MirrorError),
    #[error("invalid phase-shift input: {0}")]
    InvalidInput(String),
    #[error("observed phase {observed:e} rad has the wrong sign for prefactor {prefactor:e}")]
    UnphysicalPhase { observed: f64, prefactor: f64 },
    #[error("atomic density is zero; the phase carries no momentum information")]
    DegenerateDensity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseShiftInput {
    /// Momentum magnitude normal to the wall (kg·m/s).
    pub momentum_max: f64,
    /// Incident atomic density (m⁻³).
    pub atomic_density: f64,
    pub mirror: MirrorParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMeasurement {
    pub phi_true: f64,
    pub phi_observed: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// `φ / p²` for the given density and mirror, including sign and gain.
pub fn prefactor(atomic_density: f64, mirror: &MirrorParams) -> Result<f64, PhaseError> {
    let kappa = mirror::decay_kappa(mirror)?;
    let i_ev = mirror::evanescent_intensity(mirror)?;
    let i_sat = mirror::saturation_intensity(mirror.linewidth, mirror.wavelength);
    let n = mirror.refractive_index;
    let geometric = n * mirror.incidence_angle.cos() / (n * n - 1.0);
    let per_p2 = 1.0 / (mirror.atom_mass * HBAR * mirror.linewidth);
    Ok(-(12.0 / PI)
        * geometric
        * per_p2
        * (i_sat / i_ev)
        * (mirror.wavelength.powi(2) / kappa)
        * atomic_density
        * mirror.enhancement_gain)
}

/// Phase shift (rad) of the laser reflected off one wall.
pub fn phase_shift(input: &PhaseShiftInput) -> Result<f64, PhaseError> {
    if !(input.momentum_max >= 0.0 && input.momentum_max.is_finite()) {
        return Err(PhaseError::InvalidInput(format!("momentum {} must be non-negative", input.momentum_max)));
    }
    if !(input.atomic_density >= 0.0 && input.atomic_density.is_finite()) {
        return Err(PhaseError::InvalidInput(format!("density {} must be non-negative", input.atomic_density)));
    }
    let k = prefactor(input.atomic_density, &input.mirror)?;
    if input.momentum_max == 0.0 {
        return Ok(0.0);
    }
    Ok(k * input.momentum_max.powi(2))
}

/// Momentum magnitude that produces `phi_observed`, `p = √(φ/K)`.
pub fn invert_momentum(phi_observed: f64, atomic_density: f64, mirror: &MirrorParams) -> Result<f64, PhaseError> {
    if atomic_density == 0.0 {
        return Err(PhaseError::DegenerateDensity);
    }
    if !(atomic_density > 0.0 && atomic_density.is_finite()) {
        return Err(PhaseError::InvalidInput(format!("density {atomic_density} must be positive")));
    }
    let k = prefactor(atomic_density, mirror)?;
    let ratio = phi_observed / k;
    if ratio < 0.0 || !ratio.is_finite() {
        return Err(PhaseError::UnphysicalPhase { observed: phi_observed, prefactor: k });
    }
    Ok(ratio.sqrt())
}

/// Density of a single atom spread over the interaction volume
/// `spot_area × 1/(2κ)`.
pub fn single_atom_density(spot_area: f64, mirror: &MirrorParams) -> Result<f64, PhaseError> {
    if !(spot_area > 0.0 && spot_area.is_finite()) {
        return Err(PhaseError::InvalidInput(format!("spot area {spot_area} must be positive")));
    }
    let kappa = mirror::decay_kappa(mirror)?;
    Ok(2.0 * kappa / spot_area)
}

/// Adds one zero-mean Gaussian draw of width `noise_sigma` to `phi_true`.
pub fn observe(phi_true: f64, noise_sigma: f64, seed: u64) -> Result<PhaseMeasurement, PhaseError> {
    let mut rng = rng::substream(seed, Purpose::Noise, 0);
    let phi_observed = phi_true + noise_draw(noise_sigma, &mut rng)?;
    Ok(PhaseMeasurement { phi_true, phi_observed, noise_sigma, seed })
}

/// A single `N(0, σ²)` draw; exactly zero when `σ = 0`.
pub fn noise_draw<R: Rng + ?Sized>(noise_sigma: f64, rng: &mut R) -> Result<f64, PhaseError> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(PhaseError::InvalidInput(format!("noise sigma {noise_sigma} must be non-negative")));
    }
    if noise_sigma == 0.0 {
        return Ok(0.0);
    }
    let normal = Normal::new(0.0, noise_sigma).map_err(|e| PhaseError::InvalidInput(e.to_string()))?;
    Ok(normal.sample(rng))
}
