//! Eigenstates of the three-dimensional infinite rectangular well.
//!
//! Positions are measured from one corner of the box, so the interior is
//! `0 < x < side_x` (and likewise for y, z). Stationary states are products
//! of sines times `exp(-iEt/ħ)`; superpositions of them are the only
//! states with a nonzero guidance velocity.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::HBAR;
use crate::vec3::Vec3;

pub type Position3 = Vec3;

/// Guidance velocities are refused where the amplitude is below this
/// fraction of the state's peak amplitude bound.
pub const NODE_THRESHOLD: f64 = 1e-9;

/// Tolerance on the squared-coefficient sum of a [`QuantumState`].
pub const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WellError {
    #[error("invalid well geometry: {0}")]
    InvalidGeometry(String),
    #[error("mode numbers must be >= 1, got ({0}, {1}, {2})")]
    InvalidMode(u32, u32, u32),
    #[error("invalid quantum state: {0}")]
    InvalidState(String),
    #[error("position ({x:e}, {y:e}, {z:e}) is not strictly inside the well", x = .0.x, y = .0.y, z = .0.z)]
    OutOfDomain(Position3),
    #[error("amplitude {amplitude:e} below node threshold {threshold:e}; guidance velocity undefined")]
    NodeSingularity { amplitude: f64, threshold: f64 },
}

/// Box side lengths (m) and particle mass (kg).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WellGeometry {
    pub side_x: f64,
    pub side_y: f64,
    pub side_z: f64,
    pub mass: f64,
}

impl WellGeometry {
    pub fn new(side_x: f64, side_y: f64, side_z: f64, mass: f64) -> Result<Self, WellError> {
        let g = Self { side_x, side_y, side_z, mass };
        g.validate()?;
        Ok(g)
    }

    pub fn cubic(side: f64, mass: f64) -> Result<Self, WellError> {
        Self::new(side, side, side, mass)
    }

    pub fn validate(&self) -> Result<(), WellError> {
        for (name, v) in [
            ("side_x", self.side_x),
            ("side_y", self.side_y),
            ("side_z", self.side_z),
            ("mass", self.mass),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(WellError::InvalidGeometry(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    pub fn sides(&self) -> [f64; 3] {
        [self.side_x, self.side_y, self.side_z]
    }

    pub fn volume(&self) -> f64 {
        self.side_x * self.side_y * self.side_z
    }

    pub fn center(&self) -> Position3 {
        Vec3::new(self.side_x / 2.0, self.side_y / 2.0, self.side_z / 2.0)
    }

    pub fn contains_strictly(&self, p: Position3) -> bool {
        p.to_array().iter().zip(self.sides()).all(|(&c, l)| c > 0.0 && c < l)
    }

    /// Amplitude of every normalized eigenfunction's sine product, √(8/V).
    pub fn normalization(&self) -> f64 {
        (8.0 / self.volume()).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[u32; 3]", into = "[u32; 3]")]
pub struct ModeIndex {
    nx: u32,
    ny: u32,
    nz: u32,
}

impl ModeIndex {
    pub const GROUND: ModeIndex = ModeIndex { nx: 1, ny: 1, nz: 1 };

    pub fn new(nx: u32, ny: u32, nz: u32) -> Result<Self, WellError> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(WellError::InvalidMode(nx, ny, nz));
        }
        Ok(Self { nx, ny, nz })
    }

    pub fn nx(self) -> u32 {
        self.nx
    }
    pub fn ny(self) -> u32 {
        self.ny
    }
    pub fn nz(self) -> u32 {
        self.nz
    }

    pub fn as_array(self) -> [u32; 3] {
        [self.nx, self.ny, self.nz]
    }
}

impl TryFrom<[u32; 3]> for ModeIndex {
    type Error = WellError;
    fn try_from(a: [u32; 3]) -> Result<Self, WellError> {
        Self::new(a[0], a[1], a[2])
    }
}

impl From<ModeIndex> for [u32; 3] {
    fn from(m: ModeIndex) -> Self {
        m.as_array()
    }
}

impl std::fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.nx, self.ny, self.nz)
    }
}

/// Energy of an eigenmode,
/// `E = (nx²/Lx² + ny²/Ly² + nz²/Lz²) π²ħ² / 2m`.
pub fn energy(geom: &WellGeometry, mode: ModeIndex) -> f64 {
    let sum: f64 = mode
        .as_array()
        .iter()
        .zip(geom.sides())
        .map(|(&n, l)| (n as f64 / l).powi(2))
        .sum();
    sum * PI * PI * HBAR * HBAR / (2.0 * geom.mass)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateTerm {
    pub mode: ModeIndex,
    pub coefficient: Complex64,
}

/// A normalized superposition of well eigenmodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantumState {
    terms: Vec<StateTerm>,
}

impl QuantumState {
    pub fn eigen(mode: ModeIndex) -> Self {
        Self { terms: vec![StateTerm { mode, coefficient: Complex64::new(1.0, 0.0) }] }
    }

    /// Checks normalization (to [`NORM_TOLERANCE`]) and mode uniqueness.
    pub fn superposition(terms: Vec<StateTerm>) -> Result<Self, WellError> {
        if terms.is_empty() {
            return Err(WellError::InvalidState("no terms".into()));
        }
        for (i, a) in terms.iter().enumerate() {
            if !(a.coefficient.re.is_finite() && a.coefficient.im.is_finite()) {
                return Err(WellError::InvalidState(format!("non-finite coefficient for mode {}", a.mode)));
            }
            if terms[..i].iter().any(|b| b.mode == a.mode) {
                return Err(WellError::InvalidState(format!("duplicate mode {}", a.mode)));
            }
        }
        let norm: f64 = terms.iter().map(|t| t.coefficient.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(WellError::InvalidState(format!("squared coefficients sum to {norm}, not 1")));
        }
        Ok(Self { terms })
    }

    /// Rescales the coefficients to unit norm before validating.
    pub fn normalized(mut terms: Vec<StateTerm>) -> Result<Self, WellError> {
        let norm: f64 = terms.iter().map(|t| t.coefficient.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(WellError::InvalidState("coefficients have zero or non-finite norm".into()));
        }
        for t in &mut terms {
            t.coefficient /= norm;
        }
        Self::superposition(terms)
    }

    /// Equal-weight real superposition of the given modes.
    pub fn equal_superposition(modes: &[ModeIndex]) -> Result<Self, WellError> {
        Self::normalized(
            modes.iter().map(|&mode| StateTerm { mode, coefficient: Complex64::new(1.0, 0.0) }).collect(),
        )
    }

    pub fn terms(&self) -> &[StateTerm] {
        &self.terms
    }

    pub fn single_mode(&self) -> Option<ModeIndex> {
        match self.terms.as_slice() {
            [t] => Some(t.mode),
            _ => None,
        }
    }

    /// Upper bound on |Ψ| over the box: √(8/V) Σ|c|. Exact for eigenmodes.
    pub fn peak_amplitude(&self, geom: &WellGeometry) -> f64 {
        geom.normalization() * self.terms.iter().map(|t| t.coefficient.norm()).sum::<f64>()
    }
}

/// Amplitude/phase decomposition `Ψ = R exp(iS/ħ)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveSample {
    pub amplitude: f64,
    /// Action S in J·s.
    pub phase: f64,
    pub value: Complex64,
}

/// Sine product of a mode and its gradient at `pos`.
fn mode_factors(geom: &WellGeometry, mode: ModeIndex, pos: Position3) -> (f64, Vec3) {
    let mut s = [0.0; 3];
    let mut ds = [0.0; 3];
    for (axis, (&n, l)) in mode.as_array().iter().zip(geom.sides()).enumerate() {
        let k = n as f64 * PI / l;
        let (sin, cos) = (k * pos[axis]).sin_cos();
        s[axis] = sin;
        ds[axis] = k * cos;
    }
    let norm = geom.normalization();
    let value = norm * s[0] * s[1] * s[2];
    let grad = Vec3::new(ds[0] * s[1] * s[2], s[0] * ds[1] * s[2], s[0] * s[1] * ds[2]) * norm;
    (value, grad)
}

/// Wavefunction value with no domain check; zero outside the closed box.
pub fn psi(geom: &WellGeometry, state: &QuantumState, pos: Position3, t: f64) -> Complex64 {
    let inside = pos.to_array().iter().zip(geom.sides()).all(|(&c, l)| (0.0..=l).contains(&c));
    if !inside {
        return Complex64::new(0.0, 0.0);
    }
    let e_ref = energy(geom, state.terms[0].mode);
    let reduced: Complex64 = state
        .terms
        .iter()
        .map(|term| {
            let (f, _) = mode_factors(geom, term.mode, pos);
            let dphase = -(energy(geom, term.mode) - e_ref) * t / HBAR;
            term.coefficient * Complex64::from_polar(f, dphase)
        })
        .sum();
    reduced * Complex64::from_polar(1.0, -e_ref * t / HBAR)
}

/// `|Ψ|²` at `pos`, zero outside the box.
pub fn probability_density(geom: &WellGeometry, state: &QuantumState, pos: Position3, t: f64) -> f64 {
    psi(geom, state, pos, t).norm_sqr()
}

/// Evaluates Ψ and its polar form at an interior point.
///
/// The action is continuous in time: `S = ħ·arg(Ψ e^{iE₀t/ħ}) − E₀t`
/// with `E₀` the energy of the first term. Where a real sine product is
/// negative the sign shows up as a jump of `πħ` in `S`, so `R ≥ 0`.
pub fn eval_psi(geom: &WellGeometry, state: &QuantumState, pos: Position3, t: f64) -> Result<WaveSample, WellError> {
    if !geom.contains_strictly(pos) {
        return Err(WellError::OutOfDomain(pos));
    }
    let e_ref = energy(geom, state.terms[0].mode);
    let reduced: Complex64 = state
        .terms
        .iter()
        .map(|term| {
            let (f, _) = mode_factors(geom, term.mode, pos);
            let dphase = -(energy(geom, term.mode) - e_ref) * t / HBAR;
            term.coefficient * Complex64::from_polar(f, dphase)
        })
        .sum();
    let amplitude = reduced.norm();
    let phase = HBAR * reduced.arg() - e_ref * t;
    let value = reduced * Complex64::from_polar(1.0, -e_ref * t / HBAR);
    Ok(WaveSample { amplitude, phase, value })
}

/// Guidance momentum `∇S = ħ Im(∇Ψ/Ψ)` from analytic mode derivatives.
///
/// Evaluated as `ħ Σ_{j≠k} Im(w̄_j w_k) f_j ∇f_k / |Ψ|²`, which drops the
/// diagonal terms exactly: any single eigenmode yields the zero vector
/// bit for bit.
pub fn grad_s(geom: &WellGeometry, state: &QuantumState, pos: Position3, t: f64) -> Result<Vec3, WellError> {
    if !geom.contains_strictly(pos) {
        return Err(WellError::OutOfDomain(pos));
    }
    let factors: Vec<(f64, Vec3, f64)> = state
        .terms
        .iter()
        .map(|term| {
            let (f, g) = mode_factors(geom, term.mode, pos);
            (f, g, energy(geom, term.mode))
        })
        .collect();
    let mut density = 0.0;
    let mut current = Vec3::ZERO;
    for (j, (tj, (fj, _, ej))) in state.terms.iter().zip(&factors).enumerate() {
        density += tj.coefficient.norm_sqr() * fj * fj;
        for (k, (tk, (fk, gk, ek))) in state.terms.iter().zip(&factors).enumerate() {
            if j == k {
                continue;
            }
            let cross = tj.coefficient.conj() * tk.coefficient * Complex64::from_polar(1.0, -(ek - ej) * t / HBAR);
            density += cross.re * fj * fk;
            current += *gk * (cross.im * fj);
        }
    }
    let amplitude = density.max(0.0).sqrt();
    let threshold = NODE_THRESHOLD * state.peak_amplitude(geom);
    if amplitude < threshold {
        return Err(WellError::NodeSingularity { amplitude, threshold });
    }
    Ok(current * (HBAR / density))
}

/// `∫_a^b sin(nπx/L) sin(mπx/L) dx`.
pub fn sine_overlap(n: u32, m: u32, side: f64, a: f64, b: f64) -> f64 {
    let k = |q: i64| q as f64 * PI / side;
    let prim = |x: f64| {
        if n == m {
            0.5 * (x - (k(2 * n as i64) * x).sin() / k(2 * n as i64))
        } else {
            let d = n as i64 - m as i64;
            let s = (n + m) as i64;
            0.5 * ((k(d) * x).sin() / k(d) - (k(s) * x).sin() / k(s))
        }
    };
    prim(b) - prim(a)
}

/// Probability of finding the particle in the axis-aligned cell `[lo, hi]`
/// at time `t`, evaluated in closed form.
pub fn cell_probability(geom: &WellGeometry, state: &QuantumState, t: f64, lo: Vec3, hi: Vec3) -> f64 {
    let norm2 = 8.0 / geom.volume();
    let sides = geom.sides();
    let mut total = 0.0;
    for tj in &state.terms {
        let ej = energy(geom, tj.mode);
        for tk in &state.terms {
            let ek = energy(geom, tk.mode);
            let weight = tj.coefficient.conj() * tk.coefficient * Complex64::from_polar(1.0, -(ek - ej) * t / HBAR);
            let mut overlap = norm2;
            for axis in 0..3 {
                overlap *= sine_overlap(
                    tj.mode.as_array()[axis],
                    tk.mode.as_array()[axis],
                    sides[axis],
                    lo[axis].clamp(0.0, sides[axis]),
                    hi[axis].clamp(0.0, sides[axis]),
                );
            }
            total += weight.re * overlap;
        }
    }
    total
}
