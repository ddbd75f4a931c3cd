//! Born-rule momentum statistics of a well eigenmode.
//!
//! The momentum density of an eigenmode factorizes over the axes. In the
//! dimensionless variable `a = p L / ħ` each factor is
//!
//! ```text
//! f_n(a) = 2 n² π [1 − (−1)^n cos a] / [(nπ)² − a²]²
//! ```
//!
//! and the physical factor is `(L/ħ) f_n(pL/ħ)`. Everything here works on
//! the dimensionless factor and rescales at the edges.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::HBAR;
use crate::quad::{self, QuadError, QuadOptions};
use crate::rng;
use crate::vec3::Vec3;
use crate::wellqm::{ModeIndex, WellGeometry};

pub type MomentumVector = Vec3;

/// Distance from `a = ±nπ` inside which the removable singularity is
/// evaluated by its series expansion.
pub const SINGULAR_WINDOW: f64 = 1e-4;

/// Intervals of the inverse-CDF table per axis.
pub const TABLE_INTERVALS: usize = 16384;

/// Relative tolerance of the probability quadratures.
pub const PROB_REL_TOL: f64 = 1e-8;

/// Minimum samples per half period of the sine for the Fourier oracle,
/// i.e. 16 points per full period.
pub const ORACLE_POINTS_PER_HALF_PERIOD: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MomentumError {
    #[error("invalid momentum box: {0}")]
    InvalidBox(String),
    #[error("probability quadrature did not reach tolerance: {0}")]
    Accuracy(#[from] QuadError),
    #[error("Fourier grid under-resolved: {points} points per side, need at least {required}")]
    UnderResolved { points: usize, required: usize },
}

/// Axis-aligned box in momentum space. Bounds may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumBox {
    lo: MomentumVector,
    hi: MomentumVector,
}

impl MomentumBox {
    pub fn new(lo: MomentumVector, hi: MomentumVector) -> Result<Self, MomentumError> {
        for axis in 0..3 {
            if lo[axis].is_nan() || hi[axis].is_nan() || lo[axis] > hi[axis] {
                return Err(MomentumError::InvalidBox(format!(
                    "axis {axis}: lo {} must not exceed hi {}",
                    lo[axis], hi[axis]
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn everything() -> Self {
        let inf = f64::INFINITY;
        Self { lo: Vec3::new(-inf, -inf, -inf), hi: Vec3::new(inf, inf, inf) }
    }

    pub fn lo(&self) -> MomentumVector {
        self.lo
    }

    pub fn hi(&self) -> MomentumVector {
        self.hi
    }
}

/// Dimensionless per-axis density `f_n(a)`, finite at `a = ±nπ`.
pub fn axis_density(n: u32, a: f64) -> f64 {
    let n_pi = n as f64 * PI;
    let abs_a = a.abs();
    let delta = abs_a - n_pi;
    let prefactor = 2.0 * (n as f64).powi(2) * PI;
    if delta.abs() < SINGULAR_WINDOW {
        // (1 − cos δ)/δ² ≈ 1/2 − δ²/24 after cancelling the double zero.
        let g = 0.5 - delta * delta / 24.0;
        return prefactor * g / (n_pi + abs_a).powi(2);
    }
    // 1 ∓ cos a written as a square to avoid cancellation near its zeros.
    let numerator = if n % 2 == 0 {
        2.0 * (0.5 * a).sin().powi(2)
    } else {
        2.0 * (0.5 * a).cos().powi(2)
    };
    let denominator = (n_pi - abs_a) * (n_pi + abs_a);
    prefactor * numerator / (denominator * denominator)
}

/// One-axis physical density in (kg·m/s)⁻¹.
pub fn phi_sq_axis(side: f64, n: u32, p: f64) -> f64 {
    side / HBAR * axis_density(n, p * side / HBAR)
}

/// Momentum probability density `|φ(p)|²` of an eigenmode, (kg·m/s)⁻³.
pub fn phi_sq(geom: &WellGeometry, mode: ModeIndex, p: MomentumVector) -> f64 {
    let sides = geom.sides();
    mode.as_array()
        .iter()
        .enumerate()
        .map(|(axis, &n)| phi_sq_axis(sides[axis], n, p[axis]))
        .product()
}

/// Beyond this `|a|` the half-line integral is completed by its
/// `2n²π / 3a³` asymptotic tail.
fn asymptotic_cut(n: u32) -> f64 {
    2000.0 * PI * n as f64
}

/// `∫_0^a f_n`, odd in `a`; `±1/2` at `±∞`.
pub fn axis_half_cdf(n: u32, a: f64, rel_tol: f64) -> Result<f64, QuadError> {
    if a == 0.0 {
        return Ok(0.0);
    }
    let sign = a.signum();
    let abs_a = a.abs();
    let cut = asymptotic_cut(n);
    if abs_a > cut {
        let tail = 2.0 * (n as f64).powi(2) * PI / (3.0 * abs_a.powi(3));
        return Ok(sign * (0.5 - tail));
    }
    let mut breaks: Vec<f64> = (0..).map(|k| k as f64 * PI).take_while(|&x| x < abs_a).collect();
    breaks.push(abs_a);
    let opts = QuadOptions { rel_tol, abs_tol: 1e-15, max_intervals: 20 * breaks.len() + 200 };
    let r = quad::integrate_pieces(|x| axis_density(n, x), &breaks, &opts)?;
    Ok(sign * r.value)
}

/// Probability that a momentum measurement lands in `bounds`.
pub fn integrate_prob(geom: &WellGeometry, mode: ModeIndex, bounds: &MomentumBox) -> Result<f64, MomentumError> {
    let sides = geom.sides();
    let mut prob = 1.0;
    for (axis, &n) in mode.as_array().iter().enumerate() {
        let scale = sides[axis] / HBAR;
        let hi = axis_half_cdf(n, bounds.hi[axis] * scale, PROB_REL_TOL)?;
        let lo = axis_half_cdf(n, bounds.lo[axis] * scale, PROB_REL_TOL)?;
        prob *= hi - lo;
    }
    Ok(prob.clamp(0.0, 1.0))
}

/// Half-width of the tabulated region in units of `a`.
pub fn table_half_width(n: u32) -> f64 {
    PI * 40f64.max(4.0 * n as f64)
}

/// Tabulated CDF of `f_n` with monotone cubic Hermite interpolation and
/// exact rejection sampling of the tails.
#[derive(Debug, Clone)]
pub struct AxisTable {
    n: u32,
    half_width: f64,
    knots: Vec<f64>,
    cdf: Vec<f64>,
    slopes: Vec<(f64, f64)>,
    tail_mass: f64,
}

impl AxisTable {
    pub fn new(n: u32) -> Self {
        let half_width = table_half_width(n);
        let step = 2.0 * half_width / TABLE_INTERVALS as f64;
        let knots: Vec<f64> = (0..=TABLE_INTERVALS).map(|i| -half_width + i as f64 * step).collect();
        let density: Vec<f64> = knots.iter().map(|&a| axis_density(n, a)).collect();
        // Accumulate outward from the center so the table is exactly symmetric.
        let mid = TABLE_INTERVALS / 2;
        let mut half = vec![0.0; TABLE_INTERVALS + 1];
        for i in mid..TABLE_INTERVALS {
            let (piece, _) = quad::gk15(&|x| axis_density(n, x), knots[i], knots[i + 1]);
            half[i + 1] = half[i] + piece;
            half[2 * mid - i - 1] = -half[i + 1];
        }
        let tail_mass = (0.5 - half[TABLE_INTERVALS]).max(0.0);
        let cdf: Vec<f64> = half.iter().map(|h| 0.5 + h).collect();
        let slopes = (0..TABLE_INTERVALS)
            .map(|i| {
                let secant = (cdf[i + 1] - cdf[i]) / step;
                let (mut m0, mut m1) = (density[i], density[i + 1]);
                if secant <= 0.0 {
                    return (0.0, 0.0);
                }
                let (alpha, beta) = (m0 / secant, m1 / secant);
                let r2 = alpha * alpha + beta * beta;
                if r2 > 9.0 {
                    let tau = 3.0 / r2.sqrt();
                    m0 = tau * alpha * secant;
                    m1 = tau * beta * secant;
                }
                (m0, m1)
            })
            .collect();
        Self { n, half_width, knots, cdf, slopes, tail_mass }
    }

    pub fn mode_number(&self) -> u32 {
        self.n
    }

    /// Probability mass outside `±half_width` on each side.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    fn hermite(&self, i: usize, a: f64) -> (f64, f64) {
        let h = self.knots[i + 1] - self.knots[i];
        let s = (a - self.knots[i]) / h;
        let (m0, m1) = self.slopes[i];
        let (f0, f1) = (self.cdf[i], self.cdf[i + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        let value = (2.0 * s3 - 3.0 * s2 + 1.0) * f0
            + (s3 - 2.0 * s2 + s) * h * m0
            + (-2.0 * s3 + 3.0 * s2) * f1
            + (s3 - s2) * h * m1;
        let deriv = (6.0 * s2 - 6.0 * s) * f0 / h
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * f1 / h
            + (3.0 * s2 - 2.0 * s) * m1;
        (value, deriv)
    }

    /// Interpolated CDF at dimensionless momentum `a`.
    pub fn cdf(&self, a: f64) -> f64 {
        if a <= -self.half_width {
            return self.tail_mass * (self.half_width / a.abs()).powi(3);
        }
        if a >= self.half_width {
            return 1.0 - self.tail_mass * (self.half_width / a).powi(3);
        }
        let i = (self.knots.partition_point(|&k| k <= a) - 1).min(TABLE_INTERVALS - 1);
        self.hermite(i, a).0
    }

    /// Inverse of the interpolated CDF on the tabulated region.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(self.cdf[0], self.cdf[TABLE_INTERVALS]);
        let i = (self.cdf.partition_point(|&c| c <= u).max(1) - 1).min(TABLE_INTERVALS - 1);
        let (mut lo, mut hi) = (self.knots[i], self.knots[i + 1]);
        let span = self.cdf[i + 1] - self.cdf[i];
        if span <= 0.0 {
            return lo;
        }
        let mut a = lo + (u - self.cdf[i]) / span * (hi - lo);
        for _ in 0..60 {
            let (value, deriv) = self.hermite(i, a);
            let resid = value - u;
            if resid.abs() < 1e-17 {
                break;
            }
            if resid > 0.0 {
                hi = a;
            } else {
                lo = a;
            }
            let newton = a - resid / deriv;
            a = if deriv > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (hi - lo) < 1e-15 * self.half_width {
                break;
            }
        }
        a
    }

    /// Draws a dimensionless momentum from `f_n`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        if u < self.tail_mass {
            -self.sample_tail(rng)
        } else if u >= 1.0 - self.tail_mass {
            self.sample_tail(rng)
        } else {
            self.quantile(u)
        }
    }

    /// Exact tail draw: Pareto proposal ∝ a⁻⁴ with rejection against f_n.
    fn sample_tail<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let c = (self.n as f64 * PI).powi(2);
        let w = self.half_width;
        let bound = (w * w / (w * w - c)).powi(2);
        loop {
            let v: f64 = 1.0 - rng.random::<f64>();
            let a = w * v.powf(-1.0 / 3.0);
            let osc = if self.n % 2 == 0 { (0.5 * a).sin().powi(2) } else { (0.5 * a).cos().powi(2) };
            let accept = osc * (a * a / (a * a - c)).powi(2) / bound;
            if rng.random::<f64>() < accept {
                return a;
            }
        }
    }
}

/// Per-axis inverse-CDF samplers for one eigenmode.
#[derive(Debug, Clone)]
pub struct MomentumSampler {
    scales: [f64; 3],
    axes: [Arc<AxisTable>; 3],
}

impl MomentumSampler {
    pub fn new(geom: &WellGeometry, mode: ModeIndex) -> Self {
        let [nx, ny, nz] = mode.as_array();
        let x = Arc::new(AxisTable::new(nx));
        let y = if ny == nx { x.clone() } else { Arc::new(AxisTable::new(ny)) };
        let z = match nz {
            n if n == nx => x.clone(),
            n if n == ny => y.clone(),
            n => Arc::new(AxisTable::new(n)),
        };
        let sides = geom.sides();
        Self { scales: sides.map(|l| HBAR / l), axes: [x, y, z] }
    }

    /// Momentum per unit of the dimensionless variable on `axis`, ħ/L.
    pub fn scale(&self, axis: usize) -> f64 {
        self.scales[axis]
    }

    pub fn axis_table(&self, axis: usize) -> &AxisTable {
        &self.axes[axis]
    }

    pub fn sample_axis<R: Rng + ?Sized>(&self, axis: usize, rng: &mut R) -> f64 {
        self.axes[axis].sample(rng) * self.scales[axis]
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> MomentumVector {
        Vec3::new(self.sample_axis(0, rng), self.sample_axis(1, rng), self.sample_axis(2, rng))
    }

    /// Tabulated CDF of the `axis` momentum component.
    pub fn axis_cdf(&self, axis: usize, p: f64) -> f64 {
        self.axes[axis].cdf(p / self.scales[axis])
    }

    /// CDF of `|p_axis|`.
    pub fn abs_axis_cdf(&self, axis: usize, q: f64) -> f64 {
        if q <= 0.0 {
            0.0
        } else {
            (2.0 * self.axis_cdf(axis, q) - 1.0).clamp(0.0, 1.0)
        }
    }

    /// Quantile of `|p_axis|`, restricted to the tabulated region.
    pub fn abs_axis_quantile(&self, axis: usize, u: f64) -> f64 {
        self.axes[axis].quantile(0.5 + 0.5 * u) * self.scales[axis]
    }
}

/// One momentum draw for a fixed seed.
pub fn sample_momentum(geom: &WellGeometry, mode: ModeIndex, seed: u64) -> MomentumVector {
    let sampler = MomentumSampler::new(geom, mode);
    sampler.sample(&mut rng::substream(seed, rng::Purpose::Sampling, 0))
}

/// `count` draws from one seeded stream.
pub fn sample_momenta(geom: &WellGeometry, mode: ModeIndex, seed: u64, count: usize) -> Vec<MomentumVector> {
    let sampler = MomentumSampler::new(geom, mode);
    let mut rng = rng::substream(seed, rng::Purpose::Sampling, 0);
    (0..count).map(|_| sampler.sample(&mut rng)).collect()
}

/// Resolution of the discrete Fourier transform used as an independent
/// check of the closed-form density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierGrid {
    /// Intervals across each side of the box.
    pub points_per_side: usize,
    /// Zero-padding multiple; the momentum spacing is `2πħ / (padding L)`.
    pub padding: usize,
}

impl Default for FourierGrid {
    fn default() -> Self {
        Self { points_per_side: 4096, padding: 16 }
    }
}

/// Gridded momentum density from the discrete Fourier transform, stored
/// per axis (the eigenfunction is a product, so its transform is too).
#[derive(Debug, Clone)]
pub struct FourierDensity {
    /// Momentum grid per axis, ascending (kg·m/s).
    pub momenta: [Vec<f64>; 3],
    /// Density per axis on that grid ((kg·m/s)⁻¹), normalized.
    pub densities: [Vec<f64>; 3],
    /// `Σ|ψ_j|² dx` before normalization; 1 up to discretization error.
    pub raw_norms: [f64; 3],
}

impl FourierDensity {
    pub fn density(&self, i: usize, j: usize, k: usize) -> f64 {
        self.densities[0][i] * self.densities[1][j] * self.densities[2][k]
    }

    pub fn momentum(&self, i: usize, j: usize, k: usize) -> MomentumVector {
        Vec3::new(self.momenta[0][i], self.momenta[1][j], self.momenta[2][k])
    }

    /// Riemann sum of the density over the whole grid.
    pub fn total_probability(&self) -> f64 {
        (0..3)
            .map(|axis| {
                let dp = self.momenta[axis][1] - self.momenta[axis][0];
                self.densities[axis].iter().sum::<f64>() * dp
            })
            .product()
    }
}

/// Transforms the sampled position-space eigenfunction with an FFT.
pub fn fourier_oracle(geom: &WellGeometry, mode: ModeIndex, grid: FourierGrid) -> Result<FourierDensity, MomentumError> {
    let max_n = *mode.as_array().iter().max().expect("three axes") as usize;
    let required = ORACLE_POINTS_PER_HALF_PERIOD * max_n;
    if grid.points_per_side < required {
        return Err(MomentumError::UnderResolved { points: grid.points_per_side, required });
    }
    let n_points = grid.points_per_side;
    let total = n_points * grid.padding.max(1);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(total);
    let sides = geom.sides();
    let mut momenta: [Vec<f64>; 3] = Default::default();
    let mut densities: [Vec<f64>; 3] = Default::default();
    let mut raw_norms = [0.0; 3];
    for (axis, &n) in mode.as_array().iter().enumerate() {
        let side = sides[axis];
        let dx = side / n_points as f64;
        let amp = (2.0 / side).sqrt();
        let mut buf = vec![Complex64::new(0.0, 0.0); total];
        for (j, b) in buf.iter_mut().enumerate().take(n_points + 1) {
            b.re = amp * (n as f64 * PI * j as f64 / n_points as f64).sin();
        }
        raw_norms[axis] = buf.iter().map(|c| c.norm_sqr()).sum::<f64>() * dx;
        fft.process(&mut buf);
        let dp = 2.0 * PI * HBAR / (total as f64 * dx);
        let scale = dx * dx / (2.0 * PI * HBAR) / raw_norms[axis];
        let half = total / 2;
        let mut p = Vec::with_capacity(total);
        let mut d = Vec::with_capacity(total);
        // Reorder from FFT layout to ascending momentum.
        for m in (half..total).chain(0..half) {
            let signed = if m >= half { m as f64 - total as f64 } else { m as f64 };
            p.push(signed * dp);
            d.push(buf[m].norm_sqr() * scale);
        }
        momenta[axis] = p;
        densities[axis] = d;
    }
    Ok(FourierDensity { momenta, densities, raw_norms })
}
