//! Dormand-Prince 5(4) embedded Runge-Kutta stepping with a standard
//! proportional step-size controller.

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

pub type State<const N: usize> = [f64; N];

/// Per-component absolute tolerance plus a shared relative tolerance.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance<const N: usize> {
    pub atol: [f64; N],
    pub rtol: f64,
}

/// Result of one trial step.
#[derive(Debug, Clone, Copy)]
pub struct Trial<const N: usize> {
    pub y: State<N>,
    /// Derivative at the new point (first stage of the next step).
    pub dy: State<N>,
    /// Scaled RMS error; the step is acceptable when this is at most 1.
    pub error: f64,
}

fn axpy<const N: usize>(y: &State<N>, h: f64, terms: &[(f64, &State<N>)]) -> State<N> {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

/// A single Dormand-Prince step of size `h` from `(t, y)` with `k1 = f(t, y)`.
pub fn dopri_step<const N: usize, E, F>(
    f: &mut F,
    t: f64,
    y: &State<N>,
    k1: &State<N>,
    h: f64,
    tol: &Tolerance<N>,
) -> Result<Trial<N>, E>
where
    F: FnMut(f64, &State<N>) -> Result<State<N>, E>,
{
    let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, k1)]))?;
    let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = f(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = f(t + C5 * h, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = f(
        t + h,
        &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    )?;
    let y_new = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = f(t + h, &y_new)?;
    let mut sum = 0.0;
    for i in 0..N {
        let err = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let scale = tol.atol[i] + tol.rtol * y[i].abs().max(y_new[i].abs());
        sum += (err / scale).powi(2);
    }
    Ok(Trial { y: y_new, dy: k7, error: (sum / N as f64).sqrt() })
}

/// Step-size factor for the next attempt given the scaled error.
pub fn step_factor(error: f64) -> f64 {
    if error == 0.0 {
        5.0
    } else {
        (0.9 * error.powf(-0.2)).clamp(0.2, 5.0)
    }
}

/// Stepping state of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Stepper<const N: usize> {
    pub t: f64,
    pub y: State<N>,
    pub dy: State<N>,
    pub h: f64,
    pub tol: Tolerance<N>,
    pub min_step: f64,
}

/// Why an adaptive step could not be taken.
#[derive(Debug, Clone, PartialEq)]
pub enum StepFailure<E> {
    Rhs(E),
    Underflow { t: f64, h: f64 },
}

impl<const N: usize> Stepper<N> {
    pub fn new<E, F>(f: &mut F, t: f64, y: State<N>, h: f64, tol: Tolerance<N>) -> Result<Self, E>
    where
        F: FnMut(f64, &State<N>) -> Result<State<N>, E>,
    {
        let dy = f(t, &y)?;
        Ok(Self { t, y, dy, h, tol, min_step: h.abs() * 1e-14 })
    }

    /// Advances by one accepted step, never stepping past `t_end`.
    /// `h` carries the integration direction.
    pub fn advance<E, F>(&mut self, f: &mut F, t_end: f64) -> Result<(), StepFailure<E>>
    where
        F: FnMut(f64, &State<N>) -> Result<State<N>, E>,
    {
        loop {
            let remaining = t_end - self.t;
            let h = if self.h.abs() >= remaining.abs() { remaining } else { self.h };
            let trial = dopri_step(f, self.t, &self.y, &self.dy, h, &self.tol).map_err(StepFailure::Rhs)?;
            if trial.error <= 1.0 {
                self.t = if h == remaining { t_end } else { self.t + h };
                self.y = trial.y;
                self.dy = trial.dy;
                if h == remaining && trial.error < 1.0 {
                    // Do not let a truncated final step shrink the next one.
                    self.h = self.h.signum() * self.h.abs().max(h.abs() * step_factor(trial.error));
                } else {
                    self.h = h * step_factor(trial.error);
                }
                return Ok(());
            }
            self.h = h * step_factor(trial.error);
            if self.h.abs() < self.min_step {
                return Err(StepFailure::Underflow { t: self.t, h: self.h });
            }
        }
    }
}
