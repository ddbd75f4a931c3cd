use wellmirror::constants::RB87_MASS;
use wellmirror::pilotwave::{self, Ensemble};
use wellmirror::wellqm::{self, ModeIndex, QuantumState, WellGeometry};
use wellmirror::Vec3;

fn cube() -> WellGeometry {
    WellGeometry::cubic(1e-6, RB87_MASS).unwrap()
}

fn two_mode() -> QuantumState {
    QuantumState::equal_superposition(&[ModeIndex::GROUND, ModeIndex::new(2, 1, 1).unwrap()]).unwrap()
}

/// Fixed-step classical RK4 reference.
fn rk4(g: &WellGeometry, s: &QuantumState, start: Vec3, t1: f64, steps: usize) -> Vec3 {
    let h = t1 / steps as f64;
    let v = |t: f64, p: Vec3| pilotwave::velocity(g, s, p, t).unwrap();
    let mut p = start;
    for i in 0..steps {
        let t = i as f64 * h;
        let k1 = v(t, p);
        let k2 = v(t + h / 2.0, p + k1 * (h / 2.0));
        let k3 = v(t + h / 2.0, p + k2 * (h / 2.0));
        let k4 = v(t + h, p + k3 * h);
        p = p + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    p
}

#[test]
fn center_start_is_periodic_and_matches_reference() {
    let g = cube();
    let s = two_mode();
    let period = pilotwave::beat_period(&g, &s).unwrap();
    let start = Vec3::new(0.5e-6, 0.5e-6, 0.5e-6);
    let tol = 1e-14;
    let third = pilotwave::integrate_endpoint(&g, &s, start, 0.0, period / 3.0, tol).unwrap();
    let reference = rk4(&g, &s, start, period / 3.0, 20_000);
    assert!((third - reference).max_abs() < 1e-12, "{:?} vs {:?}", third, reference);
    assert!((third - start).max_abs() > 1e-8);
    let traj = pilotwave::integrate_trajectory(&g, &s, start, 0.0, period, tol).unwrap();
    assert!((traj.end() - start).max_abs() < 1e-11);
    assert!(traj.positions.iter().all(|p| g.contains_strictly(*p)));
}

#[test]
fn halving_tolerance_and_time_reversal() {
    let g = cube();
    let s = two_mode();
    let period = pilotwave::beat_period(&g, &s).unwrap();
    let start = Vec3::new(0.31e-6, 0.62e-6, 0.45e-6);
    let tol = 1e-13;
    let a = pilotwave::integrate_endpoint(&g, &s, start, 0.0, 0.7 * period, tol).unwrap();
    let b = pilotwave::integrate_endpoint(&g, &s, start, 0.0, 0.7 * period, tol / 2.0).unwrap();
    assert!((a - b).max_abs() < 100.0 * tol);
    let back = pilotwave::integrate_endpoint(&g, &s, a, 0.7 * period, 0.0, tol).unwrap();
    assert!((back - start).max_abs() < 10.0 * tol, "{:e}", (back - start).max_abs());
}

#[test]
fn eigenmode_ensemble_unchanged() {
    let g = cube();
    let s = QuantumState::eigen(ModeIndex::new(2, 3, 1).unwrap());
    let e = pilotwave::sample_equilibrium(&g, &s, 0.0, 500, 8);
    let out = pilotwave::evolve_ensemble(&g, &s, &e, 0.0, 1e-3, 1e-15).unwrap();
    assert!(out.failures.is_empty());
    assert_eq!(out.ensemble.particles(), e.particles());
}

/// Expected L1 distance of a multinomial histogram from its cell
/// probabilities, `Σ sqrt(2 p (1 - p) / (π N))`.
fn sampling_floor(g: &WellGeometry, s: &QuantumState, n: usize) -> f64 {
    let bins = 8;
    let w = g.side_x / bins as f64;
    let mut floor = 0.0;
    for i in 0..bins {
        for j in 0..bins {
            for k in 0..bins {
                let lo = Vec3::new(i as f64 * w, j as f64 * w, k as f64 * w);
                let p = wellqm::cell_probability(g, s, 0.0, lo, lo + Vec3::new(w, w, w));
                floor += (2.0 * p * (1.0 - p) / (std::f64::consts::PI * n as f64)).sqrt();
            }
        }
    }
    floor
}

#[test]
fn equilibrium_relaxation_metric_sits_at_sampling_floor() {
    let g = cube();
    let s = QuantumState::eigen(ModeIndex::GROUND);
    for (n, seed) in [(10_000, 1), (100_000, 2)] {
        let e = pilotwave::sample_equilibrium(&g, &s, 0.0, n, seed);
        let value = pilotwave::relaxation_metric(&g, &s, &e, 0.0, [8, 8, 8]).unwrap();
        let floor = sampling_floor(&g, &s, n);
        assert!(value > 0.7 * floor && value < 1.3 * floor, "n={n}: {value} vs floor {floor}");
    }
    let e = pilotwave::sample_equilibrium(&g, &s, 0.0, 100_000, 3);
    assert!(pilotwave::relaxation_metric(&g, &s, &e, 0.0, [8, 8, 8]).unwrap() < 0.1);
}

#[test]
fn octant_ensemble_vs_ground_state() {
    let g = cube();
    let s = QuantumState::eigen(ModeIndex::GROUND);
    let eq = pilotwave::sample_equilibrium(&g, &s, 0.0, 10_000, 4);
    let octant: Vec<Vec3> = eq.particles().iter().map(|p| *p * 0.5).collect();
    let e = Ensemble::new(&g, octant).unwrap();
    assert!(pilotwave::relaxation_metric(&g, &s, &e, 0.0, [8, 8, 8]).unwrap() > 0.5);
}
