//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::Rng;

use wellmirror::constants::{HBAR, RB87_MASS};
use wellmirror::experiment::{Engine, ExperimentConfig, RequiredBounces, TheoryModel, Verdict};
use wellmirror::mirror::{self, Barrier, MirrorParams};
use wellmirror::momentum::{self, FourierGrid, MomentumBox};
use wellmirror::phaseshift::{self, PhaseShiftInput};
use wellmirror::pilotwave;
use wellmirror::rng::{self, Purpose};
use wellmirror::stats;
use wellmirror::wellqm::{self, ModeIndex, QuantumState, WellError, WellGeometry};
use wellmirror::Vec3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn cube() -> WellGeometry {
    WellGeometry::cubic(1e-6, RB87_MASS).unwrap()
}

fn mode(nx: u32, ny: u32, nz: u32) -> ModeIndex {
    ModeIndex::new(nx, ny, nz).unwrap()
}

fn rb87_mirror() -> MirrorParams {
    MirrorParams { atom_mass: RB87_MASS, ..MirrorParams::rb87_example() }
}

fn fourier_agreement() -> Outcome {
    let g = cube();
    let mut worst_rel = 0.0f64;
    let mut worst_total = 0.0f64;
    let mut compared = 0usize;
    for m in [mode(1, 1, 1), mode(2, 1, 1), mode(3, 2, 1)] {
        let oracle = momentum::fourier_oracle(&g, m, FourierGrid::default()).unwrap();
        for (axis, &n) in m.as_array().iter().enumerate() {
            let side = g.sides()[axis];
            let peak = oracle.densities[axis].iter().cloned().fold(0.0, f64::max);
            for (p, d) in oracle.momenta[axis].iter().zip(&oracle.densities[axis]) {
                let a = p * side / HBAR;
                let near_singular = ((a.abs() - n as f64 * PI).abs()) < 1e-2;
                if a.abs() > 20.0 * PI || near_singular || *d < 1e-6 * peak {
                    continue;
                }
                let exact = momentum::phi_sq_axis(side, n, *p);
                worst_rel = worst_rel.max((d - exact).abs() / exact);
                compared += 1;
            }
        }
        let total = momentum::integrate_prob(&g, m, &MomentumBox::everything()).unwrap();
        worst_total = worst_total.max((total - 1.0).abs());
    }
    outcome(
        worst_rel <= 1e-3 && worst_total <= 1e-6,
        format!("max relative deviation {worst_rel:.2e} over {compared} grid points; |total - 1| = {worst_total:.1e}"),
    )
}

fn stationarity() -> Outcome {
    let g = cube();
    let mut rng = rng::substream(1, Purpose::Run, 0);
    let mut nonzero = 0usize;
    let mut evaluated = 0usize;
    let mut max_disp = 0.0f64;
    for nx in 1..=3 {
        for ny in 1..=3 {
            for nz in 1..=3 {
                let state = QuantumState::eigen(mode(nx, ny, nz));
                let mut points = 0;
                while points < 1000 {
                    let pos = Vec3::new(rng.random::<f64>() * 1e-6, rng.random::<f64>() * 1e-6, rng.random::<f64>() * 1e-6);
                    let t = rng.random::<f64>() * 1e-3;
                    match wellqm::grad_s(&g, &state, pos, t) {
                        Ok(v) => {
                            evaluated += 1;
                            points += 1;
                            if v != Vec3::ZERO {
                                nonzero += 1;
                            }
                        }
                        Err(WellError::NodeSingularity { .. }) | Err(WellError::OutOfDomain(_)) => continue,
                        Err(e) => return outcome(false, e.to_string()),
                    }
                }
                let start = Vec3::new(0.23e-6, 0.41e-6, 0.77e-6);
                match pilotwave::integrate_trajectory(&g, &state, start, 0.0, 1e-3, 1e-15) {
                    Ok(traj) => {
                        for p in &traj.positions {
                            max_disp = max_disp.max((*p - start).max_abs());
                        }
                    }
                    Err(e) => return outcome(false, e.to_string()),
                }
            }
        }
    }
    outcome(
        nonzero == 0 && max_disp == 0.0,
        format!("{evaluated} gradient evaluations, {nonzero} nonzero; max trajectory displacement {max_disp:e} m"),
    )
}

fn equivariance() -> Outcome {
    let g = cube();
    let state = QuantumState::equal_superposition(&[mode(1, 1, 1), mode(2, 1, 1)]).unwrap();
    let period = pilotwave::beat_period(&g, &state).unwrap();
    let start = pilotwave::sample_equilibrium(&g, &state, 0.0, 10_000, 3);
    let tol = 1e-13;
    let mut lines = Vec::new();
    let mut worst = 0.0f64;
    let mut current = start;
    let mut t = 0.0;
    for t1 in [0.5 * period, period] {
        let evolved = match pilotwave::evolve_ensemble(&g, &state, &current, t, t1, tol) {
            Ok(e) => e,
            Err(e) => return outcome(false, e.to_string()),
        };
        let mut ks = 0.0f64;
        for axis in 0..3 {
            let mut xs: Vec<f64> = evolved.ensemble.particles().iter().map(|p| p[axis]).collect();
            ks = ks.max(stats::ks_statistic(&mut xs, |c| pilotwave::marginal_cdf(&g, &state, t1, axis, c)));
        }
        worst = worst.max(ks);
        let moved = evolved
            .ensemble
            .particles()
            .iter()
            .zip(current.particles())
            .map(|(a, b)| (a.x - b.x).abs())
            .sum::<f64>()
            / current.len() as f64;
        lines.push(format!(
            "t = {:.2} T: KS {ks:.4}, mean |dx| {moved:.2e} m, {} failures",
            t1 / period,
            evolved.failures.len()
        ));
        current = evolved.ensemble;
        t = t1;
    }
    outcome(worst < 0.05, lines.join("; "))
}

fn elastic_mirror() -> Outcome {
    let params = rb87_mirror();
    let kappa = mirror::decay_kappa(&params).unwrap();
    let u0 = mirror::surface_potential(&params).unwrap();
    let v_max = (2.0 * u0 / params.atom_mass).sqrt();
    let z_start = 10.0 / kappa;
    let mut rng = rng::substream(4, Purpose::Run, 0);
    let mut worst_p = 0.0f64;
    let mut worst_turn = 0.0f64;
    let mut sign_ok = true;
    for _ in 0..1000 {
        let v = v_max * (0.01 + 0.94 * rng.random::<f64>());
        let p_in = -params.atom_mass * v;
        let out = match mirror::bounce(&params, p_in, z_start) {
            Ok(o) => o,
            Err(e) => return outcome(false, e.to_string()),
        };
        sign_ok &= out.p_out > 0.0;
        worst_p = worst_p.max((out.p_out.abs() / p_in.abs() - 1.0).abs());
        let energy = p_in * p_in / (2.0 * params.atom_mass) + u0 * (-2.0 * kappa * z_start).exp();
        let z_turn = (u0 / energy).ln() / (2.0 * kappa);
        worst_turn = worst_turn.max((out.turning_point / z_turn - 1.0).abs());
    }
    outcome(
        sign_ok && worst_p <= 1e-6 && worst_turn <= 1e-6,
        format!("1000 bounces: max | |p_out|/|p_in| - 1 | = {worst_p:.1e}, sign reversed: {sign_ok}, max turning-point error {worst_turn:.1e}"),
    )
}

fn grid_scan_max(params: &MirrorParams, kappa: f64) -> f64 {
    let potential = mirror::Potential::new(params).unwrap();
    let (lo, hi) = ((1e-4f64).ln(), (10.0f64).ln());
    let n = 1_000_000;
    (0..n)
        .map(|i| potential.value((lo + (hi - lo) * i as f64 / (n - 1) as f64).exp() / kappa))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn vdw_barrier() -> Outcome {
    let base = rb87_mirror();
    let kappa = mirror::decay_kappa(&base).unwrap();
    let u0 = mirror::surface_potential(&base).unwrap();
    let mut heights = Vec::new();
    let mut worst = 0.0f64;
    for k in 0..12 {
        let c = 1e-5 * 2f64.powi(k);
        let params = MirrorParams { vdw_coefficient: c * u0 / kappa.powi(3), ..base };
        let profile = mirror::barrier_analysis(&params).unwrap();
        let Barrier::Interior { height, .. } = profile.barrier else {
            return outcome(false, format!("no interior barrier at C3 = {:e} U0/kappa^3", c));
        };
        let scan = grid_scan_max(&params, kappa);
        worst = worst.max((height / scan - 1.0).abs());
        heights.push(height);
    }
    let decreasing = heights.windows(2).all(|w| w[1] < w[0]);
    outcome(
        decreasing && worst <= 1e-3,
        format!(
            "12 values of C3 in [1e-5, 2e-2] U0/kappa^3: strictly decreasing {decreasing}, max deviation from 1e6-point scan {worst:.1e}"
        ),
    )
}

fn phase_round_trip() -> Outcome {
    let mut rng = rng::substream(6, Purpose::Run, 0);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = 1.2 + 0.8 * rng.random::<f64>();
        let critical = (1.0 / n).asin();
        let theta = critical + (PI / 2.0 - critical) * (0.05 + 0.9 * rng.random::<f64>());
        let mirror = MirrorParams {
            refractive_index: n,
            incidence_angle: theta,
            intensity_incident: 10f64.powf(1.0 + 3.0 * rng.random::<f64>()),
            enhancement_gain: 1.0 + 99.0 * rng.random::<f64>(),
            ..rb87_mirror()
        };
        let p = 10f64.powf(-29.0 + 3.0 * rng.random::<f64>());
        let rho = 10f64.powf(14.0 + 4.0 * rng.random::<f64>());
        let phi = phaseshift::phase_shift(&PhaseShiftInput { momentum_max: p, atomic_density: rho, mirror }).unwrap();
        let back = phaseshift::invert_momentum(phi, rho, &mirror).unwrap();
        worst = worst.max((back / p - 1.0).abs());
    }
    let zero = phaseshift::phase_shift(&PhaseShiftInput { momentum_max: 0.0, atomic_density: 1e16, mirror: rb87_mirror() }).unwrap();
    let reference = PhaseShiftInput { momentum_max: HBAR * PI / 1e-6, atomic_density: 1e16, mirror: MirrorParams::rb87_example() };
    let phi_ref = phaseshift::phase_shift(&reference).unwrap();
    let frozen = -3.948_128_033_001_484_5e-9;
    let reg = (phi_ref / frozen - 1.0).abs();
    outcome(
        worst <= 1e-12 && zero == 0.0 && reg <= 1e-12,
        format!("round-trip max error {worst:.1e}; phi(0) = {zero}; regression {phi_ref:.15e} (relative deviation {reg:.1e})"),
    )
}

fn base_experiment(noise_sigma: f64, n_bounces: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(cube(), ModeIndex::GROUND, rb87_mirror(), 1e16, noise_sigma, n_bounces, 7);
    c.null_replicates = 0;
    c
}

fn statistical_discrimination() -> Outcome {
    let mean_abs = Engine::new(base_experiment(0.0, 1)).unwrap().mean_abs_phase_oqt();
    let alpha5 = stats::sigma_to_alpha(5.0);

    // (a) zero-signal p-values under the stationary null.
    let null = Engine::new(base_experiment(mean_abs, 1000)).unwrap();
    let mut pvals: Vec<f64> = (0..1000u32)
        .map(|r| {
            let s = null.simulate_replicate(&TheoryModel::DebbStationary, Purpose::NullReplicate, r, 1000).unwrap();
            null.zero_signal_test(&s.observed_phases()).p_value
        })
        .collect();
    let ks_null = stats::ks_statistic(&mut pvals, |u| u.clamp(0.0, 1.0));
    let pass_a = ks_null < 0.05;

    // (b) power at σ = 0.1 mean|φ|.
    let power_cfg = base_experiment(0.1 * mean_abs, 1);
    let engine = Engine::new(power_cfg.clone()).unwrap();
    let required = engine.required_bounces(5.0).unwrap();
    let analytic = engine.analytic_required_bounces(5.0);
    let (reject, ratio, n_req) = match required {
        RequiredBounces::Count(n) => {
            let run = Engine::new(ExperimentConfig { n_bounces: n, ..power_cfg }).unwrap();
            let report = run.hypothesis_test(&run.simulate(&TheoryModel::Oqt).unwrap()).unwrap();
            let reject = report.zero_signal.p_value < alpha5 && report.verdict == Verdict::FavorsOqt;
            (reject, n as f64 / analytic.ceil().max(1.0), n)
        }
        RequiredBounces::NotAchievable { .. } => (false, f64::INFINITY, 0),
    };
    let pass_b = reject && (0.5..=2.0).contains(&ratio);

    // (c) inferred momenta against the normal-momentum marginal.
    let fit = Engine::new(base_experiment(0.0, 10_000)).unwrap();
    let report = fit.hypothesis_test(&fit.simulate(&TheoryModel::Oqt).unwrap()).unwrap();
    let ks_fit = report.distribution.momentum_ks_statistic;
    let pass_c = ks_fit < 0.02;

    let mark = |b: bool| if b { "ok" } else { "FAILED" };
    outcome(
        pass_a && pass_b && pass_c,
        format!(
            "(a) null p-value KS {ks_null:.4} [{}]; (b) required_bounces {n_req} vs analytic {analytic:.3}, ratio {ratio:.1}, 5-sigma rejection at that length: {reject} [{}]; (c) momentum KS {ks_fit:.4} at 1e4 bounces [{}]",
            mark(pass_a),
            mark(pass_b),
            mark(pass_c)
        ),
    )
}

const DETERMINISM_CONFIG: &str = r#"
seed = 99

[geometry]
side_x = 1e-6
side_y = 1.2e-6
side_z = 0.9e-6
mass = 1.4431606e-25

[mirror]
wavelength = 780e-9
refractive_index = 1.5
incidence_angle = 1.0471975511965976
intensity_incident = 1393.1852100827848
linewidth = 38138934.81458009
detuning = 38138934814.58009
atom_mass = 1.4431606e-25

[phase]
rho_in = 1e16
momenta = [0.0, 3e-28, 1e-27]

[experiment]
noise_sigma = 1e-9
n_bounces = 500
null_replicates = 200
power_replicates = 200
power_analysis = true

[sample]
count = 2000

[bounce]
speeds = [0.005, 0.02, 0.1]
"#;

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_wellmirror");
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.toml");
    std::fs::write(&config, DETERMINISM_CONFIG).unwrap();
    let commands = ["levels", "pdf", "sample", "bounce", "phase", "simulate", "discriminate", "trajectory"];
    let mut compared = 0;
    for cmd in commands {
        let mut outputs = Vec::new();
        for (run, threads) in [(0, "4"), (1, "4"), (2, "1")] {
            let out = tmp.path().join(format!("{cmd}_{run}"));
            let status = Command::new(bin)
                .args(["--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", threads, cmd])
                .output()
                .unwrap();
            if !status.status.success() {
                return outcome(false, format!("{cmd} failed: {}", String::from_utf8_lossy(&status.stderr)));
            }
            outputs.push((read_dir_sorted(&out), status.stdout.replace_all_dirs(&out)));
        }
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            return outcome(false, format!("{cmd}: outputs differ between runs"));
        }
        compared += outputs[0].0.len();
    }
    outcome(true, format!("8 commands x 3 runs (4, 4 and 1 threads): {compared} files byte-identical"))
}

trait StripDir {
    fn replace_all_dirs(&self, dir: &Path) -> String;
}

impl StripDir for Vec<u8> {
    fn replace_all_dirs(&self, dir: &Path) -> String {
        String::from_utf8_lossy(self).replace(&dir.display().to_string(), "<out>")
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 momentum density vs Fourier oracle", fourier_agreement),
        ("2 pilot-wave stationarity", stationarity),
        ("3 equivariance over one beat period", equivariance),
        ("4 elastic mirror", elastic_mirror),
        ("5 barrier under van der Waals attraction", vdw_barrier),
        ("6 phase-shift round trip and regression", phase_round_trip),
        ("7 statistical discrimination", statistical_discrimination),
        ("8 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {name} ({secs:.1} s): {}", result.detail);
        if !result.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
