use proptest::prelude::*;

use wellmirror::config::RunConfig;
use wellmirror::constants::{HBAR, RB87_MASS};
use wellmirror::experiment::{BounceRecord, RunSeries};
use wellmirror::io::{self, CsvHeader};
use wellmirror::mirror::MirrorParams;
use wellmirror::momentum::{self, AxisTable};
use wellmirror::phaseshift::{self, PhaseMeasurement, PhaseShiftInput};
use wellmirror::wellqm::{self, ModeIndex, QuantumState, WellGeometry};
use wellmirror::Vec3;

fn cube() -> WellGeometry {
    WellGeometry::cubic(1e-6, RB87_MASS).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn axis_density_is_even_and_nonnegative(n in 1u32..8, a in -200.0f64..200.0) {
        let f = momentum::axis_density(n, a);
        prop_assert!(f >= 0.0);
        prop_assert!((f - momentum::axis_density(n, -a)).abs() <= 1e-15 * f.max(1e-300));
    }

    #[test]
    fn axis_density_is_finite_near_resonance(n in 1u32..8, eps in -1e-6f64..1e-6) {
        let a = n as f64 * std::f64::consts::PI + eps;
        let f = momentum::axis_density(n, a);
        prop_assert!(f.is_finite());
        prop_assert!((f - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-4);
    }

    #[test]
    fn quantile_inverts_cdf(n in 1u32..5, u in 0.001f64..0.999) {
        let t = AxisTable::new(n);
        let a = t.quantile(u);
        prop_assert!((t.cdf(a) - u).abs() < 1e-9);
    }

    #[test]
    fn energy_scales_inverse_square(nx in 1u32..6, ny in 1u32..6, nz in 1u32..6, s in 0.1f64..10.0) {
        let m = ModeIndex::new(nx, ny, nz).unwrap();
        let a = WellGeometry::cubic(1e-6, RB87_MASS).unwrap();
        let b = WellGeometry::cubic(s * 1e-6, RB87_MASS).unwrap();
        let ratio = wellqm::energy(&a, m) / wellqm::energy(&b, m);
        prop_assert!((ratio / (s * s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigenmodes_vanish_on_walls(nx in 1u32..6, ny in 1u32..6, nz in 1u32..6, u in 0.0f64..1.0, v in 0.0f64..1.0, axis in 0usize..3, top: bool) {
        let g = cube();
        let s = QuantumState::eigen(ModeIndex::new(nx, ny, nz).unwrap());
        let mut p = [u * 1e-6, v * 1e-6, 0.5e-6];
        p[axis] = if top { 1e-6 } else { 0.0 };
        prop_assert!(wellqm::psi(&g, &s, Vec3::from_array(p), 0.0).norm() < 1e-12 * g.normalization());
    }

    #[test]
    fn phase_inversion_round_trips(p in 1e-30f64..1e-26, rho in 1e12f64..1e20) {
        let m = MirrorParams::rb87_example();
        let phi = phaseshift::phase_shift(&PhaseShiftInput { momentum_max: p, atomic_density: rho, mirror: m }).unwrap();
        prop_assert!(phi < 0.0);
        let back = phaseshift::invert_momentum(phi, rho, &m).unwrap();
        prop_assert!((back / p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_is_quadratic_in_momentum(p in 1e-30f64..1e-26, k in 0.1f64..10.0) {
        let m = MirrorParams::rb87_example();
        let at = |q: f64| phaseshift::phase_shift(&PhaseShiftInput { momentum_max: q, atomic_density: 1e16, mirror: m }).unwrap();
        prop_assert!((at(k * p) / (k * k * at(p)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn series_csv_round_trips(
        rows in prop::collection::vec(prop::option::of((0.0f64..1e-26, -1e-8f64..1e-8)), 1..40),
        seed in any::<u64>(),
    ) {
        let records: Vec<BounceRecord> = rows
            .iter()
            .map(|r| match r {
                Some((p, noise)) => {
                    let phi_true = -p * 1e19;
                    BounceRecord {
                        momentum: Some(*p),
                        measurement: Some(PhaseMeasurement { phi_true, phi_observed: phi_true + noise, noise_sigma: 1e-9, seed }),
                    }
                }
                None => BounceRecord { momentum: None, measurement: None },
            })
            .collect();
        let series = RunSeries { records };
        let text = io::series_csv(&CsvHeader::new("simulate", "abc", seed), &series, 1e-9);
        let back = io::parse_series_csv(&text).unwrap();
        prop_assert_eq!(back, series);
    }

    #[test]
    fn config_echo_round_trips(seed in any::<u64>(), side in 1e-7f64..1e-5, n in 1usize..100_000) {
        let text = format!(
            "seed = {seed}\n[geometry]\nside_x = {side:e}\nside_y = {side:e}\nside_z = {side:e}\nmass = 1.443e-25\n\
             [mirror]\nwavelength = 7.8e-7\nrefractive_index = 1.5\nincidence_angle = 1.0\nintensity_incident = 1000.0\n\
             linewidth = 3.8e7\ndetuning = 3.8e10\natom_mass = 1.443e-25\n[phase]\nrho_in = 1e16\n[experiment]\nn_bounces = {n}\n"
        );
        let cfg = RunConfig::from_toml_str(&text).unwrap();
        let echo = cfg.to_toml_string();
        let again = RunConfig::from_toml_str(&echo).unwrap();
        prop_assert_eq!(&again, &cfg);
        prop_assert_eq!(again.to_toml_string(), echo);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn parsers_never_panic(text in "[a-z_#:=,.0-9eE+\\-\\[\\]{}\" \n]{0,200}") {
        let _ = RunConfig::from_toml_str(&text);
        if let Ok(series) = io::parse_series_csv(&text) {
            let header = CsvHeader::new("p", "", 0);
            let written = io::series_csv(&header, &series, 0.0);
            prop_assert_eq!(io::series_csv(&header, &io::parse_series_csv(&written).unwrap(), 0.0), written);
        }
    }

    #[test]
    fn csv_lines_never_panic(lines in prop::collection::vec("(phi_observed|lost|momentum|phi_true|-?[0-9.e]{0,6}|NaN|inf|1|0|)(,(phi_observed|lost|-?[0-9.e]{0,6}|1|0|)){0,3}", 0..6)) {
        let text = lines.join("\n");
        if let Ok(series) = io::parse_series_csv(&text) {
            let header = CsvHeader::new("p", "", 0);
            let written = io::series_csv(&header, &series, 0.0);
            prop_assert_eq!(io::series_csv(&header, &io::parse_series_csv(&written).unwrap(), 0.0), written);
        }
    }
}

#[test]
fn ground_state_energy_is_order_hbar_squared() {
    let g = cube();
    let e = wellqm::energy(&g, ModeIndex::GROUND);
    assert!((e / (3.0 * (HBAR * std::f64::consts::PI / 1e-6).powi(2) / (2.0 * RB87_MASS)) - 1.0).abs() < 1e-12);
}
