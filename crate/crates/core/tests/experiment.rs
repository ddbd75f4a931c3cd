use wellmirror::constants::RB87_MASS;
use wellmirror::experiment::{
    DisturbedDistribution, Engine, ExperimentConfig, RequiredBounces, TheoryModel, Verdict,
};
use wellmirror::mirror::{self, MirrorParams};
use wellmirror::momentum::{self, MomentumBox};
use wellmirror::wellqm::{ModeIndex, WellGeometry};
use wellmirror::{stats, Vec3};

fn config(noise_fraction: f64, n: usize, seed: u64) -> ExperimentConfig {
    let g = WellGeometry::cubic(1e-6, RB87_MASS).unwrap();
    let mut c = ExperimentConfig::new(g, ModeIndex::GROUND, MirrorParams::rb87_example(), 1e16, 0.0, n, seed);
    let mean = Engine::new(c.clone()).unwrap().mean_abs_phase_oqt();
    c.noise_sigma = noise_fraction * mean;
    c.null_replicates = 0;
    c.power_replicates = 200;
    c
}

#[test]
fn verdicts_follow_the_generating_model() {
    let c = config(0.1, 1000, 3);
    let e = Engine::new(c).unwrap();
    let cases = [
        (TheoryModel::Oqt, Verdict::FavorsOqt),
        (TheoryModel::DebbStationary, Verdict::FavorsDebbStationary),
        (
            TheoryModel::DebbDisturbed { distribution: DisturbedDistribution::ScaledMarginal { scale: 0.5 } },
            Verdict::FavorsDebbDisturbed,
        ),
    ];
    for (model, expected) in cases {
        let report = e.hypothesis_test(&e.simulate(&model).unwrap()).unwrap();
        assert_eq!(report.verdict, expected, "{}", model.name());
    }
}

#[test]
fn reports_are_deterministic() {
    let c = config(0.3, 300, 8);
    let a = Engine::new(c.clone()).unwrap();
    let b = Engine::new(c).unwrap();
    let ra = a.hypothesis_test(&a.simulate(&TheoryModel::Oqt).unwrap()).unwrap();
    let rb = b.hypothesis_test(&b.simulate(&TheoryModel::Oqt).unwrap()).unwrap();
    assert_eq!(ra, rb);
}

#[test]
fn null_p_values_are_roughly_uniform() {
    let c = config(0.5, 200, 0);
    let e = Engine::new(c).unwrap();
    let mut ps: Vec<f64> = (0..300)
        .map(|i| {
            let s = e.simulate_replicate(&TheoryModel::Oqt, wellmirror::rng::Purpose::NullReplicate, i, 200).unwrap();
            e.hypothesis_test(&s).unwrap().p_value_oqt
        })
        .collect();
    let ks = stats::ks_statistic(&mut ps, |p| p.clamp(0.0, 1.0));
    // Critical value at the 0.001 level for n = 300.
    assert!(ks < 1.95 / (300f64).sqrt(), "{ks}");
}

#[test]
fn momentum_ks_shrinks_with_more_bounces() {
    let mut last = f64::INFINITY;
    for n in [100, 1000, 10_000] {
        let e = Engine::new(config(0.0, n, 12)).unwrap();
        let r = e.hypothesis_test(&e.simulate(&TheoryModel::Oqt).unwrap()).unwrap();
        assert!(r.distribution.momentum_ks_statistic < last);
        last = r.distribution.momentum_ks_statistic;
    }
    assert!(last < 0.02);
}

#[test]
fn lost_fraction_matches_momentum_mass_beyond_barrier() {
    let mut c = config(0.0, 20_000, 4);
    // weaken the mirror so the cutoff falls at |p_x| = 1.5 πħ/L
    let e = Engine::new(c.clone()).unwrap();
    let scale = 1.5 * std::f64::consts::PI * wellmirror::constants::HBAR / c.geometry.side_x / e.lost_threshold();
    c.mirror.intensity_incident *= scale * scale;
    let e = Engine::new(c.clone()).unwrap();
    let q = e.lost_threshold();
    let inf = f64::INFINITY;
    let kept = MomentumBox::new(Vec3::new(-q, -inf, -inf), Vec3::new(q, inf, inf)).unwrap();
    let p_lost = 1.0 - momentum::integrate_prob(&c.geometry, c.mode, &kept).unwrap();
    assert!(p_lost > 0.01 && p_lost < 0.5);
    let series = e.simulate(&TheoryModel::Oqt).unwrap();
    let n = c.n_bounces as f64;
    let freq = series.lost_count() as f64 / n;
    let sd = (p_lost * (1.0 - p_lost) / n).sqrt();
    assert!((freq - p_lost).abs() < 4.0 * sd, "{freq} vs {p_lost}");
    assert!(mirror::barrier_analysis(&c.mirror).is_ok());
}

#[test]
fn required_bounces_shrink_as_noise_drops() {
    let mut last = usize::MAX;
    for frac in [3.0, 1.0, 0.3, 0.1] {
        let e = Engine::new(config(frac, 10, 6)).unwrap();
        let RequiredBounces::Count(n) = e.required_bounces(5.0).unwrap() else { panic!("not achievable at {frac}") };
        assert!(n <= last, "{frac}: {n} > {last}");
        last = n;
    }
    let e = Engine::new(config(0.0, 10, 6)).unwrap();
    assert_eq!(e.required_bounces(5.0).unwrap(), RequiredBounces::Count(1));
}
