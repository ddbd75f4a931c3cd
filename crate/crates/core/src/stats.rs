//! Goodness-of-fit helpers: one-sample Kolmogorov-Smirnov statistics and
//! the asymptotic Kolmogorov distribution, plus normal tail probabilities.

use statrs::function::erf::erfc;

/// Standard normal CDF, accurate far into the lower tail.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// One-sided significance level for a z-score threshold (e.g. 5 -> 2.87e-7).
pub fn sigma_to_alpha(sigma: f64) -> f64 {
    normal_cdf(-sigma)
}

/// Kolmogorov-Smirnov distance between the sample and a continuous CDF.
/// The sample is sorted in place.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &mut [f64], cdf: F) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        let above = (i as f64 + 1.0) / n - f;
        let below = f - i as f64 / n;
        d.max(above).max(below)
    })
}

/// Kolmogorov-Smirnov distance when the sample is already sorted and the
/// CDF values at each point are given.
pub fn ks_statistic_sorted(cdf_values: &[f64]) -> f64 {
    let n = cdf_values.len() as f64;
    cdf_values.iter().enumerate().fold(0.0f64, |d, (i, &f)| {
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

/// Survival function of the Kolmogorov distribution,
/// `Q(λ) = 2 Σ (-1)^(k-1) exp(-2 k² λ²)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        // Series converges slowly here and Q is 1 to double precision.
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-300 || term < 1e-17 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value of a one-sample KS distance `d` at sample size `n`,
/// with Stephens' small-sample correction.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)
}

/// Sample mean and unbiased standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_sigma_alpha() {
        assert!((sigma_to_alpha(5.0) / 2.866_515_718_791_939e-7 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn kolmogorov_reference_points() {
        // Critical values of the Kolmogorov distribution.
        assert!((kolmogorov_sf(1.358_099) - 0.05).abs() < 1e-5);
        assert!((kolmogorov_sf(1.627_624) - 0.01).abs() < 1e-5);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
        assert!(kolmogorov_sf(10.0) < 1e-80);
    }

    #[test]
    fn ks_of_uniform_grid_is_half_step() {
        let mut xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let d = ks_statistic(&mut xs, |x| x);
        assert!((d - 0.005).abs() < 1e-12);
    }
}
