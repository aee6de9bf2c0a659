//! Standard normal distribution and small descriptive statistics.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF, evaluated through `erfc` so both tails keep full
/// relative precision.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Natural log of the standard normal CDF. Stays finite far into the left
/// tail where `normal_cdf` underflows.
pub fn log_normal_cdf(x: f64) -> f64 {
    if x > 6.0 {
        (-0.5 * libm::erfc(x * FRAC_1_SQRT_2)).ln_1p()
    } else if x > -30.0 {
        normal_cdf(x).ln()
    } else {
        // Mills-ratio asymptotic series; truncation error < 1e-12 for x <= -30.
        let z = 1.0 / (x * x);
        let series = 1.0 - z + 3.0 * z * z - 15.0 * z.powi(3) + 105.0 * z.powi(4);
        -0.5 * x * x - 0.5 * (2.0 * PI).ln() - (-x).ln() + series.ln()
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (divisor n - 1); zero for fewer than two values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_points() {
        assert_eq!(normal_cdf(0.0), 0.5);
        // Reference values from a 50-digit evaluation.
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((normal_cdf(-5.0) / 2.866_515_718_791_939e-7 - 1.0).abs() < 1e-12);
        assert!((normal_cdf(-20.0) / 2.753_624_118_606_233_3e-89 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_cdf_is_continuous_across_branches() {
        for &x in &[-30.0f64, 6.0] {
            let lo = log_normal_cdf(x - 1e-9);
            let hi = log_normal_cdf(x + 1e-9);
            assert!((lo - hi).abs() < 1e-9 * (1.0 + lo.abs()), "{x}: {lo} {hi}");
        }
        // ln Phi(-40), 50-digit reference.
        assert!((log_normal_cdf(-40.0) - (-804.608_442_013_754_2)).abs() < 1e-9);
        assert!(log_normal_cdf(-1e4).is_finite());
    }

    #[test]
    fn descriptive_statistics() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!((sample_sd(&[1.0, 2.0, 3.0, 4.0]) - 1.290_994_448_735_805_6).abs() < 1e-15);
        assert_eq!(sample_sd(&[5.0]), 0.0);
    }
}
