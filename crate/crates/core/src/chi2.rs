//! Chi-squared quantiles by bisection on the regularized incomplete gamma.

use statrs::function::gamma::gamma_lr;

/// Chi-squared CDF with `n` degrees of freedom.
pub fn chi2_cdf(n: usize, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_lr(n as f64 / 2.0, x / 2.0)
    }
}

/// Quantile of the chi-squared distribution with `n` degrees of freedom:
/// the squared radius of the `level` confidence ellipsoid.
pub fn confidence_radius(n: usize, level: f64) -> f64 {
    assert!(n >= 1, "need at least one degree of freedom");
    assert!((0.0..1.0).contains(&level), "level must lie in [0, 1)");
    if level == 0.0 {
        return 0.0;
    }
    let mut hi = n as f64 + 10.0;
    while chi2_cdf(n, hi) < level {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_cdf(n, mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn one_dof_is_normal_quantile_squared() {
        assert_relative_eq!(confidence_radius(1, 0.95), 1.959_963_984_540_054f64.powi(2), max_relative = 1e-10);
        assert!((confidence_radius(1, 0.95) - 3.8415).abs() < 1e-4);
    }

    #[test]
    fn two_dof_closed_form() {
        for level in [0.5, 0.9, 0.95, 0.99] {
            assert_relative_eq!(confidence_radius(2, level), -2.0 * (1.0 - level).ln(), max_relative = 1e-10);
        }
    }

    #[test]
    fn level_zero_collapses() {
        assert_eq!(confidence_radius(3, 0.0), 0.0);
        assert!(confidence_radius(3, 1e-9) < 1e-4);
    }

    #[test]
    fn tabulated_values() {
        // Standard tables, 0.95.
        for (n, v) in [(3, 7.814_727_903_251_178), (4, 9.487_729_036_781_154), (10, 18.307_038_053_275_146)] {
            assert_relative_eq!(confidence_radius(n, 0.95), v, max_relative = 1e-9);
        }
    }

    proptest! {
        #[test]
        fn monotone_in_level(n in 1usize..12, a in 0.01f64..0.98) {
            let b = a + 0.01;
            prop_assert!(confidence_radius(n, a) < confidence_radius(n, b));
            prop_assert!((chi2_cdf(n, confidence_radius(n, a)) - a).abs() < 1e-10);
        }
    }
}
