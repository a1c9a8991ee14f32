/// Standard normal CDF through the fdlibm rational `erfc` approximations.
/// Evaluating the tail on `|t|` keeps `Φ(−t) = 1 − Φ(t)` up to one rounding.
pub fn std_normal_cdf(t: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    let tail = 0.5 * libm::erfc(t.abs() / std::f64::consts::SQRT_2);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// `2 · min(Φ(t), 1 − Φ(t))`.
pub fn two_sided_normal_pvalue(t: f64) -> f64 {
    let c = std_normal_cdf(t);
    (2.0 * c.min(1.0 - c)).clamp(0.0, 1.0)
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (divisor `n − 1`); 0 for fewer than two values.
pub fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

/// `x` rounded to `digits` significant decimal digits. Non-finite values pass through.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 || digits == 0 {
        return x;
    }
    format!("{:.*e}", digits - 1, x).parse().expect("formatted float parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_to_significant_digits() {
        assert_eq!(round_sig(0.123_456_789_012_3, 10), 0.123_456_789_0);
        assert_eq!(round_sig(-98_765.432_109_87, 10), -98_765.432_11);
        assert_eq!(round_sig(1.0 / 3.0, 3), 0.333);
        assert_eq!(round_sig(0.0, 10), 0.0);
        assert!(round_sig(f64::NAN, 10).is_nan());
        let x = 0.745_123_456_789;
        assert_eq!(round_sig(round_sig(x, 10), 10), round_sig(x, 10));
    }

    #[test]
    fn sample_sd_reference() {
        assert_eq!(sample_sd(&[1.0]), 0.0);
        assert!((sample_sd(&[1.0, 2.0, 3.0, 4.0]) - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn cdf_reference_points() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_cdf(1.959964) - 0.975).abs() < 1e-6);
        assert!((std_normal_cdf(2.0) + std_normal_cdf(-2.0) - 1.0).abs() < 1e-12);
        assert_eq!(two_sided_normal_pvalue(0.0), 1.0);
        assert!((two_sided_normal_pvalue(1.959964) - 0.05).abs() < 1e-4);
    }

    #[test]
    fn cdf_matches_reference_implementation() {
        let reference = Normal::new(0.0, 1.0).unwrap();
        let mut prev = 0.0;
        for i in -800..=800 {
            let t = i as f64 / 100.0;
            let c = std_normal_cdf(t);
            assert!((c - reference.cdf(t)).abs() <= 1e-7, "t = {t}");
            assert!(c >= prev);
            assert!((c + std_normal_cdf(-t) - 1.0).abs() < 1e-12);
            prev = c;
        }
        assert_eq!(std_normal_cdf(f64::INFINITY), 1.0);
        assert_eq!(std_normal_cdf(f64::NEG_INFINITY), 0.0);
    }
}
