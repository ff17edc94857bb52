use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

/// Standard normal quantile function.
pub fn normal_quantile(u: f64) -> f64 {
    Normal::standard().inverse_cdf(u)
}

/// Two-sided standard normal tail probability `P(|Z| ≥ |z|)`.
pub fn two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert!((normal_quantile(0.975) - 1.959963984540054).abs() < 1e-9);
        assert_eq!(normal_quantile(0.5), 0.0);
        assert!((two_sided_p(2.5758293035489) - 0.01).abs() < 1e-12);
        assert_eq!(two_sided_p(0.0), 1.0);
        assert!(two_sided_p(10.0) < 1e-22 && two_sided_p(10.0) > 0.0);
    }
}
