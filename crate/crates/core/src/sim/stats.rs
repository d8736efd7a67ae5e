/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `n` Bernoulli trials.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Whether two intervals are disjoint.
pub fn disjoint(a: (f64, f64), b: (f64, f64)) -> bool {
    a.1 < b.0 || b.1 < a.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_matches_reference_values() {
        // statsmodels proportion_confint(37, 100, method="wilson")
        let (lo, hi) = wilson_interval(37, 100, Z95);
        assert!((lo - 0.281_823_605_343_245_3).abs() < 1e-9, "{lo}");
        assert!((hi - 0.467_794_704_190_571).abs() < 1e-9, "{hi}");
        let (lo, hi) = wilson_interval(0, 20, Z95);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.161_125_158_052_819_4).abs() < 1e-9, "{hi}");
        let (lo, hi) = wilson_interval(20, 20, Z95);
        assert!((lo - 0.838_874_841_947_180_4).abs() < 1e-9, "{lo}");
        assert_eq!(hi, 1.0);
    }

    #[test]
    fn disjointness() {
        assert!(disjoint((0.1, 0.2), (0.3, 0.4)));
        assert!(!disjoint((0.1, 0.35), (0.3, 0.4)));
    }
}
