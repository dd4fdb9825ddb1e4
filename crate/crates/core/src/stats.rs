//! Binomial and Monte Carlo summaries.

use crate::math::sqrt;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// A 95% Wilson score interval for `successes / trials`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wilson {
    pub low: f64,
    pub high: f64,
}

impl Wilson {
    pub fn new(successes: u64, trials: u64) -> Self {
        if trials == 0 {
            return Wilson { low: 0.0, high: 1.0 };
        }
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = Z95 / denom * sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
        let low = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
        let high = if successes >= trials { 1.0 } else { (center + half).min(1.0) };
        Wilson { low, high }
    }

    pub fn halfwidth(&self) -> f64 {
        0.5 * (self.high - self.low)
    }
}

/// Sample mean and standard error from running sums.
pub fn mean_stderr(sum: f64, sum_sq: f64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let nf = n as f64;
    let mean = sum / nf;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (mean, sqrt(var / nf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_reference_values() {
        // closed-form evaluation with z = 1.959963984540054
        let w = Wilson::new(0, 100);
        assert_eq!(w.low, 0.0);
        assert!((w.high - 0.036_993_498_206_985_68).abs() < 1e-12, "{}", w.high);
        let w = Wilson::new(50, 100);
        assert!((w.low - 0.403_831_530_365_995_6).abs() < 1e-12, "{}", w.low);
        assert!((w.high - 0.596_168_469_634_004_4).abs() < 1e-12, "{}", w.high);
    }

    #[test]
    fn mean_stderr_basic() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let (s, q) = xs.iter().fold((0.0, 0.0), |(s, q), x| (s + x, q + x * x));
        let (m, se) = mean_stderr(s, q, 4);
        assert_eq!(m, 2.5);
        assert!((se - (1.666_666_666_666_666_7f64 / 4.0).sqrt()).abs() < 1e-15);
    }
}
