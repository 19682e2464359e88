#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959963984540054;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, p: f64) -> bool {
        self.lo <= p && p <= self.hi
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

/// Wilson score interval for `successes` out of `trials`; `[0, 1]` when
/// there are no trials.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> Interval {
    if trials == 0 {
        return Interval { lo: 0.0, hi: 1.0 };
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    Interval { lo: (center - half).max(0.0), hi: (center + half).min(1.0) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_intervals() {
        // mpmath, 30 digits
        let i = wilson_interval(180, 200, Z_95);
        assert!((i.lo - 0.8505941875672826).abs() < 1e-14, "{i:?}");
        assert!((i.hi - 0.9343295513309041).abs() < 1e-14, "{i:?}");
        let all = wilson_interval(200, 200, Z_95);
        assert_eq!(all.hi, 1.0);
        assert!((all.lo - 0.9811546736227334).abs() < 1e-14, "{all:?}");
        let none = wilson_interval(0, 10, Z_95);
        assert_eq!(none.lo, 0.0);
        assert_eq!(wilson_interval(0, 0, Z_95), Interval { lo: 0.0, hi: 1.0 });
    }
}
