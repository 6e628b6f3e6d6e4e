//! Descriptive statistics shared by the extractors. Moments are population
//! moments; skewness and excess kurtosis of a zero-variance sample are 0.

use serde::{Deserialize, Serialize};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    central_moments(xs).0
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// (variance, skewness, excess kurtosis).
pub fn central_moments(xs: &[f64]) -> (f64, f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let n = xs.len() as f64;
    let m = mean(xs);
    let m2 = xs.iter().map(|&x| (x - m) * (x - m)).sum::<f64>() / n;
    // Rounding in the mean can leave a residue for constant input.
    if m2 <= 1e-24 * (1.0 + m * m) {
        return (0.0, 0.0, 0.0);
    }
    let sd = m2.sqrt();
    let (mut m3, mut m4) = (0.0, 0.0);
    for &x in xs {
        let z = (x - m) / sd;
        m3 += z * z * z;
        m4 += z * z * z * z;
    }
    (m2, m3 / n, m4 / n - 3.0)
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

/// Most frequent value; ties go to the smallest.
pub fn mode(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let (mut best, mut best_n) = (s[0], 0usize);
    let mut i = 0;
    while i < s.len() {
        let mut j = i;
        while j < s.len() && s[j] == s[i] {
            j += 1;
        }
        if j - i > best_n {
            best = s[i];
            best_n = j - i;
        }
        i = j;
    }
    best
}

pub fn min(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Shannon entropy in bits of the empirical distribution of `items`.
pub fn entropy<T: Ord>(items: &[T]) -> f64 {
    let mut sorted: Vec<&T> = items.iter().collect();
    sorted.sort();
    let n = items.len() as f64;
    let mut h = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let p = (j - i) as f64 / n;
        h -= p * p.log2();
        i = j;
    }
    h
}

/// The ten per-character statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatSet10 {
    pub any: f64,
    pub all: f64,
    pub mean: f64,
    pub variance: f64,
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub sum: f64,
    pub kurtosis: f64,
    pub skewness: f64,
}

impl StatSet10 {
    pub const LEN: usize = 10;

    pub fn compute(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return StatSet10 {
                any: 0.0,
                all: 0.0,
                mean: 0.0,
                variance: 0.0,
                min: 0.0,
                max: 0.0,
                median: 0.0,
                sum: 0.0,
                kurtosis: 0.0,
                skewness: 0.0,
            };
        }
        let (variance, skewness, kurtosis) = central_moments(xs);
        StatSet10 {
            any: f64::from(u8::from(xs.iter().any(|&x| x != 0.0))),
            all: f64::from(u8::from(xs.iter().all(|&x| x != 0.0))),
            mean: mean(xs),
            variance,
            min: min(xs),
            max: max(xs),
            median: median(xs),
            sum: xs.iter().sum(),
            kurtosis,
            skewness,
        }
    }

    pub fn to_array(self) -> [f64; 10] {
        [
            self.any,
            self.all,
            self.mean,
            self.variance,
            self.min,
            self.max,
            self.median,
            self.sum,
            self.kurtosis,
            self.skewness,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_value() {
        let s = StatSet10::compute(&[1.0]);
        assert_eq!(
            s.to_array(),
            [1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0]
        );
    }

    #[test]
    fn known_moments() {
        // 1,2,3,4: mean 2.5, var 1.25, skew 0, excess kurtosis -1.36
        let (v, s, k) = central_moments(&[1.0, 2.0, 3.0, 4.0]);
        assert!((v - 1.25).abs() < 1e-12);
        assert!(s.abs() < 1e-12);
        assert!((k - (2.5625 / 1.5625 - 3.0)).abs() < 1e-12);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(mode(&[3.0, 1.0, 3.0, 1.0, 2.0]), 1.0);
        assert_eq!(entropy(&["a", "a"]), 0.0);
        assert!((entropy(&["a", "b"]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_with_rounding_residue() {
        let (v, s, k) = central_moments(&[0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1]);
        assert_eq!((v, s, k), (0.0, 0.0, 0.0));
    }

    proptest! {
        #[test]
        fn stat_set_invariants(xs in prop::collection::vec(-1e6f64..1e6, 1..50)) {
            let s = StatSet10::compute(&xs);
            prop_assert!(s.variance >= 0.0);
            prop_assert!(s.min <= s.median && s.median <= s.max);
            prop_assert!(s.any == 0.0 || s.any == 1.0);
            prop_assert!(s.to_array().iter().all(|x| x.is_finite()));
        }
    }
}
