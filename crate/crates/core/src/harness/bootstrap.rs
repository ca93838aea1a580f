use rand::{Rng, SeedableRng};
use serde::Serialize;

use super::HarnessError;
use crate::SimRng;

pub const DEFAULT_RESAMPLES: usize = 10_000;

/// Percentile bootstrap interval of a mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapCI {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub resamples: usize,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    match sorted.get(i + 1) {
        Some(&next) if frac > 0.0 => sorted[i] + frac * (next - sorted[i]),
        _ => sorted[i],
    }
}

/// Percentile bootstrap of the mean of `values`. Always `lo ≤ mean ≤ hi`,
/// and constant data collapses the interval to a point.
pub fn bootstrap_ci(values: &[f64], level: f64, resamples: usize, seed: u64) -> Result<BootstrapCI, HarnessError> {
    if values.is_empty() {
        return Err(HarnessError::Invalid("bootstrap needs at least one value".into()));
    }
    if !(level > 0.0 && level < 1.0) || resamples == 0 {
        return Err(HarnessError::Invalid(format!("bootstrap level {level} / resamples {resamples} out of range")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(HarnessError::Invalid("bootstrap input contains non-finite values".into()));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if values.iter().all(|&v| v == values[0]) {
        return Ok(BootstrapCI { mean: values[0], lo: values[0], hi: values[0], level, resamples });
    }
    let mut rng = SimRng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(BootstrapCI {
        mean,
        lo: quantile(&means, tail).min(mean),
        hi: quantile(&means, 1.0 - tail).max(mean),
        level,
        resamples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_values_collapse() {
        let ci = bootstrap_ci(&[5.0, 5.0, 5.0], 0.95, DEFAULT_RESAMPLES, 0).unwrap();
        assert_eq!((ci.mean, ci.lo, ci.hi), (5.0, 5.0, 5.0));
        let single = bootstrap_ci(&[7.25], 0.95, DEFAULT_RESAMPLES, 0).unwrap();
        assert_eq!((single.lo, single.hi), (7.25, 7.25));
    }

    #[test]
    fn two_point_distribution() {
        // Resampled means of {0, 10} take 0, 5, 10 with mass 1/4, 1/2, 1/4,
        // so both 2.5% tails sit on the extremes.
        let ci = bootstrap_ci(&[0.0, 10.0], 0.95, DEFAULT_RESAMPLES, 3).unwrap();
        assert!(ci.lo.abs() <= 0.5, "{ci:?}");
        assert!((ci.hi - 10.0).abs() <= 0.5, "{ci:?}");
        assert_eq!(ci.mean, 5.0);
    }

    #[test]
    fn empty_and_bad_inputs() {
        assert!(bootstrap_ci(&[], 0.95, 100, 0).is_err());
        assert!(bootstrap_ci(&[1.0, 2.0], 1.5, 100, 0).is_err());
        assert!(bootstrap_ci(&[1.0, f64::NAN], 0.95, 100, 0).is_err());
    }

    #[test]
    fn seeded_and_repeatable() {
        let v = [1.0, 4.0, 2.0, 8.0, 5.0];
        assert_eq!(bootstrap_ci(&v, 0.95, 2000, 9).unwrap(), bootstrap_ci(&v, 0.95, 2000, 9).unwrap());
    }

    proptest! {
        #[test]
        fn mean_inside_interval(v in prop::collection::vec(-100.0f64..100.0, 1..20), seed in any::<u64>()) {
            let ci = bootstrap_ci(&v, 0.95, 500, seed).unwrap();
            prop_assert!(ci.lo <= ci.mean && ci.mean <= ci.hi);
            let (min, max) = v.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
            prop_assert!(ci.lo >= min - 1e-9 && ci.hi <= max + 1e-9);
        }

        #[test]
        fn symmetric_data_is_centered(half in prop::collection::vec(0.1f64..50.0, 1..8)) {
            let v: Vec<f64> = half.iter().flat_map(|&x| [x, -x]).collect();
            let ci = bootstrap_ci(&v, 0.95, 2000, 1).unwrap();
            prop_assert!(ci.lo <= 0.0 && 0.0 <= ci.hi);
        }
    }
}
