use std::collections::HashMap;

use super::{Estimator, MIEstimate, MiError};

fn sorted_sum(mut terms: Vec<f64>) -> f64 {
    // order-independent summation keeps the estimate symmetric in (X, Y)
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

fn counts(symbols: &[u64]) -> HashMap<u64, usize> {
    let mut c = HashMap::new();
    for &s in symbols {
        *c.entry(s).or_insert(0) += 1;
    }
    c
}

/// Empirical entropy in nats.
pub fn plugin_entropy(symbols: &[u64]) -> f64 {
    let n = symbols.len() as f64;
    sorted_sum(
        counts(symbols)
            .values()
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .collect(),
    )
}

/// Plug-in mutual information of two discrete sequences, in nats.
pub fn mi_plugin(x: &[u64], y: &[u64]) -> Result<MIEstimate, MiError> {
    if x.len() != y.len() {
        return Err(MiError::Shape(format!("{} x samples vs {} y samples", x.len(), y.len())));
    }
    let n = x.len();
    if n < 2 {
        return Err(MiError::InsufficientData(format!("plug-in estimator needs at least 2 samples, got {n}")));
    }
    let cx = counts(x);
    let cy = counts(y);
    let mut joint: HashMap<(u64, u64), usize> = HashMap::new();
    for (&a, &b) in x.iter().zip(y) {
        *joint.entry((a, b)).or_insert(0) += 1;
    }
    let nf = n as f64;
    let terms = joint
        .iter()
        .map(|(&(a, b), &c)| {
            let c = c as f64;
            let marg = (cx[&a] as f64) * (cy[&b] as f64);
            c / nf * (c * nf / marg).ln()
        })
        .collect();
    let mut value = sorted_sum(terms);
    if value < 0.0 && value > -1e-12 {
        value = 0.0;
    }
    Ok(MIEstimate::nats(value, Estimator::PlugIn, None, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn independent_product_counts_give_zero() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for a in 0..3u64 {
            for b in 0..4u64 {
                for _ in 0..(a + 1) * (b + 2) {
                    x.push(a);
                    y.push(b);
                }
            }
        }
        assert!(mi_plugin(&x, &y).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn identity_on_four_symbols_is_two_bits() {
        let x: Vec<u64> = (0..400).map(|i| i % 4).collect();
        let e = mi_plugin(&x, &x).unwrap();
        assert!((e.value - 4f64.ln()).abs() < 1e-12);
        assert!((e.bits() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_table_matches_direct_summation() {
        // counts [[2, 1], [1, 2]], n = 6
        let x = [0, 0, 0, 1, 1, 1];
        let y = [0, 0, 1, 0, 1, 1];
        let p = [[2.0 / 6.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 6.0]];
        let mut oracle = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let px: f64 = p[i].iter().sum();
                let py: f64 = p[0][j] + p[1][j];
                oracle += p[i][j] * (p[i][j] / (px * py)).ln();
            }
        }
        let frozen = 0.056_633_012_265_132_43;
        let e = mi_plugin(&x, &y).unwrap().value;
        assert!((e - oracle).abs() < 1e-15);
        assert!((e - frozen).abs() < 1e-15);
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(mi_plugin(&[1], &[2]), Err(MiError::InsufficientData(_))));
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(pairs in prop::collection::vec((0u64..6, 0u64..5), 2..300)) {
            let x: Vec<u64> = pairs.iter().map(|p| p.0).collect();
            let y: Vec<u64> = pairs.iter().map(|p| p.1).collect();
            let xy = mi_plugin(&x, &y).unwrap().value;
            let yx = mi_plugin(&y, &x).unwrap().value;
            prop_assert_eq!(xy, yx);
            prop_assert!(xy >= 0.0);
            prop_assert!(xy <= plugin_entropy(&x).min(plugin_entropy(&y)) + 1e-12);
        }

        #[test]
        fn deterministic_function_gives_its_entropy(x in prop::collection::vec(0u64..20, 2..300)) {
            let fx: Vec<u64> = x.iter().map(|v| (v * v) % 7).collect();
            let e = mi_plugin(&x, &fx).unwrap().value;
            prop_assert!((e - plugin_entropy(&fx)).abs() <= 1e-12);
        }
    }
}
