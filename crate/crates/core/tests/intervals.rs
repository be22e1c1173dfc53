use proptest::prelude::*;
use statrs::distribution::{Beta, ContinuousCDF};
use trialsize::pipeline::{clopper_pearson, format_percent, regularized_beta};

/// Tolerance against the independent beta quantile.
const ORACLE_TOL: f64 = 1e-7;

fn oracle(k: u64, n: u64, confidence: f64) -> (f64, f64) {
    let alpha = 1.0 - confidence;
    let (k, n) = (k as f64, n as f64);
    let low = if k == 0.0 { 0.0 } else { Beta::new(k, n - k + 1.0).unwrap().inverse_cdf(alpha / 2.0) };
    let high = if k == n { 1.0 } else { Beta::new(k + 1.0, n - k).unwrap().inverse_cdf(1.0 - alpha / 2.0) };
    (low, high)
}

#[test]
fn agrees_with_statrs() {
    for n in [1u64, 2, 7, 20, 50, 137] {
        for k in 0..=n {
            let (lo, hi) = clopper_pearson(k, n, 0.95).unwrap();
            let (olo, ohi) = oracle(k, n, 0.95);
            assert!((lo - olo).abs() < ORACLE_TOL, "k={k} n={n}: {lo} vs {olo}");
            assert!((hi - ohi).abs() < ORACLE_TOL, "k={k} n={n}: {hi} vs {ohi}");
        }
    }
}

#[test]
fn regularized_beta_matches_statrs() {
    for &(x, a, b) in &[(0.2, 2.0, 3.0), (0.9, 44.0, 7.0), (0.5, 0.5, 0.5), (0.01, 1.0, 50.0)] {
        let expected = statrs::function::beta::beta_reg(a, b, x);
        assert!((regularized_beta(x, a, b) - expected).abs() < 1e-12);
    }
}

#[test]
fn table_counts_over_fifty() {
    // Accuracies over 50 abstracts and their printed bounds.
    let rows = [
        (44, "76", "95"),
        (40, "66", "90"),
        (38, "62", "87"),
        (6, "4.5", "24"),
        (41, "69", "91"),
        (42, "71", "93"),
    ];
    for (k, lo, hi) in rows {
        let (l, h) = clopper_pearson(k, 50, 0.95).unwrap();
        assert_eq!((format_percent(l).as_str(), format_percent(h).as_str()), (lo, hi), "k={k}");
    }
}

proptest! {
    #[test]
    fn endpoints_monotone_in_successes(n in 1u64..300, k in 0u64..300) {
        let k = k % n;
        let (l0, h0) = clopper_pearson(k, n, 0.95).unwrap();
        let (l1, h1) = clopper_pearson(k + 1, n, 0.95).unwrap();
        prop_assert!(l1 >= l0 && h1 >= h0);
    }

    #[test]
    fn wider_at_higher_confidence(n in 1u64..300, k in 0u64..300) {
        let k = k % (n + 1);
        let (l95, h95) = clopper_pearson(k, n, 0.95).unwrap();
        let (l99, h99) = clopper_pearson(k, n, 0.99).unwrap();
        prop_assert!(l99 <= l95 && h99 >= h95);
        let p = k as f64 / n as f64;
        prop_assert!(l95 <= p && p <= h95);
    }
}
