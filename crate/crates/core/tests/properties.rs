use proptest::prelude::*;
use trialsize::candidates::{extract_candidates, PAD, WINDOW};
use trialsize::corpus::{Abstract, Category};
use trialsize::features::FeatureVector;
use trialsize::pipeline::decode;

fn sparse() -> impl Strategy<Value = FeatureVector> {
    proptest::collection::vec((0u32..40, -3.0f64..3.0), 0..12).prop_map(FeatureVector::from_pairs)
}

fn sentence() -> impl Strategy<Value = String> {
    let word = prop_oneof![
        Just("patients".to_string()),
        Just("were".to_string()),
        Just("randomised".to_string()),
        Just("(n".to_string()),
        Just("=".to_string()),
        (0u64..5000).prop_map(|n| n.to_string()),
        (0u64..5000).prop_map(|n| format!("{n},")),
    ];
    proptest::collection::vec(word, 1..25).prop_map(|w| w.join(" "))
}

proptest! {
    #[test]
    fn argmax_survives_increasing_transforms(scores in proptest::collection::vec(-50.0f64..50.0, 1..30), k in 0.01f64..10.0, c in -5.0f64..5.0) {
        let best = decode(&scores);
        let affine: Vec<f64> = scores.iter().map(|s| k * s + c).collect();
        let cubic: Vec<f64> = scores.iter().map(|s| s * s * s).collect();
        prop_assert_eq!(decode(&affine), best);
        prop_assert_eq!(decode(&cubic), best);
    }

    #[test]
    fn sparse_vectors_are_sorted_and_distances_symmetric(a in sparse(), b in sparse()) {
        for v in [&a, &b] {
            prop_assert!(v.entries().windows(2).all(|w| w[0].0 < w[1].0));
        }
        prop_assert_eq!(a.sq_dist(&b), b.sq_dist(&a));
        prop_assert!(a.sq_dist(&a).abs() < 1e-12);
        let dense: f64 = (0..40).map(|i| (a.get(i) - b.get(i)).powi(2)).sum();
        prop_assert!((a.sq_dist(&b) - dense).abs() < 1e-9);
    }

    #[test]
    fn candidates_have_full_windows(text in sentence()) {
        let a = Abstract::build("p", None, &[(Some(Category::Methods), None, &text)]).unwrap();
        for c in extract_candidates(&a) {
            prop_assert!(c.value >= 10);
            prop_assert_eq!(c.context.len(), 2 * WINDOW + 1);
            prop_assert_eq!(&c.context[WINDOW].surface, &c.surface);
            let pads = c.context.iter().filter(|s| s.surface == PAD).count();
            prop_assert!(pads <= 2 * WINDOW);
        }
    }
}
