mod common;

use muxtomo_core::models::{
    equal_split_click_probability, equal_split_povm, loop_povm, monte_carlo_povm, DetectorModel,
    EqualSplitModel, LogLoopModel,
};
use proptest::prelude::*;

#[test]
fn equal_split_matches_enumeration() {
    for bins in 1..=4 {
        for eta in [0.25, 0.5, 1.0] {
            let set = equal_split_povm(&EqualSplitModel::new(bins, eta), 9).unwrap();
            for n in 0..=8u32 {
                let oracle = common::enumerate_equal_split(bins, eta, n);
                for (k, expected) in oracle.iter().enumerate() {
                    let recurrence = set.weight(k, n as usize);
                    let closed = equal_split_click_probability(bins, eta, n as u64, k);
                    assert!((recurrence - expected).abs() < 1e-12, "N={bins} eta={eta} n={n} k={k}");
                    assert!((closed - expected).abs() < 1e-12, "N={bins} eta={eta} n={n} k={k}");
                }
            }
        }
    }
}

#[test]
fn noisy_equal_split_matches_enumeration() {
    let (bins, eta, dark, xtalk) = (4, 0.63, 0.02, 0.14);
    let model = EqualSplitModel::new(bins, eta).with_noise(dark, xtalk);
    let set = equal_split_povm(&model, 8).unwrap();
    for n in 0..8u32 {
        let clean = common::enumerate_equal_split(bins, eta, n);
        let oracle = common::noisy_clicks(&clean, bins, dark, xtalk);
        for (k, expected) in oracle.iter().enumerate() {
            assert!((set.weight(k, n as usize) - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn loop_matches_inclusion_exclusion() {
    for bins in 2..=4 {
        for (r, loop_eff, det) in [(0.5, 0.9, 0.44), (0.3, 0.8, 1.0), (1.0, 0.9, 0.7)] {
            let model = LogLoopModel::new(bins, det).with_loop(r, loop_eff);
            let set = loop_povm(&model, 40).unwrap();
            let q = common::loop_bin_probabilities(bins, r, loop_eff, det);
            for n in 0..40 {
                let oracle = common::loop_inclusion_exclusion(&q, n);
                for (c, expected) in oracle.iter().enumerate() {
                    assert!(
                        (set.weight(c, n as usize) - expected).abs() < 1e-12,
                        "K={bins} R={r} n={n} c={c}"
                    );
                }
            }
        }
    }
}

#[test]
fn noisy_loop_matches_inclusion_exclusion() {
    let model = LogLoopModel::new(3, 0.44).with_noise(0.01, 0.05);
    let set = loop_povm(&model, 20).unwrap();
    let q = common::loop_bin_probabilities(3, 0.5, 0.9, 0.44);
    for n in 0..20 {
        let clean = common::loop_inclusion_exclusion(&q, n);
        let oracle = common::noisy_clicks(&clean, 3, 0.01, 0.05);
        for (c, expected) in oracle.iter().enumerate() {
            assert!((set.weight(c, n as usize) - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn ideal_loop_single_photon_clicks_with_total_efficiency() {
    let model = LogLoopModel::new(10, 0.44);
    let set = loop_povm(&model, 2).unwrap();
    let q: f64 = common::loop_bin_probabilities(10, 0.5, 0.9, 0.44).iter().sum();
    assert!((set.weight(1, 1) - q).abs() < 1e-15);
    assert!((model.single_photon_efficiency() - q).abs() < 1e-15);
}

#[test]
fn equal_split_saturates() {
    let set = equal_split_povm(&EqualSplitModel::new(4, 0.72), 400).unwrap();
    let top: Vec<f64> = set.outcome(4).unwrap().weights.clone();
    assert!(top.windows(2).all(|w| w[1] >= w[0] - 1e-15));
    assert!(top[399] > 1.0 - 1e-12);
}

#[test]
fn monte_carlo_small_budget_is_reproducible() {
    let model = DetectorModel::LogLoop(LogLoopModel::new(6, 0.5));
    let a = monte_carlo_povm(&model, 30, 5_000, 11).unwrap();
    let b = monte_carlo_povm(&model, 30, 5_000, 11).unwrap();
    assert_eq!(a, b);
    let c = monte_carlo_povm(&model, 30, 5_000, 12).unwrap();
    assert_ne!(a, c);
}

#[test]
fn model_file_round_trip() {
    let text = r#"{"type": "log_loop", "bins": 10, "detector_efficiency": 0.44}"#;
    let model = DetectorModel::from_json(text).unwrap();
    assert_eq!(model, DetectorModel::LogLoop(LogLoopModel::new(10, 0.44)));
    assert_eq!(DetectorModel::from_json(&model.to_json()).unwrap(), model);
    assert!(DetectorModel::from_json(r#"{"type": "equal_split", "bins": 4}"#).is_err());
    assert!(DetectorModel::from_json(r#"{"type": "equal_split", "bins": 4, "efficiency": 1.5}"#).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn models_are_complete(
        bins in 1usize..9,
        eta in 0.0f64..=1.0,
        dark in 0.0f64..0.2,
        xtalk in 0.0f64..0.3,
        looped in any::<bool>(),
    ) {
        let model = if looped {
            DetectorModel::LogLoop(LogLoopModel::new(bins.max(2), eta.max(0.01)).with_noise(dark, xtalk))
        } else {
            DetectorModel::EqualSplit(EqualSplitModel::new(bins, eta).with_noise(dark, xtalk))
        };
        let set = model.povm(150).unwrap();
        prop_assert!(set.validate(1e-12).is_empty());
    }

    #[test]
    fn noiseless_top_outcome_is_monotone(bins in 1usize..9, eta in 0.05f64..=1.0) {
        let set = equal_split_povm(&EqualSplitModel::new(bins, eta), 200).unwrap();
        let top = &set.outcome(bins).unwrap().weights;
        prop_assert!(top.windows(2).all(|w| w[1] >= w[0] - 1e-14));
    }
}
