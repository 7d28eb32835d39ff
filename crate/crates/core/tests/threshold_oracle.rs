mod support;

use std::collections::BTreeMap;

use anflo_core::flowmodel::{build_matrices, AppFeatures, FlowStatus, ALL_GROUP};
use anflo_core::{compute_threshold, FlowPair, GroupingStrategy, QuantileMethod};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::quantile_oracle;

#[test]
fn agrees_with_brute_force_on_random_multisets() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=100);
        let values: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=1000)).collect();
        let got = compute_threshold(&values, QuantileMethod::Interpolated).unwrap();
        let want = quantile_oracle::tau(&values);
        assert!((got - want).abs() <= 1e-9, "{values:?}: {got} vs {want}");
    }
}

#[test]
fn worked_example() {
    assert!((quantile_oracle::tau(&[3, 7, 8, 8, 10]) - 5.5).abs() < 1e-12);
    let got = compute_threshold(&[3, 7, 8, 8, 10], QuantileMethod::Interpolated).unwrap();
    assert!((got - 5.5).abs() < 1e-9);
}

fn pairs() -> Vec<FlowPair> {
    let mut v = Vec::new();
    for s in ["GPS", "Contacts", "Camera"] {
        for k in ["Internet", "SMS", "Bluetooth"] {
            v.push(FlowPair::new(s, k));
        }
    }
    v
}

fn features(seed: u64, apps: usize, groups: usize) -> Vec<AppFeatures> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all = pairs();
    (0..apps)
        .map(|i| AppFeatures {
            app_id: format!("a{i}"),
            group_key: format!("topic:{}", rng.gen_range(0..groups)),
            flows: all.iter().filter(|_| rng.gen_bool(0.3)).cloned().collect(),
        })
        .collect()
}

proptest! {
    #[test]
    fn all_equal_counts_are_common(c in 1u32..500, n in 1usize..30) {
        let tau = compute_threshold(&vec![c; n], QuantileMethod::Interpolated).unwrap();
        prop_assert_eq!(tau, c as f64);
        prop_assert_eq!(FlowStatus::of_count(c, tau), FlowStatus::Common);
    }

    #[test]
    fn tau_never_exceeds_lower_quartile(values in prop::collection::vec(1u32..1000, 1..60)) {
        for method in [QuantileMethod::Interpolated, QuantileMethod::TukeyHinges] {
            let (q1, q3) = anflo_core::flowmodel::quartiles(&values, method).unwrap();
            let tau = compute_threshold(&values, method).unwrap();
            prop_assert!(q1 <= q3);
            prop_assert!(tau <= q1 + 1e-12);
        }
    }

    /// Flows seen in fewer than tau apps are never common.
    #[test]
    fn minority_flows_are_uncommon(seed in 0u64..5000) {
        let ms = build_matrices(&features(seed, 40, 3), GroupingStrategy::ByTopic, QuantileMethod::Interpolated).unwrap();
        for m in ms.values() {
            let Some(tau) = m.tau else { continue };
            for (flow, &k) in &m.counts {
                prop_assert_eq!(m.is_common(flow).is_common(), k as f64 >= tau - 1e-9);
                prop_assert!(k >= 1 && k as usize <= m.apps);
            }
        }
    }

    /// The single matrix is the cell-wise sum of the per-group matrices.
    #[test]
    fn single_strategy_sums_groups(seed in 0u64..5000) {
        let feats = features(seed, 30, 4);
        let groups = build_matrices(&feats, GroupingStrategy::ByTopic, QuantileMethod::Interpolated).unwrap();
        let single_feats: Vec<AppFeatures> = feats.iter().cloned().map(|mut f| { f.group_key = ALL_GROUP.into(); f }).collect();
        let single = build_matrices(&single_feats, GroupingStrategy::Single, QuantileMethod::Interpolated).unwrap();
        let mut summed: BTreeMap<FlowPair, u32> = BTreeMap::new();
        for m in groups.values() {
            for (p, &c) in &m.counts {
                *summed.entry(p.clone()).or_default() += c;
            }
        }
        prop_assert_eq!(&single[ALL_GROUP].counts, &summed);
        prop_assert_eq!(single[ALL_GROUP].apps, 30);
    }
}
