//! Algebraic invariants checked over generated inputs.

use proptest::prelude::*;

use sca_doe::analysis::{chi2_test, cpa, select_poi, welch_t, LeakageModel, MetricId, PoiScore, PoiSelector};
use sca_doe::doe::{
    aggregate_rounds, compute_effects, design_matrix, pareto, predict, Direction, ResponseTable, Term,
};
use sca_doe::trace::{
    aes128_round1_intermediate, gen_semi_fixed_plaintexts, hamming_weight, HwRange, IntermediateTarget, SetLabel,
    Trace, TraceMeta, TraceSet,
};

fn build(rows: &[Vec<f64>], data: &[u8]) -> TraceSet {
    let traces = rows
        .iter()
        .zip(data)
        .map(|(samples, &d)| Trace {
            samples: samples.clone(),
            meta: TraceMeta {
                data: vec![d],
                set_label: SetLabel::Random,
                seed: 0,
            },
        })
        .collect();
    TraceSet::new(traces, 1.0).unwrap()
}

fn matrix(traces: usize, samples: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-50.0..50.0f64, samples), traces)
}

fn averages() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3..1e3f64, 8)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn effects_are_affine_equivariant(y in averages(), a in -10.0..10.0f64, b in -100.0..100.0f64) {
        let base = compute_effects(&y).unwrap();
        let moved: Vec<f64> = y.iter().map(|v| a * v + b).collect();
        let moved = compute_effects(&moved).unwrap();
        prop_assert!(close(moved.mean, a * base.mean + b, 1e-9));
        for t in Term::ALL {
            prop_assert!(close(moved.effect(t), a * base.effect(t), 1e-9));
            prop_assert_eq!(moved.coefficient(t), moved.effect(t) / 2.0);
        }
    }

    #[test]
    fn round_order_does_not_matter(rows in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 3), 8), rot in 0usize..3) {
        let rotated: Vec<Vec<f64>> = rows.iter().map(|r| {
            let mut r = r.clone();
            r.rotate_left(rot);
            r
        }).collect();
        let stats = |rows: Vec<Vec<f64>>| {
            aggregate_rounds(&ResponseTable::new(rows, Direction::Maximize, MetricId::CorrPeak).unwrap())
        };
        for (x, y) in stats(rows).iter().zip(stats(rotated)) {
            prop_assert!(close(x.average, y.average, 1e-12));
            prop_assert!(close(x.std_dev.unwrap(), y.std_dev.unwrap(), 1e-9));
        }
    }

    #[test]
    fn full_model_interpolates(y in averages()) {
        let r = compute_effects(&y).unwrap();
        for (signs, v) in design_matrix().rows().iter().zip(&y) {
            prop_assert!(close(predict(&r, *signs, true), *v, 1e-9));
        }
    }

    #[test]
    fn pareto_percentages(y in averages()) {
        let p = pareto(&compute_effects(&y).unwrap(), false).unwrap();
        let total: f64 = p.entries.iter().map(|e| e.percent).sum();
        prop_assert!((total - 100.0).abs() < 1e-9);
        prop_assert!(p.entries.windows(2).all(|w| w[0].cumulative <= w[1].cumulative));
        prop_assert!(p.entries.windows(2).all(|w| w[0].abs_coefficient >= w[1].abs_coefficient));
        prop_assert!(!p.vital_few.is_empty());
        prop_assert!(p.entries.iter().all(|e| e.term != Term::ABC));
    }

    #[test]
    fn welch_is_antisymmetric(a in matrix(6, 4), b in matrix(5, 4)) {
        let sa = build(&a, &[0; 6]);
        let sb = build(&b, &[0; 5]);
        let ab = welch_t(&sa, &sb).unwrap();
        let ba = welch_t(&sb, &sa).unwrap();
        for (x, y) in ab.curve.unwrap().iter().zip(ba.curve.unwrap()) {
            prop_assert!(close(*x, -y, 1e-12));
        }
    }

    #[test]
    fn chi2_is_symmetric(a in matrix(30, 3), b in matrix(25, 3), bins in 2usize..6) {
        let sa = build(&a, &[0; 30]);
        let sb = build(&b, &[0; 25]);
        let ab = chi2_test(&sa, &sb, bins).unwrap();
        let ba = chi2_test(&sb, &sa, bins).unwrap();
        let (ab, ba) = (ab.curve.unwrap(), ba.curve.unwrap());
        for (x, y) in ab.iter().zip(&ba) {
            prop_assert!(close(*x, *y, 1e-12));
        }
        prop_assert!(ab.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn cpa_ignores_positive_affine_maps(rows in matrix(12, 5), data in prop::collection::vec(any::<u8>(), 12), a in 0.1..10.0f64, b in -20.0..20.0f64) {
        prop_assume!(data.iter().any(|d| d.count_ones() != data[0].count_ones()));
        let base = cpa(&build(&rows, &data), LeakageModel::HammingWeight, 0).unwrap();
        let moved_rows: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| a * v + b).collect()).collect();
        let moved = cpa(&build(&moved_rows, &data), LeakageModel::HammingWeight, 0).unwrap();
        for (x, y) in base.curve.unwrap().iter().zip(moved.curve.unwrap()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn poi_scores_ignore_mean_shift(rows in matrix(12, 6), shift in -100.0..100.0f64, score_pick in 0usize..4) {
        let score = [PoiScore::Sosd, PoiScore::Sost, PoiScore::Snr, PoiScore::Correlation][score_pick];
        let labels: Vec<u16> = (0..12).map(|i| (i % 3) as u16).collect();
        let selector = PoiSelector { score, n_poi: 2 };
        let base = select_poi(&build(&rows, &[0; 12]), &labels, selector).unwrap();
        let shifted: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v + shift).collect()).collect();
        let moved = select_poi(&build(&shifted, &[0; 12]), &labels, selector).unwrap();
        for (x, y) in base.scores.iter().zip(&moved.scores) {
            prop_assert!(close(*x, *y, 1e-6), "{:?}: {} vs {}", score, x, y);
        }
    }

    #[test]
    fn semi_fixed_vectors_stay_in_range(key in any::<[u8; 16]>(), lo in 0u32..=128, width in 0u32..=40, seed in any::<u64>(), sub in any::<bool>()) {
        let range = HwRange::new(lo, (lo + width).min(128)).unwrap();
        let target = if sub { IntermediateTarget::SubBytes } else { IntermediateTarget::AddRoundKey };
        for p in gen_semi_fixed_plaintexts(&key, target, range, 20, seed).unwrap() {
            let state = aes128_round1_intermediate(&p, &key, target).unwrap();
            prop_assert!(range.contains(hamming_weight(&state)));
        }
    }
}
