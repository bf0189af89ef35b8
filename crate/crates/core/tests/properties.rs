use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use specocc::classify::tree::entropy_of_counts;
use specocc::classify::{
    evaluate, Classifier, Dataset, DtModel, LrModel, NbcKernel, NbcModel, SvmModel, Timings,
};
use specocc::data::{
    generate_synthetic, ActivityPattern, BandConfig, GeneratorConfig, PowerMatrix,
};
use specocc::hmm::{
    estimate_hmm_with, HmmModel, ObservationSequence, StateSequence, STOCHASTIC_TOLERANCE,
};
use specocc::labeling::{
    consecutive_free, label_conditions, label_pu, Condition, LabelingCriteria, PuLabelVector,
};
use specocc::occupancy::{slot_occupancy, threshold_status, OccupancyVector, StatusMatrix};
use specocc::outage::{find_free_blocks, su_outage_probability, OutageMode, OutageOptions};

fn band(k: usize) -> BandConfig {
    BandConfig::new("test", 100.0, 100.0 + k as f64, k).unwrap()
}

fn matrix_strategy() -> impl Strategy<Value = PowerMatrix> {
    (1usize..30, 1usize..12).prop_flat_map(|(n, k)| {
        prop::collection::vec(-120.0f64..-20.0, n * k)
            .prop_map(move |v| PowerMatrix::new(band(k), v).unwrap())
    })
}

fn binary_rows(max_n: usize, k: usize) -> impl Strategy<Value = (Vec<Vec<u8>>, Vec<u8>)> {
    (2usize..max_n).prop_flat_map(move |n| {
        (
            prop::collection::vec(prop::collection::vec(0u8..2, k), n),
            prop::collection::vec(0u8..2, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn status_is_monotone_in_threshold(m in matrix_strategy(), g1 in -120.0f64..-20.0, dg in 0.0f64..50.0) {
        let lo = threshold_status(&m, g1);
        let hi = threshold_status(&m, g1 + dg);
        prop_assert!(lo.values().iter().zip(hi.values()).all(|(a, b)| a >= b));
        let (o1, o2) = (slot_occupancy(&lo), slot_occupancy(&hi));
        prop_assert!(o1.values().iter().zip(o2.values()).all(|(a, b)| a >= b));
    }

    #[test]
    fn occupancy_conserves_ones(m in matrix_strategy(), g in -120.0f64..-20.0) {
        let s = threshold_status(&m, g);
        let occ = slot_occupancy(&s);
        let total: f64 = occ.values().iter().sum::<f64>() * s.n_bins() as f64;
        prop_assert!((total - s.count_ones() as f64).abs() < 1e-9);
    }

    #[test]
    fn thresholding_binary_powers_is_idempotent(rows in binary_rows(20, 5)) {
        let s = StatusMatrix::from_rows(&rows.0, 0.5).unwrap();
        let powers: Vec<f64> = s.values().iter().map(|&v| v as f64).collect();
        let m = PowerMatrix::new(band(5), powers).unwrap();
        let again = threshold_status(&m, 0.5);
        prop_assert_eq!(again.values(), s.values());
    }

    #[test]
    fn conditions_partition_slots(
        rows in binary_rows(40, 6),
        l in 0.0f64..1.0,
        w in 0.0f64..1.0,
        b in 1usize..=6,
    ) {
        let s = StatusMatrix::from_rows(&rows.0, 0.0).unwrap();
        let occ = slot_occupancy(&s);
        let crit = LabelingCriteria { gamma: 0.0, l_oc: l, u_oc: (l + w).min(1.0), b_min_run: b };
        let conds = label_conditions(&s, &occ, &crit).unwrap();
        prop_assert_eq!(conds.len(), s.n_slots());
        for ((c, &oc), row) in conds.iter().zip(occ.values()).zip(s.rows()) {
            let ambiguous = oc >= crit.l_oc && oc <= crit.u_oc;
            let short = consecutive_free(row) < crit.b_min_run;
            let expected = match (oc > crit.u_oc, oc < crit.l_oc, short) {
                (true, _, _) => Condition::AboveUpper,
                (_, true, _) => Condition::BelowLower,
                (_, _, true) => Condition::AmbiguousShortRun,
                _ => Condition::AmbiguousLongRun,
            };
            prop_assert_eq!(*c, expected);
            prop_assert_eq!(ambiguous, matches!(c, Condition::AmbiguousShortRun | Condition::AmbiguousLongRun));
        }
    }

    #[test]
    fn protection_grows_with_b(rows in binary_rows(40, 8), l in 0.0f64..0.5, w in 0.0f64..0.5) {
        let s = StatusMatrix::from_rows(&rows.0, 0.0).unwrap();
        let occ = slot_occupancy(&s);
        let mut last = 0;
        for b in 1..=8 {
            let crit = LabelingCriteria { gamma: 0.0, l_oc: l, u_oc: l + w, b_min_run: b };
            let ones = label_pu(&s, &occ, &crit).unwrap().ones();
            prop_assert!(ones >= last);
            last = ones;
        }
    }

    #[test]
    fn tree_leaves_are_terminal(rows in binary_rows(60, 4), min_obs in 1usize..10) {
        let d = Dataset::from_rows(&rows.0, &rows.1).unwrap();
        let m = DtModel::fit(&d, min_obs);
        for leaf in m.leaf_partitions(&d) {
            let ones = leaf.iter().filter(|&&i| d.labels()[i] == 1).count();
            let zeros = leaf.len() - ones;
            let pure = entropy_of_counts(zeros, ones) == 0.0;
            let small = leaf.len() < min_obs;
            let parent = entropy_of_counts(zeros, ones);
            let gainless = (0..4).all(|j| {
                let mut c = [[0usize; 2]; 2];
                for &i in &leaf {
                    c[d.row(i)[j] as usize][d.labels()[i] as usize] += 1;
                }
                let n0 = c[0][0] + c[0][1];
                let n1 = c[1][0] + c[1][1];
                if n0 == 0 || n1 == 0 {
                    return true;
                }
                let child = (n0 as f64 * entropy_of_counts(c[0][0], c[0][1])
                    + n1 as f64 * entropy_of_counts(c[1][0], c[1][1])) / leaf.len() as f64;
                parent - child <= 1e-12
            });
            prop_assert!(pure || small || gainless);
        }
    }

    #[test]
    fn metrics_partition_the_test_set(pred in prop::collection::vec(0u8..2, 1..50), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let reference: Vec<u8> = pred.iter().map(|_| rand::Rng::random_range(&mut rng, 0u8..2)).collect();
        let m = evaluate(&pred, &reference, Timings::default()).unwrap();
        prop_assert_eq!(m.correct + m.misdetections + m.false_alarms, pred.len());
        prop_assert!((m.ca - m.correct as f64 / pred.len() as f64).abs() < 1e-15);
    }

    #[test]
    fn stepwise_sse_never_rises(rows in binary_rows(40, 6)) {
        let d = Dataset::from_rows(&rows.0, &rows.1).unwrap();
        let m = LrModel::fit_with(&d, 6, 0.0).unwrap();
        prop_assert!(m.sse_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn fits_are_deterministic(rows in binary_rows(40, 5)) {
        let d = Dataset::from_rows(&rows.0, &rows.1).unwrap();
        let nbc = NbcModel::fit(&d, NbcKernel::Bernoulli);
        prop_assert_eq!(nbc.predict(d.features()), NbcModel::fit(&d, NbcKernel::Bernoulli).predict(d.features()));
        prop_assert_eq!(DtModel::fit(&d, 3), DtModel::fit(&d, 3));
        prop_assert_eq!(LrModel::fit(&d, 15).unwrap(), LrModel::fit(&d, 15).unwrap());
        prop_assert_eq!(SvmModel::fit(&d, 1.0).unwrap(), SvmModel::fit(&d, 1.0).unwrap());
    }

    #[test]
    fn estimated_hmm_rows_are_stochastic(
        pairs in prop::collection::vec((0usize..2, 0usize..4), 2..80),
        alpha in 0.0f64..2.0,
    ) {
        let states = StateSequence(pairs.iter().map(|p| p.0).collect());
        let obs = ObservationSequence(pairs.iter().map(|p| p.1).collect());
        let m = estimate_hmm_with(&states, &obs, 4, alpha).unwrap();
        prop_assert!(m.validate().is_ok());
        for row in m.transition.iter().chain(&m.emission).chain(std::iter::once(&m.initial)) {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= STOCHASTIC_TOLERANCE * 10.0);
            prop_assert!(row.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }

    #[test]
    fn outage_stays_in_unit_interval(
        labels in prop::collection::vec(0u8..2, 1..40),
        seed in any::<u64>(),
        out_su in 1usize..6,
        complement in any::<bool>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let occ = OccupancyVector(labels.iter().map(|_| rand::Rng::random::<f64>(&mut rng)).collect());
        let p = PuLabelVector(labels);
        let mode = if complement { OutageMode::Complement } else { OutageMode::AsWritten };
        let r = su_outage_probability(&p, &occ, out_su, OutageOptions { mode, inclusive: true }).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.p_outage));
        let no_blocks = find_free_blocks(&p, out_su).unwrap().is_empty();
        if no_blocks {
            prop_assert_eq!(r.p_outage, 1.0);
        }
    }
}

#[test]
fn svm_separates_random_separable_sets() {
    for seed in 0..8u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = 6;
        let w: Vec<f64> = (0..k)
            .map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0))
            .collect();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        while rows.len() < 40 {
            let r: Vec<u8> = (0..k)
                .map(|_| rand::Rng::random_range(&mut rng, 0u8..2))
                .collect();
            let s: f64 = r.iter().zip(&w).map(|(&x, wi)| x as f64 * wi).sum::<f64>() - 0.1;
            if s.abs() > 0.05 {
                labels.push(u8::from(s > 0.0));
                rows.push(r);
            }
        }
        if labels.iter().all(|&l| l == labels[0]) {
            continue;
        }
        let d = Dataset::from_rows(&rows, &labels).unwrap();
        let m = SvmModel::fit(&d, 1e4).unwrap();
        assert_eq!(m.predict_rows(d.rows()), labels, "seed {seed}");
    }
}

#[test]
fn generator_is_bit_identical_per_seed() {
    let cfg = GeneratorConfig::group_a(
        ActivityPattern::Aperiodic {
            occupancy_rate: 0.4,
        },
        9,
    );
    let a = generate_synthetic(&cfg, 200, &band(16)).unwrap();
    let b = generate_synthetic(&cfg, 200, &band(16)).unwrap();
    assert_eq!(a.0.values(), b.0.values());
    assert_eq!(a.1, b.1);
    assert_eq!(a.0.values().len(), 200 * 16);
}

#[test]
fn uniform_hmm_is_a_valid_model() {
    let m = HmmModel::uniform(3);
    assert!(m.validate().is_ok());
    assert_eq!(m.n_symbols(), 3);
    assert!(matches!(
        specocc::hmm::viterbi(&m, &ObservationSequence(vec![0, 1, 2]))
            .unwrap()
            .states
            .0[..],
        [0, 0, 0]
    ));
}
