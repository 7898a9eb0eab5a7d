use forge_core::matrix::DesignMatrix;
use forge_core::metrics::{mse, r_squared};
use forge_core::models::{fit_forest, fit_gboost_traced, fit_tree, BoostVariant, HyperParams, MaxFeatures};
use forge_core::tuning::{k_fold_split, CvScheme};
use proptest::prelude::*;

fn dataset() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (2usize..40, 1usize..4).prop_flat_map(|(n, p)| {
        (
            proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, p), n),
            proptest::collection::vec(-100.0f64..100.0, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn single_tree_forest_matches_tree((rows, y) in dataset()) {
        let x = DesignMatrix::from_rows(&rows).unwrap();
        let params = HyperParams {
            n_estimators: 1,
            bootstrap: false,
            max_features: MaxFeatures::All,
            ..HyperParams::forest_default()
        };
        let forest = fit_forest(&x, &y, &params, 3).unwrap();
        let tree = fit_tree(&x, &y, &params, None).unwrap();
        prop_assert_eq!(forest.predict(&x).unwrap(), tree.predict(&x).unwrap());
    }

    #[test]
    fn forest_predictions_stay_in_target_range((rows, y) in dataset(), seed in 0u64..100) {
        let x = DesignMatrix::from_rows(&rows).unwrap();
        let params = HyperParams { n_estimators: 8, ..HyperParams::forest_default() };
        let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for p in fit_forest(&x, &y, &params, seed).unwrap().predict(&x).unwrap() {
            prop_assert!(p >= lo - 1e-9 && p <= hi + 1e-9);
        }
    }

    #[test]
    fn full_depth_tree_fits_distinct_rows((rows, y) in dataset()) {
        let mut seen = std::collections::HashSet::new();
        prop_assume!(rows.iter().all(|r| seen.insert(r.iter().map(|v| v.to_bits()).collect::<Vec<_>>())));
        let x = DesignMatrix::from_rows(&rows).unwrap();
        let tree = fit_tree(&x, &y, &HyperParams::forest_default(), None).unwrap();
        prop_assert_eq!(tree.predict(&x).unwrap(), y);
    }

    #[test]
    fn boosting_training_loss_never_increases(
        (rows, y) in dataset(),
        lr in 0.05f64..=1.0,
        depth in 1usize..4,
        lambda in 0.0f64..5.0,
    ) {
        let x = DesignMatrix::from_rows(&rows).unwrap();
        let params = HyperParams {
            n_estimators: 25,
            max_depth: Some(depth),
            learning_rate: lr,
            ..HyperParams::boosting_default()
        };
        let (model, trace) = fit_gboost_traced(&x, &y, &params, 0, BoostVariant::Plain).unwrap();
        for w in trace.windows(2) {
            prop_assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
        }
        let last = mse(&y, &model.predict(&x).unwrap()).unwrap() * y.len() as f64;
        prop_assert!((last - trace[trace.len() - 1]).abs() <= 1e-9 * last.max(1.0));

        // shrunken leaves can only reduce each step's move; the loss still cannot rise
        let (_, reg) = fit_gboost_traced(&x, &y, &params, 0, BoostVariant::Regularized { lambda }).unwrap();
        for w in reg.windows(2) {
            prop_assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn k_fold_partitions_rows(n in 2usize..200, k in 2usize..10, shuffle: bool, seed: u64) {
        prop_assume!(k <= n);
        let folds = k_fold_split(n, &CvScheme { k, shuffle, seed }).unwrap();
        let mut seen = vec![0; n];
        for f in &folds {
            prop_assert_eq!(f.train.len() + f.validation.len(), n);
            for &i in &f.validation {
                seen[i] += 1;
            }
            let sizes = (n / k, n.div_ceil(k));
            prop_assert!(f.validation.len() == sizes.0 || f.validation.len() == sizes.1);
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn r_squared_of_perfect_prediction_is_one(y in proptest::collection::vec(0.0f64..1e3, 2..50)) {
        prop_assume!(y.iter().any(|v| *v != y[0]));
        prop_assert_eq!(r_squared(&y, &y).unwrap(), 1.0);
        prop_assert_eq!(mse(&y, &y).unwrap(), 0.0);
    }
}
