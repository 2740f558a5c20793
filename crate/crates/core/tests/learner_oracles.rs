mod common;

use bandswitch::learner::cv::class_weights;
use bandswitch::learner::gbt::fit_gbt;
use bandswitch::learner::mlp::{fit_mlp, Mlp};
use bandswitch::learner::{
    gbt_grid, mlp_grid, train_gbt, train_mlp, FeatureMode, FeatureRow, GbtHyperparams, MlpHyperparams, TrainedModel,
    TrainingContext, NUM_FEATURES,
};
use common::{finite_difference_error, split_mismatches, toy, weighting_vs_duplication};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn feature_rows(n: usize, seed: u64) -> Vec<FeatureRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut x = [0.0; NUM_FEATURES];
            x[0] = 1.0;
            x[1] = rng.gen_range(0.0..5e6);
            x[2] = rng.gen_range(0.0..2e7);
            x[4] = rng.gen_range(-50.0..50.0);
            x[5] = rng.gen_range(-50.0..50.0);
            x[7] = 1.0;
            FeatureRow { x, y: x[2] > 4.0 * x[1] }
        })
        .collect()
}

fn ctx() -> TrainingContext {
    TrainingContext { feature_mode: FeatureMode::Full, partition_id: 3, folds: 3, seed: 11 }
}

#[test]
fn backprop_matches_finite_differences() {
    let e = finite_difference_error();
    assert!(e < 1e-4, "{e}");
}

#[test]
fn upweighting_equals_duplication() {
    let (cos, gap) = weighting_vs_duplication(3);
    assert!(cos > 1.0 - 1e-12, "cosine {cos}");
    assert!(gap < 1e-12, "{gap}");
}

#[test]
fn best_split_matches_brute_force() {
    assert_eq!(split_mismatches(200), 0);
}

#[test]
fn reported_loss_matches_mean_loss() {
    let (x, y) = toy(20, 2);
    let w = vec![1.0; 20];
    let rows: Vec<usize> = (0..20).collect();
    let net = Mlp::new(2, 2, 4, &mut ChaCha8Rng::seed_from_u64(0));
    let (l, _) = net.loss_and_gradient(&x, &y, &w, &rows);
    assert!((l - net.mean_loss(&x, &y, &w, &rows)).abs() < 1e-12);
}

#[test]
fn class_weights_balance_the_classes() {
    let y = [true, false, false, false, true, false, false, false, false, false];
    let (wn, wp) = class_weights(&y).unwrap();
    assert!((2.0 * wp - 8.0 * wn).abs() < 1e-12);
    assert!((2.0 * wp + 8.0 * wn - 10.0).abs() < 1e-9);
}

#[test]
fn training_loss_decreases_over_ten_epoch_windows() {
    let (x, y) = toy(200, 4);
    let w = vec![1.0; 200];
    let rows: Vec<usize> = (0..200).collect();
    let params =
        MlpHyperparams { depth: 1, width: 5, learning_rate: 0.01, epochs: 150, batch_size: 200, patience: 10, seed: 0 };
    let fit = fit_mlp(&x, 2, &y, &w, &rows, None, &params).unwrap();
    let h = &fit.train_history;
    assert_eq!(h.len(), 150);
    for e in 0..h.len() - 10 {
        assert!(h[e + 10] <= h[e], "epoch {e}: {} -> {}", h[e], h[e + 10]);
    }
    assert!(h[h.len() - 1] < 0.5 * h[0]);
}

#[test]
fn boosting_fits_a_separable_set() {
    let (x, y) = toy(300, 6);
    let w = vec![1.0; 300];
    let rows: Vec<usize> = (0..300).collect();
    let p = GbtHyperparams { n_trees: 40, subsample: 1.0, ..GbtHyperparams::default() };
    let model = fit_gbt(&x, 2, &y, &w, &rows, &p).unwrap();
    let errors = rows.iter().filter(|&&r| (model.score(&x[r * 2..r * 2 + 2]) >= 0.5) != y[r]).count();
    assert!(errors <= 6, "{errors} training errors");
}

#[test]
fn training_is_deterministic() {
    let rows = feature_rows(150, 7);
    let grid = vec![MlpHyperparams { epochs: 40, ..MlpHyperparams::default() }];
    let a = train_mlp(&rows, &grid, ctx()).unwrap().to_json().unwrap();
    let b = train_mlp(&rows, &grid, ctx()).unwrap().to_json().unwrap();
    assert_eq!(a, b);
    let ggrid = vec![GbtHyperparams { n_trees: 10, ..GbtHyperparams::default() }];
    let a = train_gbt(&rows, &ggrid, ctx()).unwrap().to_json().unwrap();
    let b = train_gbt(&rows, &ggrid, ctx()).unwrap().to_json().unwrap();
    assert_eq!(a, b);
}

#[test]
fn model_json_roundtrip_preserves_predictions() {
    let rows = feature_rows(150, 8);
    let models = [
        train_mlp(&rows, &mlp_grid(&MlpHyperparams { epochs: 30, ..MlpHyperparams::default() })[..2], ctx()).unwrap(),
        train_gbt(&rows, &gbt_grid(&GbtHyperparams { n_trees: 8, ..GbtHyperparams::default() })[..2], ctx()).unwrap(),
    ];
    for m in models {
        let back = TrainedModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back.kind, m.kind);
        assert_eq!(back.partition_id, 3);
        assert_eq!(back.predict(&rows).unwrap(), m.predict(&rows).unwrap());
    }
}

#[test]
fn invalidated_model_refuses_to_predict() {
    let rows = feature_rows(60, 9);
    let grid = vec![GbtHyperparams { n_trees: 4, ..GbtHyperparams::default() }];
    let mut m = train_gbt(&rows, &grid, ctx()).unwrap();
    m.invalidate();
    m.invalidate();
    assert!(!m.is_valid());
    assert!(m.predict(&rows).is_err());
    let back = TrainedModel::from_json(&m.to_json().unwrap()).unwrap();
    assert!(back.predict(&rows).is_err());
}

#[test]
fn malformed_model_json_rejected() {
    for text in ["", "{}", "[1,2]", r#"{"format":"x","version":1}"#] {
        assert!(TrainedModel::from_json(text).is_err(), "{text}");
    }
}

#[test]
fn single_class_learn_set_is_an_error() {
    let rows: Vec<FeatureRow> = feature_rows(40, 10).into_iter().map(|r| FeatureRow { y: false, ..r }).collect();
    assert!(train_mlp(&rows, &[MlpHyperparams::default()], ctx()).is_err());
    assert!(train_gbt(&rows, &[GbtHyperparams::default()], ctx()).is_err());
}
