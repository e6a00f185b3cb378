//! Cross-validation oracles and emulator invariants.

use rand::Rng;
use rand_pcg::Pcg64Mcg;
use thinarray_core::emulator::{
    cross_validate, fit_scaler, shuffled_folds, Dataset, DatasetRow, EmulatorModel, ForestParams,
    ModelSpec, OutputKind,
};
use thinarray_core::net_sim::{InputConfig, SinrStats};
use thinarray_core::rng::standard_normal;

fn row(input: [f64; 4], mean_db: f64, p5_db: f64, seed: u64) -> DatasetRow {
    DatasetRow {
        input: InputConfig::from_array(input).unwrap(),
        output: SinrStats {
            mean_db,
            p5_db,
            n_samples: 1,
            samples: None,
        },
        seed,
    }
}

/// Synthetic reference dataset: a smooth saturating response of the four
/// inputs plus Gaussian observation noise, mimicking the simulator's shape.
fn synthetic_dataset(n: usize, noise: f64, seed: u64) -> Dataset {
    let mut rng = <Pcg64Mcg as rand::SeedableRng>::seed_from_u64(seed);
    let rows: Vec<DatasetRow> = (0..n)
        .map(|i| {
            let input = InputConfig::sample_uniform(&mut rng);
            let mean = 20.0 + 6.0 * (input.alpha_y / 3.0).tanh() - 1.5 * (input.alpha_z / 5.0).powi(2)
                + 2.0 * (input.d_z - 0.6)
                + noise * standard_normal(&mut rng);
            let p5 = mean - 12.0 + 1.5 * (input.alpha_y / 4.0).tanh()
                + noise * standard_normal(&mut rng);
            row(input.to_array(), mean, p5, i as u64)
        })
        .collect();
    Dataset::new(rows).unwrap()
}

#[test]
fn leakage_dataset_scores_zero_with_exact_neighbors() {
    // The target is a pure function of the input and every input appears
    // sixteen times under different seeds, so each held-out row has an
    // exact twin within the truncated training pool; 1-NN must return the
    // twin's target.
    let mut rows = Vec::new();
    for i in 0..3 {
        let t = i as f64 / 2.0;
        let input = [0.3 + 0.7 * t, 1.0 - 0.6 * t, -1.0 + 11.0 * t, 10.0 - 10.5 * t];
        for copy in 0..16 {
            rows.push(row(input, 5.0 + 30.0 * t, -2.0 + 10.0 * t, (i * 100 + copy) as u64));
        }
    }
    let ds = Dataset::new(rows).unwrap();
    let report = cross_validate(&ds, &ModelSpec::Knn { k: 1 }, 2, &[12, 24], 3).unwrap();
    for entry in &report.entries {
        assert!(
            entry.nrmse_mean < 1e-9,
            "size {} output {} scored {}",
            entry.training_size,
            entry.output,
            entry.nrmse_mean
        );
    }
}

#[test]
fn two_fold_report_matches_hand_evaluation() {
    // Four rows, two folds, 1-NN, training size 2: recompute the whole
    // report with freestanding arithmetic from the published fold split.
    let inputs = [
        [0.30, 0.90, -1.0, 9.0],
        [0.50, 0.70, 2.0, 6.0],
        [0.70, 0.50, 5.0, 3.0],
        [0.90, 0.30, 8.0, 0.0],
    ];
    let means = [10.0, 14.0, 19.0, 27.0];
    let p5s = [1.0, 3.0, 6.0, 11.0];
    let rows: Vec<DatasetRow> = (0..4).map(|i| row(inputs[i], means[i], p5s[i], i as u64)).collect();
    let ds = Dataset::new(rows).unwrap();

    let seed = 12;
    let folds = shuffled_folds(4, 2, seed).unwrap();
    let report = cross_validate(&ds, &ModelSpec::Knn { k: 1 }, 2, &[2], seed).unwrap();

    // Hand evaluation. For each fold: standardize the two training rows
    // (each feature maps to +/- 1/sqrt(2)), classify each test row to the
    // nearer training row, and take relative errors.
    let mut fold_scores = [[0.0f64; 2]; 2]; // [fold][output]
    for (f, test_idx) in folds.iter().enumerate() {
        let train_idx = &folds[1 - f];
        let (a, b) = (train_idx[0], train_idx[1]);
        let mut sq_rel = [Vec::new(), Vec::new()];
        for &t in test_idx {
            // Distance in standardized space: feature j maps x to
            // (x - mean_j) / std_j over the two training values.
            let mut da = 0.0;
            let mut db = 0.0;
            for j in 0..4 {
                let m = (inputs[a][j] + inputs[b][j]) / 2.0;
                let s = ((inputs[a][j] - m).powi(2) + (inputs[b][j] - m).powi(2)).sqrt(); // n-1 = 1
                let q = (inputs[t][j] - m) / s;
                let xa = (inputs[a][j] - m) / s;
                let xb = (inputs[b][j] - m) / s;
                da += (q - xa) * (q - xa);
                db += (q - xb) * (q - xb);
            }
            let nearest = if da <= db { a } else { b };
            sq_rel[0].push(((means[t] - means[nearest]) / means[t]).powi(2));
            sq_rel[1].push(((p5s[t] - p5s[nearest]) / p5s[t]).powi(2));
        }
        for o in 0..2 {
            let m = sq_rel[o].iter().sum::<f64>() / sq_rel[o].len() as f64;
            fold_scores[f][o] = m.sqrt();
        }
    }

    for (o, kind) in OutputKind::ALL.into_iter().enumerate() {
        let expected_mean = (fold_scores[0][o] + fold_scores[1][o]) / 2.0;
        let expected_std = {
            let m = expected_mean;
            (((fold_scores[0][o] - m).powi(2) + (fold_scores[1][o] - m).powi(2)) / 1.0).sqrt()
        };
        let entry = report.entry(2, kind).unwrap();
        assert!(
            (entry.nrmse_mean - expected_mean).abs() < 1e-12,
            "{kind}: {} vs {}",
            entry.nrmse_mean,
            expected_mean
        );
        assert!((entry.nrmse_std - expected_std).abs() < 1e-12);
    }
}

#[test]
fn ridge_predictions_survive_affine_feature_rescaling() {
    // Rescaling raw features is absorbed by the scaler, so the fitted
    // pipeline predicts identically.
    let mut rng = <Pcg64Mcg as rand::SeedableRng>::seed_from_u64(8);
    let raw: Vec<Vec<f64>> = (0..30)
        .map(|_| (0..3).map(|_| rng.gen::<f64>() * 10.0 - 5.0).collect())
        .collect();
    let y: Vec<f64> = raw
        .iter()
        .map(|r| 4.0 + 2.0 * r[0] - r[1] + 0.3 * r[2] + 0.01 * r[0] * r[0])
        .collect();
    let scales = [7.3, -0.2, 55.0];
    let shifts = [1.0, -44.0, 0.003];
    let rescaled: Vec<Vec<f64>> = raw
        .iter()
        .map(|r| (0..3).map(|j| r[j] * scales[j] + shifts[j]).collect())
        .collect();

    let fit_pipeline = |x: &[Vec<f64>]| {
        let scaler = fit_scaler(x).unwrap();
        let x_std: Vec<Vec<f64>> = x.iter().map(|r| scaler.transform(r)).collect();
        (scaler, thinarray_core::emulator::ridge_fit(&x_std, &y, 1.0).unwrap())
    };
    let (scaler_a, head_a) = fit_pipeline(&raw);
    let (scaler_b, head_b) = fit_pipeline(&rescaled);

    for probe in raw.iter().take(10) {
        let scaled_probe: Vec<f64> = (0..3).map(|j| probe[j] * scales[j] + shifts[j]).collect();
        let pa = head_a.predict(&scaler_a.transform(probe));
        let pb = head_b.predict(&scaler_b.transform(&scaled_probe));
        assert!((pa - pb).abs() < 1e-9, "{pa} vs {pb}");
    }
}

#[test]
fn forest_learning_curve_trends_down() {
    let ds = synthetic_dataset(1000, 0.25, 21);
    let spec = ModelSpec::RandomForest(ForestParams {
        n_trees: 50,
        ..ForestParams::default()
    });
    let report = cross_validate(&ds, &spec, 5, &[100, 800], 2).unwrap();
    let small = report.entry(100, OutputKind::MeanDb).unwrap().nrmse_mean;
    let large = report.entry(800, OutputKind::MeanDb).unwrap().nrmse_mean;
    assert!(large <= small, "nRMSE grew from {small} at 100 to {large} at 800");
}

#[test]
fn forest_residuals_center_on_zero() {
    let ds = synthetic_dataset(1000, 0.25, 22);
    let train: Vec<DatasetRow> = ds.rows[..500].to_vec();
    let spec = ModelSpec::RandomForest(ForestParams {
        n_trees: 100,
        ..ForestParams::default()
    });
    let model = EmulatorModel::train(&train, &spec, 5).unwrap();
    let residuals: Vec<f64> = ds.rows[500..]
        .iter()
        .map(|r| r.output.mean_db - model.predict(&r.input).unwrap().0)
        .collect();
    let n = residuals.len() as f64;
    let mean = residuals.iter().sum::<f64>() / n;
    let var = residuals.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0);
    let standard_error = (var / n).sqrt();
    assert!(
        mean.abs() <= 3.0 * standard_error,
        "residual mean {mean} vs standard error {standard_error}"
    );
}

#[test]
fn model_training_is_bitwise_reproducible() {
    let ds = synthetic_dataset(60, 0.5, 14);
    let spec = ModelSpec::RandomForest(ForestParams {
        n_trees: 20,
        ..ForestParams::default()
    });
    let a = EmulatorModel::train(&ds.rows, &spec, 77).unwrap();
    let b = EmulatorModel::train(&ds.rows, &spec, 77).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
}
