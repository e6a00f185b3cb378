//! Regression emulators of the simulator.
//!
//! An [`EmulatorModel`] maps an [`InputConfig`] to predictions of both
//! simulator outputs (mean SINR and 5th-percentile SINR, in dB), modeled as
//! two independent scalar regressions that share one feature scaler. Three
//! model kinds are available: closed-form ridge regression, random forests
//! of variance-reduction trees, and an inverse-distance-weighted k-NN
//! baseline. Accuracy is scored with the relative nRMSE metric under k-fold
//! cross-validation at a ladder of training sizes, which is how the forest
//! earns its place as the default emulator.

mod cv;
mod dataset;
mod forest;
mod knn;
mod ridge;

pub use cv::{cross_validate, shuffled_folds, CvEntry, CvReport};
pub use dataset::{generate_dataset, Dataset, DatasetRow};
pub use forest::{fit as forest_fit, ForestHead, ForestParams, Node, Tree};
pub use knn::{fit as knn_fit, KnnHead};
pub use ridge::{fit as ridge_fit, RidgeHead};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net_sim::InputConfig;
use crate::rng::substream;

/// Version tag of persisted model documents.
pub const MODEL_FILE_VERSION: u64 = 1;

/// nRMSE rejects reference values with magnitude below this.
pub const NRMSE_REFERENCE_EPS: f64 = 1e-6;

/// Which simulator output a scalar regression predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    MeanDb,
    P5Db,
}

impl OutputKind {
    pub const ALL: [OutputKind; 2] = [OutputKind::MeanDb, OutputKind::P5Db];

    pub fn target(&self, row: &DatasetRow) -> f64 {
        match self {
            OutputKind::MeanDb => row.output.mean_db,
            OutputKind::P5Db => row.output.p5_db,
        }
    }
}

impl std::fmt::Display for OutputKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OutputKind::MeanDb => write!(f, "mean_db"),
            OutputKind::P5Db => write!(f, "p5_db"),
        }
    }
}

/// Relative root-mean-square error: `sqrt(mean(((y - y_hat) / y)^2))`.
///
/// References with `|y| < 1e-6` make the relative error meaningless, so
/// they raise an error for the caller to report instead of being clamped.
pub fn nrmse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(Error::DimensionMismatch(format!(
            "nrmse over {} references vs {} predictions",
            y.len(),
            y_hat.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::EmptyInput("nrmse of no samples".into()));
    }
    let mut acc = 0.0;
    for (index, (&yi, &yhi)) in y.iter().zip(y_hat).enumerate() {
        if yi.abs() < NRMSE_REFERENCE_EPS {
            return Err(Error::NearZeroReference {
                index,
                value: yi,
                eps: NRMSE_REFERENCE_EPS,
            });
        }
        let rel = (yi - yhi) / yi;
        acc += rel * rel;
    }
    Ok((acc / y.len() as f64).sqrt())
}

/// Per-feature standardizer fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Scaler {
    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect()
    }
}

/// Fits a zero-mean, unit-stdev scaler (sample standard deviation).
/// Constant features have no scale and are rejected.
pub fn fit_scaler(rows: &[Vec<f64>]) -> Result<Scaler> {
    if rows.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "scaler needs at least 2 rows, got {}",
            rows.len()
        )));
    }
    let p = rows[0].len();
    let n = rows.len() as f64;
    let mut means = vec![0.0; p];
    for row in rows {
        for (m, &v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut stds = vec![0.0; p];
    for row in rows {
        for ((s, &v), &m) in stds.iter_mut().zip(row).zip(&means) {
            *s += (v - m) * (v - m);
        }
    }
    for (j, s) in stds.iter_mut().enumerate() {
        *s = (*s / (n - 1.0)).sqrt();
        if *s <= 1e-12 * means[j].abs().max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "feature {j} is constant (stdev {s:e}); cannot standardize"
            )));
        }
    }
    Ok(Scaler { means, stds })
}

/// Model kind tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ridge,
    RandomForest,
    Knn,
}

/// Training recipe for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Ridge { lambda: f64 },
    RandomForest(ForestParams),
    Knn { k: usize },
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Ridge { .. } => ModelKind::Ridge,
            ModelSpec::RandomForest(_) => ModelKind::RandomForest,
            ModelSpec::Knn { .. } => ModelKind::Knn,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Head {
    Ridge(RidgeHead),
    Forest(ForestHead),
    Knn(KnnHead),
}

impl Head {
    fn predict(&self, x_std: &[f64]) -> f64 {
        match self {
            Head::Ridge(h) => h.predict(x_std),
            Head::Forest(h) => h.predict(x_std),
            Head::Knn(h) => h.predict(x_std),
        }
    }
}

/// Provenance of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub training_rows: usize,
    pub seed: u64,
}

/// A trained emulator: one scaler plus one regression head per output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmulatorModel {
    pub kind: ModelKind,
    pub scaler: Scaler,
    mean_head: Head,
    p5_head: Head,
    pub meta: TrainingMeta,
}

impl EmulatorModel {
    /// Trains both output heads on `rows`. Head `i` derives its stream from
    /// `substream(seed, i)`; retraining with the same seed reproduces the
    /// model bit for bit.
    pub fn train(rows: &[DatasetRow], spec: &ModelSpec, seed: u64) -> Result<Self> {
        let feats: Vec<Vec<f64>> = rows.iter().map(|r| r.input.to_array().to_vec()).collect();
        let scaler = fit_scaler(&feats)?;
        let x_std: Vec<Vec<f64>> = feats.iter().map(|f| scaler.transform(f)).collect();

        let mut heads = Vec::with_capacity(2);
        for (i, kind) in OutputKind::ALL.iter().enumerate() {
            let y: Vec<f64> = rows.iter().map(|r| kind.target(r)).collect();
            let head_seed = substream(seed, i as u64);
            let head = match spec {
                ModelSpec::Ridge { lambda } => Head::Ridge(ridge::fit(&x_std, &y, *lambda)?),
                ModelSpec::RandomForest(params) => {
                    Head::Forest(forest::fit(&x_std, &y, params, head_seed)?)
                }
                ModelSpec::Knn { k } => Head::Knn(knn::fit(&x_std, &y, *k)?),
            };
            heads.push(head);
        }
        let p5_head = heads.pop().unwrap();
        let mean_head = heads.pop().unwrap();
        Ok(Self {
            kind: spec.kind(),
            scaler,
            mean_head,
            p5_head,
            meta: TrainingMeta {
                training_rows: rows.len(),
                seed,
            },
        })
    }

    /// Predicts `(mean_db, p5_db)` for an in-bounds input.
    pub fn predict(&self, input: &InputConfig) -> Result<(f64, f64)> {
        input.validate()?;
        let x = self.scaler.transform(&input.to_array());
        Ok((self.mean_head.predict(&x), self.p5_head.predict(&x)))
    }

    /// Serializes to a self-describing JSON document with a mandatory
    /// version field.
    pub fn to_json(&self) -> Result<String> {
        let doc = serde_json::json!({ "version": MODEL_FILE_VERSION, "model": self });
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Loads a model document, rejecting unknown versions.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let found = value
            .get("version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Parse("model document lacks a version field".into()))?;
        if found != MODEL_FILE_VERSION {
            return Err(Error::UnsupportedVersion {
                found,
                expected: MODEL_FILE_VERSION,
            });
        }
        let model = value
            .get("model")
            .cloned()
            .ok_or_else(|| Error::Parse("model document lacks a model field".into()))?;
        serde_json::from_value(model).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Ridge regression on standardized features with an unpenalized intercept.
pub fn train_ridge(dataset: &Dataset, lambda: f64) -> Result<EmulatorModel> {
    EmulatorModel::train(&dataset.rows, &ModelSpec::Ridge { lambda }, 0)
}

/// Random forest of variance-reduction regression trees on bootstrap
/// resamples; prediction is the mean of the tree outputs.
pub fn train_random_forest(
    dataset: &Dataset,
    n_trees: usize,
    min_leaf: usize,
    bootstrap: bool,
    seed: u64,
) -> Result<EmulatorModel> {
    let params = ForestParams {
        n_trees,
        min_leaf,
        bootstrap,
    };
    EmulatorModel::train(&dataset.rows, &ModelSpec::RandomForest(params), seed)
}

/// Inverse-distance-weighted k nearest neighbors on standardized features.
pub fn train_knn(dataset: &Dataset, k: usize) -> Result<EmulatorModel> {
    EmulatorModel::train(&dataset.rows, &ModelSpec::Knn { k }, 0)
}
