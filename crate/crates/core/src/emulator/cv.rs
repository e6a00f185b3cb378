//! k-fold cross-validation over a ladder of training sizes.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{nrmse, Dataset, DatasetRow, EmulatorModel, ModelSpec, OutputKind};
use crate::error::{Error, Result};
use crate::rng::{stream, substream};

/// Score of one (training size, output) cell, aggregated over folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvEntry {
    pub training_size: usize,
    pub output: OutputKind,
    pub nrmse_mean: f64,
    /// Sample standard deviation across folds.
    pub nrmse_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: usize,
    pub entries: Vec<CvEntry>,
}

impl CvReport {
    pub fn entry(&self, training_size: usize, output: OutputKind) -> Option<&CvEntry> {
        self.entries
            .iter()
            .find(|e| e.training_size == training_size && e.output == output)
    }
}

/// Deterministic fold assignment: shuffle `0..n_rows` with the seed's
/// substream 0, then cut into `folds` contiguous chunks (the first
/// `n_rows % folds` chunks get one extra row). The chunks partition the
/// row indices exactly.
pub fn shuffled_folds(n_rows: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || folds > n_rows {
        return Err(Error::InvalidArgument(format!(
            "folds must lie in [2, {n_rows}], got {folds}"
        )));
    }
    let mut perm: Vec<usize> = (0..n_rows).collect();
    perm.shuffle(&mut stream(substream(seed, 0)));

    let base = n_rows / folds;
    let extra = n_rows % folds;
    let mut chunks = Vec::with_capacity(folds);
    let mut at = 0;
    for f in 0..folds {
        let len = base + usize::from(f < extra);
        chunks.push(perm[at..at + len].to_vec());
        at += len;
    }
    Ok(chunks)
}

/// Cross-validates a model recipe at each training size.
///
/// For every size and fold, the model trains on the first `size` rows of
/// the remaining folds (concatenated in fold order) and scores nRMSE per
/// output on the held-out fold. Cell `(size index si, fold f)` trains with
/// seed `substream(seed, 1 + si*folds + f)`.
pub fn cross_validate(
    dataset: &Dataset,
    spec: &ModelSpec,
    folds: usize,
    training_sizes: &[usize],
    seed: u64,
) -> Result<CvReport> {
    let n = dataset.len();
    if training_sizes.is_empty() {
        return Err(Error::EmptyInput("no training sizes requested".into()));
    }
    if !training_sizes.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument(
            "training sizes must be strictly increasing".into(),
        ));
    }
    let max_pool = n - n.div_ceil(folds);
    let max_size = *training_sizes.last().unwrap();
    if max_size > max_pool {
        return Err(Error::InvalidArgument(format!(
            "training size {max_size} exceeds the {max_pool} rows available with \
             {folds} folds over {n} rows"
        )));
    }

    let chunks = shuffled_folds(n, folds, seed)?;
    let mut entries = Vec::with_capacity(training_sizes.len() * 2);
    for (si, &size) in training_sizes.iter().enumerate() {
        let mut scores = [Vec::with_capacity(folds), Vec::with_capacity(folds)];
        for f in 0..folds {
            let pool: Vec<usize> = chunks
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != f)
                .flat_map(|(_, c)| c.iter().copied())
                .collect();
            let train_rows: Vec<DatasetRow> =
                pool[..size].iter().map(|&i| dataset.rows[i].clone()).collect();
            let cell_seed = substream(seed, 1 + (si * folds + f) as u64);
            let model = EmulatorModel::train(&train_rows, spec, cell_seed)?;

            let mut y = [Vec::new(), Vec::new()];
            let mut y_hat = [Vec::new(), Vec::new()];
            for &i in &chunks[f] {
                let row = &dataset.rows[i];
                let (mean, p5) = model.predict(&row.input)?;
                y[0].push(OutputKind::MeanDb.target(row));
                y[1].push(OutputKind::P5Db.target(row));
                y_hat[0].push(mean);
                y_hat[1].push(p5);
            }
            for o in 0..2 {
                scores[o].push(nrmse(&y[o], &y_hat[o])?);
            }
        }
        for (o, kind) in OutputKind::ALL.into_iter().enumerate() {
            let m = scores[o].iter().sum::<f64>() / folds as f64;
            let var =
                scores[o].iter().map(|s| (s - m) * (s - m)).sum::<f64>() / (folds - 1) as f64;
            entries.push(CvEntry {
                training_size: size,
                output: kind,
                nrmse_mean: m,
                nrmse_std: var.sqrt(),
            });
        }
    }
    Ok(CvReport { folds, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_partition_the_indices() {
        for (n, folds) in [(10, 2), (11, 3), (23, 5)] {
            let chunks = shuffled_folds(n, folds, 4).unwrap();
            assert_eq!(chunks.len(), folds);
            let mut all: Vec<usize> = chunks.iter().flatten().copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
        assert!(shuffled_folds(3, 1, 0).is_err());
        assert!(shuffled_folds(3, 4, 0).is_err());
    }

    #[test]
    fn oversized_training_requests_fail() {
        let rows: Vec<DatasetRow> = (0..10)
            .map(|i| {
                let t = i as f64 / 9.0;
                crate::emulator::tests::toy_row(
                    [0.3 + 0.7 * t, 0.3 + 0.5 * t, t, 2.0 - t],
                    10.0 + t,
                    3.0,
                    i,
                )
            })
            .collect();
        let ds = Dataset::new(rows).unwrap();
        let spec = ModelSpec::Knn { k: 1 };
        assert!(cross_validate(&ds, &spec, 5, &[9], 0).is_err());
        assert!(cross_validate(&ds, &spec, 5, &[4, 4], 0).is_err());
        assert!(cross_validate(&ds, &spec, 5, &[], 0).is_err());
        assert!(cross_validate(&ds, &spec, 5, &[4, 8], 0).is_ok());
    }
}
