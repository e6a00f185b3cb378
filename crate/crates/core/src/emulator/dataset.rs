//! Simulated training data: one row per (input, seed) simulation run.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net_sim::{simulate, InputConfig, NetworkConfig, SinrStats};
use crate::rng::{stream, substream};

/// One simulated design point. `output.n_samples` records the Monte Carlo
/// iteration count; `seed` is the exact seed passed to the simulator, so
/// every row can be reproduced from its own fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub input: InputConfig,
    pub output: SinrStats,
    pub seed: u64,
}

/// A collection of simulated rows with validated inputs and no duplicate
/// (seed, input) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rows: Vec<DatasetRow>,
}

impl Dataset {
    pub fn new(rows: Vec<DatasetRow>) -> Result<Self> {
        let mut seen: HashSet<(u64, [u64; 4])> = HashSet::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            row.input.validate()?;
            if row.output.n_samples == 0 {
                return Err(Error::InvalidArgument(format!("row {i} has no samples")));
            }
            let key = (row.seed, row.input.to_array().map(f64::to_bits));
            if !seen.insert(key) {
                return Err(Error::InvalidArgument(format!(
                    "row {i} duplicates an earlier (seed, input) pair"
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Simulates `n_configs` inputs drawn uniformly over the admissible box.
///
/// Row `i` derives from `substream(master_seed, i)`: substream 0 feeds the
/// input draw and substream 1 seeds the simulation. The recorded row seed
/// is the simulation seed.
pub fn generate_dataset(
    cfg: &NetworkConfig,
    lattice_dims: (usize, usize),
    n_active: usize,
    n_configs: usize,
    n_iter: usize,
    master_seed: u64,
) -> Result<Dataset> {
    if n_configs == 0 {
        return Err(Error::InvalidArgument("n_configs must be >= 1".into()));
    }
    let mut rows = Vec::with_capacity(n_configs);
    for i in 0..n_configs {
        let row_seed = substream(master_seed, i as u64);
        let mut rng = stream(substream(row_seed, 0));
        let input = InputConfig::sample_uniform(&mut rng);
        let sim_seed = substream(row_seed, 1);
        let mut output = simulate(&input, cfg, lattice_dims, n_active, n_iter, sim_seed)?;
        output.samples = None;
        rows.push(DatasetRow {
            input,
            output,
            seed: sim_seed,
        });
    }
    Dataset::new(rows)
}
