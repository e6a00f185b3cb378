//! Shared fixtures for the pipeline benchmarks.

use rand_pcg::Pcg64Mcg;
use thinarray_core::emulator::{Dataset, DatasetRow};
use thinarray_core::net_sim::{InputConfig, SinrStats};
use thinarray_core::rng::standard_normal;

/// Synthetic dataset with the simulator's rough response shape, cheap
/// enough to rebuild at benchmark startup.
pub fn synthetic_dataset(n: usize, seed: u64) -> Dataset {
    let mut rng = <Pcg64Mcg as rand::SeedableRng>::seed_from_u64(seed);
    let rows: Vec<DatasetRow> = (0..n)
        .map(|i| {
            let input = InputConfig::sample_uniform(&mut rng);
            let mean = 17.0 + 2.0 * (input.alpha_y / 4.0).tanh() - 0.5 * (input.alpha_z / 5.0).powi(2)
                + 0.3 * standard_normal(&mut rng);
            let p5 = mean - 25.0 + 0.5 * standard_normal(&mut rng);
            DatasetRow {
                input,
                output: SinrStats {
                    mean_db: mean,
                    p5_db: p5,
                    n_samples: 1000,
                    samples: None,
                },
                seed: i as u64,
            }
        })
        .collect();
    Dataset::new(rows).expect("synthetic rows are valid")
}

/// In-bounds probe points for prediction benchmarks.
pub fn probe_inputs(n: usize, seed: u64) -> Vec<InputConfig> {
    let mut rng = <Pcg64Mcg as rand::SeedableRng>::seed_from_u64(seed);
    (0..n).map(|_| InputConfig::sample_uniform(&mut rng)).collect()
}
