//! Network-level design toolkit for thinned antenna arrays.
//!
//! The pipeline has three stages. A Monte Carlo downlink simulator scores a
//! four-parameter family of randomly thinned arrays in a simplified urban
//! micro-cell deployment ([`net_sim`]), fast regression emulators learn the
//! simulator's input-output map ([`emulator`]), and a derivative-free search
//! maximizes predicted mean SINR over the emulator subject to a coverage
//! floor on the 5th-percentile SINR ([`optimizer`]).
//!
//! Array generation ([`array_gen`]) and per-direction beamforming gain
//! ([`beam_model`]) are the building blocks shared by all stages.
//!
//! Every randomized operation takes an explicit 64-bit seed and derives
//! substreams with [`rng::substream`], so results are bitwise reproducible
//! regardless of thread count.

pub mod array_gen;
pub mod beam_model;
pub mod emulator;
pub mod error;
pub mod net_sim;
pub mod optimizer;
pub mod rng;

pub use array_gen::{ActivationMask, ArrayGeometry, LatticeSpec, ProbabilityProfile};
pub use emulator::{Dataset, DatasetRow, EmulatorModel};
pub use error::{Error, Result};
pub use net_sim::{InputConfig, NetworkConfig, SinrStats};
pub use optimizer::{Bounds, OptimizationResult};
