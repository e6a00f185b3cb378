//! Constrained global search over a surrogate of the simulator.
//!
//! The objective is the predicted mean SINR; the constraint is a floor on
//! the predicted 5th-percentile SINR. Search runs in two phases: uniform
//! random sampling over the bounds box (80% of the evaluation budget),
//! then a projected coordinate pattern search from the incumbent, halving
//! per-axis steps from 10% of each range down to 0.1%. Candidates rank
//! lexicographically: any feasible point beats any infeasible one,
//! feasible points compare by predicted mean, infeasible ones by
//! constraint violation. Everything is deterministic given the seed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array_gen::ArrayGeometry;
use crate::emulator::EmulatorModel;
use crate::error::{Error, Result};
use crate::net_sim::{simulate, simulate_geometry, InputConfig, NetworkConfig};
use crate::rng::{stream, substream};

/// Per-parameter search box in the order `d_y, d_z, alpha_y, alpha_z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub d_y: (f64, f64),
    pub d_z: (f64, f64),
    pub alpha_y: (f64, f64),
    pub alpha_z: (f64, f64),
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            d_y: InputConfig::D_RANGE,
            d_z: InputConfig::D_RANGE,
            alpha_y: InputConfig::ALPHA_RANGE,
            alpha_z: InputConfig::ALPHA_RANGE,
        }
    }
}

impl Bounds {
    pub const AXES: usize = 4;

    pub fn axis(&self, i: usize) -> (f64, f64) {
        [self.d_y, self.d_z, self.alpha_y, self.alpha_z][i]
    }

    pub fn validate(&self) -> Result<()> {
        let canonical = Bounds::default();
        for i in 0..Self::AXES {
            let (lo, hi) = self.axis(i);
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::InvalidArgument(format!(
                    "degenerate bounds on axis {i}: [{lo}, {hi}]"
                )));
            }
            let (clo, chi) = canonical.axis(i);
            if lo < clo || hi > chi {
                return Err(Error::OutOfBounds(format!(
                    "bounds [{lo}, {hi}] on axis {i} exceed the supported domain [{clo}, {chi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, point: &[f64; 4]) -> bool {
        (0..Self::AXES).all(|i| {
            let (lo, hi) = self.axis(i);
            point[i] >= lo && point[i] <= hi
        })
    }

    fn clamp_axis(&self, i: usize, v: f64) -> f64 {
        let (lo, hi) = self.axis(i);
        v.clamp(lo, hi)
    }

    /// Uniform draw over the box; consumes four uniforms in axis order.
    pub fn sample<R: rand::Rng>(&self, rng: &mut R) -> [f64; 4] {
        let mut p = [0.0; 4];
        for (i, v) in p.iter_mut().enumerate() {
            let (lo, hi) = self.axis(i);
            *v = lo + rng.gen::<f64>() * (hi - lo);
        }
        p
    }
}

/// Anything that predicts `(mean_db, p5_db)` for a design point. Trained
/// emulators implement it through [`ModelPair`]; tests inject analytic
/// surrogates.
pub trait SinrSurrogate {
    fn predict_pair(&self, input: &InputConfig) -> Result<(f64, f64)>;
}

/// Two trained models: the mean prediction comes from `mean`, the
/// 5th-percentile prediction from `p5`. Both may reference the same model.
pub struct ModelPair<'a> {
    pub mean: &'a EmulatorModel,
    pub p5: &'a EmulatorModel,
}

impl SinrSurrogate for ModelPair<'_> {
    fn predict_pair(&self, input: &InputConfig) -> Result<(f64, f64)> {
        let mean = self.mean.predict(input)?.0;
        let p5 = self.p5.predict(input)?.1;
        Ok((mean, p5))
    }
}

/// One strict improvement during the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub input: InputConfig,
    pub predicted_mean_db: f64,
    pub predicted_p5_db: f64,
}

/// Outcome of [`optimize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best_input: InputConfig,
    pub predicted_mean_db: f64,
    pub predicted_p5_db: f64,
    /// True when the best point satisfies the constraint; otherwise the
    /// returned point minimizes the constraint violation.
    pub feasible: bool,
    pub evaluations_used: usize,
    pub trace: Vec<TracePoint>,
}

#[derive(Clone, Copy)]
struct Candidate {
    point: [f64; 4],
    mean_db: f64,
    p5_db: f64,
}

impl Candidate {
    fn feasible(&self, threshold_db: f64) -> bool {
        self.p5_db > threshold_db
    }

    /// Lexicographic rank: feasibility first, then mean (feasible) or
    /// negated violation (infeasible).
    fn beats(&self, other: &Candidate, threshold_db: f64) -> bool {
        match (self.feasible(threshold_db), other.feasible(threshold_db)) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => self.mean_db > other.mean_db,
            (false, false) => threshold_db - self.p5_db < threshold_db - other.p5_db,
        }
    }
}

/// Maximizes predicted mean SINR subject to `predicted p5 > threshold_db`.
///
/// Spends `0.8 * budget` evaluations on uniform sampling (sample `i` draws
/// from `substream(seed, i)`, reduced in index order) and the rest on the
/// pattern search. If no feasible point exists anywhere in the search, the
/// violation-minimizing point comes back with `feasible = false`.
pub fn optimize<S: SinrSurrogate + Sync>(
    surrogate: &S,
    bounds: &Bounds,
    threshold_db: f64,
    budget: usize,
    seed: u64,
) -> Result<OptimizationResult> {
    bounds.validate()?;
    if budget == 0 {
        return Err(Error::InvalidArgument("budget must be >= 1".into()));
    }

    let n_random = ((budget as f64 * 0.8).floor() as usize).clamp(1, budget);
    let sampled: Vec<Candidate> = (0..n_random)
        .into_par_iter()
        .map(|i| {
            let point = bounds.sample(&mut stream(substream(seed, i as u64)));
            evaluate(surrogate, point)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut evaluations = n_random;
    let mut trace = Vec::new();
    let mut best = sampled[0];
    push_trace(&mut trace, &best)?;
    for cand in &sampled[1..] {
        if cand.beats(&best, threshold_db) {
            best = *cand;
            push_trace(&mut trace, &best)?;
        }
    }

    // Pattern search: greedy coordinate moves with projected steps, halving
    // on a full pass without improvement.
    let ranges: Vec<f64> = (0..Bounds::AXES)
        .map(|i| {
            let (lo, hi) = bounds.axis(i);
            hi - lo
        })
        .collect();
    let mut steps: Vec<f64> = ranges.iter().map(|r| 0.10 * r).collect();
    let floors: Vec<f64> = ranges.iter().map(|r| 0.001 * r).collect();

    'search: while evaluations < budget && steps.iter().zip(&floors).any(|(s, f)| s >= f) {
        let mut improved = false;
        for axis in 0..Bounds::AXES {
            for dir in [1.0, -1.0] {
                if evaluations >= budget {
                    break 'search;
                }
                let mut point = best.point;
                point[axis] = bounds.clamp_axis(axis, point[axis] + dir * steps[axis]);
                if point == best.point {
                    continue; // projection landed on the incumbent
                }
                let cand = evaluate(surrogate, point)?;
                evaluations += 1;
                if cand.beats(&best, threshold_db) {
                    best = cand;
                    push_trace(&mut trace, &best)?;
                    improved = true;
                }
            }
        }
        if !improved {
            for s in &mut steps {
                *s *= 0.5;
            }
        }
    }

    Ok(OptimizationResult {
        best_input: InputConfig::from_array(best.point)?,
        predicted_mean_db: best.mean_db,
        predicted_p5_db: best.p5_db,
        feasible: best.feasible(threshold_db),
        evaluations_used: evaluations,
        trace,
    })
}

fn evaluate<S: SinrSurrogate + ?Sized>(surrogate: &S, point: [f64; 4]) -> Result<Candidate> {
    let input = InputConfig::from_array(point)?;
    let (mean_db, p5_db) = surrogate.predict_pair(&input)?;
    Ok(Candidate {
        point,
        mean_db,
        p5_db,
    })
}

fn push_trace(trace: &mut Vec<TracePoint>, cand: &Candidate) -> Result<()> {
    trace.push(TracePoint {
        input: InputConfig::from_array(cand.point)?,
        predicted_mean_db: cand.mean_db,
        predicted_p5_db: cand.p5_db,
    });
    Ok(())
}

/// One point on a one-dimensional slice through the input space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlicePoint {
    pub value: f64,
    pub mean_db: f64,
    pub p5_db: f64,
}

/// Predicts along one axis with the other parameters pinned at `center`.
/// With `n_points == 1` the scan degenerates to the center prediction;
/// otherwise values space evenly from the axis low to high bound.
pub fn slice_scan<S: SinrSurrogate>(
    surrogate: &S,
    bounds: &Bounds,
    center: &InputConfig,
    axis: usize,
    n_points: usize,
) -> Result<Vec<SlicePoint>> {
    bounds.validate()?;
    if axis >= Bounds::AXES {
        return Err(Error::OutOfBounds(format!(
            "axis {axis} out of range (4 parameters)"
        )));
    }
    if n_points == 0 {
        return Err(Error::InvalidArgument("n_points must be >= 1".into()));
    }
    let c = center.to_array();
    if !bounds.contains(&c) {
        return Err(Error::OutOfBounds("slice center outside bounds".into()));
    }

    let (lo, hi) = bounds.axis(axis);
    let mut out = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let value = if n_points == 1 {
            c[axis]
        } else {
            lo + (hi - lo) * i as f64 / (n_points - 1) as f64
        };
        let mut point = c;
        point[axis] = value;
        let cand = evaluate(surrogate, point)?;
        out.push(SlicePoint {
            value,
            mean_db: cand.mean_db,
            p5_db: cand.p5_db,
        });
    }
    Ok(out)
}

/// One scatter row of a family comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyRow {
    pub label: String,
    pub mean_db: f64,
    pub p5_db: f64,
}

/// Re-simulates reference geometries, random in-bounds configurations, and
/// repeated samples of the optimal family, one scatter row each.
///
/// Seeds: reference `j` simulates with `substream(substream(seed, 1), j)`;
/// random configuration `i` derives `substream(substream(seed, 2), i)`,
/// drawing its input from that stream's substream 0 and simulating with
/// substream 1; optimal sample `j` uses `substream(substream(seed, 3), j)`.
#[allow(clippy::too_many_arguments)]
pub fn compare_families(
    optimal: &InputConfig,
    n_optimal_samples: usize,
    n_random_configs: usize,
    references: &[(String, ArrayGeometry)],
    cfg: &NetworkConfig,
    lattice_dims: (usize, usize),
    n_active: usize,
    n_iter: usize,
    seed: u64,
) -> Result<Vec<FamilyRow>> {
    if n_optimal_samples == 0 {
        return Err(Error::InvalidArgument("n_optimal_samples must be >= 1".into()));
    }
    let mut rows = Vec::with_capacity(references.len() + n_random_configs + n_optimal_samples);

    let ref_seed = substream(seed, 1);
    for (j, (label, geom)) in references.iter().enumerate() {
        let stats = simulate_geometry(geom, cfg, n_iter, substream(ref_seed, j as u64))?;
        rows.push(FamilyRow {
            label: label.clone(),
            mean_db: stats.mean_db,
            p5_db: stats.p5_db,
        });
    }

    let random_seed = substream(seed, 2);
    for i in 0..n_random_configs {
        let item_seed = substream(random_seed, i as u64);
        let input = InputConfig::sample_uniform(&mut stream(substream(item_seed, 0)));
        let stats = simulate(&input, cfg, lattice_dims, n_active, n_iter, substream(item_seed, 1))?;
        rows.push(FamilyRow {
            label: format!("random_{i:04}"),
            mean_db: stats.mean_db,
            p5_db: stats.p5_db,
        });
    }

    let optimal_seed = substream(seed, 3);
    for j in 0..n_optimal_samples {
        let stats = simulate(
            optimal,
            cfg,
            lattice_dims,
            n_active,
            n_iter,
            substream(optimal_seed, j as u64),
        )?;
        rows.push(FamilyRow {
            label: format!("optimal_{j:04}"),
            mean_db: stats.mean_db,
            p5_db: stats.p5_db,
        });
    }

    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic {
        argmax: [f64; 4],
        p5: f64,
    }

    impl SinrSurrogate for Quadratic {
        fn predict_pair(&self, input: &InputConfig) -> Result<(f64, f64)> {
            let x = input.to_array();
            let mut mean = 30.0;
            for i in 0..4 {
                let d = x[i] - self.argmax[i];
                mean -= d * d;
            }
            Ok((mean, self.p5))
        }
    }

    #[test]
    fn recovers_an_interior_argmax() {
        let target = [0.7, 0.45, 3.5, 8.0];
        let surrogate = Quadratic {
            argmax: target,
            p5: 50.0,
        };
        let result = optimize(&surrogate, &Bounds::default(), 6.0, 4000, 3).unwrap();
        assert!(result.feasible);
        let best = result.best_input.to_array();
        for i in 0..4 {
            assert!(
                (best[i] - target[i]).abs() < 0.05,
                "axis {i}: {} vs {}",
                best[i],
                target[i]
            );
        }
    }

    #[test]
    fn boundary_argmax_is_projected() {
        let surrogate = Quadratic {
            argmax: [0.2, 1.4, -3.0, 12.0], // outside the box on every axis
            p5: 50.0,
        };
        let result = optimize(&surrogate, &Bounds::default(), 6.0, 3000, 5).unwrap();
        let best = result.best_input.to_array();
        assert!((best[0] - 0.3).abs() < 0.01);
        assert!((best[1] - 1.0).abs() < 0.01);
        assert!((best[2] + 1.0).abs() < 0.05);
        assert!((best[3] - 10.0).abs() < 0.05);
    }

    #[test]
    fn infeasible_search_reports_violation_minimizer() {
        let surrogate = Quadratic {
            argmax: [0.5, 0.5, 5.0, 5.0],
            p5: -40.0,
        };
        let result = optimize(&surrogate, &Bounds::default(), 6.0, 500, 1).unwrap();
        assert!(!result.feasible);
        assert_eq!(result.predicted_p5_db, -40.0);
    }

    #[test]
    fn budget_one_returns_the_single_sample() {
        let surrogate = Quadratic {
            argmax: [0.5, 0.5, 5.0, 5.0],
            p5: 50.0,
        };
        let result = optimize(&surrogate, &Bounds::default(), 6.0, 1, 8).unwrap();
        assert_eq!(result.evaluations_used, 1);
        assert_eq!(result.trace.len(), 1);
        assert_eq!(result.trace[0].input, result.best_input);
    }

    #[test]
    fn rerun_is_bitwise_identical_and_trace_monotone() {
        let surrogate = Quadratic {
            argmax: [0.6, 0.6, 2.0, 7.0],
            p5: 50.0,
        };
        let a = optimize(&surrogate, &Bounds::default(), 6.0, 2000, 42).unwrap();
        let b = optimize(&surrogate, &Bounds::default(), 6.0, 2000, 42).unwrap();
        assert_eq!(a, b);
        for w in a.trace.windows(2) {
            assert!(w[1].predicted_mean_db > w[0].predicted_mean_db);
        }
        assert!(a.predicted_mean_db >= a.trace.iter().map(|t| t.predicted_mean_db).fold(f64::MIN, f64::max));
        assert!(Bounds::default().contains(&a.best_input.to_array()));
    }

    #[test]
    fn degenerate_bounds_are_rejected() {
        let mut bounds = Bounds::default();
        bounds.d_y = (0.5, 0.5);
        let surrogate = Quadratic {
            argmax: [0.5; 4],
            p5: 50.0,
        };
        assert!(optimize(&surrogate, &bounds, 6.0, 10, 0).is_err());
    }

    #[test]
    fn memorizing_forest_center_reproduces_training_row() {
        use crate::emulator::{DatasetRow, EmulatorModel, ForestParams, ModelSpec};
        use crate::net_sim::SinrStats;

        let rows: Vec<DatasetRow> = (0..10)
            .map(|i| {
                let t = i as f64 / 9.0;
                DatasetRow {
                    input: InputConfig::new(0.3 + 0.7 * t, 1.0 - 0.6 * t, 11.0 * t - 1.0, 9.5 * t)
                        .unwrap(),
                    output: SinrStats {
                        mean_db: 12.0 + 7.0 * t,
                        p5_db: 1.0 - 3.0 * t,
                        n_samples: 1,
                        samples: None,
                    },
                    seed: i,
                }
            })
            .collect();
        let spec = ModelSpec::RandomForest(ForestParams {
            n_trees: 1,
            min_leaf: 1,
            bootstrap: false,
        });
        let model = EmulatorModel::train(&rows, &spec, 0).unwrap();
        let pair = ModelPair {
            mean: &model,
            p5: &model,
        };
        let center = rows[4].input;
        let scan = slice_scan(&pair, &Bounds::default(), &center, 0, 1).unwrap();
        assert_eq!(scan[0].mean_db, rows[4].output.mean_db);
        assert_eq!(scan[0].p5_db, rows[4].output.p5_db);
    }

    #[test]
    fn family_comparison_minimal_table() {
        use crate::array_gen::upa_geometry;

        let cfg = NetworkConfig {
            n_sites: 1,
            ..NetworkConfig::default()
        };
        let optimal = InputConfig::new(0.5, 0.5, 3.0, 1.0).unwrap();
        let references = vec![("panel".to_string(), upa_geometry(2, 2, 0.5, 0.5).unwrap())];
        let run = || {
            compare_families(&optimal, 2, 0, &references, &cfg, (8, 8), 16, 5, 77).unwrap()
        };
        let rows = run();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].label, "panel");
        assert_eq!(rows[1].label, "optimal_0000");
        assert_eq!(rows[2].label, "optimal_0001");
        assert_eq!(rows, run());
        assert!(compare_families(&optimal, 0, 0, &references, &cfg, (8, 8), 16, 5, 77).is_err());
    }

    #[test]
    fn slice_scan_shapes() {
        let surrogate = Quadratic {
            argmax: [0.6, 0.6, 2.0, 7.0],
            p5: 9.0,
        };
        let center = InputConfig::new(0.5, 0.5, 1.0, 1.0).unwrap();
        let bounds = Bounds::default();

        let single = slice_scan(&surrogate, &bounds, &center, 2, 1).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].value, 1.0);
        let (m, p) = surrogate.predict_pair(&center).unwrap();
        assert_eq!((single[0].mean_db, single[0].p5_db), (m, p));

        let scan = slice_scan(&surrogate, &bounds, &center, 3, 21).unwrap();
        assert_eq!(scan.len(), 21);
        assert_eq!(scan[0].value, -1.0);
        assert_eq!(scan[20].value, 10.0);
        for w in scan.windows(2) {
            assert!(w[1].value > w[0].value);
        }
        assert!(slice_scan(&surrogate, &bounds, &center, 4, 3).is_err());
    }
}
