//! Inverse-distance-weighted k nearest neighbors on standardized features.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The stored (standardized) training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnHead {
    pub k: usize,
    pub points: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl KnnHead {
    /// Weighted mean of the k nearest targets with weights `1/distance`;
    /// an exact match (distance 0) returns that row's target directly.
    /// Distance ties resolve by row index.
    pub fn predict(&self, x_std: &[f64]) -> f64 {
        let mut dist: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let d2: f64 = p.iter().zip(x_std).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2.sqrt(), i)
            })
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let nearest = &dist[..self.k];
        if nearest[0].0 == 0.0 {
            return self.targets[nearest[0].1];
        }
        let mut weight_sum = 0.0;
        let mut acc = 0.0;
        for &(d, i) in nearest {
            let w = 1.0 / d;
            weight_sum += w;
            acc += w * self.targets[i];
        }
        acc / weight_sum
    }
}

pub fn fit(x_std: &[Vec<f64>], y: &[f64], k: usize) -> Result<KnnHead> {
    if x_std.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows vs {} targets",
            x_std.len(),
            y.len()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if k > x_std.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds the {} training rows",
            x_std.len()
        )));
    }
    Ok(KnnHead {
        k,
        points: x_std.to_vec(),
        targets: y.to_vec(),
    })
}
