//! Closed-form ridge regression on standardized features.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weights in standardized feature space plus an unpenalized intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeHead {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl RidgeHead {
    pub fn predict(&self, x_std: &[f64]) -> f64 {
        self.intercept
            + self
                .weights
                .iter()
                .zip(x_std)
                .map(|(w, x)| w * x)
                .sum::<f64>()
    }
}

/// Solves `argmin ||X w - y||^2 + lambda ||w||^2` in closed form via the
/// normal equations. The intercept is unpenalized: columns and targets are
/// centered before the solve, so on standardized features the intercept is
/// exactly the target mean.
// Triangular index arithmetic reads clearer than iterator chains here.
#[allow(clippy::needless_range_loop)]
pub fn fit(x_std: &[Vec<f64>], y: &[f64], lambda: f64) -> Result<RidgeHead> {
    if x_std.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows vs {} targets",
            x_std.len(),
            y.len()
        )));
    }
    if x_std.is_empty() {
        return Err(Error::EmptyInput("ridge fit on no rows".into()));
    }
    let p = x_std[0].len();
    if x_std.len() <= p {
        return Err(Error::InvalidArgument(format!(
            "ridge needs more rows than features ({} rows, {p} features)",
            x_std.len()
        )));
    }
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }

    let n = x_std.len() as f64;
    let y_mean = y.iter().sum::<f64>() / n;
    let mut col_means = vec![0.0; p];
    for row in x_std {
        for (m, &v) in col_means.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut col_means {
        *m /= n;
    }

    let mut normal = vec![vec![0.0; p]; p];
    let mut rhs = vec![0.0; p];
    for (row, &yi) in x_std.iter().zip(y) {
        let yc = yi - y_mean;
        for j in 0..p {
            let xj = row[j] - col_means[j];
            rhs[j] += xj * yc;
            for k in j..p {
                normal[j][k] += xj * (row[k] - col_means[k]);
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            normal[j][k] = normal[k][j];
        }
        normal[j][j] += lambda;
    }

    let weights = solve_spd(normal, rhs)?;
    let intercept = y_mean - weights.iter().zip(&col_means).map(|(w, m)| w * m).sum::<f64>();
    Ok(RidgeHead { weights, intercept })
}

/// Cholesky solve of a symmetric positive-definite system. Fails on
/// (numerically) singular matrices, which with ridge can only happen at
/// lambda = 0 with linearly dependent features.
#[allow(clippy::needless_range_loop)]
fn solve_spd(mut a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Vec<f64>> {
    let p = a.len();
    let scale = (0..p).map(|i| a[i][i].abs()).fold(1.0, f64::max);
    for j in 0..p {
        let mut d = a[j][j];
        for k in 0..j {
            d -= a[j][k] * a[j][k];
        }
        if d <= 1e-12 * scale {
            return Err(Error::Singular(
                "normal matrix is not positive definite (collinear features with lambda = 0?)"
                    .into(),
            ));
        }
        let d = d.sqrt();
        a[j][j] = d;
        for i in (j + 1)..p {
            let mut s = a[i][j];
            for k in 0..j {
                s -= a[i][k] * a[j][k];
            }
            a[i][j] = s / d;
        }
    }
    // L z = b, then L^T w = z.
    let mut z = b;
    for i in 0..p {
        for k in 0..i {
            z[i] -= a[i][k] * z[k];
        }
        z[i] /= a[i][i];
    }
    let mut w = z;
    for i in (0..p).rev() {
        for k in (i + 1)..p {
            w[i] -= a[k][i] * w[k];
        }
        w[i] /= a[i][i];
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_checked_single_feature_shrinkage() {
        // Raw points (0,0), (1,1), (2,2); standardized x = [-1, 0, 1] under
        // the sample-stdev scaler. Closed form: w = X'y / (X'X + lambda)
        // = 2 / (2 + 1) = 2/3, intercept = mean(y) = 1.
        let x = vec![vec![-1.0], vec![0.0], vec![1.0]];
        let y = [0.0, 1.0, 2.0];
        let head = fit(&x, &y, 1.0).unwrap();
        assert!((head.weights[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((head.intercept - 1.0).abs() < 1e-15);
    }

    #[test]
    fn interpolates_noiseless_linear_data() {
        let x: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let t = i as f64;
                vec![t - 9.5, (t * 7.0) % 13.0 - 6.0]
            })
            .collect();
        let y: Vec<f64> = x.iter().map(|r| 3.0 + 2.0 * r[0] - 0.5 * r[1]).collect();
        let head = fit(&x, &y, 0.0).unwrap();
        for (row, &target) in x.iter().zip(&y) {
            assert!((head.predict(row) - target).abs() < 1e-9);
        }
    }

    #[test]
    fn huge_lambda_shrinks_to_the_mean() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 - 4.5]).collect();
        let y: Vec<f64> = (0..10).map(|i| (i as f64) * 2.0).collect();
        let mean = y.iter().sum::<f64>() / 10.0;
        let head = fit(&x, &y, 1e9).unwrap();
        for row in &x {
            assert!((head.predict(row) - mean).abs() < 1e-3);
        }
    }

    #[test]
    fn singular_system_without_regularization_fails() {
        // Duplicated feature column: rank deficient.
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, i as f64]).collect();
        let y: Vec<f64> = (0..8).map(|i| i as f64).collect();
        assert!(matches!(fit(&x, &y, 0.0), Err(Error::Singular(_))));
        assert!(fit(&x, &y, 0.1).is_ok());
    }

    #[test]
    fn needs_more_rows_than_features() {
        let x = vec![vec![1.0, 2.0], vec![0.5, 0.1]];
        let y = [1.0, 2.0];
        assert!(fit(&x, &y, 1.0).is_err());
    }
}
