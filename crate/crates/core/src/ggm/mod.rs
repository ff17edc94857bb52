//! Gaussian graphical model estimation for one complete, transformed
//! matrix: sample correlation, graphical lasso with a selected penalty,
//! de-sparsification and partial correlations.

mod glasso;
mod inference;
mod ric;

pub use glasso::{glasso_fit, glasso_solve, kkt_check, GlassoOptions, GlassoSolution, KktReport, DEFAULT_MAX_SWEEPS};
pub use inference::{desparsify, partial_correlations, Desparsified, CLAMP_WARN};
pub use ric::{select_lambda_ric, DEFAULT_ROTATIONS};

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Pearson correlation of the columns of `x`, symmetric with unit diagonal
/// and entries clamped to `[−1, 1]`.
pub fn correlation_matrix<F: Scalar>(x: ArrayView2<F>) -> Result<Array2<F>> {
    let (n, p) = x.dim();
    if n < 2 {
        return Err(Error::Contract(format!("correlation needs at least 2 rows, got {n}")));
    }
    let mut centered: Vec<Vec<f64>> = Vec::with_capacity(p);
    for j in 0..p {
        let c: Vec<f64> = x.column(j).iter().map(|v| v.as_f64()).collect();
        let mean = c.iter().sum::<f64>() / n as f64;
        let dev: Vec<f64> = c.iter().map(|v| v - mean).collect();
        let norm = dev.iter().map(|d| d * d).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::DegenerateColumn { index: j, name: None });
        }
        centered.push(dev.into_iter().map(|d| d / norm).collect());
    }
    let mut r = Array2::<F>::eye(p);
    for i in 0..p {
        for j in (i + 1)..p {
            let v: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            let v = F::lit(v.clamp(-1.0, 1.0));
            r[[i, j]] = v;
            r[[j, i]] = v;
        }
    }
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum LambdaChoice {
    Ric { n_rotations: usize, seed: u64 },
    Fixed { value: f64 },
}

/// Estimation result for one ensemble member.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecisionFit<F> {
    pub lambda: F,
    pub n: usize,
    pub sigma_hat: Array2<F>,
    /// Sparse graphical lasso estimate; its zero pattern is the reported support.
    pub theta_hat: Array2<F>,
    pub t_hat: Array2<F>,
    pub partial_corr: Array2<F>,
    pub edge_sd: Array2<F>,
    pub edge_z: Array2<F>,
    pub edge_p: Array2<F>,
    pub sweeps: usize,
}

impl<F: Scalar> PrecisionFit<F> {
    pub fn dim(&self) -> usize {
        self.theta_hat.nrows()
    }

    pub fn in_support(&self, i: usize, j: usize) -> bool {
        self.theta_hat[[i, j]] != F::zero()
    }
}

/// Correlation → penalty → glasso → de-sparsify → partial correlations.
pub fn fit_precision<F: Scalar>(x: ArrayView2<F>, lambda: LambdaChoice) -> Result<PrecisionFit<F>> {
    let n = x.nrows();
    let sigma_hat = correlation_matrix(x)?;
    let lambda = match lambda {
        LambdaChoice::Ric { n_rotations, seed } => select_lambda_ric(x, n_rotations, seed)?,
        LambdaChoice::Fixed { value } => F::lit(value),
    };
    let sol = glasso_solve(sigma_hat.view(), lambda, &GlassoOptions::for_scalar::<F>())?;
    let d = desparsify(sol.theta.view(), sigma_hat.view(), n)?;
    let partial_corr = partial_correlations(d.t_hat.view())?;
    Ok(PrecisionFit {
        lambda,
        n,
        sigma_hat,
        theta_hat: sol.theta,
        t_hat: d.t_hat,
        partial_corr,
        edge_sd: d.edge_sd,
        edge_z: d.z,
        edge_p: d.p_values,
        sweeps: sol.sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn identical_and_negated_columns() {
        let x = array![[1.0, 1.0, -1.0], [2.0, 2.0, -2.0], [4.0, 4.0, -4.0], [3.0, 3.0, -3.0]];
        let r = correlation_matrix(x.view()).unwrap();
        assert_eq!(r[[0, 1]], 1.0);
        assert_eq!(r[[0, 2]], -1.0);
        assert_eq!(r.diag().to_vec(), vec![1.0; 3]);
    }

    #[test]
    fn constant_column() {
        let x = array![[1.0, 5.0], [2.0, 5.0]];
        assert!(matches!(
            correlation_matrix(x.view()),
            Err(Error::DegenerateColumn { index: 1, .. })
        ));
    }

    #[test]
    fn fit_pipeline_on_small_matrix() {
        let x = Array2::from_shape_fn((30, 3), |(i, j)| ((i * (j + 3) + j * 7) % 11) as f64 + (i as f64) * 0.1 * j as f64);
        let fit = fit_precision(x.view(), LambdaChoice::Fixed { value: 0.05 }).unwrap();
        assert_eq!(fit.dim(), 3);
        assert_eq!(fit.lambda, 0.05);
        for i in 0..3 {
            assert_eq!(fit.partial_corr[[i, i]], 1.0);
            for j in 0..3 {
                assert!(fit.partial_corr[[i, j]].abs() <= 1.0);
                assert_eq!(fit.partial_corr[[i, j]], fit.partial_corr[[j, i]]);
                assert_eq!(fit.in_support(i, j), fit.theta_hat[[i, j]] != 0.0);
            }
        }
    }
}
