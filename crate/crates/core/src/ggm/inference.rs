//! De-sparsified precision estimate and partial correlations.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::is_positive_definite;
use crate::scalar::Scalar;
use crate::stats::two_sided_p;

/// Entries whose clamping moves them by more than this are logged.
pub const CLAMP_WARN: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct Desparsified<F> {
    /// `2Θ − ΘΣΘ`
    pub t_hat: Array2<F>,
    /// `√(Θ_ii Θ_jj + Θ_ij²)`
    pub edge_sd: Array2<F>,
    /// `√n · T_ij / sd_ij`
    pub z: Array2<F>,
    pub p_values: Array2<F>,
}

/// Debias a sparse precision estimate. Every entry, diagonal included,
/// uses the same variance formula; only off-diagonal tests are meaningful.
pub fn desparsify<F: Scalar>(theta: ArrayView2<F>, sigma: ArrayView2<F>, n: usize) -> Result<Desparsified<F>> {
    let p = theta.nrows();
    if theta.dim() != sigma.dim() || theta.ncols() != p {
        return Err(Error::Contract(format!(
            "precision {:?} and covariance {:?} must be equal square shapes",
            theta.dim(),
            sigma.dim()
        )));
    }
    if !is_positive_definite(theta) {
        return Err(Error::Contract("precision estimate is not positive definite".into()));
    }
    let two = F::lit(2.0);
    let tst = theta.dot(&sigma).dot(&theta);
    let mut t_hat = Array2::<F>::zeros((p, p));
    for i in 0..p {
        for j in 0..p {
            t_hat[[i, j]] = two * theta[[i, j]] - tst[[i, j]];
        }
    }
    // symmetric up to rounding; make it exact
    for i in 0..p {
        for j in (i + 1)..p {
            let v = (t_hat[[i, j]] + t_hat[[j, i]]) / two;
            t_hat[[i, j]] = v;
            t_hat[[j, i]] = v;
        }
    }
    let root_n = F::lit((n as f64).sqrt());
    let edge_sd = Array2::from_shape_fn((p, p), |(i, j)| {
        (theta[[i, i]] * theta[[j, j]] + theta[[i, j]] * theta[[i, j]]).sqrt()
    });
    let z = Array2::from_shape_fn((p, p), |(i, j)| root_n * t_hat[[i, j]] / edge_sd[[i, j]]);
    let p_values = z.mapv(|v| F::lit(two_sided_p(v.as_f64())));
    Ok(Desparsified {
        t_hat,
        edge_sd,
        z,
        p_values,
    })
}

/// `ρ_ij = −T_ij / √(T_ii T_jj)` with unit diagonal, clamped to `[−1, 1]`.
pub fn partial_correlations<F: Scalar>(t_hat: ArrayView2<F>) -> Result<Array2<F>> {
    let p = t_hat.nrows();
    if t_hat.ncols() != p {
        return Err(Error::Contract(format!("expected square matrix, got {:?}", t_hat.dim())));
    }
    if let Some(i) = (0..p).find(|&i| !(t_hat[[i, i]] > F::zero())) {
        return Err(Error::Contract(format!(
            "diagonal entry {i} of the precision is {} (must be positive)",
            t_hat[[i, i]]
        )));
    }
    let mut rho = Array2::<F>::eye(p);
    for i in 0..p {
        for j in 0..p {
            if i == j {
                continue;
            }
            let r = -t_hat[[i, j]] / (t_hat[[i, i]] * t_hat[[j, j]]).sqrt();
            let excess = r.abs().as_f64() - 1.0;
            if excess > CLAMP_WARN {
                log::warn!("partial correlation ({i}, {j}) = {r} clamped to [-1, 1]");
            }
            rho[[i, j]] = r.max(-F::one()).min(F::one());
        }
    }
    Ok(rho)
}
