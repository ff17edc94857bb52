//! Dense symmetric-matrix helpers. Matrices here are small (tens of
//! variables), so plain Cholesky is all the solvers need.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Lower-triangular Cholesky factor `L` with `a = L Lᵀ`.
pub fn cholesky<F: Scalar>(a: ArrayView2<F>) -> Result<Array2<F>> {
    let p = a.nrows();
    if a.ncols() != p {
        return Err(Error::Contract(format!("expected a square matrix, got {}x{}", p, a.ncols())));
    }
    let mut l = Array2::<F>::zeros((p, p));
    for j in 0..p {
        let mut d = a[[j, j]];
        for k in 0..j {
            d = d - l[[j, k]] * l[[j, k]];
        }
        if !(d > F::zero()) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite(format!("pivot {j} is {}", d)));
        }
        let djj = d.sqrt();
        l[[j, j]] = djj;
        for i in (j + 1)..p {
            let mut s = a[[i, j]];
            for k in 0..j {
                s = s - l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / djj;
        }
    }
    Ok(l)
}

pub fn is_positive_definite<F: Scalar>(a: ArrayView2<F>) -> bool {
    cholesky(a).is_ok()
}

/// `log det a` for symmetric positive definite `a`.
pub fn log_det<F: Scalar>(a: ArrayView2<F>) -> Result<F> {
    let l = cholesky(a)?;
    Ok(l.diag().iter().fold(F::zero(), |acc, &d| acc + d.ln()) * F::lit(2.0))
}

/// Inverse of a symmetric positive definite matrix via its Cholesky factor.
pub fn spd_inverse<F: Scalar>(a: ArrayView2<F>) -> Result<Array2<F>> {
    let l = cholesky(a)?;
    let p = l.nrows();
    // L⁻¹ by forward substitution, then a⁻¹ = L⁻ᵀ L⁻¹.
    let mut linv = Array2::<F>::zeros((p, p));
    for col in 0..p {
        for i in col..p {
            let mut s = if i == col { F::one() } else { F::zero() };
            for k in col..i {
                s = s - l[[i, k]] * linv[[k, col]];
            }
            linv[[i, col]] = s / l[[i, i]];
        }
    }
    let mut inv = Array2::<F>::zeros((p, p));
    for i in 0..p {
        for j in 0..=i {
            let mut s = F::zero();
            for k in i..p {
                s = s + linv[[k, i]] * linv[[k, j]];
            }
            inv[[i, j]] = s;
            inv[[j, i]] = s;
        }
    }
    Ok(inv)
}

/// Solve `Lᵀ x = b` in place for lower-triangular `l`.
pub fn solve_upper_transposed<F: Scalar>(l: ArrayView2<F>, b: &mut [F]) {
    let p = l.nrows();
    for i in (0..p).rev() {
        let mut s = b[i];
        for k in (i + 1)..p {
            s = s - l[[k, i]] * b[k];
        }
        b[i] = s / l[[i, i]];
    }
}

pub fn max_asymmetry<F: Scalar>(a: ArrayView2<F>) -> F {
    let p = a.nrows();
    let mut worst = F::zero();
    for i in 0..p {
        for j in (i + 1)..p {
            worst = worst.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    worst
}
