//! Graphical lasso by blockwise coordinate descent on the working
//! covariance `W`, with an unpenalized diagonal:
//!
//! minimize `tr(Θ S) − log det Θ + λ Σ_{i≠j} |Θ_ij|`.
//!
//! Each sweep visits columns in index order. For column `j` the lasso
//! subproblem `min ½ βᵀ W₁₁ β − βᵀ s₁₂ + λ‖β‖₁` is solved by cyclic
//! coordinate descent warm-started from the previous sweep, and
//! `w₁₂ ← W₁₁ β`.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::{log_det, max_asymmetry, spd_inverse};
use crate::scalar::Scalar;

pub const DEFAULT_MAX_SWEEPS: usize = 10_000;
const MAX_INNER: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlassoOptions {
    /// Convergence when the largest absolute change of `W` in a sweep is
    /// below this.
    pub sweep_tol: f64,
    pub inner_tol: f64,
    /// Required primal-dual gap before a solution is accepted.
    pub gap_tol: f64,
    pub max_sweeps: usize,
}

impl GlassoOptions {
    pub fn for_scalar<F: Scalar>() -> Self {
        GlassoOptions {
            sweep_tol: F::SWEEP_TOL,
            inner_tol: F::INNER_TOL,
            gap_tol: F::GAP_TOL,
            max_sweeps: DEFAULT_MAX_SWEEPS,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlassoSolution<F> {
    pub theta: Array2<F>,
    /// Working covariance from the solver.
    pub w: Array2<F>,
    pub sweeps: usize,
    pub duality_gap: F,
}

/// Sparse precision estimate with default options for `F`.
pub fn glasso_fit<F: Scalar>(sigma: ArrayView2<F>, lambda: F) -> Result<Array2<F>> {
    glasso_solve(sigma, lambda, &GlassoOptions::for_scalar::<F>()).map(|s| s.theta)
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

pub fn glasso_solve<F: Scalar>(sigma: ArrayView2<F>, lambda: F, opts: &GlassoOptions) -> Result<GlassoSolution<F>> {
    let p = sigma.nrows();
    if sigma.ncols() != p {
        return Err(Error::Contract(format!("covariance must be square, got {:?}", sigma.dim())));
    }
    if sigma.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("covariance has non-finite entries".into()));
    }
    let asym = max_asymmetry(sigma).as_f64();
    let scale = sigma.iter().fold(0.0f64, |m, v| m.max(v.as_f64().abs())).max(1.0);
    if asym > 1e-10 * scale {
        return Err(Error::Contract(format!("covariance is not symmetric (max |S - Sᵀ| = {asym:.3e})")));
    }
    if !(lambda >= F::zero()) || !lambda.is_finite() {
        return Err(Error::Contract(format!("lambda must be a finite non-negative number, got {lambda}")));
    }
    if sigma.diag().iter().any(|&d| !(d > F::zero())) {
        return Err(Error::Contract("covariance diagonal must be strictly positive".into()));
    }

    if lambda == F::zero() {
        let theta = spd_inverse(sigma).map_err(|e| match e {
            Error::NotPositiveDefinite(m) => Error::NotPositiveDefinite(format!("lambda = 0 needs an invertible covariance ({m})")),
            e => e,
        })?;
        return Ok(GlassoSolution {
            theta,
            w: sigma.to_owned(),
            sweeps: 0,
            duality_gap: F::zero(),
        });
    }

    // Work in f64 regardless of F; the result is cast back at the end.
    let s: Vec<f64> = sigma.iter().map(|v| v.as_f64()).collect();
    let lam = lambda.as_f64();
    let idx = |i: usize, j: usize| i * p + j;
    let mut w = s.clone();
    // beta[j * p + k]: coefficient of variable k in column j's subproblem.
    let mut beta = vec![0.0f64; p * p];
    let mut u = vec![0.0f64; p];
    let mut inner_tol = opts.inner_tol;
    let mut sweeps = 0;
    let mut residual = f64::INFINITY;
    let mut gap = f64::INFINITY;

    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let mut max_change = 0.0f64;
        for j in 0..p {
            let b = &mut beta[j * p..(j + 1) * p];
            // u = W₁₁ β over k ≠ j
            for k in 0..p {
                if k == j {
                    continue;
                }
                let mut acc = 0.0;
                for l in 0..p {
                    if l != j {
                        acc += w[idx(k, l)] * b[l];
                    }
                }
                u[k] = acc;
            }
            let mut inner = 0;
            loop {
                inner += 1;
                let mut delta_max = 0.0f64;
                for k in 0..p {
                    if k == j {
                        continue;
                    }
                    let wkk = w[idx(k, k)];
                    let partial = s[idx(k, j)] - (u[k] - wkk * b[k]);
                    let updated = soft_threshold(partial, lam) / wkk;
                    let d = updated - b[k];
                    if d != 0.0 {
                        b[k] = updated;
                        for l in 0..p {
                            if l != j {
                                u[l] += w[idx(l, k)] * d;
                            }
                        }
                        delta_max = delta_max.max(d.abs() * wkk.sqrt());
                    }
                }
                if delta_max < inner_tol || inner >= MAX_INNER {
                    break;
                }
            }
            for k in 0..p {
                if k == j {
                    continue;
                }
                max_change = max_change.max((w[idx(k, j)] - u[k]).abs());
                w[idx(k, j)] = u[k];
                w[idx(j, k)] = u[k];
            }
        }
        residual = max_change;
        if max_change < opts.sweep_tol {
            let theta = theta_from_blocks(&w, &beta, p);
            gap = duality_gap(&s, &theta, &w, lam, p);
            if gap <= opts.gap_tol {
                let to_f = |v: &Vec<f64>| Array2::from_shape_fn((p, p), |(i, j)| F::lit(v[idx(i, j)]));
                return Ok(GlassoSolution {
                    theta: to_f(&theta),
                    w: to_f(&w),
                    sweeps,
                    duality_gap: F::lit(gap),
                });
            }
            inner_tol = (inner_tol * 0.1).max(1e-15);
        }
    }
    Err(Error::Convergence {
        sweeps,
        residual,
        gap,
    })
}

/// Recover `Θ` from `W` and the per-column coefficients, then symmetrize.
fn theta_from_blocks(w: &[f64], beta: &[f64], p: usize) -> Vec<f64> {
    let mut theta = vec![0.0f64; p * p];
    for j in 0..p {
        let b = &beta[j * p..(j + 1) * p];
        let mut q = w[j * p + j];
        for k in 0..p {
            if k != j {
                q -= w[k * p + j] * b[k];
            }
        }
        let tjj = 1.0 / q;
        theta[j * p + j] = tjj;
        for k in 0..p {
            if k != j {
                theta[k * p + j] = -b[k] * tjj;
            }
        }
    }
    for i in 0..p {
        for j in (i + 1)..p {
            let (a, b) = (theta[i * p + j], theta[j * p + i]);
            // keep exact zeros where either column dropped the edge
            let v = if a == 0.0 || b == 0.0 { 0.0 } else { 0.5 * (a + b) };
            theta[i * p + j] = v;
            theta[j * p + i] = v;
        }
    }
    theta
}

/// `primal(Θ) − dual(W)` where the dual is `log det W + p`.
fn duality_gap(s: &[f64], theta: &[f64], w: &[f64], lam: f64, p: usize) -> f64 {
    let th = Array2::from_shape_vec((p, p), theta.to_vec()).expect("p×p");
    let wm = Array2::from_shape_vec((p, p), w.to_vec()).expect("p×p");
    let (Ok(ld_theta), Ok(ld_w)) = (log_det(th.view()), log_det(wm.view())) else {
        return f64::INFINITY;
    };
    let mut trace = 0.0;
    let mut l1 = 0.0;
    for i in 0..p {
        for j in 0..p {
            trace += s[i * p + j] * theta[j * p + i];
            if i != j {
                l1 += theta[i * p + j].abs();
            }
        }
    }
    (trace - ld_theta + lam * l1 - ld_w - p as f64).abs()
}

/// Stationarity check of a graphical lasso solution against `W = Θ⁻¹`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KktReport {
    /// Largest `|W_ij − S_ij − λ·sign(Θ_ij)|` over the off-diagonal support.
    pub support_violation: f64,
    /// Largest `(|W_ij − S_ij| − λ)₊` over off-diagonal zeros.
    pub off_support_violation: f64,
    /// Largest `|W_ii − S_ii|`.
    pub diagonal_violation: f64,
}

impl KktReport {
    pub fn max_violation(&self) -> f64 {
        self.support_violation
            .max(self.off_support_violation)
            .max(self.diagonal_violation)
    }
}

pub fn kkt_check<F: Scalar>(sigma: ArrayView2<F>, theta: ArrayView2<F>, lambda: F) -> Result<KktReport> {
    let w = spd_inverse(theta)?;
    let lam = lambda.as_f64();
    let p = sigma.nrows();
    let mut rep = KktReport {
        support_violation: 0.0,
        off_support_violation: 0.0,
        diagonal_violation: 0.0,
    };
    for i in 0..p {
        for j in 0..p {
            let diff = w[[i, j]].as_f64() - sigma[[i, j]].as_f64();
            let t = theta[[i, j]].as_f64();
            if i == j {
                rep.diagonal_violation = rep.diagonal_violation.max(diff.abs());
            } else if t != 0.0 {
                rep.support_violation = rep.support_violation.max((diff - lam * t.signum()).abs());
            } else {
                rep.off_support_violation = rep.off_support_violation.max((diff.abs() - lam).max(0.0));
            }
        }
    }
    Ok(rep)
}
