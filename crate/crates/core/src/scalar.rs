use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::ScalarOperand;
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point element type used by every numeric stage.
///
/// Implemented for `f32` and `f64`. Solver tolerances are part of the
/// trait because a single-precision working covariance cannot reach the
/// double-precision stopping rule.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + ScalarOperand + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Stop when the largest absolute change of the working covariance
    /// over a full sweep falls below this.
    const SWEEP_TOL: f64;
    /// Inner coordinate-descent stopping threshold.
    const INNER_TOL: f64;
    /// Accepted primal/dual gap of a graphical lasso solution.
    const GAP_TOL: f64;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const SWEEP_TOL: f64 = 1e-7;
    const INNER_TOL: f64 = 1e-11;
    const GAP_TOL: f64 = 1e-6;
}

impl Scalar for f32 {
    const SWEEP_TOL: f64 = 1e-5;
    const INNER_TOL: f64 = 1e-7;
    const GAP_TOL: f64 = 1e-3;
}
