//! Rank-based nonparanormal transform.
//!
//! Per column: mid-ranks `r`, empirical CDF `r / (n + 1)`, Winsorized into
//! `[δ, 1 − δ]` with `δ = 1 / (4 n^{1/4} √(π ln n))`, mapped through the
//! standard normal quantile, then centered and scaled to unit sample
//! standard deviation (denominator `n − 1`).

use ndarray::{Array2, ArrayView1, ArrayView2, Axis, Zip};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stats::normal_quantile;

pub const MIN_ROWS: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct TransformedMatrix<F> {
    pub values: Array2<F>,
    /// Mid-ranks (1-based, ties averaged) of the input, per column.
    pub ranks: Array2<F>,
}

impl<F: Scalar> TransformedMatrix<F> {
    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_columns(&self) -> usize {
        self.values.ncols()
    }
}

pub fn truncation_level(n: usize) -> f64 {
    let n = n as f64;
    1.0 / (4.0 * n.powf(0.25) * (std::f64::consts::PI * n.ln()).sqrt())
}

/// Average ranks, 1-based; tied values share the mean of their positions.
pub fn mid_ranks<F: Scalar>(x: ArrayView1<F>) -> Vec<f64> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && x[order[end]] == x[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let r = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}

pub fn nonparanormal_transform<F: Scalar>(m: ArrayView2<F>) -> Result<TransformedMatrix<F>> {
    let (n, p) = m.dim();
    if n < MIN_ROWS {
        return Err(Error::Contract(format!(
            "nonparanormal transform needs at least {MIN_ROWS} rows, got {n}"
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("nonparanormal transform needs a complete finite matrix".into()));
    }
    let delta = truncation_level(n);
    let mut values = Array2::<F>::zeros((n, p));
    let mut ranks = Array2::<F>::zeros((n, p));
    for (j, col) in m.axis_iter(Axis(1)).enumerate() {
        let first = col[0];
        if col.iter().all(|&v| v == first) {
            return Err(Error::DegenerateColumn { index: j, name: None });
        }
        let r = mid_ranks(col);
        let scores: Vec<f64> = r
            .iter()
            .map(|&ri| normal_quantile((ri / (n as f64 + 1.0)).clamp(delta, 1.0 - delta)))
            .collect();
        let mean = scores.iter().sum::<f64>() / n as f64;
        let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        if !(var > 0.0) {
            return Err(Error::DegenerateColumn { index: j, name: None });
        }
        let sd = var.sqrt();
        Zip::from(values.column_mut(j))
            .and(&scores)
            .for_each(|dst, &s| *dst = F::lit((s - mean) / sd));
        Zip::from(ranks.column_mut(j)).and(&r).for_each(|dst, &ri| *dst = F::lit(ri));
    }
    Ok(TransformedMatrix { values, ranks })
}
