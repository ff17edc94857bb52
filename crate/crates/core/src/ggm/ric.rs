//! Rotation-invariance style selection of the glasso penalty: the mean,
//! over independent row permutations of each column, of the largest
//! absolute off-diagonal correlation. Permuting columns separately keeps
//! every marginal and destroys all cross-column dependence, so the result
//! estimates the scale of purely spurious correlation at this `n`.

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_ROTATIONS: usize = 20;

pub fn select_lambda_ric<F: Scalar>(x: ArrayView2<F>, n_rotations: usize, seed: u64) -> Result<F> {
    if n_rotations == 0 {
        return Err(Error::Contract("need at least one rotation".into()));
    }
    let (n, p) = x.dim();
    if n < 2 {
        return Err(Error::Contract(format!("need at least 2 rows, got {n}")));
    }
    // Standardize to unit norm so correlations are plain dot products.
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(p);
    for j in 0..p {
        let c: Vec<f64> = x.column(j).iter().map(|v| v.as_f64()).collect();
        let mean = c.iter().sum::<f64>() / n as f64;
        let norm = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::DegenerateColumn { index: j, name: None });
        }
        cols.push(c.iter().map(|v| (v - mean) / norm).collect());
    }
    if p < 2 {
        return Ok(F::zero());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..n_rotations {
        for c in cols.iter_mut() {
            c.shuffle(&mut rng);
        }
        let mut max_abs = 0.0f64;
        for i in 0..p {
            for j in (i + 1)..p {
                let r: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
                max_abs = max_abs.max(r.abs().min(1.0));
            }
        }
        total += max_abs;
    }
    Ok(F::lit(total / n_rotations as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn noise(n: usize, p: usize, seed: u64) -> Array2<f64> {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, p), |_| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn deterministic_given_seed() {
        let x = noise(50, 2, 1);
        let a: f64 = select_lambda_ric(x.view(), 1, 99).unwrap();
        let b: f64 = select_lambda_ric(x.view(), 1, 99).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!((0.0..=1.0).contains(&a));
        let c: f64 = select_lambda_ric(x.view(), 1, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn shrinks_with_sample_size() {
        let small: f64 = (0..10)
            .map(|s| select_lambda_ric(noise(100, 5, s).view(), 20, s).unwrap())
            .sum::<f64>()
            / 10.0;
        let large: f64 = (0..10)
            .map(|s| select_lambda_ric(noise(10_000, 5, s).view(), 20, s).unwrap())
            .sum::<f64>()
            / 10.0;
        assert!(large < small, "{large} vs {small}");
        assert!(large < 0.05);
    }

    #[test]
    fn zero_rotations_rejected() {
        let x = noise(10, 2, 1);
        assert!(select_lambda_ric(x.view(), 0, 1).is_err());
    }

    #[test]
    fn constant_column_rejected() {
        let mut x = noise(10, 2, 1);
        x.column_mut(1).fill(3.0);
        assert!(matches!(
            select_lambda_ric(x.view(), 3, 1),
            Err(Error::DegenerateColumn { index: 1, .. })
        ));
    }
}
