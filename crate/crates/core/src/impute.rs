//! Hot-deck imputation: every missing cell is replaced by a uniform draw,
//! with replacement, from the observed entries of the same column.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::augment::AugmentedDataset;
use crate::dataset::VariableMeta;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_IMPUTATIONS: usize = 25;

/// Odd multiplier of the seed-splitting rule (the 64-bit golden ratio).
pub const SEED_SPLIT_MULTIPLIER: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed of ensemble member `k`: `master ^ (k * SEED_SPLIT_MULTIPLIER)`
/// in wrapping 64-bit arithmetic.
pub fn split_seed(master: u64, k: u64) -> u64 {
    master ^ k.wrapping_mul(SEED_SPLIT_MULTIPLIER)
}

/// Impute one complete `n × width` matrix over the augmented variables.
///
/// Columns are processed left to right and missing cells top to bottom,
/// each drawing one index from a ChaCha8 stream seeded with `seed`.
/// Indicator columns are complete and are copied through.
pub fn hot_deck_impute<F: Scalar>(a: &AugmentedDataset<F>, seed: u64) -> Result<Array2<F>> {
    let n = a.n_rows();
    let base = &a.base;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Array2::<F>::zeros((n, a.width()));
    for j in 0..base.n_columns() {
        let col = base.column(j);
        let mask = base.mask().column(j);
        let donors: Vec<F> = col
            .iter()
            .zip(mask.iter())
            .filter(|(_, &m)| m)
            .map(|(&v, _)| v)
            .collect();
        let mut dst = out.column_mut(j);
        if donors.len() == n {
            dst.assign(&col);
            continue;
        }
        if donors.is_empty() {
            return Err(Error::UnimputableColumn {
                column: base.variables()[j].name.clone(),
            });
        }
        for i in 0..n {
            dst[i] = if mask[i] {
                col[i]
            } else {
                donors[rng.random_range(0..donors.len())]
            };
        }
    }
    let offset = base.n_columns();
    for (k, ind) in a.indicators.iter().enumerate() {
        out.column_mut(offset + k).assign(&ind.values);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImputationEnsemble<F> {
    pub variables: Vec<VariableMeta>,
    pub members: Vec<Array2<F>>,
    pub seeds: Vec<u64>,
}

impl<F> ImputationEnsemble<F> {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// `k` hot-deck members, member `i` seeded with [`split_seed`]`(master_seed, i)`.
/// Members are generated in parallel; the result does not depend on the
/// thread count.
pub fn make_ensemble<F: Scalar>(a: &AugmentedDataset<F>, k: usize, master_seed: u64) -> Result<ImputationEnsemble<F>> {
    if k == 0 {
        return Err(Error::Contract("ensemble size must be at least 1".into()));
    }
    let seeds: Vec<u64> = (0..k as u64).map(|i| split_seed(master_seed, i)).collect();
    let members = seeds
        .par_iter()
        .map(|&s| hot_deck_impute(a, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(ImputationEnsemble {
        variables: a.variables(),
        members,
        seeds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::make_completeness_indicators;
    use crate::dataset::{Category, Dataset};
    use ndarray::array;

    fn single(values: Vec<f64>, observed: Vec<bool>) -> AugmentedDataset<f64> {
        let n = values.len();
        let d = Dataset::new(
            vec![VariableMeta::observation("a", Category::Other)],
            Array2::from_shape_vec((n, 1), values).unwrap(),
            Array2::from_shape_vec((n, 1), observed).unwrap(),
        )
        .unwrap();
        make_completeness_indicators(&d)
    }

    #[test]
    fn draws_stay_in_support() {
        let a = single(vec![1.0, 0.0, 3.0], vec![true, false, true]);
        for seed in 0..200 {
            let m = hot_deck_impute(&a, seed).unwrap();
            assert!(m[[1, 0]] == 1.0 || m[[1, 0]] == 3.0);
            assert_eq!((m[[0, 0]], m[[2, 0]]), (1.0, 3.0));
            assert_eq!(m.column(1).to_vec(), vec![1.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn complete_column_is_bit_identical() {
        let vals: Vec<f64> = vec![0.1, -2.5e-9, 7.0];
        let d = Dataset::complete(
            vec![VariableMeta::observation("a", Category::Other)],
            Array2::from_shape_vec((3, 1), vals.clone()).unwrap(),
        )
        .unwrap();
        let a = make_completeness_indicators(&d);
        let m = hot_deck_impute(&a, 9).unwrap();
        for (x, y) in m.column(0).iter().zip(&vals) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn empirical_frequencies_match_donor_weights() {
        // Donors {1, 3, 3}: P(1) = 1/3, P(3) = 2/3.
        let a = single(vec![1.0, 0.0, 3.0, 3.0], vec![true, false, true, true]);
        let trials = 20_000;
        let ones = (0..trials)
            .filter(|&s| hot_deck_impute(&a, s as u64).unwrap()[[1, 0]] == 1.0)
            .count();
        let freq = ones as f64 / trials as f64;
        assert!((freq - 1.0 / 3.0).abs() < 0.02, "P(1.0) = {freq}");
    }

    #[test]
    fn unimputable_column_is_named() {
        let d = Dataset::new(
            vec![
                VariableMeta::observation("ok", Category::Other),
                VariableMeta::observation("empty", Category::Other),
            ],
            array![[1.0, 0.0], [2.0, 0.0]],
            array![[true, false], [true, false]],
        )
        .unwrap();
        let a = make_completeness_indicators(&d);
        match hot_deck_impute(&a, 1).unwrap_err() {
            Error::UnimputableColumn { column } => assert_eq!(column, "empty"),
            e => panic!("unexpected {e}"),
        }
        assert!(make_ensemble(&a, 3, 1).is_err());
    }

    #[test]
    fn ensemble_shape_and_determinism() {
        let a = single(
            (0..50).map(|i| i as f64).collect(),
            (0..50).map(|i| i % 3 != 0).collect(),
        );
        let e1 = make_ensemble(&a, 25, 42).unwrap();
        let e2 = make_ensemble(&a, 25, 42).unwrap();
        assert_eq!(e1.len(), 25);
        assert_eq!(e1, e2);
        let distinct: std::collections::HashSet<u64> = e1.seeds.iter().copied().collect();
        assert_eq!(distinct.len(), 25);
        assert_ne!(e1.members[0], e1.members[1]);
    }

    #[test]
    fn complete_dataset_gives_identical_members() {
        let d = Dataset::complete(
            vec![VariableMeta::observation("a", Category::Other)],
            array![[1.0], [2.0], [3.0]],
        )
        .unwrap();
        let a = make_completeness_indicators(&d);
        let e = make_ensemble(&a, 4, 7).unwrap();
        assert!(e.members.iter().all(|m| *m == e.members[0]));
    }

    #[test]
    fn zero_members_is_rejected() {
        let a = single(vec![1.0, 2.0], vec![true, false]);
        assert!(matches!(make_ensemble(&a, 0, 1), Err(Error::Contract(_))));
    }

    #[test]
    fn seed_split_rule() {
        assert_eq!(split_seed(5, 0), 5);
        assert_eq!(split_seed(0, 1), SEED_SPLIT_MULTIPLIER);
        assert_eq!(split_seed(0, 2), SEED_SPLIT_MULTIPLIER.wrapping_mul(2));
    }
}
