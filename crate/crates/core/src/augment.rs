//! Completeness indicators: one binary column per partially observed
//! variable, 1 where the entry is present and 0 where it is missing.

use std::collections::HashSet;

use ndarray::Array1;

use crate::dataset::{Dataset, VariableMeta};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Indicator<F> {
    pub meta: VariableMeta,
    /// Column index of the parent variable in the base dataset.
    pub parent_index: usize,
    pub values: Array1<F>,
}

/// Base dataset plus its completeness indicators, in that column order.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedDataset<F> {
    pub base: Dataset<F>,
    pub indicators: Vec<Indicator<F>>,
    /// Base variables whose indicator would be constant (fully observed or
    /// fully missing), so no indicator was made.
    pub excluded_constant: Vec<String>,
}

impl<F: Scalar> AugmentedDataset<F> {
    pub fn n_rows(&self) -> usize {
        self.base.n_rows()
    }

    pub fn width(&self) -> usize {
        self.base.n_columns() + self.indicators.len()
    }

    /// Base variables followed by indicator variables.
    pub fn variables(&self) -> Vec<VariableMeta> {
        self.base
            .variables()
            .iter()
            .cloned()
            .chain(self.indicators.iter().map(|c| c.meta.clone()))
            .collect()
    }

    pub fn names(&self) -> Vec<String> {
        self.variables().into_iter().map(|v| v.name).collect()
    }
}

pub const COMPLETENESS_SUFFIX: &str = "_complete";

pub fn make_completeness_indicators<F: Scalar>(d: &Dataset<F>) -> AugmentedDataset<F> {
    let mut taken: HashSet<String> = d.variables().iter().map(|v| v.name.clone()).collect();
    let mut indicators = Vec::new();
    let mut excluded_constant = Vec::new();
    for (j, var) in d.variables().iter().enumerate() {
        let missing = d.missing_count(j);
        if missing == 0 || missing == d.n_rows() {
            excluded_constant.push(var.name.clone());
            continue;
        }
        let mut name = format!("{}{}", var.name, COMPLETENESS_SUFFIX);
        while taken.contains(&name) {
            name.push('_');
        }
        taken.insert(name.clone());
        let values = d
            .mask()
            .column(j)
            .mapv(|observed| if observed { F::one() } else { F::zero() });
        indicators.push(Indicator {
            meta: VariableMeta::completeness(name, var),
            parent_index: j,
            values,
        });
    }
    if indicators.is_empty() {
        log::warn!("no completeness indicators generated");
    }
    AugmentedDataset {
        base: d.clone(),
        indicators,
        excluded_constant,
    }
}
