//! End-to-end analysis of an in-memory dataset.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{make_completeness_indicators, AugmentedDataset};
use crate::dataset::Dataset;
use crate::error::Error;
use crate::ggm::{fit_precision, LambdaChoice, PrecisionFit, DEFAULT_ROTATIONS};
use crate::impute::{make_ensemble, split_seed, DEFAULT_IMPUTATIONS};
use crate::npn::nonparanormal_transform;
use crate::pooling::{
    detect_mnar, edge_p_values, extract_missingness_arcs, pool_partial_correlations, MissingnessArc, MnarFinding,
    PooledEdgeTable, DEFAULT_ALPHA,
};
use crate::scalar::Scalar;

/// XORed into a member seed to derive that member's permutation stream.
const ROTATION_STREAM: u64 = 0xD1B5_4A32_D192_ED03;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Parse,
    Augment,
    Impute,
    Transform,
    Fit,
    Pool,
    PValues,
    Arcs,
    Mnar,
    Write,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Parse => "parse",
            Stage::Augment => "augment",
            Stage::Impute => "impute",
            Stage::Transform => "transform",
            Stage::Fit => "fit",
            Stage::Pool => "pool",
            Stage::PValues => "p_values",
            Stage::Arcs => "arcs",
            Stage::Mnar => "mnar",
            Stage::Write => "write",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
#[error("{stage} stage failed: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

pub(crate) trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T> AtStage<T> for Result<T, Error> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum LambdaMethod {
    Ric { n_rotations: usize },
    Fixed { value: f64 },
}

impl Default for LambdaMethod {
    fn default() -> Self {
        LambdaMethod::Ric {
            n_rotations: DEFAULT_ROTATIONS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub alpha: f64,
    pub n_imputations: usize,
    pub seed: u64,
    pub lambda: LambdaMethod,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            alpha: DEFAULT_ALPHA,
            n_imputations: DEFAULT_IMPUTATIONS,
            seed: 0,
            lambda: LambdaMethod::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let mut problems = Vec::new();
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            problems.push(format!("alpha = {} (must lie in (0, 1))", self.alpha));
        }
        if self.n_imputations == 0 {
            problems.push("n_imputations = 0 (must be at least 1)".to_string());
        }
        match self.lambda {
            LambdaMethod::Ric { n_rotations: 0 } => problems.push("n_rotations = 0 (must be at least 1)".into()),
            LambdaMethod::Fixed { value } if !(value >= 0.0 && value.is_finite()) => {
                problems.push(format!("lambda = {value} (must be finite and non-negative)"))
            }
            _ => {}
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutput<F> {
    pub augmented: AugmentedDataset<F>,
    pub member_seeds: Vec<u64>,
    pub lambdas: Vec<F>,
    pub table: PooledEdgeTable<F>,
    pub arcs: Vec<MissingnessArc<F>>,
    pub findings: Vec<MnarFinding<F>>,
    /// Wall-clock milliseconds per stage, in execution order.
    pub timings_ms: Vec<(Stage, f64)>,
}

fn lambda_for_member(method: LambdaMethod, member_seed: u64) -> LambdaChoice {
    match method {
        LambdaMethod::Ric { n_rotations } => LambdaChoice::Ric {
            n_rotations,
            seed: member_seed ^ ROTATION_STREAM,
        },
        LambdaMethod::Fixed { value } => LambdaChoice::Fixed { value },
    }
}

/// augment → impute → transform → fit (λ, glasso, de-sparsify, partial
/// correlations) → pool → p-values → arcs → MNAR.
///
/// Ensemble members are fitted in parallel; each member's randomness comes
/// only from its split seed, so results do not depend on scheduling.
pub fn run_pipeline<F: Scalar>(d: &Dataset<F>, cfg: &PipelineConfig) -> Result<PipelineOutput<F>, PipelineError> {
    cfg.validate().at(Stage::Config)?;
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |stage: Stage, timings: &mut Vec<(Stage, f64)>| {
        let ms = clock.elapsed().as_secs_f64() * 1e3;
        log::info!("{stage}: {ms:.1} ms");
        timings.push((stage, ms));
        clock = Instant::now();
    };

    let augmented = make_completeness_indicators(d);
    let names = augmented.names();
    lap(Stage::Augment, &mut timings);

    let ensemble = make_ensemble(&augmented, cfg.n_imputations, cfg.seed).at(Stage::Impute)?;
    lap(Stage::Impute, &mut timings);

    let transformed = ensemble
        .members
        .par_iter()
        .map(|m| nonparanormal_transform(m.view()).map_err(|e| e.with_column_names(&names)))
        .collect::<Result<Vec<_>, _>>()
        .at(Stage::Transform)?;
    lap(Stage::Transform, &mut timings);

    let fits: Vec<PrecisionFit<F>> = transformed
        .par_iter()
        .zip(ensemble.seeds.par_iter())
        .map(|(t, &s)| {
            fit_precision(t.values.view(), lambda_for_member(cfg.lambda, s)).map_err(|e| e.with_column_names(&names))
        })
        .collect::<Result<Vec<_>, _>>()
        .at(Stage::Fit)?;
    lap(Stage::Fit, &mut timings);

    let variables = augmented.variables();
    let table = pool_partial_correlations(&fits, &variables).at(Stage::Pool)?;
    lap(Stage::Pool, &mut timings);

    let table = edge_p_values(table, d.n_rows(), variables.len()).at(Stage::PValues)?;
    lap(Stage::PValues, &mut timings);

    let alpha = F::lit(cfg.alpha);
    let arcs = extract_missingness_arcs(&table, alpha).at(Stage::Arcs)?;
    lap(Stage::Arcs, &mut timings);

    let findings = detect_mnar(&arcs, &table, alpha).at(Stage::Mnar)?;
    lap(Stage::Mnar, &mut timings);

    Ok(PipelineOutput {
        member_seeds: ensemble.seeds,
        lambdas: fits.iter().map(|f| f.lambda).collect(),
        augmented,
        table,
        arcs,
        findings,
        timings_ms: timings,
    })
}

/// Seed of member `k` as used by [`run_pipeline`].
pub fn member_seed(master: u64, k: usize) -> u64 {
    split_seed(master, k as u64)
}
