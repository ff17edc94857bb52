//! Synthetic Gaussian data with controlled missingness mechanisms, and a
//! benchmark that scores the pipeline against the known truth.
//!
//! Mechanisms use a logistic link on the latent (pre-masking) values:
//!
//! * MCAR: `P(missing) = rate`
//! * MAR:  `P(missing_i) = σ(logit(rate) + slope · driver_i)`
//! * MNAR: `P(missing_i) = σ(logit(rate) + slope · target_i)`

use std::collections::{BTreeMap, BTreeSet};

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Category, Dataset, VariableMeta};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, max_asymmetry, solve_upper_transposed, spd_inverse};
use crate::pipeline::{run_pipeline, PipelineConfig};

/// `n` draws from `N(0, Θ⁻¹)` via `x = L⁻ᵀ ε` with `Θ = L Lᵀ`.
pub fn generate_gaussian(precision: ArrayView2<f64>, n: usize, seed: u64) -> Result<Array2<f64>> {
    if max_asymmetry(precision) > 1e-12 {
        return Err(Error::Contract("precision matrix is not symmetric".into()));
    }
    let l = cholesky(precision).map_err(|e| Error::Contract(format!("precision matrix is not SPD: {e}")))?;
    let p = precision.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Array2::<f64>::zeros((n, p));
    let mut eps = vec![0.0; p];
    for mut row in out.rows_mut() {
        for e in eps.iter_mut() {
            *e = StandardNormal.sample(&mut rng);
        }
        solve_upper_transposed(l.view(), &mut eps);
        row.iter_mut().zip(&eps).for_each(|(dst, &v)| *dst = v);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MechanismKind {
    #[serde(alias = "mcar")]
    MCAR,
    #[serde(alias = "mar")]
    MAR,
    #[serde(alias = "mnar")]
    MNAR,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanismSpec {
    pub kind: MechanismKind,
    pub target: String,
    pub rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub driver: Option<String>,
    #[serde(default)]
    pub slope: f64,
    #[serde(default)]
    pub seed: u64,
}

impl MechanismSpec {
    fn problems(&self, names: &[String]) -> Vec<String> {
        let mut out = Vec::new();
        let here = format!("mechanism on '{}'", self.target);
        if !names.contains(&self.target) {
            out.push(format!("{here}: target is not a variable"));
        }
        if !(self.rate > 0.0 && self.rate < 1.0) {
            out.push(format!("{here}: rate {} outside (0, 1)", self.rate));
        }
        if !self.slope.is_finite() {
            out.push(format!("{here}: slope must be finite"));
        }
        match (self.kind, &self.driver) {
            (MechanismKind::MAR, None) => out.push(format!("{here}: MAR needs a driver")),
            (MechanismKind::MAR, Some(d)) if d == &self.target => {
                out.push(format!("{here}: MAR driver must differ from the target"))
            }
            (MechanismKind::MAR, Some(d)) if !names.contains(d) => {
                out.push(format!("{here}: driver '{d}' is not a variable"))
            }
            (MechanismKind::MCAR | MechanismKind::MNAR, Some(_)) => {
                out.push(format!("{here}: only MAR takes a driver"))
            }
            _ => {}
        }
        out
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-row probability that the target cell goes missing.
pub fn missing_probabilities(latent: ArrayView2<f64>, names: &[String], spec: &MechanismSpec) -> Result<Vec<f64>> {
    let problems = spec.problems(names);
    if !problems.is_empty() {
        return Err(Error::Contract(problems.join("; ")));
    }
    let col = |name: &str| names.iter().position(|n| n == name).expect("validated");
    let base = logit(spec.rate);
    let probs = match spec.kind {
        MechanismKind::MCAR => vec![spec.rate; latent.nrows()],
        MechanismKind::MAR => {
            let d = col(spec.driver.as_deref().expect("validated"));
            latent.column(d).iter().map(|&x| logistic(base + spec.slope * x)).collect()
        }
        MechanismKind::MNAR => {
            let t = col(&spec.target);
            latent.column(t).iter().map(|&x| logistic(base + spec.slope * x)).collect()
        }
    };
    Ok(probs)
}

/// Per-row missing probability, keyed by target variable.
pub type MissingProbabilities = BTreeMap<String, Vec<f64>>;

/// Mask the target cells of `latent` according to each mechanism in turn.
/// Returns the masked dataset and the per-row missing probabilities keyed
/// by target.
pub fn apply_mechanisms(
    latent: ArrayView2<f64>,
    variables: Vec<VariableMeta>,
    specs: &[MechanismSpec],
) -> Result<(Dataset<f64>, MissingProbabilities)> {
    let names: Vec<String> = variables.iter().map(|v| v.name.clone()).collect();
    let mut mask = Array2::from_elem(latent.dim(), true);
    let mut probs = BTreeMap::new();
    for spec in specs {
        if probs.contains_key(&spec.target) {
            return Err(Error::Contract(format!("'{}' has more than one mechanism", spec.target)));
        }
        let pr = missing_probabilities(latent, &names, spec)?;
        let t = names.iter().position(|n| n == &spec.target).expect("validated");
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        for (i, &pi) in pr.iter().enumerate() {
            if rng.random::<f64>() < pi {
                mask[[i, t]] = false;
            }
        }
        probs.insert(spec.target.clone(), pr);
    }
    let d = Dataset::new(variables, latent.to_owned(), mask)?;
    Ok((d, probs))
}

pub fn apply_mechanism(latent: ArrayView2<f64>, variables: Vec<VariableMeta>, spec: &MechanismSpec) -> Result<Dataset<f64>> {
    apply_mechanisms(latent, variables, std::slice::from_ref(spec)).map(|(d, _)| d)
}

/// Input of `simulate`: a Gaussian model given by its precision or its
/// covariance, plus missingness mechanisms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub n: usize,
    pub seed: u64,
    pub variables: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<BTreeMap<String, Category>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub mechanisms: Vec<MechanismSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub variables: Vec<String>,
    pub precision: Vec<Vec<f64>>,
    pub mechanisms: Vec<MechanismSpec>,
    /// Per-row missing probability of each target variable.
    pub missing_probabilities: BTreeMap<String, Vec<f64>>,
}

impl GroundTruth {
    pub fn mechanism_for(&self, target: &str) -> Option<&MechanismSpec> {
        self.mechanisms.iter().find(|m| m.target == target)
    }
}

fn to_matrix(rows: &[Vec<f64>], p: usize, what: &str, problems: &mut Vec<String>) -> Option<Array2<f64>> {
    if rows.len() != p || rows.iter().any(|r| r.len() != p) {
        problems.push(format!("{what} must be {p}x{p}"));
        return None;
    }
    Some(Array2::from_shape_fn((p, p), |(i, j)| rows[i][j]))
}

impl SimulationSpec {
    /// The precision matrix, after checking every field. All problems are
    /// reported together.
    pub fn validate(&self) -> Result<Array2<f64>> {
        let mut problems = Vec::new();
        let p = self.variables.len();
        if self.n < 1 {
            problems.push("n must be at least 1".to_string());
        }
        if p == 0 {
            problems.push("variables must not be empty".to_string());
        }
        let unique: BTreeSet<&String> = self.variables.iter().collect();
        if unique.len() != p {
            problems.push("variables contain duplicates".to_string());
        }
        let precision = match (&self.precision, &self.covariance) {
            (Some(_), Some(_)) => {
                problems.push("give either precision or covariance, not both".into());
                None
            }
            (None, None) => {
                problems.push("one of precision or covariance is required".into());
                None
            }
            (Some(rows), None) => to_matrix(rows, p, "precision", &mut problems),
            (None, Some(rows)) => to_matrix(rows, p, "covariance", &mut problems).and_then(|c| {
                if max_asymmetry(c.view()) > 1e-12 {
                    problems.push("covariance is not symmetric".into());
                    return None;
                }
                match spd_inverse(c.view()) {
                    Ok(t) => Some(t),
                    Err(_) => {
                        problems.push("covariance is not positive definite".into());
                        None
                    }
                }
            }),
        };
        if let Some(t) = &precision {
            if max_asymmetry(t.view()) > 1e-12 {
                problems.push("precision is not symmetric".into());
            } else if cholesky(t.view()).is_err() {
                problems.push("precision is not positive definite".into());
            }
        }
        let mut targets = BTreeSet::new();
        for m in &self.mechanisms {
            problems.extend(m.problems(&self.variables));
            if !targets.insert(&m.target) {
                problems.push(format!("'{}' has more than one mechanism", m.target));
            }
        }
        if let Some(cats) = &self.categories {
            for k in cats.keys() {
                if !self.variables.contains(k) {
                    problems.push(format!("categories name unknown variable '{k}'"));
                }
            }
        }
        match precision {
            Some(t) if problems.is_empty() => Ok(t),
            _ => Err(Error::Config(problems.join("; "))),
        }
    }

    fn variable_meta(&self) -> Vec<VariableMeta> {
        self.variables
            .iter()
            .map(|n| {
                let cat = self
                    .categories
                    .as_ref()
                    .and_then(|c| c.get(n).copied())
                    .unwrap_or_default();
                VariableMeta::observation(n.clone(), cat)
            })
            .collect()
    }
}

pub fn simulate(spec: &SimulationSpec) -> Result<(Dataset<f64>, GroundTruth)> {
    let precision = spec.validate()?;
    let latent = generate_gaussian(precision.view(), spec.n, spec.seed)?;
    let (d, probs) = apply_mechanisms(latent.view(), spec.variable_meta(), &spec.mechanisms)?;
    let truth = GroundTruth {
        variables: spec.variables.clone(),
        precision: precision.rows().into_iter().map(|r| r.to_vec()).collect(),
        mechanisms: spec.mechanisms.clone(),
        missing_probabilities: probs,
    };
    Ok((d, truth))
}

const MECHANISM_SEED_SALT: u64 = 0x6A09_E667_F3BC_C908;

/// Four-variable design: `target` correlated with `covariate` at `rho`,
/// and two variables independent of both (`driver`, `noise`). One
/// mechanism acts on `target`; MAR is driven by `driver`.
pub fn covariate_design(kind: MechanismKind, n: usize, rate: f64, slope: f64, rho: f64, seed: u64) -> SimulationSpec {
    let cov = vec![
        vec![1.0, rho, 0.0, 0.0],
        vec![rho, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0],
    ];
    SimulationSpec {
        n,
        seed,
        variables: ["target", "covariate", "driver", "noise"].map(String::from).to_vec(),
        categories: None,
        precision: None,
        covariance: Some(cov),
        mechanisms: vec![MechanismSpec {
            kind,
            target: "target".into(),
            rate,
            driver: (kind == MechanismKind::MAR).then(|| "driver".to_string()),
            slope,
            seed: seed ^ MECHANISM_SEED_SALT,
        }],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub arcs: usize,
    pub findings: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MechanismScore {
    pub kind: Option<MechanismKind>,
    /// Mechanisms of this kind across successful replicates.
    pub cases: usize,
    /// MAR: driver→indicator arc found. MNAR: self-arc found. `None` for MCAR.
    pub detection_power: Option<f64>,
    /// Fraction of cases with a significant self-arc.
    pub self_arc_rate: f64,
    /// Among cases with a significant self-arc, the fraction whose MNAR
    /// finding names at least one witness.
    pub witness_rate: Option<f64>,
    /// Significant arcs among mixed pairs that are independent by
    /// construction, over the number of such pairs tested.
    pub false_arc_rate: Option<f64>,
    pub null_pairs_tested: usize,
    pub false_arcs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub replicates: usize,
    pub failures: usize,
    pub alpha: f64,
    pub scores: Vec<MechanismScore>,
    pub outcomes: Vec<ReplicateOutcome>,
}

impl BenchmarkReport {
    pub fn score(&self, kind: MechanismKind) -> Option<&MechanismScore> {
        self.scores.iter().find(|s| s.kind == Some(kind))
    }
}

/// Variables in a different connected component of the covariance graph
/// than every listed variable; these are independent of them.
fn unrelated_to(cov: &Array2<f64>, anchors: &[usize]) -> Vec<bool> {
    let p = cov.nrows();
    let mut reach = vec![false; p];
    let mut stack: Vec<usize> = anchors.to_vec();
    while let Some(v) = stack.pop() {
        if reach[v] {
            continue;
        }
        reach[v] = true;
        for u in 0..p {
            if !reach[u] && cov[[v, u]].abs() > 1e-12 {
                stack.push(u);
            }
        }
    }
    reach.iter().map(|r| !r).collect()
}

#[derive(Default)]
struct Tally {
    cases: usize,
    detected: usize,
    self_arcs: usize,
    witnessed: usize,
    null_pairs: usize,
    false_arcs: usize,
}

/// Simulate and analyze every case, then score arc recovery per
/// mechanism kind. Replicate failures are recorded and do not abort the batch.
pub fn run_benchmark(cases: &[SimulationSpec], config: &PipelineConfig) -> Result<BenchmarkReport> {
    if cases.is_empty() {
        return Err(Error::Contract("benchmark needs at least one replicate".into()));
    }
    config.validate()?;
    struct Scored {
        outcome: ReplicateOutcome,
        tallies: Vec<(MechanismKind, Tally)>,
    }
    let scored: Vec<Scored> = cases
        .par_iter()
        .enumerate()
        .map(|(index, spec)| {
            let fail = |e: String| Scored {
                outcome: ReplicateOutcome {
                    index,
                    error: Some(e),
                    arcs: 0,
                    findings: 0,
                },
                tallies: Vec::new(),
            };
            let (data, truth) = match simulate(spec) {
                Ok(x) => x,
                Err(e) => return fail(e.to_string()),
            };
            let out = match run_pipeline(&data, config) {
                Ok(o) => o,
                Err(e) => return fail(e.to_string()),
            };
            let precision = Array2::from_shape_fn((truth.variables.len(), truth.variables.len()), |(i, j)| {
                truth.precision[i][j]
            });
            let cov = spd_inverse(precision.view()).expect("validated precision");
            let var_index = |n: &str| truth.variables.iter().position(|v| v == n).expect("known variable");
            let mut tallies = Vec::new();
            for mech in &truth.mechanisms {
                let Some(ind) = out.augmented.indicators.iter().find(|c| c.meta.parent.as_deref() == Some(&mech.target))
                else {
                    continue;
                };
                let comp = &ind.meta.name;
                let sig = |obs: &str| {
                    out.arcs
                        .iter()
                        .any(|a| a.completeness_var == *comp && a.observation_var == obs)
                };
                let mut t = Tally {
                    cases: 1,
                    ..Tally::default()
                };
                let self_arc = sig(&mech.target);
                t.self_arcs = self_arc as usize;
                if self_arc {
                    t.witnessed = out
                        .findings
                        .iter()
                        .any(|f| f.completeness_var == *comp && !f.witnesses.is_empty())
                        as usize;
                }
                t.detected = match mech.kind {
                    MechanismKind::MCAR => 0,
                    MechanismKind::MAR => sig(mech.driver.as_deref().expect("validated")) as usize,
                    MechanismKind::MNAR => self_arc as usize,
                };
                let mut anchors = vec![var_index(&mech.target)];
                if let Some(d) = &mech.driver {
                    anchors.push(var_index(d));
                }
                let unrelated = unrelated_to(&cov, &anchors);
                for (k, name) in truth.variables.iter().enumerate() {
                    let is_null = match mech.kind {
                        MechanismKind::MCAR => true,
                        _ => unrelated[k],
                    };
                    if is_null {
                        t.null_pairs += 1;
                        t.false_arcs += sig(name) as usize;
                    }
                }
                tallies.push((mech.kind, t));
            }
            Scored {
                outcome: ReplicateOutcome {
                    index,
                    error: None,
                    arcs: out.arcs.len(),
                    findings: out.findings.len(),
                },
                tallies,
            }
        })
        .collect();

    let mut by_kind: BTreeMap<MechanismKind, Tally> = BTreeMap::new();
    for s in &scored {
        for (kind, t) in &s.tallies {
            let acc = by_kind.entry(*kind).or_default();
            acc.cases += t.cases;
            acc.detected += t.detected;
            acc.self_arcs += t.self_arcs;
            acc.witnessed += t.witnessed;
            acc.null_pairs += t.null_pairs;
            acc.false_arcs += t.false_arcs;
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { None } else { Some(a as f64 / b as f64) };
    let scores = by_kind
        .into_iter()
        .map(|(kind, t)| MechanismScore {
            kind: Some(kind),
            cases: t.cases,
            detection_power: if kind == MechanismKind::MCAR { None } else { ratio(t.detected, t.cases) },
            self_arc_rate: ratio(t.self_arcs, t.cases).unwrap_or(0.0),
            witness_rate: ratio(t.witnessed, t.self_arcs),
            false_arc_rate: ratio(t.false_arcs, t.null_pairs),
            null_pairs_tested: t.null_pairs,
            false_arcs: t.false_arcs,
        })
        .collect();
    let outcomes: Vec<ReplicateOutcome> = scored.into_iter().map(|s| s.outcome).collect();
    Ok(BenchmarkReport {
        replicates: cases.len(),
        failures: outcomes.iter().filter(|o| o.error.is_some()).count(),
        alpha: config.alpha,
        scores,
        outcomes,
    })
}
