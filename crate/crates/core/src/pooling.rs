//! Fisher-z pooling of partial correlations across an imputation
//! ensemble, edge significance, missingness arcs and MNAR evidence.
//!
//! Pooling is the plain mean in z-space, `tanh(mean(atanh ρ_k))`. There is
//! no between-imputation variance term, so p-values do not account for
//! imputation uncertainty.

use serde::{Deserialize, Serialize};

use crate::dataset::{VariableKind, VariableMeta};
use crate::error::{Error, Result};
use crate::ggm::PrecisionFit;
use crate::scalar::Scalar;
use crate::stats::two_sided_p;

pub const DEFAULT_ALPHA: f64 = 0.01;

/// Fisher z, computed on `|ρ|` so that `z(−ρ) = −z(ρ)` holds exactly.
pub fn fisher_z<F: Scalar>(rho: F) -> F {
    rho.abs().atanh().copysign(rho)
}

pub fn inverse_fisher_z<F: Scalar>(z: F) -> F {
    z.abs().tanh().copysign(z)
}

/// `tanh(Σ atanh(ρ_k) / K)`. Identical members pool to themselves exactly.
pub fn pool_fisher<F: Scalar>(rhos: &[F]) -> F {
    if let Some(&first) = rhos.first() {
        if rhos.iter().all(|&r| r == first) {
            return first;
        }
    }
    let k = F::from_usize(rhos.len()).expect("count");
    let z = rhos.iter().fold(F::zero(), |acc, &r| acc + fisher_z(r));
    inverse_fisher_z(z / k)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PooledEdge<F> {
    pub i: usize,
    pub j: usize,
    pub pooled_rho: F,
    /// Set by [`edge_p_values`].
    pub p_value: Option<F>,
    pub member_rhos: Vec<F>,
    /// Members whose sparse estimate has a nonzero `(i, j)` entry.
    pub support_count: usize,
}

/// Pooled statistics for every unordered pair `i < j`.
#[derive(Clone, Debug, PartialEq)]
pub struct PooledEdgeTable<F> {
    pub variables: Vec<VariableMeta>,
    pub n: usize,
    pub n_members: usize,
    pub edges: Vec<PooledEdge<F>>,
}

impl<F: Scalar> PooledEdgeTable<F> {
    pub fn p(&self) -> usize {
        self.variables.len()
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let p = self.p();
        a * (2 * p - a - 1) / 2 + (b - a - 1)
    }

    /// Edge for the unordered pair `{i, j}`; `i != j`.
    pub fn edge(&self, i: usize, j: usize) -> &PooledEdge<F> {
        assert_ne!(i, j, "no edge from a variable to itself");
        &self.edges[self.slot(i, j)]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    fn significant(&self, i: usize, j: usize, alpha: F) -> bool {
        matches!(self.edge(i, j).p_value, Some(p) if p < alpha)
    }
}

pub fn pool_partial_correlations<F: Scalar>(fits: &[PrecisionFit<F>], variables: &[VariableMeta]) -> Result<PooledEdgeTable<F>> {
    let first = fits
        .first()
        .ok_or_else(|| Error::Contract("no fits to pool".into()))?;
    let p = variables.len();
    for (k, f) in fits.iter().enumerate() {
        if f.dim() != p {
            return Err(Error::Contract(format!(
                "fit {k} covers {} variables, expected {p}",
                f.dim()
            )));
        }
        if f.n != first.n {
            return Err(Error::Contract(format!("fit {k} has n = {}, expected {}", f.n, first.n)));
        }
    }
    let mut edges = Vec::with_capacity(p * p.saturating_sub(1) / 2);
    for i in 0..p {
        for j in (i + 1)..p {
            let member_rhos: Vec<F> = fits.iter().map(|f| f.partial_corr[[i, j]]).collect();
            if let Some(r) = member_rhos.iter().find(|r| !(r.abs() < F::one())) {
                return Err(Error::Contract(format!(
                    "partial correlation {r} between '{}' and '{}' is not inside (-1, 1)",
                    variables[i].name, variables[j].name
                )));
            }
            edges.push(PooledEdge {
                i,
                j,
                pooled_rho: pool_fisher(&member_rhos),
                p_value: None,
                support_count: fits.iter().filter(|f| f.in_support(i, j)).count(),
                member_rhos,
            });
        }
    }
    Ok(PooledEdgeTable {
        variables: variables.to_vec(),
        n: first.n,
        n_members: fits.len(),
        edges,
    })
}

/// Degrees-of-freedom factor `n − (p − 2) − 3` for a partial correlation
/// conditioned on all other `p − 2` variables.
pub fn fisher_df(n: usize, p_vars: usize) -> Result<f64> {
    if n <= p_vars + 3 {
        return Err(Error::Contract(format!(
            "need n > p + 3 for edge tests (n = {n}, p = {p_vars})"
        )));
    }
    Ok(n as f64 - (p_vars as f64 - 2.0) - 3.0)
}

/// Two-sided p-value of `z = atanh(ρ) · √(n − (p − 2) − 3)`.
pub fn fisher_p_value<F: Scalar>(rho: F, n: usize, p_vars: usize) -> Result<F> {
    let z = fisher_z(rho.as_f64()) * fisher_df(n, p_vars)?.sqrt();
    Ok(F::lit(two_sided_p(z)))
}

pub fn edge_p_values<F: Scalar>(mut table: PooledEdgeTable<F>, n: usize, p_vars: usize) -> Result<PooledEdgeTable<F>> {
    let df = fisher_df(n, p_vars)?.sqrt();
    for e in &mut table.edges {
        let z = fisher_z(e.pooled_rho.as_f64()) * df;
        e.p_value = Some(F::lit(two_sided_p(z)));
    }
    Ok(table)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcSign {
    Positive,
    Negative,
}

impl ArcSign {
    pub fn of<F: Scalar>(rho: F) -> Self {
        if rho < F::zero() {
            ArcSign::Negative
        } else {
            ArcSign::Positive
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ArcSign::Positive => "positive",
            ArcSign::Negative => "negative",
        }
    }
}

/// A significant link between an observation variable and a
/// completeness variable.
#[derive(Clone, Debug, PartialEq)]
pub struct MissingnessArc<F> {
    pub observation_var: String,
    pub completeness_var: String,
    /// Observation variable the completeness variable describes.
    pub parent_var: String,
    pub pooled_rho: F,
    pub p_value: F,
    pub sign: ArcSign,
    /// Pooled partial correlation of `(observation_var, parent_var)`;
    /// `None` for a self-arc, where the two coincide.
    pub counterpart_rho: Option<F>,
    pub counterpart_p: Option<F>,
}

impl<F> MissingnessArc<F> {
    pub fn is_self_arc(&self) -> bool {
        self.observation_var == self.parent_var
    }
}

fn p_of<F: Scalar>(e: &PooledEdge<F>) -> Result<F> {
    e.p_value
        .ok_or_else(|| Error::Contract("edge p-values have not been computed".into()))
}

/// Mixed-kind pairs with `p < alpha`, sorted by p-value (ties keep table order).
pub fn extract_missingness_arcs<F: Scalar>(table: &PooledEdgeTable<F>, alpha: F) -> Result<Vec<MissingnessArc<F>>> {
    if !(alpha > F::zero() && alpha < F::one()) {
        return Err(Error::Contract(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let vars = &table.variables;
    let mut arcs = Vec::new();
    for e in &table.edges {
        let (obs, comp) = match (vars[e.i].kind, vars[e.j].kind) {
            (VariableKind::Observation, VariableKind::Completeness) => (e.i, e.j),
            (VariableKind::Completeness, VariableKind::Observation) => (e.j, e.i),
            _ => continue,
        };
        let p = p_of(e)?;
        if !(p < alpha) {
            continue;
        }
        let parent_name = vars[comp].parent.clone().ok_or_else(|| {
            Error::Contract(format!("completeness variable '{}' has no parent", vars[comp].name))
        })?;
        let parent = table
            .index_of(&parent_name)
            .ok_or_else(|| Error::Contract(format!("parent '{parent_name}' is not in the table")))?;
        let (counterpart_rho, counterpart_p) = if parent == obs {
            (None, None)
        } else {
            let c = table.edge(obs, parent);
            (Some(c.pooled_rho), Some(p_of(c)?))
        };
        arcs.push(MissingnessArc {
            observation_var: vars[obs].name.clone(),
            completeness_var: vars[comp].name.clone(),
            parent_var: parent_name,
            pooled_rho: e.pooled_rho,
            p_value: p,
            sign: ArcSign::of(e.pooled_rho),
            counterpart_rho,
            counterpart_p,
        });
    }
    arcs.sort_by(|a, b| a.p_value.partial_cmp(&b.p_value).expect("finite p-values"));
    Ok(arcs)
}

/// Evidence that a variable's missingness depends on its own value: a
/// significant self-arc, plus the variables significantly linked to both
/// ends of it.
#[derive(Clone, Debug, PartialEq)]
pub struct MnarFinding<F> {
    pub variable: String,
    pub completeness_var: String,
    pub self_arc_rho: F,
    pub self_arc_p: F,
    pub witnesses: Vec<String>,
}

pub fn detect_mnar<F: Scalar>(arcs: &[MissingnessArc<F>], table: &PooledEdgeTable<F>, alpha: F) -> Result<Vec<MnarFinding<F>>> {
    let mut out = Vec::new();
    for arc in arcs.iter().filter(|a| a.is_self_arc() && a.p_value < alpha) {
        let a = table
            .index_of(&arc.observation_var)
            .ok_or_else(|| Error::Contract(format!("'{}' is not in the table", arc.observation_var)))?;
        let c = table
            .index_of(&arc.completeness_var)
            .ok_or_else(|| Error::Contract(format!("'{}' is not in the table", arc.completeness_var)))?;
        let witnesses = (0..table.p())
            .filter(|&z| z != a && z != c)
            .filter(|&z| table.significant(a, z, alpha) && table.significant(c, z, alpha))
            .map(|z| table.variables[z].name.clone())
            .collect();
        out.push(MnarFinding {
            variable: arc.observation_var.clone(),
            completeness_var: arc.completeness_var.clone(),
            self_arc_rho: arc.pooled_rho,
            self_arc_p: arc.p_value,
            witnesses,
        });
    }
    Ok(out)
}
