//! Analysis report and its exports (JSON, arc CSV, DOT graph).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{ProfileRow, VariableKind, VariableMeta};
use crate::error::{Error, Result};
use crate::pipeline::{LambdaMethod, PipelineOutput};
use crate::pooling::ArcSign;
use crate::scalar::Scalar;

pub const REPORT_FILE: &str = "report.json";
pub const ARCS_FILE: &str = "arcs.csv";
pub const GRAPH_FILE: &str = "graph.dot";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub a: String,
    pub b: String,
    pub pooled_rho: f64,
    pub p_value: f64,
    pub support_count: usize,
    pub member_rhos: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcRecord {
    pub obs_var: String,
    pub comp_var: String,
    pub parent_var: String,
    pub rho: f64,
    pub p: f64,
    pub counterpart_rho: Option<f64>,
    pub counterpart_p: Option<f64>,
    pub sign: ArcSign,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FindingRecord {
    pub variable: String,
    pub completeness_var: String,
    pub self_arc_rho: f64,
    pub self_arc_p: f64,
    pub witnesses: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub version: String,
    pub seed: u64,
    pub alpha: f64,
    pub n_imputations: usize,
    pub lambda: LambdaMethod,
    pub precision: String,
    pub n_rows: usize,
    pub n_variables: usize,
    pub warnings: Vec<String>,
    /// Wall-clock fields; the only parts of a report that vary between
    /// identical runs.
    pub started_at_unix: u64,
    pub timings_ms: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub missing_profile: Vec<ProfileRow>,
    pub variables: Vec<VariableMeta>,
    pub excluded_constant: Vec<String>,
    pub member_seeds: Vec<u64>,
    pub lambdas: Vec<f64>,
    pub edges: Vec<EdgeRecord>,
    pub arcs: Vec<ArcRecord>,
    pub mnar_findings: Vec<FindingRecord>,
    pub run: RunMetadata,
}

impl AnalysisReport {
    pub fn from_output<F: Scalar>(profile: Vec<ProfileRow>, out: &PipelineOutput<F>, run: RunMetadata) -> Self {
        let table = &out.table;
        let name = |i: usize| table.variables[i].name.clone();
        AnalysisReport {
            missing_profile: profile,
            variables: table.variables.clone(),
            excluded_constant: out.augmented.excluded_constant.clone(),
            member_seeds: out.member_seeds.clone(),
            lambdas: out.lambdas.iter().map(|l| l.as_f64()).collect(),
            edges: table
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    a: name(e.i),
                    b: name(e.j),
                    pooled_rho: e.pooled_rho.as_f64(),
                    p_value: e.p_value.map(Scalar::as_f64).unwrap_or(1.0),
                    support_count: e.support_count,
                    member_rhos: e.member_rhos.iter().map(|r| r.as_f64()).collect(),
                })
                .collect(),
            arcs: out
                .arcs
                .iter()
                .map(|a| ArcRecord {
                    obs_var: a.observation_var.clone(),
                    comp_var: a.completeness_var.clone(),
                    parent_var: a.parent_var.clone(),
                    rho: a.pooled_rho.as_f64(),
                    p: a.p_value.as_f64(),
                    counterpart_rho: a.counterpart_rho.map(Scalar::as_f64),
                    counterpart_p: a.counterpart_p.map(Scalar::as_f64),
                    sign: a.sign,
                })
                .collect(),
            mnar_findings: out
                .findings
                .iter()
                .map(|f| FindingRecord {
                    variable: f.variable.clone(),
                    completeness_var: f.completeness_var.clone(),
                    self_arc_rho: f.self_arc_rho.as_f64(),
                    self_arc_p: f.self_arc_p.as_f64(),
                    witnesses: f.witnesses.clone(),
                })
                .collect(),
            run,
        }
    }

    /// Copy with the wall-clock fields cleared.
    pub fn without_volatile(&self) -> Self {
        let mut r = self.clone();
        r.run.started_at_unix = 0;
        r.run.timings_ms.clear();
        r
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Contract(format!("report serialization: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("unreadable report: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    Json,
    Csv,
}

impl FromStr for ExportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(ExportFormat::Dot),
            "json" => Ok(ExportFormat::Json),
            "csv" => Ok(ExportFormat::Csv),
            other => Err(Error::Config(format!("unknown export format '{other}' (expected dot, json or csv)"))),
        }
    }
}

pub fn export(report: &AnalysisReport, format: ExportFormat) -> Result<String> {
    match format {
        ExportFormat::Dot => Ok(arcs_dot(report)),
        ExportFormat::Csv => arcs_csv(&report.arcs),
        ExportFormat::Json => {
            serde_json::to_string_pretty(&report.arcs).map_err(|e| Error::Contract(format!("arc serialization: {e}")))
        }
    }
}

/// Shortest round-trip text, in exponent form below 1e-4.
fn num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-4 {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn arcs_csv(arcs: &[ArcRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Error::Contract(format!("csv encoding: {e}"));
    w.write_record(["obs_var", "comp_var", "rho", "p", "counterpart_rho", "counterpart_p", "sign"])
        .map_err(fail)?;
    for a in arcs {
        w.write_record([
            a.obs_var.clone(),
            a.comp_var.clone(),
            num(a.rho),
            num(a.p),
            opt(a.counterpart_rho),
            opt(a.counterpart_p),
            a.sign.as_str().to_string(),
        ])
        .map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Contract(format!("csv encoding: {e}")))?;
    Ok(String::from_utf8(bytes).expect("utf-8 input"))
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Bipartite DOT graph: observation variables on the left, completeness
/// variables on the right, green edges for positive and red for negative
/// pooled partial correlation.
pub fn arcs_dot(report: &AnalysisReport) -> String {
    let mut s = String::new();
    s.push_str("graph missingness {\n");
    s.push_str("  rankdir=LR;\n  node [shape=box];\n");
    for (cluster, kind) in [("observation", VariableKind::Observation), ("completeness", VariableKind::Completeness)] {
        let _ = writeln!(s, "  subgraph cluster_{cluster} {{");
        let _ = writeln!(s, "    label={};\n    rank=same;", quote(cluster));
        for v in report.variables.iter().filter(|v| v.kind == kind) {
            let _ = writeln!(s, "    {};", quote(&v.name));
        }
        s.push_str("  }\n");
    }
    for a in &report.arcs {
        let color = match a.sign {
            ArcSign::Positive => "green",
            ArcSign::Negative => "red",
        };
        let label = format!("ρ={:.4}, p={:.3e}", a.rho, a.p);
        let _ = writeln!(
            s,
            "  {} -- {} [color={color}, label={}];",
            quote(&a.obs_var),
            quote(&a.comp_var),
            quote(&label)
        );
    }
    s.push_str("}\n");
    s
}

/// Write report.json, arcs.csv and graph.dot into `dir`. On any failure,
/// files written by this call are removed.
pub fn write_outputs(report: &AnalysisReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let io = |path: &Path, source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let contents = [
        (REPORT_FILE, report.to_json()?),
        (ARCS_FILE, arcs_csv(&report.arcs)?),
        (GRAPH_FILE, arcs_dot(report)),
    ];
    let mut written = Vec::new();
    for (file, body) in contents {
        let path = dir.join(file);
        if let Err(e) = std::fs::write(&path, body) {
            remove_all(&written);
            return Err(io(&path, e));
        }
        written.push(path);
    }
    Ok(written)
}

pub fn remove_all(paths: &[PathBuf]) {
    for p in paths {
        let _ = std::fs::remove_file(p);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Category;

    fn report(arcs: Vec<ArcRecord>) -> AnalysisReport {
        let a = VariableMeta::observation("a", Category::BloodTests);
        let z = VariableMeta::observation("z", Category::Other);
        let c = VariableMeta::completeness("a_complete", &a);
        AnalysisReport {
            missing_profile: vec![],
            variables: vec![a, z, c],
            excluded_constant: vec!["z".into()],
            member_seeds: vec![1],
            lambdas: vec![0.1],
            edges: vec![],
            arcs,
            mnar_findings: vec![],
            run: RunMetadata {
                version: "test".into(),
                seed: 1,
                alpha: 0.01,
                n_imputations: 1,
                lambda: LambdaMethod::default(),
                precision: "f64".into(),
                n_rows: 10,
                n_variables: 3,
                warnings: vec![],
                started_at_unix: 123,
                timings_ms: BTreeMap::from([("fit".to_string(), 1.5)]),
            },
        }
    }

    fn arc(rho: f64) -> ArcRecord {
        ArcRecord {
            obs_var: "z".into(),
            comp_var: "a_complete".into(),
            parent_var: "a".into(),
            rho,
            p: 1e-5,
            counterpart_rho: Some(0.3),
            counterpart_p: Some(0.002),
            sign: ArcSign::of(rho),
        }
    }

    #[test]
    fn empty_graph_has_both_columns() {
        let dot = arcs_dot(&report(vec![]));
        assert!(dot.contains("cluster_observation") && dot.contains("cluster_completeness"));
        assert!(dot.contains("\"a_complete\";"));
        assert!(!dot.contains("--"));
    }

    #[test]
    fn edge_colors_follow_sign() {
        let dot = arcs_dot(&report(vec![arc(0.2)]));
        assert_eq!(dot.matches("--").count(), 1);
        assert!(dot.contains("color=green"));
        let dot = arcs_dot(&report(vec![arc(-0.2)]));
        assert!(dot.contains("color=red") && !dot.contains("color=green"));
        assert!(dot.contains("ρ=-0.2000, p=1.000e-5"));
    }

    #[test]
    fn csv_columns() {
        let text = arcs_csv(&[arc(0.2)]).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "obs_var,comp_var,rho,p,counterpart_rho,counterpart_p,sign");
        assert_eq!(lines.next().unwrap(), "z,a_complete,0.2,1e-5,0.3,0.002,positive");
        assert!(lines.next().is_none());
    }

    #[test]
    fn json_round_trip() {
        let r = report(vec![arc(-0.123456789012345)]);
        let back = AnalysisReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn unknown_format() {
        assert!("png".parse::<ExportFormat>().is_err());
        assert_eq!("DOT".parse::<ExportFormat>().unwrap(), ExportFormat::Dot);
    }

    #[test]
    fn volatile_fields_cleared() {
        let r = report(vec![]).without_volatile();
        assert_eq!(r.run.started_at_unix, 0);
        assert!(r.run.timings_ms.is_empty());
    }
}
