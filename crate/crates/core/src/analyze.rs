//! File-level analysis: read a CSV, run the pipeline, write the outputs.

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::augment::make_completeness_indicators;
use crate::dataset::{missing_profile, parse_csv, Dataset, ParseOptions, Schema, DEFAULT_NA_TOKENS};
use crate::error::Error;
use crate::ggm::DEFAULT_ROTATIONS;
use crate::impute::{make_ensemble, DEFAULT_IMPUTATIONS};
use crate::pipeline::{run_pipeline, AtStage, LambdaMethod, PipelineConfig, PipelineError, Stage};
use crate::pooling::DEFAULT_ALPHA;
use crate::report::{remove_all, write_outputs, AnalysisReport, RunMetadata};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaMethodName {
    #[default]
    Ric,
    Fixed,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F64,
    F32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub input: PathBuf,
    pub schema: Option<PathBuf>,
    pub alpha: f64,
    pub n_imputations: usize,
    pub seed: u64,
    pub lambda_method: LambdaMethodName,
    pub lambda_value: Option<f64>,
    pub n_rotations: usize,
    pub out_dir: PathBuf,
    pub na_tokens: Vec<String>,
    pub precision: Precision,
    /// Also write each imputed member as `imputation_<k>.csv`.
    pub dump_imputations: bool,
}

impl AnalysisConfig {
    pub fn new(input: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        AnalysisConfig {
            input: input.into(),
            schema: None,
            alpha: DEFAULT_ALPHA,
            n_imputations: DEFAULT_IMPUTATIONS,
            seed: 0,
            lambda_method: LambdaMethodName::Ric,
            lambda_value: None,
            n_rotations: DEFAULT_ROTATIONS,
            out_dir: out_dir.into(),
            na_tokens: DEFAULT_NA_TOKENS.iter().map(|s| s.to_string()).collect(),
            precision: Precision::F64,
            dump_imputations: false,
        }
    }

    pub fn pipeline_config(&self) -> Result<PipelineConfig, Error> {
        let lambda = match (self.lambda_method, self.lambda_value) {
            (LambdaMethodName::Ric, _) => LambdaMethod::Ric {
                n_rotations: self.n_rotations,
            },
            (LambdaMethodName::Fixed, Some(value)) => LambdaMethod::Fixed { value },
            (LambdaMethodName::Fixed, None) => {
                return Err(Error::Config("lambda_method = fixed needs lambda_value".into()))
            }
        };
        let cfg = PipelineConfig {
            alpha: self.alpha,
            n_imputations: self.n_imputations,
            seed: self.seed,
            lambda,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Run the full analysis and write report.json, arcs.csv and graph.dot
/// into `config.out_dir`. Nothing is left behind on failure.
pub fn analyze(config: &AnalysisConfig) -> Result<AnalysisReport, PipelineError> {
    let pipeline = config.pipeline_config().at(Stage::Config)?;
    let schema = config
        .schema
        .as_deref()
        .map(Schema::from_json_file)
        .transpose()
        .at(Stage::Parse)?;
    let options = ParseOptions {
        na_tokens: config.na_tokens.clone(),
        schema,
    };
    match config.precision {
        Precision::F64 => analyze_as::<f64>(config, &pipeline, &options),
        Precision::F32 => analyze_as::<f32>(config, &pipeline, &options),
    }
}

fn analyze_as<F: Scalar>(
    config: &AnalysisConfig,
    pipeline: &PipelineConfig,
    options: &ParseOptions,
) -> Result<AnalysisReport, PipelineError> {
    let started_at_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let t0 = std::time::Instant::now();
    let data: Dataset<F> = parse_csv(&config.input, options).at(Stage::Parse)?;
    let parse_ms = t0.elapsed().as_secs_f64() * 1e3;
    let profile = missing_profile(&data);

    let out = run_pipeline(&data, pipeline)?;
    let mut warnings = Vec::new();
    if out.augmented.indicators.is_empty() {
        warnings.push("no completeness indicators generated".to_string());
    }
    let mut timings_ms = std::collections::BTreeMap::new();
    timings_ms.insert(Stage::Parse.as_str().to_string(), parse_ms);
    for (stage, ms) in &out.timings_ms {
        timings_ms.insert(stage.as_str().to_string(), *ms);
    }
    let run = RunMetadata {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: pipeline.seed,
        alpha: pipeline.alpha,
        n_imputations: pipeline.n_imputations,
        lambda: pipeline.lambda,
        precision: match config.precision {
            Precision::F64 => "f64".into(),
            Precision::F32 => "f32".into(),
        },
        n_rows: data.n_rows(),
        n_variables: out.table.p(),
        warnings,
        started_at_unix,
        timings_ms,
    };
    let report = AnalysisReport::from_output(profile, &out, run);

    let mut written = write_outputs(&report, &config.out_dir).at(Stage::Write)?;
    if config.dump_imputations {
        if let Err(e) = dump_members(&data, pipeline, config, &mut written) {
            remove_all(&written);
            return Err(e);
        }
    }
    Ok(report)
}

fn dump_members<F: Scalar>(
    data: &Dataset<F>,
    pipeline: &PipelineConfig,
    config: &AnalysisConfig,
    written: &mut Vec<PathBuf>,
) -> Result<(), PipelineError> {
    let augmented = make_completeness_indicators(data);
    let ensemble = make_ensemble(&augmented, pipeline.n_imputations, pipeline.seed).at(Stage::Impute)?;
    for (k, m) in ensemble.members.iter().enumerate() {
        let d = Dataset::complete(ensemble.variables.clone(), m.clone()).at(Stage::Write)?;
        let path = config.out_dir.join(format!("imputation_{k:03}.csv"));
        let file = std::fs::File::create(&path)
            .map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })
            .at(Stage::Write)?;
        written.push(path);
        d.write_csv(std::io::BufWriter::new(file), "NA").at(Stage::Write)?;
    }
    Ok(())
}
