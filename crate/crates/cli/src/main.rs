use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use misgraph::analyze::{analyze, LambdaMethodName, Precision};
use misgraph::pipeline::PipelineConfig;
use misgraph::report::{export, AnalysisReport, ExportFormat};
use misgraph::simulate::{run_benchmark, simulate, SimulationSpec};

mod failure;
mod settings;

use failure::{Code, Failure};
use settings::{FileSettings, FlagSettings, OUT_ENV};

#[derive(Parser, Debug)]
#[command(name = "misgraph", version, about = "Graphical analysis of informative missingness in tabular data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the full analysis on a CSV file and write report.json, arcs.csv and graph.dot.
    Analyze(AnalyzeArgs),
    /// Generate a dataset with known missingness mechanisms from a JSON spec.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render the arcs of a saved report.
    Export {
        #[arg(long)]
        report: PathBuf,
        #[arg(long, value_enum)]
        format: FormatArg,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate and analyze replicates of a spec, scoring arc recovery.
    Benchmark {
        #[arg(long, required = true)]
        spec: Vec<PathBuf>,
        #[arg(long, default_value_t = 10)]
        replicates: u64,
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
        #[arg(long, default_value_t = 25)]
        imputations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args, Debug)]
struct AnalyzeArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    /// JSON object mapping variable names to categories.
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    imputations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    lambda_method: Option<LambdaArg>,
    #[arg(long)]
    lambda_value: Option<f64>,
    #[arg(long)]
    rotations: Option<usize>,
    /// Output directory [default: $MISGRAPH_OUT].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated cell values read as missing.
    #[arg(long, value_delimiter = ',')]
    na_tokens: Option<Vec<String>>,
    #[arg(long, value_enum)]
    precision: Option<PrecisionArg>,
    /// Also write every imputed dataset as imputation_<k>.csv.
    #[arg(long)]
    dump_imputations: bool,
    /// TOML file with any of the options above; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LambdaArg {
    Ric,
    Fixed,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PrecisionArg {
    F64,
    F32,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Dot,
    Json,
    Csv,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e.to_string().lines().next().unwrap_or_default().trim_start_matches("error: ").to_string();
            return fail(Failure::new(Code::Usage, "config", first));
        }
    };
    let result = match cli.command {
        Command::Analyze(args) => run_analyze(args),
        Command::Simulate { spec, out } => run_simulate(&spec, out),
        Command::Export { report, format, out } => run_export(&report, format, out.as_deref()),
        Command::Benchmark {
            spec,
            replicates,
            alpha,
            imputations,
            seed,
            out,
        } => run_bench(&spec, replicates, alpha, imputations, seed, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(f),
    }
}

fn fail(f: Failure) -> ExitCode {
    eprintln!("{f}");
    ExitCode::from(f.code.exit_status() as u8)
}

fn env_out() -> Option<PathBuf> {
    std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn run_analyze(args: AnalyzeArgs) -> Result<(), Failure> {
    let file = match &args.config {
        Some(p) => FileSettings::read(p)?,
        None => FileSettings::default(),
    };
    let flags = FlagSettings {
        input: args.input,
        schema: args.schema,
        alpha: args.alpha,
        imputations: args.imputations,
        seed: args.seed,
        lambda_method: args.lambda_method.map(|m| match m {
            LambdaArg::Ric => LambdaMethodName::Ric,
            LambdaArg::Fixed => LambdaMethodName::Fixed,
        }),
        lambda_value: args.lambda_value,
        rotations: args.rotations,
        out: args.out,
        na_tokens: args.na_tokens,
        precision: args.precision.map(|p| match p {
            PrecisionArg::F64 => Precision::F64,
            PrecisionArg::F32 => Precision::F32,
        }),
        dump_imputations: args.dump_imputations,
    };
    let cfg = settings::resolve(flags, file, env_out())?;
    let report = analyze(&cfg)?;
    for w in &report.run.warnings {
        log::warn!("{w}");
    }
    println!(
        "{} variables, {} indicators, {} arcs, {} MNAR findings -> {}",
        report.missing_profile.len(),
        report.variables.len() - report.missing_profile.len(),
        report.arcs.len(),
        report.mnar_findings.len(),
        cfg.out_dir.display()
    );
    Ok(())
}

fn read_spec(path: &Path) -> Result<SimulationSpec, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new(Code::Config, "config", format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::new(Code::Config, "config", format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, body: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, body).map_err(|e| Failure::new(Code::Io, "write", format!("{}: {e}", path.display())))
}

fn run_simulate(spec_path: &Path, out: Option<PathBuf>) -> Result<(), Failure> {
    let out = out.or_else(env_out).ok_or_else(|| {
        Failure::new(Code::Config, "config", format!("no output directory (use --out or {OUT_ENV})"))
    })?;
    let spec = read_spec(spec_path)?;
    let (data, truth) = simulate(&spec).map_err(|e| Failure::from_error("simulate", &e))?;
    std::fs::create_dir_all(&out).map_err(|e| Failure::new(Code::Io, "write", format!("{}: {e}", out.display())))?;
    let mut csv = Vec::new();
    data.write_csv(&mut csv, "NA").map_err(|e| Failure::from_error("write", &e))?;
    let truth_json = serde_json::to_string_pretty(&truth).map_err(|e| Failure::new(Code::Io, "write", e))?;
    let dataset = out.join("dataset.csv");
    write_file(&dataset, &csv)?;
    if let Err(e) = write_file(&out.join("truth.json"), truth_json.as_bytes()) {
        let _ = std::fs::remove_file(&dataset);
        return Err(e);
    }
    println!("{} rows x {} variables -> {}", data.n_rows(), data.n_columns(), out.display());
    Ok(())
}

fn emit(body: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => write_file(p, body.as_bytes()),
        None => std::io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| Failure::new(Code::Io, "write", e)),
    }
}

fn run_export(report: &Path, format: FormatArg, out: Option<&Path>) -> Result<(), Failure> {
    let report = AnalysisReport::read(report).map_err(|e| Failure::from_error("parse", &e))?;
    let format = match format {
        FormatArg::Dot => ExportFormat::Dot,
        FormatArg::Json => ExportFormat::Json,
        FormatArg::Csv => ExportFormat::Csv,
    };
    let body = export(&report, format).map_err(|e| Failure::from_error("write", &e))?;
    emit(&body, out)
}

fn run_bench(
    specs: &[PathBuf],
    replicates: u64,
    alpha: f64,
    imputations: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let mut cases = Vec::new();
    for path in specs {
        let spec = read_spec(path)?;
        spec.validate().map_err(|e| Failure::from_error("config", &e))?;
        for r in 0..replicates {
            let mut s = spec.clone();
            s.seed = s.seed.wrapping_add(r);
            for m in &mut s.mechanisms {
                m.seed = m.seed.wrapping_add(r);
            }
            cases.push(s);
        }
    }
    let cfg = PipelineConfig {
        alpha,
        n_imputations: imputations,
        seed,
        ..PipelineConfig::default()
    };
    let report = run_benchmark(&cases, &cfg).map_err(|e| Failure::from_error("benchmark", &e))?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::new(Code::Io, "write", e))?;
    emit(&(json + "\n"), out)
}
