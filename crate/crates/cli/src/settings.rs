//! Analysis settings from flags, an optional TOML file and defaults, in
//! that order of precedence.

use std::path::{Path, PathBuf};

use misgraph::analyze::{AnalysisConfig, LambdaMethodName, Precision};
use serde::Deserialize;

use crate::failure::{Code, Failure};

pub const OUT_ENV: &str = "MISGRAPH_OUT";

/// Keys accepted in a `--config` file. Relative paths are resolved against
/// the file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSettings {
    pub input: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub imputations: Option<usize>,
    pub seed: Option<u64>,
    pub lambda_method: Option<LambdaMethodName>,
    pub lambda_value: Option<f64>,
    pub rotations: Option<usize>,
    pub out: Option<PathBuf>,
    pub na_tokens: Option<Vec<String>>,
    pub precision: Option<Precision>,
    pub dump_imputations: Option<bool>,
}

impl FileSettings {
    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::new(Code::Config, "config", format!("cannot read {}: {e}", path.display())))?;
        let mut s: FileSettings = toml::from_str(&text)
            .map_err(|e| Failure::new(Code::Config, "config", format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut s.input, &mut s.schema, &mut s.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(s)
    }
}

/// Values given on the command line; `None` means "not given".
#[derive(Debug, Default)]
pub struct FlagSettings {
    pub input: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub imputations: Option<usize>,
    pub seed: Option<u64>,
    pub lambda_method: Option<LambdaMethodName>,
    pub lambda_value: Option<f64>,
    pub rotations: Option<usize>,
    pub out: Option<PathBuf>,
    pub na_tokens: Option<Vec<String>>,
    pub precision: Option<Precision>,
    pub dump_imputations: bool,
}

pub fn resolve(flags: FlagSettings, file: FileSettings, env_out: Option<PathBuf>) -> Result<AnalysisConfig, Failure> {
    let input = flags
        .input
        .or(file.input)
        .ok_or_else(|| Failure::new(Code::Config, "config", "no input file (use --input or `input` in the config file)"))?;
    let out = flags.out.or(file.out).or(env_out).ok_or_else(|| {
        Failure::new(
            Code::Config,
            "config",
            format!("no output directory (use --out, `out` in the config file, or {OUT_ENV})"),
        )
    })?;
    let mut cfg = AnalysisConfig::new(input, out);
    cfg.schema = flags.schema.or(file.schema);
    if let Some(v) = flags.alpha.or(file.alpha) {
        cfg.alpha = v;
    }
    if let Some(v) = flags.imputations.or(file.imputations) {
        cfg.n_imputations = v;
    }
    if let Some(v) = flags.seed.or(file.seed) {
        cfg.seed = v;
    }
    if let Some(v) = flags.lambda_method.or(file.lambda_method) {
        cfg.lambda_method = v;
    }
    cfg.lambda_value = flags.lambda_value.or(file.lambda_value);
    if cfg.lambda_value.is_some() && flags.lambda_method.is_none() && file.lambda_method.is_none() {
        cfg.lambda_method = LambdaMethodName::Fixed;
    }
    if let Some(v) = flags.rotations.or(file.rotations) {
        cfg.n_rotations = v;
    }
    if let Some(v) = flags.na_tokens.or(file.na_tokens) {
        cfg.na_tokens = v;
    }
    if let Some(v) = flags.precision.or(file.precision) {
        cfg.precision = v;
    }
    cfg.dump_imputations = flags.dump_imputations || file.dump_imputations.unwrap_or(false);
    cfg.pipeline_config().map_err(|e| Failure::from_error("config", &e))?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags() -> FlagSettings {
        FlagSettings {
            input: Some("in.csv".into()),
            out: Some("out".into()),
            ..FlagSettings::default()
        }
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let file: FileSettings = toml::from_str("alpha = 0.05\nseed = 9\nimputations = 10").unwrap();
        let cfg = resolve(
            FlagSettings {
                alpha: Some(0.02),
                ..flags()
            },
            file,
            None,
        )
        .unwrap();
        assert_eq!(cfg.alpha, 0.02);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.n_imputations, 10);
        assert_eq!(cfg.n_rotations, 20);
    }

    #[test]
    fn env_out_is_last_resort() {
        let f = FlagSettings {
            out: None,
            ..flags()
        };
        let cfg = resolve(f, FileSettings::default(), Some("env_dir".into())).unwrap();
        assert_eq!(cfg.out_dir, PathBuf::from("env_dir"));
        let file: FileSettings = toml::from_str("out = \"file_dir\"").unwrap();
        let f = FlagSettings {
            out: None,
            ..flags()
        };
        assert_eq!(resolve(f, file, Some("env_dir".into())).unwrap().out_dir, PathBuf::from("file_dir"));
    }

    #[test]
    fn lambda_value_alone_means_fixed() {
        let f = FlagSettings {
            lambda_value: Some(0.1),
            ..flags()
        };
        let cfg = resolve(f, FileSettings::default(), None).unwrap();
        assert_eq!(cfg.lambda_method, LambdaMethodName::Fixed);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let f = FlagSettings {
            alpha: Some(1.5),
            imputations: Some(0),
            ..flags()
        };
        let e = resolve(f, FileSettings::default(), None).unwrap_err();
        assert_eq!(e.code, Code::Config);
        assert!(e.message.contains("alpha") && e.message.contains("n_imputations"));
        assert!(toml::from_str::<FileSettings>("alfa = 0.1").is_err());
    }
}
