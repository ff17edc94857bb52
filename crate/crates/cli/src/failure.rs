use std::fmt;

use misgraph::pipeline::PipelineError;
use misgraph::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Code {
    Io,
    Usage,
    Config,
    Parse,
    Numeric,
    Convergence,
}

impl Code {
    pub fn exit_status(self) -> i32 {
        match self {
            Code::Io => 1,
            Code::Usage | Code::Config => 2,
            Code::Parse => 3,
            Code::Numeric => 4,
            Code::Convergence => 5,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Code::Io => "io",
            Code::Usage => "usage",
            Code::Config => "config",
            Code::Parse => "parse",
            Code::Numeric => "numeric",
            Code::Convergence => "convergence",
        }
    }
}

/// A failed command, printed as a single `error code=… stage=…: message` line.
#[derive(Debug)]
pub struct Failure {
    pub code: Code,
    pub stage: String,
    pub message: String,
}

impl Failure {
    pub fn new(code: Code, stage: &str, message: impl fmt::Display) -> Self {
        Failure {
            code,
            stage: stage.to_string(),
            message: message.to_string(),
        }
    }

    /// Classify a library error raised while `stage` was running.
    pub fn from_error(stage: &str, e: &Error) -> Self {
        let code = match e {
            Error::Config(_) => Code::Config,
            Error::Parse { .. } | Error::Cell { .. } | Error::Schema(_) => Code::Parse,
            Error::Io { .. } if stage == "parse" => Code::Parse,
            Error::Io { .. } => Code::Io,
            Error::Convergence { .. } => Code::Convergence,
            Error::Contract(_)
            | Error::DegenerateColumn { .. }
            | Error::UnimputableColumn { .. }
            | Error::NotPositiveDefinite(_) => Code::Numeric,
        };
        Failure::new(code, stage, e)
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure::from_error(e.stage.as_str(), &e.source)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one_line: String = self.message.split_whitespace().collect::<Vec<_>>().join(" ");
        write!(f, "error code={} stage={}: {}", self.code.as_str(), self.stage, one_line)
    }
}
