use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("parse error at row {row}, column '{column}': cannot read '{cell}' as a finite number")]
    Cell {
        row: usize,
        column: String,
        cell: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("degenerate column {}: no variation", describe_column(*.index, .name.as_deref()))]
    DegenerateColumn { index: usize, name: Option<String> },

    #[error("column '{column}' has no observed entries to impute from")]
    UnimputableColumn { column: String },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("graphical lasso did not converge after {sweeps} sweeps (residual {residual:.3e}, gap {gap:.3e})")]
    Convergence { sweeps: usize, residual: f64, gap: f64 },
}

fn describe_column(index: usize, name: Option<&str>) -> String {
    match name {
        Some(n) => format!("'{n}'"),
        None => format!("#{index}"),
    }
}

impl Error {
    /// Attach a variable name to a column-indexed numeric error.
    pub fn with_column_names(self, names: &[String]) -> Self {
        match self {
            Error::DegenerateColumn { index, name: None } => Error::DegenerateColumn {
                index,
                name: names.get(index).cloned(),
            },
            other => other,
        }
    }
}
