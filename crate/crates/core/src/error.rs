//! Error and diagnostic types shared across the pipeline.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// One malformed input row, located by its line number in the source stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowDiagnostic {
    pub line: u64,
    pub message: String,
}

impl std::fmt::Display for RowDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid header: {0}")]
    InvalidHeader(String),

    #[error("{} malformed row(s): {}", .0.len(), format_diagnostics(.0))]
    MalformedInput(Vec<RowDiagnostic>),

    #[error("mood variable is absent from the table; the pipeline target is missing")]
    MoodMissing,

    #[error("variable {variable:?} has no observations for user {user}; cannot fill")]
    UnfillableVariable { user: String, variable: String },

    #[error("no scaling parameters fitted for variable {0:?}")]
    UnknownVariable(String),

    #[error("table is incomplete: {0}")]
    IncompleteTable(String),

    #[error("split leaves an empty {side} side for {scope}")]
    EmptySplit { side: &'static str, scope: String },

    #[error("training requires at least two classes")]
    SingleClass,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("solver did not converge after {iterations} iterations (kkt violation {violation:e})")]
    NoConvergence { iterations: u64, violation: f64 },

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Diverged { epoch: usize },

    #[error("model carries no scaling parameters; cannot map predictions back to the mood scale")]
    ScalingMissing,

    #[error("missing artifact: {}", .0.display())]
    MissingArtifact(PathBuf),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),
}

fn format_diagnostics(diags: &[RowDiagnostic]) -> String {
    const SHOWN: usize = 5;
    let mut out = diags
        .iter()
        .take(SHOWN)
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("; ");
    if diags.len() > SHOWN {
        out.push_str(&format!("; and {} more", diags.len() - SHOWN));
    }
    out
}
