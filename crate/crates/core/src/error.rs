use std::path::PathBuf;

/// Errors raised by the transform kernels, the solver, and the I/O layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("SVD did not converge on a {rows}x{cols} matrix")]
    SvdNoConvergence { rows: usize, cols: usize },

    #[error("degenerate injection: {0}")]
    DegenerateInjection(String),

    #[error("all {0} trials failed")]
    AllTrialsFailed(usize),

    #[error("corpus ingestion failed for {} file(s): {}", .files.len(), format_offenders(.files))]
    Ingestion { files: Vec<(PathBuf, String)> },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_offenders(files: &[(PathBuf, String)]) -> String {
    files
        .iter()
        .map(|(p, why)| format!("{} ({why})", p.display()))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    /// True for failures of the numerical machinery, as opposed to bad
    /// arguments or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::SvdNoConvergence { .. }
                | Error::DegenerateInjection(_)
                | Error::AllTrialsFailed(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
