use besselfrac::analysis::AnalysisError;
use besselfrac::grid::GridError;
use besselfrac::kernels::KernelError;
use besselfrac::operators::OperatorError;
use besselfrac::quad::QuadError;
use besselfrac::transforms::TransformError;
use thiserror::Error;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Ok = 0,
    CheckFailed = 1,
    NotConverged = 2,
    Config = 64,
    Precondition = 65,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn status(&self) -> ExitStatus {
        match self {
            CliError::Config(_) | CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => ExitStatus::Config,
            CliError::Precondition(_) => ExitStatus::Precondition,
            CliError::Numerical(_) => ExitStatus::NotConverged,
        }
    }

    /// The reader of stdout went away, as with `besselfrac dump heat | head`.
    pub fn is_broken_pipe(&self) -> bool {
        let kind = match self {
            CliError::Io(e) => Some(e.kind()),
            CliError::Csv(e) => match e.kind() {
                csv::ErrorKind::Io(e) => Some(e.kind()),
                _ => None,
            },
            CliError::Json(e) => e.io_error_kind(),
            _ => None,
        };
        kind == Some(std::io::ErrorKind::BrokenPipe)
    }
}

/// Whether a library error is a quadrature or extrapolation failure rather
/// than an invalid input.
pub trait Numerical {
    fn is_numerical(&self) -> bool;
}

impl Numerical for QuadError {
    fn is_numerical(&self) -> bool {
        matches!(self, QuadError::NonFinite { .. })
    }
}

impl Numerical for GridError {
    fn is_numerical(&self) -> bool {
        match self {
            GridError::Divergent { .. } => true,
            GridError::Quad(e) => e.is_numerical(),
            _ => false,
        }
    }
}

impl Numerical for KernelError {
    fn is_numerical(&self) -> bool {
        match self {
            KernelError::NotConverged { .. } => true,
            KernelError::Quad(e) => e.is_numerical(),
            _ => false,
        }
    }
}

impl Numerical for TransformError {
    fn is_numerical(&self) -> bool {
        match self {
            TransformError::NotConverged { .. } | TransformError::Truncated { .. } => true,
            TransformError::Quad(e) => e.is_numerical(),
            TransformError::Grid(e) => e.is_numerical(),
            _ => false,
        }
    }
}

impl Numerical for OperatorError {
    fn is_numerical(&self) -> bool {
        match self {
            OperatorError::NotConverged { .. } | OperatorError::Unstable(_) => true,
            OperatorError::Kernel(e) => e.is_numerical(),
            OperatorError::Transform(e) => e.is_numerical(),
            OperatorError::Quad(e) => e.is_numerical(),
            OperatorError::Grid(e) => e.is_numerical(),
            _ => false,
        }
    }
}

impl Numerical for AnalysisError {
    fn is_numerical(&self) -> bool {
        match self {
            AnalysisError::NotConverged { .. } => true,
            AnalysisError::Operator(e) => e.is_numerical(),
            AnalysisError::Transform(e) => e.is_numerical(),
            AnalysisError::Quad(e) => e.is_numerical(),
            AnalysisError::Grid(e) => e.is_numerical(),
            _ => false,
        }
    }
}

macro_rules! from_library {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                if e.is_numerical() {
                    CliError::Numerical(e.to_string())
                } else {
                    CliError::Precondition(e.to_string())
                }
            }
        }
    )*};
}

from_library!(
    QuadError,
    GridError,
    KernelError,
    TransformError,
    OperatorError,
    AnalysisError
);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_errors_are_classified() {
        let e: CliError = OperatorError::NotConverged {
            value: 1.0,
            err_est: 1.0,
        }
        .into();
        assert_eq!(e.status(), ExitStatus::NotConverged);
        let e: CliError = OperatorError::Precondition("x".into()).into();
        assert_eq!(e.status(), ExitStatus::Precondition);
        let e: CliError = AnalysisError::Operator(OperatorError::Kernel(KernelError::NotConverged {
            value: 0.0,
            err_est: 1.0,
        }))
        .into();
        assert_eq!(e.status(), ExitStatus::NotConverged);
        assert_eq!(CliError::Config("bad".into()).status().code(), 64);
    }
}
