use std::path::Path;

use qkp_core::clustering::ClusteringError;
use qkp_core::kernels::KernelError;
use qkp_core::matching::MatchingError;
use qkp_core::pipeline::PipelineError;
use qkp_core::qubo::QuboError;
use qkp_core::solvers::SolverError;

/// Failure categories, each with its own exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("solver error: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Io(_) => 3,
            Self::Solver(_) => 4,
        }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::Io(format!("{}: {err}", path.display()))
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::InvalidConfig(_) | SolverError::Qubo(QuboError::TooLarge { .. }) => Self::Config(e.to_string()),
            _ => Self::Solver(e.to_string()),
        }
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        match e {
            KernelError::InvalidParameter(_) => Self::Config(e.to_string()),
            _ => Self::Solver(e.to_string()),
        }
    }
}

impl From<ClusteringError> for CliError {
    fn from(e: ClusteringError) -> Self {
        match e {
            ClusteringError::Solver(s) => s.into(),
            ClusteringError::Kernel(k) => k.into(),
            ClusteringError::KTooLarge { .. } | ClusteringError::ZeroK | ClusteringError::InvalidMultiplier(_) => {
                Self::Config(e.to_string())
            }
            _ => Self::Solver(e.to_string()),
        }
    }
}

impl From<MatchingError> for CliError {
    fn from(e: MatchingError) -> Self {
        match e {
            MatchingError::InvalidSpec(_) => Self::Config(e.to_string()),
            MatchingError::Solver(s) => s.into(),
            MatchingError::Kernel(k) => k.into(),
            _ => Self::Solver(e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Io { .. } | PipelineError::Decode { .. } => Self::Io(e.to_string()),
            PipelineError::Config(_) | PipelineError::Quantum(_) => Self::Config(e.to_string()),
            PipelineError::Clustering(c) => c.into(),
            PipelineError::Matching(m) => m.into(),
            PipelineError::Kernel(k) => k.into(),
        }
    }
}
