//! CLI error type; every failure exits nonzero with a machine-readable JSON
//! object on stderr.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("idx error: {0}")]
    Idx(String),
    #[error(transparent)]
    Density(#[from] logitest_core::densities::DensityError),
    #[error(transparent)]
    Functional(#[from] logitest_core::functionals::FunctionalError),
    #[error(transparent)]
    Train(#[from] logitest_core::nn::NnError),
    #[error(transparent)]
    Test(#[from] logitest_core::testing::TestError),
    #[error(transparent)]
    Power(#[from] logitest_core::power::PowerError),
    #[error(transparent)]
    Manifold(#[from] logitest_core::manifold::ManifoldError),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Idx(_) => "idx",
            CliError::Density(_) => "density",
            CliError::Functional(_) => "functional",
            CliError::Train(_) => "train",
            CliError::Test(_) => "test",
            CliError::Power(_) => "power",
            CliError::Manifold(_) => "manifold",
            CliError::Other(_) => "other",
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": { "kind": self.kind(), "message": self.to_string() }
        })
        .to_string()
    }
}
