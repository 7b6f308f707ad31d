use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("solver error: {0}")]
    Solver(#[from] mc2_core::Error),

    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for configuration and output problems, 4 for infeasible or unbounded problems, 3 for
    /// every other solver failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Solver(e) if e.is_infeasibility() => 4,
            CliError::Solver(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "config",
            4 => "infeasible",
            _ => "solver",
        }
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": { "kind": self.kind(), "code": self.exit_code(), "message": self.to_string() }
        })
        .to_string()
    }
}
