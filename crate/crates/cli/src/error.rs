use std::path::PathBuf;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] covertour::Error),

    #[error("missing input: {0}")]
    Missing(PathBuf),

    #[error("{} instance(s) failed to label: {}", .0.len(), .0.iter().map(|(i, m)| format!("#{i}: {m}")).collect::<Vec<_>>().join("; "))]
    LabelFailures(Vec<(usize, String)>),

    #[error("repaired solution for {path} is infeasible: {source}")]
    RepairInfeasible {
        path: PathBuf,
        #[source]
        source: covertour::Error,
    },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Missing(_) => "missing_input",
            CliError::LabelFailures(_) => "label_failures",
            CliError::RepairInfeasible { .. } => "repair_infeasible",
            CliError::Invalid(_) => "invalid_argument",
            CliError::Json(_) => "json",
        }
    }

    /// Machine-readable error document written to stderr on failure.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "error": {
                "kind": self.kind(),
                "message": self.to_string(),
            }
        })
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>, e: std::io::Error) -> CliError {
    let path = path.into();
    if e.kind() == std::io::ErrorKind::NotFound {
        CliError::Missing(path)
    } else {
        CliError::Core(covertour::Error::Io { path, source: e })
    }
}

pub(crate) fn write_file(path: &std::path::Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| io_err(path, e))
}
