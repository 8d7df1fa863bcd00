use std::path::PathBuf;

use ompath_core::OmError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config parse error{}: {message}", at(*.line))]
    Parse { line: Option<usize>, message: String },

    #[error("invalid config{}: {field}: {message}", at(*.line))]
    Validation {
        field: String,
        line: Option<usize>,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("expression `{text}`: {message}")]
    Expression { text: String, message: String },

    #[error(transparent)]
    Core(#[from] OmError),
}

fn at(line: Option<usize>) -> String {
    line.map(|l| format!(" at line {l}")).unwrap_or_default()
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
