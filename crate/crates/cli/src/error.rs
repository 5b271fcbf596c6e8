use dwelltime::ErrorKind;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error in {field}: {message}")]
    Config { field: String, message: String },
    #[error(transparent)]
    Core(#[from] dwelltime::Error),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0} invariant check(s) failed")]
    Validation(usize),
}

impl CliError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 2,
            Self::Core(e) => match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::NumericGuard => 3,
                ErrorKind::Asymptotics => 4,
                ErrorKind::Invariant => 5,
            },
            Self::Io { .. } => 2,
            Self::Validation(_) => 1,
        }
    }
}
