use std::fmt;
use std::process::ExitCode;

/// Command failure, classified by exit status.
#[derive(Debug)]
pub enum Failure {
    /// Exit status 2.
    Config(String),
    /// Exit status 3.
    Io(String),
    /// Exit status 4: an epsilon rule accepted nothing. Outputs are still written.
    EmptyPosterior(String),
    /// Exit status 1.
    Other(String),
}

impl Failure {
    /// Same class, message prefixed with `what`.
    pub fn within(self, what: impl fmt::Display) -> Self {
        match self {
            Failure::Config(m) => Failure::Config(format!("{what}: {m}")),
            Failure::Io(m) => Failure::Io(format!("{what}: {m}")),
            Failure::EmptyPosterior(m) => Failure::EmptyPosterior(format!("{what}: {m}")),
            Failure::Other(m) => Failure::Other(format!("{what}: {m}")),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Other(_) => 1,
            Failure::Config(_) => 2,
            Failure::Io(_) => 3,
            Failure::EmptyPosterior(_) => 4,
        })
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Io(m) => write!(f, "I/O error: {m}"),
            Failure::EmptyPosterior(m) => write!(f, "empty posterior: {m}"),
            Failure::Other(m) => write!(f, "{m}"),
        }
    }
}

impl From<aabc::Error> for Failure {
    fn from(e: aabc::Error) -> Self {
        use aabc::Error as E;
        let msg = e.to_string();
        match e {
            E::Io(_) | E::Csv(_) | E::Format(_) | E::RowCount { .. } => Failure::Io(msg),
            E::Config(_)
            | E::UnknownModel(_)
            | E::ModelMismatch(_)
            | E::InvalidBounds { .. }
            | E::InvalidDirichlet(_)
            | E::OutOfSupport(_)
            | E::InvalidInput(_) => Failure::Config(msg),
            _ => Failure::Other(msg),
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;

/// Attaches a path or action to I/O-type errors.
pub trait Context<T> {
    fn io_ctx(self, what: impl fmt::Display) -> CliResult<T>;
    fn config_ctx(self, what: impl fmt::Display) -> CliResult<T>;
}

impl<T, E: fmt::Display> Context<T> for Result<T, E> {
    fn io_ctx(self, what: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| Failure::Io(format!("{what}: {e}")))
    }

    fn config_ctx(self, what: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| Failure::Config(format!("{what}: {e}")))
    }
}
