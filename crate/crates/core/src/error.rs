use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular matrix: pivot {pivot} has magnitude {magnitude:e}")]
    SingularMatrix { pivot: usize, magnitude: f64 },

    #[error("singular input: denominator average {value:e} at cell {cell}")]
    SingularInput { cell: usize, value: f64 },

    #[error(
        "newton iteration did not converge after {iterations} iterations: \
         residual {residual:e} at cell {cell}"
    )]
    NewtonNonconvergence {
        cell: usize,
        residual: f64,
        iterations: usize,
    },

    #[error("pole: {0}")]
    Pole(String),

    #[error("sweep {sweep}, substep {substep}: {source}")]
    Sweep {
        sweep: usize,
        substep: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("timestep {step} (t = {time}): {source}")]
    Step {
        step: usize,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Innermost error, with sweep and step context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Sweep { source, .. } | Error::Step { source, .. } => source.root(),
            other => other,
        }
    }

    /// True when output went to a reader that has already closed.
    pub fn is_broken_pipe(&self) -> bool {
        let kind = match self.root() {
            Error::Io(e) => Some(e.kind()),
            Error::Csv(e) => match e.kind() {
                csv::ErrorKind::Io(e) => Some(e.kind()),
                _ => None,
            },
            Error::Json(e) => e.io_error_kind(),
            _ => None,
        };
        kind == Some(std::io::ErrorKind::BrokenPipe)
    }

    /// True when the failure came from a solver rather than from bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self.root(),
            Error::NewtonNonconvergence { .. } | Error::SingularMatrix { .. } | Error::SingularInput { .. }
        )
    }
}
