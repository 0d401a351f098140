use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver did not converge for a {dim}x{dim} matrix within {max_iterations} sweeps{}", context_suffix(.context))]
    NumericFailure {
        dim: usize,
        max_iterations: usize,
        context: Option<String>,
    },

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn context_suffix(context: &Option<String>) -> String {
    context
        .as_ref()
        .map(|c| format!(" ({c})"))
        .unwrap_or_default()
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Attaches a location (e.g. the offending θ) to a numeric failure.
    pub fn with_context(self, ctx: impl Into<String>) -> Self {
        match self {
            Error::NumericFailure {
                dim,
                max_iterations,
                context: None,
            } => Error::NumericFailure {
                dim,
                max_iterations,
                context: Some(ctx.into()),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
