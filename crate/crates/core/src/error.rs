use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical convergence failure in {context}: {detail}")]
    Convergence {
        context: &'static str,
        detail: String,
    },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn convergence(context: &'static str, detail: impl Into<String>) -> Self {
        Error::Convergence {
            context,
            detail: detail.into(),
        }
    }
}

/// Rejects NaN/infinite values and values below `min`.
pub(crate) fn check_at_least<T: crate::Scalar>(name: &'static str, x: T, min: T) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::invalid(name, format!("must be finite, got {x}")));
    }
    if x < min {
        return Err(Error::invalid(name, format!("must be >= {min}, got {x}")));
    }
    Ok(())
}

pub(crate) fn check_positive<T: crate::Scalar>(name: &'static str, x: T) -> Result<()> {
    if !(x.is_finite() && x > T::zero()) {
        return Err(Error::invalid(
            name,
            format!("must be finite and > 0, got {x}"),
        ));
    }
    Ok(())
}
