use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid state spec: {0}")]
    InvalidSpec(String),
    #[error("unphysical state: {0}")]
    Unphysical(String),
    #[error("cutoff too small: {0}")]
    CutoffTooSmall(String),
    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("root not bracketed: {0}")]
    RootNotBracketed(String),
    #[error("step too large: {0}")]
    StepTooLarge(String),
    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// `true` for errors caused by bad input rather than numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidSpec(_)
                | Error::Unphysical(_)
                | Error::UnsupportedFamily(_)
                | Error::InvalidArgument(_)
                | Error::GridTooCoarse(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
