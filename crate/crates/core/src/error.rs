use thiserror::Error;

/// Errors raised by evaluators in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside the domain of {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    #[error("not an admissible pair: {0}")]
    NotAdmissible(String),

    #[error("pole of {func} at {detail}")]
    Pole { func: &'static str, detail: String },

    #[error("ill-conditioned continuation step: {0}")]
    Conditioning(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("contour quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("series did not converge: {0}")]
    NoConvergence(String),

    #[error("kernel restricted to the window is not a contraction: {0}")]
    NotContraction(String),

    #[error("window error: {0}")]
    Window(String),

    #[error("correlation has imaginary part {residue:e} relative to its size; the kernel is not Hermitian on the window")]
    ImaginaryResidue { residue: f64 },
}

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain { func, detail: detail.into() }
    }

    pub(crate) fn pole(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Pole { func, detail: detail.into() }
    }

    /// True for errors caused by user-supplied parameters rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_) | Error::NotAdmissible(_) | Error::Window(_) | Error::Domain { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
