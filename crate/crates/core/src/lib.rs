pub mod dpp;
pub mod draws;
pub mod error;
pub mod fourier;
pub mod kernels;
pub mod limits;
pub mod qhyper;
pub mod qspecial;
pub mod scaled;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use qspecial::{EvalResult, QParam, Tolerance};
pub use scaled::Scaled;
