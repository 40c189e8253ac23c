//! The two-sided q-lattice, admissible parameters, the basic hypergeometric
//! kernel, the elliptic tail kernel, and their closed lattice forms.

pub mod basic;
pub mod closed;
pub(crate) mod contour;
pub mod elliptic;
pub mod lattice;

pub use basic::{basic_kernel, frak_c, frak_f, frak_f_transformed, BasicKernel, FRep};
pub use closed::{closed_diag, closed_mm, closed_pm, closed_pp, ClosedForms};
pub use elliptic::{
    c_elliptic, elliptic_kernel, elliptic_kernel_equal, gauge_eps, gauge_nu, hat_kernel, tilde_kernel, EllipticKernel,
};
pub use lattice::{
    AdmissiblePair, AdmissibleQuadruple, Branch, LatticePoint, ParamSet, Point, QContext, Series,
};
