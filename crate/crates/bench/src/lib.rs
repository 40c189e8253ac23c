//! Fixed parameter sets shared by the benchmarks.

use elliptic_tail::kernels::{AdmissibleQuadruple, QContext};
use elliptic_tail::{Complex64, Result};

/// A principal-series `(γ, δ)` at `q = 0.5` with a small negative `(α, β)`.
pub fn principal() -> Result<(QContext, AdmissibleQuadruple)> {
    let ctx = QContext::new(0.5, 1.0, -1.3)?;
    let quad = ctx.validate_quadruple(
        Complex64::new(-0.1, 0.0),
        Complex64::new(-0.12, 0.0),
        Complex64::new(0.6, 0.3),
        Complex64::new(0.6, -0.3),
    )?;
    Ok((ctx, quad))
}

/// A complementary-series quadruple with `γ ≠ δ` real, where the basic
/// kernel deep in the lattice takes its regrouped near-zero form.
pub fn complementary() -> Result<(QContext, AdmissibleQuadruple)> {
    let ctx = QContext::new(0.35, 1.0, -1.0)?;
    let quad = ctx.validate_quadruple(
        Complex64::new(-0.2, 0.0),
        Complex64::new(-0.21, 0.0),
        Complex64::new(0.4, 0.0),
        Complex64::new(0.95, 0.0),
    )?;
    Ok((ctx, quad))
}
