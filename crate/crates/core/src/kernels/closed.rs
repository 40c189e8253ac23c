//! Closed forms of the elliptic tail kernel on the lattice, obtained from
//! quasi-periodicity: off-diagonal blocks are elementary in `q^{m-n}` and
//! the diagonal is a logarithmic-derivative expression independent of `m`.

use super::elliptic::{c_elliptic, EllipticKernel};
use super::lattice::{AdmissiblePair, Branch, QContext};
use crate::error::{Error, Result};
use crate::qspecial::{theta_multi_scaled, EvalResult, Tolerance};
use num_complex::Complex64;

/// Precomputed constants shared by the closed lattice formulas.
#[derive(Clone, Copy, Debug)]
pub struct ClosedForms {
    ctx: QContext,
    c: Complex64,
    /// `γ/√(γδ)` and `δ/√(γδ)` with the positive root of `γδ`.
    g: Complex64,
    d: Complex64,
    /// `θ(ζ₋γ, ζ₊δ)/√Θ` and `θ(ζ₋δ, ζ₊γ)/√Θ`, `Θ = θ(ζ₋γ, ζ₋δ, ζ₊γ, ζ₊δ) > 0`.
    mix_gd: Complex64,
    mix_dg: Complex64,
    rel: f64,
    kernel: EllipticKernel,
}

impl ClosedForms {
    pub fn new(pair: &AdmissiblePair, ctx: &QContext, tol: &Tolerance) -> Result<Self> {
        if pair.is_equal() {
            return Err(Error::Degenerate("closed lattice forms need gamma != delta".into()));
        }
        let c = c_elliptic(pair, ctx, tol)?;
        let s = pair.product().sqrt();
        let (gm, dm) = (pair.gamma, pair.delta);
        let (zp, zm) = (Complex64::new(ctx.zeta_plus, 0.0), Complex64::new(ctx.zeta_minus, 0.0));
        let q = &ctx.q;
        let big = theta_multi_scaled(&[zm * gm, zm * dm, zp * gm, zp * dm], q, tol)?;
        let root = big.value.mantissa().re.abs().sqrt();
        let root = crate::scaled::Scaled::new(Complex64::new(root, 0.0), 0.5 * big.value.ln_scale());
        let a = theta_multi_scaled(&[zm * gm, zp * dm], q, tol)?;
        let b = theta_multi_scaled(&[zm * dm, zp * gm], q, tol)?;
        let rel = c.abs_error_bound / c.value.norm() + big.rel_error_bound + a.rel_error_bound + b.rel_error_bound;
        Ok(ClosedForms {
            ctx: *ctx,
            c: c.value,
            g: gm / s,
            d: dm / s,
            mix_gd: (a.value / root).to_complex(),
            mix_dg: (b.value / root).to_complex(),
            rel,
            kernel: EllipticKernel::new(pair, ctx, tol)?,
        })
    }

    fn half_q(&self, k: i64) -> f64 {
        (-0.5 * k as f64 * self.ctx.q.r()).exp()
    }

    fn result(&self, value: Complex64) -> EvalResult {
        EvalResult { value, abs_error_bound: value.norm() * (self.rel + 1e-14) }
    }

    /// `K(ζ₊q^m, ζ₊q^n)`, `m ≠ n`.
    pub fn pp(&self, m: i64, n: i64) -> Result<EvalResult> {
        if m == n {
            return Err(Error::InvalidParameter("closed_pp needs m != n; use closed_diag".into()));
        }
        let sign = if (m + n).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let num = self.g.powi(m as i32) * self.d.powi(n as i32) - self.g.powi(n as i32) * self.d.powi(m as i32);
        let den = self.half_q(m - n) - self.half_q(n - m);
        Ok(self.result(self.c * sign * num / den))
    }

    /// `K(ζ₋q^m, ζ₋q^n)`, `m ≠ n`.
    pub fn mm(&self, m: i64, n: i64) -> Result<EvalResult> {
        if m == n {
            return Err(Error::InvalidParameter("closed_mm needs m != n; use closed_diag".into()));
        }
        let num = self.g.powi(n as i32) * self.d.powi(m as i32) - self.g.powi(m as i32) * self.d.powi(n as i32);
        let den = self.half_q(m - n) - self.half_q(n - m);
        Ok(self.result(self.c * num / den))
    }

    /// `K(ζ₊q^m, ζ₋q^n) = K(ζ₋q^n, ζ₊q^m)`.
    pub fn pm(&self, m: i64, n: i64) -> Result<EvalResult> {
        let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let num = self.g.powi(m as i32) * self.d.powi(n as i32) * self.mix_gd
            - self.g.powi(n as i32) * self.d.powi(m as i32) * self.mix_dg;
        let ratio = (self.ctx.zeta_plus / self.ctx.zeta_minus).abs().sqrt();
        let den = ratio * self.half_q(m - n) + self.half_q(n - m) / ratio;
        Ok(self.result(self.c * sign * num / den))
    }

    /// `K(ζ±q^m, ζ±q^m)`, the same for every `m`.
    pub fn diag(&self, b: Branch) -> Result<EvalResult> {
        self.kernel.diag_closed(Complex64::new(self.ctx.zeta(b), 0.0))
    }
}

pub fn closed_pp(m: i64, n: i64, pair: &AdmissiblePair, ctx: &QContext, tol: &Tolerance) -> Result<EvalResult> {
    ClosedForms::new(pair, ctx, tol)?.pp(m, n)
}

pub fn closed_mm(m: i64, n: i64, pair: &AdmissiblePair, ctx: &QContext, tol: &Tolerance) -> Result<EvalResult> {
    ClosedForms::new(pair, ctx, tol)?.mm(m, n)
}

pub fn closed_pm(m: i64, n: i64, pair: &AdmissiblePair, ctx: &QContext, tol: &Tolerance) -> Result<EvalResult> {
    ClosedForms::new(pair, ctx, tol)?.pm(m, n)
}

pub fn closed_diag(b: Branch, pair: &AdmissiblePair, ctx: &QContext, tol: &Tolerance) -> Result<EvalResult> {
    ClosedForms::new(pair, ctx, tol)?.diag(b)
}
