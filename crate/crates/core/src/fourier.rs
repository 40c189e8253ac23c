//! The 2×2 Fourier symbol `K̂(η)` of the gauge-transformed elliptic kernel.
//!
//! Entry `(ε₁, ε₂)` is `Σ_m e^{iηm} K̃(ζ_{ε₁}q^m, ζ_{ε₂})`. It is available as a
//! truncated lattice sum, as a theta-quotient closed form, and as a
//! logarithmic-derivative form obtained by summing the lattice closed forms.
//! A projection kernel has a rank-one projection symbol at every frequency;
//! [`ProjectionReport`] measures how far a computed symbol is from that.

use crate::error::{Error, Result};
use crate::kernels::{AdmissiblePair, Branch, ClosedForms, EllipticKernel, LatticePoint, QContext};
use crate::qspecial::{theta_logderiv, theta_multi_scaled, qpoch_inf, Tolerance};
use crate::scaled::Scaled;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Hard cap on the one-sided truncation length of the lattice sum.
pub const MAX_SERIES_TERMS: usize = 20_000;

/// A 2×2 complex matrix indexed by branch signs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Matrix2C {
    pub pp: Complex64,
    pub pm: Complex64,
    pub mp: Complex64,
    pub mm: Complex64,
}

impl Matrix2C {
    pub fn new(pp: Complex64, pm: Complex64, mp: Complex64, mm: Complex64) -> Self {
        Matrix2C { pp, pm, mp, mm }
    }

    pub fn identity() -> Self {
        let (o, z) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        Matrix2C::new(o, z, z, o)
    }

    pub fn get(&self, row: Branch, col: Branch) -> Complex64 {
        match (row, col) {
            (Branch::Plus, Branch::Plus) => self.pp,
            (Branch::Plus, Branch::Minus) => self.pm,
            (Branch::Minus, Branch::Plus) => self.mp,
            (Branch::Minus, Branch::Minus) => self.mm,
        }
    }

    pub fn entries(&self) -> [Complex64; 4] {
        [self.pp, self.pm, self.mp, self.mm]
    }

    pub fn adjoint(&self) -> Self {
        Matrix2C::new(self.pp.conj(), self.mp.conj(), self.pm.conj(), self.mm.conj())
    }

    pub fn trace(&self) -> Complex64 {
        self.pp + self.mm
    }

    pub fn det(&self) -> Complex64 {
        self.pp * self.mm - self.pm * self.mp
    }

    pub fn mul(&self, o: &Matrix2C) -> Matrix2C {
        Matrix2C::new(
            self.pp * o.pp + self.pm * o.mp,
            self.pp * o.pm + self.pm * o.mm,
            self.mp * o.pp + self.mm * o.mp,
            self.mp * o.pm + self.mm * o.mm,
        )
    }

    /// Largest entrywise modulus of `self - o`.
    pub fn max_abs_diff(&self, o: &Matrix2C) -> f64 {
        self.entries().iter().zip(o.entries()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Eigenvalues from the characteristic polynomial, larger real part first.
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let t = self.trace();
        let disc = (t * t * 0.25 - self.det()).sqrt();
        let (a, b) = (t * 0.5 + disc, t * 0.5 - disc);
        if a.re >= b.re { [a, b] } else { [b, a] }
    }

    /// Singular values, larger first.
    pub fn singular_values(&self) -> [f64; 2] {
        let fro2: f64 = self.entries().iter().map(|z| z.norm_sqr()).sum();
        let d = self.det().norm();
        let disc = (fro2 * fro2 - 4.0 * d * d).max(0.0).sqrt();
        let s1 = ((fro2 + disc) * 0.5).sqrt();
        let s2 = if s1 > 0.0 { d / s1 } else { 0.0 };
        [s1, s2]
    }
}

/// Distance of a 2×2 symbol from being a rank-one orthogonal projection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    /// `max |K̂ - K̂*|`.
    pub hermitian_residual: f64,
    /// `|det K̂|`.
    pub det_residual: f64,
    /// `|tr K̂ - 1|`.
    pub trace_residual: f64,
    /// `max |K̂² - K̂|`.
    pub idempotent_residual: f64,
    /// Smaller singular value.
    pub second_singular_value: f64,
    /// Distance of the eigenvalues from `{0, 1}`.
    pub eigenvalue_residual: f64,
}

impl ProjectionReport {
    pub fn of(m: &Matrix2C) -> Self {
        let [e1, e2] = m.eigenvalues();
        ProjectionReport {
            hermitian_residual: m.max_abs_diff(&m.adjoint()),
            det_residual: m.det().norm(),
            trace_residual: (m.trace() - 1.0).norm(),
            idempotent_residual: m.mul(m).max_abs_diff(m),
            second_singular_value: m.singular_values()[1],
            eigenvalue_residual: (e1 - 1.0).norm().max(e2.norm()),
        }
    }

    /// Largest of the hermitian, determinant and trace residuals.
    pub fn max_residual(&self) -> f64 {
        self.hermitian_residual.max(self.det_residual).max(self.trace_residual)
    }
}

/// Lattice sum result with a per-entry bound on the discarded tail.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesEval {
    pub value: Matrix2C,
    pub tail_bound: [f64; 4],
    pub terms: usize,
}

/// `K̃(ζ_{ε₁}q^m, ζ_{ε₂})` for `|m| ≤ M`, ready to be summed at any `η`.
#[derive(Clone, Debug)]
pub struct FourierSeries {
    half_len: usize,
    /// Coefficients for `m = -M..=M`, entries in `pp, pm, mp, mm` order.
    coef: Vec<[Complex64; 4]>,
    tail: [f64; 4],
}

/// Geometric decay rate of the lattice coefficients,
/// `max(√q, |qγ/δ|^{1/2}, |qδ/γ|^{1/2})`.
pub fn decay_rate(pair: &AdmissiblePair, ctx: &QContext) -> f64 {
    let q = ctx.q.q();
    let ratio = (pair.gamma / pair.delta).norm();
    q.sqrt().max((q * ratio).sqrt()).max((q / ratio).sqrt())
}

/// One-sided truncation length `⌈ln tol / ln ρ⌉ + 10`, capped by the
/// lattice exponent range.
pub fn truncation_length(pair: &AdmissiblePair, ctx: &QContext, tol: &Tolerance) -> usize {
    let rho = decay_rate(pair, ctx);
    let m = (tol.rel_tol.ln() / rho.ln()).ceil().max(0.0) as usize + 10;
    let lattice_cap = (crate::kernels::lattice::MAX_LATTICE_LOG / ctx.q.r()).floor() as usize;
    m.min(lattice_cap).min(MAX_SERIES_TERMS)
}

impl FourierSeries {
    pub fn new(pair: &AdmissiblePair, ctx: &QContext, tol: &Tolerance) -> Result<Self> {
        let half_len = truncation_length(pair, ctx, tol);
        let n = half_len as i64;
        let mut coef = Vec::with_capacity(2 * half_len + 1);
        if pair.is_equal() {
            let k = EllipticKernel::new(pair, ctx, tol)?;
            let (p0, m0) = (LatticePoint::plus(0), LatticePoint::minus(0));
            for m in -n..=n {
                let (pm_, mm_) = (LatticePoint::plus(m), LatticePoint::minus(m));
                coef.push([
                    k.tilde(pm_, p0)?.value,
                    k.tilde(pm_, m0)?.value,
                    k.tilde(mm_, p0)?.value,
                    k.tilde(mm_, m0)?.value,
                ]);
            }
        } else {
            let cf = ClosedForms::new(pair, ctx, tol)?;
            let dp = cf.diag(Branch::Plus)?.value;
            let dm = cf.diag(Branch::Minus)?.value;
            for m in -n..=n {
                let alt = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                let (pp, mm) = if m == 0 { (dp, dm) } else { (cf.pp(m, 0)?.value, cf.mm(m, 0)?.value * alt) };
                coef.push([pp, cf.pm(m, 0)?.value, cf.pm(0, m)?.value * alt, mm]);
            }
        }
        let rho = decay_rate(pair, ctx);
        let mut tail = [0.0; 4];
        for (i, t) in tail.iter_mut().enumerate() {
            let edge = coef[0][i].norm() + coef[2 * half_len][i].norm();
            *t = edge * rho / (1.0 - rho);
        }
        Ok(FourierSeries { half_len, coef, tail })
    }

    pub fn terms(&self) -> usize {
        self.half_len
    }

    /// The coefficient block at lattice offset `m`, `|m| ≤ M`.
    pub fn coefficient(&self, m: i64) -> Option<Matrix2C> {
        let idx = m + self.half_len as i64;
        if idx < 0 || idx as usize >= self.coef.len() {
            return None;
        }
        let [a, b, c, d] = self.coef[idx as usize];
        Some(Matrix2C::new(a, b, c, d))
    }

    pub fn eval(&self, eta: f64) -> SeriesEval {
        let eta = eta.rem_euclid(TAU);
        let n = self.half_len as i64;
        let mut acc = [Complex64::new(0.0, 0.0); 4];
        // outermost terms first
        for k in (0..=n).rev() {
            for m in if k == 0 { vec![0] } else { vec![k, -k] } {
                let ph = Complex64::from_polar(1.0, eta * m as f64);
                let c = &self.coef[(m + n) as usize];
                for i in 0..4 {
                    acc[i] += c[i] * ph;
                }
            }
        }
        SeriesEval { value: Matrix2C::new(acc[0], acc[1], acc[2], acc[3]), tail_bound: self.tail, terms: self.half_len }
    }
}

pub fn fourier_series(eta: f64, pair: &AdmissiblePair, ctx: &QContext, tol: &Tolerance) -> Result<SeriesEval> {
    Ok(FourierSeries::new(pair, ctx, tol)?.eval(eta))
}

fn cplx(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Theta-quotient closed form of the symbol.
pub fn fourier_closed(eta: f64, pair: &AdmissiblePair, ctx: &QContext, tol: &Tolerance) -> Result<Matrix2C> {
    let q = &ctx.q;
    let qv = q.q();
    let (g, d) = (pair.gamma, pair.delta);
    let s = pair.product().sqrt();
    let (zp, zm) = (ctx.zeta_plus, ctx.zeta_minus);
    let w = Complex64::from_polar(1.0, eta.rem_euclid(TAU));
    let th = |zs: &[Complex64]| theta_multi_scaled(zs, q, tol).map(|r| r.value);

    let denom = th(&[-w * qv.sqrt() * s / g, -w * qv.sqrt() * s / d])?;
    let base = th(&[cplx(zm / zp), g * d * zm * zp])? * Complex64::new(pair.product() / qv, 0.0);
    let big = th(&[g * zm, d * zm, g * zp, d * zp])?;
    let root_big = Scaled::new(Complex64::new(big.mantissa().re.abs().sqrt(), 0.0), 0.5 * big.ln_scale());
    let k = s / qv.sqrt();
    let wc = w.conj();
    let f = |a: f64, b: f64| th(&[-w * a * k, -wc * b * k]);
    let common = (base * denom).inv();

    let pp = common * th(&[g * zm, d * zm])? * f(zp, zp)? / cplx(zp * zp);
    let mm = common * th(&[g * zp, d * zp])? * f(zm, zm)? / cplx((zm * zp).abs());
    let off = common * root_big / cplx(-zp * (zm * zp).abs().sqrt());
    let pm = off * f(zp, zm)?;
    let mp = off * f(zm, zp)?;
    let out = Matrix2C::new(pp.to_complex(), pm.to_complex(), mp.to_complex(), mm.to_complex());
    if !out.is_finite() {
        return Err(Error::pole("fourier_closed", format!("theta denominator vanished at eta = {eta}")));
    }
    Ok(out)
}

/// Logarithmic-derivative form of the symbol; requires `γ ≠ δ`.
pub fn fourier_lemma_form(eta: f64, pair: &AdmissiblePair, ctx: &QContext, tol: &Tolerance) -> Result<Matrix2C> {
    if pair.is_equal() {
        return Err(Error::Degenerate("the logarithmic-derivative form needs gamma != delta".into()));
    }
    let q = &ctx.q;
    let qv = q.q();
    let (g, d) = (pair.gamma, pair.delta);
    let s = pair.product().sqrt();
    let (zp, zm) = (ctx.zeta_plus, ctx.zeta_minus);
    let w = Complex64::from_polar(1.0, eta.rem_euclid(TAU));
    let c = crate::kernels::c_elliptic(pair, ctx, tol)?.value;
    let th = |zs: &[Complex64]| theta_multi_scaled(zs, q, tol).map(|r| r.value);
    let ld = |z: Complex64| theta_logderiv(z, q);

    let ag = w * qv.sqrt() * s / g;
    let ad = w * qv.sqrt() * s / d;
    let lg_eta = ag * ld(-ag)?;
    let ld_eta = ad * ld(-ad)?;
    let (zpc, zmc) = (cplx(zp), cplx(zm));
    let pp = c * (d * zpc * ld(d * zpc)? - g * zpc * ld(g * zpc)? + lg_eta - ld_eta);
    let mm = c * (g * zmc * ld(g * zmc)? - d * zmc * ld(d * zmc)? + ld_eta - lg_eta);

    let big = th(&[g * zp, d * zp, g * zm, d * zm])?;
    let root_big = Scaled::new(Complex64::new(big.mantissa().re.abs().sqrt(), 0.0), 0.5 * big.ln_scale());
    let qq = qpoch_inf(cplx(qv), q, tol).value;
    let theta_prime_one = -(qq * qq);
    let rho = (zp / zm).abs();
    let (tg, td) = (th(&[-ag])?, th(&[-ad])?);

    let pm_pref = Scaled::from_complex(c * rho.sqrt() * theta_prime_one) / (root_big * th(&[cplx(zp / zm)])?);
    let pm_a = th(&[g * zpc, d * zmc, w * rho * qv.sqrt() * s / g])? / tg;
    let pm_b = th(&[d * zpc, g * zmc, w * rho * qv.sqrt() * s / d])? / td;
    let pm = pm_pref * pm_a.sub(pm_b);

    let mp_pref = Scaled::from_complex(c * rho.recip().sqrt() * theta_prime_one) / (root_big * th(&[cplx(zm / zp)])?);
    let mp_a = th(&[g * zpc, d * zmc, w * qv.sqrt() * s / (rho * d)])? / td;
    let mp_b = th(&[d * zpc, g * zmc, w * qv.sqrt() * s / (rho * g)])? / tg;
    let mp = mp_pref * mp_a.sub(mp_b);

    let out = Matrix2C::new(pp, pm.to_complex(), mp.to_complex(), mm);
    if !out.is_finite() {
        return Err(Error::pole("fourier_lemma_form", format!("theta denominator vanished at eta = {eta}")));
    }
    Ok(out)
}

/// Projection residuals of the closed-form symbol at `η`.
pub fn projection_report(eta: f64, pair: &AdmissiblePair, ctx: &QContext, tol: &Tolerance) -> Result<ProjectionReport> {
    Ok(ProjectionReport::of(&fourier_closed(eta, pair, ctx, tol)?))
}

/// The certification grid: `n` equispaced frequencies on `[0, 2π)`.
pub fn eta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}
