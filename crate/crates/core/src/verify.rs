//! Residual evaluators for the standalone identities behind the kernels,
//! and seeded batch suites that run them.
//!
//! Each evaluator computes both sides independently and returns an
//! [`IdentityReport`]. Suites draw parameters from [`crate::draws`], evaluate
//! in parallel, and summarize against fixed thresholds.

use crate::draws::Draw;
use crate::error::{Error, Result};
use crate::fourier::{fourier_closed, fourier_lemma_form, FourierSeries, ProjectionReport};
use crate::kernels::{AdmissiblePair, QContext};
use crate::qhyper::{heine_rhs, phi21, watson_terms, Phi21Params};
use crate::qspecial::{
    jacobi_imaginary_rhs, lattice_exponent, qpoch_inf, theta, theta3, theta_deriv, theta_logderiv, theta_multi_scaled,
    QParam, Tolerance,
};
use crate::scaled::Scaled;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::f64::consts::{PI, TAU};

/// Floor in the relative-residual denominator.
pub const RESIDUAL_FLOOR: f64 = 1e-30;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity_name: String,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub abs_residual: f64,
    /// `max(|lhs|, |rhs|, floor)`. Identities with a side that is a sum of
    /// terms use the largest term as the floor, which is the precision a
    /// double-precision evaluation can certify.
    pub scale: f64,
    /// `|lhs - rhs| / scale`; the absolute residual when `degenerate` is set.
    pub rel_residual: f64,
    /// Both sides vanish structurally (a theta argument on `q^ℤ`).
    pub degenerate: bool,
    pub params: serde_json::Value,
}

impl IdentityReport {
    pub fn new(name: &str, lhs: Complex64, rhs: Complex64, params: serde_json::Value) -> Self {
        Self::with_floor(name, lhs, rhs, RESIDUAL_FLOOR, params)
    }

    pub fn with_floor(name: &str, lhs: Complex64, rhs: Complex64, floor: f64, params: serde_json::Value) -> Self {
        let abs = (lhs - rhs).norm();
        let scale = lhs.norm().max(rhs.norm()).max(floor);
        IdentityReport {
            identity_name: name.to_string(),
            lhs,
            rhs,
            abs_residual: abs,
            scale,
            rel_residual: abs / scale,
            degenerate: false,
            params,
        }
    }

    fn degenerate(mut self) -> Self {
        self.degenerate = true;
        self.rel_residual = self.abs_residual;
        self
    }
}

fn cj(z: Complex64) -> serde_json::Value {
    json!([z.re, z.im])
}

fn pair_json(eta: f64, pair: &AdmissiblePair, ctx: &QContext) -> serde_json::Value {
    json!({
        "eta": eta, "q": ctx.q.q(), "zeta_plus": ctx.zeta_plus, "zeta_minus": ctx.zeta_minus,
        "gamma": cj(pair.gamma), "delta": cj(pair.delta),
    })
}

fn on_lattice(zs: &[Complex64], q: &QParam) -> bool {
    zs.iter().any(|z| lattice_exponent(*z, q).is_some())
}

// ---------------------------------------------------------------------------
// theta identities

/// `θ(q^n z) = (-1)^n q^{-n(n-1)/2} z^{-n} θ(z)`.
pub fn quasi_periodicity_residual(z: Complex64, n: i32, q: &QParam, tol: &Tolerance) -> Result<IdentityReport> {
    let lhs = theta(z * q.q().powi(n), q, tol)?.value;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let nn = n as f64;
    let rhs = theta(z, q, tol)?.value * sign * (-nn * (nn - 1.0) / 2.0 * q.ln_q()).exp() * z.powi(-n);
    Ok(IdentityReport::new("theta_quasi_periodicity", lhs, rhs, json!({"z": cj(z), "n": n, "q": q.q()})))
}

/// `θ(z) = θ(q/z)`.
pub fn reflection_residual(z: Complex64, q: &QParam, tol: &Tolerance) -> Result<IdentityReport> {
    let lhs = theta(z, q, tol)?.value;
    let rhs = theta(q.q() / z, q, tol)?.value;
    Ok(IdentityReport::new("theta_reflection", lhs, rhs, json!({"z": cj(z), "q": q.q()})))
}

/// `θ₃(z; q) = (q, -√q z, -√q/z; q)_∞`, series against product.
pub fn triple_product_residual(z: Complex64, q: &QParam, tol: &Tolerance) -> Result<IdentityReport> {
    let lhs = theta3(z, q, tol)?.value;
    let s = q.q().sqrt();
    let rhs = qpoch_inf(Complex64::new(q.q(), 0.0), q, tol).value * qpoch_inf(-z * s, q, tol).value * qpoch_inf(-s / z, q, tol).value;
    Ok(IdentityReport::new("theta3_triple_product", lhs, rhs, json!({"z": cj(z), "q": q.q()})))
}

/// `θ₃(z; q)` against its imaginary transform.
pub fn jacobi_imaginary_residual(z: Complex64, q: &QParam, tol: &Tolerance) -> Result<IdentityReport> {
    let lhs = theta3(z, q, tol)?.value;
    let rhs = jacobi_imaginary_rhs(z, q, tol)?.value;
    Ok(IdentityReport::new("jacobi_imaginary", lhs, rhs, json!({"z": cj(z), "q": q.q()})))
}

// ---------------------------------------------------------------------------
// ₂φ₁ identities

/// Residual of the three-term q-difference equation, relative to the size of
/// its terms.
/// Largest evaluator error bound, relative to the scale a ₂φ₁ identity is
/// measured on, for which a draw is still informative. Beyond it the
/// residual functions return [`Error::Conditioning`].
pub const PHI21_CONDITION: f64 = 1e-10;

fn conditioned(name: &str, bound: f64, scale: f64) -> Result<()> {
    if bound > PHI21_CONDITION * scale {
        return Err(Error::Conditioning(format!("{name}: evaluator error {bound:.2e} against scale {scale:.2e}")));
    }
    Ok(())
}

pub fn qdifference_residual(p: &Phi21Params, z: Complex64, tol: &Tolerance) -> Result<IdentityReport> {
    let q = p.q.q();
    let f0 = phi21(p, z, tol)?;
    let f1 = phi21(p, z * q, tol)?;
    let f2 = phi21(p, z * q * q, tol)?;
    let c2 = p.b - p.a1 * p.a2 * q * z;
    let c1 = -p.b - q + (p.a1 + p.a2) * q * z;
    let c0 = (1.0 - z) * q;
    let (t0, t1, t2) = (c0 * f0.value, c1 * f1.value, c2 * f2.value);
    let scale = t0.norm().max(t1.norm()).max(t2.norm());
    let bound = c0.norm() * f0.abs_error_bound + c1.norm() * f1.abs_error_bound + c2.norm() * f2.abs_error_bound;
    conditioned("phi21_q_difference", bound, scale)?;
    let params = json!({"a1": cj(p.a1), "a2": cj(p.a2), "b": cj(p.b), "q": q, "z": cj(z)});
    Ok(IdentityReport::with_floor("phi21_q_difference", t0 + t1 + t2, Complex64::new(0.0, 0.0), scale, params))
}

fn phi_params_json(p: &Phi21Params, z: Complex64) -> serde_json::Value {
    json!({"a1": cj(p.a1), "a2": cj(p.a2), "b": cj(p.b), "q": p.q.q(), "z": cj(z)})
}

pub fn heine_residual(p: &Phi21Params, z: Complex64, tol: &Tolerance) -> Result<IdentityReport> {
    let lhs = phi21(p, z, tol)?;
    let rhs = heine_rhs(p, z, tol)?;
    conditioned("heine", lhs.abs_error_bound + rhs.abs_error_bound, lhs.value.norm().max(rhs.value.norm()))?;
    Ok(IdentityReport::new("heine", lhs.value, rhs.value, phi_params_json(p, z)))
}

pub fn watson_residual(p: &Phi21Params, z: Complex64, tol: &Tolerance) -> Result<IdentityReport> {
    let lhs = phi21(p, z, tol)?;
    let (t1, t2) = watson_terms(p, z, tol)?;
    let floor = t1.value.norm().max(t2.value.norm()).max(lhs.value.norm());
    conditioned("watson", lhs.abs_error_bound + t1.abs_error_bound + t2.abs_error_bound, floor)?;
    Ok(IdentityReport::with_floor("watson", lhs.value, t1.value + t2.value, floor, phi_params_json(p, z)))
}

// ---------------------------------------------------------------------------
// Weierstrass three-term relation

fn th(zs: &[Complex64], q: &QParam, tol: &Tolerance) -> Result<Scaled> {
    Ok(theta_multi_scaled(zs, q, tol)?.value)
}

/// `θ(qYZ, Z/Y, qXW, W/X) - θ(qYW, W/Y, qXZ, Z/X) = -(Z/Y) θ(qXY, Y/X, qZW, W/Z)`.
pub fn weierstrass_residual(
    x: Complex64,
    y: Complex64,
    z: Complex64,
    w: Complex64,
    q: &QParam,
    tol: &Tolerance,
) -> Result<IdentityReport> {
    if [x, y, z, w].iter().any(|v| v.norm() == 0.0) {
        return Err(Error::domain("weierstrass_residual", "all arguments must be nonzero"));
    }
    let qq = q.q();
    let a1 = [qq * y * z, z / y, qq * x * w, w / x];
    let a2 = [qq * y * w, w / y, qq * x * z, z / x];
    let a3 = [qq * x * y, y / x, qq * z * w, w / z];
    let (t1, t2) = (th(&a1, q, tol)?, th(&a2, q, tol)?);
    let lhs = t1.sub(t2).to_complex();
    let rhs = (th(&a3, q, tol)? * (-z / y)).to_complex();
    let floor = t1.to_complex().norm().max(t2.to_complex().norm());
    let params = json!({"X": cj(x), "Y": cj(y), "Z": cj(z), "W": cj(w), "q": qq});
    let r = IdentityReport::with_floor("weierstrass", lhs, rhs, floor, params);
    let all = a1.iter().chain(&a2).chain(&a3).copied().collect::<Vec<_>>();
    Ok(if lhs.norm() == 0.0 && rhs.norm() == 0.0 && on_lattice(&all, q) { r.degenerate() } else { r })
}

/// The specialization `X = e^{iη}/√q`, `Y = -ζ₊√(γδ)/q`, `Z = -ζ₋√(γδ)/q`,
/// `W = -√(γδ)/γ` that carries the trace of the Fourier symbol.
pub fn weierstrass_trace_specialization(
    eta: f64,
    pair: &AdmissiblePair,
    ctx: &QContext,
    tol: &Tolerance,
) -> Result<IdentityReport> {
    let qq = ctx.q.q();
    let s = pair.product().sqrt();
    let x = Complex64::from_polar(1.0, eta) / qq.sqrt();
    let y = Complex64::new(-ctx.zeta_plus * s / qq, 0.0);
    let z = Complex64::new(-ctx.zeta_minus * s / qq, 0.0);
    let w = -s / pair.gamma;
    let mut r = weierstrass_residual(x, y, z, w, &ctx.q, tol)?;
    r.identity_name = "weierstrass_trace_specialization".into();
    r.params = pair_json(eta, pair, ctx);
    Ok(r)
}

/// The four-theta identity equivalent to `tr K̂(η) = 1`.
pub fn trace_identity_residual(eta: f64, pair: &AdmissiblePair, ctx: &QContext, tol: &Tolerance) -> Result<IdentityReport> {
    let q = &ctx.q;
    let qq = q.q();
    let s = pair.product().sqrt();
    let (g, d) = (pair.gamma, pair.delta);
    let (zp, zm) = (Complex64::new(ctx.zeta_plus, 0.0), Complex64::new(ctx.zeta_minus, 0.0));
    let e = Complex64::from_polar(1.0, eta);
    let k = s / qq.sqrt();
    let t1 = th(&[zm / zp, g * d * zm * zp / qq, -e * qq.sqrt() * s / g, -e * qq.sqrt() * s / d], q, tol)?;
    let t2 = th(&[g * zp, d * zp, -e * zm * k, -e.conj() * zm * k], q, tol)?;
    let t3 = th(&[g * zm, d * zm, -e * zp * k, -e.conj() * zp * k], q, tol)?;
    let lhs = t1.sub(t2).to_complex();
    let rhs = (t3 * (-zm / zp)).to_complex();
    let floor = t1.to_complex().norm().max(t2.to_complex().norm());
    Ok(IdentityReport::with_floor("trace_identity", lhs, rhs, floor, pair_json(eta, pair, ctx)))
}

// ---------------------------------------------------------------------------
// bilateral sums

/// Truncation length for a two-sided sum whose terms decay like `rate^{|m|}`.
fn bilateral_terms(rate: f64, tol: &Tolerance) -> usize {
    ((tol.rel_tol * 1e-3).ln() / rate.ln()).ceil() as usize + 10
}

/// `Σ_m a^m / (z p^m + z^{-1} p^{-m})` with its geometric tail bound.
pub fn ramanujan_sum(a: Complex64, z: Complex64, p: f64, tol: &Tolerance) -> Result<(Complex64, f64)> {
    check_p(p)?;
    if !(a.norm() > p && a.norm() < 1.0 / p) {
        return Err(Error::domain("ramanujan_sum", format!("need p < |a| < 1/p, got |a| = {}", a.norm())));
    }
    if z.norm() == 0.0 {
        return Err(Error::domain("ramanujan_sum", "z = 0"));
    }
    let rate = (a.norm() * p).max(p / a.norm());
    let n = bilateral_terms(rate, tol) as i32;
    let term = |m: i32| a.powi(m) / (z * p.powi(m) + z.inv() * p.powi(-m));
    let mut sum = Complex64::new(0.0, 0.0);
    for k in (1..=n).rev() {
        sum += term(k) + term(-k);
    }
    sum += term(0);
    if !sum.re.is_finite() || !sum.im.is_finite() {
        return Err(Error::pole("ramanujan_sum", format!("z = {z} hits a pole z^2 = -p^(-2m)")));
    }
    let edge = term(n).norm() + term(-n).norm();
    Ok((sum, edge * rate / (1.0 - rate)))
}

/// `-z θ_{p²}(-apz²) θ'_{p²}(1) / (θ_{p²}(-z²) θ_{p²}(ap))`.
pub fn ramanujan_closed(a: Complex64, z: Complex64, p: f64, tol: &Tolerance) -> Result<Complex64> {
    let p2 = QParam::new(p * p)?;
    if lattice_exponent(-z * z, &p2).is_some() {
        return Err(Error::pole("ramanujan_closed", format!("-z^2 lies on p^(2Z) at z = {z}")));
    }
    let d1 = theta_deriv(Complex64::new(1.0, 0.0), &p2, tol)?.value;
    let num = th(&[-a * p * z * z], &p2, tol)? * d1;
    let den = th(&[-z * z, a * p], &p2, tol)?;
    Ok((num / den).to_complex() * -z)
}

pub fn ramanujan_sum_residual(a: Complex64, z: Complex64, p: f64, tol: &Tolerance) -> Result<IdentityReport> {
    let (lhs, _) = ramanujan_sum(a, z, p, tol)?;
    let rhs = ramanujan_closed(a, z, p, tol)?;
    // the denominators are smallest where |z| p^m ~ 1
    let m0 = (-z.norm().ln() / p.ln()).round() as i32;
    let scale = (m0 - 3..=m0 + 3)
        .map(|m| (a.powi(m) / (z * p.powi(m) + z.inv() * p.powi(-m))).norm())
        .fold(0.0, f64::max);
    Ok(IdentityReport::with_floor("ramanujan_sum", lhs, rhs, scale, json!({"a": cj(a), "z": cj(z), "p": p})))
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("p must lie in (0, 1), got {p}")));
    }
    Ok(())
}

/// `Σ_{m≠0} z^m / (p^{-m} - p^m)` with its geometric tail bound.
pub fn logderiv_sum(z: Complex64, p: f64, tol: &Tolerance) -> Result<(Complex64, f64)> {
    check_p(p)?;
    if !(z.norm() > p && z.norm() < 1.0 / p) {
        return Err(Error::domain("logderiv_sum", format!("need p < |z| < 1/p, got |z| = {}", z.norm())));
    }
    let rate = (z.norm() * p).max(p / z.norm());
    let n = bilateral_terms(rate, tol) as i32;
    let term = |m: i32| z.powi(m) / (p.powi(-m) - p.powi(m));
    let mut sum = Complex64::new(0.0, 0.0);
    for k in (1..=n).rev() {
        sum += term(k) + term(-k);
    }
    let edge = term(n).norm() + term(-n).norm();
    Ok((sum, edge * rate / (1.0 - rate)))
}

/// `-pz θ'_{p²}(pz) / θ_{p²}(pz)`.
pub fn logderiv_closed(z: Complex64, p: f64) -> Result<Complex64> {
    let p2 = QParam::new(p * p)?;
    Ok(-p * z * theta_logderiv(p * z, &p2)?)
}

pub fn logderiv_sum_residual(z: Complex64, p: f64, tol: &Tolerance) -> Result<IdentityReport> {
    let (lhs, _) = logderiv_sum(z, p, tol)?;
    let rhs = logderiv_closed(z, p)?;
    // at z = 1 both sides vanish; the floor keeps the residual absolute there
    Ok(IdentityReport::with_floor("logderiv_sum", lhs, rhs, 1e-12, json!({"z": cj(z), "p": p})))
}

// ---------------------------------------------------------------------------
// Fourier-form equality and the reduced elliptic identity

/// Entrywise comparison of the logarithmic-derivative and theta-quotient
/// forms of the Fourier symbol; reports the worst entry.
pub fn fourier_equality_residual(eta: f64, pair: &AdmissiblePair, ctx: &QContext, tol: &Tolerance) -> Result<IdentityReport> {
    let a = fourier_lemma_form(eta, pair, ctx, tol)?;
    let b = fourier_closed(eta, pair, ctx, tol)?;
    Ok(worst_entry("fourier_lemma_vs_closed", &a.entries(), &b.entries(), pair_json(eta, pair, ctx)))
}

/// Entrywise comparison of the truncated lattice sum against the closed form.
pub fn fourier_series_residual(series: &FourierSeries, eta: f64, pair: &AdmissiblePair, ctx: &QContext, tol: &Tolerance) -> Result<IdentityReport> {
    let a = series.eval(eta).value;
    let b = fourier_closed(eta, pair, ctx, tol)?;
    Ok(worst_entry("fourier_series_vs_closed", &a.entries(), &b.entries(), pair_json(eta, pair, ctx)))
}

fn worst_entry(name: &str, a: &[Complex64; 4], b: &[Complex64; 4], params: serde_json::Value) -> IdentityReport {
    // symbol entries are O(1); measure them absolutely below unit size
    (0..4)
        .map(|i| IdentityReport::with_floor(name, a[i], b[i], 1.0, params.clone()))
        .max_by(|x, y| x.rel_residual.total_cmp(&y.rel_residual))
        .expect("four entries")
}

/// The four signed terms of `ℓ(c, d)`, the left side of the reduced
/// elliptic identity.
pub fn ell_terms(c: Complex64, d: Complex64, zeta_plus: f64, q: &QParam) -> Result<[Complex64; 4]> {
    let sq = q.q().sqrt();
    let zp = zeta_plus;
    let t = |w: Complex64| -> Result<Complex64> { Ok(w * theta_logderiv(w, q)?) };
    Ok([t(d * d * zp)?, -t(c * c * zp)?, t(sq * c / d)?, -t(sq * d / c)?])
}

pub fn ell_lhs(c: Complex64, d: Complex64, zeta_plus: f64, q: &QParam) -> Result<Complex64> {
    Ok(ell_terms(c, d, zeta_plus, q)?.iter().sum())
}

/// Right side `r(c, d)` of the reduced elliptic identity.
pub fn ell_rhs(c: Complex64, d: Complex64, zeta_plus: f64, q: &QParam, tol: &Tolerance) -> Result<Complex64> {
    let qq = q.q();
    let sq = qq.sqrt();
    let poch = qpoch_inf(Complex64::new(qq, 0.0), q, tol).value;
    let pre = qq * poch * poch / (d * d * zeta_plus);
    let num = th(&[d / c, -d / c, -sq * d / c], q, tol)? * th(&[zeta_plus * c * d / sq], q, tol)?.powi(2);
    let den = th(&[c * c * zeta_plus, d * d * zeta_plus, sq * d / c], q, tol)?;
    if den.is_zero() {
        return Err(Error::pole("ell_rhs", format!("denominator vanishes at c = {c}")));
    }
    Ok((num / den).to_complex() * pre)
}

pub fn ell_identity_residual(c: Complex64, d: Complex64, zeta_plus: f64, q: &QParam, tol: &Tolerance) -> Result<IdentityReport> {
    let terms = ell_terms(c, d, zeta_plus, q)?;
    let lhs = terms.iter().sum();
    let rhs = ell_rhs(c, d, zeta_plus, q, tol)?;
    let floor = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
    let params = json!({"c": cj(c), "d": cj(d), "zeta_plus": zeta_plus, "q": q.q()});
    Ok(IdentityReport::with_floor("ell_equals_r", lhs, rhs, floor, params))
}

/// Residues of `ℓ(·, d)` and `r(·, d)` at `c = d√q`, by the trapezoidal
/// rule on a circle well inside the distance to the neighbouring poles.
pub fn ell_residues(d: Complex64, zeta_plus: f64, q: &QParam, tol: &Tolerance) -> Result<(Complex64, Complex64)> {
    let qq = q.q();
    let c0 = d * qq.sqrt();
    let mut near = f64::INFINITY;
    let base = zeta_plus.powf(-0.5);
    for m in -4..=4 {
        let h = qq.powf(m as f64 / 2.0);
        for pole in [Complex64::new(base * h, 0.0), Complex64::new(-base * h, 0.0), d * qq.powf(m as f64 + 0.5)] {
            let dist = (pole - c0).norm();
            if dist > 1e-12 * c0.norm() {
                near = near.min(dist);
            }
        }
    }
    let radius = 0.25 * near.min(c0.norm());
    let n = 256;
    let (mut rl, mut rr) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for k in 0..n {
        let e = Complex64::from_polar(radius, TAU * k as f64 / n as f64);
        rl += ell_lhs(c0 + e, d, zeta_plus, q)? * e;
        rr += ell_rhs(c0 + e, d, zeta_plus, q, tol)? * e;
    }
    Ok((rl / n as f64, rr / n as f64))
}

// ---------------------------------------------------------------------------
// suites

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Theta,
    Hyper,
    Weierstrass,
    Sums,
    Fourier,
    Projection,
}

impl Suite {
    pub const ALL: [Suite; 6] = [Suite::Theta, Suite::Hyper, Suite::Weierstrass, Suite::Sums, Suite::Fourier, Suite::Projection];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Theta => "theta",
            Suite::Hyper => "hyper",
            Suite::Weierstrass => "weierstrass",
            Suite::Sums => "sums",
            Suite::Fourier => "fourier",
            Suite::Projection => "projection",
        }
    }

    pub fn parse(s: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|x| x.name() == s)
    }

    /// Default residual threshold per identity in the suite.
    pub fn threshold(self, identity: &str) -> f64 {
        match identity {
            "phi21_q_difference" => 1e-9,
            "heine" | "watson" | "ramanujan_sum" | "logderiv_sum" | "fourier_series_vs_closed" => 1e-8,
            "fourier_lemma_vs_closed" | "ell_equals_r" | "projection_idempotent" => 1e-9,
            _ => 1e-10,
        }
    }
}

/// Per-identity summary of a suite run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentitySummary {
    pub suite: Suite,
    pub identity: String,
    pub draws: usize,
    pub max_residual: f64,
    pub threshold: f64,
    pub failures: usize,
}

impl IdentitySummary {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteRun {
    pub suite: Suite,
    pub reports: Vec<IdentityReport>,
    pub summaries: Vec<IdentitySummary>,
}

impl SuiteRun {
    pub fn passed(&self) -> bool {
        self.summaries.iter().all(IdentitySummary::passed)
    }

    /// Reports over their threshold.
    pub fn failures(&self) -> Vec<&IdentityReport> {
        self.reports.iter().filter(|r| r.rel_residual >= self.threshold_of(&r.identity_name)).collect()
    }

    fn threshold_of(&self, identity: &str) -> f64 {
        self.summaries.iter().find(|s| s.identity == identity).map_or(0.0, |s| s.threshold)
    }
}

/// How many times a draw is retried when the parameters hit a precondition
/// (a pole, a lattice point) of one of the evaluators.
const REDRAWS: usize = 16;

/// Runs `draws` seeded draws of a suite. `threshold_override` replaces every
/// per-identity threshold.
pub fn run_suite(suite: Suite, seed: u64, draws: usize, threshold_override: Option<f64>, tol: &Tolerance) -> Result<SuiteRun> {
    let per_draw: Vec<Vec<IdentityReport>> = (0..draws as u64)
        .into_par_iter()
        .map(|i| {
            let mut d = Draw::new(seed ^ suite_salt(suite), i);
            let mut last = None;
            for _ in 0..REDRAWS {
                match draw_suite(suite, &mut d, tol) {
                    Ok(r) => return Ok(r),
                    Err(e) if e.is_validation() || matches!(e, Error::Pole { .. } | Error::Domain { .. } | Error::Conditioning(_)) => last = Some(e),
                    Err(e) => return Err(e),
                }
            }
            Err(last.expect("at least one attempt"))
        })
        .collect::<Result<_>>()?;
    let reports: Vec<IdentityReport> = per_draw.into_iter().flatten().collect();
    let mut names: Vec<String> = Vec::new();
    for r in &reports {
        if !names.contains(&r.identity_name) {
            names.push(r.identity_name.clone());
        }
    }
    let summaries = names
        .into_iter()
        .map(|name| {
            let threshold = threshold_override.unwrap_or_else(|| suite.threshold(&name));
            let rs: Vec<_> = reports.iter().filter(|r| r.identity_name == name).collect();
            IdentitySummary {
                suite,
                draws: rs.len(),
                max_residual: rs.iter().map(|r| r.rel_residual).fold(0.0, f64::max),
                failures: rs.iter().filter(|r| !(r.rel_residual < threshold)).count(),
                threshold,
                identity: name,
            }
        })
        .collect();
    Ok(SuiteRun { suite, reports, summaries })
}

fn suite_salt(s: Suite) -> u64 {
    (s as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

fn off_cut(d: &mut Draw) -> Complex64 {
    let r = d.log_uniform(0.2, 5.0);
    Complex64::from_polar(r, d.uniform(-PI + 0.1, PI - 0.1))
}

fn draw_suite(suite: Suite, d: &mut Draw, tol: &Tolerance) -> Result<Vec<IdentityReport>> {
    match suite {
        Suite::Theta => {
            let q = QParam::new(d.uniform(0.3, 0.9))?;
            let z = d.complex_annulus(0.1, 10.0);
            let n = d.int(-3, 3) as i32;
            let zj = off_cut(d);
            Ok(vec![
                quasi_periodicity_residual(z, n, &q, tol)?,
                reflection_residual(z, &q, tol)?,
                triple_product_residual(z, &q, tol)?,
                jacobi_imaginary_residual(zj, &q, tol)?,
            ])
        }
        Suite::Hyper => {
            let q = QParam::new(d.uniform(0.3, 0.9))?;
            let mut par = || d.complex_annulus(0.2, 1.5);
            let (a, b, c) = (par(), par(), par());
            let p = Phi21Params::new(a, b, c, q)?;
            let z = d.complex_annulus(0.1, 5.0);
            Ok(vec![qdifference_residual(&p, z, tol)?, heine_residual(&p, z, tol)?, watson_residual(&p, z, tol)?])
        }
        Suite::Weierstrass => {
            let q = QParam::new(d.uniform(0.3, 0.9))?;
            let v: Vec<Complex64> = (0..4).map(|_| d.complex()).collect();
            let ctx = d.context(0.3, 0.9)?;
            let pair = d.pair(&ctx)?;
            let eta = d.eta();
            Ok(vec![
                weierstrass_residual(v[0], v[1], v[2], v[3], &q, tol)?,
                weierstrass_trace_specialization(eta, &pair, &ctx, tol)?,
                trace_identity_residual(eta, &pair, &ctx, tol)?,
            ])
        }
        Suite::Sums => {
            let p = d.uniform(0.3, 0.8);
            // keep |a| and |z| a little inside the admissible annulus so the
            // truncated sums stay short
            let band = |d: &mut Draw| Complex64::from_polar(d.log_uniform(p.powf(0.9), p.powf(-0.9)), d.uniform(-PI, PI));
            let a = band(d);
            let z = d.complex_annulus(0.3, 3.0);
            let w = band(d);
            Ok(vec![ramanujan_sum_residual(a, z, p, tol)?, logderiv_sum_residual(w, p, tol)?])
        }
        Suite::Fourier => {
            let ctx = d.context(0.3, 0.9)?;
            let pair = d.pair(&ctx)?;
            let eta = d.eta();
            let series = FourierSeries::new(&pair, &ctx, tol)?;
            let c = d.complex_annulus(0.5, 2.0);
            let dd = d.complex_annulus(0.5, 2.0);
            Ok(vec![
                fourier_series_residual(&series, eta, &pair, &ctx, tol)?,
                fourier_equality_residual(eta, &pair, &ctx, tol)?,
                ell_identity_residual(c, dd, ctx.zeta_plus, &ctx.q, tol)?,
            ])
        }
        Suite::Projection => {
            let ctx = d.context(0.3, 0.9)?;
            let pair = d.pair(&ctx)?;
            let eta = d.eta();
            let m = fourier_closed(eta, &pair, &ctx, tol)?;
            Ok(projection_reports(&ProjectionReport::of(&m), &m, pair_json(eta, &pair, &ctx)))
        }
    }
}

/// The projection residuals phrased as identity reports against their
/// targets (absolute below unit size).
pub fn projection_reports(r: &ProjectionReport, m: &crate::fourier::Matrix2C, params: serde_json::Value) -> Vec<IdentityReport> {
    let zero = Complex64::new(0.0, 0.0);
    let herm = (0..4)
        .map(|i| IdentityReport::with_floor("projection_hermitian", m.entries()[i], m.adjoint().entries()[i], 1.0, params.clone()))
        .max_by(|x, y| x.rel_residual.total_cmp(&y.rel_residual))
        .expect("four entries");
    let sq = m.mul(m);
    let idem = (0..4)
        .map(|i| IdentityReport::with_floor("projection_idempotent", sq.entries()[i], m.entries()[i], 1.0, params.clone()))
        .max_by(|x, y| x.rel_residual.total_cmp(&y.rel_residual))
        .expect("four entries");
    debug_assert!((herm.abs_residual - r.hermitian_residual).abs() < 1e-15);
    vec![
        herm,
        IdentityReport::with_floor("projection_det", m.det(), zero, 1.0, params.clone()),
        IdentityReport::with_floor("projection_trace", m.trace(), Complex64::new(1.0, 0.0), 1.0, params),
        idem,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn weierstrass_structural_zero() {
        let q = QParam::new(0.5).unwrap();
        let tol = Tolerance::default();
        let z = c(0.7, 0.4);
        let r = weierstrass_residual(c(1.3, -0.2), c(-0.6, 0.9), z, z, &q, &tol).unwrap();
        assert!(r.degenerate && r.rel_residual < 1e-14, "{r:?}");
        let r = weierstrass_residual(c(1.3, -0.2), c(-0.6, 0.9), z, c(2.1, 0.3), &q, &tol).unwrap();
        assert!(!r.degenerate && r.rel_residual < 1e-12);
    }

    #[test]
    fn trace_specialization_and_identity() {
        let ctx = QContext::new(0.45, 1.7, -0.35).unwrap();
        let tol = Tolerance::default();
        for pair in [
            ctx.validate_pair(c(0.5, 0.9), c(0.5, -0.9)).unwrap(),
            ctx.validate_pair(c(0.3, 0.0), c(0.55, 0.0)).unwrap(),
            ctx.validate_pair(c(0.4, 0.0), c(0.4, 0.0)).unwrap(),
        ] {
            for eta in [0.0, 1.1, 4.0] {
                assert!(weierstrass_trace_specialization(eta, &pair, &ctx, &tol).unwrap().rel_residual < 1e-11);
                assert!(trace_identity_residual(eta, &pair, &ctx, &tol).unwrap().rel_residual < 1e-11);
            }
        }
    }

    #[test]
    fn sums_match_closed_forms() {
        let tol = Tolerance::default();
        let p = 0.55;
        let (a, z) = (c(0.8, 0.6), c(0.7, -1.1));
        assert!(ramanujan_sum_residual(a, z, p, &tol).unwrap().rel_residual < 1e-10);
        // z -> 1/z together with a -> 1/a leaves the sum unchanged
        let s1 = ramanujan_sum(a, z.inv(), p, &tol).unwrap().0;
        let s2 = ramanujan_sum(a.inv(), z, p, &tol).unwrap().0;
        assert!((s1 - s2).norm() < 1e-12 * s1.norm());
        assert!(ramanujan_sum(c(p, 0.0), z, p, &tol).is_err());

        let r = logderiv_sum_residual(c(1.0, 0.0), p, &tol).unwrap();
        assert!(r.lhs.norm() < 1e-12 && r.rhs.norm() < 1e-12);
        let r = logderiv_sum_residual(c(0.8, 0.0), p, &tol).unwrap();
        assert!(r.rel_residual < 1e-10 && r.lhs.im.abs() < 1e-12 && r.rhs.im.abs() < 1e-12);
        assert!(logderiv_sum_residual(c(-1.2, 0.9), p, &tol).unwrap().rel_residual < 1e-10);
    }

    #[test]
    fn doubling_sum_length_stays_within_tail_bound() {
        let p = 0.6;
        let (a, z) = (c(1.2, -0.5), c(0.4, 0.9));
        let (s1, b1) = ramanujan_sum(a, z, p, &Tolerance::new(1e-6).unwrap()).unwrap();
        let (s2, _) = ramanujan_sum(a, z, p, &Tolerance::default()).unwrap();
        assert!((s1 - s2).norm() <= b1 + 1e-15);
        let (l1, b1) = logderiv_sum(z, p, &Tolerance::new(1e-6).unwrap()).unwrap();
        let (l2, _) = logderiv_sum(z, p, &Tolerance::default()).unwrap();
        assert!((l1 - l2).norm() <= b1 + 1e-15);
    }

    #[test]
    fn reduced_elliptic_identity() {
        let q = QParam::new(0.4).unwrap();
        let tol = Tolerance::default();
        let zp = 1.3;
        for (cc, dd) in [(c(0.8, 0.3), c(1.1, -0.4)), (c(-0.6, 0.9), c(0.7, 0.2))] {
            assert!(ell_identity_residual(cc, dd, zp, &q, &tol).unwrap().rel_residual < 1e-10);
        }
        let d = c(0.9, 0.25);
        let c0 = q.q().sqrt() / (zp * d);
        assert!(ell_lhs(c0, d, zp, &q).unwrap().norm() < 1e-10);
        assert!(ell_rhs(c0, d, zp, &q, &tol).unwrap().norm() < 1e-10);
        let (rl, rr) = ell_residues(d, zp, &q, &tol).unwrap();
        let target = d * 2.0 * q.q().sqrt();
        assert!((rl - target).norm() < 1e-6 && (rr - target).norm() < 1e-6, "{rl} {rr} {target}");
    }

    #[test]
    fn suites_pass_and_reproduce() {
        let tol = Tolerance::default();
        for s in Suite::ALL {
            let run = run_suite(s, 11, 12, None, &tol).unwrap();
            assert!(run.passed(), "{:?}: {:?}", s, run.summaries);
            let again = run_suite(s, 11, 12, None, &tol).unwrap();
            assert_eq!(run.reports, again.reports);
        }
    }
}
