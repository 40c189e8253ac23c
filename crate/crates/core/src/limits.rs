//! Limits of the elliptic tail kernel: the tail limit of the basic
//! hypergeometric kernel as both arguments approach zero, and the two
//! `q → 1` degenerations, to the matrix trigonometric kernel on `ℝ ⊔ ℝ`
//! and to the discrete sine kernel on `ℤ`.
//!
//! The scans only measure errors. Whether a scan counts as convergent is
//! decided by [`strictly_decreasing`] plus a terminal threshold chosen by
//! the caller; no rate is claimed for the `q → 1` limits.

use crate::error::{Error, Result};
use crate::kernels::{
    gauge_eps, AdmissiblePair, AdmissibleQuadruple, BasicKernel, Branch, EllipticKernel, LatticePoint, QContext,
};
use crate::qspecial::{QParam, Tolerance};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const REAL_TOL: f64 = 1e-14;

/// Copy of the real line in `ℝ ⊔ ℝ`. The first copy corresponds to the
/// positive half `ζ₊q^ℤ` of the lattice, the second to `ζ₋q^ℤ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Line {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl Line {
    pub fn from_index(i: u8) -> Result<Line> {
        match i {
            1 => Ok(Line::One),
            2 => Ok(Line::Two),
            _ => Err(Error::InvalidParameter(format!("line index must be 1 or 2, got {i}"))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Line::One => 1,
            Line::Two => 2,
        }
    }

    pub fn branch(self) -> Branch {
        match self {
            Line::One => Branch::Plus,
            Line::Two => Branch::Minus,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoLinePoint {
    pub u: f64,
    pub line: Line,
}

impl TwoLinePoint {
    pub fn new(u: f64, line: Line) -> Result<Self> {
        if !u.is_finite() {
            return Err(Error::InvalidParameter(format!("two-line coordinate must be finite, got {u}")));
        }
        Ok(TwoLinePoint { u, line })
    }
}

/// Parameters `(𝔠, 𝔡)` of the matrix trigonometric kernel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigParams {
    pub c: Complex64,
    pub d: Complex64,
}

impl TrigParams {
    /// Accepts `𝔡 = 𝔠̄` nonreal, or `𝔠, 𝔡` real in a common open interval
    /// `(m, m+1)`. The value `𝔠 = 𝔡` makes the kernel an indeterminate
    /// `0/0` whose resolution is not implemented, so it is rejected.
    pub fn new(c: Complex64, d: Complex64) -> Result<Self> {
        if !(c.re.is_finite() && c.im.is_finite() && d.re.is_finite() && d.im.is_finite()) {
            return Err(Error::InvalidParameter("trigonometric parameters must be finite".into()));
        }
        let scale = c.norm().max(d.norm()).max(1.0);
        let principal = c.im.abs() > REAL_TOL * scale && (d - c.conj()).norm() <= REAL_TOL * scale;
        let complementary = c.im.abs() <= REAL_TOL * scale && d.im.abs() <= REAL_TOL * scale && {
            let m = c.re.floor();
            c.re > m && d.re > m && c.re < m + 1.0 && d.re < m + 1.0
        };
        if !principal && !complementary {
            return Err(Error::NotAdmissible(format!(
                "need d = conj(c) nonreal or c, d real in one interval (m, m+1); got c = {c}, d = {d}"
            )));
        }
        if (c - d).norm() <= REAL_TOL * scale {
            return Err(Error::Degenerate(format!(
                "c = d = {c}: the matrix trigonometric kernel is 0/0 there and needs a separate \
                 L'Hopital limit, which is not implemented"
            )));
        }
        let (c, d) = if complementary { (Complex64::new(c.re, 0.0), Complex64::new(d.re, 0.0)) } else { (c, c.conj()) };
        Ok(TrigParams { c, d })
    }

    pub fn is_principal(&self) -> bool {
        self.c.im != 0.0
    }
}

fn sin_pi(z: Complex64) -> Complex64 {
    (z * PI).sin()
}

/// The matrix trigonometric kernel `K^{𝔠,𝔡}_{q→1}(x, y)` on `ℝ ⊔ ℝ`.
pub fn trig_kernel(x: TwoLinePoint, y: TwoLinePoint, tp: &TrigParams) -> Complex64 {
    let (c, d) = (tp.c, tp.d);
    let (sc, sd) = (sin_pi(c), sin_pi(d));
    let den = sin_pi(c - d) * PI;
    let w = x.u - y.u;
    let cd = c - d;
    match (x.line, y.line) {
        (Line::One, Line::One) | (Line::Two, Line::Two) => {
            let ratio = if w == 0.0 { cd } else { (cd * (w / 2.0)).sinh() / (w / 2.0).sinh() };
            sc * sd / den * ratio
        }
        (Line::One, Line::Two) => {
            let num = sc * (cd * (w / 2.0)).exp() - sd * (cd * (-w / 2.0)).exp();
            (sc * sd).sqrt() / den * num / (2.0 * (w / 2.0).cosh())
        }
        (Line::Two, Line::One) => {
            let num = sd * (cd * (w / 2.0)).exp() - sc * (cd * (-w / 2.0)).exp();
            (sc * sd).sqrt() / den * num / (2.0 * (w / 2.0).cosh())
        }
    }
}

/// The discrete sine kernel `sin(φ(m-n)) / (π(m-n))`, `φ/π` on the diagonal.
pub fn sine_kernel(m: i64, n: i64, phi: f64) -> Result<f64> {
    if !(phi > 0.0 && phi < PI) {
        return Err(Error::InvalidParameter(format!("phi must lie in (0, pi), got {phi}")));
    }
    if m == n {
        return Ok(phi / PI);
    }
    let k = (m - n) as f64;
    Ok((phi * k).sin() / (PI * k))
}

/// The regime in which `r⁻¹K̂^{γ,δ}` tends to the matrix trigonometric
/// kernel: `ζ₋ = -q^{𝔷₋}`, `ζ₊ = q^{𝔷₊}`, `γ = q^{𝔠-𝔷₊}`, `δ = q^{𝔡-𝔷₊}`.
///
/// With `mirrored` set the pair is `γ = -q^{𝔠-𝔷₋}`, `δ = -q^{𝔡-𝔷₋}`
/// instead; no limit kernel is asserted for that variant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeII {
    pub z_minus: f64,
    pub z_plus: f64,
    pub c: Complex64,
    pub d: Complex64,
    pub q: QParam,
    pub mirrored: bool,
}

impl RegimeII {
    pub fn new(z_minus: f64, z_plus: f64, params: &TrigParams, q: f64) -> Result<Self> {
        let r = RegimeII { z_minus, z_plus, c: params.c, d: params.d, q: QParam::new(q)?, mirrored: false };
        r.pair()?;
        Ok(r)
    }

    pub fn mirrored(self) -> Self {
        RegimeII { mirrored: true, ..self }
    }

    pub fn at(self, q: f64) -> Result<Self> {
        let r = RegimeII { q: QParam::new(q)?, ..self };
        r.pair()?;
        Ok(r)
    }

    pub fn trig_params(&self) -> Result<TrigParams> {
        TrigParams::new(self.c, self.d)
    }

    pub fn context(&self) -> Result<QContext> {
        let r = self.q.r();
        QContext::new(self.q.q(), (-r * self.z_plus).exp(), -(-r * self.z_minus).exp())
    }

    pub fn pair(&self) -> Result<(QContext, AdmissiblePair)> {
        let ctx = self.context()?;
        let r = self.q.r();
        let (shift, sign) = if self.mirrored { (self.z_minus, -1.0) } else { (self.z_plus, 1.0) };
        let g = ((self.c - shift) * -r).exp() * sign;
        let d = ((self.d - shift) * -r).exp() * sign;
        let pair = ctx.validate_pair(g, d)?;
        Ok((ctx, pair))
    }
}

/// The regime in which `K̃^{γ,δ}` tends to discrete sine kernels:
/// `γ = ρe^{-iφ}`, `δ = ρe^{iφ}` and lattice exponents `m_q` with
/// `q^{m_q} → s`. The lattice data `ζ±` and the modulus `ρ` are free
/// parameters of the regime.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeI {
    pub phi: f64,
    pub s: f64,
    pub rho: f64,
    pub zeta_plus: f64,
    pub zeta_minus: f64,
    pub q: QParam,
}

impl RegimeI {
    pub fn new(phi: f64, s: f64, rho: f64, zeta_plus: f64, zeta_minus: f64, q: f64) -> Result<Self> {
        if !(phi > 0.0 && phi < PI) {
            return Err(Error::InvalidParameter(format!("phi must lie in (0, pi), got {phi}")));
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter(format!("s must be positive, got {s}")));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
        }
        let r = RegimeI { phi, s, rho, zeta_plus, zeta_minus, q: QParam::new(q)? };
        r.pair()?;
        Ok(r)
    }

    pub fn at(self, q: f64) -> Result<Self> {
        let r = RegimeI { q: QParam::new(q)?, ..self };
        r.pair()?;
        Ok(r)
    }

    pub fn pair(&self) -> Result<(QContext, AdmissiblePair)> {
        let ctx = QContext::new(self.q.q(), self.zeta_plus, self.zeta_minus)?;
        let delta = Complex64::from_polar(self.rho, self.phi);
        let pair = ctx.validate_pair(delta.conj(), delta)?;
        Ok((ctx, pair))
    }

    /// The exponent `m_q = round(ln s / ln q)`.
    pub fn base_exponent(&self) -> i64 {
        (self.s.ln() / self.q.ln_q()).round() as i64
    }

    /// Sine parameter of the limit on the given half of the lattice.
    pub fn sine_parameter(&self, b: Branch) -> f64 {
        match b {
            Branch::Plus => PI - self.phi,
            Branch::Minus => self.phi,
        }
    }
}

/// `true` when every error is strictly below its predecessor, except that
/// errors already at or below `floor` may fluctuate there.
pub fn strictly_decreasing(errors: &[f64], floor: f64) -> bool {
    errors.windows(2).all(|w| w[1] < w[0] || w[1] <= floor)
}

/// Rounding level below which scan errors are not expected to keep
/// decreasing.
pub const SCAN_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanPoint {
    /// Sweep variable: `M` for the tail scan, `q` for the degenerations.
    pub at: f64,
    pub value: Complex64,
    pub target: Complex64,
    pub error: f64,
    /// Trigonometric scans only: the error against the limit kernel taken at
    /// the lattice positions `(mr, nr)` rather than at `(u, v)`, which
    /// removes the `O(r)` offset introduced by the floor.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aligned_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailScan {
    pub points: Vec<ScanPoint>,
    /// `max(|q²γ/δ|^{1/2}, |q²δ/γ|^{1/2})`.
    pub rate_bound: f64,
    /// `q·max(|γ/δ|, |δ/γ|)`. The leading same-type terms of
    /// `𝔉₁(x)𝔉₀(y) - 𝔉₁(y)𝔉₀(x)` grow like `(γ/δ)^{±M}` and only cancel to
    /// first order, so this is the rate the error actually decays at.
    pub pair_rate: f64,
}

/// Errors below this are treated as the rounding floor when fitting a rate.
pub const RATE_FIT_FLOOR: f64 = 1e-12;

impl TailScan {
    pub fn terminal_error(&self) -> f64 {
        self.points.last().map_or(f64::NAN, |p| p.error)
    }

    /// Geometric decay rate from a least-squares fit of `ln error_M`
    /// against `M`, over the points past a burn-in of five steps whose
    /// error is still above [`RATE_FIT_FLOOR`] relative to the target.
    pub fn empirical_rate(&self) -> Option<f64> {
        let scale = self.points.first().map_or(1.0, |p| p.target.norm().max(1.0));
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter(|p| p.at >= 5.0 && p.error > RATE_FIT_FLOOR * scale)
            .map(|p| (p.at, p.error.ln()))
            .collect();
        if pts.len() < 3 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some((sxy / sxx).exp())
    }
}

/// Errors `|(sgn x sgn y)^M K^{α,β,γ,δ}(q^M x, q^M y) - K^{γ,δ}(x, y)|`
/// for `M = 0..=m_max`.
pub fn tail_limit_scan(
    x: LatticePoint,
    y: LatticePoint,
    quad: &AdmissibleQuadruple,
    ctx: &QContext,
    m_max: u32,
    tol: &Tolerance,
) -> Result<TailScan> {
    let basic = BasicKernel::new(quad, ctx, tol)?;
    let target = EllipticKernel::new(&quad.gd, ctx, tol)?.eval_lattice(x, y)?.value;
    let sign = x.branch.sign() * y.branch.sign();
    let points = (0..=m_max)
        .into_par_iter()
        .map(|m| {
            let v = basic.eval_lattice(x.shift(m as i64), y.shift(m as i64))?.value * sign.powi(m as i32);
            Ok(ScanPoint { at: m as f64, value: v, target, error: (v - target).norm(), aligned_error: None })
        })
        .collect::<Result<Vec<_>>>()?;
    let (g, d) = (quad.gamma(), quad.delta());
    let q2 = ctx.q.q().powi(2);
    let rate_bound = (q2 * (g / d).norm()).sqrt().max((q2 * (d / g).norm()).sqrt());
    let pair_rate = ctx.q.q() * (g / d).norm().max((d / g).norm());
    Ok(TailScan { points, rate_bound, pair_rate })
}

/// Errors `|r⁻¹K̂^{γ,δ}(⌊u/r⌋^{(i)}, ⌊v/r⌋^{(j)}) - ε(x)ε(y) K^{𝔠,𝔡}_{q→1}(u^{(i)}, v^{(j)})|`
/// along a sweep of `q`, with `(γ, δ)` and `ζ±` taken from the regime and
/// `x`, `y` the lattice points the two-line points map to.
///
/// The gauge `ε` (`1` on `ζ₊q^ℤ`, `(-1)^k` at `ζ₋q^k`) does not die out in
/// the limit: the blocks touching the negative half alternate in sign with
/// the lattice index. Gauged targets leave every correlation determinant,
/// and so the limiting process, unchanged.
pub fn trig_limit_scan(
    x: TwoLinePoint,
    y: TwoLinePoint,
    regime: &RegimeII,
    sweep: &[f64],
    tol: &Tolerance,
) -> Result<Vec<ScanPoint>> {
    let params = regime.trig_params()?;
    let target = trig_kernel(x, y, &params);
    sweep
        .par_iter()
        .map(|&q| {
            let reg = regime.at(q)?;
            let (ctx, pair) = reg.pair()?;
            let r = reg.q.r();
            let m = (x.u / r).floor() as i64;
            let n = (y.u / r).floor() as i64;
            let px = LatticePoint { branch: x.line.branch(), k: m };
            let py = LatticePoint { branch: y.line.branch(), k: n };
            let v = EllipticKernel::new(&pair, &ctx, tol)?.hat(px, py)?.value / r;
            let gauge = gauge_eps(px) * gauge_eps(py);
            let target = target * gauge;
            let ax = TwoLinePoint { u: m as f64 * r, ..x };
            let ay = TwoLinePoint { u: n as f64 * r, ..y };
            let aligned = trig_kernel(ax, ay, &params) * gauge;
            Ok(ScanPoint { at: q, value: v, target, error: (v - target).norm(), aligned_error: Some((v - aligned).norm()) })
        })
        .collect()
}

/// Errors `|K̃^{γ,δ}(ζ q^{m_q}, ζ q^{n_q}) - K_sine(m, n)|` along a sweep of
/// `q`, where `ζ` is `ζ₊` or `ζ₋`, `m_q = round(ln s / ln q)`,
/// `n_q = m_q - (m - n)`, and the sine parameter is `π - φ` on the positive
/// half and `φ` on the negative half.
///
/// On the negative half the gauge factor `ε(x)ε(y) = (-1)^{m-n}` survives in
/// the limit, so the target there is `(-1)^{m-n} K_sine^φ(m, n)`; the ungauged
/// kernel tends to `K_sine^φ` itself. Both define the same process.
pub fn sine_limit_scan(
    m: i64,
    n: i64,
    branch: Branch,
    regime: &RegimeI,
    sweep: &[f64],
    tol: &Tolerance,
) -> Result<Vec<ScanPoint>> {
    let gauge = match branch {
        Branch::Plus => 1.0,
        Branch::Minus => gauge_eps(LatticePoint::minus(m - n)),
    };
    let target = Complex64::new(gauge * sine_kernel(m, n, regime.sine_parameter(branch))?, 0.0);
    sweep
        .par_iter()
        .map(|&q| {
            let reg = regime.at(q)?;
            let (ctx, pair) = reg.pair()?;
            let mq = reg.base_exponent();
            let px = LatticePoint { branch, k: mq };
            let py = LatticePoint { branch, k: mq - (m - n) };
            let v = EllipticKernel::new(&pair, &ctx, tol)?.tilde(px, py)?.value;
            Ok(ScanPoint { at: q, value: v, target, error: (v - target).norm(), aligned_error: None })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pt(u: f64, i: u8) -> TwoLinePoint {
        TwoLinePoint::new(u, Line::from_index(i).unwrap()).unwrap()
    }

    // written out from the three-case definition with real arithmetic only,
    // valid for real complementary parameters
    fn trig_real(u: f64, i: u8, v: f64, j: u8, cc: f64, dd: f64) -> f64 {
        let (sc, sd) = ((PI * cc).sin(), (PI * dd).sin());
        let pref = 1.0 / (PI * (PI * (cc - dd)).sin());
        let e = |t: f64| t.exp();
        match (i, j) {
            (1, 1) | (2, 2) if u == v => sc * sd * pref * (cc - dd),
            (1, 1) | (2, 2) => sc * sd * pref * ((cc - dd) * (u - v) / 2.0).sinh() / ((u - v) / 2.0).sinh(),
            (1, 2) => {
                (sc * sd).sqrt() * pref * (sc * e((cc - dd) * (u - v) / 2.0) - sd * e((cc - dd) * (v - u) / 2.0))
                    / (e((u - v) / 2.0) + e((v - u) / 2.0))
            }
            _ => {
                (sc * sd).sqrt() * pref * (sd * e((cc - dd) * (u - v) / 2.0) - sc * e((cc - dd) * (v - u) / 2.0))
                    / (e((u - v) / 2.0) + e((v - u) / 2.0))
            }
        }
    }

    #[test]
    fn trig_kernel_matches_real_rewrite() {
        let tp = TrigParams::new(c(1.3, 0.0), c(1.75, 0.0)).unwrap();
        for &(u, v) in &[(0.3, -1.2), (2.0, 2.0), (-0.4, 0.9), (1.5, 1.5)] {
            for i in 1..=2u8 {
                for j in 1..=2u8 {
                    let got = trig_kernel(pt(u, i), pt(v, j), &tp);
                    let want = trig_real(u, i, v, j, 1.3, 1.75);
                    assert!((got - want).norm() < 1e-13 * want.abs().max(1.0), "{i}{j} {u} {v}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn trig_kernel_diagonal_and_symmetries() {
        let tp = TrigParams::new(c(0.3, 0.4), c(0.3, -0.4)).unwrap();
        let diag = trig_kernel(pt(0.7, 1), pt(0.7, 1), &tp);
        let (sc, sd) = (sin_pi(tp.c), sin_pi(tp.d));
        let want = sc * sd * (tp.c - tp.d) / (sin_pi(tp.c - tp.d) * PI);
        assert!((diag - want).norm() < 1e-15);
        assert!(diag.im.abs() < 1e-15 && diag.re > 0.0 && diag.re < 1.0);
        // the same-line blocks are even in u - v
        let a = trig_kernel(pt(0.3, 2), pt(-1.1, 2), &tp);
        let b = trig_kernel(pt(-1.1, 2), pt(0.3, 2), &tp);
        assert!((a - b).norm() < 1e-14);
        // the (1,2) entry at (u, v) is the (2,1) entry at (v, u) with c and d swapped
        let swapped = TrigParams { c: tp.d, d: tp.c };
        let e12 = trig_kernel(pt(0.3, 1), pt(-1.1, 2), &tp);
        let e21 = trig_kernel(pt(-1.1, 2), pt(0.3, 1), &swapped);
        assert!((e12 + e21).norm() < 1e-14, "{e12} {e21}");
        // near-diagonal continuity
        let near = trig_kernel(pt(0.7 + 1e-7, 1), pt(0.7, 1), &tp);
        assert!((near - diag).norm() < 1e-6);
    }

    #[test]
    fn trig_params_validation() {
        assert!(TrigParams::new(c(0.3, 0.4), c(0.3, -0.4)).is_ok());
        assert!(TrigParams::new(c(-1.8, 0.0), c(-1.2, 0.0)).is_ok());
        assert!(matches!(TrigParams::new(c(0.4, 0.0), c(0.4, 0.0)), Err(Error::Degenerate(_))));
        assert!(TrigParams::new(c(0.4, 0.0), c(1.2, 0.0)).is_err());
        assert!(TrigParams::new(c(0.3, 0.4), c(0.3, 0.4)).is_err());
        assert!(TrigParams::new(c(1.0, 0.0), c(1.5, 0.0)).is_err());
    }

    #[test]
    fn sine_kernel_values() {
        let phi = 1.1;
        assert_eq!(sine_kernel(4, 4, phi).unwrap(), phi / PI);
        assert_eq!(sine_kernel(2, 7, phi).unwrap(), sine_kernel(7, 2, phi).unwrap());
        assert!(sine_kernel(3, 1, PI / 2.0).unwrap().abs() < 1e-16);
        let r = RegimeI::new(phi, 1.0, 1.0, 1.0, -1.0, 0.5).unwrap();
        let sum = sine_kernel(0, 0, r.sine_parameter(Branch::Plus)).unwrap()
            + sine_kernel(0, 0, r.sine_parameter(Branch::Minus)).unwrap();
        assert!((sum - 1.0).abs() < 1e-15);
        assert!(sine_kernel(0, 1, 0.0).is_err());
    }

    #[test]
    fn tail_scan_converges() {
        let ctx = QContext::new(0.5, 1.2, -0.8).unwrap();
        let quad = ctx.validate_quadruple(c(0.15, 0.1), c(0.15, -0.1), c(0.9, 0.5), c(0.9, -0.5)).unwrap();
        let tol = Tolerance::default();
        for (x, y) in [(LatticePoint::plus(1), LatticePoint::minus(-2)), (LatticePoint::minus(0), LatticePoint::minus(0))] {
            let scan = tail_limit_scan(x, y, &quad, &ctx, 40, &tol).unwrap();
            assert!(scan.terminal_error() < 1e-6, "{x} {y}: {}", scan.terminal_error());
            let rate = scan.empirical_rate().unwrap();
            assert!(rate < 2.0 * scan.rate_bound && rate > 0.5 * scan.rate_bound, "{rate} vs {}", scan.rate_bound);
        }
    }

    #[test]
    fn complementary_tail_decays_at_pair_rate() {
        let ctx = QContext::new(0.5, 1.0, -1.0).unwrap();
        // γ, δ in (1, 2) and α, β in (1/8, 1/4): |δ/γ| = 1.5
        let quad = ctx.validate_quadruple(c(0.15, 0.0), c(0.2, 0.0), c(1.2, 0.0), c(1.8, 0.0)).unwrap();
        let scan = tail_limit_scan(LatticePoint::plus(0), LatticePoint::minus(1), &quad, &ctx, 36, &Tolerance::default()).unwrap();
        assert!((scan.pair_rate - 0.75).abs() < 1e-15);
        let tail: Vec<f64> = scan.points[20..].iter().map(|p| p.error).collect();
        for w in tail.windows(2) {
            assert!((w[1] / w[0] / scan.pair_rate - 1.0).abs() < 0.02, "{:?}", w);
        }
    }

    #[test]
    fn regimes_build_admissible_pairs() {
        let tp = TrigParams::new(c(0.2, 0.0), c(0.7, 0.0)).unwrap();
        let reg = RegimeII::new(0.3, -0.4, &tp, 0.9).unwrap();
        let (ctx, pair) = reg.pair().unwrap();
        assert!((ctx.zeta_plus - 0.9f64.powf(-0.4)).abs() < 1e-15);
        assert!((pair.gamma.re - 0.9f64.powf(0.6)).abs() < 1e-14);
        assert!(reg.mirrored().pair().is_ok());
        let ri = RegimeI::new(0.8, 2.0, 1.0, 1.0, -1.0, 0.95).unwrap();
        let (_, p) = ri.pair().unwrap();
        assert!(((p.delta.ln() - p.gamma.ln()) / Complex64::new(0.0, 2.0) - 0.8).norm() < 1e-14);
        assert_eq!(ri.base_exponent(), (2f64.ln() / 0.95f64.ln()).round() as i64);
    }

    #[test]
    fn degenerations_approach_their_targets() {
        let tol = Tolerance::default();
        let sweep = [0.8, 0.9, 0.95, 0.99];
        let tp = TrigParams::new(c(0.35, 0.2), c(0.35, -0.2)).unwrap();
        let reg = RegimeII::new(0.2, -0.3, &tp, 0.8).unwrap();
        for (i, j) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            let scan = trig_limit_scan(pt(0.5, i), pt(-0.7, j), &reg, &sweep, &tol).unwrap();
            let errs: Vec<f64> = scan.iter().map(|p| p.error).collect();
            let aligned: Vec<f64> = scan.iter().map(|p| p.aligned_error.unwrap()).collect();
            assert!(errs[3] < 0.05, "{i}{j}: {errs:?}");
            assert!(strictly_decreasing(&aligned, SCAN_FLOOR), "{i}{j}: {aligned:?}");
        }

        let ri = RegimeI::new(1.2, 1.5, 1.0, 1.0, -1.0, 0.8).unwrap();
        for b in [Branch::Plus, Branch::Minus] {
            for (m, n) in [(3, 1), (0, 1), (5, 5)] {
                let scan = sine_limit_scan(m, n, b, &ri, &sweep, &tol).unwrap();
                let errs: Vec<f64> = scan.iter().map(|p| p.error).collect();
                assert!(strictly_decreasing(&errs, SCAN_FLOOR) && errs[3] < 0.02, "{b} {m} {n}: {errs:?}");
            }
        }
    }
}
