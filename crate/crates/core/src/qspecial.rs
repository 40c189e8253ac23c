//! q-Pochhammer symbols, the theta function `θ_q(z) = (z, q/z; q)_∞` and its
//! logarithmic derivatives, the third Jacobi theta function with nome
//! parameter `q^{1/2}`, Jacobi's imaginary transformation, and the leading
//! `q → 1` asymptotics of `(q;q)_∞` and `θ_q`.
//!
//! Products are truncated once the next deviation `|z| q^k` drops below a
//! cutoff derived from [`Tolerance`]; the reported bound is the exact tail
//! estimate `exp(s) - 1` with `s = |z| q^N / ((1 - q)(1 - |z| q^N))`.

use crate::error::{Error, Result};
use crate::scaled::Scaled;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use twofloat::TwoFloat;

const I: Complex64 = Complex64::new(0.0, 1.0);
const MAX_FACTORS: usize = 2_000_000;
/// Arguments further than this many q-periods from the unit circle are pulled
/// back with the quasi-periodicity relation before the product is formed.
const REDUCE_BEYOND: i64 = 8;
/// Angular margin for the sector conditions of the asymptotic estimates.
pub const ARG_MARGIN: f64 = 1e-3;

/// The base `q ∈ (0, 1)` together with `r = -ln q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QParam {
    q: f64,
    r: f64,
}

impl QParam {
    pub fn new(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidParameter(format!("q must lie in (0, 1), got {q}")));
        }
        Ok(QParam { q, r: -q.ln() })
    }

    /// Builds the base from `r = -ln q > 0`.
    pub fn from_r(r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("r must be positive, got {r}")));
        }
        Ok(QParam { q: (-r).exp(), r })
    }

    #[inline]
    pub fn q(&self) -> f64 {
        self.q
    }

    #[inline]
    pub fn r(&self) -> f64 {
        self.r
    }

    #[inline]
    pub fn ln_q(&self) -> f64 {
        -self.r
    }

    /// `q^k` for integer `k`.
    pub fn pow(&self, k: i64) -> f64 {
        (-(k as f64) * self.r).exp()
    }

    /// The base `q^2`.
    pub fn squared(&self) -> QParam {
        QParam { q: self.q * self.q, r: 2.0 * self.r }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { rel_tol: 1e-12, abs_tol: 1e-300 }
    }
}

impl Tolerance {
    pub fn new(rel_tol: f64) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol < 1.0) {
            return Err(Error::InvalidParameter(format!("rel_tol must lie in (0, 1), got {rel_tol}")));
        }
        Ok(Tolerance { rel_tol, ..Default::default() })
    }

    /// Deviation size below which product factors are dropped.
    pub(crate) fn product_cutoff(&self, q: &QParam) -> f64 {
        (self.rel_tol * (1.0 - q.q()) * 1e-4).max(1e-18)
    }
}

/// A value with a bound on its truncation error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub value: Complex64,
    pub abs_error_bound: f64,
}

impl EvalResult {
    pub fn exact(value: Complex64) -> Self {
        EvalResult { value, abs_error_bound: 0.0 }
    }

    pub(crate) fn from_scaled(s: Scaled, rel_err: f64) -> Self {
        let value = s.to_complex();
        EvalResult { value, abs_error_bound: value.norm() * rel_err }
    }
}

/// A scaled value together with a relative truncation bound.
#[derive(Clone, Copy, Debug)]
pub struct ScaledEval {
    pub value: Scaled,
    pub rel_error_bound: f64,
}

impl ScaledEval {
    pub fn to_result(self) -> EvalResult {
        EvalResult::from_scaled(self.value, self.rel_error_bound)
    }
}

// ---------------------------------------------------------------------------
// q-Pochhammer symbols

/// `(z; q)_∞` in scaled form.
pub fn qpoch_scaled(z: Complex64, q: &QParam, tol: &Tolerance) -> ScaledEval {
    let cutoff = tol.product_cutoff(q);
    let mut prod = Scaled::ONE;
    let mut w = z;
    let mut n = 0usize;
    while w.norm() > cutoff && n < MAX_FACTORS {
        prod.mul_raw(Complex64::new(1.0, 0.0) - w);
        w *= q.q();
        n += 1;
    }
    let tail = w.norm();
    let s = tail / ((1.0 - q.q()) * (1.0 - tail).max(0.5));
    ScaledEval { value: prod.renormalized(), rel_error_bound: s.exp_m1() }
}

/// `(z; q)_∞ = ∏_{i≥1} (1 - z q^{i-1})`.
pub fn qpoch_inf(z: Complex64, q: &QParam, tol: &Tolerance) -> EvalResult {
    qpoch_scaled(z, q, tol).to_result()
}

/// `(z; q)_∞` truncated after exactly `n_terms` factors; used to audit the
/// error bound of [`qpoch_inf`].
pub fn qpoch_truncated(z: Complex64, q: &QParam, n_terms: usize) -> Complex64 {
    let mut prod = Scaled::ONE;
    let mut w = z;
    for _ in 0..n_terms {
        prod.mul_raw(Complex64::new(1.0, 0.0) - w);
        w *= q.q();
    }
    prod.to_complex()
}

/// Number of factors [`qpoch_inf`] multiplies for this argument.
pub fn qpoch_factor_count(z: Complex64, q: &QParam, tol: &Tolerance) -> usize {
    let cutoff = tol.product_cutoff(q);
    let a = z.norm();
    if a <= cutoff {
        return 0;
    }
    ((cutoff / a).ln() / q.ln_q()).ceil().max(0.0) as usize + 1
}

pub fn qpoch_multi_scaled(zs: &[Complex64], q: &QParam, tol: &Tolerance) -> ScaledEval {
    zs.iter().fold(ScaledEval { value: Scaled::ONE, rel_error_bound: 0.0 }, |acc, &z| {
        let f = qpoch_scaled(z, q, tol);
        ScaledEval { value: acc.value * f.value, rel_error_bound: acc.rel_error_bound + f.rel_error_bound }
    })
}

/// `(z_1, ..., z_m; q)_∞`.
pub fn qpoch_multi(zs: &[Complex64], q: &QParam, tol: &Tolerance) -> EvalResult {
    qpoch_multi_scaled(zs, q, tol).to_result()
}

// ---------------------------------------------------------------------------
// theta function

/// `Some(n)` when `z` is (numerically) the zero `q^n` of `θ_q`.
pub fn lattice_exponent(z: Complex64, q: &QParam) -> Option<i64> {
    if z.re <= 0.0 || z.im.abs() > 1e-14 * z.re {
        return None;
    }
    let t = z.re.ln() / q.ln_q();
    let n = t.round();
    if (t - n).abs() < 1e-12 {
        Some(n as i64)
    } else {
        None
    }
}

/// Splits `z = q^n w` with `|w|` within half a period of the unit circle.
fn reduce(z: Complex64, q: &QParam) -> (i64, Complex64) {
    let n = (z.norm().ln() / q.ln_q()).round() as i64;
    (n, z * q.pow(-n))
}

/// `(-1)^n q^{-n(n-1)/2} w^{-n}` as a scaled number.
fn quasi_period_factor(n: i64, w: Complex64, q: &QParam) -> Scaled {
    let nf = n as f64;
    let ln_w = w.ln();
    let expo = Complex64::new(0.5 * nf * (nf - 1.0) * q.r(), 0.0) - ln_w * nf;
    let s = Scaled::exp(expo);
    if n.rem_euclid(2) == 1 {
        -s
    } else {
        s
    }
}

fn theta_direct(z: Complex64, q: &QParam, tol: &Tolerance) -> ScaledEval {
    let a = qpoch_scaled(z, q, tol);
    let b = qpoch_scaled(Complex64::new(q.q(), 0.0) / z, q, tol);
    ScaledEval { value: a.value * b.value, rel_error_bound: a.rel_error_bound + b.rel_error_bound }
}

/// `θ_q(z)` in scaled form. Exact zero (with zero error bound) on `q^ℤ`.
pub fn theta_scaled(z: Complex64, q: &QParam, tol: &Tolerance) -> Result<ScaledEval> {
    if z.norm() == 0.0 || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::domain("theta", format!("z = {z}")));
    }
    if lattice_exponent(z, q).is_some() {
        return Ok(ScaledEval { value: Scaled::ZERO, rel_error_bound: 0.0 });
    }
    let (n, w) = reduce(z, q);
    if n.abs() > REDUCE_BEYOND {
        let base = theta_direct(w, q, tol);
        Ok(ScaledEval { value: base.value * quasi_period_factor(n, w, q), rel_error_bound: base.rel_error_bound })
    } else {
        Ok(theta_direct(z, q, tol))
    }
}

/// `θ_q(z) = (z, q/z; q)_∞`.
pub fn theta(z: Complex64, q: &QParam, tol: &Tolerance) -> Result<EvalResult> {
    theta_scaled(z, q, tol).map(ScaledEval::to_result)
}

pub fn theta_multi_scaled(zs: &[Complex64], q: &QParam, tol: &Tolerance) -> Result<ScaledEval> {
    let mut acc = ScaledEval { value: Scaled::ONE, rel_error_bound: 0.0 };
    for &z in zs {
        let t = theta_scaled(z, q, tol)?;
        acc = ScaledEval { value: acc.value * t.value, rel_error_bound: acc.rel_error_bound + t.rel_error_bound };
    }
    Ok(acc)
}

/// `θ_q(z_1, ..., z_m) = θ_q(z_1) ⋯ θ_q(z_m)`.
pub fn theta_multi(zs: &[Complex64], q: &QParam, tol: &Tolerance) -> Result<EvalResult> {
    theta_multi_scaled(zs, q, tol).map(ScaledEval::to_result)
}

fn logderiv_direct(z: Complex64, q: &QParam) -> Result<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let zi = z.inv();
    let span = z.norm().max(zi.norm());
    let mut sum = Complex64::new(0.0, 0.0);
    let mut t = 1.0; // q^k
    let mut k = 0usize;
    loop {
        let d1 = one - z * t;
        if d1.norm() < 1e-300 {
            return Err(Error::pole("theta_logderiv", format!("z = {z}")));
        }
        sum -= t / d1;
        if k >= 1 {
            let d2 = one - t * zi;
            if d2.norm() < 1e-300 {
                return Err(Error::pole("theta_logderiv", format!("z = {z}")));
            }
            sum += t * zi * zi / d2;
        }
        if t * span < 1e-18 * (1.0 - q.q()) && k >= 1 {
            break;
        }
        t *= q.q();
        k += 1;
        if k > MAX_FACTORS {
            return Err(Error::NoConvergence("theta_logderiv".into()));
        }
    }
    Ok(sum)
}

/// Logarithmic derivative `θ_q'(z) / θ_q(z)`; a pole on `q^ℤ`.
pub fn theta_logderiv(z: Complex64, q: &QParam) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(Error::domain("theta_logderiv", "z = 0"));
    }
    if lattice_exponent(z, q).is_some() {
        return Err(Error::pole("theta_logderiv", format!("z = {z} lies on q^Z")));
    }
    let (n, w) = reduce(z, q);
    if n.abs() > REDUCE_BEYOND {
        let lw = logderiv_direct(w, q)?;
        Ok((lw - n as f64 / w) * q.pow(-n))
    } else {
        logderiv_direct(z, q)
    }
}

fn logderiv2_direct(z: Complex64, q: &QParam) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let span = z.norm().max(z.norm().recip());
    let mut sum = Complex64::new(0.0, 0.0);
    let mut t = 1.0;
    let mut k = 0usize;
    loop {
        let d1 = one - z * t;
        sum -= t * t / (d1 * d1);
        if k >= 1 {
            let zt = z - t;
            sum -= t * (z * 2.0 - t) / (z * z * zt * zt);
        }
        if t * span < 1e-18 * (1.0 - q.q()) && k >= 1 {
            break;
        }
        t *= q.q();
        k += 1;
    }
    sum
}

/// Derivative of the logarithmic derivative, `(θ_q'/θ_q)'(z)`.
pub fn theta_logderiv_prime(z: Complex64, q: &QParam) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(Error::domain("theta_logderiv_prime", "z = 0"));
    }
    if lattice_exponent(z, q).is_some() {
        return Err(Error::pole("theta_logderiv_prime", format!("z = {z} lies on q^Z")));
    }
    let (n, w) = reduce(z, q);
    if n.abs() > REDUCE_BEYOND {
        let d = logderiv2_direct(w, q);
        Ok((d + n as f64 / (w * w)) * q.pow(-2 * n))
    } else {
        Ok(logderiv2_direct(z, q))
    }
}

/// `θ_q'(z)`. At the simple zeros `q^n` the closed value
/// `θ_q'(q^n) = (-1)^{n+1} q^{-n(n+1)/2} (q;q)_∞^2` is returned.
pub fn theta_deriv(z: Complex64, q: &QParam, tol: &Tolerance) -> Result<EvalResult> {
    if z.norm() == 0.0 {
        return Err(Error::domain("theta_deriv", "z = 0"));
    }
    if let Some(n) = lattice_exponent(z, q) {
        let qq = qpoch_scaled(Complex64::new(q.q(), 0.0), q, tol);
        let nf = n as f64;
        let sign = if n.rem_euclid(2) == 0 { -1.0 } else { 1.0 };
        let v = qq.value * qq.value * Scaled::exp(Complex64::new(0.5 * nf * (nf + 1.0) * q.r(), 0.0));
        return Ok(EvalResult::from_scaled(v.scale_real(sign), 2.0 * qq.rel_error_bound));
    }
    let th = theta_scaled(z, q, tol)?;
    let ld = theta_logderiv(z, q)?;
    Ok(EvalResult::from_scaled(th.value * ld, th.rel_error_bound))
}

// ---------------------------------------------------------------------------
// θ₃ and the imaginary transformation

/// `Σ_n exp(pre + n·ln_z + n²·half_ln_nome)`, summed outward until the terms
/// are negligible past their peak.
fn theta3_from_logs(pre: Complex64, ln_z: Complex64, half_ln_nome: f64, tol: &Tolerance) -> ScaledEval {
    // exponent is concave in n; its real part peaks near n* = -Re(ln_z)/(2·half_ln_nome)
    let peak = -ln_z.re / (2.0 * half_ln_nome);
    let term = |n: f64| pre + ln_z * n + half_ln_nome * n * n;
    let top = term(peak.round()).re.max(term(0.0).re);
    let mut sum = Complex64::new(0.0, 0.0);
    let eps = (tol.rel_tol * 1e-6).max(1e-20);
    let mut tail = 0.0;
    for dir in [1.0f64, -1.0] {
        let mut n = if dir > 0.0 { 0.0 } else { -1.0 };
        loop {
            let e = term(n);
            let mag = (e.re - top).exp();
            sum += Complex64::from_polar(mag, e.im);
            let past_peak = if dir > 0.0 { n > peak } else { n < peak };
            if past_peak && mag < eps {
                // ratio of successive magnitudes past the peak is below exp(half_ln_nome) < 1
                let ratio = (term(n + dir).re - e.re).exp();
                tail += mag * ratio / (1.0 - ratio).max(1e-300);
                break;
            }
            n += dir;
        }
    }
    let value = Scaled::new(sum, top);
    let rel = if sum.norm() > 0.0 { tail / sum.norm() } else { tail };
    ScaledEval { value, rel_error_bound: rel }
}

/// Complex double-double, enough for summing a cancelling series.
#[derive(Clone, Copy)]
struct Cdd {
    re: TwoFloat,
    im: TwoFloat,
}

impl Cdd {
    fn from(z: Complex64) -> Self {
        Cdd { re: TwoFloat::from(z.re), im: TwoFloat::from(z.im) }
    }

    fn real(x: TwoFloat) -> Self {
        Cdd { re: x, im: TwoFloat::from(0.0) }
    }

    fn add(self, o: Cdd) -> Cdd {
        Cdd { re: self.re + o.re, im: self.im + o.im }
    }

    fn mul(self, o: Cdd) -> Cdd {
        Cdd { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }

    fn scale(self, x: TwoFloat) -> Cdd {
        Cdd { re: self.re * x, im: self.im * x }
    }

    /// Reciprocal by Newton steps from the double-precision guess; the
    /// library's own division only returns a double-accurate quotient.
    fn inv(self) -> Cdd {
        let two = Cdd::real(TwoFloat::from(2.0));
        let mut r = Cdd::from(Complex64::new(self.re.hi(), self.im.hi()).inv());
        for _ in 0..2 {
            let e = two.add(self.mul(r).scale(TwoFloat::from(-1.0)));
            r = r.mul(e);
        }
        r
    }

    fn norm(self) -> f64 {
        Complex64::new(self.re.hi(), self.im.hi()).norm()
    }

    fn to_complex(self) -> Complex64 {
        Complex64::new(self.re.hi() + self.re.lo(), self.im.hi() + self.im.lo())
    }
}

/// Peak `ln|term|` beyond which the direct double-double sum is abandoned for
/// the log-scaled one.
const THETA3_DIRECT_RANGE: f64 = 600.0;

/// Direct summation of `Σ z^n q^{n²/2}` in double-double. For `q` near one
/// and `z` away from the positive axis the sum is exponentially smaller than
/// its terms; the extra precision keeps about 30 digits of cancellation.
fn theta3_direct(z: Complex64, q: &QParam) -> ScaledEval {
    let qd = TwoFloat::from(q.q());
    let half = qd.sqrt();
    let eps = 1e-34;
    let zd = Cdd::from(z);
    let zi = zd.inv();
    let mut sum = Cdd::real(TwoFloat::from(1.0));
    let mut abs_sum = 1.0;
    let mut tail = 0.0;
    for step in [zd, zi] {
        let mut t = Cdd::real(TwoFloat::from(1.0));
        let mut f = half;
        let mut peak = 1.0f64;
        loop {
            t = t.mul(step).scale(f);
            f *= qd;
            let m = t.norm();
            sum = sum.add(t);
            abs_sum += m;
            peak = peak.max(m);
            // once q^{n+1/2}|step| < 1/2 the remaining terms shrink geometrically
            let ratio = f.hi() * step.norm();
            if ratio < 0.5 && m < eps * peak {
                tail += m * ratio / (1.0 - ratio);
                break;
            }
        }
    }
    let value = sum.to_complex();
    let rounding = 1e-31 * abs_sum;
    let rel = (tail + rounding) / value.norm().max(f64::MIN_POSITIVE);
    ScaledEval { value: Scaled::from_complex(value), rel_error_bound: rel }
}

/// `θ₃(z; q) = Σ_{n∈ℤ} z^n q^{n²/2}` (nome parameter `q^{1/2}`).
pub fn theta3_scaled(z: Complex64, q: &QParam, tol: &Tolerance) -> Result<ScaledEval> {
    if z.norm() == 0.0 {
        return Err(Error::domain("theta3", "z = 0"));
    }
    let ln_z = z.norm().ln();
    // largest ln|term| is about (ln|z|)²/(2r)
    if ln_z * ln_z / (2.0 * q.r()) < THETA3_DIRECT_RANGE {
        return Ok(theta3_direct(z, q));
    }
    Ok(theta3_from_logs(Complex64::new(0.0, 0.0), z.ln(), -0.5 * q.r(), tol))
}

pub fn theta3(z: Complex64, q: &QParam, tol: &Tolerance) -> Result<EvalResult> {
    theta3_scaled(z, q, tol).map(ScaledEval::to_result)
}

fn on_negative_axis(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0
}

/// Right-hand side of Jacobi's imaginary transformation,
/// `(2π/r)^{1/2} e^{-2π²u²/r} θ₃(e^{4π²u/r}; e^{-4π²/r})` with `u = ln z / (2πi)`.
pub fn jacobi_imaginary_rhs_scaled(z: Complex64, q: &QParam, tol: &Tolerance) -> Result<ScaledEval> {
    if on_negative_axis(z) {
        return Err(Error::domain("jacobi_imaginary_rhs", format!("z = {z} lies on the cut (-inf, 0]")));
    }
    let r = q.r();
    let u = z.ln() / (2.0 * PI * I);
    let pre = Complex64::new(0.5 * (2.0 * PI / r).ln(), 0.0) - u * u * (2.0 * PI * PI / r);
    let ln_w = u * (4.0 * PI * PI / r);
    let half_ln_nome = -2.0 * PI * PI / r;
    Ok(theta3_from_logs(pre, ln_w, half_ln_nome, tol))
}

pub fn jacobi_imaginary_rhs(z: Complex64, q: &QParam, tol: &Tolerance) -> Result<EvalResult> {
    jacobi_imaginary_rhs_scaled(z, q, tol).map(ScaledEval::to_result)
}

// ---------------------------------------------------------------------------
// q → 1 asymptotics

/// Leading order of `(q;q)_∞` at `q = e^{-r}`: `(2π/r)^{1/2} e^{-π²/(6r)}`.
pub fn asym_qpoch(r: f64) -> Result<Scaled> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("r must be positive, got {r}")));
    }
    Ok(Scaled::exp(Complex64::new(0.5 * (2.0 * PI / r).ln() - PI * PI / (6.0 * r), 0.0)))
}

/// Leading order of `θ_q(z)` for `|arg z| ≤ π - ε`:
/// `i e^{-π²/(3r) - 2π²u²/r - 2π²u/r + iπu} (1 - e^{4π²u/r})`, `u = ln z / (2πi)`.
pub fn asym_theta_pos(z: Complex64, r: f64) -> Result<Scaled> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("r must be positive, got {r}")));
    }
    if z.norm() == 0.0 || z.arg().abs() > PI - ARG_MARGIN {
        return Err(Error::domain("asym_theta_pos", format!("z = {z} is outside |arg z| <= pi - eps")));
    }
    let u = z.ln() / (2.0 * PI * I);
    let pp = PI * PI;
    let e = Complex64::new(-pp / (3.0 * r), 0.0) - u * u * (2.0 * pp / r) - u * (2.0 * pp / r) + I * PI * u;
    let f = u * (4.0 * pp / r);
    // 1 - e^f, kept in scaled form when e^f is large
    let one_minus = if f.re > 0.0 {
        Scaled::exp(f) * (Complex64::new(-1.0, 0.0) + (-f).exp())
    } else {
        Scaled::from_complex(Complex64::new(1.0, 0.0) - f.exp())
    };
    Ok(Scaled::exp(e) * one_minus * I)
}

/// Leading order of `θ_q(z)` for `|arg z| ≥ ε`:
/// `e^{π²/(6r) - 2π²v²/r + iπv}`, `v = ln(-z) / (2πi)`.
pub fn asym_theta_neg(z: Complex64, r: f64) -> Result<Scaled> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("r must be positive, got {r}")));
    }
    if z.norm() == 0.0 || z.arg().abs() < ARG_MARGIN {
        return Err(Error::domain("asym_theta_neg", format!("z = {z} is outside |arg z| >= eps")));
    }
    let v = (-z).ln() / (2.0 * PI * I);
    let pp = PI * PI;
    Ok(Scaled::exp(Complex64::new(pp / (6.0 * r), 0.0) - v * v * (2.0 * pp / r) + I * PI * v))
}
