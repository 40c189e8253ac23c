//! The basic hypergeometric function `₂φ₁(a₁, a₂; b | z)`: the defining series
//! on the unit disk, meromorphic continuation through the three-term
//! q-difference equation, and the right-hand sides of Heine's and Watson's
//! transformation formulas.

use crate::error::{Error, Result};
use crate::qspecial::{lattice_exponent, qpoch_multi_scaled, theta_scaled, EvalResult, QParam, Tolerance};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Radius inside which the series is summed directly.
pub const CONTINUATION_RADIUS: f64 = 0.75;
/// Relative radius around each pole `q^{-k}` inside which continuation refuses.
pub const POLE_EXCLUSION: f64 = 1e-6;
const CONDITIONING_FLOOR: f64 = 1e-10;
const MAX_TERMS: usize = 500_000;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phi21Params {
    pub a1: Complex64,
    pub a2: Complex64,
    pub b: Complex64,
    pub q: QParam,
}

impl Phi21Params {
    pub fn new(a1: Complex64, a2: Complex64, b: Complex64, q: QParam) -> Result<Self> {
        if let Some(k) = lattice_exponent(b, &q) {
            if k <= 0 {
                return Err(Error::pole("phi21", format!("b = {b} lies in q^(-N)")));
            }
        }
        Ok(Phi21Params { a1, a2, b, q })
    }
}

/// Sums `Σ_n t_n` where `t_n / t_{n-1} = factor(n)` until the geometric tail
/// estimate `|t_n| ρ / (1 - ρ)` is negligible. `ratio_bound(n)` must bound
/// `|factor(m)|` for every `m > n` once it is below one.
fn sum_ratio_series(
    leading: Complex64,
    mut factor: impl FnMut(usize) -> Complex64,
    mut ratio_bound: impl FnMut(usize) -> f64,
    tol: &Tolerance,
    func: &'static str,
) -> Result<EvalResult> {
    let mut term = ONE;
    let mut sum = leading;
    let mut abs_sum = leading.norm();
    let mut n = 1usize;
    loop {
        term *= factor(n);
        sum += term;
        abs_sum += term.norm();
        if !sum.re.is_finite() || !sum.im.is_finite() {
            return Err(Error::NoConvergence(format!("{func}: series overflow")));
        }
        let rho = ratio_bound(n);
        if rho < 1.0 {
            let tail = term.norm() * rho / (1.0 - rho);
            if tail <= tol.rel_tol * 1e-3 * sum.norm() || tail <= tol.abs_tol || term.norm() == 0.0 {
                // rounding grows with the largest partial sums
                let rounding = 4.0 * f64::EPSILON * abs_sum;
                return Ok(EvalResult { value: sum, abs_error_bound: tail + rounding });
            }
        }
        n += 1;
        if n > MAX_TERMS {
            return Err(Error::NoConvergence(format!("{func}: {MAX_TERMS} terms")));
        }
    }
}

/// The series `1 + Σ_{n≥1} z^n ∏_{i=1}^n (1-a₁q^{i-1})(1-a₂q^{i-1}) / ((1-bq^{i-1})(1-q^i))`.
pub fn phi21_series(p: &Phi21Params, z: Complex64, tol: &Tolerance) -> Result<EvalResult> {
    phi21_sum(p, z, ONE, tol)
}

/// `₂φ₁(a₁, a₂; b | z) - 1`, accurate relative to its own size for small
/// `z` (the series without its leading term).
pub fn phi21_minus_one(p: &Phi21Params, z: Complex64, tol: &Tolerance) -> Result<EvalResult> {
    if z.norm() < CONTINUATION_RADIUS {
        return phi21_sum(p, z, Complex64::new(0.0, 0.0), tol);
    }
    let f = phi21(p, z, tol)?;
    Ok(EvalResult { value: f.value - ONE, abs_error_bound: f.abs_error_bound + f64::EPSILON })
}

fn phi21_sum(p: &Phi21Params, z: Complex64, leading: Complex64, tol: &Tolerance) -> Result<EvalResult> {
    if z.norm() >= 1.0 {
        return Err(Error::domain("phi21_series", format!("|z| = {} >= 1", z.norm())));
    }
    let q = p.q.q();
    let (a1, a2, b) = (p.a1, p.a2, p.b);
    let (m1, m2, mb) = (a1.norm(), a2.norm(), b.norm());
    let zn = z.norm();
    sum_ratio_series(
        leading,
        |n| {
            let t = q.powi(n as i32 - 1);
            (ONE - a1 * t) * (ONE - a2 * t) / ((ONE - b * t) * (1.0 - t * q)) * z
        },
        |n| {
            let t = q.powi(n as i32);
            if mb * t >= 0.5 {
                return f64::INFINITY;
            }
            zn * (1.0 + m1 * t) * (1.0 + m2 * t) / ((1.0 - mb * t) * (1.0 - t * q))
        },
        tol,
        "phi21_series",
    )
}

/// `₂φ₁(a₁, a₂; b | z)` on its full domain of meromorphy. Outside the disk of
/// radius [`CONTINUATION_RADIUS`] the value is rebuilt from two series values
/// at `q^K z, q^{K+1} z` by solving the q-difference equation
/// `(b - a₁a₂qz)F(q²z) + (-b - q + (a₁+a₂)qz)F(qz) + q(1-z)F(z) = 0` for `F(z)`.
pub fn phi21(p: &Phi21Params, z: Complex64, tol: &Tolerance) -> Result<EvalResult> {
    if z.norm() < CONTINUATION_RADIUS {
        return phi21_series(p, z, tol);
    }
    let q = p.q.q();
    let k = ((CONTINUATION_RADIUS / z.norm()).ln() / q.ln()).floor() as i32 + 1;
    for j in 0..k {
        let w = z * q.powi(j);
        if (w - ONE).norm() < POLE_EXCLUSION {
            return Err(Error::pole("phi21", format!("z = {z} is within the exclusion radius of q^-{j}")));
        }
    }
    let mut f2 = phi21_series(p, z * q.powi(k + 1), tol)?; // F(q^{j+2} z)
    let mut f1 = phi21_series(p, z * q.powi(k), tol)?; // F(q^{j+1} z)
    let (a1, a2, b) = (p.a1, p.a2, p.b);
    for j in (0..k).rev() {
        let w = z * q.powi(j);
        let c2 = b - a1 * a2 * q * w;
        let c1 = -b - q + (a1 + a2) * q * w;
        let c0 = (ONE - w) * q;
        if c0.norm() < CONDITIONING_FLOOR {
            return Err(Error::Conditioning(format!("phi21: recursion coefficient q(1-z) = {c0} at z = {w}")));
        }
        let value = -(c2 * f2.value + c1 * f1.value) / c0;
        let propagated = (c2.norm() * f2.abs_error_bound + c1.norm() * f1.abs_error_bound) / c0.norm();
        let rounding = 4.0 * f64::EPSILON * (c2.norm() * f2.value.norm() + c1.norm() * f1.value.norm()) / c0.norm();
        f2 = f1;
        f1 = EvalResult { value, abs_error_bound: propagated + rounding };
    }
    Ok(f1)
}

/// Heine's transformation right-hand side
/// `(B, Az; q)_∞ / (C, z; q)_∞ · ₂φ₁(C/B, z; Az | B)` for `₂φ₁(A, B; C | z)`.
///
/// The inner series is summed with term ratio
/// `(B - Cq^{i-1})(1 - zq^{i-1}) / ((1 - Azq^{i-1})(1 - q^i))`, which stays
/// finite at `B = 0`.
pub fn heine_rhs(p: &Phi21Params, z: Complex64, tol: &Tolerance) -> Result<EvalResult> {
    let (a, b, c) = (p.a1, p.a2, p.b);
    let q = &p.q;
    let den = qpoch_multi_scaled(&[c, z], q, tol);
    if den.value.is_zero() {
        return Err(Error::pole("heine_rhs", format!("(C, z; q) vanishes at C = {c}, z = {z}")));
    }
    let num = qpoch_multi_scaled(&[b, a * z], q, tol);
    let inner = if b.norm() < CONTINUATION_RADIUS {
        let qq = q.q();
        let (mb, mc, mz, maz) = (b.norm(), c.norm(), z.norm(), (a * z).norm());
        sum_ratio_series(
            ONE,
            |n| {
                let t = qq.powi(n as i32 - 1);
                (b - c * t) * (ONE - z * t) / ((ONE - a * z * t) * (1.0 - t * qq))
            },
            |n| {
                let t = qq.powi(n as i32);
                if maz * t >= 0.5 {
                    return f64::INFINITY;
                }
                (mb + mc * t) * (1.0 + mz * t) / ((1.0 - maz * t) * (1.0 - t * qq))
            },
            tol,
            "heine_rhs",
        )?
    } else {
        let inner = Phi21Params::new(c / b, z, a * z, *q)?;
        phi21(&inner, b, tol)?
    };
    let pre = (num.value / den.value).to_complex();
    let value = pre * inner.value;
    let rel = num.rel_error_bound + den.rel_error_bound;
    Ok(EvalResult { value, abs_error_bound: pre.norm() * inner.abs_error_bound + value.norm() * rel })
}

/// One term of Watson's formula:
/// `(B, C/A; q)_∞ θ_q(Az) / ((C, B/A; q)_∞ θ_q(z)) · ₂φ₁(A, Aq/C; Aq/B | Cq/(ABz))`.
fn watson_term(a: Complex64, b: Complex64, c: Complex64, z: Complex64, q: &QParam, tol: &Tolerance) -> Result<EvalResult> {
    let qq = q.q();
    let num = qpoch_multi_scaled(&[b, c / a], q, tol);
    let den = qpoch_multi_scaled(&[c, b / a], q, tol);
    let th_num = theta_scaled(a * z, q, tol)?;
    let th_den = theta_scaled(z, q, tol)?;
    if den.value.is_zero() || th_den.value.is_zero() {
        return Err(Error::pole("watson_rhs", format!("vanishing denominator at z = {z}")));
    }
    let inner = Phi21Params::new(a, a * qq / c, a * qq / b, *q)?;
    let f = phi21(&inner, c * qq / (a * b * z), tol)?;
    let pre = (num.value * th_num.value / (den.value * th_den.value)).to_complex();
    let rel = num.rel_error_bound + den.rel_error_bound + th_num.rel_error_bound + th_den.rel_error_bound;
    let value = pre * f.value;
    Ok(EvalResult { value, abs_error_bound: pre.norm() * f.abs_error_bound + value.norm() * rel })
}

/// The two terms of Watson's continuation formula for `₂φ₁(A, B; C | z)`,
/// with the right-hand functions evaluated at `Cq/(ABz)`. Near the poles of
/// the inner functions both terms can be much larger than their sum.
pub fn watson_terms(p: &Phi21Params, z: Complex64, tol: &Tolerance) -> Result<(EvalResult, EvalResult)> {
    let (a, b, c) = (p.a1, p.a2, p.b);
    if z.norm() == 0.0 {
        return Err(Error::domain("watson_rhs", "z = 0"));
    }
    if a.norm() == 0.0 || b.norm() == 0.0 || c.norm() == 0.0 {
        return Err(Error::domain("watson_rhs", "A, B and C must be nonzero"));
    }
    if lattice_exponent(a / b, &p.q).is_some() {
        return Err(Error::Degenerate(format!("watson_rhs: A/B = {} lies in q^Z", a / b)));
    }
    Ok((watson_term(a, b, c, z, &p.q, tol)?, watson_term(b, a, c, z, &p.q, tol)?))
}

/// Watson's two-term continuation formula for `₂φ₁(A, B; C | z)`.
pub fn watson_rhs(p: &Phi21Params, z: Complex64, tol: &Tolerance) -> Result<EvalResult> {
    let (t1, t2) = watson_terms(p, z, tol)?;
    Ok(EvalResult { value: t1.value + t2.value, abs_error_bound: t1.abs_error_bound + t2.abs_error_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qspecial::qpoch_inf;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
    }

    fn params(q: f64) -> Phi21Params {
        Phi21Params::new(c(0.3, 0.4), c(-1.2, 0.7), c(0.45, -0.2), QParam::new(q).unwrap()).unwrap()
    }

    #[test]
    fn series_trivial_cases() {
        let tol = Tolerance::default();
        let p = params(0.5);
        assert_eq!(phi21_series(&p, c(0.0, 0.0), &tol).unwrap().value, c(1.0, 0.0));
        let p1 = Phi21Params { a1: c(1.0, 0.0), ..p };
        assert_eq!(phi21_series(&p1, c(0.6, -0.3), &tol).unwrap().value, c(1.0, 0.0));
        assert!(phi21_series(&p, c(1.0, 0.0), &tol).is_err());
        assert!(Phi21Params::new(p.a1, p.a2, c(4.0, 0.0), QParam::new(0.5).unwrap()).is_err());
    }

    #[test]
    fn q_binomial_theorem() {
        // ₂φ₁(a, b; b | z) = (az; q)_∞ / (z; q)_∞, compared with a plain
        // 300-term partial sum of the defining series
        let q = QParam::new(0.6).unwrap();
        let tol = Tolerance::default();
        let (a, b) = (c(0.7, -0.9), c(-0.4, 0.25));
        for z in [c(0.3, 0.2), c(-0.8, 0.1), c(0.05, -0.9)] {
            let p = Phi21Params::new(a, b, b, q).unwrap();
            let lhs = phi21_series(&p, z, &tol).unwrap().value;
            let rhs = qpoch_inf(a * z, &q, &tol).value / qpoch_inf(z, &q, &tol).value;
            assert!(rel(lhs, rhs) < 1e-10, "{z}");
            let mut t = c(1.0, 0.0);
            let mut s = t;
            for n in 1..300 {
                t *= (ONE - a * q.pow(n - 1)) / (1.0 - q.pow(n)) * z;
                s += t;
            }
            assert!(rel(lhs, s) < 1e-12);
        }
    }

    #[test]
    fn continuation_matches_series_inside_disk() {
        let q = QParam::new(0.55).unwrap();
        let tol = Tolerance::default();
        let p = Phi21Params::new(c(0.3, 0.4), c(-1.2, 0.7), c(0.45, -0.2), q).unwrap();
        let z = c(0.5, 0.0);
        assert_eq!(phi21(&p, z, &tol).unwrap().value, phi21_series(&p, z, &tol).unwrap().value);
        // same function computed across the radius: the recursion from inside
        let z = c(0.74, 0.05);
        let direct = phi21_series(&p, z, &tol).unwrap().value;
        let f1 = phi21_series(&p, z * q.q(), &tol).unwrap().value;
        let f2 = phi21_series(&p, z * q.q() * q.q(), &tol).unwrap().value;
        let rebuilt = -((p.b - p.a1 * p.a2 * q.q() * z) * f2 + (-p.b - q.q() + (p.a1 + p.a2) * q.q() * z) * f1)
            / ((ONE - z) * q.q());
        assert!(rel(direct, rebuilt) < 1e-12);
    }

    #[test]
    fn continuation_matches_heine_outside_disk() {
        // with |B| < 1 Heine's right side converges for every z
        let q = QParam::new(0.5).unwrap();
        let tol = Tolerance::default();
        let p = Phi21Params::new(c(0.6, -0.3), c(0.2, 0.35), c(-0.7, 0.1), q).unwrap();
        for z in [c(1.5, 0.5), c(-3.0, 1.0), c(5.0, -6.0), c(0.2, 1.3)] {
            let cont = phi21(&p, z, &tol).unwrap();
            let heine = heine_rhs(&p, z, &tol).unwrap();
            assert!(rel(cont.value, heine.value) < 1e-10, "{z}: {} vs {}", cont.value, heine.value);
        }
        assert!(phi21(&p, c(2.0 * (1.0 + 1e-8), 0.0), &tol).is_err());
    }

    #[test]
    fn entire_after_pole_removal() {
        // (b, z; q)_∞ ₂φ₁ is continuous across the pole at z = 1
        let q = QParam::new(0.5).unwrap();
        let tol = Tolerance::default();
        let p = Phi21Params::new(c(0.6, -0.3), c(0.2, 0.35), c(-0.7, 0.1), q).unwrap();
        let g = |z: Complex64| qpoch_inf(z, &q, &tol).value * phi21(&p, z, &tol).unwrap().value;
        let n = 16;
        let vals: Vec<_> = (0..n)
            .map(|j| g(ONE + Complex64::from_polar(1e-3, std::f64::consts::TAU * j as f64 / n as f64)))
            .collect();
        let centre = vals.iter().sum::<Complex64>() / n as f64;
        for v in &vals {
            assert!((v - centre).norm() < 1e-2 * centre.norm().max(1e-3));
        }
    }

    #[test]
    fn heine_degenerate_and_trivial() {
        let q = QParam::new(0.45).unwrap();
        let tol = Tolerance::default();
        let p = Phi21Params::new(c(0.3, 0.1), c(0.0, 0.0), c(0.2, -0.5), q).unwrap();
        let z = c(0.4, 0.3);
        assert!(rel(heine_rhs(&p, z, &tol).unwrap().value, phi21(&p, z, &tol).unwrap().value) < 1e-13);
        let p = params(0.45);
        assert!(rel(heine_rhs(&p, c(0.0, 0.0), &tol).unwrap().value, c(1.0, 0.0)) < 1e-15);
    }

    #[test]
    fn watson_matches_continuation() {
        let q = QParam::new(0.5).unwrap();
        let tol = Tolerance::default();
        let p = Phi21Params::new(c(0.6, -0.3), c(0.2, 0.35), c(-0.7, 0.1), q).unwrap();
        for z in [c(0.3, 0.2), c(1.5, 0.5), c(-3.0, 1.0)] {
            let w = watson_rhs(&p, z, &tol).unwrap().value;
            let d = phi21(&p, z, &tol).unwrap().value;
            assert!(rel(w, d) < 1e-9, "{z}: {w} vs {d}");
        }
        let same = Phi21Params { a2: p.a1, ..p };
        assert!(matches!(watson_rhs(&same, c(0.3, 0.1), &tol), Err(Error::Degenerate(_))));
        assert!(watson_rhs(&p, c(0.0, 0.0), &tol).is_err());
    }

    #[test]
    fn minus_one_variant_keeps_relative_accuracy() {
        let p = params(0.6);
        for z in [c(0.3, -0.2), c(1e-9, 2e-9), c(0.9, 0.4)] {
            let full = phi21(&p, z, &Tolerance::default()).unwrap().value - 1.0;
            let m1 = phi21_minus_one(&p, z, &Tolerance::default()).unwrap();
            let tol = if z.norm() < 1e-6 { 1e-6 } else { 1e-12 };
            assert!(rel(full, m1.value) < tol, "{z}: {full} vs {}", m1.value);
        }
        // the leading term of the series fixes the small-z value to full precision
        let z = c(1e-12, 0.0);
        let lead = (1.0 - p.a1) * (1.0 - p.a2) / ((1.0 - p.b) * (1.0 - p.q.q())) * z;
        assert!(rel(phi21_minus_one(&p, z, &Tolerance::default()).unwrap().value, lead) < 1e-10);
    }
}
