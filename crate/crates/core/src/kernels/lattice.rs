//! The two-sided q-lattice `ζ₋q^ℤ ⊔ ζ₊q^ℤ` and admissible parameters.

use crate::error::{Error, Result};
use crate::qspecial::QParam;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Largest `|k·ln q|` accepted for a lattice exponent; keeps `q^k` well
/// inside the double range.
pub const MAX_LATTICE_LOG: f64 = 650.0;
/// Relative tolerance under which `γ` and `δ` are treated as equal.
pub const EQUAL_PARAM_TOL: f64 = 1e-12;
const REALNESS_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    pub fn of(x: Complex64) -> Option<Branch> {
        if x.re > 0.0 {
            Some(Branch::Plus)
        } else if x.re < 0.0 {
            Some(Branch::Minus)
        } else {
            None
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Plus => "+",
            Branch::Minus => "-",
        })
    }
}

/// The lattice data `q`, `ζ₊ > 0 > ζ₋`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QContext {
    pub q: QParam,
    pub zeta_plus: f64,
    pub zeta_minus: f64,
}

/// The point `ζ_branch · q^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint {
    pub branch: Branch,
    pub k: i64,
}

impl LatticePoint {
    pub fn plus(k: i64) -> Self {
        LatticePoint { branch: Branch::Plus, k }
    }

    pub fn minus(k: i64) -> Self {
        LatticePoint { branch: Branch::Minus, k }
    }

    /// Multiplication by `q^d`.
    pub fn shift(self, d: i64) -> Self {
        LatticePoint { k: self.k + d, ..self }
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.branch, self.k)
    }
}

/// A kernel argument: a lattice point, or any point of the analytic domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Point {
    Lattice(LatticePoint),
    Free(Complex64),
}

impl From<LatticePoint> for Point {
    fn from(p: LatticePoint) -> Self {
        Point::Lattice(p)
    }
}

impl From<Complex64> for Point {
    fn from(z: Complex64) -> Self {
        Point::Free(z)
    }
}

impl QContext {
    pub fn new(q: f64, zeta_plus: f64, zeta_minus: f64) -> Result<Self> {
        let q = QParam::new(q)?;
        if !(zeta_plus > 0.0 && zeta_plus.is_finite()) {
            return Err(Error::InvalidParameter(format!("zeta_plus must be positive, got {zeta_plus}")));
        }
        if !(zeta_minus < 0.0 && zeta_minus.is_finite()) {
            return Err(Error::InvalidParameter(format!("zeta_minus must be negative, got {zeta_minus}")));
        }
        Ok(QContext { q, zeta_plus, zeta_minus })
    }

    pub fn zeta(&self, b: Branch) -> f64 {
        match b {
            Branch::Plus => self.zeta_plus,
            Branch::Minus => self.zeta_minus,
        }
    }

    pub fn lattice_value(&self, p: LatticePoint) -> Result<f64> {
        let expo = p.k as f64 * self.q.r();
        if expo.abs() > MAX_LATTICE_LOG {
            return Err(Error::InvalidParameter(format!(
                "lattice exponent {} exceeds the supported range |k ln q| <= {MAX_LATTICE_LOG}",
                p.k
            )));
        }
        let z = self.zeta(p.branch);
        Ok(z.signum() * (z.abs().ln() - expo).exp())
    }

    pub fn value(&self, p: Point) -> Result<Complex64> {
        match p {
            Point::Lattice(l) => Ok(Complex64::new(self.lattice_value(l)?, 0.0)),
            Point::Free(z) => Ok(z),
        }
    }

    /// For real `x ≠ 0`, the complementary-series interval containing it:
    /// `(ζ₊^{-1}q^{n+1}, ζ₊^{-1}q^n)` reported as `(Plus, n)` for `x > 0`,
    /// `(ζ₋^{-1}q^m, ζ₋^{-1}q^{m+1})` reported as `(Minus, m)` for `x < 0`.
    /// `None` on an interval endpoint.
    pub fn complementary_interval(&self, x: f64) -> Option<(Branch, i64)> {
        let (b, scaled) = if x > 0.0 {
            (Branch::Plus, x * self.zeta_plus)
        } else if x < 0.0 {
            (Branch::Minus, x * self.zeta_minus)
        } else {
            return None;
        };
        let t = scaled.ln() / self.q.ln_q();
        let n = t.floor();
        if (t - t.round()).abs() < 1e-12 {
            return None;
        }
        Some((b, n as i64))
    }

    /// Endpoints (ordered) of a complementary-series interval.
    pub fn complementary_bounds(&self, b: Branch, n: i64) -> (f64, f64) {
        let z = self.zeta(b);
        let a = self.q.pow(n) / z;
        let c = self.q.pow(n + 1) / z;
        (a.min(c), a.max(c))
    }

    pub fn validate_pair(&self, gamma: Complex64, delta: Complex64) -> Result<AdmissiblePair> {
        let scale = gamma.norm().max(delta.norm());
        if !(scale.is_finite()) || gamma.norm() == 0.0 || delta.norm() == 0.0 {
            return Err(Error::NotAdmissible(format!("pair ({gamma}, {delta}) must be finite and nonzero")));
        }
        let g_real = gamma.im.abs() <= REALNESS_TOL * gamma.norm();
        let d_real = delta.im.abs() <= REALNESS_TOL * delta.norm();
        if !g_real || !d_real {
            if g_real || d_real {
                return Err(Error::NotAdmissible(format!(
                    "principal series needs both parameters nonreal; got ({gamma}, {delta})"
                )));
            }
            if (delta - gamma.conj()).norm() > 1e-13 * scale {
                return Err(Error::NotAdmissible(format!(
                    "principal series needs delta = conj(gamma); got ({gamma}, {delta})"
                )));
            }
            return Ok(AdmissiblePair { gamma, delta: gamma.conj(), series: Series::Principal });
        }
        let (g, d) = (gamma.re, delta.re);
        let ig = self.complementary_interval(g);
        let id = self.complementary_interval(d);
        match (ig, id) {
            (Some(a), Some(b)) if a == b => {
                Ok(AdmissiblePair { gamma: Complex64::new(g, 0.0), delta: Complex64::new(d, 0.0), series: Series::Complementary })
            }
            (None, _) | (_, None) => Err(Error::NotAdmissible(format!(
                "complementary series: ({g}, {d}) touches an interval endpoint zeta^-1 q^n"
            ))),
            (Some(a), Some(b)) => Err(Error::NotAdmissible(format!(
                "complementary series: gamma = {g} lies in interval {}{} but delta = {d} lies in {}{}",
                a.0, a.1, b.0, b.1
            ))),
        }
    }

    pub fn validate_quadruple(
        &self,
        alpha: Complex64,
        beta: Complex64,
        gamma: Complex64,
        delta: Complex64,
    ) -> Result<AdmissibleQuadruple> {
        let ab = self
            .validate_pair(alpha, beta)
            .map_err(|e| Error::NotAdmissible(format!("(alpha, beta): {e}")))?;
        let gd = self
            .validate_pair(gamma, delta)
            .map_err(|e| Error::NotAdmissible(format!("(gamma, delta): {e}")))?;
        let lhs = ab.product();
        let rhs = self.q.q() * self.q.q() * gd.product();
        if !(lhs < rhs) {
            return Err(Error::NotAdmissible(format!(
                "alpha*beta = {lhs} must be below q^2*gamma*delta = {rhs}"
            )));
        }
        Ok(AdmissibleQuadruple { ab, gd })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Series {
    Principal,
    Complementary,
}

/// A validated admissible pair; `γδ` is real and positive for every such pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissiblePair {
    pub gamma: Complex64,
    pub delta: Complex64,
    pub series: Series,
}

impl AdmissiblePair {
    /// `γδ` as a real number.
    pub fn product(&self) -> f64 {
        (self.gamma * self.delta).re
    }

    pub fn is_equal(&self) -> bool {
        (self.gamma - self.delta).norm() < EQUAL_PARAM_TOL * self.gamma.norm()
    }

    pub fn conj(&self) -> AdmissiblePair {
        AdmissiblePair { gamma: self.gamma.conj(), delta: self.delta.conj(), series: self.series }
    }

    pub fn swapped(&self) -> AdmissiblePair {
        AdmissiblePair { gamma: self.delta, delta: self.gamma, series: self.series }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleQuadruple {
    pub ab: AdmissiblePair,
    pub gd: AdmissiblePair,
}

impl AdmissibleQuadruple {
    pub fn alpha(&self) -> Complex64 {
        self.ab.gamma
    }
    pub fn beta(&self) -> Complex64 {
        self.ab.delta
    }
    pub fn gamma(&self) -> Complex64 {
        self.gd.gamma
    }
    pub fn delta(&self) -> Complex64 {
        self.gd.delta
    }
}

/// The JSON parameter object `{q, zeta_plus, zeta_minus, alpha?, beta?, gamma, delta}`
/// with complex numbers written as `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub q: f64,
    pub zeta_plus: f64,
    pub zeta_minus: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Complex64>,
    pub gamma: Complex64,
    pub delta: Complex64,
}

impl ParamSet {
    pub fn from_pair(ctx: &QContext, pair: &AdmissiblePair) -> Self {
        ParamSet {
            q: ctx.q.q(),
            zeta_plus: ctx.zeta_plus,
            zeta_minus: ctx.zeta_minus,
            alpha: None,
            beta: None,
            gamma: pair.gamma,
            delta: pair.delta,
        }
    }

    pub fn from_quadruple(ctx: &QContext, quad: &AdmissibleQuadruple) -> Self {
        ParamSet { alpha: Some(quad.alpha()), beta: Some(quad.beta()), ..Self::from_pair(ctx, &quad.gd) }
    }

    pub fn context(&self) -> Result<QContext> {
        QContext::new(self.q, self.zeta_plus, self.zeta_minus)
    }

    pub fn pair(&self) -> Result<(QContext, AdmissiblePair)> {
        let ctx = self.context()?;
        let pair = ctx.validate_pair(self.gamma, self.delta)?;
        Ok((ctx, pair))
    }

    pub fn quadruple(&self) -> Result<(QContext, AdmissibleQuadruple)> {
        let ctx = self.context()?;
        let (Some(a), Some(b)) = (self.alpha, self.beta) else {
            return Err(Error::InvalidParameter("alpha and beta are required for the basic kernel".into()));
        };
        let quad = ctx.validate_quadruple(a, b, self.gamma, self.delta)?;
        Ok((ctx, quad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pair_classification() {
        let ctx = QContext::new(0.5, 1.0, -1.0).unwrap();
        let p = ctx.validate_pair(c(1.0, 1.0), c(1.0, -1.0)).unwrap();
        assert_eq!(p.series, Series::Principal);
        // (ζ₊^{-1} q, ζ₊^{-1}) = (0.5, 1)
        let p = ctx.validate_pair(c(0.7, 0.0), c(0.7, 0.0)).unwrap();
        assert_eq!(p.series, Series::Complementary);
        assert!(p.is_equal());
        // 1 is an endpoint and 2 lies in (1, 2)'s closure boundary; no interval holds both
        assert!(ctx.validate_pair(c(1.0, 0.0), c(2.0, 0.0)).is_err());
        assert!(ctx.validate_pair(c(0.6, 0.0), c(1.5, 0.0)).is_err());
        assert!(ctx.validate_pair(c(0.6, 0.0), c(-0.6, 0.0)).is_err());
        assert!(ctx.validate_pair(c(1.0, 1.0), c(1.0, -1.1)).is_err());
        assert!(ctx.validate_pair(c(-0.6, 0.0), c(-0.9, 0.0)).is_ok());
    }

    #[test]
    fn interval_enumeration_agrees_with_bounds() {
        let ctx = QContext::new(0.3, 2.5, -0.4).unwrap();
        for &x in &[0.01, 0.37, 1.9, 40.0, -0.02, -3.3, -170.0] {
            let (b, n) = ctx.complementary_interval(x).unwrap();
            let (lo, hi) = ctx.complementary_bounds(b, n);
            assert!(lo < x && x < hi, "{x} not in ({lo}, {hi})");
        }
    }

    #[test]
    fn quadruple_ordering_condition() {
        let ctx = QContext::new(0.5, 1.0, -1.0).unwrap();
        let g = c(1.0, 1.0);
        assert!(ctx.validate_quadruple(c(0.2, 0.1), c(0.2, -0.1), g, g.conj()).is_ok());
        assert!(ctx.validate_quadruple(c(1.0, 0.5), c(1.0, -0.5), g, g.conj()).is_err());
    }

    #[test]
    fn lattice_values_and_limits() {
        let ctx = QContext::new(0.5, 2.0, -3.0).unwrap();
        assert_eq!(ctx.lattice_value(LatticePoint::plus(0)).unwrap(), 2.0);
        assert!((ctx.lattice_value(LatticePoint::minus(2)).unwrap() + 0.75).abs() < 1e-15);
        assert!(ctx.lattice_value(LatticePoint::plus(2000)).is_err());
        assert_eq!(LatticePoint::minus(3).shift(2), LatticePoint::minus(5));
    }

    #[test]
    fn param_set_round_trip() {
        let ctx = QContext::new(0.5, 1.0, -1.0).unwrap();
        let quad = ctx.validate_quadruple(c(0.2, 0.1), c(0.2, -0.1), c(1.0, 1.0), c(1.0, -1.0)).unwrap();
        let ps = ParamSet::from_quadruple(&ctx, &quad);
        let text = serde_json::to_string(&ps).unwrap();
        assert!(text.contains("\"gamma\":[1.0,1.0]"));
        let back: ParamSet = serde_json::from_str(&text).unwrap();
        assert_eq!(back, ps);
        let (_, q2) = back.quadruple().unwrap();
        assert_eq!(q2, quad);
    }
}
