//! The elliptic tail kernel `K^{γ,δ}` on the two-sided q-lattice, its
//! `γ = δ` specialization, and the gauge-transformed variants `K̃` and `K̂`.

use super::contour::{circle_mean, progression_distance, Anchor};
use super::lattice::{AdmissiblePair, Branch, LatticePoint, Point, QContext};
use crate::error::{Error, Result};
use crate::qspecial::{
    lattice_exponent, qpoch_multi_scaled, theta_logderiv, theta_logderiv_prime, theta_multi_scaled, theta_scaled,
    EvalResult, Tolerance,
};
use crate::scaled::Scaled;
use num_complex::Complex64;

const EPS: f64 = f64::EPSILON;

#[derive(Clone, Copy, Debug)]
enum Mode {
    /// `C(γ, δ)` and its relative error bound.
    Generic { c: Complex64, rel: f64 },
    /// The prefactor `θ(γζ₋, γζ₊)² / (ζ₊ (q;q)⁴ θ(ζ₋/ζ₊, γ²ζ₋ζ₊))` of the `γ = δ` kernel.
    Equal { e: Complex64, rel: f64 },
}

/// An elliptic tail kernel with its constant precomputed.
#[derive(Clone, Copy, Debug)]
pub struct EllipticKernel {
    ctx: QContext,
    pair: AdmissiblePair,
    tol: Tolerance,
    mode: Mode,
}

/// `C(γ, δ)` in scaled form.
fn c_scaled(pair: &AdmissiblePair, ctx: &QContext, tol: &Tolerance) -> Result<(Scaled, f64)> {
    let (g, d) = (pair.gamma, pair.delta);
    let (zp, zm) = (Complex64::new(ctx.zeta_plus, 0.0), Complex64::new(ctx.zeta_minus, 0.0));
    let q = &ctx.q;
    let num = theta_multi_scaled(&[g * zm, g * zp, d * zm, d * zp], q, tol)?;
    let den = theta_multi_scaled(&[zm / zp, g * d * zm * zp], q, tol)?;
    let qq = Complex64::new(q.q(), 0.0);
    let poch = qpoch_multi_scaled(&[d / g, g / d, qq, qq], q, tol);
    let value = num.value * (d - g) / (den.value * poch.value * (zp * g * d));
    Ok((value, num.rel_error_bound + den.rel_error_bound + poch.rel_error_bound))
}

/// The constant `C(γ, δ)` of the elliptic tail kernel; requires `γ ≠ δ`.
pub fn c_elliptic(pair: &AdmissiblePair, ctx: &QContext, tol: &Tolerance) -> Result<EvalResult> {
    if pair.is_equal() {
        return Err(Error::Degenerate("C(gamma, delta) is singular at gamma = delta".into()));
    }
    let (c, rel) = c_scaled(pair, ctx, tol)?;
    Ok(EvalResult::from_scaled(c, rel))
}

/// `ε(ζ₊q^m) = 1`, `ε(ζ₋q^n) = (-1)^n`.
pub fn gauge_eps(p: LatticePoint) -> f64 {
    match p.branch {
        Branch::Plus => 1.0,
        Branch::Minus => parity(p.k),
    }
}

/// `ν(ζ±q^m) = (-1)^m`.
pub fn gauge_nu(p: LatticePoint) -> f64 {
    parity(p.k)
}

fn parity(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

impl EllipticKernel {
    pub fn new(pair: &AdmissiblePair, ctx: &QContext, tol: &Tolerance) -> Result<Self> {
        let mode = if pair.is_equal() {
            let g = pair.gamma;
            let (zp, zm) = (Complex64::new(ctx.zeta_plus, 0.0), Complex64::new(ctx.zeta_minus, 0.0));
            let q = &ctx.q;
            let num = theta_multi_scaled(&[g * zm, g * zp], q, tol)?;
            let den = theta_multi_scaled(&[zm / zp, g * g * zm * zp], q, tol)?;
            let qq = qpoch_multi_scaled(&[Complex64::new(q.q(), 0.0)], q, tol);
            let e = num.value * num.value / (den.value * qq.value.powi(4) * zp);
            let rel = 2.0 * num.rel_error_bound + den.rel_error_bound + 4.0 * qq.rel_error_bound;
            Mode::Equal { e: e.to_complex(), rel }
        } else {
            let (c, rel) = c_scaled(pair, ctx, tol)?;
            Mode::Generic { c: c.to_complex(), rel }
        };
        Ok(EllipticKernel { ctx: *ctx, pair: *pair, tol: *tol, mode })
    }

    pub fn context(&self) -> &QContext {
        &self.ctx
    }

    pub fn pair(&self) -> &AdmissiblePair {
        &self.pair
    }

    pub fn is_equal_mode(&self) -> bool {
        matches!(self.mode, Mode::Equal { .. })
    }

    /// `C(γ, δ)` for `γ ≠ δ`, the `γ = δ` prefactor otherwise.
    pub fn constant(&self) -> Complex64 {
        match self.mode {
            Mode::Generic { c, .. } | Mode::Equal { e: c, .. } => c,
        }
    }

    fn check_domain(&self, x: Complex64) -> Result<Branch> {
        let b = Branch::of(x).ok_or_else(|| Error::domain("elliptic_kernel", format!("x = {x} lies on Re x = 0")))?;
        for (name, p) in [("gamma", self.pair.gamma), ("delta", self.pair.delta)] {
            if lattice_exponent(x * p, &self.ctx.q).is_some() {
                return Err(Error::domain("elliptic_kernel", format!("x = {x} lies on {name}^-1 q^Z")));
            }
        }
        Ok(b)
    }

    /// `(P(x), Q(x), rel_err)`; with an anchor the square root of
    /// `θ(xγ)θ(xδ)` continues from the anchor instead of being principal.
    fn pq(&self, x: Complex64, anchor: Option<&Anchor>) -> Result<Option<(Scaled, Scaled, f64)>> {
        let b = self.check_domain(x)?;
        let q = &self.ctx.q;
        let tg = theta_scaled(x * self.pair.gamma, q, &self.tol)?;
        let td = theta_scaled(x * self.pair.delta, q, &self.tol)?;
        let radicand = tg.value * td.value;
        let root = match anchor {
            Some(a) => match a.sqrt(radicand) {
                Some(r) => r,
                None => return Ok(None),
            },
            None => radicand.sqrt(),
        };
        let s = Scaled::from_complex((x * b.sign()).sqrt()) / root;
        Ok(Some((s * td.value, s * tg.value, tg.rel_error_bound + td.rel_error_bound)))
    }

    /// `P(x)` and `Q(x)` with the principal root.
    pub fn p_q(&self, x: Complex64) -> Result<(Complex64, Complex64)> {
        let (p, q, _) = self.pq(x, None)?.expect("principal root always exists");
        Ok((p.to_complex(), q.to_complex()))
    }

    fn generic_offdiag(&self, c: Complex64, crel: f64, x: Complex64, y: Complex64, anchor: Option<&Anchor>) -> Result<Option<EvalResult>> {
        let Some((px, qx, ex)) = self.pq(x, anchor)? else { return Ok(None) };
        let (py, qy, ey) = self.pq(y, None)?.expect("principal root always exists");
        let a = px * qy;
        let b = qx * py;
        let diff = a.sub(b).to_complex();
        let scale = c.norm() / (x - y).norm();
        let value = diff * c / (x - y);
        let mag = (a.to_complex().norm() + b.to_complex().norm()) * scale;
        let err = mag * (8.0 * EPS + ex + ey) + value.norm() * crel;
        Ok(Some(EvalResult { value, abs_error_bound: err }))
    }

    /// `σ(x) = θ(xγ) / sqrt(θ(xγ)²)`.
    fn sigma(&self, x: Complex64) -> Result<Complex64> {
        let t = theta_scaled(x * self.pair.gamma, &self.ctx.q, &self.tol)?.value.mantissa();
        Ok(t / (t * t).sqrt())
    }

    fn equal_offdiag(&self, e: Complex64, erel: f64, x: Complex64, y: Complex64) -> Result<EvalResult> {
        let bx = self.check_domain(x)?;
        let by = self.check_domain(y)?;
        let g = self.pair.gamma;
        let q = &self.ctx.q;
        let root = (x * bx.sign()).sqrt() * (y * by.sign()).sqrt();
        let lx = x * theta_logderiv(x * g, q)?;
        let ly = y * theta_logderiv(y * g, q)?;
        let sig = self.sigma(x)? * self.sigma(y)?;
        let value = e * root / (x - y) * sig * (ly - lx);
        let err = (e * root / (x - y)).norm() * (lx.norm() + ly.norm()) * 8.0 * EPS + value.norm() * erel;
        Ok(EvalResult { value, abs_error_bound: err })
    }

    /// Closed diagonal value on the analytic domain: `±C x {δL(xδ) - γL(xγ)}`
    /// for `x ∈ 𝒟±`, `L = θ'/θ`; for `γ = δ` the L'Hôpital limit of the
    /// equal-parameter formula.
    pub fn diag_closed(&self, x: Complex64) -> Result<EvalResult> {
        let b = self.check_domain(x)?;
        let q = &self.ctx.q;
        let (g, d) = (self.pair.gamma, self.pair.delta);
        match self.mode {
            Mode::Generic { c, rel } => {
                let ld = d * theta_logderiv(x * d, q)?;
                let lg = g * theta_logderiv(x * g, q)?;
                let value = c * x * b.sign() * (ld - lg);
                let err = (c * x).norm() * (ld.norm() + lg.norm()) * 8.0 * EPS + value.norm() * rel;
                Ok(EvalResult { value, abs_error_bound: err })
            }
            Mode::Equal { e, rel } => {
                let w = x * g;
                let l = theta_logderiv(w, q)?;
                let lp = theta_logderiv_prime(w, q)?;
                let value = -e * x * b.sign() * (l + w * lp);
                let err = (e * x).norm() * (l.norm() + (w * lp).norm()) * 8.0 * EPS + value.norm() * rel;
                Ok(EvalResult { value, abs_error_bound: err })
            }
        }
    }

    /// Contour radius for the diagonal at `x`: half the distance to the
    /// singular locus, capped at `|x|/2`.
    fn contour_radius(&self, x: Complex64) -> f64 {
        let q = &self.ctx.q;
        let dg = progression_distance(x, self.pair.gamma.inv(), q);
        let dd = progression_distance(x, self.pair.delta.inv(), q);
        0.5 * dg.min(dd).min(x.re.abs()).min(x.norm())
    }

    /// The diagonal `K(x, x)` as the contour integral of `K(z, x)/(z - x)`.
    pub fn diag_contour(&self, x: Complex64) -> Result<EvalResult> {
        self.check_domain(x)?;
        let Mode::Generic { c, rel } = self.mode else {
            return self.diag_closed(x);
        };
        let tg = theta_scaled(x * self.pair.gamma, &self.ctx.q, &self.tol)?;
        let td = theta_scaled(x * self.pair.delta, &self.ctx.q, &self.tol)?;
        let anchor = Anchor::new(tg.value * td.value);
        let r = circle_mean(x, self.contour_radius(x), |z| {
            self.generic_offdiag(c, rel, z, x, Some(&anchor))
        })?;
        Ok(r)
    }

    /// Kernel value at two points of the analytic domain; coincident
    /// arguments go through the contour integral (or the closed form when
    /// `γ = δ`).
    pub fn eval_complex(&self, x: Complex64, y: Complex64) -> Result<EvalResult> {
        if x == y {
            return self.diag_contour(x);
        }
        match self.mode {
            Mode::Generic { c, rel } => Ok(self.generic_offdiag(c, rel, x, y, None)?.expect("principal root")),
            Mode::Equal { e, rel } => self.equal_offdiag(e, rel, x, y),
        }
    }

    /// Kernel value at two lattice points; the diagonal uses the closed
    /// logarithmic-derivative formula, which depends only on the branch.
    pub fn eval_lattice(&self, x: LatticePoint, y: LatticePoint) -> Result<EvalResult> {
        if x == y {
            let z = Complex64::new(self.ctx.zeta(x.branch), 0.0);
            return self.diag_closed(z);
        }
        let xv = Complex64::new(self.ctx.lattice_value(x)?, 0.0);
        let yv = Complex64::new(self.ctx.lattice_value(y)?, 0.0);
        self.eval_complex(xv, yv)
    }

    pub fn eval(&self, x: impl Into<Point>, y: impl Into<Point>) -> Result<EvalResult> {
        match (x.into(), y.into()) {
            (Point::Lattice(a), Point::Lattice(b)) => self.eval_lattice(a, b),
            (a, b) => self.eval_complex(self.ctx.value(a)?, self.ctx.value(b)?),
        }
    }

    /// `K̃(x, y) = ε(x)ε(y) K(x, y)`.
    pub fn tilde(&self, x: LatticePoint, y: LatticePoint) -> Result<EvalResult> {
        let k = self.eval_lattice(x, y)?;
        let s = gauge_eps(x) * gauge_eps(y);
        Ok(EvalResult { value: k.value * s, abs_error_bound: k.abs_error_bound })
    }

    /// The particle-hole transformed kernel `K̂` built from `𝐊 = ν(x)ν(y)K`.
    pub fn hat(&self, x: LatticePoint, y: LatticePoint) -> Result<EvalResult> {
        let k = self.eval_lattice(x, y)?;
        let bold = k.value * (gauge_nu(x) * gauge_nu(y));
        let value = match (x.branch, y.branch) {
            (Branch::Plus, Branch::Plus) => {
                let delta = if x == y { 1.0 } else { 0.0 };
                Complex64::new(delta, 0.0) - bold
            }
            (Branch::Minus, Branch::Plus) => -bold,
            (_, Branch::Minus) => bold,
        };
        Ok(EvalResult { value, abs_error_bound: k.abs_error_bound })
    }
}

pub fn elliptic_kernel(
    x: impl Into<Point>,
    y: impl Into<Point>,
    pair: &AdmissiblePair,
    ctx: &QContext,
    tol: &Tolerance,
) -> Result<EvalResult> {
    EllipticKernel::new(pair, ctx, tol)?.eval(x, y)
}

/// The `γ = δ` kernel; `gamma` must be a real complementary-series value.
pub fn elliptic_kernel_equal(
    x: impl Into<Point>,
    y: impl Into<Point>,
    gamma: f64,
    ctx: &QContext,
    tol: &Tolerance,
) -> Result<EvalResult> {
    let g = Complex64::new(gamma, 0.0);
    let pair = ctx.validate_pair(g, g)?;
    EllipticKernel::new(&pair, ctx, tol)?.eval(x, y)
}

pub fn tilde_kernel(x: LatticePoint, y: LatticePoint, pair: &AdmissiblePair, ctx: &QContext, tol: &Tolerance) -> Result<EvalResult> {
    EllipticKernel::new(pair, ctx, tol)?.tilde(x, y)
}

pub fn hat_kernel(x: LatticePoint, y: LatticePoint, pair: &AdmissiblePair, ctx: &QContext, tol: &Tolerance) -> Result<EvalResult> {
    EllipticKernel::new(pair, ctx, tol)?.hat(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn setup() -> (QContext, AdmissiblePair, Tolerance) {
        let ctx = QContext::new(0.5, 1.3, -0.7).unwrap();
        let pair = ctx.validate_pair(c(0.8, 0.6), c(0.8, -0.6)).unwrap();
        (ctx, pair, Tolerance::default())
    }

    #[test]
    fn constant_matches_theta_form() {
        // (δ-γ)/(γδ(δ/γ, γ/δ; q)) = 1/(γ θ(δ/γ))
        let (ctx, pair, tol) = setup();
        let cc = c_elliptic(&pair, &ctx, &tol).unwrap().value;
        let (g, d) = (pair.gamma, pair.delta);
        let (zp, zm) = (c(ctx.zeta_plus, 0.0), c(ctx.zeta_minus, 0.0));
        let q = &ctx.q;
        let num = theta_multi_scaled(&[g * zm, g * zp, d * zm, d * zp], q, &tol).unwrap().value;
        let den = theta_multi_scaled(&[zm / zp, g * d * zm * zp, d / g], q, &tol).unwrap().value;
        let qq = crate::qspecial::qpoch_inf(c(q.q(), 0.0), q, &tol).value;
        let alt = (num / den).to_complex() / (zp * g * qq * qq);
        assert!((cc - alt).norm() < 1e-13 * cc.norm());
        // conjugate parameters give the conjugate constant
        let cj = c_elliptic(&pair.swapped(), &ctx, &tol).unwrap().value;
        assert!((cj - cc.conj()).norm() < 1e-13 * cc.norm());
    }

    #[test]
    fn symmetric_and_real_on_lattice() {
        let (ctx, pair, tol) = setup();
        let k = EllipticKernel::new(&pair, &ctx, &tol).unwrap();
        let pts = [LatticePoint::plus(0), LatticePoint::plus(3), LatticePoint::minus(-1), LatticePoint::minus(2)];
        for &x in &pts {
            for &y in &pts {
                let a = k.eval(x, y).unwrap().value;
                let b = k.eval(y, x).unwrap().value;
                assert!((a - b).norm() < 1e-12 * a.norm().max(1e-3));
                assert!(a.im.abs() < 1e-12);
            }
        }
        let d = k.eval(LatticePoint::plus(0), LatticePoint::plus(0)).unwrap().value.re;
        assert!(0.0 < d && d < 1.0);
    }

    #[test]
    fn contour_matches_closed_diagonal() {
        let (ctx, pair, tol) = setup();
        let k = EllipticKernel::new(&pair, &ctx, &tol).unwrap();
        for x in [c(1.3, 0.0), c(-0.7 * 0.25, 0.0), c(0.4, 0.35), c(-2.0, -0.5)] {
            let a = k.diag_contour(x).unwrap().value;
            let b = k.diag_closed(x).unwrap().value;
            assert!((a - b).norm() < 1e-10 * b.norm().max(1.0), "{x}: {a} vs {b}");
        }
    }

    #[test]
    fn diagonal_is_limit_of_off_diagonal() {
        // Richardson extrapolation of K(x, x + h) in h
        let (ctx, pair, tol) = setup();
        let k = EllipticKernel::new(&pair, &ctx, &tol).unwrap();
        let x = c(1.3, 0.0);
        let f = |h: f64| k.eval_complex(x, x + h).unwrap().value;
        let h = 1e-3;
        let rich = (4.0 * (f(h / 2.0) + f(-h / 2.0)) / 2.0 - (f(h) + f(-h)) / 2.0) / 3.0;
        let d = k.eval(LatticePoint::plus(0), LatticePoint::plus(0)).unwrap().value;
        assert!((rich - d).norm() < 1e-9);
    }

    #[test]
    fn equal_parameters_are_the_limit_of_generic() {
        let ctx = QContext::new(0.5, 1.3, -0.7).unwrap();
        let tol = Tolerance::default();
        let g = 0.6;
        let eq = EllipticKernel::new(&ctx.validate_pair(c(g, 0.0), c(g, 0.0)).unwrap(), &ctx, &tol).unwrap();
        let near = ctx.validate_pair(c(g, 0.0), c(g * (1.0 + 1e-6), 0.0)).unwrap();
        let gen = EllipticKernel::new(&near, &ctx, &tol).unwrap();
        let pts = [LatticePoint::plus(0), LatticePoint::plus(2), LatticePoint::minus(1), LatticePoint::minus(-3)];
        for &x in &pts {
            for &y in &pts {
                let a = eq.eval(x, y).unwrap().value;
                let b = gen.eval(x, y).unwrap().value;
                assert!((a - b).norm() < 1e-4, "{x} {y}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn gauge_and_translation_invariance() {
        let (ctx, pair, tol) = setup();
        let k = EllipticKernel::new(&pair, &ctx, &tol).unwrap();
        assert_eq!(gauge_eps(LatticePoint::plus(5)), 1.0);
        assert_eq!(gauge_eps(LatticePoint::minus(3)), -1.0);
        assert_eq!(gauge_eps(LatticePoint::minus(0)), 1.0);
        for (x, y) in [(LatticePoint::plus(1), LatticePoint::minus(4)), (LatticePoint::minus(-2), LatticePoint::minus(3))] {
            let a = k.tilde(x, y).unwrap().value;
            let b = k.tilde(x.shift(1), y.shift(1)).unwrap().value;
            assert!((a - b).norm() < 1e-11);
        }
        let x = LatticePoint::plus(2);
        let h = k.hat(x, x).unwrap().value;
        let kk = k.eval(x, x).unwrap().value;
        assert!((h - (1.0 - kk)).norm() < 1e-15);
    }

    #[test]
    fn singular_points_are_rejected() {
        let (ctx, pair, tol) = setup();
        let k = EllipticKernel::new(&pair, &ctx, &tol).unwrap();
        assert!(k.eval(c(0.0, 1.0), c(1.0, 0.0)).is_err());
        assert!(k.eval(pair.gamma.inv(), c(1.0, 0.0)).is_err());
        assert!(k.eval(pair.delta.inv() * 0.25, c(1.0, 0.0)).is_err());
    }
}
