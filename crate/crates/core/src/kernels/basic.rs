//! The basic hypergeometric kernel `K^{α,β,γ,δ}` built from the constant
//! `𝔠C(α, β, γ, δ)` and the functions `𝔉₀, 𝔉₁`.
//!
//! `𝔉_r` has two representations: the defining one with a single `₂φ₁` at
//! the fixed argument `βq^{r-1}/γ`, and the Heine-plus-Watson transformed
//! one, a two-term sum of `₂φ₁` at `αx`, which is the stable form as `x → 0`.

use super::contour::{circle_mean, forward_progression_distance, progression_distance, Anchor};
use super::lattice::{AdmissibleQuadruple, Branch, LatticePoint, Point, QContext};
use crate::error::{Error, Result};
use crate::qhyper::{phi21, phi21_minus_one, Phi21Params};
use crate::qspecial::{lattice_exponent, qpoch_multi_scaled, theta_multi_scaled, theta_scaled, EvalResult, Tolerance};
use crate::scaled::Scaled;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const EPS: f64 = f64::EPSILON;

fn modulus(s: Scaled) -> Scaled {
    Scaled::new(Complex64::new(s.mantissa().norm(), 0.0), s.ln_scale())
}

/// Which representation of `𝔉_r` to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FRep {
    Direct,
    Transformed,
}

#[derive(Clone, Copy, Debug)]
pub struct BasicKernel {
    ctx: QContext,
    quad: AdmissibleQuadruple,
    tol: Tolerance,
    frak_c: Complex64,
    frak_c_rel: f64,
    near_zero: Option<NearZeroPieces>,
}

/// The transformed representation regrouped as
/// `𝔉_r(x) = R(x) / ((βx, αβq^{2r-2}/(γδ); q)_∞) · Σ_o M_r^o θ(x d_o) φ_r^o(αx)`
/// over the orderings `o = (γ, δ), (δ, γ)`, `d_o` the second entry and `R`
/// the root factor. The extra `-x` of `𝔉₀` is absorbed via
/// `θ(qz) = -θ(z)/z`.
#[derive(Clone, Copy, Debug)]
struct NearZeroPieces {
    m: [[Scaled; 2]; 2],
    params: [[Phi21Params; 2]; 2],
    /// `1 / (αβq^{-2}/(γδ), αβ/(γδ); q)_∞`.
    inv_den: Scaled,
    rel: f64,
}

impl NearZeroPieces {
    fn new(quad: &AdmissibleQuadruple, ctx: &QContext, tol: &Tolerance) -> Result<Self> {
        let q = &ctx.q;
        let (a, bt, g, d) = (quad.alpha(), quad.beta(), quad.gamma(), quad.delta());
        let mut rel = 0.0;
        let mut piece = |r: u8, g: Complex64, d: Complex64| -> Result<(Scaled, Phi21Params)> {
            let qr1 = q.pow(r as i64 - 1);
            let num = qpoch_multi_scaled(&[bt * qr1 / g, a * qr1 / g], q, tol);
            let den = qpoch_multi_scaled(&[d / g], q, tol);
            let mut m = num.value / den.value;
            if r == 0 {
                m = m / d;
            }
            rel += num.rel_error_bound + den.rel_error_bound;
            Ok((m, Phi21Params::new(bt * qr1 / d, g * q.pow(2 - r as i64) / a, g * q.q() / d, *q)?))
        };
        let p = [[piece(0, g, d)?, piece(0, d, g)?], [piece(1, g, d)?, piece(1, d, g)?]];
        let qi = q.pow(-1);
        let den = qpoch_multi_scaled(&[a * bt * qi * qi / (g * d), a * bt / (g * d)], q, tol);
        Ok(NearZeroPieces {
            m: [[p[0][0].0, p[0][1].0], [p[1][0].0, p[1][1].0]],
            params: [[p[0][0].1, p[0][1].1], [p[1][0].1, p[1][1].1]],
            inv_den: den.value.inv(),
            rel: rel + den.rel_error_bound,
        })
    }
}

/// One argument's share of a near-zero kernel value.
#[derive(Clone, Copy, Debug)]
struct NearZeroSide {
    z: Complex64,
    /// Root factor over `(βz; q)_∞`.
    factor: Scaled,
    rel: f64,
    theta: [Scaled; 2],
    /// `g[r][o] = φ_r^o(αz) - 1`.
    g: [[EvalResult; 2]; 2],
}

fn frak_c_scaled(quad: &AdmissibleQuadruple, ctx: &QContext, tol: &Tolerance) -> Result<(Scaled, f64)> {
    let (a, b, g, d) = (quad.alpha(), quad.beta(), quad.gamma(), quad.delta());
    let (zp, zm) = (Complex64::new(ctx.zeta_plus, 0.0), Complex64::new(ctx.zeta_minus, 0.0));
    let q = &ctx.q;
    let qq = Complex64::new(q.q(), 0.0);
    let th_num = theta_multi_scaled(&[g * zm, g * zp, d * zm, d * zp], q, tol)?;
    let th_den = theta_multi_scaled(&[zm / zp, g * d * zm * zp], q, tol)?;
    let ab_gd = a * b / (g * d);
    let p_num = qpoch_multi_scaled(&[ab_gd, ab_gd / qq], q, tol);
    let p_den = qpoch_multi_scaled(&[a / g, a / d, b / g, b / d, qq, qq], q, tol);
    let value = th_num.value * p_num.value / (th_den.value * p_den.value * zp);
    let rel = th_num.rel_error_bound + th_den.rel_error_bound + p_num.rel_error_bound + p_den.rel_error_bound;
    Ok((value, rel))
}

/// The constant `𝔠C(α, β, γ, δ)`.
pub fn frak_c(quad: &AdmissibleQuadruple, ctx: &QContext, tol: &Tolerance) -> Result<EvalResult> {
    let (v, rel) = frak_c_scaled(quad, ctx, tol)?;
    Ok(EvalResult::from_scaled(v, rel))
}

impl BasicKernel {
    pub fn new(quad: &AdmissibleQuadruple, ctx: &QContext, tol: &Tolerance) -> Result<Self> {
        let (c, rel) = frak_c_scaled(quad, ctx, tol)?;
        let near_zero = if quad.gd.is_equal() { None } else { NearZeroPieces::new(quad, ctx, tol).ok() };
        Ok(BasicKernel { ctx: *ctx, quad: *quad, tol: *tol, frak_c: c.to_complex(), frak_c_rel: rel, near_zero })
    }

    pub fn context(&self) -> &QContext {
        &self.ctx
    }

    pub fn quadruple(&self) -> &AdmissibleQuadruple {
        &self.quad
    }

    pub fn frak_c(&self) -> Complex64 {
        self.frak_c
    }

    /// Representation chosen at `x`: the transformed one when
    /// `|x| < q³ min(|ζ₊|, |ζ₋|)` and `γ ≠ δ`.
    pub fn rep_for(&self, x: Complex64) -> FRep {
        let q3 = self.ctx.q.q().powi(3);
        let edge = q3 * self.ctx.zeta_plus.min(-self.ctx.zeta_minus);
        if x.norm() < edge && self.near_zero.is_some() {
            FRep::Transformed
        } else {
            FRep::Direct
        }
    }

    fn check_domain(&self, x: Complex64) -> Result<Branch> {
        let b = Branch::of(x).ok_or_else(|| Error::domain("basic_kernel", format!("x = {x} lies on Re x = 0")))?;
        for (name, p) in [("gamma", self.quad.gamma()), ("delta", self.quad.delta())] {
            if lattice_exponent(x * p, &self.ctx.q).is_some() {
                return Err(Error::domain("basic_kernel", format!("x = {x} lies on {name}^-1 q^Z")));
            }
        }
        Ok(b)
    }

    /// `(xα, xβ; q)_∞ / θ_q(xγ, xδ)`.
    fn radicand(&self, x: Complex64) -> Result<(Scaled, f64)> {
        let q = &self.ctx.q;
        let num = qpoch_multi_scaled(&[x * self.quad.alpha(), x * self.quad.beta()], q, &self.tol);
        let den = theta_multi_scaled(&[x * self.quad.gamma(), x * self.quad.delta()], q, &self.tol)?;
        Ok((num.value / den.value, num.rel_error_bound + den.rel_error_bound))
    }

    /// `√((xα, xβ; q)_∞ / θ_q(xγ, xδ)) · √(x sgn x)`, the factor shared by
    /// `𝔉₀` and `𝔉₁`.
    fn root_factor(&self, x: Complex64, anchor: Option<&Anchor>) -> Result<Option<(Scaled, f64)>> {
        let b = self.check_domain(x)?;
        let (rad, rad_rel) = self.radicand(x)?;
        let root = match anchor {
            Some(a) => match a.sqrt(rad) {
                Some(v) => v,
                None => return Ok(None),
            },
            None => rad.sqrt(),
        };
        Ok(Some((root * (x * b.sign()).sqrt(), rad_rel)))
    }

    /// `𝔉_r(x)` as a scaled value with a relative error bound; `None` when
    /// the anchored square root cannot be continued to `x`.
    fn f_scaled(&self, x: Complex64, r: u8, rep: FRep, anchor: Option<&Anchor>) -> Result<Option<(Scaled, f64)>> {
        if r > 1 {
            return Err(Error::InvalidParameter(format!("r_index must be 0 or 1, got {r}")));
        }
        let Some((mut pre, rad_rel)) = self.root_factor(x, anchor)? else { return Ok(None) };
        if r == 0 {
            pre = pre * (-x);
        }
        let (body, body_rel) = match rep {
            FRep::Direct => self.direct_body(x, r)?,
            FRep::Transformed => self.transformed_body(x, r)?,
        };
        Ok(Some((pre * body, rad_rel + body_rel + 8.0 * EPS)))
    }

    /// `(βq^{r-1}/γ, q^r/(δx); q)_∞ / (αβq^{2r-2}/(γδ); q)_∞ · ₂φ₁(αq^{r-1}/δ, q/(βx); q^r/(δx) | βq^{r-1}/γ)`.
    fn direct_body(&self, x: Complex64, r: u8) -> Result<(Scaled, f64)> {
        let q = &self.ctx.q;
        let (a, bt, g, d) = (self.quad.alpha(), self.quad.beta(), self.quad.gamma(), self.quad.delta());
        let qr = q.pow(r as i64);
        let qr1 = q.pow(r as i64 - 1);
        let zz = bt * qr1 / g;
        let bb = qr / (d * x);
        let num = qpoch_multi_scaled(&[zz, bb], q, &self.tol);
        let den = qpoch_multi_scaled(&[a * bt * qr1 * qr1 / (g * d)], q, &self.tol);
        let params = Phi21Params::new(a * qr1 / d, q.q() / (bt * x), bb, *q)?;
        let f = phi21(&params, zz, &self.tol)?;
        let rel = num.rel_error_bound + den.rel_error_bound + f.abs_error_bound / f.value.norm().max(1e-300);
        Ok((num.value / den.value * f.value, rel))
    }

    /// `(βx, αβq^{2r-2}/(γδ); q)_∞^{-1} [T(γ, δ) + T(δ, γ)]` with
    /// `T(γ, δ) = (βq^{r-1}/γ, αq^{r-1}/γ; q)_∞ θ(xδq^{1-r}) / (δ/γ; q)_∞ · ₂φ₁(βq^{r-1}/δ, γq^{2-r}/α; γq/δ | αx)`.
    fn transformed_body(&self, x: Complex64, r: u8) -> Result<(Scaled, f64)> {
        if self.quad.gd.is_equal() {
            return Err(Error::Degenerate("transformed representation needs gamma != delta".into()));
        }
        let q = &self.ctx.q;
        let (a, bt, g, d) = (self.quad.alpha(), self.quad.beta(), self.quad.gamma(), self.quad.delta());
        let qr1 = q.pow(r as i64 - 1);
        let q1r = q.pow(1 - r as i64);
        let q2r = q.pow(2 - r as i64);
        let den = qpoch_multi_scaled(&[bt * x, a * bt * qr1 * qr1 / (g * d)], q, &self.tol);
        let term = |g: Complex64, d: Complex64| -> Result<(Scaled, f64)> {
            let num = qpoch_multi_scaled(&[bt * qr1 / g, a * qr1 / g], q, &self.tol);
            let th = theta_scaled(x * d * q1r, q, &self.tol)?;
            let den = qpoch_multi_scaled(&[d / g], q, &self.tol);
            let params = Phi21Params::new(bt * qr1 / d, g * q2r / a, g * q.q() / d, *q)?;
            let f = phi21(&params, a * x, &self.tol)?;
            let rel = num.rel_error_bound
                + th.rel_error_bound
                + den.rel_error_bound
                + f.abs_error_bound / f.value.norm().max(1e-300);
            Ok((num.value * th.value / den.value * f.value, rel))
        };
        let (t1, r1) = term(g, d)?;
        let (t2, r2) = term(d, g)?;
        let sum = t1.add(t2);
        let mags = t1.ln_abs().max(t2.ln_abs());
        let cancel = (mags - sum.ln_abs()).exp();
        let rel = den.rel_error_bound + (r1 + r2 + 4.0 * EPS) * cancel;
        Ok((sum / den.value, rel))
    }

    /// `𝔉_r(x)` in the requested representation (principal square root).
    pub fn f(&self, x: Complex64, r: u8, rep: FRep) -> Result<EvalResult> {
        let (v, rel) = self.f_scaled(x, r, rep, None)?.expect("principal root always exists");
        Ok(EvalResult::from_scaled(v, rel))
    }

    fn offdiag(&self, x: Complex64, y: Complex64, anchor: Option<&Anchor>, rep_x: FRep) -> Result<Option<EvalResult>> {
        let rep_y = self.rep_for(y);
        if rep_x == FRep::Transformed && rep_y == FRep::Transformed {
            let Some(sx) = self.near_zero_side(x, anchor)? else { return Ok(None) };
            let sy = self.near_zero_side(y, None)?.expect("principal root");
            return self.near_zero_offdiag(&sx, &sy).map(Some);
        }
        let Some((f1x, e1x)) = self.f_scaled(x, 1, rep_x, anchor)? else { return Ok(None) };
        let Some((f0x, e0x)) = self.f_scaled(x, 0, rep_x, anchor)? else { return Ok(None) };
        let (f1y, e1y) = self.f_scaled(y, 1, rep_y, None)?.expect("principal root");
        let (f0y, e0y) = self.f_scaled(y, 0, rep_y, None)?.expect("principal root");
        let a = f1x * f0y;
        let b = f1y * f0x;
        let diff = a.sub(b).to_complex();
        let scale = self.frak_c / (x - y);
        let value = diff * scale;
        let mag = (a.to_complex().norm() + b.to_complex().norm()) * scale.norm();
        let err = mag * (e1x + e0x + e1y + e0y + 8.0 * EPS) + value.norm() * self.frak_c_rel;
        Ok(Some(EvalResult { value, abs_error_bound: err }))
    }

    /// One argument's share of the near-zero evaluation: the root factor,
    /// `θ(z d_o)`, `φ_r^o(αz) - 1` and `(βz; q)_∞`.
    fn near_zero_side(&self, z: Complex64, anchor: Option<&Anchor>) -> Result<Option<NearZeroSide>> {
        let Some(pieces) = &self.near_zero else {
            return Err(Error::Degenerate("transformed representation needs gamma != delta".into()));
        };
        let Some((root, root_rel)) = self.root_factor(z, anchor)? else { return Ok(None) };
        let q = &self.ctx.q;
        let dd = [self.quad.delta(), self.quad.gamma()];
        let mut theta = [Scaled::from_real(0.0); 2];
        let mut rel = root_rel;
        for o in 0..2 {
            let t = theta_scaled(z * dd[o], q, &self.tol)?;
            theta[o] = t.value;
            rel += t.rel_error_bound;
        }
        let mut g = [[EvalResult { value: Complex64::new(0.0, 0.0), abs_error_bound: 0.0 }; 2]; 2];
        for r in 0..2 {
            for o in 0..2 {
                g[r][o] = phi21_minus_one(&pieces.params[r][o], self.quad.alpha() * z, &self.tol)?;
            }
        }
        let poch = qpoch_multi_scaled(&[self.quad.beta() * z], q, &self.tol);
        Ok(Some(NearZeroSide {
            z,
            factor: root / poch.value,
            rel: rel + poch.rel_error_bound,
            theta,
            g,
        }))
    }

    /// `K(x, y)` with both arguments in the transformed regime. The terms of
    /// `𝔉₁(x)𝔉₀(y) - 𝔉₁(y)𝔉₀(x)` of a single ordering carry
    /// `θ(xd)θ(yd)`, which is symmetric; their bracket
    /// `φ₁(αx)φ₀(αy) - φ₁(αy)φ₀(αx)` is formed from `φ - 1` so the leading
    /// ones cancel exactly instead of in floating point.
    fn near_zero_offdiag(&self, sx: &NearZeroSide, sy: &NearZeroSide) -> Result<EvalResult> {
        let Some(pieces) = &self.near_zero else {
            return Err(Error::Degenerate("transformed representation needs gamma != delta".into()));
        };
        let m = &pieces.m;
        let one = Complex64::new(1.0, 0.0);
        let mut total = Scaled::from_real(0.0);
        let mut err = Scaled::from_real(0.0);
        let g_err: f64 = sx.g.iter().chain(sy.g.iter()).flatten().map(|e| e.abs_error_bound).sum();
        for o in 0..2 {
            let (g1x, g1y) = (sx.g[1][o].value, sy.g[1][o].value);
            let (g0x, g0y) = (sx.g[0][o].value, sy.g[0][o].value);
            let bracket = (g1x - g1y) + (g0y - g0x) + (g1x * g0y - g1y * g0x);
            let big = 1.0 + g1x.norm().max(g1y.norm()) + g0x.norm().max(g0y.norm());
            let bracket_err = g_err * big + 8.0 * EPS * (g1x.norm() + g1y.norm() + g0x.norm() + g0y.norm());
            let coef = m[1][o] * m[0][o] * sx.theta[o] * sy.theta[o];
            total = total.add(coef * bracket);
            err = err.add(modulus(coef).scale_real(bracket_err));
        }
        // cross terms θ(x d_o)θ(y d_p), o ≠ p
        for o in 0..2 {
            let p = 1 - o;
            let first = m[1][o] * m[0][p] * ((one + sx.g[1][o].value) * (one + sy.g[0][p].value));
            let second = m[1][p] * m[0][o] * ((one + sy.g[1][p].value) * (one + sx.g[0][o].value));
            let th = sx.theta[o] * sy.theta[p];
            total = total.add(th * first.sub(second));
            err = err.add(modulus(th * first).add(modulus(th * second)).scale_real(g_err + 8.0 * EPS));
        }
        let pref = sx.factor * sy.factor * pieces.inv_den;
        let scale = self.frak_c / (sx.z - sy.z);
        let value = (pref * total).to_complex() * scale;
        let rel = sx.rel + sy.rel + pieces.rel + self.frak_c_rel + 8.0 * EPS;
        let abs = (modulus(pref) * err).to_complex().re * scale.norm() + value.norm() * rel;
        Ok(EvalResult { value, abs_error_bound: abs })
    }

    fn contour_radius(&self, x: Complex64) -> f64 {
        let q = &self.ctx.q;
        let mut d = x.re.abs().min(x.norm());
        for p in [self.quad.gamma(), self.quad.delta()] {
            d = d.min(progression_distance(x, p.inv(), q));
        }
        for p in [self.quad.alpha(), self.quad.beta()] {
            d = d.min(forward_progression_distance(x, p.inv(), q));
        }
        0.5 * d
    }

    /// The diagonal `K(x, x)` as a contour integral around `x`.
    pub fn diag_contour(&self, x: Complex64) -> Result<EvalResult> {
        self.check_domain(x)?;
        let rep = self.rep_for(x);
        let (rad, _) = self.radicand(x)?;
        let anchor = Anchor::new(rad);
        if rep == FRep::Transformed {
            let centre = self.near_zero_side(x, None)?.expect("principal root");
            return circle_mean(x, self.contour_radius(x), |z| {
                if self.rep_for(z) != FRep::Transformed {
                    return self.offdiag(z, x, Some(&anchor), rep);
                }
                let Some(side) = self.near_zero_side(z, Some(&anchor))? else { return Ok(None) };
                self.near_zero_offdiag(&side, &centre).map(Some)
            });
        }
        circle_mean(x, self.contour_radius(x), |z| self.offdiag(z, x, Some(&anchor), rep))
    }

    pub fn eval_complex(&self, x: Complex64, y: Complex64) -> Result<EvalResult> {
        if x == y {
            return self.diag_contour(x);
        }
        Ok(self.offdiag(x, y, None, self.rep_for(x))?.expect("principal root"))
    }

    pub fn eval_lattice(&self, x: LatticePoint, y: LatticePoint) -> Result<EvalResult> {
        let xv = Complex64::new(self.ctx.lattice_value(x)?, 0.0);
        let yv = Complex64::new(self.ctx.lattice_value(y)?, 0.0);
        self.eval_complex(xv, yv)
    }

    pub fn eval(&self, x: impl Into<Point>, y: impl Into<Point>) -> Result<EvalResult> {
        let xv = self.ctx.value(x.into())?;
        let yv = self.ctx.value(y.into())?;
        self.eval_complex(xv, yv)
    }
}

/// `𝔉_r(x)` from its defining formula.
pub fn frak_f(x: Complex64, r_index: u8, quad: &AdmissibleQuadruple, ctx: &QContext, tol: &Tolerance) -> Result<EvalResult> {
    BasicKernel::new(quad, ctx, tol)?.f(x, r_index, FRep::Direct)
}

/// `𝔉_r(x)` from the Heine-plus-Watson transformed formula; needs `γ ≠ δ`.
pub fn frak_f_transformed(
    x: Complex64,
    r_index: u8,
    quad: &AdmissibleQuadruple,
    ctx: &QContext,
    tol: &Tolerance,
) -> Result<EvalResult> {
    BasicKernel::new(quad, ctx, tol)?.f(x, r_index, FRep::Transformed)
}

pub fn basic_kernel(
    x: impl Into<Point>,
    y: impl Into<Point>,
    quad: &AdmissibleQuadruple,
    ctx: &QContext,
    tol: &Tolerance,
) -> Result<EvalResult> {
    BasicKernel::new(quad, ctx, tol)?.eval(x, y)
}
