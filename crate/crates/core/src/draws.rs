//! Seeded random parameter draws.
//!
//! Every draw index gets its own ChaCha8 stream (`seed` selects the key,
//! the index selects the stream), so batches can be evaluated in any order
//! or in parallel and still reproduce bit for bit.

use crate::error::Result;
use crate::kernels::{AdmissiblePair, AdmissibleQuadruple, Branch, LatticePoint, QContext};
use crate::limits::{Line, RegimeI, RegimeII, TrigParams, TwoLinePoint};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub const DEFAULT_SEED: u64 = 0x5eed_e11f_7a11;

/// Modulus band used for generic complex draws.
pub const ANNULUS: (f64, f64) = (0.2, 5.0);

/// Relative margin kept from the endpoints of a complementary interval.
const INTERVAL_MARGIN: f64 = 0.03;

pub struct Draw {
    rng: ChaCha8Rng,
}

impl Draw {
    /// The stream for draw number `index` under `seed`.
    pub fn new(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Draw { rng }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.random::<f64>()
    }

    pub fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.uniform(lo.ln(), hi.ln()).exp()
    }

    pub fn int(&mut self, lo: i64, hi_inclusive: i64) -> i64 {
        self.rng.random_range(lo..=hi_inclusive)
    }

    pub fn coin(&mut self) -> bool {
        self.rng.random::<bool>()
    }

    /// Log-uniform modulus in `[lo, hi]`, uniform phase.
    pub fn complex_annulus(&mut self, lo: f64, hi: f64) -> Complex64 {
        let r = self.log_uniform(lo, hi);
        Complex64::from_polar(r, self.uniform(-PI, PI))
    }

    pub fn complex(&mut self) -> Complex64 {
        self.complex_annulus(ANNULUS.0, ANNULUS.1)
    }

    pub fn eta(&mut self) -> f64 {
        self.uniform(0.0, std::f64::consts::TAU)
    }

    /// `q` uniform in `[lo, hi]`, `ζ₊` and `-ζ₋` log-uniform in `[0.3, 3]`.
    pub fn context(&mut self, q_lo: f64, q_hi: f64) -> Result<QContext> {
        let q = self.uniform(q_lo, q_hi);
        let zp = self.log_uniform(0.3, 3.0);
        let zm = -self.log_uniform(0.3, 3.0);
        QContext::new(q, zp, zm)
    }

    /// `γ = ρe^{iφ}`, `δ = γ̄` with `ρ` log-uniform in `[lo, hi]` and `φ`
    /// kept away from the real axis.
    pub fn principal_pair(&mut self, ctx: &QContext, lo: f64, hi: f64) -> Result<AdmissiblePair> {
        let rho = self.log_uniform(lo, hi);
        let phi = self.uniform(0.05 * PI, 0.95 * PI) * if self.coin() { 1.0 } else { -1.0 };
        let g = Complex64::from_polar(rho, phi);
        ctx.validate_pair(g, g.conj())
    }

    /// Both parameters uniform in one complementary interval of the given
    /// branch and index.
    pub fn complementary_pair_in(&mut self, ctx: &QContext, b: Branch, n: i64) -> Result<AdmissiblePair> {
        let (lo, hi) = ctx.complementary_bounds(b, n);
        let w = hi - lo;
        let (a, c) = (lo + INTERVAL_MARGIN * w, hi - INTERVAL_MARGIN * w);
        let g = self.uniform(a, c);
        let d = self.uniform(a, c);
        ctx.validate_pair(Complex64::new(g, 0.0), Complex64::new(d, 0.0))
    }

    pub fn complementary_pair(&mut self, ctx: &QContext) -> Result<AdmissiblePair> {
        let b = if self.coin() { Branch::Plus } else { Branch::Minus };
        let n = self.int(-2, 2);
        self.complementary_pair_in(ctx, b, n)
    }

    /// Principal or complementary with equal probability.
    pub fn pair(&mut self, ctx: &QContext) -> Result<AdmissiblePair> {
        if self.coin() {
            self.principal_pair(ctx, ANNULUS.0, ANNULUS.1)
        } else {
            self.complementary_pair(ctx)
        }
    }

    /// An admissible quadruple: `(γ, δ)` from [`Draw::pair`], then `(α, β)`
    /// with `αβ` a random fraction of `q²γδ`, drawn principal or from a
    /// complementary interval lying low enough.
    pub fn quadruple(&mut self, ctx: &QContext) -> Result<AdmissibleQuadruple> {
        let gd = self.pair(ctx)?;
        let bound = ctx.q.q().powi(2) * gd.product();
        for _ in 0..64 {
            let (a, b) = if self.coin() {
                let rho = bound.sqrt() * self.uniform(0.3, 0.95);
                let phi = self.uniform(0.05 * PI, 0.95 * PI);
                let a = Complex64::from_polar(rho, phi);
                (a, a.conj())
            } else {
                let br = if self.coin() { Branch::Plus } else { Branch::Minus };
                // smallest interval index whose products all sit below the bound
                let z = ctx.zeta(br).abs();
                let n0 = ((bound * z * z).ln() / (2.0 * ctx.q.ln_q())).ceil() as i64;
                let n = n0 + self.int(0, 2);
                let p = self.complementary_pair_in(ctx, br, n)?;
                (p.gamma, p.delta)
            };
            if let Ok(quad) = ctx.validate_quadruple(a, b, gd.gamma, gd.delta) {
                return Ok(quad);
            }
        }
        let a = Complex64::from_polar(0.5 * bound.sqrt(), 0.5 * PI);
        ctx.validate_quadruple(a, a.conj(), gd.gamma, gd.delta)
    }
    pub fn branch(&mut self) -> Branch {
        if self.coin() {
            Branch::Plus
        } else {
            Branch::Minus
        }
    }

    pub fn lattice_point(&mut self, lo: i64, hi_inclusive: i64) -> LatticePoint {
        let branch = self.branch();
        LatticePoint { branch, k: self.int(lo, hi_inclusive) }
    }

    /// A tail-limit case at fixed `q`: lattice points with exponents in
    /// `-3..=3` and a quadruple from [`Draw::quadruple`].
    pub fn tail_case(&mut self, q: f64) -> Result<TailCase> {
        let ctx = self.context(q, q)?;
        let quad = self.quadruple(&ctx)?;
        let x = self.lattice_point(-3, 3);
        let y = self.lattice_point(-3, 3);
        Ok(TailCase { ctx, quad, x, y })
    }

    /// Trigonometric parameters, principal (`Re 𝔠 ∈ (0.1, 0.9)`,
    /// `|Im 𝔠| ∈ (0.1, 0.6)`) or complementary (`𝔠 ≠ 𝔡` in `(m, m+1)`,
    /// `m ∈ {-1, 0, 1}`), with equal probability.
    pub fn trig_params(&mut self) -> Result<TrigParams> {
        if self.coin() {
            let im = self.uniform(0.1, 0.6) * if self.coin() { 1.0 } else { -1.0 };
            let c = Complex64::new(self.uniform(0.1, 0.9), im);
            TrigParams::new(c, c.conj())
        } else {
            let m = self.int(-1, 1) as f64;
            let c = m + self.uniform(0.05, 0.95);
            let mut d = m + self.uniform(0.05, 0.95);
            if (c - d).abs() < 0.1 {
                d = if c < m + 0.5 { c + 0.3 } else { c - 0.3 };
            }
            TrigParams::new(Complex64::new(c, 0.0), Complex64::new(d, 0.0))
        }
    }

    /// A trigonometric-degeneration case: `𝔷± ∈ (-0.5, 0.5)`, coordinates in
    /// `(-1.5, 1.5)` on random lines, regime anchored at `q`.
    pub fn trig_case(&mut self, q: f64) -> Result<TrigCase> {
        let tp = self.trig_params()?;
        let z_minus = self.uniform(-0.5, 0.5);
        let z_plus = self.uniform(-0.5, 0.5);
        let regime = RegimeII::new(z_minus, z_plus, &tp, q)?;
        let point = |d: &mut Draw| {
            let line = if d.coin() { Line::One } else { Line::Two };
            TwoLinePoint::new(d.uniform(-1.5, 1.5), line)
        };
        let x = point(self)?;
        let y = point(self)?;
        Ok(TrigCase { regime, x, y })
    }

    /// A sine-degeneration case: `φ ∈ (0.15π, 0.85π)`, `s` and `ρ`
    /// log-uniform in `[0.5, 2]`, `ζ±` as in [`Draw::context`],
    /// `m, n ∈ -3..=3`.
    pub fn sine_case(&mut self, q: f64) -> Result<SineCase> {
        let phi = self.uniform(0.15 * PI, 0.85 * PI);
        let s = self.log_uniform(0.5, 2.0);
        let rho = self.log_uniform(0.5, 2.0);
        let ctx = self.context(q, q)?;
        let regime = RegimeI::new(phi, s, rho, ctx.zeta_plus, ctx.zeta_minus, q)?;
        let branch = self.branch();
        let m = self.int(-3, 3);
        let n = self.int(-3, 3);
        Ok(SineCase { regime, branch, m, n })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TailCase {
    pub ctx: QContext,
    pub quad: AdmissibleQuadruple,
    pub x: LatticePoint,
    pub y: LatticePoint,
}

#[derive(Clone, Copy, Debug)]
pub struct TrigCase {
    pub regime: RegimeII,
    pub x: TwoLinePoint,
    pub y: TwoLinePoint,
}

#[derive(Clone, Copy, Debug)]
pub struct SineCase {
    pub regime: RegimeI,
    pub branch: Branch,
    pub m: i64,
    pub n: i64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<f64> = (0..5).map(|_| Draw::new(7, 3).uniform(0.0, 1.0)).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        assert_ne!(Draw::new(7, 3).uniform(0.0, 1.0), Draw::new(7, 4).uniform(0.0, 1.0));
        assert_ne!(Draw::new(7, 3).uniform(0.0, 1.0), Draw::new(8, 3).uniform(0.0, 1.0));
    }

    #[test]
    fn draws_are_admissible() {
        for i in 0..200 {
            let mut d = Draw::new(DEFAULT_SEED, i);
            let ctx = d.context(0.3, 0.9).unwrap();
            let quad = d.quadruple(&ctx).unwrap();
            assert!(quad.ab.product() < ctx.q.q().powi(2) * quad.gd.product());
        }
    }
}
