//! Diagonal values `K(x, x) = (1/2πi) ∮ K(z, x) / (z - x) dz` by the
//! trapezoidal rule on a small circle, and the branch anchoring that keeps
//! square roots analytic along that circle.

use crate::error::{Error, Result};
use crate::qspecial::{EvalResult, QParam};
use crate::scaled::Scaled;
use num_complex::Complex64;
use std::f64::consts::TAU;

const START_NODES: usize = 64;
const MAX_NODES: usize = 4096;
const CONVERGED: f64 = 1e-10;
const ACCEPTABLE: f64 = 1e-8;
const MAX_SHRINK: usize = 8;
/// Refinements that move the mean by less than this many integrand error
/// bounds are rounding noise.
const NOISE_FACTOR: f64 = 4.0;

/// Distance from `x` to the geometric progression `base · q^ℤ`.
pub(crate) fn progression_distance(x: Complex64, base: Complex64, q: &QParam) -> f64 {
    let n0 = ((x.norm() / base.norm()).ln() / q.ln_q()).round() as i64;
    (n0 - 2..=n0 + 2).map(|n| (x - base * q.pow(n)).norm()).fold(f64::INFINITY, f64::min)
}

/// Distance from `x` to the one-sided progression `base · q^{-i}`, `i ≥ 0`.
pub(crate) fn forward_progression_distance(x: Complex64, base: Complex64, q: &QParam) -> f64 {
    let n0 = ((x.norm() / base.norm()).ln() / q.r()).round().max(0.0) as i64;
    (n0.saturating_sub(2).max(0)..=n0 + 2)
        .map(|i| (x - base * q.pow(-i)).norm())
        .fold(f64::INFINITY, f64::min)
}

/// A square root fixed at the contour centre; other points take the root
/// closest to it so the integrand stays analytic on the circle.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Anchor {
    pub radicand: Scaled,
    pub root: Scaled,
}

impl Anchor {
    pub fn new(radicand: Scaled) -> Self {
        Anchor { radicand, root: radicand.sqrt() }
    }

    /// `None` when `w` has turned too far from the anchor radicand for the
    /// continuation to be trusted.
    pub fn sqrt(&self, w: Scaled) -> Option<Scaled> {
        let ratio = (w / self.radicand).to_complex();
        if !(ratio.re > 0.2 * ratio.norm()) {
            return None;
        }
        Some(self.root * ratio.sqrt())
    }
}

/// Mean of `f` over the circle `|z - centre| = ε`, doubling the nodes until
/// successive estimates agree, either to [`CONVERGED`] or to within the
/// integrand's own error bound. `f` returns `None` when the radius must
/// shrink.
pub(crate) fn circle_mean(
    centre: Complex64,
    eps0: f64,
    mut f: impl FnMut(Complex64) -> Result<Option<EvalResult>>,
) -> Result<EvalResult> {
    let mut eps = eps0;
    'radius: for _ in 0..MAX_SHRINK {
        let node = |j: usize, n: usize| centre + Complex64::from_polar(eps, TAU * j as f64 / n as f64);
        let mut n = START_NODES;
        let mut total = Complex64::new(0.0, 0.0);
        let mut noise = 0.0f64;
        for j in 0..n {
            match f(node(j, n))? {
                Some(v) => {
                    total += v.value;
                    noise = noise.max(v.abs_error_bound);
                }
                None => {
                    eps *= 0.5;
                    continue 'radius;
                }
            }
        }
        let mut mean = total / n as f64;
        loop {
            let mut fresh = Complex64::new(0.0, 0.0);
            for j in (1..2 * n).step_by(2) {
                match f(node(j, 2 * n))? {
                    Some(v) => {
                        fresh += v.value;
                        noise = noise.max(v.abs_error_bound);
                    }
                    None => {
                        eps *= 0.5;
                        continue 'radius;
                    }
                }
            }
            total += fresh;
            n *= 2;
            let next = total / n as f64;
            let change = (next - mean).norm();
            mean = next;
            let scale = mean.norm().max(1e-300);
            if change <= CONVERGED * scale || change <= NOISE_FACTOR * noise {
                return Ok(EvalResult { value: mean, abs_error_bound: change.max(noise) });
            }
            if n >= MAX_NODES {
                if change <= ACCEPTABLE * scale {
                    return Ok(EvalResult { value: mean, abs_error_bound: change });
                }
                return Err(Error::Quadrature(format!(
                    "contour at {centre} (radius {eps:e}) changed by {change:e} at {n} nodes"
                )));
            }
        }
    }
    Err(Error::Quadrature(format!("no branch-safe contour radius around {centre}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_derivative_of_entire_function() {
        // (1/2πi)∮ (g(z) - g(x)) / (z - x)^2 dz = g'(x)
        let x = Complex64::new(0.4, -0.2);
        let g = |z: Complex64| (z * z).exp();
        let r = circle_mean(x, 0.1, |z| Ok(Some(EvalResult { value: (g(z) - g(x)) / (z - x), abs_error_bound: 0.0 }))).unwrap();
        let exact = 2.0 * x * g(x);
        assert!((r.value - exact).norm() < 1e-12);
    }

    #[test]
    fn distances_to_progressions() {
        let q = QParam::new(0.5).unwrap();
        let d = progression_distance(Complex64::new(0.3, 0.0), Complex64::new(1.0, 0.0), &q);
        assert!((d - 0.05).abs() < 1e-15);
        let d = forward_progression_distance(Complex64::new(0.3, 0.0), Complex64::new(1.0, 0.0), &q);
        assert!((d - 0.7).abs() < 1e-15);
    }

    #[test]
    fn anchor_follows_branch() {
        let a = Anchor::new(Scaled::from_complex(Complex64::new(-1.0, 1e-9)));
        let r = a.sqrt(Scaled::from_complex(Complex64::new(-1.0, -1e-3))).unwrap().to_complex();
        // continuous continuation through the cut, not the principal root
        assert!(r.im > 0.9);
        assert!(a.sqrt(Scaled::from_complex(Complex64::new(1.0, 0.0))).is_none());
    }
}
