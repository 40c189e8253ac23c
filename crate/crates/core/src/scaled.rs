//! Complex numbers carried as `mantissa * exp(ln_scale)`.
//!
//! Theta products at deep lattice exponents or with `q` near one leave the
//! double range long before the kernels built from them do. Every product in
//! the kernel formulas is accumulated in this form and only collapsed to a
//! plain `Complex64` once the large factors have cancelled.

use num_complex::Complex64;
use std::ops::{Div, Mul, Neg};

const RENORM_HI: f64 = 1e120;
const RENORM_LO: f64 = 1e-120;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled {
    mant: Complex64,
    ln_scale: f64,
}

impl Scaled {
    pub const ONE: Scaled = Scaled { mant: Complex64::new(1.0, 0.0), ln_scale: 0.0 };
    pub const ZERO: Scaled = Scaled { mant: Complex64::new(0.0, 0.0), ln_scale: 0.0 };

    pub fn new(mant: Complex64, ln_scale: f64) -> Self {
        Scaled { mant, ln_scale }.renormalized()
    }

    pub fn from_complex(z: Complex64) -> Self {
        Scaled { mant: z, ln_scale: 0.0 }
    }

    pub fn from_real(x: f64) -> Self {
        Self::from_complex(Complex64::new(x, 0.0))
    }

    /// `exp(w)` without forming the exponential of the real part.
    pub fn exp(w: Complex64) -> Self {
        Scaled { mant: Complex64::from_polar(1.0, w.im), ln_scale: w.re }
    }

    pub fn mantissa(self) -> Complex64 {
        self.mant
    }

    pub fn ln_scale(self) -> f64 {
        self.ln_scale
    }

    pub fn is_zero(self) -> bool {
        self.mant.re == 0.0 && self.mant.im == 0.0
    }

    pub fn is_finite(self) -> bool {
        self.mant.re.is_finite() && self.mant.im.is_finite() && self.ln_scale.is_finite()
    }

    /// Natural log of the modulus.
    pub fn ln_abs(self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mant.norm().ln() + self.ln_scale
        }
    }

    pub fn to_complex(self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        self.mant * self.ln_scale.exp()
    }

    pub fn renormalized(self) -> Self {
        let m = self.mant.norm();
        if m == 0.0 || !m.is_finite() {
            return if m == 0.0 { Scaled::ZERO } else { self };
        }
        Scaled { mant: self.mant / m, ln_scale: self.ln_scale + m.ln() }
    }

    /// Renormalizes only when the mantissa has left the safe band.
    #[inline]
    fn tamed(self) -> Self {
        let m = self.mant.norm();
        if (RENORM_LO..=RENORM_HI).contains(&m) {
            self
        } else {
            self.renormalized()
        }
    }

    /// Cheap renormalization used inside long product loops.
    #[inline]
    pub(crate) fn mul_raw(&mut self, factor: Complex64) {
        self.mant *= factor;
        let m = self.mant.norm();
        if !(RENORM_LO..=RENORM_HI).contains(&m) && m != 0.0 {
            self.mant /= m;
            self.ln_scale += m.ln();
        }
    }

    pub fn inv(self) -> Self {
        let a = self.tamed();
        Scaled { mant: a.mant.inv(), ln_scale: -a.ln_scale }
    }

    /// Principal square root; `exp(ln_scale)` is positive so the branch is
    /// decided by the mantissa alone.
    pub fn sqrt(self) -> Self {
        Scaled { mant: self.mant.sqrt(), ln_scale: 0.5 * self.ln_scale }
    }

    pub fn powi(self, n: i32) -> Self {
        let r = self.renormalized();
        Scaled { mant: r.mant.powi(n), ln_scale: r.ln_scale * n as f64 }
    }

    pub fn scale_real(self, x: f64) -> Self {
        self * Scaled::from_real(x)
    }

    pub fn add(self, other: Scaled) -> Scaled {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let a = self.renormalized();
        let b = other.renormalized();
        let top = a.ln_scale.max(b.ln_scale);
        let m = a.mant * (a.ln_scale - top).exp() + b.mant * (b.ln_scale - top).exp();
        Scaled { mant: m, ln_scale: top }.renormalized()
    }

    pub fn sub(self, other: Scaled) -> Scaled {
        self.add(-other)
    }
}

impl Mul for Scaled {
    type Output = Scaled;
    fn mul(self, rhs: Scaled) -> Scaled {
        let (a, b) = (self.tamed(), rhs.tamed());
        Scaled { mant: a.mant * b.mant, ln_scale: a.ln_scale + b.ln_scale }.tamed()
    }
}

impl Mul<Complex64> for Scaled {
    type Output = Scaled;
    fn mul(self, rhs: Complex64) -> Scaled {
        self * Scaled::from_complex(rhs)
    }
}

impl Div for Scaled {
    type Output = Scaled;
    fn div(self, rhs: Scaled) -> Scaled {
        let (a, b) = (self.tamed(), rhs.tamed());
        Scaled { mant: a.mant / b.mant, ln_scale: a.ln_scale - b.ln_scale }.tamed()
    }
}

impl Div<Complex64> for Scaled {
    type Output = Scaled;
    fn div(self, rhs: Complex64) -> Scaled {
        self / Scaled::from_complex(rhs)
    }
}

impl Neg for Scaled {
    type Output = Scaled;
    fn neg(self) -> Scaled {
        Scaled { mant: -self.mant, ln_scale: self.ln_scale }
    }
}

impl From<Complex64> for Scaled {
    fn from(z: Complex64) -> Self {
        Scaled::from_complex(z)
    }
}
