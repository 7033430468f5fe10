//! Forward-mode differentiation over C^2 in Wirtinger form.
//!
//! A [`WDual`] carries a value together with the four partials
//! d/dz, d/dz̄, d/dw, d/dw̄ (each complex). Holomorphic expressions come out
//! with vanishing conjugate channels, so a single evaluation yields the exact
//! holomorphic Jacobian entry; non-holomorphic building blocks (`conj`, `re`,
//! `im`, `abs`) mix the channels by the Wirtinger chain rule, which is what
//! defining-function gradients need.

use crate::error::EvalError;
use crate::scalar::{Cx, Real};
use num_complex::Complex;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WDual<T: Real> {
    pub v: Cx<T>,
    pub dz: Cx<T>,
    pub dzb: Cx<T>,
    pub dw: Cx<T>,
    pub dwb: Cx<T>,
}

#[allow(clippy::should_implement_trait)] // inherent ops back the expression-value algebra
impl<T: Real> WDual<T> {
    pub fn constant(v: Cx<T>) -> Self {
        let z = Complex::new(T::zero(), T::zero());
        WDual { v, dz: z, dzb: z, dw: z, dwb: z }
    }

    /// Seed for the variable `z`: dz = 1, dz̄ of z is 0 (and vice versa for `zb`).
    pub fn var_z(v: Cx<T>) -> Self {
        let mut d = Self::constant(v);
        d.dz = Complex::new(T::one(), T::zero());
        d
    }

    pub fn var_w(v: Cx<T>) -> Self {
        let mut d = Self::constant(v);
        d.dw = Complex::new(T::one(), T::zero());
        d
    }

    /// `zb` as an independent seed: the conjugate channel of z.
    pub fn var_zb(v: Cx<T>) -> Self {
        let mut d = Self::constant(v);
        d.dzb = Complex::new(T::one(), T::zero());
        d
    }

    pub fn var_wb(v: Cx<T>) -> Self {
        let mut d = Self::constant(v);
        d.dwb = Complex::new(T::one(), T::zero());
        d
    }

    /// `u = Re w = (w + w̄)/2`.
    pub fn var_u(v: Cx<T>) -> Self {
        let mut d = Self::constant(v);
        let half = Complex::new(T::of(0.5), T::zero());
        d.dw = half;
        d.dwb = half;
        d
    }

    fn map2(self, rhs: Self, f: impl Fn(Cx<T>, Cx<T>) -> Cx<T>) -> Self {
        WDual {
            v: f(self.v, rhs.v),
            dz: f(self.dz, rhs.dz),
            dzb: f(self.dzb, rhs.dzb),
            dw: f(self.dw, rhs.dw),
            dwb: f(self.dwb, rhs.dwb),
        }
    }

    /// Chain rule for a holomorphic scalar function: all channels scale by f'(v).
    fn chain(self, value: Cx<T>, deriv: Cx<T>) -> Self {
        WDual {
            v: value,
            dz: deriv * self.dz,
            dzb: deriv * self.dzb,
            dw: deriv * self.dw,
            dwb: deriv * self.dwb,
        }
    }

    pub fn add(self, rhs: Self) -> Self {
        self.map2(rhs, |a, b| a + b)
    }

    pub fn sub(self, rhs: Self) -> Self {
        self.map2(rhs, |a, b| a - b)
    }

    pub fn neg(self) -> Self {
        let z = Complex::new(T::zero(), T::zero());
        self.map2(Self::constant(z), |a, _| -a)
    }

    pub fn mul(self, rhs: Self) -> Self {
        WDual {
            v: self.v * rhs.v,
            dz: self.dz * rhs.v + self.v * rhs.dz,
            dzb: self.dzb * rhs.v + self.v * rhs.dzb,
            dw: self.dw * rhs.v + self.v * rhs.dw,
            dwb: self.dwb * rhs.v + self.v * rhs.dwb,
        }
    }

    pub fn div(self, rhs: Self) -> Result<Self, EvalError> {
        if rhs.v.norm_sqr() == T::zero() {
            return Err(EvalError::DivisionByZero);
        }
        let inv = rhs.v.inv();
        let q = self.v * inv;
        Ok(WDual {
            v: q,
            dz: (self.dz - q * rhs.dz) * inv,
            dzb: (self.dzb - q * rhs.dzb) * inv,
            dw: (self.dw - q * rhs.dw) * inv,
            dwb: (self.dwb - q * rhs.dwb) * inv,
        })
    }

    /// Conjugation swaps the holomorphic and antiholomorphic channels.
    pub fn conj(self) -> Self {
        WDual {
            v: self.v.conj(),
            dz: self.dzb.conj(),
            dzb: self.dz.conj(),
            dw: self.dwb.conj(),
            dwb: self.dw.conj(),
        }
    }

    pub fn re(self) -> Self {
        let half = Self::constant(Complex::new(T::of(0.5), T::zero()));
        self.add(self.conj()).mul(half)
    }

    pub fn im(self) -> Self {
        let scale = Self::constant(Complex::new(T::zero(), T::of(-0.5)));
        self.sub(self.conj()).mul(scale)
    }

    pub fn abs(self) -> Result<Self, EvalError> {
        let m = self.mul(self.conj());
        if m.v.re == T::zero() {
            // |.| is not differentiable at 0.
            return Err(EvalError::BranchCutViolation("abs at 0"));
        }
        m.sqrt()
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }

    pub fn ln(self) -> Result<Self, EvalError> {
        if self.v.norm_sqr() == T::zero() {
            return Err(EvalError::BranchCutViolation("log of 0"));
        }
        Ok(self.chain(self.v.ln(), self.v.inv()))
    }

    pub fn sqrt(self) -> Result<Self, EvalError> {
        if self.v.norm_sqr() == T::zero() {
            return Err(EvalError::BranchCutViolation("sqrt of 0"));
        }
        let s = self.v.sqrt();
        let two = Complex::new(T::of(2.0), T::zero());
        Ok(self.chain(s, (two * s).inv()))
    }

    pub fn powi(self, n: i32) -> Result<Self, EvalError> {
        if n == 0 {
            return Ok(Self::constant(Complex::new(T::one(), T::zero())));
        }
        let negative = n < 0;
        let mut k = n.unsigned_abs();
        let mut acc = Self::constant(Complex::new(T::one(), T::zero()));
        let mut base = self;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            k >>= 1;
        }
        if negative {
            Self::constant(Complex::new(T::one(), T::zero())).div(acc)
        } else {
            Ok(acc)
        }
    }

    /// Principal-branch power with arbitrary exponent.
    pub fn pow(self, rhs: Self) -> Result<Self, EvalError> {
        if self.v.norm_sqr() == T::zero() {
            return Err(EvalError::BranchCutViolation("0 raised to a non-integer power"));
        }
        Ok(rhs.mul(self.ln()?).exp())
    }
}
