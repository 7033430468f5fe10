//! Expression evaluation, generic over the value algebra.
//!
//! One evaluator serves plain complex arithmetic and Wirtinger forward-mode
//! differentiation; the value type decides which.

use super::ast::{BinOp, Expr, UnOp, Var};
use crate::error::EvalError;
use crate::scalar::{CPair, Cx, Real};
use crate::wirtinger::WDual;
use num_complex::Complex;

/// Value algebra the evaluator can run over.
pub trait ExprValue: Copy {
    type Scalar: Real;

    fn lit(re: f64, im: f64) -> Self;
    fn add(self, rhs: Self) -> Self;
    fn sub(self, rhs: Self) -> Self;
    fn mul(self, rhs: Self) -> Self;
    fn neg(self) -> Self;
    fn div(self, rhs: Self) -> Result<Self, EvalError>;
    fn conj(self) -> Self;
    fn re(self) -> Self;
    fn im(self) -> Self;
    fn abs(self) -> Result<Self, EvalError>;
    fn exp(self) -> Self;
    fn ln(self) -> Result<Self, EvalError>;
    fn sqrt(self) -> Result<Self, EvalError>;
    fn powi(self, n: i32) -> Result<Self, EvalError>;
    fn pow(self, rhs: Self) -> Result<Self, EvalError>;
    /// Some(n) when the value is a constant integer (used to route `^`).
    fn as_const_integer(&self) -> Option<i32>;
    fn is_finite(&self) -> bool;
}

impl<T: Real> ExprValue for Cx<T> {
    type Scalar = T;

    fn lit(re: f64, im: f64) -> Self {
        Complex::new(T::of(re), T::of(im))
    }
    fn add(self, rhs: Self) -> Self {
        self + rhs
    }
    fn sub(self, rhs: Self) -> Self {
        self - rhs
    }
    fn mul(self, rhs: Self) -> Self {
        self * rhs
    }
    fn neg(self) -> Self {
        -self
    }
    fn div(self, rhs: Self) -> Result<Self, EvalError> {
        if rhs.norm_sqr() == T::zero() {
            return Err(EvalError::DivisionByZero);
        }
        Ok(self / rhs)
    }
    fn conj(self) -> Self {
        Complex::conj(&self)
    }
    fn re(self) -> Self {
        Complex::new(self.re, T::zero())
    }
    fn im(self) -> Self {
        Complex::new(self.im, T::zero())
    }
    fn abs(self) -> Result<Self, EvalError> {
        Ok(Complex::new(self.norm(), T::zero()))
    }
    fn exp(self) -> Self {
        Complex::exp(self)
    }
    fn ln(self) -> Result<Self, EvalError> {
        if self.norm_sqr() == T::zero() {
            return Err(EvalError::BranchCutViolation("log of 0"));
        }
        Ok(Complex::ln(self))
    }
    fn sqrt(self) -> Result<Self, EvalError> {
        if self.norm_sqr() == T::zero() {
            return Err(EvalError::BranchCutViolation("sqrt of 0"));
        }
        Ok(Complex::sqrt(self))
    }
    fn powi(self, n: i32) -> Result<Self, EvalError> {
        if n == 0 {
            return Ok(Complex::new(T::one(), T::zero()));
        }
        let mut acc = Complex::new(T::one(), T::zero());
        let mut base = self;
        let mut k = n.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                acc *= base;
            }
            base *= base;
            k >>= 1;
        }
        if n < 0 {
            Complex::new(T::one(), T::zero()).div(acc)
        } else {
            Ok(acc)
        }
    }
    fn pow(self, rhs: Self) -> Result<Self, EvalError> {
        if self.norm_sqr() == T::zero() {
            return Err(EvalError::BranchCutViolation("0 raised to a non-integer power"));
        }
        Ok((rhs * Complex::ln(self)).exp())
    }
    fn as_const_integer(&self) -> Option<i32> {
        if self.im != T::zero() {
            return None;
        }
        let r = self.re;
        if r.fract() != T::zero() || r.abs() > T::of(1e6) {
            return None;
        }
        r.to_f64().map(|x| x as i32)
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl<T: Real> ExprValue for WDual<T> {
    type Scalar = T;

    fn lit(re: f64, im: f64) -> Self {
        WDual::constant(Complex::new(T::of(re), T::of(im)))
    }
    fn add(self, rhs: Self) -> Self {
        WDual::add(self, rhs)
    }
    fn sub(self, rhs: Self) -> Self {
        WDual::sub(self, rhs)
    }
    fn mul(self, rhs: Self) -> Self {
        WDual::mul(self, rhs)
    }
    fn neg(self) -> Self {
        WDual::neg(self)
    }
    fn div(self, rhs: Self) -> Result<Self, EvalError> {
        WDual::div(self, rhs)
    }
    fn conj(self) -> Self {
        WDual::conj(self)
    }
    fn re(self) -> Self {
        WDual::re(self)
    }
    fn im(self) -> Self {
        WDual::im(self)
    }
    fn abs(self) -> Result<Self, EvalError> {
        WDual::abs(self)
    }
    fn exp(self) -> Self {
        WDual::exp(self)
    }
    fn ln(self) -> Result<Self, EvalError> {
        WDual::ln(self)
    }
    fn sqrt(self) -> Result<Self, EvalError> {
        WDual::sqrt(self)
    }
    fn powi(self, n: i32) -> Result<Self, EvalError> {
        WDual::powi(self, n)
    }
    fn pow(self, rhs: Self) -> Result<Self, EvalError> {
        WDual::pow(self, rhs)
    }
    fn as_const_integer(&self) -> Option<i32> {
        let zero = Complex::new(T::zero(), T::zero());
        if self.dz != zero || self.dzb != zero || self.dw != zero || self.dwb != zero {
            return None;
        }
        self.v.as_const_integer()
    }
    fn is_finite(&self) -> bool {
        self.v.is_finite() && self.dz.is_finite() && self.dzb.is_finite() && self.dw.is_finite() && self.dwb.is_finite()
    }
}

/// Variable bindings. Conjugated coordinates and `u` are derived
/// automatically when a binding is built from a point.
#[derive(Debug, Clone, Copy)]
pub struct Bindings<V> {
    pub z: Option<V>,
    pub w: Option<V>,
    pub u: Option<V>,
    pub zb: Option<V>,
    pub wb: Option<V>,
    pub a: Option<V>,
    pub j: Option<V>,
}

impl<V: ExprValue> Default for Bindings<V> {
    fn default() -> Self {
        Bindings { z: None, w: None, u: None, zb: None, wb: None, a: None, j: None }
    }
}

impl<V: ExprValue> Bindings<V> {
    pub fn get(&self, v: Var) -> Result<V, EvalError> {
        match v {
            Var::Z => self.z,
            Var::W => self.w,
            Var::U => self.u,
            Var::Zb => self.zb,
            Var::Wb => self.wb,
            Var::A => self.a,
            Var::J => self.j,
        }
        .ok_or(EvalError::UnboundIdentifier(v.name()))
    }
}

impl<T: Real> Bindings<Cx<T>> {
    /// Bind all coordinate variables from a point of C^2.
    pub fn at_point(p: CPair<T>) -> Self {
        let (z, w) = p;
        Bindings {
            z: Some(z),
            w: Some(w),
            u: Some(Complex::new(w.re, T::zero())),
            zb: Some(z.conj()),
            wb: Some(w.conj()),
            a: None,
            j: None,
        }
    }

    pub fn with_param(mut self, a: Cx<T>) -> Self {
        self.a = Some(a);
        self
    }

    pub fn with_index(mut self, j: u32) -> Self {
        self.j = Some(Complex::new(T::of(j as f64), T::zero()));
        self
    }
}

impl<T: Real> Bindings<WDual<T>> {
    /// Seeded coordinate bindings for Wirtinger differentiation at a point.
    pub fn seeded_at(p: CPair<T>, a: Option<Cx<T>>, j: Option<u32>) -> Self {
        let (z, w) = p;
        Bindings {
            z: Some(WDual::var_z(z)),
            w: Some(WDual::var_w(w)),
            u: Some(WDual::var_u(Complex::new(w.re, T::zero()))),
            zb: Some(WDual::var_zb(z.conj())),
            wb: Some(WDual::var_wb(w.conj())),
            a: a.map(WDual::constant),
            j: j.map(|j| WDual::constant(Complex::new(T::of(j as f64), T::zero()))),
        }
    }
}

/// Evaluate an expression under the given bindings.
pub fn eval<V: ExprValue>(e: &Expr, env: &Bindings<V>) -> Result<V, EvalError> {
    let v = eval_inner(e, env)?;
    if !v.is_finite() {
        return Err(EvalError::NonFinite);
    }
    Ok(v)
}

fn eval_inner<V: ExprValue>(e: &Expr, env: &Bindings<V>) -> Result<V, EvalError> {
    match e {
        Expr::Lit(re, im) => Ok(V::lit(*re, *im)),
        Expr::Var(v) => env.get(*v),
        Expr::Un(op, inner) => {
            let x = eval_inner(inner, env)?;
            match op {
                UnOp::Re => Ok(x.re()),
                UnOp::Im => Ok(x.im()),
                UnOp::Abs => x.abs(),
                UnOp::Conj => Ok(x.conj()),
                UnOp::Exp => Ok(x.exp()),
                UnOp::Log => x.ln(),
                UnOp::Sqrt => x.sqrt(),
                UnOp::Neg => Ok(x.neg()),
            }
        }
        Expr::Bin(op, a, b) => {
            let x = eval_inner(a, env)?;
            let y = eval_inner(b, env)?;
            match op {
                BinOp::Add => Ok(x.add(y)),
                BinOp::Sub => Ok(x.sub(y)),
                BinOp::Mul => Ok(x.mul(y)),
                BinOp::Div => x.div(y),
                BinOp::Pow => match y.as_const_integer() {
                    Some(n) => x.powi(n),
                    None => x.pow(y),
                },
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parser::parse_expr;
    use num_complex::Complex64;

    fn eval_at(src: &str, z: Complex64, w: Complex64, a: Option<Complex64>) -> Complex64 {
        let e = parse_expr(src).unwrap();
        let mut env = Bindings::at_point((z, w));
        env.a = a;
        eval(&e, &env).unwrap()
    }

    #[test]
    fn product_example() {
        let v = eval_at("z*w", Complex64::new(2.0, 0.0), Complex64::new(0.0, 3.0), None);
        assert!((v - Complex64::new(0.0, 6.0)).norm() < 1e-15);
    }

    #[test]
    fn moebius_at_zero() {
        let v = eval_at(
            "(w - a)/(1 - conj(a)*w)",
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Some(Complex64::new(0.5, 0.0)),
        );
        assert!((v - Complex64::new(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn flat_exponential_example() {
        let v = eval_at("exp(-1/abs(z)^2)", Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0), None);
        assert!((v.re - (-4.0f64).exp()).abs() < 1e-15);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn integer_power_of_zero_is_fine_but_fractional_is_not() {
        let sq = eval_at("z^2", Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), None);
        assert_eq!(sq, Complex64::new(0.0, 0.0));
        let e = parse_expr("z^0.5").unwrap();
        let env = Bindings::at_point((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)));
        assert!(matches!(eval(&e, &env), Err(EvalError::BranchCutViolation(_))));
    }

    #[test]
    fn division_by_zero_reported() {
        let e = parse_expr("1/(z - 1)").unwrap();
        let env = Bindings::at_point((Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)));
        assert!(matches!(eval(&e, &env), Err(EvalError::DivisionByZero)));
    }

    #[test]
    fn log_and_sqrt_of_zero_hit_the_branch_cut() {
        let env = Bindings::at_point((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)));
        for src in ["log(z)", "sqrt(z)"] {
            let e = parse_expr(src).unwrap();
            assert!(
                matches!(eval(&e, &env), Err(EvalError::BranchCutViolation(_))),
                "{src} at 0 must flag the branch cut"
            );
        }
    }

    #[test]
    fn principal_branch_for_fractional_power() {
        // (-1)^(1/4) on the principal branch = exp(i pi/4)
        let v = eval_at("(z)^(1/4)", Complex64::new(-1.0, 0.0), Complex64::new(0.0, 0.0), None);
        let want = Complex64::new(0.0, std::f64::consts::FRAC_PI_4).exp();
        assert!((v - want).norm() < 1e-15);
    }
}
