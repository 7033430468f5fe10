//! Scalar abstraction for the numeric kernels.
//!
//! Everything downstream works over `Complex<T>` for any `T: Real`, so the
//! same code runs in `f32` or `f64`. The CLI and the report schema pin `f64`.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar the lab can compute with.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    /// Shorthand for lossless-enough conversion of literals and tolerances.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal must convert into the scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over `T`.
pub type Cx<T> = Complex<T>;

/// A point of C^2.
pub type CPair<T> = (Complex<T>, Complex<T>);

pub fn cx<T: Real>(re: f64, im: f64) -> Cx<T> {
    Complex::new(T::of(re), T::of(im))
}

pub fn c_zero<T: Real>() -> Cx<T> {
    Complex::new(T::zero(), T::zero())
}

pub fn c_one<T: Real>() -> Cx<T> {
    Complex::new(T::one(), T::zero())
}

pub fn c_i<T: Real>() -> Cx<T> {
    Complex::new(T::zero(), T::one())
}

/// Least-squares slope of `y` against equally spaced steps (distance 1).
///
/// Used by every trend test; returns 0 for fewer than two samples.
pub fn ls_slope<T: Real>(ys: &[T]) -> T {
    let n = ys.len();
    if n < 2 {
        return T::zero();
    }
    let nf = T::of(n as f64);
    let mean_x = (nf - T::one()) / T::of(2.0);
    let mean_y = ys.iter().fold(T::zero(), |s, &y| s + y) / nf;
    let mut num = T::zero();
    let mut den = T::zero();
    for (i, &y) in ys.iter().enumerate() {
        let dx = T::of(i as f64) - mean_x;
        num += dx * (y - mean_y);
        den += dx * dx;
    }
    num / den
}

/// Median of a slice (not in-place; slice is small in every call site).
pub fn median<T: Real>(xs: &[T]) -> T {
    assert!(!xs.is_empty(), "median of empty slice");
    let mut v: Vec<T> = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::of(2.0)
    }
}
