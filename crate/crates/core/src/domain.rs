//! Domains of C^2 given by defining functions.
//!
//! Two presentations are supported: the local graph form `Im w > rho(z, z̄, Re w)`
//! and the implicit form `r_1 < 0, ..., r_m < 0` (several inequalities cover
//! product domains). Membership, signed defining values and boundary-point
//! projection all live here.

use crate::dsl::ast::Expr;
use crate::dsl::eval::{eval, Bindings};
use crate::error::{Error, EvalError, Result};
use crate::scalar::{CPair, Cx, Real};
use num_complex::Complex;

/// A real-valued defining function in graph form.
#[derive(Debug, Clone)]
pub struct DefiningFunction<T: Real> {
    pub expr: Expr,
    pub validity_radius: T,
    pub normalized: bool,
}

impl<T: Real> DefiningFunction<T> {
    /// Evaluate rho(z, z̄, u); the result must be real up to `imag_tol`.
    pub fn value(&self, z: Cx<T>, u: T) -> Result<T> {
        let mut env: Bindings<Cx<T>> = Bindings::at_point((z, Complex::new(u, T::zero())));
        env.u = Some(Complex::new(u, T::zero()));
        let v = eval(&self.expr, &env).map_err(Error::Eval)?;
        Ok(v.re)
    }

    /// Check realness of the expression on a sample of the trust region.
    pub fn check_real(&self, imag_tol: T) -> Result<()> {
        let r = self.validity_radius.min(T::of(1.0));
        let steps = 5;
        for iz in 0..steps {
            for jz in 0..steps {
                for ku in 0..steps {
                    let s = |k: usize| T::of(-0.9 + 1.8 * k as f64 / (steps - 1) as f64);
                    let z = Complex::new(s(iz) * r, s(jz) * r);
                    let u = s(ku) * r;
                    let mut env: Bindings<Cx<T>> = Bindings::at_point((z, Complex::new(u, T::zero())));
                    env.u = Some(Complex::new(u, T::zero()));
                    match eval(&self.expr, &env) {
                        Ok(v) => {
                            if v.im.abs() > imag_tol {
                                return Err(Error::Precondition(format!(
                                    "defining function is not real-valued: imag {} at z=({}, {}), u={}",
                                    v.im, z.re, z.im, u
                                )));
                            }
                        }
                        // singular sample points (e.g. exp(-1/|z|^2) at 0) are fine
                        Err(EvalError::DivisionByZero) | Err(EvalError::BranchCutViolation(_)) => {}
                        Err(e) => return Err(Error::Eval(e)),
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum DomainSpec<T: Real> {
    /// `Im w > rho(z, z̄, Re w)` near the origin.
    Graph { rho: DefiningFunction<T> },
    /// All constraints negative: `r_i(z, w, z̄, w̄) < 0`.
    Implicit { constraints: Vec<Expr>, radius: T },
}

impl<T: Real> DomainSpec<T> {
    pub fn trust_radius(&self) -> T {
        match self {
            DomainSpec::Graph { rho } => rho.validity_radius,
            DomainSpec::Implicit { radius, .. } => *radius,
        }
    }

    /// The largest constraint value; negative inside, zero on the boundary.
    pub fn signed_value(&self, p: CPair<T>) -> Result<T> {
        match self {
            DomainSpec::Graph { rho } => {
                let (z, w) = p;
                let v = rho.value(z, w.re)?;
                Ok(v - w.im)
            }
            DomainSpec::Implicit { constraints, .. } => {
                let env = Bindings::at_point(p);
                let mut worst = T::neg_infinity();
                for c in constraints {
                    let v = eval(c, &env).map_err(Error::Eval)?;
                    if v.re > worst {
                        worst = v.re;
                    }
                }
                Ok(worst)
            }
        }
    }

    /// Index and value of the constraint attaining `signed_value` (implicit form).
    pub fn active_constraint(&self, p: CPair<T>) -> Result<(usize, T)> {
        match self {
            DomainSpec::Graph { .. } => Ok((0, self.signed_value(p)?)),
            DomainSpec::Implicit { constraints, .. } => {
                let env = Bindings::at_point(p);
                let mut best = (0usize, T::neg_infinity());
                for (i, c) in constraints.iter().enumerate() {
                    let v = eval(c, &env).map_err(Error::Eval)?.re;
                    if v > best.1 {
                        best = (i, v);
                    }
                }
                Ok(best)
            }
        }
    }

    /// The expression of constraint `i` as a single real function (graph form
    /// is folded into `rho(z,u) - Im w`).
    pub fn constraint_expr(&self, i: usize) -> Expr {
        use crate::dsl::ast::{BinOp, UnOp, Var};
        match self {
            DomainSpec::Graph { rho } => Expr::bin(
                BinOp::Sub,
                rho.expr.clone(),
                Expr::un(UnOp::Im, Expr::var(Var::W)),
            ),
            DomainSpec::Implicit { constraints, .. } => constraints[i].clone(),
        }
    }

    pub fn is_member(&self, p: CPair<T>) -> bool {
        matches!(self.signed_value(p), Ok(v) if v < T::zero())
    }

    /// Walk from the interior anchor through `towards` and return the point
    /// where the defining value changes sign, located by bisection.
    pub fn project_to_boundary(&self, anchor: CPair<T>, towards: CPair<T>, steps: usize) -> Result<CPair<T>> {
        let va = self.signed_value(anchor)?;
        if va >= T::zero() {
            return Err(Error::Precondition("boundary projection anchor is not interior".into()));
        }
        let dir = (towards.0 - anchor.0, towards.1 - anchor.1);
        let dn = (dir.0.norm_sqr() + dir.1.norm_sqr()).sqrt();
        if dn == T::zero() {
            return Err(Error::Precondition("boundary projection direction is zero".into()));
        }
        let at = |t: T| (anchor.0 + dir.0 * t, anchor.1 + dir.1 * t);
        // march outward until the constraint flips sign
        let mut t_hi = T::one();
        let mut found = false;
        for _ in 0..64 {
            match self.signed_value(at(t_hi)) {
                Ok(v) if v >= T::zero() => {
                    found = true;
                    break;
                }
                Ok(_) => t_hi *= T::of(1.25),
                // evaluation failure outside the domain counts as an exterior hit
                Err(_) => {
                    found = true;
                    break;
                }
            }
        }
        if !found {
            return Err(Error::SolveFailure("no exterior point along the projection ray".into()));
        }
        let mut lo = T::zero();
        let mut hi = t_hi;
        for _ in 0..steps {
            let mid = (lo + hi) / T::of(2.0);
            match self.signed_value(at(mid)) {
                Ok(v) if v < T::zero() => lo = mid,
                _ => hi = mid,
            }
        }
        Ok(at((lo + hi) / T::of(2.0)))
    }
}
