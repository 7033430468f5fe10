//! Parameterized families of holomorphic self-maps.

use crate::dsl::ast::{BinOp, Expr, Var};
use crate::dsl::eval::{eval, Bindings};
use crate::error::{Error, ParseError, Result};
use crate::scalar::{CPair, Cx, Real};
use num_complex::Complex;

/// How the parameter schedule j -> alpha_j is given.
#[derive(Debug, Clone)]
pub enum Schedule {
    /// Closed form in the index variable `j`.
    Formula(Expr),
    /// Explicit values, indexed from j = 1.
    List(Vec<(f64, f64)>),
}

#[derive(Debug, Clone)]
pub struct MapFamily<T: Real> {
    pub f: Expr,
    pub g: Expr,
    pub schedule: Schedule,
    pub param_limit: Cx<T>,
}

impl<T: Real> MapFamily<T> {
    /// Build a family, enforcing the syntactic holomorphy of both components.
    pub fn new(f: Expr, g: Expr, schedule: Schedule, param_limit: Cx<T>) -> Result<Self> {
        for (name, e) in [("f", &f), ("g", &g)] {
            if let Some(reason) = e.holomorphy_violation() {
                return Err(Error::Parse(ParseError::NonHolomorphicMapComponent {
                    component: name.into(),
                    reason,
                }));
            }
        }
        Ok(MapFamily { f, g, schedule, param_limit })
    }

    pub fn alpha(&self, j: u32) -> Result<Cx<T>> {
        match &self.schedule {
            Schedule::Formula(e) => {
                let env: Bindings<Cx<T>> = Bindings {
                    j: Some(Complex::new(T::of(j as f64), T::zero())),
                    ..Bindings::default()
                };
                eval(e, &env).map_err(Error::Eval)
            }
            Schedule::List(vs) => {
                let idx = j.checked_sub(1).map(|k| k as usize);
                match idx.and_then(|k| vs.get(k)) {
                    Some(&(re, im)) => Ok(Complex::new(T::of(re), T::of(im))),
                    None => Err(Error::Precondition(format!("schedule has no entry for j = {j}"))),
                }
            }
        }
    }

    /// Apply the j-th map to a point.
    pub fn apply(&self, j: u32, p: CPair<T>) -> Result<CPair<T>> {
        let a = self.alpha(j)?;
        let env = Bindings::at_point(p).with_param(a).with_index(j);
        let fz = eval(&self.f, &env).map_err(Error::Eval)?;
        let gz = eval(&self.g, &env).map_err(Error::Eval)?;
        Ok((fz, gz))
    }

    /// |alpha_j - limit| must decrease strictly along the window.
    pub fn validate_schedule(&self, j_min: u32, j_max: u32) -> Result<()> {
        let mut prev: Option<T> = None;
        for j in j_min..=j_max {
            let gap = (self.alpha(j)? - self.param_limit).norm();
            if let Some(p) = prev {
                if gap >= p {
                    return Err(Error::Precondition(format!(
                        "|alpha_j - limit| is not strictly decreasing at j = {j}"
                    )));
                }
            }
            prev = Some(gap);
        }
        Ok(())
    }

    /// The family conjugated by the translation x -> x - p, i.e. the same
    /// dynamics viewed in coordinates centered at `p`.
    pub fn recentered(&self, p: CPair<T>) -> Self {
        let lit = |c: Cx<T>| Expr::Lit(c.re.to_f64().unwrap(), c.im.to_f64().unwrap());
        let z_shift = Expr::bin(BinOp::Add, Expr::var(Var::Z), lit(p.0));
        let w_shift = Expr::bin(BinOp::Add, Expr::var(Var::W), lit(p.1));
        let move_in = |e: &Expr| e.subst(Var::Z, &z_shift).subst(Var::W, &w_shift);
        MapFamily {
            f: Expr::bin(BinOp::Sub, move_in(&self.f), lit(p.0)),
            g: Expr::bin(BinOp::Sub, move_in(&self.g), lit(p.1)),
            schedule: self.schedule.clone(),
            param_limit: self.param_limit,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parser::parse_expr;
    use num_complex::Complex64;

    pub fn bidisc_family() -> MapFamily<f64> {
        MapFamily::new(
            parse_expr("z").unwrap(),
            parse_expr("(w - a)/(1 - conj(a)*w)").unwrap(),
            Schedule::Formula(parse_expr("1 - 2^(-j)").unwrap()),
            Complex64::new(1.0, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn geometric_schedule_is_strictly_decreasing() {
        let fam = bidisc_family();
        assert!((fam.alpha(1).unwrap().re - 0.5).abs() < 1e-15);
        assert!((fam.alpha(12).unwrap().re - (1.0 - 2f64.powi(-12))).abs() < 1e-15);
        fam.validate_schedule(1, 12).unwrap();
    }

    #[test]
    fn non_holomorphic_component_is_rejected() {
        let err = MapFamily::<f64>::new(
            parse_expr("abs(z)").unwrap(),
            parse_expr("w").unwrap(),
            Schedule::Formula(parse_expr("1 - 2^(-j)").unwrap()),
            Complex64::new(1.0, 0.0),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::Parse(ParseError::NonHolomorphicMapComponent { .. })
        ));
    }

    #[test]
    fn recentered_family_is_a_conjugation() {
        let fam = bidisc_family();
        let p = (Complex64::new(0.0, 0.0), Complex64::new(0.0, -1.0));
        let shifted = fam.recentered(p);
        let x = (Complex64::new(0.2, 0.1), Complex64::new(0.3, 0.95));
        // T o phi o T^{-1} with T(x) = x - p
        let tx_inv = (x.0 + p.0, x.1 + p.1);
        let direct = fam.apply(5, tx_inv).unwrap();
        let want = (direct.0 - p.0, direct.1 - p.1);
        let got = shifted.apply(5, x).unwrap();
        assert!((got.0 - want.0).norm() < 1e-14);
        assert!((got.1 - want.1).norm() < 1e-14);
    }

    #[test]
    fn list_schedule_indexing() {
        let fam = MapFamily::<f64>::new(
            parse_expr("z").unwrap(),
            parse_expr("w").unwrap(),
            Schedule::List(vec![(0.5, 0.0), (0.75, 0.0)]),
            Complex64::new(1.0, 0.0),
        )
        .unwrap();
        assert_eq!(fam.alpha(2).unwrap().re, 0.75);
        assert!(fam.alpha(3).is_err());
    }
}
