//! Renormalized map sequences and the model fibered domains.
//!
//! Frankel mode recenters at the base-point image and normalizes by the
//! inverse Jacobian there; the variety mode normalizes by the unit left
//! eigenvector frame scaled with the vanishing eigenvalue. The sup of
//! ||(J phi_j(q))^-1 J phi_j(p)|| over a compact grid decides whether the
//! rescaled family stays normal.

use crate::dsl::ast::Expr;
use crate::dsl::eval::{eval, Bindings};
use crate::dsl::Tolerances;
use crate::error::{Error, Result};
use crate::family::MapFamily;
use crate::grid::PolydiscGrid;
use crate::holo_diff::{eigenpair, jacobian, op_norm, Jacobian2};
use crate::scalar::{ls_slope, median, CPair, Cx, Real};
use num_complex::Complex;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    Frankel,
    VarietyEigen,
}

/// One renormalized map of the sequence.
#[derive(Debug, Clone)]
pub struct ScalingStep<T: Real> {
    pub j: u32,
    pub mode: StepMode,
    pub normalizer: Jacobian2<T>,
    pub anchor: CPair<T>,
    family: MapFamily<T>,
}

impl<T: Real> ScalingStep<T> {
    /// Evaluate the scaled map at a point.
    pub fn apply(&self, p: CPair<T>) -> Result<CPair<T>> {
        let img = self.family.apply(self.j, p)?;
        let shifted = (img.0 - self.anchor.0, img.1 - self.anchor.1);
        Ok(self.normalizer.apply(shifted))
    }
}

/// A_j = (J phi_j(q))^-1 (phi_j(.) - phi_j(q)).
pub fn frankel_scale<T: Real>(
    family: &MapFamily<T>,
    q: CPair<T>,
    j: u32,
    tol: &Tolerances<T>,
) -> Result<ScalingStep<T>> {
    let jac = jacobian(family, j, q)?;
    let normalizer = jac.inv(tol.det_degenerate)?;
    let anchor = family.apply(j, q)?;
    Ok(ScalingStep { j, mode: StepMode::Frankel, normalizer, anchor, family: family.clone() })
}

/// Unit left eigenvector (row) of a 2x2 matrix for the given eigenvalue,
/// with the phase fixed so the largest-modulus component is real positive.
pub fn left_eigenvector<T: Real>(jac: &Jacobian2<T>, lambda: Cx<T>) -> CPair<T> {
    let cand1 = (jac.a21, lambda - jac.a11);
    let cand2 = (lambda - jac.a22, jac.a12);
    let n1 = (cand1.0.norm_sqr() + cand1.1.norm_sqr()).sqrt();
    let n2 = (cand2.0.norm_sqr() + cand2.1.norm_sqr()).sqrt();
    let (mut v, n) = if n1 >= n2 { (cand1, n1) } else { (cand2, n2) };
    if n == T::zero() {
        // any row works for a scalar matrix; keep a canonical one
        return (Complex::new(T::one(), T::zero()), Complex::new(T::zero(), T::zero()));
    }
    let inv = Complex::new(n, T::zero()).inv();
    v = (v.0 * inv, v.1 * inv);
    let lead = if v.0.norm() >= v.1.norm() { v.0 } else { v.1 };
    let phase = lead.conj() / Complex::new(lead.norm(), T::zero());
    (v.0 * phase, v.1 * phase)
}

/// A_j = B_j^-1 phi_j with B_j^-1 = diag(1, 1/lambda2(q)) * (unit left
/// eigenvector rows of J phi_j(q)).
pub fn variety_scale<T: Real>(
    family: &MapFamily<T>,
    q: CPair<T>,
    j: u32,
    tol: &Tolerances<T>,
) -> Result<ScalingStep<T>> {
    let jac = jacobian(family, j, q)?;
    let eig = eigenpair(&jac, tol.eig_degenerate);
    if eig.degenerate {
        return Err(Error::DegenerateEigenvectors(0.0));
    }
    let u = left_eigenvector(&jac, eig.lambda1);
    let v = left_eigenvector(&jac, eig.lambda2);
    let rows = Jacobian2::new(u.0, u.1, v.0, v.1, q);
    let indep = rows.det().norm();
    if indep < tol.eigvec_indep {
        return Err(Error::DegenerateEigenvectors(indep.to_f64().unwrap_or(0.0)));
    }
    if eig.lambda2.norm() < tol.det_degenerate {
        return Err(Error::DegenerateJacobian("vanishing eigenvalue hit the degeneracy floor".into()));
    }
    let scale = eig.lambda2.inv();
    let normalizer = Jacobian2::new(rows.a11, rows.a12, rows.a21 * scale, rows.a22 * scale, q);
    let anchor = (Complex::new(T::zero(), T::zero()), Complex::new(T::zero(), T::zero()));
    Ok(ScalingStep { j, mode: StepMode::VarietyEigen, normalizer, anchor, family: family.clone() })
}

/// M_j = sup over the grid of ||(J phi_j(q))^-1 J phi_j(p)||_op.
pub fn norm_sup<T: Real>(
    family: &MapFamily<T>,
    q: CPair<T>,
    j: u32,
    grid: &PolydiscGrid<T>,
    tol: &Tolerances<T>,
) -> Result<T> {
    if grid.is_empty() {
        return Err(Error::InsufficientGrid("empty grid".into()));
    }
    let inv_q = jacobian(family, j, q)?.inv(tol.det_degenerate)?;
    let mut sup = T::zero();
    for &p in &grid.points {
        let jp = jacobian(family, j, p)?;
        if jp.det().norm() < tol.det_degenerate {
            return Err(Error::DegenerateJacobian(format!("j = {j} at a grid sample")));
        }
        sup = sup.max(op_norm(&inv_q.matmul(&jp)));
    }
    Ok(sup)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normality {
    Bounded,
    Unbounded,
    Inconclusive,
}

impl Normality {
    pub fn name(self) -> &'static str {
        match self {
            Normality::Bounded => "bounded",
            Normality::Unbounded => "unbounded",
            Normality::Inconclusive => "inconclusive",
        }
    }
}

/// Decide boundedness of the sup-norm sequence.
pub fn normality_diagnostic<T: Real>(ms: &[T], tol: &Tolerances<T>) -> Result<Normality> {
    if ms.len() < 6 {
        return Err(Error::Precondition(format!(
            "normality needs at least 6 consecutive indices, got {}",
            ms.len()
        )));
    }
    let half = ms.len().div_ceil(2);
    let window = &ms[ms.len() - half..];
    let med = median(window);
    let flat = window.iter().all(|&m| (m - med).abs() <= tol.norm_flat * med);
    if flat {
        return Ok(Normality::Bounded);
    }
    let logs: Vec<T> = window.iter().map(|m| m.max(T::min_positive_value()).ln()).collect();
    if ls_slope(&logs) > tol.norm_growth {
        return Ok(Normality::Unbounded);
    }
    Ok(Normality::Inconclusive)
}

/// Base of a fibered model domain.
#[derive(Debug, Clone)]
pub enum BaseDomain<T: Real> {
    UnitDisc,
    /// A sampled surface over the disc: membership means being within
    /// `tolerance` of one of the sample points (and inside the unit disc).
    SampledOverDisc { samples: Vec<Cx<T>>, tolerance: T },
}

/// The model domain with disc-like base and rotated upper-half-plane fibers.
#[derive(Debug, Clone)]
pub struct RtimesDomain<T: Real> {
    /// real continuous function of z, as an expression in z (and zb).
    pub theta: Expr,
    pub base: BaseDomain<T>,
}

impl<T: Real> RtimesDomain<T> {
    pub fn theta_at(&self, z: Cx<T>) -> Result<T> {
        let env: Bindings<Cx<T>> = Bindings::at_point((z, Complex::new(T::zero(), T::zero())));
        let v = eval(&self.theta, &env).map_err(Error::Eval)?;
        Ok(v.re)
    }
}

/// Membership: z in the base and Im(e^{-i theta(z)} w) > 0.
pub fn rtimes_membership<T: Real>(domain: &RtimesDomain<T>, p: CPair<T>) -> Result<bool> {
    let (z, w) = p;
    let in_base = match &domain.base {
        BaseDomain::UnitDisc => z.norm() < T::one(),
        BaseDomain::SampledOverDisc { samples, tolerance } => {
            z.norm() < T::one() && samples.iter().any(|s| (z - *s).norm() < *tolerance)
        }
    };
    if !in_base {
        return Ok(false);
    }
    let theta = domain.theta_at(z)?;
    let rot = Complex::new(T::zero(), -theta).exp();
    Ok((rot * w).im > T::zero())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelAction {
    /// (z, w) -> (z, w/n)
    Ln,
    /// (z, w) -> (z, w + t)
    LtTranslate,
    /// (z, w) -> (z, w e^{-t})
    LtDilate,
}

pub fn model_action<T: Real>(kind: ModelAction, param: T, p: CPair<T>) -> CPair<T> {
    let (z, w) = p;
    match kind {
        ModelAction::Ln => (z, w / Complex::new(param, T::zero())),
        ModelAction::LtTranslate => (z, w + Complex::new(param, T::zero())),
        ModelAction::LtDilate => (z, w * Complex::new((-param).exp(), T::zero())),
    }
}
