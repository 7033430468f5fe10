//! Jacobians of map families and their eigenvalue structure.
//!
//! The Jacobian of a holomorphic map family member is computed exactly by
//! forward-mode Wirtinger duals; a Richardson-extrapolated central-difference
//! version is kept as an independent cross-check. Eigenvalues are the roots
//! of the 2x2 characteristic polynomial, ordered by the lexicographic key
//! (modulus, real part, imaginary part). The conjugate-derivative residual
//! certifies numerically that the eigenvalue branches are holomorphic away
//! from the degenerate locus.

use crate::dsl::eval::{eval, Bindings};
use crate::dsl::Tolerances;
use crate::error::{Error, Result};
use crate::family::MapFamily;
use crate::grid::PolydiscGrid;
use crate::scalar::{ls_slope, CPair, Cx, Real};
use crate::wirtinger::WDual;
use num_complex::Complex;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian2<T: Real> {
    pub a11: Cx<T>,
    pub a12: Cx<T>,
    pub a21: Cx<T>,
    pub a22: Cx<T>,
    pub at: CPair<T>,
}

impl<T: Real> Jacobian2<T> {
    pub fn new(a11: Cx<T>, a12: Cx<T>, a21: Cx<T>, a22: Cx<T>, at: CPair<T>) -> Self {
        Jacobian2 { a11, a12, a21, a22, at }
    }

    pub fn det(&self) -> Cx<T> {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> Cx<T> {
        self.a11 + self.a22
    }

    pub fn inv(&self, det_tol: T) -> Result<Jacobian2<T>> {
        let d = self.det();
        if d.norm() < det_tol {
            return Err(Error::DegenerateJacobian(format!("({}, {})", self.at.0, self.at.1)));
        }
        let inv = d.inv();
        Ok(Jacobian2 {
            a11: self.a22 * inv,
            a12: -self.a12 * inv,
            a21: -self.a21 * inv,
            a22: self.a11 * inv,
            at: self.at,
        })
    }

    pub fn matmul(&self, rhs: &Jacobian2<T>) -> Jacobian2<T> {
        Jacobian2 {
            a11: self.a11 * rhs.a11 + self.a12 * rhs.a21,
            a12: self.a11 * rhs.a12 + self.a12 * rhs.a22,
            a21: self.a21 * rhs.a11 + self.a22 * rhs.a21,
            a22: self.a21 * rhs.a12 + self.a22 * rhs.a22,
            at: rhs.at,
        }
    }

    pub fn apply(&self, v: CPair<T>) -> CPair<T> {
        (self.a11 * v.0 + self.a12 * v.1, self.a21 * v.0 + self.a22 * v.1)
    }
}

/// Largest singular value from the closed-form 2x2 normal equations.
pub fn op_norm<T: Real>(j: &Jacobian2<T>) -> T {
    let t = j.a11.norm_sqr() + j.a12.norm_sqr() + j.a21.norm_sqr() + j.a22.norm_sqr();
    let d = j.det().norm_sqr();
    let disc = (t * t - T::of(4.0) * d).max(T::zero());
    (((t + disc.sqrt()) / T::of(2.0)).max(T::zero())).sqrt()
}

/// Exact Jacobian at `p` via one dual-number evaluation per component.
pub fn jacobian<T: Real>(family: &MapFamily<T>, j: u32, p: CPair<T>) -> Result<Jacobian2<T>> {
    let a = family.alpha(j)?;
    let env: Bindings<WDual<T>> = Bindings::seeded_at(p, Some(a), Some(j));
    let fv = eval(&family.f, &env).map_err(Error::Eval)?;
    let gv = eval(&family.g, &env).map_err(Error::Eval)?;
    Ok(Jacobian2::new(fv.dz, fv.dw, gv.dz, gv.dw, p))
}

/// Independent cross-check: Richardson-extrapolated central differences.
pub fn jacobian_fd<T: Real>(family: &MapFamily<T>, j: u32, p: CPair<T>, h: T) -> Result<Jacobian2<T>> {
    let diff = |dir_z: bool, step: T| -> Result<CPair<T>> {
        let shift = Complex::new(step, T::zero());
        let (pp, pm) = if dir_z {
            ((p.0 + shift, p.1), (p.0 - shift, p.1))
        } else {
            ((p.0, p.1 + shift), (p.0, p.1 - shift))
        };
        let fp = family.apply(j, pp)?;
        let fm = family.apply(j, pm)?;
        let two = Complex::new(step + step, T::zero());
        Ok(((fp.0 - fm.0) / two, (fp.1 - fm.1) / two))
    };
    let richardson = |dir_z: bool| -> Result<CPair<T>> {
        let d1 = diff(dir_z, h)?;
        let d2 = diff(dir_z, h / T::of(2.0))?;
        let four = Complex::new(T::of(4.0), T::zero());
        let three = Complex::new(T::of(3.0), T::zero());
        Ok(((four * d2.0 - d1.0) / three, (four * d2.1 - d1.1) / three))
    };
    let dz = richardson(true)?;
    let dw = richardson(false)?;
    Ok(Jacobian2::new(dz.0, dw.0, dz.1, dw.1, p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair<T: Real> {
    pub lambda1: Cx<T>,
    pub lambda2: Cx<T>,
    pub degenerate: bool,
}

fn lex_key<T: Real>(l: Cx<T>) -> [T; 3] {
    [l.norm(), l.re, l.im]
}

fn lex_ge<T: Real>(a: Cx<T>, b: Cx<T>) -> bool {
    let (ka, kb) = (lex_key(a), lex_key(b));
    for i in 0..3 {
        if ka[i] > kb[i] {
            return true;
        }
        if ka[i] < kb[i] {
            return false;
        }
    }
    true
}

/// Unordered characteristic roots, computed with the stable branch choice.
pub fn eig_roots<T: Real>(j: &Jacobian2<T>) -> (Cx<T>, Cx<T>) {
    let tr = j.trace();
    let det = j.det();
    let four = Complex::new(T::of(4.0), T::zero());
    let disc = tr * tr - four * det;
    let s = disc.sqrt();
    let two = Complex::new(T::of(2.0), T::zero());
    let plus = (tr + s) / two;
    let minus = (tr - s) / two;
    // divide det by the larger root to avoid cancellation
    if plus.norm() >= minus.norm() {
        if plus.norm() == T::zero() {
            (plus, minus)
        } else {
            (plus, det / plus)
        }
    } else if minus.norm() == T::zero() {
        (minus, plus)
    } else {
        (minus, det / minus)
    }
}

/// Both eigenvalues, ordered so that lambda1 dominates in the
/// (modulus, Re, Im) lexicographic order.
pub fn eigenpair<T: Real>(j: &Jacobian2<T>, eig_degenerate_tol: T) -> EigenPair<T> {
    let (r1, r2) = eig_roots(j);
    let tr = j.trace();
    let det = j.det();
    let four = Complex::new(T::of(4.0), T::zero());
    let disc = tr * tr - four * det;
    let degenerate = disc.norm() < eig_degenerate_tol;
    let (lambda1, lambda2) = if lex_ge(r1, r2) { (r1, r2) } else { (r2, r1) };
    EigenPair { lambda1, lambda2, degenerate }
}

/// Eigenvalues of the family Jacobian along the index window, evaluated at
/// a fixed base point.
pub fn eigen_series<T: Real>(
    family: &MapFamily<T>,
    q: CPair<T>,
    j_min: u32,
    j_max: u32,
    tol: &Tolerances<T>,
) -> Result<Vec<(u32, EigenPair<T>)>> {
    let mut out = Vec::new();
    for j in j_min..=j_max {
        let jac = jacobian(family, j, q)?;
        if jac.det().norm() < tol.det_degenerate {
            return Err(Error::DegenerateJacobian(format!("j = {j} at the base point")));
        }
        out.push((j, eigenpair(&jac, tol.eig_degenerate)));
    }
    Ok(out)
}

/// Eigenvalue field sampled over a grid, with the degenerate locus masked.
#[derive(Debug, Clone)]
pub struct EigenField<T: Real> {
    pub points: Vec<CPair<T>>,
    pub lambda1: Vec<Cx<T>>,
    pub lambda2: Vec<Cx<T>>,
    pub degenerate_mask: Vec<bool>,
}

pub fn eigen_field<T: Real>(
    family: &MapFamily<T>,
    j: u32,
    grid: &PolydiscGrid<T>,
    tol: &Tolerances<T>,
) -> Result<EigenField<T>> {
    let mut lambda1 = Vec::with_capacity(grid.len());
    let mut lambda2 = Vec::with_capacity(grid.len());
    let mut mask = Vec::with_capacity(grid.len());
    for &p in &grid.points {
        let jac = jacobian(family, j, p)?;
        let e = eigenpair(&jac, tol.eig_degenerate);
        lambda1.push(e.lambda1);
        lambda2.push(e.lambda2);
        mask.push(e.degenerate);
    }
    Ok(EigenField { points: grid.points.clone(), lambda1, lambda2, degenerate_mask: mask })
}

impl<T: Real> EigenField<T> {
    /// Vieta residual: max over unmasked points of the relative defect of
    /// lambda1*lambda2 = det and lambda1+lambda2 = trace.
    pub fn vieta_residual(&self, family: &MapFamily<T>, j: u32) -> Result<T> {
        let mut worst = T::zero();
        for (i, &p) in self.points.iter().enumerate() {
            let jac = jacobian(family, j, p)?;
            let det = jac.det();
            let tr = jac.trace();
            let scale_d = det.norm().max(T::one());
            let scale_t = tr.norm().max(T::one());
            let rd = (self.lambda1[i] * self.lambda2[i] - det).norm() / scale_d;
            let rt = (self.lambda1[i] + self.lambda2[i] - tr).norm() / scale_t;
            worst = worst.max(rd).max(rt);
        }
        Ok(worst)
    }
}

/// Conjugate-derivative residual of both eigenvalue branches.
///
/// At every unmasked base point the characteristic roots are re-evaluated on
/// an off-grid 8-point stencil of half-width `spacing`; each stencil value
/// takes the root closest to the branch value at the base point, so the
/// differentiated branch is the locally continuous one even where the global
/// lexicographic labels swap.
pub fn cr_residual<T: Real>(
    family: &MapFamily<T>,
    j: u32,
    field: &EigenField<T>,
    spacing: T,
) -> Result<T> {
    let unmasked = field.degenerate_mask.iter().filter(|m| !**m).count();
    if unmasked < 3 {
        return Err(Error::InsufficientGrid(format!("{unmasked} unmasked points")));
    }
    let mut worst = T::zero();
    for (i, &p) in field.points.iter().enumerate() {
        if field.degenerate_mask[i] {
            continue;
        }
        for base in [field.lambda1[i], field.lambda2[i]] {
            let sampler = |pt: CPair<T>| -> Result<Cx<T>> {
                let jac = jacobian(family, j, pt)?;
                let (r1, r2) = eig_roots(&jac);
                Ok(if (r1 - base).norm() <= (r2 - base).norm() { r1 } else { r2 })
            };
            let r = wirtinger_bar_residual(&sampler, p, spacing)?;
            worst = worst.max(r);
        }
    }
    Ok(worst)
}

/// Same residual for an arbitrary scalar field (used for control fields).
pub fn cr_residual_of<T: Real>(
    sampler: &dyn Fn(CPair<T>) -> Result<Cx<T>>,
    points: &[CPair<T>],
    spacing: T,
) -> Result<T> {
    if points.len() < 3 {
        return Err(Error::InsufficientGrid(format!("{} points", points.len())));
    }
    let mut worst = T::zero();
    for &p in points {
        let r = wirtinger_bar_residual(sampler, p, spacing)?;
        worst = worst.max(r);
    }
    Ok(worst)
}

/// |d/dz̄| + |d/dw̄| at `p` by central differences of half-width `h`.
fn wirtinger_bar_residual<T: Real>(
    sampler: &dyn Fn(CPair<T>) -> Result<Cx<T>>,
    p: CPair<T>,
    h: T,
) -> Result<T> {
    let re = Complex::new(h, T::zero());
    let im = Complex::new(T::zero(), h);
    let two_h = Complex::new(h + h, T::zero());
    let i_c = Complex::new(T::zero(), T::one());
    let half = Complex::new(T::of(0.5), T::zero());

    let dbar = |plus_x: CPair<T>, minus_x: CPair<T>, plus_y: CPair<T>, minus_y: CPair<T>| -> Result<Cx<T>> {
        let dx = (sampler(plus_x)? - sampler(minus_x)?) / two_h;
        let dy = (sampler(plus_y)? - sampler(minus_y)?) / two_h;
        Ok((dx + i_c * dy) * half)
    };

    let (z, w) = p;
    let bz = dbar((z + re, w), (z - re, w), (z + im, w), (z - im, w))?;
    let bw = dbar((z, w + re), (z, w - re), (z, w + im), (z, w - im))?;
    Ok(bz.norm() + bw.norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseVerdict {
    /// Both eigenvalues vanish along the family: the orbit degenerates to a point.
    AccumulationPoint,
    /// Exactly one eigenvalue vanishes: the orbit degenerates onto a variety.
    AccumulationVariety,
    /// Neither vanishes: the limit stays an automorphism.
    Compact,
}

impl CaseVerdict {
    pub fn name(self) -> &'static str {
        match self {
            CaseVerdict::AccumulationPoint => "accumulation_point",
            CaseVerdict::AccumulationVariety => "accumulation_variety",
            CaseVerdict::Compact => "compact",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Trend {
    ToZero,
    NotToZero,
    Unclear,
}

fn zero_trend<T: Real>(moduli: &[T], tol: &Tolerances<T>) -> Trend {
    let n = moduli.len();
    let last = moduli[n - 1];
    let floor = T::min_positive_value();
    if last <= floor {
        return Trend::ToZero;
    }
    let w = n.min(5);
    let window = &moduli[n - w..];
    let logs: Vec<T> = window.iter().map(|v| v.max(floor).ln()).collect();
    let slope = ls_slope(&logs);
    let decreasing = slope <= -tol.zero_trend && window[w - 1] < window[0];
    let small = last < tol.zero;
    match (decreasing, small) {
        (true, true) => Trend::ToZero,
        (false, false) => Trend::NotToZero,
        _ => Trend::Unclear,
    }
}

/// Decide the accumulation case from an eigenvalue series at the base point.
pub fn classify_series<T: Real>(
    series: &[(u32, EigenPair<T>)],
    tol: &Tolerances<T>,
) -> Result<CaseVerdict> {
    if series.len() < 3 {
        return Err(Error::Inconclusive("need at least 3 indices for the trend test".into()));
    }
    let m1: Vec<T> = series.iter().map(|(_, e)| e.lambda1.norm()).collect();
    let m2: Vec<T> = series.iter().map(|(_, e)| e.lambda2.norm()).collect();
    let t1 = zero_trend(&m1, tol);
    let t2 = zero_trend(&m2, tol);
    match (t1, t2) {
        (Trend::ToZero, Trend::ToZero) => Ok(CaseVerdict::AccumulationPoint),
        (Trend::ToZero, Trend::NotToZero) | (Trend::NotToZero, Trend::ToZero) => {
            Ok(CaseVerdict::AccumulationVariety)
        }
        (Trend::NotToZero, Trend::NotToZero) => Ok(CaseVerdict::Compact),
        _ => Err(Error::Inconclusive("eigenvalue trends fail both the decrease and smallness tests".into())),
    }
}

/// Convenience wrapper computing the series first.
pub fn classify_case<T: Real>(
    family: &MapFamily<T>,
    q: CPair<T>,
    j_min: u32,
    j_max: u32,
    tol: &Tolerances<T>,
) -> Result<CaseVerdict> {
    let series = eigen_series(family, q, j_min, j_max, tol)?;
    classify_series(&series, tol)
}

#[derive(Debug, Clone)]
pub struct DetRatioBounds<T: Real> {
    pub min: T,
    pub max: T,
    pub violation_suspected: bool,
    pub per_j: Vec<(u32, T, T)>,
}

/// Observed bounds of |det((J phi_j(q))^-1 J phi_j(p))| over a grid and an
/// index window.
pub fn det_ratio_bounds<T: Real>(
    family: &MapFamily<T>,
    q: CPair<T>,
    grid: &PolydiscGrid<T>,
    j_min: u32,
    j_max: u32,
    tol: &Tolerances<T>,
) -> Result<DetRatioBounds<T>> {
    if grid.is_empty() {
        return Err(Error::InsufficientGrid("empty grid".into()));
    }
    let mut per_j = Vec::new();
    let mut global = (T::infinity(), T::neg_infinity());
    for j in j_min..=j_max {
        let det_q = jacobian(family, j, q)?.det();
        if det_q.norm() < tol.det_degenerate {
            return Err(Error::DegenerateJacobian(format!("j = {j} at the base point")));
        }
        let mut mn = T::infinity();
        let mut mx = T::neg_infinity();
        for &p in &grid.points {
            let det_p = jacobian(family, j, p)?.det();
            if det_p.norm() < tol.det_degenerate {
                return Err(Error::DegenerateJacobian(format!("j = {j} at a grid sample")));
            }
            let ratio = det_p.norm() / det_q.norm();
            mn = mn.min(ratio);
            mx = mx.max(ratio);
        }
        global.0 = global.0.min(mn);
        global.1 = global.1.max(mx);
        per_j.push((j, mn, mx));
    }
    let floor = T::min_positive_value();
    let ln_min: Vec<T> = per_j.iter().map(|(_, mn, _)| mn.max(floor).ln()).collect();
    let ln_max: Vec<T> = per_j.iter().map(|(_, _, mx)| mx.max(floor).ln()).collect();
    let shrinking = ls_slope(&ln_min) < -T::of(0.1);
    let exploding = ls_slope(&ln_max) > T::of(0.1);
    Ok(DetRatioBounds {
        min: global.0,
        max: global.1,
        violation_suspected: shrinking || exploding,
        per_j,
    })
}
