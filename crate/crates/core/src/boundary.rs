//! Boundary normal forms, type estimation and scaled-boundary limits.
//!
//! A boundary point is put into the local presentation `Im w > rho(z, z̄, Re w)`
//! by a translation and a unitary frame; rho is recovered by a 1-D solve.
//! The type estimator searches analytic discs for the largest vanishing-order
//! ratio and is an explicit lower-bound procedure: it reports its witness and
//! whether the search space was exhausted.

use crate::domain::DomainSpec;
use crate::dsl::ast::Expr;
use crate::dsl::eval::{eval, Bindings};
use crate::dsl::Tolerances;
use crate::error::{Error, Result};
use crate::family::MapFamily;
use crate::holo_diff::{jacobian, Jacobian2};
use crate::scalar::{median, CPair, Cx, Real};
use num_complex::Complex;

/// Local normal presentation of a domain at a boundary point.
#[derive(Debug, Clone)]
pub struct NormalForm<T: Real> {
    /// the boundary point sent to the origin
    pub translation: CPair<T>,
    /// unitary frame rows: local = frame * (x - translation)
    pub frame: Jacobian2<T>,
    pub domain: DomainSpec<T>,
    pub trust: T,
    /// the active scalar constraint in ambient coordinates
    pub constraint: Expr,
    /// sampled check of the u-linear coefficient C(z, z̄)/|z| -> 0
    pub is_normal: bool,
    pub max_u_coeff_ratio: T,
    /// graph-form domain presented at the origin with identity frame: rho can
    /// be evaluated in closed form rather than solved for
    graph_shortcut: bool,
}

fn c0<T: Real>() -> Cx<T> {
    Complex::new(T::zero(), T::zero())
}

impl<T: Real> NormalForm<T> {
    /// True when rho is available in closed form (graph domain at the origin
    /// with identity frame), so no per-sample solve is needed.
    pub fn has_graph_shortcut(&self) -> bool {
        self.graph_shortcut
    }

    pub fn to_local(&self, x: CPair<T>) -> CPair<T> {
        self.frame.apply((x.0 - self.translation.0, x.1 - self.translation.1))
    }

    pub fn from_local(&self, y: CPair<T>) -> CPair<T> {
        // unitary frame: inverse = conjugate transpose
        let u = &self.frame;
        let x = (
            u.a11.conj() * y.0 + u.a21.conj() * y.1,
            u.a12.conj() * y.0 + u.a22.conj() * y.1,
        );
        (x.0 + self.translation.0, x.1 + self.translation.1)
    }

    fn constraint_value(&self, x: CPair<T>) -> Result<T> {
        let env = Bindings::at_point(x);
        let v = eval(&self.constraint, &env).map_err(Error::Eval)?;
        Ok(v.re)
    }

    /// Boundary height: the v solving `constraint(from_local(zeta, u + iv)) = 0`
    /// nearest to v = 0.
    pub fn rho(&self, zeta: Cx<T>, u: T) -> Result<T> {
        if self.graph_shortcut {
            if let DomainSpec::Graph { rho } = &self.domain {
                return rho.value(zeta, u);
            }
        }
        let r_of = |v: T| -> Result<T> {
            self.constraint_value(self.from_local((zeta, Complex::new(u, v))))
        };
        // scan for sign changes, keep the bracket nearest the tangent plane
        let k = 64usize;
        let mut best: Option<(T, T)> = None;
        let mut prev_v = -self.trust;
        let mut prev_r = r_of(prev_v)?;
        for i in 1..=k {
            let v = -self.trust + T::of(2.0 * i as f64 / k as f64) * self.trust;
            let r = r_of(v)?;
            if (prev_r <= T::zero()) != (r <= T::zero()) {
                let mid = (prev_v + v) / T::of(2.0);
                let better = match best {
                    None => true,
                    Some((lo, hi)) => mid.abs() < ((lo + hi) / T::of(2.0)).abs(),
                };
                if better {
                    best = Some((prev_v, v));
                }
            }
            prev_v = v;
            prev_r = r;
        }
        let (mut lo, mut hi) = best.ok_or_else(|| {
            Error::SolveFailure("no boundary sheet inside the trust window".into())
        })?;
        for _ in 0..80 {
            let mid = (lo + hi) / T::of(2.0);
            let rm = r_of(mid)?;
            let rl = r_of(lo)?;
            if (rl <= T::zero()) != (rm <= T::zero()) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok((lo + hi) / T::of(2.0))
    }

    pub fn rho0(&self, zeta: Cx<T>) -> Result<T> {
        self.rho(zeta, T::zero())
    }

    /// ln rho0, failing below the positivity floor (used by the type-I test).
    ///
    /// A graph-form rho that is literally an exponential is evaluated in log
    /// space, so flat functions like exp(-1/|z|^2) stay exact far below the
    /// underflow line; everything else goes through the boundary solve.
    pub fn log_rho0(&self, zeta: Cx<T>) -> Result<T> {
        if self.graph_shortcut {
            if let DomainSpec::Graph { rho } = &self.domain {
                if let Expr::Un(crate::dsl::ast::UnOp::Exp, inner) = &rho.expr {
                    let env: Bindings<Cx<T>> =
                        Bindings::at_point((zeta, Complex::new(T::zero(), T::zero())));
                    let v = eval(inner, &env).map_err(Error::Eval)?;
                    return Ok(v.re);
                }
            }
        }
        let v = self.rho0(zeta)?;
        if v < T::zero() && v.abs() > T::of(1e-11) {
            return Err(Error::Precondition(
                "rho0 changes sign: the boundary is not one-sided over the tangent".into(),
            ));
        }
        if v.abs() <= T::of(1e-11) {
            return Err(Error::NoiseFloor(format!("rho0 = {v} is below the solver noise floor")));
        }
        Ok(v.ln())
    }

    /// Radial extrapolation of the k-homogeneous leading polynomial of rho0.
    pub fn rho_k(&self, k: u32, x: Cx<T>) -> Result<T> {
        if x.norm() == T::zero() {
            return Ok(T::zero());
        }
        let probe = self.trust * T::of(0.02);
        let dir = x / Complex::new(x.norm(), T::zero());
        let v = self.rho0(dir * Complex::new(probe, T::zero()))?;
        Ok(v * (x.norm() / probe).powi(k as i32))
    }

    /// Two-scale probe: does rho0 scale like |t|^k along rays? Rejects a fit
    /// whose assumed degree disagrees with the actual leading part.
    pub fn check_k_homogeneous(&self, k: u32) -> Result<()> {
        let t1 = self.trust * T::of(0.02);
        let t2 = t1 / T::of(2.0);
        let mut worst_rel = T::zero();
        let mut scale = T::zero();
        for ph in 0..8 {
            let ang = T::of(ph as f64 * std::f64::consts::FRAC_PI_4 + 0.19);
            let dir = Complex::new(ang.cos(), ang.sin());
            let c1 = self.rho0(dir * Complex::new(t1, T::zero()))? / t1.powi(k as i32);
            let c2 = self.rho0(dir * Complex::new(t2, T::zero()))? / t2.powi(k as i32);
            worst_rel = worst_rel.max((c1 - c2).abs());
            scale = scale.max(c1.abs()).max(c2.abs());
        }
        if worst_rel > T::of(0.1) * (scale + T::of(1e-11)) {
            return Err(Error::NonConvergentRatio(format!(
                "leading part of rho0 is not {k}-homogeneous (probe spread {worst_rel})"
            )));
        }
        Ok(())
    }
}

/// Build the normal form of `domain` at the boundary point `p`.
///
/// Defining functions with flat terms like exp(-1/|z|^2) are singular on the
/// coordinate axis itself; samples landing exactly there are retried with an
/// off-axis offset of 1e-9, where the flat term underflows to its limit.
pub fn normal_form<T: Real>(domain: &DomainSpec<T>, p: CPair<T>, trust: T) -> Result<NormalForm<T>> {
    let tiny = Complex::new(T::of(1e-9), T::of(1e-9));
    let probes = |x: CPair<T>| [x, (x.0 + tiny, x.1), (x.0, x.1 + tiny)];
    let (active, value) = {
        let mut got = None;
        for probe in probes(p) {
            if let Ok(v) = domain.active_constraint(probe) {
                got = Some(v);
                break;
            }
        }
        match got {
            Some(v) => v,
            None => domain.active_constraint(p)?,
        }
    };
    if value.abs() > T::of(1e-10) {
        return Err(Error::Precondition(format!(
            "point is not on the boundary: defining value {value}"
        )));
    }
    let constraint = domain.constraint_expr(active);

    // real gradient by central differences (robust at abs()-kinks elsewhere)
    let h = T::of(1e-6) * trust.max(T::of(0.1));
    let val = |x: CPair<T>| -> Result<T> {
        for probe in probes(x) {
            let env = Bindings::at_point(probe);
            if let Ok(v) = eval(&constraint, &env) {
                return Ok(v.re);
            }
        }
        let env = Bindings::at_point(x);
        Ok(eval(&constraint, &env).map_err(Error::Eval)?.re)
    };
    let g = |dir: usize| -> Result<T> {
        let mut plus = p;
        let mut minus = p;
        match dir {
            0 => {
                plus.0 += Complex::new(h, T::zero());
                minus.0 -= Complex::new(h, T::zero());
            }
            1 => {
                plus.0 += Complex::new(T::zero(), h);
                minus.0 -= Complex::new(T::zero(), h);
            }
            2 => {
                plus.1 += Complex::new(h, T::zero());
                minus.1 -= Complex::new(h, T::zero());
            }
            _ => {
                plus.1 += Complex::new(T::zero(), h);
                minus.1 -= Complex::new(T::zero(), h);
            }
        }
        Ok((val(plus)? - val(minus)?) / (h + h))
    };
    // Wirtinger gradients: r_z = (r_x - i r_y)/2
    let half = T::of(0.5);
    let rz = Complex::new(g(0)? * half, -g(1)? * half);
    let rw = Complex::new(g(2)? * half, -g(3)? * half);
    let n = (rz.conj(), rw.conj());
    let n_norm = (n.0.norm_sqr() + n.1.norm_sqr()).sqrt();
    if n_norm < T::of(1e-8) {
        return Err(Error::DegenerateGradient);
    }
    let n_hat = (n.0 / Complex::new(n_norm, T::zero()), n.1 / Complex::new(n_norm, T::zero()));
    // orthogonal complex tangent, phase-canonicalized
    let mut t_hat = (-n_hat.1.conj(), n_hat.0.conj());
    let lead = if t_hat.0.norm() >= t_hat.1.norm() { t_hat.0 } else { t_hat.1 };
    let phase = lead.conj() / Complex::new(lead.norm(), T::zero());
    t_hat = (t_hat.0 * phase, t_hat.1 * phase);
    // rows: z' = <x - p, t>, w' = -i <x - p, n>
    let mi = Complex::new(T::zero(), -T::one());
    let frame = Jacobian2::new(
        t_hat.0.conj(),
        t_hat.1.conj(),
        mi * n_hat.0.conj(),
        mi * n_hat.1.conj(),
        p,
    );

    let graph_shortcut = match domain {
        DomainSpec::Graph { .. } => {
            let near_origin = p.0.norm() + p.1.norm() < T::of(1e-12);
            let id_frame = (frame.a11 - Complex::new(T::one(), T::zero())).norm()
                + frame.a12.norm()
                + frame.a21.norm()
                + (frame.a22 - Complex::new(T::one(), T::zero())).norm()
                < T::of(1e-9);
            near_origin && id_frame
        }
        _ => false,
    };

    let mut nf = NormalForm {
        translation: p,
        frame,
        domain: domain.clone(),
        trust,
        constraint,
        is_normal: true,
        max_u_coeff_ratio: T::zero(),
        graph_shortcut,
    };

    // sampled u-linear coefficient C(z, z̄): |C|/|z| must fall along rays
    let du = trust * T::of(1e-3);
    let mut ratios = Vec::new();
    for i in 0..4 {
        let s = trust * T::of(0.3 * 0.5f64.powi(i));
        let mut worst = T::zero();
        for ph in 0..4 {
            let ang = T::of(ph as f64 * std::f64::consts::FRAC_PI_2 + 0.13);
            let zeta = Complex::new(s * ang.cos(), s * ang.sin());
            let c = (nf.rho(zeta, du)? - nf.rho(zeta, -du)?) / (du + du);
            worst = worst.max(c.abs() / s);
        }
        ratios.push(worst);
    }
    nf.max_u_coeff_ratio = ratios.iter().fold(T::zero(), |m, &r| m.max(r));
    nf.is_normal = nf.max_u_coeff_ratio < T::of(1e-4)
        || ratios[ratios.len() - 1] < ratios[0] * T::of(0.5) + T::of(1e-6);
    Ok(nf)
}

/// Result of a vanishing-order estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VanishingOrder {
    Finite(u32),
    /// slope exceeded the cap (or the function is zero within noise)
    AtLeast(u32),
}

/// Order of vanishing at 0 of a sampled one-variable function, from
/// log-log slopes along a geometric ladder.
pub fn vanishing_order<T: Real>(
    f: &dyn Fn(T) -> Result<Cx<T>>,
    max_order: u32,
    t0: T,
    ladder_len: usize,
) -> Result<VanishingOrder> {
    let abs_floor = T::of(1e-11);
    let fit_tol = T::of(0.1);
    let mut vals = Vec::with_capacity(ladder_len);
    for i in 0..ladder_len {
        let t = t0 * T::of(0.5f64.powi(i as i32));
        match f(t) {
            Ok(v) => vals.push(v.norm()),
            // a singular sample (underflowed exponentials etc.) ends the ladder
            Err(_) => break,
        }
    }
    if vals.is_empty() {
        return Err(Error::NoiseFloor("no evaluable ladder points".into()));
    }
    if vals.iter().all(|v| *v < abs_floor) {
        return Ok(VanishingOrder::AtLeast(max_order));
    }
    let ln2 = T::of(std::f64::consts::LN_2);
    let mut slopes = Vec::new();
    for i in 0..vals.len() - 1 {
        if vals[i] < abs_floor {
            break;
        }
        if vals[i + 1] < abs_floor {
            // fell through the floor in one step; a decay already past the
            // cap is the sentinel, anything else is not resolvable
            let implied =
                (vals[i].ln() - vals[i + 1].max(T::min_positive_value()).ln()) / ln2;
            if implied > T::of(max_order as f64) {
                return Ok(VanishingOrder::AtLeast(max_order));
            }
            break;
        }
        slopes.push((vals[i].ln() - vals[i + 1].ln()) / ln2);
    }
    if slopes.is_empty() {
        return Err(Error::NoiseFloor("all ladder values at the noise floor".into()));
    }
    for k in 0..slopes.len().saturating_sub(2) {
        let w = &slopes[k..k + 3];
        let mx = w.iter().fold(T::neg_infinity(), |m, &s| m.max(s));
        let mn = w.iter().fold(T::infinity(), |m, &s| m.min(s));
        if mx - mn < fit_tol {
            let est = median(w);
            if est > T::of(max_order as f64 + 0.5) {
                return Ok(VanishingOrder::AtLeast(max_order));
            }
            let rounded = est.round();
            if (est - rounded).abs() <= fit_tol {
                let k = rounded.to_f64().unwrap_or(0.0);
                if k < 0.5 {
                    return Err(Error::NoiseFloor("function does not vanish at 0".into()));
                }
                return Ok(VanishingOrder::Finite(k as u32));
            }
        }
    }
    let last = slopes[slopes.len() - 1];
    if last > T::of(max_order as f64) {
        return Ok(VanishingOrder::AtLeast(max_order));
    }
    Err(Error::NoiseFloor("log-log slope did not stabilize".into()))
}

/// An analytic disc with polynomial components (coefficients from degree 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Disc {
    pub a: Vec<(f64, f64)>,
    pub b: Vec<(f64, f64)>,
}

impl Disc {
    fn component<T: Real>(coeffs: &[(f64, f64)], xi: Cx<T>) -> Cx<T> {
        let mut acc = c0::<T>();
        let mut pw = Complex::new(T::one(), T::zero());
        for &(re, im) in coeffs {
            pw *= xi;
            acc += Complex::new(T::of(re), T::of(im)) * pw;
        }
        acc
    }

    pub fn eval<T: Real>(&self, xi: Cx<T>) -> CPair<T> {
        (Self::component(&self.a, xi), Self::component(&self.b, xi))
    }

    /// Exact vanishing order from the coefficients (min over components).
    pub fn order(&self) -> Option<u32> {
        let first = |cs: &[(f64, f64)]| {
            cs.iter()
                .position(|&(re, im)| re != 0.0 || im != 0.0)
                .map(|k| k as u32 + 1)
        };
        match (first(&self.a), first(&self.b)) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (Some(x), None) => Some(x),
            (None, Some(y)) => Some(y),
            (None, None) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiscSearch<T: Real> {
    pub max_degree: usize,
    pub lattice_step: f64,
    pub lattice_radius: f64,
    pub pair_step: f64,
    pub pair_radius: f64,
    pub max_order: u32,
    pub ladder_t0: T,
    pub ladder_len: usize,
    pub phases: usize,
}

impl<T: Real> Default for DiscSearch<T> {
    fn default() -> Self {
        DiscSearch {
            max_degree: 3,
            lattice_step: 0.25,
            lattice_radius: 2.0,
            pair_step: 0.5,
            pair_radius: 1.0,
            max_order: 16,
            ladder_t0: T::of(0.1),
            ladder_len: 14,
            phases: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeKind {
    Finite(u32),
    InfiniteTypeI,
    InfiniteTypeIISuspect,
    Inconclusive,
}

impl TypeKind {
    pub fn name(&self) -> String {
        match self {
            TypeKind::Finite(t) => format!("finite({t})"),
            TypeKind::InfiniteTypeI => "infinite_type_I".into(),
            TypeKind::InfiniteTypeIISuspect => "infinite_type_II_suspect".into(),
            TypeKind::Inconclusive => "inconclusive".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TypeReport<T: Real> {
    pub kind: TypeKind,
    /// None marks the infinite sentinel.
    pub t_estimate: Option<u32>,
    pub not_finite: bool,
    pub witness: Option<Disc>,
    pub m_z_samples: Vec<(T, T)>,
    pub search_exhausted: bool,
    pub note: String,
}

/// Vanishing order of the composed defining function along a disc:
/// minimum over sampled phases of the radial order.
fn disc_numerator_order<T: Real>(
    nf: &NormalForm<T>,
    disc: &Disc,
    search: &DiscSearch<T>,
) -> Result<VanishingOrder> {
    let mut best: Option<VanishingOrder> = None;
    let mut last_err: Option<Error> = None;
    for ph in 0..search.phases {
        let ang = T::of(ph as f64 * std::f64::consts::PI / search.phases as f64 + 0.077);
        let dir = Complex::new(ang.cos(), ang.sin());
        let f = |t: T| -> Result<Cx<T>> {
            let xi = dir * Complex::new(t, T::zero());
            let (z, w) = disc.eval(xi);
            let v = nf.rho(z, w.re)? - w.im;
            Ok(Complex::new(v, T::zero()))
        };
        match vanishing_order(&f, search.max_order, search.ladder_t0, search.ladder_len) {
            Ok(o) => {
                best = Some(match (best, o) {
                    (None, o) => o,
                    (Some(VanishingOrder::Finite(x)), VanishingOrder::Finite(y)) => {
                        VanishingOrder::Finite(x.min(y))
                    }
                    (Some(VanishingOrder::Finite(x)), VanishingOrder::AtLeast(_)) => {
                        VanishingOrder::Finite(x)
                    }
                    (Some(VanishingOrder::AtLeast(_)), o2) => o2,
                });
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some(o) => Ok(o),
        None => Err(last_err.unwrap_or_else(|| Error::NoiseFloor("no phase evaluable".into()))),
    }
}

fn lattice(step: f64, radius: f64) -> Vec<(f64, f64)> {
    let n = (radius / step).round() as i64;
    let mut out = Vec::new();
    for ix in -n..=n {
        for iy in -n..=n {
            let c = (ix as f64 * step, iy as f64 * step);
            if (c.0 * c.0 + c.1 * c.1).sqrt() <= radius + 1e-12 {
                out.push(c);
            }
        }
    }
    out
}

/// Lower-bound estimate of the boundary type by brute-force disc search.
pub fn dangelo_type<T: Real>(nf: &NormalForm<T>, search: &DiscSearch<T>) -> Result<TypeReport<T>> {
    let mut discs: Vec<Disc> = Vec::new();
    // trivial disc first: the reported type is never below its ratio
    discs.push(Disc { a: vec![(1.0, 0.0)], b: vec![] });
    let coeffs = lattice(search.lattice_step, search.lattice_radius);
    for m in 1..=search.max_degree {
        for &c in &coeffs {
            if c.0 == 0.0 && c.1 == 0.0 {
                continue;
            }
            let mut b = vec![(0.0, 0.0); m];
            b[m - 1] = c;
            discs.push(Disc { a: vec![(1.0, 0.0)], b });
            let mut a = vec![(0.0, 0.0); m];
            a[m - 1] = c;
            discs.push(Disc { a, b: vec![(1.0, 0.0)] });
        }
    }
    discs.push(Disc { a: vec![], b: vec![(1.0, 0.0)] });
    // two-term second components on a coarser lattice
    let pair_coeffs = lattice(search.pair_step, search.pair_radius);
    for m1 in 1..search.max_degree {
        for m2 in (m1 + 1)..=search.max_degree {
            for &c1 in &pair_coeffs {
                for &c2 in &pair_coeffs {
                    if (c1.0 == 0.0 && c1.1 == 0.0) || (c2.0 == 0.0 && c2.1 == 0.0) {
                        continue;
                    }
                    let mut b = vec![(0.0, 0.0); m2];
                    b[m1 - 1] = c1;
                    b[m2 - 1] = c2;
                    discs.push(Disc { a: vec![(1.0, 0.0)], b });
                }
            }
        }
    }

    let mut best_ratio = T::zero();
    let mut witness: Option<(Disc, VanishingOrder, u32)> = None;
    let mut not_finite = false;
    for disc in &discs {
        let den = match disc.order() {
            Some(d) => d,
            None => continue,
        };
        let num = match disc_numerator_order(nf, disc, search) {
            Ok(o) => o,
            // discs where the solver leaves the trust region are skipped
            Err(_) => continue,
        };
        match num {
            VanishingOrder::AtLeast(_) => {
                not_finite = true;
                witness = Some((disc.clone(), num, den));
                break;
            }
            VanishingOrder::Finite(k) => {
                let ratio = T::of(k as f64 / den as f64);
                if ratio > best_ratio {
                    best_ratio = ratio;
                    witness = Some((disc.clone(), num, den));
                }
            }
        }
    }

    let (witness_disc, witness_order, witness_den) = match witness {
        Some(w) => w,
        None => {
            return Ok(TypeReport {
                kind: TypeKind::Inconclusive,
                t_estimate: None,
                not_finite: false,
                witness: None,
                m_z_samples: vec![],
                search_exhausted: true,
                note: "no disc was evaluable".into(),
            })
        }
    };

    if not_finite {
        return Ok(TypeReport {
            kind: TypeKind::Inconclusive,
            t_estimate: None,
            not_finite: true,
            witness: Some(witness_disc),
            m_z_samples: vec![],
            search_exhausted: false,
            note: "vanishing-order sentinel along a witness disc; type is not finite".into(),
        });
    }

    // cross-validate the witness with an offset ladder
    let mut check = search.clone();
    check.ladder_t0 = search.ladder_t0 * T::of(2.0 / 3.0);
    let recheck = disc_numerator_order(nf, &witness_disc, &check)?;
    if recheck != witness_order {
        return Ok(TypeReport {
            kind: TypeKind::Inconclusive,
            t_estimate: None,
            not_finite: false,
            witness: Some(witness_disc),
            m_z_samples: vec![],
            search_exhausted: true,
            note: format!("witness order unstable under ladder shift: {witness_order:?} vs {recheck:?}"),
        });
    }

    let t = match witness_order {
        VanishingOrder::Finite(k) => {
            // the ratio k/den for the best disc; den = 1 for all witnesses kept
            (k as f64 / witness_den as f64).round() as u32
        }
        VanishingOrder::AtLeast(_) => unreachable!(),
    };
    Ok(TypeReport {
        kind: TypeKind::Finite(t),
        t_estimate: Some(t),
        not_finite: false,
        witness: Some(witness_disc),
        m_z_samples: vec![],
        search_exhausted: true,
        note: String::new(),
    })
}

/// Single-sample anisotropy exponent m_z = log(rho(az)/rho(z)) / log|a|.
pub fn m_z_estimate<T: Real>(
    log_rho: &dyn Fn(Cx<T>) -> Result<T>,
    a: Cx<T>,
    z: Cx<T>,
) -> Result<T> {
    Ok((log_rho(a * z)? - log_rho(z)?) / a.norm().ln())
}

/// The anisotropy exponents m_z = log(rho(az)/rho(z)) / log|a|, minimized
/// over a ladder of contraction factors `a`.
pub fn m_z_samples<T: Real>(
    log_rho: &dyn Fn(Cx<T>) -> Result<T>,
    z_ladder: &[T],
    a_moduli: &[T],
    a_phases: usize,
) -> Result<Vec<(T, T)>> {
    let z_phase = Complex::new(T::of(0.3).cos(), T::of(0.3).sin());
    let mut out = Vec::new();
    for &zr in z_ladder {
        let z = z_phase * Complex::new(zr, T::zero());
        let lz = log_rho(z)?;
        let mut m_min = T::infinity();
        for &am in a_moduli {
            for ph in 0..a_phases {
                let ang = T::of(ph as f64 * 2.0 * std::f64::consts::PI / a_phases as f64);
                let a = Complex::new(am * ang.cos(), am * ang.sin());
                let laz = log_rho(a * z)?;
                let m = (laz - lz) / am.ln();
                m_min = m_min.min(m);
            }
        }
        out.push((zr, m_min));
    }
    Ok(out)
}

/// Classify an infinite-type point as type I (anisotropy exponent grows
/// without bound) or leave it suspected of type II.
pub fn type_i_classifier<T: Real>(
    log_rho: &dyn Fn(Cx<T>) -> Result<T>,
    prior: &TypeReport<T>,
    tol: &Tolerances<T>,
) -> Result<(TypeKind, Vec<(T, T)>)> {
    if !prior.not_finite {
        return Err(Error::Precondition(
            "type-I classifier requires a non-finite sentinel from the type estimator".into(),
        ));
    }
    let z_ladder: Vec<T> = (0..6).map(|i| T::of(0.2 * 0.5f64.powi(i))).collect();
    let a_moduli: Vec<T> = vec![T::of(0.9), T::of(0.7), T::of(0.5)];
    let samples = m_z_samples(log_rho, &z_ladder, &a_moduli, 3)?;
    let need = T::of(2.0) * (T::one() - tol.mz);
    let mut doubling = true;
    for pair in samples.windows(2) {
        let (_, m_prev) = pair[0];
        let (_, m_next) = pair[1];
        let grows = m_next >= m_prev * need;
        if !grows {
            doubling = false;
            break;
        }
    }
    let kind = if doubling { TypeKind::InfiniteTypeI } else { TypeKind::InfiniteTypeIISuspect };
    Ok((kind, samples))
}

/// Scaled-sup series of the flat-boundary collapse test, computed in log
/// space: sup over the grid of rho(b11 z + b12 w)/b22 per index.
#[derive(Debug, Clone)]
pub struct CollapseSeries<T: Real> {
    /// (j, ln sup, sup); sup underflows to 0 harmlessly.
    pub per_j: Vec<(u32, T, T)>,
}

impl<T: Real> CollapseSeries<T> {
    pub fn final_sup(&self) -> T {
        self.per_j.last().map(|(_, _, s)| *s).unwrap_or(T::zero())
    }

    pub fn is_monotone_nonincreasing(&self) -> bool {
        self.per_j.windows(2).all(|p| p[1].1 <= p[0].1 + T::of(1e-12))
    }
}

pub fn collapse_check<T: Real>(
    log_rho: &dyn Fn(Cx<T>) -> Result<T>,
    seqs: &[(u32, Cx<T>, Cx<T>, T)],
    grid: &[CPair<T>],
) -> Result<CollapseSeries<T>> {
    if grid.is_empty() {
        return Err(Error::InsufficientGrid("empty collapse grid".into()));
    }
    let mut per_j = Vec::with_capacity(seqs.len());
    for &(j, b11, b12, b22) in seqs {
        if b22 <= T::zero() {
            return Err(Error::Precondition("collapse check needs positive b22".into()));
        }
        let mut sup_log = T::neg_infinity();
        for &(z, w) in grid {
            let x = b11 * z + b12 * w;
            if x.norm() < T::of(1e-280) {
                continue; // rho vanishes at the origin; no contribution to the sup
            }
            match log_rho(x) {
                Ok(l) => sup_log = sup_log.max(l - b22.ln()),
                Err(Error::NoiseFloor(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        let sup = if sup_log == T::neg_infinity() { T::zero() } else { sup_log.exp() };
        per_j.push((j, sup_log, sup));
    }
    Ok(CollapseSeries { per_j })
}

/// One gauged contraction-frame ratio row.
pub type RatioRow<T> = (u32, Cx<T>, Cx<T>, Cx<T>);

/// Fitted limit of the scaled boundary in the orbit-accumulation-point case.
#[derive(Debug, Clone)]
pub struct LimitFit<T: Real> {
    pub h: Cx<T>,
    pub c: Cx<T>,
    pub d: Cx<T>,
    pub residual: T,
    /// per-index gauged ratios (j, b21/b22, b11/b22^{1/k}, b12/b22^{1/k})
    pub ratios: Vec<RatioRow<T>>,
}

fn aitken<T: Real>(xs: &[Cx<T>]) -> Cx<T> {
    let n = xs.len();
    if n < 3 {
        return xs[n - 1];
    }
    let (x0, x1, x2) = (xs[n - 3], xs[n - 2], xs[n - 1]);
    let denom = x2 - x1 - x1 + x0;
    if denom.norm() < T::of(1e-14) {
        return x2;
    }
    let d = x2 - x1;
    x2 - d * d / denom
}

fn cauchy_ok<T: Real>(xs: &[Cx<T>], tol: T) -> bool {
    if xs.len() < 3 {
        return false;
    }
    let n = xs.len();
    let d_last = (xs[n - 1] - xs[n - 2]).norm();
    let d_prev = (xs[n - 2] - xs[n - 3]).norm();
    let scale = T::one() + xs[n - 1].norm();
    d_last <= tol * scale && d_last <= d_prev * T::of(1.2) + T::of(1e-13) * scale
}

/// Fit the limit defining relation Im(h z' + w') = rho_k(c z' + d w') from
/// the contraction frames along the index window, and measure the residual
/// against the actual scaled boundary at j_max.
pub fn limit_boundary_fit<T: Real>(
    family: &MapFamily<T>,
    q: CPair<T>,
    nf: &NormalForm<T>,
    k: u32,
    j_min: u32,
    j_max: u32,
    tol: &Tolerances<T>,
) -> Result<LimitFit<T>> {
    if k == 0 {
        return Err(Error::Precondition("finite type k >= 1 required for the fit".into()));
    }
    if j_max - j_min < 2 {
        return Err(Error::Precondition("need at least 3 indices for the fit".into()));
    }
    let u = &nf.frame;
    let u_inv = Jacobian2::new(u.a11.conj(), u.a21.conj(), u.a12.conj(), u.a22.conj(), q);

    let mut r1s = Vec::new();
    let mut r2s = Vec::new();
    let mut r3s = Vec::new();
    let mut b22s: Vec<T> = Vec::new();
    let mut last_gauged: Option<Jacobian2<T>> = None;
    for j in j_min..=j_max {
        let jac = jacobian(family, j, q)?;
        let b = u.matmul(&jac).matmul(&u_inv);
        // gauge: rotate each column so the pivot entries are real positive
        let phase_of = |x: Cx<T>| {
            if x.norm() < T::min_positive_value() {
                Complex::new(T::one(), T::zero())
            } else {
                x.conj() / Complex::new(x.norm(), T::zero())
            }
        };
        let s1 = if b.a11.norm() > T::of(1e-13) { phase_of(b.a11) } else { phase_of(b.a21) };
        let s2 = if b.a22.norm() > T::of(1e-13) { phase_of(b.a22) } else { phase_of(b.a12) };
        let g = Jacobian2::new(b.a11 * s1, b.a12 * s2, b.a21 * s1, b.a22 * s2, q);
        let b22 = g.a22.re;
        if b22 <= T::zero() {
            return Err(Error::NonConvergentRatio("gauged frame has no positive contraction entry".into()));
        }
        let root = (b22.ln() / T::of(k as f64)).exp();
        r1s.push(g.a21 / Complex::new(b22, T::zero()));
        r2s.push(g.a11 / Complex::new(root, T::zero()));
        r3s.push(g.a12 / Complex::new(root, T::zero()));
        b22s.push(b22);
        last_gauged = Some(g);
    }
    // the frame must actually contract
    let contracting = b22s.windows(2).all(|p| p[1] < p[0]) && b22s[b22s.len() - 1] < T::of(0.5);
    if !contracting {
        return Err(Error::NonConvergentRatio(
            "contraction entry b22 does not shrink along the window: no boundary accumulation".into(),
        ));
    }
    for (name, xs) in [("b21/b22", &r1s), ("b11/b22^(1/k)", &r2s), ("b12/b22^(1/k)", &r3s)] {
        if !cauchy_ok(xs, tol.fit_cauchy) {
            return Err(Error::NonConvergentRatio(format!("ratio {name} fails the Cauchy criterion")));
        }
    }
    nf.check_k_homogeneous(k)?;

    let h = aitken(&r1s);
    let c = aitken(&r2s);
    let d = aitken(&r3s);

    // residual on the scaled boundary at j_max, sampled through pre-scaled
    // boundary parameters so the scaled window stays O(1)
    let g = last_gauged.expect("window is nonempty");
    let g_inv = g.inv(T::min_positive_value())?;
    let b11_mag = g.a11.norm().max(T::min_positive_value());
    let b22_mag = g.a22.re;
    let mut residual = T::zero();
    let n = 5usize;
    for ix in 0..n {
        for iy in 0..n {
            for iu in 0..n {
                let s = |k: usize| T::of(-1.0 + 2.0 * k as f64 / (n - 1) as f64);
                let zeta_hat = Complex::new(s(ix), s(iy));
                let u_hat = s(iu);
                let zeta = zeta_hat * Complex::new(b11_mag, T::zero());
                let uu = b22_mag * u_hat;
                let v = nf.rho(zeta, uu)?;
                let y = (zeta, Complex::new(uu, v));
                let scaled = g_inv.apply(y);
                let lhs = (h * scaled.0 + scaled.1).im;
                let rhs = nf.rho_k(k, c * scaled.0 + d * scaled.1)?;
                residual = residual.max((lhs - rhs).abs());
            }
        }
    }

    let ratios = (j_min..=j_max)
        .zip(r1s.iter().zip(r2s.iter().zip(r3s.iter())))
        .map(|(j, (r1, (r2, r3)))| (j, *r1, *r2, *r3))
        .collect();
    Ok(LimitFit { h, c, d, residual, ratios })
}
