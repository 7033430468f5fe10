//! CP^2 embedding, Fubini-Study distances, and Hausdorff limit tracking.
//!
//! Scaled image domains are compared as finite point clouds embedded through
//! (z, w) -> [1, z, w]. Everything is deterministic for a fixed seed.

use crate::domain::DomainSpec;
use crate::dsl::Tolerances;
use crate::error::{Error, Result};
use crate::sampling::{centered, halton4};
use crate::scalar::{ls_slope, CPair, Cx, Real};
use crate::scaling::ScalingStep;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointLabel {
    Interior,
    Boundary,
}

/// A sample of a domain in the original (z, w) coordinates.
#[derive(Debug, Clone)]
pub struct DomainSample<T: Real> {
    pub points: Vec<CPair<T>>,
    pub labels: Vec<PointLabel>,
    pub seed: u64,
}

/// A labeled point cloud on the unit sphere of C^3 (homogeneous representatives).
#[derive(Debug, Clone)]
pub struct CloudCP2<T: Real> {
    pub points: Vec<[Cx<T>; 3]>,
    pub labels: Vec<PointLabel>,
    pub seed: u64,
}

/// [1, z, w] normalized to a unit representative.
pub fn embed<T: Real>(p: CPair<T>) -> Result<[Cx<T>; 3]> {
    let (z, w) = p;
    if !(z.re.is_finite() && z.im.is_finite() && w.re.is_finite() && w.im.is_finite()) {
        return Err(Error::NonFinite("embed".into()));
    }
    let one = Complex::new(T::one(), T::zero());
    let norm = (T::one() + z.norm_sqr() + w.norm_sqr()).sqrt();
    let inv = Complex::new(norm, T::zero()).inv();
    Ok([one * inv, z * inv, w * inv])
}

/// Geodesic Fubini-Study distance: arccos(|<p, q>| / (|p| |q|)).
///
/// Representatives are kept unit-normalized, but the explicit division keeps
/// the distance of a point to itself exactly zero (arccos is steep at 1, so
/// a last-ulp defect would otherwise inflate into ~1e-8).
pub fn fs_dist<T: Real>(p: &[Cx<T>; 3], q: &[Cx<T>; 3]) -> T {
    let mut inner = Complex::new(T::zero(), T::zero());
    for k in 0..3 {
        inner += p[k] * q[k].conj();
    }
    let np = p[0].norm_sqr() + p[1].norm_sqr() + p[2].norm_sqr();
    let nq = q[0].norm_sqr() + q[1].norm_sqr() + q[2].norm_sqr();
    let c = (inner.norm_sqr() / (np * nq)).min(T::one());
    c.sqrt().min(T::one()).acos()
}

impl<T: Real> DomainSample<T> {
    pub fn embed(&self) -> Result<CloudCP2<T>> {
        let mut points = Vec::with_capacity(self.points.len());
        for &p in &self.points {
            points.push(embed(p)?);
        }
        Ok(CloudCP2 { points, labels: self.labels.clone(), seed: self.seed })
    }

    /// Push the sample through a scaled map, keeping labels.
    pub fn map_through(&self, step: &ScalingStep<T>) -> Result<DomainSample<T>> {
        let mut points = Vec::with_capacity(self.points.len());
        for &p in &self.points {
            points.push(step.apply(p)?);
        }
        Ok(DomainSample { points, labels: self.labels.clone(), seed: self.seed })
    }
}

/// Directed Hausdorff term sup_{a in A} inf_{b in B}, exact over the finite
/// samples. The scan maximizes |<p, q>|^2 (a monotone surrogate of the
/// distance) so the inner loop is arccos-free and can exit early.
fn directed<T: Real>(a: &CloudCP2<T>, b: &CloudCP2<T>) -> T {
    let norm_sqr = |p: &[Cx<T>; 3]| p[0].norm_sqr() + p[1].norm_sqr() + p[2].norm_sqr();
    let inner_sqr = |p: &[Cx<T>; 3], q: &[Cx<T>; 3]| {
        let mut acc = Complex::new(T::zero(), T::zero());
        for k in 0..3 {
            acc += p[k] * q[k].conj();
        }
        acc.norm_sqr()
    };
    let nb: Vec<T> = b.points.iter().map(norm_sqr).collect();
    // min over a of (max over b of normalized |<p,q>|^2); smaller = farther
    let mut worst_cos2 = T::infinity();
    for p in &a.points {
        let np = norm_sqr(p);
        let mut best = T::zero();
        for (q, nq) in b.points.iter().zip(nb.iter()) {
            let c = inner_sqr(p, q) / (np * *nq);
            if c > best {
                best = c;
                if best >= worst_cos2 {
                    break;
                }
            }
        }
        if best < worst_cos2 {
            worst_cos2 = best;
        }
    }
    if worst_cos2 == T::infinity() {
        return T::zero();
    }
    worst_cos2.min(T::one()).sqrt().min(T::one()).acos()
}

/// Symmetric Hausdorff distance in the Fubini-Study metric.
pub fn hausdorff<T: Real>(a: &CloudCP2<T>, b: &CloudCP2<T>) -> Result<T> {
    if a.points.is_empty() || b.points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(directed(a, b).max(directed(b, a)))
}

/// Region to draw samples from: a polydisc around a center.
#[derive(Debug, Clone, Copy)]
pub struct SampleRegion<T: Real> {
    pub center: CPair<T>,
    pub radius: T,
}

/// Low-discrepancy interior samples plus bisection boundary points.
pub fn sample_domain<T: Real>(
    member: &dyn Fn(CPair<T>) -> bool,
    region: SampleRegion<T>,
    n_interior: usize,
    n_boundary: usize,
    seed: u64,
) -> Result<DomainSample<T>> {
    let mut points = Vec::with_capacity(n_interior + n_boundary);
    let mut labels = Vec::with_capacity(n_interior + n_boundary);

    // Halton scan; the seed offsets the start so different seeds draw
    // different low-discrepancy subsequences.
    let start = 1 + (seed % 8192) * 17;
    let mut k = start;
    let budget = start + 400 * (n_interior.max(1) as u64) + 10_000;
    while points.len() < n_interior && k < budget {
        let h = centered(halton4(k), region.radius);
        let p = (
            region.center.0 + Complex::new(h[0], h[1]),
            region.center.1 + Complex::new(h[2], h[3]),
        );
        if member(p) {
            points.push(p);
            labels.push(PointLabel::Interior);
        }
        k += 1;
    }
    if points.is_empty() {
        return Err(Error::NoInteriorFound);
    }
    let n_found = points.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut added = 0usize;
    let mut attempts = 0usize;
    while added < n_boundary && attempts < 50 * n_boundary.max(1) {
        attempts += 1;
        let anchor = points[rng.gen_range(0..n_found)];
        // random direction on the unit 3-sphere of R^4
        let mut d = [T::zero(); 4];
        let mut nrm = T::zero();
        for item in d.iter_mut() {
            let g: f64 = rng.gen::<f64>() * 2.0 - 1.0;
            *item = T::of(g);
            nrm += *item * *item;
        }
        let nrm = nrm.sqrt();
        if nrm == T::zero() {
            continue;
        }
        let dir = (
            Complex::new(d[0] / nrm, d[1] / nrm),
            Complex::new(d[2] / nrm, d[3] / nrm),
        );
        // march outward until the predicate flips
        let mut t_lo = T::zero();
        let mut t_hi = region.radius * T::of(0.05);
        let cap = region.radius * T::of(4.0);
        let at = |t: T| (anchor.0 + dir.0 * t, anchor.1 + dir.1 * t);
        let mut exited = false;
        while t_hi < cap {
            if !member(at(t_hi)) {
                exited = true;
                break;
            }
            t_lo = t_hi;
            t_hi *= T::of(2.0);
        }
        if !exited {
            continue;
        }
        for _ in 0..60 {
            let mid = (t_lo + t_hi) / T::of(2.0);
            if member(at(mid)) {
                t_lo = mid;
            } else {
                t_hi = mid;
            }
        }
        points.push(at((t_lo + t_hi) / T::of(2.0)));
        labels.push(PointLabel::Boundary);
        added += 1;
    }

    Ok(DomainSample { points, labels, seed })
}

/// Convenience: sample a `DomainSpec` near a center.
pub fn sample_spec<T: Real>(
    domain: &DomainSpec<T>,
    region: SampleRegion<T>,
    n_interior: usize,
    n_boundary: usize,
    seed: u64,
) -> Result<DomainSample<T>> {
    let member = |p: CPair<T>| domain.is_member(p);
    sample_domain(&member, region, n_interior, n_boundary, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitVerdict {
    Cauchy,
    Divergent,
    Inconclusive,
}

impl LimitVerdict {
    pub fn name(self) -> &'static str {
        match self {
            LimitVerdict::Cauchy => "cauchy",
            LimitVerdict::Divergent => "divergent",
            LimitVerdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone)]
pub struct LimitEstimate<T: Real> {
    /// (j, Hausdorff distance between consecutive scaled clouds).
    pub distance_series: Vec<(u32, T)>,
    /// (j, distance to the pushed-forward target cloud), when a target map is known.
    pub target_series: Option<Vec<(u32, T)>>,
    pub verdict: LimitVerdict,
}

/// Track the Hausdorff limit of the scaled clouds along the index window.
pub fn track_limit<T: Real>(
    steps: &[ScalingStep<T>],
    base: &DomainSample<T>,
    target: Option<&CloudCP2<T>>,
    tol: &Tolerances<T>,
) -> Result<LimitEstimate<T>> {
    if steps.is_empty() {
        return Err(Error::Precondition("no scaling steps to track".into()));
    }
    let mut clouds = Vec::with_capacity(steps.len());
    for step in steps {
        clouds.push((step.j, base.map_through(step)?.embed()?));
    }
    let mut distance_series = Vec::new();
    for pair in clouds.windows(2) {
        let d = hausdorff(&pair[0].1, &pair[1].1)?;
        distance_series.push((pair[1].0, d));
    }
    let target_series = match target {
        Some(t) => {
            let mut out = Vec::new();
            for (j, c) in &clouds {
                out.push((*j, hausdorff(c, t)?));
            }
            Some(out)
        }
        None => None,
    };
    let verdict = limit_verdict(&distance_series, tol);
    Ok(LimitEstimate { distance_series, target_series, verdict })
}

fn limit_verdict<T: Real>(series: &[(u32, T)], tol: &Tolerances<T>) -> LimitVerdict {
    if series.is_empty() {
        return LimitVerdict::Inconclusive;
    }
    let ds: Vec<T> = series.iter().map(|(_, d)| d).copied().collect();
    let last = ds[ds.len() - 1];
    // arccos near 1 cannot resolve distances below ~sqrt(2 eps); anything
    // at that floor is converged
    if last <= T::of(4.0) * T::epsilon().sqrt() {
        return LimitVerdict::Cauchy;
    }
    let half = ds.len().div_ceil(2).max(2).min(ds.len());
    let window = &ds[ds.len() - half..];
    let logs: Vec<T> = window.iter().map(|d| d.max(T::min_positive_value()).ln()).collect();
    let slope = ls_slope(&logs);
    if slope < -T::of(0.05) && last < tol.hausdorff {
        return LimitVerdict::Cauchy;
    }
    let rises = window.windows(2).filter(|p| p[1] > p[0]).count();
    if rises * 2 > window.len() - 1 && slope > T::of(0.05) {
        return LimitVerdict::Divergent;
    }
    LimitVerdict::Inconclusive
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn cpx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn embed_examples() {
        let e = embed::<f64>((cpx(0.0, 0.0), cpx(0.0, 0.0))).unwrap();
        assert_eq!(e[0], cpx(1.0, 0.0));
        assert_eq!(e[1], cpx(0.0, 0.0));

        let e = embed::<f64>((cpx(3.0, 0.0), cpx(4.0, 0.0))).unwrap();
        let s = 26.0f64.sqrt();
        assert!((e[0].re - 1.0 / s).abs() < 1e-15);
        assert!((e[1].re - 3.0 / s).abs() < 1e-15);
        assert!((e[2].re - 4.0 / s).abs() < 1e-15);

        // (0, n) drifts to [0, 0, 1]
        let inf = [cpx(0.0, 0.0), cpx(0.0, 0.0), cpx(1.0, 0.0)];
        let mut prev = f64::INFINITY;
        for n in [10.0, 100.0, 1000.0] {
            let e = embed::<f64>((cpx(0.0, 0.0), cpx(n, 0.0))).unwrap();
            let d = fs_dist(&e, &inf);
            assert!(d < prev);
            prev = d;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn fs_distance_basics() {
        let a = [cpx(1.0, 0.0), cpx(0.0, 0.0), cpx(0.0, 0.0)];
        let b = [cpx(0.0, 0.0), cpx(1.0, 0.0), cpx(0.0, 0.0)];
        assert_eq!(fs_dist(&a, &a), 0.0);
        assert!((fs_dist(&a, &b) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        // representative phase does not matter
        let b_rot = [cpx(0.0, 0.0), cpx(0.0, 1.0), cpx(0.0, 0.0)];
        assert!((fs_dist(&a, &b) - fs_dist(&a, &b_rot)).abs() < 1e-15);
    }

    #[test]
    fn hausdorff_basics() {
        let a = CloudCP2::<f64> {
            points: vec![[cpx(1.0, 0.0), cpx(0.0, 0.0), cpx(0.0, 0.0)]],
            labels: vec![PointLabel::Interior],
            seed: 0,
        };
        let b = CloudCP2::<f64> {
            points: vec![[cpx(0.0, 0.0), cpx(1.0, 0.0), cpx(0.0, 0.0)]],
            labels: vec![PointLabel::Interior],
            seed: 0,
        };
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        assert!((hausdorff(&a, &b).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        let empty = CloudCP2::<f64> { points: vec![], labels: vec![], seed: 0 };
        assert!(matches!(hausdorff(&a, &empty), Err(Error::EmptyCloud)));
    }

    #[test]
    fn subset_gives_one_sided_distance() {
        // A inside B: d(A,B) equals the directed term from B to A
        let mk = |pts: Vec<(f64, f64)>| CloudCP2::<f64> {
            points: pts
                .iter()
                .map(|&(x, y)| embed((cpx(x, y), cpx(0.0, 0.0))).unwrap())
                .collect(),
            labels: vec![PointLabel::Interior; pts.len()],
            seed: 0,
        };
        let a = mk(vec![(0.0, 0.0), (0.1, 0.0)]);
        let b = mk(vec![(0.0, 0.0), (0.1, 0.0), (0.5, 0.5)]);
        let d = hausdorff(&a, &b).unwrap();
        assert!((d - directed(&b, &a)).abs() < 1e-15);
    }

    #[test]
    fn bidisc_sampling_respects_membership_and_seed() {
        let member = |p: (Complex64, Complex64)| p.0.norm() < 1.0 && p.1.norm() < 1.0;
        let region = SampleRegion { center: (cpx(0.0, 0.0), cpx(0.0, 0.0)), radius: 1.0 };
        let s1 = sample_domain(&member, region, 100, 20, 7).unwrap();
        let s2 = sample_domain(&member, region, 100, 20, 7).unwrap();
        assert_eq!(s1.points.len(), 120);
        for (p, l) in s1.points.iter().zip(s1.labels.iter()) {
            match l {
                PointLabel::Interior => assert!(member(*p)),
                PointLabel::Boundary => {
                    let res = (p.0.norm() - 1.0).abs().min((p.1.norm() - 1.0).abs());
                    assert!(res < 1e-9, "boundary residual {res}");
                }
            }
        }
        // bit-identical reproduction under the same seed
        for (p, q) in s1.points.iter().zip(s2.points.iter()) {
            assert_eq!(p, q);
        }
    }
}
