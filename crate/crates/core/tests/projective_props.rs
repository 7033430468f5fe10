//! Metric properties of the projective embedding and seed stability of the
//! limit tracking.

use holoscale_core::projective::{
    embed, fs_dist, hausdorff, sample_spec, track_limit, CloudCP2, PointLabel, SampleRegion,
};
use holoscale_core::scaling::frankel_scale;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cpx(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn random_triple(rng: &mut ChaCha8Rng) -> [C; 3] {
    loop {
        let p = [
            cpx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            cpx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            cpx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        ];
        let n = (p[0].norm_sqr() + p[1].norm_sqr() + p[2].norm_sqr()).sqrt();
        if n > 0.3 {
            let inv = cpx(1.0 / n, 0.0);
            return [p[0] * inv, p[1] * inv, p[2] * inv];
        }
    }
}

/// Metric axioms on 10^4 random triples: symmetry is exact, the triangle
/// inequality holds to 1e-12, self distance vanishes.
#[test]
fn fs_metric_axioms() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..10_000 {
        let p = random_triple(&mut rng);
        let q = random_triple(&mut rng);
        let r = random_triple(&mut rng);
        let dpq = fs_dist(&p, &q);
        let dqp = fs_dist(&q, &p);
        assert_eq!(dpq, dqp, "symmetry must be exact");
        assert_eq!(fs_dist(&p, &p), 0.0);
        assert!((0.0..=std::f64::consts::FRAC_PI_2 + 1e-15).contains(&dpq));
        let dpr = fs_dist(&p, &r);
        let dqr = fs_dist(&q, &r);
        assert!(dpr <= dpq + dqr + 1e-12, "triangle violated: {dpr} > {dpq} + {dqr}");
    }
}

/// Unitary invariance of the distance.
#[test]
fn fs_distance_is_unitary_invariant() {
    // build a unitary from two reflections: U = I - 2 v v* (Householder)
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let v = random_triple(&mut rng);
    let apply_u = |p: &[C; 3]| -> [C; 3] {
        let inner = p[0] * v[0].conj() + p[1] * v[1].conj() + p[2] * v[2].conj();
        let two = cpx(2.0, 0.0);
        [
            p[0] - two * inner * v[0],
            p[1] - two * inner * v[1],
            p[2] - two * inner * v[2],
        ]
    };
    for _ in 0..100 {
        let p = random_triple(&mut rng);
        let q = random_triple(&mut rng);
        let d0 = fs_dist(&p, &q);
        let d1 = fs_dist(&apply_u(&p), &apply_u(&q));
        assert!((d0 - d1).abs() < 1e-12, "{d0} vs {d1}");
    }
}

/// Embedding separates points at the sampling resolution.
#[test]
fn embed_is_injective_on_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..2000 {
        let p = (cpx(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
                 cpx(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)));
        let dz = cpx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let dw = cpx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let scale = rng.gen_range(1e-8..1e-2);
        let q = (p.0 + dz * cpx(scale, 0.0), p.1 + dw * cpx(scale, 0.0));
        let sep = ((q.0 - p.0).norm_sqr() + (q.1 - p.1).norm_sqr()).sqrt();
        if sep > 1e-9 {
            let d = fs_dist(&embed(p).unwrap(), &embed(q).unwrap());
            assert!(d > 0.0, "embed collapsed points separated by {sep}");
        }
    }
}

/// Hausdorff distance is a pseudometric on clouds: symmetric, zero on equal
/// clouds, triangle inequality on random cloud triples.
#[test]
fn hausdorff_pseudometric() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut random_cloud = |n: usize| -> CloudCP2<f64> {
        let points: Vec<[C; 3]> = (0..n).map(|_| random_triple(&mut rng)).collect();
        CloudCP2 { labels: vec![PointLabel::Interior; points.len()], points, seed: 0 }
    };
    for _ in 0..40 {
        let a = random_cloud(30);
        let b = random_cloud(25);
        let c = random_cloud(20);
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        assert_eq!(hausdorff(&a, &b).unwrap(), hausdorff(&b, &a).unwrap());
        let dab = hausdorff(&a, &b).unwrap();
        let dbc = hausdorff(&b, &c).unwrap();
        let dac = hausdorff(&a, &c).unwrap();
        assert!(dac <= dab + dbc + 1e-12);
    }
}

/// Boundary points of the half-plane product land on one of the two
/// boundary faces to bisection accuracy.
#[test]
fn half_plane_product_boundary_residuals() {
    let member = |p: (C, C)| p.0.norm() < 1.0 && p.1.re > -0.5;
    let region = SampleRegion { center: (cpx(0.0, 0.0), cpx(0.5, 0.0)), radius: 2.0 };
    let sample = holoscale_core::projective::sample_domain(&member, region, 200, 80, 7).unwrap();
    let mut boundary_seen = 0;
    for (p, l) in sample.points.iter().zip(sample.labels.iter()) {
        if *l == PointLabel::Boundary {
            boundary_seen += 1;
            let r1 = (p.0.norm() - 1.0).abs();
            let r2 = (p.1.re + 0.5).abs();
            assert!(r1.min(r2) < 1e-12, "boundary residual {} / {}", r1, r2);
        } else {
            assert!(member(*p));
        }
    }
    assert_eq!(boundary_seen, 80);
}

/// The tracking verdict does not depend on the sampling seed.
#[test]
fn track_limit_verdict_is_seed_stable() {
    let src = std::fs::read_to_string(
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus/bidisc.cdl"),
    )
    .unwrap();
    let cfg: holoscale_core::Config = holoscale_core::dsl::parse_config(&src, "bidisc").unwrap();
    let mut verdicts = Vec::new();
    for seed in [7u64, 1234] {
        let steps: Vec<_> = (cfg.j_min..=cfg.j_max)
            .map(|j| frankel_scale(&cfg.family, cfg.q, j, &cfg.tol).unwrap())
            .collect();
        let region = SampleRegion { center: cfg.q, radius: cfg.cloud.radius };
        let sample = sample_spec(&cfg.domain, region, 600, 150, seed).unwrap();
        let est = track_limit(&steps, &sample, None, &cfg.tol).unwrap();
        verdicts.push(est.verdict);
    }
    assert_eq!(verdicts[0], verdicts[1]);
}
