//! Polydisc sample grids.
//!
//! A grid is the tensor product of two square lattices, one per complex
//! coordinate, each filtered to the disc of the requested radius. A 5x5
//! lattice keeps 21 points per coordinate (the four corners fall outside the
//! disc). Optional jitter adds seeded uniform samples per 4-cell for
//! sup-style scans.

use crate::domain::DomainSpec;
use crate::scalar::{CPair, Cx, Real};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct PolydiscGrid<T: Real> {
    pub center: CPair<T>,
    pub radius: T,
    pub points: Vec<CPair<T>>,
}

/// Axis lattice on [-radius, radius] with n points, filtered to the disc.
fn disc_lattice<T: Real>(center: Cx<T>, radius: T, n: usize) -> Vec<Cx<T>> {
    let mut out = Vec::new();
    let n = n.max(2);
    let step = T::of(2.0) / T::of((n - 1) as f64);
    for ix in 0..n {
        for iy in 0..n {
            let x = (T::of(ix as f64) * step - T::one()) * radius;
            let y = (T::of(iy as f64) * step - T::one()) * radius;
            if (x * x + y * y).sqrt() <= radius * (T::one() + T::of(1e-12)) {
                out.push(center + Complex::new(x, y));
            }
        }
    }
    out
}

impl<T: Real> PolydiscGrid<T> {
    /// Tensor grid around `center`, keeping only members of `domain`.
    pub fn new(center: CPair<T>, radius: T, n: usize, domain: Option<&DomainSpec<T>>) -> Self {
        let zs = disc_lattice(center.0, radius, n);
        let ws = disc_lattice(center.1, radius, n);
        let mut points = Vec::with_capacity(zs.len() * ws.len());
        for &z in &zs {
            for &w in &ws {
                let p = (z, w);
                if domain.is_none_or(|d| d.is_member(p)) {
                    points.push(p);
                }
            }
        }
        PolydiscGrid { center, radius, points }
    }

    /// Seeded uniform jitter: `per_cell` samples per 4-dimensional lattice
    /// cell, kept when inside both discs (and the domain, when given).
    pub fn with_jitter(mut self, n: usize, per_cell: usize, seed: u64, domain: Option<&DomainSpec<T>>) -> Self {
        if per_cell == 0 {
            return self;
        }
        let n = n.max(2);
        let cells = n - 1;
        let step = self.radius * T::of(2.0) / T::of(cells as f64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lo_z = self.center.0 - Complex::new(self.radius, self.radius);
        let lo_w = self.center.1 - Complex::new(self.radius, self.radius);
        let mut extra = Vec::new();
        for cz_x in 0..cells {
            for cz_y in 0..cells {
                for cw_x in 0..cells {
                    for cw_y in 0..cells {
                        for _ in 0..per_cell {
                            let r = |rng: &mut ChaCha8Rng, k: usize| {
                                T::of(k as f64 + rng.gen::<f64>()) * step
                            };
                            let z = lo_z + Complex::new(r(&mut rng, cz_x), r(&mut rng, cz_y));
                            let w = lo_w + Complex::new(r(&mut rng, cw_x), r(&mut rng, cw_y));
                            let in_discs = (z - self.center.0).norm() <= self.radius
                                && (w - self.center.1).norm() <= self.radius;
                            if in_discs && domain.is_none_or(|d| d.is_member((z, w))) {
                                extra.push((z, w));
                            }
                        }
                    }
                }
            }
        }
        self.points.extend(extra);
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
