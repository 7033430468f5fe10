//! Low-discrepancy and seeded random sampling helpers.

use crate::scalar::Real;

/// Radical-inverse (van der Corput) value of `index` in the given base.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut result = 0.0;
    let mut frac = inv;
    while index > 0 {
        result += (index % base) as f64 * frac;
        index /= base;
        frac *= inv;
    }
    result
}

/// k-th Halton point in [0,1)^4 (bases 2, 3, 5, 7), 1-based index.
pub fn halton4(k: u64) -> [f64; 4] {
    [
        radical_inverse(k, 2),
        radical_inverse(k, 3),
        radical_inverse(k, 5),
        radical_inverse(k, 7),
    ]
}

/// Map a unit 4-cube sample to [-1,1]^4 scaled by `radius`.
pub fn centered<T: Real>(h: [f64; 4], radius: T) -> [T; 4] {
    let m = |x: f64| T::of(2.0 * x - 1.0) * radius;
    [m(h[0]), m(h[1]), m(h[2]), m(h[3])]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base2_prefix() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }

    #[test]
    fn halton_points_fill_the_cube() {
        let mut mins = [1.0f64; 4];
        let mut maxs = [0.0f64; 4];
        for k in 1..=512 {
            let h = halton4(k);
            for d in 0..4 {
                mins[d] = mins[d].min(h[d]);
                maxs[d] = maxs[d].max(h[d]);
            }
        }
        for d in 0..4 {
            assert!(mins[d] < 0.05, "dim {d} min {}", mins[d]);
            assert!(maxs[d] > 0.95, "dim {d} max {}", maxs[d]);
        }
    }
}
