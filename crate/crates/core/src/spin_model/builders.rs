use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use serde::{Deserialize, Serialize};

use super::{Lattice, QuadraticModel};
use crate::error::{Error, Result};

/// Which boundary sides a node lies on. Corners lie on both.
pub fn boundary_sides(lattice: &Lattice, i: usize) -> (bool, bool) {
    let (row, col) = lattice.coords(i);
    let left_right = col == 0 || col + 1 == lattice.n1();
    let top_bottom = row == 0 || row + 1 == lattice.n2();
    (left_right, top_bottom)
}

/// Sign of the unshifted side forcing in the rectangular example.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SidePolarity {
    /// `+1 + c` on left/right, `-1 + c` on top/bottom. With `n1 < n2` this
    /// makes the +1-dominant profile the heavier mode.
    #[default]
    PositiveLeftRight,
    /// `-1 + c` on left/right, `+1 + c` on top/bottom.
    NegativeLeftRight,
}

/// Square `n x n` Ising model with noisy boundary forcing: `-1 + noise * N(0,1)`
/// on the left/right columns and `+1 + noise * N(0,1)` on the top/bottom rows.
///
/// A corner lies on one vertical and one horizontal side and receives both
/// terms, so its noise-free forcing is zero and the noise-free model is exactly
/// invariant under the transpose double-flip. Gaussian draws come from a
/// ChaCha8 stream seeded with `seed`, taken in node order.
pub fn build_example1(n: usize, beta: f64, noise_scale: f64, seed: u64) -> Result<QuadraticModel> {
    if n < 3 {
        return Err(Error::InvalidGeometry(format!(
            "example 1 needs n >= 3, got {n}"
        )));
    }
    if !noise_scale.is_finite() || noise_scale < 0.0 {
        return Err(Error::InvalidInput(format!(
            "noise scale must be finite and non-negative, got {noise_scale}"
        )));
    }
    let lattice = Lattice::square(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise = move || -> f64 {
        let z: f64 = StandardNormal.sample(&mut rng);
        noise_scale * z
    };
    let field = (0..lattice.len())
        .map(|i| {
            let (row, col) = lattice.coords(i);
            let mut h = 0.0;
            if col == 0 || col + 1 == n {
                h += -1.0 + noise();
            }
            if row == 0 || row + 1 == n {
                h += 1.0 + noise();
            }
            h
        })
        .collect();
    QuadraticModel::from_lattice(&lattice, field, beta)
}

/// Side forcing `+-1 + c`, zero inside, with the shift `c` chosen so the field
/// sums to zero. A corner receives both side terms.
///
/// Everything is computed as integer ratios over `#LR + #TB`, so the sum is
/// exact up to the final division.
pub fn zero_mean_side_forcing(lattice: &Lattice, polarity: SidePolarity) -> Vec<f64> {
    let sides: Vec<(bool, bool)> = (0..lattice.len())
        .map(|i| boundary_sides(lattice, i))
        .collect();
    let lr = sides.iter().filter(|s| s.0).count() as i64;
    let tb = sides.iter().filter(|s| s.1).count() as i64;
    let (sign_lr, sign_tb) = match polarity {
        SidePolarity::PositiveLeftRight => (1, -1),
        SidePolarity::NegativeLeftRight => (-1, 1),
    };
    let den = lr + tb;
    // c = num / den
    let num = -(sign_lr * lr + sign_tb * tb);
    sides
        .iter()
        .map(|&(on_lr, on_tb)| {
            let mut k = 0;
            if on_lr {
                k += sign_lr * den + num;
            }
            if on_tb {
                k += sign_tb * den + num;
            }
            k as f64 / den as f64
        })
        .collect()
}

/// Rectangular `n1 x n2` Ising model with zero-mean side forcing of the
/// default polarity.
pub fn build_example2(n1: usize, n2: usize, beta: f64) -> Result<QuadraticModel> {
    build_example2_with(n1, n2, beta, SidePolarity::default())
}

pub fn build_example2_with(
    n1: usize,
    n2: usize,
    beta: f64,
    polarity: SidePolarity,
) -> Result<QuadraticModel> {
    if n1 < 3 || n2 < 3 {
        return Err(Error::InvalidGeometry(format!(
            "example 2 needs n1, n2 >= 3, got {n1}x{n2}"
        )));
    }
    let lattice = Lattice::new(n1, n2)?;
    let field = zero_mean_side_forcing(&lattice, polarity);
    QuadraticModel::from_lattice(&lattice, field, beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn transpose(n: usize, i: usize) -> usize {
        (i % n) * n + i / n
    }

    #[test]
    fn example1_is_deterministic_per_seed() {
        let a = build_example1(8, 0.8, 0.5, 42).unwrap();
        let b = build_example1(8, 0.8, 0.5, 42).unwrap();
        let c = build_example1(8, 0.8, 0.5, 43).unwrap();
        assert_eq!(a.field(), b.field());
        assert_ne!(a.field(), c.field());
    }

    #[test]
    fn example1_noise_free_field_is_antisymmetric_under_transpose() {
        let n = 32;
        let m = build_example1(n, 0.8, 0.0, 1).unwrap();
        let h = m.field();
        for i in 0..n * n {
            assert_eq!(h[transpose(n, i)], -h[i], "node {i}");
        }
        assert_eq!(h[1], 1.0);
        assert_eq!(h[n], -1.0);
        assert_eq!(h[0], 0.0);
        assert_eq!(h[n + 1], 0.0);
    }

    #[test]
    fn example1_structure() {
        let m = build_example1(32, 0.8, 0.5, 9).unwrap();
        assert_eq!(m.len(), 1024);
        assert_eq!(m.nnz(), 2 * (2 * 32 * 31));
        assert_eq!(m.beta(), 0.8);
        assert_eq!(m.shape(), Some((32, 32)));
        assert!(build_example1(2, 0.8, 0.5, 0).is_err());
    }

    #[test]
    fn example2_full_size_counts() {
        let lat = Lattice::new(30, 32).unwrap();
        let sides: Vec<_> = (0..lat.len()).map(|i| boundary_sides(&lat, i)).collect();
        let lr = sides.iter().filter(|s| s.0).count();
        let tb = sides.iter().filter(|s| s.1).count();
        assert_eq!((lr, tb), (64, 60));
        // c = (#LR - #TB) / (#LR + #TB) for the written polarity.
        let c = 4.0 / 124.0;
        let m = build_example2_with(30, 32, 0.8, SidePolarity::NegativeLeftRight).unwrap();
        let h = m.field();
        assert!((h[lat.node(5, 0)] - (-1.0 + c)).abs() < 1e-15);
        assert!((h[lat.node(0, 5)] - (1.0 + c)).abs() < 1e-15);
        assert!((h[0] - 2.0 * c).abs() < 1e-15);
        assert_eq!(h[lat.node(5, 5)], 0.0);
        let sum: f64 = h.iter().sum();
        assert!(sum.abs() < 1e-12, "{sum}");
    }

    #[test]
    fn polarities_are_negatives() {
        let a = build_example2_with(30, 32, 0.8, SidePolarity::PositiveLeftRight).unwrap();
        let b = build_example2_with(30, 32, 0.8, SidePolarity::NegativeLeftRight).unwrap();
        for (x, y) in a.field().iter().zip(b.field()) {
            assert_eq!(*x, -*y);
        }
        assert_eq!(build_example2(30, 32, 0.8).unwrap().field(), a.field());
        let sum: f64 = a.field().iter().sum();
        assert!(sum.abs() < 1e-12);
    }

    #[test]
    fn example2_square_is_zero_mean() {
        for n in [3, 4, 7, 12] {
            let m = build_example2(n, n, 0.5).unwrap();
            let sum: f64 = m.field().iter().sum();
            assert!(sum.abs() < 1e-12);
        }
        assert!(build_example2(2, 5, 0.8).is_err());
    }
}
