use crate::error::{Error, Result};

/// Rectangular nearest-neighbor lattice with open boundaries.
///
/// `n1` is the horizontal extent (nodes per row), `n2` the vertical extent
/// (nodes per column). Node `i` sits at `row = i / n1`, `col = i % n1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    n1: usize,
    n2: usize,
    bonds: Vec<(usize, usize)>,
}

impl Lattice {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidGeometry(format!(
                "lattice extents must be positive, got {n1}x{n2}"
            )));
        }
        let mut bonds = Vec::with_capacity(n2 * (n1 - 1) + n1 * (n2 - 1));
        for row in 0..n2 {
            for col in 0..n1 {
                let i = row * n1 + col;
                if col + 1 < n1 {
                    bonds.push((i, i + 1));
                }
                if row + 1 < n2 {
                    bonds.push((i, i + n1));
                }
            }
        }
        Ok(Self { n1, n2, bonds })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_square(&self) -> bool {
        self.n1 == self.n2
    }

    #[inline]
    pub fn node(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.n2 && col < self.n1);
        row * self.n1 + col
    }

    /// `(row, col)` of node `i`.
    #[inline]
    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i / self.n1, i % self.n1)
    }

    /// Unordered nearest-neighbor pairs `(i, j)` with `i < j`.
    pub fn bonds(&self) -> &[(usize, usize)] {
        &self.bonds
    }

    /// Position in the `[-1, 1]^2` box as `(x, y)`, `x` horizontal.
    /// A unit extent maps to the center line.
    pub fn embed(&self, i: usize) -> (f64, f64) {
        let (row, col) = self.coords(i);
        (axis(col, self.n1), axis(row, self.n2))
    }
}

fn axis(k: usize, n: usize) -> f64 {
    if n == 1 {
        0.0
    } else {
        -1.0 + 2.0 * k as f64 / (n - 1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn bond_count_matches_formula() {
        for (n1, n2) in [(1, 1), (1, 2), (2, 2), (3, 2), (30, 32), (7, 5)] {
            let lat = Lattice::new(n1, n2).unwrap();
            assert_eq!(lat.bonds().len(), n2 * (n1 - 1) + n1 * (n2 - 1));
        }
    }

    #[test]
    fn bonds_are_unique_nearest_neighbors() {
        let lat = Lattice::new(5, 4).unwrap();
        let mut seen = HashSet::new();
        for &(i, j) in lat.bonds() {
            assert!(i < j);
            assert!(seen.insert((i, j)));
            let (ri, ci) = lat.coords(i);
            let (rj, cj) = lat.coords(j);
            assert_eq!(ri.abs_diff(rj) + ci.abs_diff(cj), 1);
        }
    }

    #[test]
    fn coords_round_trip() {
        let lat = Lattice::new(4, 3).unwrap();
        for i in 0..lat.len() {
            let (r, c) = lat.coords(i);
            assert!(r < 3 && c < 4);
            assert_eq!(lat.node(r, c), i);
        }
    }

    #[test]
    fn embedding_corners() {
        let lat = Lattice::new(30, 32).unwrap();
        assert_eq!(lat.embed(0), (-1.0, -1.0));
        assert_eq!(lat.embed(lat.len() - 1), (1.0, 1.0));
    }

    #[test]
    fn zero_extent_rejected() {
        assert!(Lattice::new(0, 3).is_err());
    }
}
