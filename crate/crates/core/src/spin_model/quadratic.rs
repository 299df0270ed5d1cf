use std::collections::BTreeMap;

use super::{Lattice, SpinConfig};
use crate::error::{Error, Result};

/// One off-diagonal entry `J_ij` seen from row `i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coupling {
    pub neighbor: usize,
    pub weight: f64,
}

/// Log-density `E(s) = beta * (1/2 s^T J s + h^T s)` with a sparse symmetric
/// zero-diagonal coupling matrix `J`.
///
/// Rows are stored in CSR form with neighbors sorted ascending, so two models
/// built from the same entries evaluate bit-identically.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticModel {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    weights: Vec<f64>,
    field: Vec<f64>,
    beta: f64,
    shape: Option<(usize, usize)>,
}

impl QuadraticModel {
    /// Builds a model from unordered coupling entries. Repeated pairs are summed.
    pub fn from_pairs<I>(n: usize, pairs: I, field: Vec<f64>, beta: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for (i, j, w) in pairs {
            if i >= n || j >= n {
                return Err(Error::InvalidModel(format!(
                    "coupling ({i}, {j}) out of range for {n} nodes"
                )));
            }
            if i == j {
                return Err(Error::InvalidModel(format!("self-coupling at node {i}")));
            }
            *rows[i].entry(j).or_insert(0.0) += w;
            *rows[j].entry(i).or_insert(0.0) += w;
        }
        Self::from_rows(rows, field, beta)
    }

    /// Nearest-neighbor model on `lattice` with unit couplings.
    pub fn from_lattice(lattice: &Lattice, field: Vec<f64>, beta: f64) -> Result<Self> {
        let pairs = lattice.bonds().iter().map(|&(i, j)| (i, j, 1.0));
        Ok(Self::from_pairs(lattice.len(), pairs, field, beta)?
            .with_shape(lattice.n1(), lattice.n2()))
    }

    pub(crate) fn from_rows(
        rows: Vec<BTreeMap<usize, f64>>,
        field: Vec<f64>,
        beta: f64,
    ) -> Result<Self> {
        let n = rows.len();
        if field.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: field.len(),
            });
        }
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::InvalidModel(format!(
                "beta must be finite and non-negative, got {beta}"
            )));
        }
        if let Some(i) = field.iter().position(|h| !h.is_finite()) {
            return Err(Error::InvalidModel(format!("non-finite field at node {i}")));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for (i, row) in rows.iter().enumerate() {
            for (&j, &w) in row {
                if j == i {
                    return Err(Error::InvalidModel(format!("self-coupling at node {i}")));
                }
                if !w.is_finite() {
                    return Err(Error::InvalidModel(format!(
                        "non-finite coupling ({i}, {j})"
                    )));
                }
                if w == 0.0 {
                    continue;
                }
                match rows.get(j).and_then(|r| r.get(&i)) {
                    Some(&back) if back == w => {}
                    _ => {
                        return Err(Error::InvalidModel(format!(
                            "coupling matrix is not symmetric at ({i}, {j})"
                        )))
                    }
                }
                neighbors.push(j as u32);
                weights.push(w);
            }
            offsets.push(neighbors.len());
        }
        Ok(Self {
            offsets,
            neighbors,
            weights,
            field,
            beta,
            shape: None,
        })
    }

    /// Attaches lattice extents `(n1, n2)`; used for file headers and plotting.
    pub fn with_shape(mut self, n1: usize, n2: usize) -> Self {
        debug_assert_eq!(n1 * n2, self.len());
        self.shape = Some((n1, n2));
        self
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        let mut m = self.clone();
        m.beta = beta;
        m
    }

    pub fn len(&self) -> usize {
        self.field.len()
    }

    pub fn is_empty(&self) -> bool {
        self.field.is_empty()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn field(&self) -> &[f64] {
        &self.field
    }

    pub fn shape(&self) -> Option<(usize, usize)> {
        self.shape
    }

    /// Number of stored (directed) nonzero couplings.
    pub fn nnz(&self) -> usize {
        self.weights.len()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn couplings(&self, i: usize) -> impl Iterator<Item = Coupling> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.neighbors[range.clone()]
            .iter()
            .zip(&self.weights[range])
            .map(|(&j, &w)| Coupling {
                neighbor: j as usize,
                weight: w,
            })
    }

    /// `J_ij`, zero when absent.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let range = self.offsets[i]..self.offsets[i + 1];
        match self.neighbors[range.clone()].binary_search(&(j as u32)) {
            Ok(k) => self.weights[range.start + k],
            Err(_) => 0.0,
        }
    }

    /// Unordered support edges `(i, j)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.len()).flat_map(move |i| {
            self.couplings(i)
                .filter(move |c| c.neighbor > i)
                .map(move |c| (i, c.neighbor, c.weight))
        })
    }

    /// Unnormalized log-probability. Panics on a dimension mismatch; see
    /// [`QuadraticModel::checked_log_density`].
    pub fn log_density(&self, s: &SpinConfig) -> f64 {
        assert_eq!(
            s.len(),
            self.len(),
            "configuration/model dimension mismatch"
        );
        let spins = s.as_slice();
        let mut quad = 0.0;
        let mut lin = 0.0;
        for (i, &si) in spins.iter().enumerate() {
            let si = f64::from(si);
            let mut acc = 0.0;
            for k in self.offsets[i]..self.offsets[i + 1] {
                acc += self.weights[k] * f64::from(spins[self.neighbors[k] as usize]);
            }
            quad += si * acc;
            lin += self.field[i] * si;
        }
        self.beta * (0.5 * quad + lin)
    }

    pub fn checked_log_density(&self, s: &SpinConfig) -> Result<f64> {
        if s.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: s.len(),
            });
        }
        Ok(self.log_density(s))
    }

    /// `beta * (sum_j J_ij s_j + h_i)`; the own spin never contributes.
    #[inline]
    pub fn local_field(&self, s: &SpinConfig, i: usize) -> f64 {
        self.local_field_raw(s.as_slice(), i)
    }

    #[inline]
    pub(crate) fn local_field_raw(&self, spins: &[i8], i: usize) -> f64 {
        let mut acc = self.field[i];
        for k in self.offsets[i]..self.offsets[i + 1] {
            acc += self.weights[k] * f64::from(spins[self.neighbors[k] as usize]);
        }
        self.beta * acc
    }

    fn same_terms(&self, other: &Self) -> bool {
        self.offsets == other.offsets
            && self.neighbors == other.neighbors
            && self.weights == other.weights
            && self.field == other.field
    }

    /// Model whose log-density is `(1 - t) E_a + t E_b`.
    ///
    /// When both endpoints share `(J, h)` only beta is interpolated; when they
    /// share beta only `(J, h)` are. Otherwise beta is folded into the terms and
    /// the result carries `beta = 1`.
    pub fn blend(a: &Self, b: &Self, t: f64) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                actual: b.len(),
            });
        }
        let shape = a.shape.or(b.shape);
        if a.same_terms(b) {
            let mut m = a.with_beta((1.0 - t) * a.beta + t * b.beta);
            m.shape = shape;
            return Ok(m);
        }
        let (wa, wb, beta) = if a.beta == b.beta {
            (1.0 - t, t, a.beta)
        } else {
            ((1.0 - t) * a.beta, t * b.beta, 1.0)
        };
        let n = a.len();
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for (i, row) in rows.iter_mut().enumerate() {
            for c in a.couplings(i) {
                *row.entry(c.neighbor).or_insert(0.0) += wa * c.weight;
            }
            for c in b.couplings(i) {
                *row.entry(c.neighbor).or_insert(0.0) += wb * c.weight;
            }
        }
        let field = a
            .field
            .iter()
            .zip(&b.field)
            .map(|(ha, hb)| wa * ha + wb * hb)
            .collect();
        let mut m = Self::from_rows(rows, field, beta)?;
        m.shape = shape;
        Ok(m)
    }
}
