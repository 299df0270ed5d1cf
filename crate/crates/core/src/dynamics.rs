//! Heat-bath (Glauber) dynamics over independent node subsets.
//!
//! A [`SweepPlan`] partitions the nodes into subsets with no coupling inside a
//! subset, so every node of a subset can be resampled simultaneously. Each
//! sweep visits the subsets in a fresh random order. Per-node uniforms are
//! addressed by `(sweep, node)` (see [`crate::rng`]), which makes serial and
//! parallel execution of a subset bit-identical.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{RngStream, SweepDraws};
use crate::spin_model::{QuadraticModel, SpinConfig};

/// Ordered partition of the nodes into independent sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepPlan {
    subsets: Vec<Vec<usize>>,
    nodes: usize,
}

impl SweepPlan {
    /// Greedy coloring in node order of the graph on `nodes` vertices with the
    /// given edges. Colors become subsets.
    pub fn from_edges<I>(nodes: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adjacency = vec![Vec::new(); nodes];
        for (i, j) in edges {
            if i != j {
                adjacency[i].push(j);
                adjacency[j].push(i);
            }
        }
        const NONE: usize = usize::MAX;
        let mut color = vec![NONE; nodes];
        let mut used: Vec<bool> = Vec::new();
        for i in 0..nodes {
            used.clear();
            used.resize(adjacency[i].len() + 1, false);
            for &j in &adjacency[i] {
                let c = color[j];
                if c != NONE && c < used.len() {
                    used[c] = true;
                }
            }
            color[i] = used.iter().position(|u| !u).unwrap_or(used.len());
        }
        let colors = color.iter().copied().max().map_or(0, |c| c + 1);
        let mut subsets = vec![Vec::new(); colors];
        for (i, &c) in color.iter().enumerate() {
            subsets[c].push(i);
        }
        Self { subsets, nodes }
    }

    /// Plan valid for every model in `models` (coloring of the union support).
    pub fn for_models(models: &[&QuadraticModel]) -> Result<Self> {
        let nodes = models.first().map_or(0, |m| m.len());
        if let Some(m) = models.iter().find(|m| m.len() != nodes) {
            return Err(Error::DimensionMismatch {
                expected: nodes,
                actual: m.len(),
            });
        }
        let edges = models
            .iter()
            .flat_map(|m| m.edges().map(|(i, j, _)| (i, j)));
        Ok(Self::from_edges(nodes, edges))
    }

    pub fn subsets(&self) -> &[Vec<usize>] {
        &self.subsets
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// True when the plan covers every node once and no subset holds a coupled pair.
    pub fn is_valid_for(&self, model: &QuadraticModel) -> bool {
        if model.len() != self.nodes {
            return false;
        }
        let mut color = vec![usize::MAX; self.nodes];
        for (k, subset) in self.subsets.iter().enumerate() {
            for &i in subset {
                if i >= self.nodes || color[i] != usize::MAX {
                    return false;
                }
                color[i] = k;
            }
        }
        color.iter().all(|&c| c != usize::MAX)
            && model.edges().all(|(i, j, _)| color[i] != color[j])
    }

    pub fn check(&self, model: &QuadraticModel) -> Result<()> {
        if self.is_valid_for(model) {
            Ok(())
        } else {
            Err(Error::InvalidInput(
                "sweep plan is not an independent partition for this model".into(),
            ))
        }
    }

    fn visiting_order(&self, rng: &mut RngStream) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.subsets.len()).collect();
        for k in (1..order.len()).rev() {
            order.swap(k, rng.below(k + 1));
        }
        order
    }
}

/// `P(s_i = +1 | rest) = 1 / (1 + exp(-2 f))` for local field `f`.
#[inline]
pub fn heat_bath_up_probability(local_field: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * local_field).exp())
}

#[inline]
fn resample(model: &QuadraticModel, spins: &[i8], draws: &SweepDraws, i: usize) -> i8 {
    let p = heat_bath_up_probability(model.local_field_raw(spins, i));
    if draws.uniform(i) < p {
        1
    } else {
        -1
    }
}

fn check_dims(model: &QuadraticModel, s: &SpinConfig, plan: &SweepPlan) {
    assert_eq!(
        s.len(),
        model.len(),
        "configuration/model dimension mismatch"
    );
    assert_eq!(
        plan.nodes(),
        model.len(),
        "sweep plan/model dimension mismatch"
    );
}

/// One heat-bath sweep touching every node once. Panics if the plan or the
/// configuration does not match the model's dimension.
pub fn glauber_sweep(
    model: &QuadraticModel,
    s: &mut SpinConfig,
    plan: &SweepPlan,
    rng: &mut RngStream,
) {
    check_dims(model, s, plan);
    let order = plan.visiting_order(rng);
    let draws = rng.next_sweep();
    let spins = s.raw_mut();
    for k in order {
        for &i in &plan.subsets[k] {
            spins[i] = resample(model, spins, &draws, i);
        }
    }
}

/// Same sweep as [`glauber_sweep`] with each subset updated on the rayon pool.
/// Produces bit-identical results.
pub fn glauber_sweep_parallel(
    model: &QuadraticModel,
    s: &mut SpinConfig,
    plan: &SweepPlan,
    rng: &mut RngStream,
) {
    check_dims(model, s, plan);
    let order = plan.visiting_order(rng);
    let draws = rng.next_sweep();
    let mut fresh = Vec::new();
    for k in order {
        let subset = &plan.subsets[k];
        let spins = s.as_slice();
        subset
            .par_iter()
            .with_min_len(128)
            .map(|&i| resample(model, spins, &draws, i))
            .collect_into_vec(&mut fresh);
        let spins = s.raw_mut();
        for (&i, &v) in subset.iter().zip(&fresh) {
            spins[i] = v;
        }
    }
}

/// Serial or subset-parallel sweeps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SweepMode {
    #[default]
    Serial,
    Parallel,
}

impl SweepMode {
    pub fn sweep(
        self,
        model: &QuadraticModel,
        s: &mut SpinConfig,
        plan: &SweepPlan,
        rng: &mut RngStream,
    ) {
        match self {
            SweepMode::Serial => glauber_sweep(model, s, plan, rng),
            SweepMode::Parallel => glauber_sweep_parallel(model, s, plan, rng),
        }
    }
}

/// Uniform start followed by `warmup_sweeps` sweeps of `reference`.
pub fn sample_reference(
    reference: &QuadraticModel,
    warmup_sweeps: usize,
    plan: &SweepPlan,
    rng: &mut RngStream,
) -> Result<SpinConfig> {
    if warmup_sweeps == 0 {
        return Err(Error::InvalidInput(
            "warmup_sweeps must be at least 1".into(),
        ));
    }
    let mut s = SpinConfig::uniform(reference.len(), rng);
    for _ in 0..warmup_sweeps {
        glauber_sweep(reference, &mut s, plan, rng);
    }
    Ok(s)
}
