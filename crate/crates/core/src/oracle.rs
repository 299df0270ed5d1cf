//! Brute-force enumeration over `{-1, +1}^n` for tiny models, and exact
//! pushforward of distributions through transition kernels.
//!
//! States are indexed as in [`SpinConfig::from_index`]: bit `i` set means `s_i = +1`.

use crate::ais::log_sum_exp;
use crate::dynamics::{heat_bath_up_probability, SweepPlan};
use crate::error::{Error, Result};
use crate::spin_model::{Mode, QuadraticModel, SpinConfig};

/// Largest model the oracle accepts (`2^20` states).
pub const MAX_ORACLE_SITES: usize = 20;
/// Incremental energies are recomputed from scratch this often.
const RESYNC_EVERY: usize = 1 << 12;
/// Sweep kernels average over every subset order; more subsets than this is refused.
const MAX_SWEEP_SUBSETS: usize = 6;

fn check_sites(n: usize) -> Result<()> {
    if n > MAX_ORACLE_SITES {
        Err(Error::OracleTooLarge {
            sites: n,
            cap: MAX_ORACLE_SITES,
        })
    } else {
        Ok(())
    }
}

/// Exact normalized distribution of a small model.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactDistribution {
    sites: usize,
    log_partition: f64,
    log_probs: Vec<f64>,
}

/// Enumerates every configuration in Gray-code order with O(degree) energy
/// updates per state.
pub fn enumerate(model: &QuadraticModel) -> Result<ExactDistribution> {
    let n = model.len();
    check_sites(n)?;
    let states = 1usize << n;
    let mut log_density = vec![0.0; states];
    let mut s = SpinConfig::all_down(n);
    let mut e = model.log_density(&s);
    log_density[0] = e;
    for k in 1..states {
        let i = k.trailing_zeros() as usize;
        let si = f64::from(s.get(i));
        e -= 2.0 * si * model.local_field(&s, i);
        s.flip(i);
        if k % RESYNC_EVERY == 0 {
            e = model.log_density(&s);
        }
        log_density[s.index() as usize] = e;
    }
    let log_partition = log_sum_exp(&log_density);
    if !log_partition.is_finite() {
        return Err(Error::Numeric(format!(
            "log partition function is {log_partition}"
        )));
    }
    for v in &mut log_density {
        *v -= log_partition;
    }
    Ok(ExactDistribution {
        sites: n,
        log_partition,
        log_probs: log_density,
    })
}

impl ExactDistribution {
    /// Distribution from explicit probabilities over `2^sites` states.
    pub fn from_probabilities(sites: usize, probs: &[f64]) -> Result<Self> {
        check_sites(sites)?;
        if probs.len() != 1 << sites {
            return Err(Error::DimensionMismatch {
                expected: 1 << sites,
                actual: probs.len(),
            });
        }
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || total <= 0.0 {
            return Err(Error::InvalidInput(
                "probabilities must be finite, non-negative and not all zero".into(),
            ));
        }
        Ok(Self {
            sites,
            log_partition: 0.0,
            log_probs: probs.iter().map(|p| (p / total).ln()).collect(),
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn states(&self) -> usize {
        self.log_probs.len()
    }

    /// `log Z` of the enumerated model (0 for explicit distributions).
    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.log_probs[index].exp()
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_probs.iter().map(|lp| lp.exp()).collect()
    }

    pub fn expectation<F>(&self, observable: F) -> f64
    where
        F: Fn(&SpinConfig) -> f64,
    {
        exact_expectation(self, observable)
    }

    pub fn mean_spin(&self) -> f64 {
        self.expectation(SpinConfig::mean_spin)
    }

    /// `(P(Plus), P(Minus))` by the sign of the mean spin.
    pub fn mode_masses(&self) -> (f64, f64) {
        let plus = self.expectation(|s| if s.mode() == Mode::Plus { 1.0 } else { 0.0 });
        (plus, 1.0 - plus)
    }
}

/// `sum_s p(s) f(s)`.
pub fn exact_expectation<F>(dist: &ExactDistribution, observable: F) -> f64
where
    F: Fn(&SpinConfig) -> f64,
{
    dist.log_probs
        .iter()
        .enumerate()
        .map(|(k, lp)| lp.exp() * observable(&SpinConfig::from_index(k as u64, dist.sites)))
        .sum()
}

/// `(1/2) sum |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(
        p.len(),
        q.len(),
        "distributions over different state spaces"
    );
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Normalized histogram of state indices.
pub fn empirical_distribution<I>(sites: usize, indices: I) -> Vec<f64>
where
    I: IntoIterator<Item = u64>,
{
    let mut counts = vec![0u64; 1 << sites];
    let mut total = 0u64;
    for k in indices {
        counts[k as usize] += 1;
        total += 1;
    }
    counts
        .iter()
        .map(|&c| c as f64 / total.max(1) as f64)
        .collect()
}

/// One-step Markov kernel acting on distribution vectors.
pub trait Kernel {
    fn sites(&self) -> usize;

    /// `p K`.
    fn push(&self, p: &[f64]) -> Vec<f64>;
}

/// Heat-bath resampling of one site.
#[derive(Clone, Copy, Debug)]
pub struct SiteHeatBathKernel<'a> {
    pub model: &'a QuadraticModel,
    pub site: usize,
}

impl SiteHeatBathKernel<'_> {
    /// `T(s, t)` for `t` equal to `s` outside the site.
    pub fn transition(&self, s: &SpinConfig, up: bool) -> f64 {
        let f = self.model.local_field(s, self.site);
        heat_bath_up_probability(if up { f } else { -f })
    }
}

impl Kernel for SiteHeatBathKernel<'_> {
    fn sites(&self) -> usize {
        self.model.len()
    }

    fn push(&self, p: &[f64]) -> Vec<f64> {
        let n = self.model.len();
        let bit = 1usize << self.site;
        let mut out = vec![0.0; p.len()];
        for (k, &pk) in p.iter().enumerate() {
            if pk == 0.0 {
                continue;
            }
            let s = SpinConfig::from_index(k as u64, n);
            let up = heat_bath_up_probability(self.model.local_field(&s, self.site));
            out[k | bit] += pk * up;
            out[k & !bit] += pk * (1.0 - up);
        }
        out
    }
}

/// Full sweep: subsets visited in a uniformly random order, averaged exactly
/// over all orders.
#[derive(Clone, Copy, Debug)]
pub struct SweepKernel<'a> {
    pub model: &'a QuadraticModel,
    pub plan: &'a SweepPlan,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out
}

impl Kernel for SweepKernel<'_> {
    fn sites(&self) -> usize {
        self.model.len()
    }

    fn push(&self, p: &[f64]) -> Vec<f64> {
        let subsets = self.plan.subsets();
        assert!(
            subsets.len() <= MAX_SWEEP_SUBSETS,
            "sweep kernel supports at most {MAX_SWEEP_SUBSETS} subsets"
        );
        let orders = permutations(subsets.len());
        let mut out = vec![0.0; p.len()];
        for order in &orders {
            let mut q = p.to_vec();
            for &k in order {
                for &site in &subsets[k] {
                    q = SiteHeatBathKernel {
                        model: self.model,
                        site,
                    }
                    .push(&q);
                }
            }
            for (o, v) in out.iter_mut().zip(q) {
                *o += v;
            }
        }
        let m = orders.len() as f64;
        out.iter_mut().for_each(|o| *o /= m);
        out
    }
}

/// Kernel estimated by simulating moves from every state.
#[derive(Clone, Debug)]
pub struct EmpiricalKernel {
    sites: usize,
    /// Per source state, sorted `(target, count)` pairs.
    rows: Vec<Vec<(u32, u32)>>,
    moves_per_state: u32,
}

impl EmpiricalKernel {
    /// Runs `moves_per_state` independent moves from each state; `step(source, k, state)`
    /// must advance `state` by one move.
    pub fn estimate<F>(sites: usize, moves_per_state: u32, mut step: F) -> Result<Self>
    where
        F: FnMut(usize, u32, &mut SpinConfig),
    {
        check_sites(sites)?;
        if moves_per_state == 0 {
            return Err(Error::InvalidInput(
                "moves_per_state must be at least 1".into(),
            ));
        }
        let mut rows = Vec::with_capacity(1 << sites);
        let mut targets = Vec::with_capacity(moves_per_state as usize);
        for source in 0..1usize << sites {
            targets.clear();
            for k in 0..moves_per_state {
                let mut s = SpinConfig::from_index(source as u64, sites);
                step(source, k, &mut s);
                targets.push(s.index() as u32);
            }
            targets.sort_unstable();
            let mut row: Vec<(u32, u32)> = Vec::new();
            for &t in &targets {
                match row.last_mut() {
                    Some((last, c)) if *last == t => *c += 1,
                    _ => row.push((t, 1)),
                }
            }
            rows.push(row);
        }
        Ok(Self {
            sites,
            rows,
            moves_per_state,
        })
    }

    /// Estimated `T(source, target)`.
    pub fn transition(&self, source: usize, target: usize) -> f64 {
        self.rows[source]
            .binary_search_by_key(&(target as u32), |&(t, _)| t)
            .map_or(0.0, |i| {
                f64::from(self.rows[source][i].1) / f64::from(self.moves_per_state)
            })
    }
}

impl Kernel for EmpiricalKernel {
    fn sites(&self) -> usize {
        self.sites
    }

    fn push(&self, p: &[f64]) -> Vec<f64> {
        let m = f64::from(self.moves_per_state);
        let mut out = vec![0.0; p.len()];
        for (row, &pk) in self.rows.iter().zip(p) {
            for &(t, c) in row {
                out[t as usize] += pk * f64::from(c) / m;
            }
        }
        out
    }
}

/// `TV(p, p K)`.
pub fn kernel_stationarity_check<K: Kernel + ?Sized>(
    dist: &ExactDistribution,
    kernel: &K,
) -> Result<f64> {
    if kernel.sites() != dist.sites() {
        return Err(Error::DimensionMismatch {
            expected: dist.sites(),
            actual: kernel.sites(),
        });
    }
    let p = dist.probs();
    Ok(total_variation(&p, &kernel.push(&p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_model::{build_example2, Lattice};

    fn two_site(beta: f64) -> QuadraticModel {
        QuadraticModel::from_pairs(2, [(0, 1, 1.0)], vec![0.0; 2], beta).unwrap()
    }

    #[test]
    fn zero_beta_is_uniform() {
        let m = build_example2(3, 4, 0.0).unwrap();
        let d = enumerate(&m).unwrap();
        assert_eq!(d.states(), 4096);
        for k in 0..d.states() {
            assert!((d.prob(k) - 1.0 / 4096.0).abs() < 1e-15);
        }
    }

    #[test]
    fn two_site_correlation_is_tanh_beta() {
        for beta in [0.1, 0.7, 2.0] {
            let d = enumerate(&two_site(beta)).unwrap();
            let corr = d.expectation(|s| f64::from(s.get(0) * s.get(1)));
            assert!((corr - beta.tanh()).abs() < 1e-13, "beta {beta}");
        }
    }

    #[test]
    fn gray_code_matches_direct_evaluation() {
        let m = build_example2(3, 4, 0.9).unwrap();
        let d = enumerate(&m).unwrap();
        for k in 0..d.states() {
            let s = SpinConfig::from_index(k as u64, 12);
            let direct = m.log_density(&s) - d.log_partition();
            assert!((direct - d.log_probs()[k]).abs() < 1e-11);
        }
        let total: f64 = d.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(enumerate(&m).unwrap(), d);
    }

    #[test]
    fn field_free_mean_spin_vanishes() {
        let lat = Lattice::new(3, 3).unwrap();
        let m = QuadraticModel::from_lattice(&lat, vec![0.0; 9], 0.8).unwrap();
        let d = enumerate(&m).unwrap();
        assert!(d.mean_spin().abs() < 1e-12);
        assert!((d.expectation(|_| 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn refuses_large_models() {
        let lat = Lattice::new(3, 7).unwrap();
        let m = QuadraticModel::from_lattice(&lat, vec![0.0; 21], 0.5).unwrap();
        assert!(matches!(
            enumerate(&m),
            Err(Error::OracleTooLarge { sites: 21, cap: 20 })
        ));
    }

    #[test]
    fn heat_bath_kernels_are_stationary() {
        let m = build_example2(3, 3, 0.8).unwrap();
        let d = enumerate(&m).unwrap();
        for site in 0..9 {
            let drift =
                kernel_stationarity_check(&d, &SiteHeatBathKernel { model: &m, site }).unwrap();
            assert!(drift < 1e-12);
        }
        let plan = SweepPlan::for_models(&[&m]).unwrap();
        let drift = kernel_stationarity_check(
            &d,
            &SweepKernel {
                model: &m,
                plan: &plan,
            },
        )
        .unwrap();
        assert!(drift < 1e-10);
    }

    #[test]
    fn non_stationary_kernel_is_detected() {
        let m = two_site(1.0);
        let other = two_site(0.0);
        let d = enumerate(&m).unwrap();
        let drift = kernel_stationarity_check(
            &d,
            &SiteHeatBathKernel {
                model: &other,
                site: 0,
            },
        )
        .unwrap();
        assert!(drift > 1e-3);
    }

    #[test]
    fn empirical_identity_kernel() {
        let k = EmpiricalKernel::estimate(3, 5, |_, _, _| {}).unwrap();
        for i in 0..8 {
            assert_eq!(k.transition(i, i), 1.0);
        }
        let d = ExactDistribution::from_probabilities(3, &[1.0; 8]).unwrap();
        assert_eq!(kernel_stationarity_check(&d, &k).unwrap(), 0.0);
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(4).len(), 24);
    }
}
