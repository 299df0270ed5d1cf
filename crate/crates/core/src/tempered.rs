//! Tempered-transition moves along a palindromic path and the Metropolis chain
//! that mixes them with local heat-bath sweeps of the target.
//!
//! A move walks `s_{1/2} = s` up the path with sweeps at levels `1..L-1`,
//! crosses the turning point (a group jump `s -> g s` for the reference path,
//! sweeps at `beta = 0` for the temperature path), walks back down through
//! `L+1..2L-1`, and accepts the end state with probability `min(1, A)` where
//! `log A = sum_{l=1..2L} E_l(s_{l-1/2}) - E_{l-1}(s_{l-1/2})`.

use serde::{Deserialize, Serialize};

use crate::ais::ModeProbabilities;
use crate::dynamics::{SweepMode, SweepPlan};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::schedule::PathFamily;
use crate::spin_model::{Mode, SpinConfig};
use crate::symmetry::{random_probes, relative_defect, SignedInvolution};

/// Largest relative defect of the turning-point density tolerated for a group jump.
pub const MIDPOINT_SYMMETRY_TOLERANCE: f64 = 1e-8;
const MIDPOINT_PROBES: usize = 256;
const MIDPOINT_PROBE_SEED: u64 = 0x7e3d_1d90_0b5e;

/// Move made at the turning point `l = L`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TurningMove {
    /// Deterministic `s -> g s`; `|G| = 2`, so the uniform choice over
    /// `G \ {e}` is a singleton and its proposal probability cancels.
    GroupJump(SignedInvolution),
    /// Heat-bath sweeps of the turning-point model.
    Sweeps,
}

/// Result of one attempted move.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TtMoveRecord {
    pub log_accept_ratio: f64,
    pub accepted: bool,
    pub mean_spin_before: f64,
    pub mean_spin_after: f64,
}

impl TtMoveRecord {
    pub fn acceptance_probability(&self) -> f64 {
        self.log_accept_ratio.exp().min(1.0)
    }
}

/// A validated tempered-transition move.
#[derive(Debug)]
pub struct TemperedTransition {
    path: PathFamily,
    turning: TurningMove,
    plan: SweepPlan,
    sweeps_per_level: usize,
    sweep_mode: SweepMode,
}

impl TemperedTransition {
    /// Move with a group jump at the turning point. Fails unless the path is
    /// palindromic and its turning-point density is invariant under `action`.
    pub fn with_group_jump(
        path: PathFamily,
        action: SignedInvolution,
        sweeps_per_level: usize,
    ) -> Result<Self> {
        let mid = path.model(path.half_levels());
        if action.len() != mid.len() {
            return Err(Error::DimensionMismatch {
                expected: mid.len(),
                actual: action.len(),
            });
        }
        let probes = random_probes(mid.len(), MIDPOINT_PROBES, MIDPOINT_PROBE_SEED);
        let defect = relative_defect(mid, &action, &probes);
        if defect > MIDPOINT_SYMMETRY_TOLERANCE {
            return Err(Error::Symmetry(format!(
                "turning-point density is not invariant under the action (relative defect {defect:.3e})"
            )));
        }
        Self::build(path, TurningMove::GroupJump(action), sweeps_per_level)
    }

    /// Classical move with sweeps at the turning point.
    pub fn with_turning_sweeps(path: PathFamily, sweeps_per_level: usize) -> Result<Self> {
        Self::build(path, TurningMove::Sweeps, sweeps_per_level)
    }

    fn build(path: PathFamily, turning: TurningMove, sweeps_per_level: usize) -> Result<Self> {
        if !path.kind().is_palindromic() {
            return Err(Error::InvalidInput(format!(
                "tempered transitions need a palindromic path, got {:?}",
                path.kind()
            )));
        }
        if sweeps_per_level == 0 {
            return Err(Error::InvalidInput(
                "sweeps_per_level must be at least 1".into(),
            ));
        }
        let plan = path.sweep_plan()?;
        Ok(Self {
            path,
            turning,
            plan,
            sweeps_per_level,
            sweep_mode: SweepMode::Serial,
        })
    }

    pub fn with_sweep_mode(mut self, mode: SweepMode) -> Self {
        self.sweep_mode = mode;
        self
    }

    pub fn path(&self) -> &PathFamily {
        &self.path
    }

    pub fn plan(&self) -> &SweepPlan {
        &self.plan
    }

    pub fn sweep_mode(&self) -> SweepMode {
        self.sweep_mode
    }

    /// Sweeps spent by one attempt.
    pub fn sweeps_per_move(&self) -> usize {
        let l = self.path.half_levels();
        let mid = match self.turning {
            TurningMove::GroupJump(_) => 0,
            TurningMove::Sweeps => self.sweeps_per_level,
        };
        2 * l.saturating_sub(1) * self.sweeps_per_level + mid
    }

    /// Attempts one move; on rejection `s` is left untouched.
    pub fn attempt(&self, s: &mut SpinConfig, rng: &mut RngStream) -> TtMoveRecord {
        self.run(s, rng, None)
    }

    /// Like [`attempt`](Self::attempt), also returning `s_{1/2}, ..., s_{2L-1/2}`.
    pub fn attempt_traced(
        &self,
        s: &mut SpinConfig,
        rng: &mut RngStream,
    ) -> (TtMoveRecord, Vec<SpinConfig>) {
        let mut states = Vec::with_capacity(self.path.levels());
        let record = self.run(s, rng, Some(&mut states));
        (record, states)
    }

    fn run(
        &self,
        s: &mut SpinConfig,
        rng: &mut RngStream,
        mut trace: Option<&mut Vec<SpinConfig>>,
    ) -> TtMoveRecord {
        let path = &self.path;
        let top = path.levels();
        let turn = path.half_levels();
        let mut t = s.clone();
        if let Some(states) = trace.as_deref_mut() {
            states.push(t.clone());
        }
        let mut log_a = 0.0;
        for l in 1..=top {
            let (a, b) = path.endpoint_log_densities(&t);
            log_a += path.increment_from(l, a, b);
            if l == top {
                break;
            }
            match (&self.turning, l == turn) {
                (TurningMove::GroupJump(g), true) => t = g.apply(&t),
                _ => {
                    let model = path.model(l);
                    for _ in 0..self.sweeps_per_level {
                        self.sweep_mode.sweep(model, &mut t, &self.plan, rng);
                    }
                }
            }
            if let Some(states) = trace.as_deref_mut() {
                states.push(t.clone());
            }
        }
        let before = s.mean_spin();
        let alpha = rng.uniform();
        let accepted = alpha < log_a.exp().min(1.0);
        if accepted {
            *s = t;
        }
        TtMoveRecord {
            log_accept_ratio: log_a,
            accepted,
            mean_spin_before: before,
            mean_spin_after: s.mean_spin(),
        }
    }
}

/// When a chain step is a tempered transition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveSchedule {
    /// Independently with this probability at each step.
    Bernoulli { probability: f64 },
    /// Every `every`-th step (steps `every - 1, 2 every - 1, ...`).
    Periodic { every: usize },
}

impl MoveSchedule {
    pub fn validate(self) -> Result<()> {
        match self {
            MoveSchedule::Bernoulli { probability } if !(0.0..=1.0).contains(&probability) => {
                Err(Error::InvalidInput(format!(
                    "tt probability must lie in [0, 1], got {probability}"
                )))
            }
            MoveSchedule::Periodic { every: 0 } => Err(Error::InvalidInput(
                "periodic schedule needs every >= 1".into(),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    Glauber,
    Tempered,
}

impl MoveKind {
    pub fn label(self) -> &'static str {
        match self {
            MoveKind::Glauber => "glauber",
            MoveKind::Tempered => "tt",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceStep {
    pub mean_spin: f64,
    pub kind: MoveKind,
    pub tempered: Option<TtMoveRecord>,
}

/// Per-step record of a chain.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChainTrace {
    pub initial_mean_spin: f64,
    pub steps: Vec<TraceStep>,
}

impl ChainTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn tt_attempts(&self) -> usize {
        self.steps.iter().filter(|s| s.tempered.is_some()).count()
    }

    pub fn tt_accepts(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| s.tempered.is_some_and(|r| r.accepted))
            .count()
    }

    /// Number of steps after which the mode differs from the mode before.
    pub fn mode_transitions(&self) -> usize {
        let mut prev = Mode::of_mean_spin(self.initial_mean_spin);
        let mut n = 0;
        for step in &self.steps {
            let m = Mode::of_mean_spin(step.mean_spin);
            n += usize::from(m != prev);
            prev = m;
        }
        n
    }

    /// Mode changes caused by accepted tempered moves.
    pub fn tt_mode_transitions(&self) -> usize {
        self.steps
            .iter()
            .filter_map(|s| s.tempered)
            .filter(|r| {
                r.accepted
                    && Mode::of_mean_spin(r.mean_spin_before)
                        != Mode::of_mean_spin(r.mean_spin_after)
            })
            .count()
    }
}

/// Chain length and move mix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McmcSettings {
    pub steps: usize,
    pub schedule: MoveSchedule,
}

/// Runs the mixed chain from `initial`; local steps are single sweeps of the
/// path's level-0 (target) model.
pub fn run_mcmc(
    tt: &TemperedTransition,
    initial: SpinConfig,
    settings: &McmcSettings,
    rng: &mut RngStream,
) -> Result<ChainTrace> {
    run_mcmc_observed(tt, initial, settings, rng, |_, _| {})
}

/// [`run_mcmc`] calling `observe(step, state)` after every step.
pub fn run_mcmc_observed<F>(
    tt: &TemperedTransition,
    initial: SpinConfig,
    settings: &McmcSettings,
    rng: &mut RngStream,
    mut observe: F,
) -> Result<ChainTrace>
where
    F: FnMut(usize, &SpinConfig),
{
    settings.schedule.validate()?;
    let target = tt.path().model(0);
    if initial.len() != target.len() {
        return Err(Error::DimensionMismatch {
            expected: target.len(),
            actual: initial.len(),
        });
    }
    let mut s = initial;
    let mut trace = ChainTrace {
        initial_mean_spin: s.mean_spin(),
        steps: Vec::with_capacity(settings.steps),
    };
    for step in 0..settings.steps {
        let tempered = match settings.schedule {
            MoveSchedule::Bernoulli { probability } => rng.uniform() < probability,
            MoveSchedule::Periodic { every } => (step + 1) % every == 0,
        };
        let record = if tempered {
            Some(tt.attempt(&mut s, rng))
        } else {
            tt.sweep_mode().sweep(target, &mut s, tt.plan(), rng);
            None
        };
        trace.steps.push(TraceStep {
            mean_spin: s.mean_spin(),
            kind: if tempered {
                MoveKind::Tempered
            } else {
                MoveKind::Glauber
            },
            tempered: record,
        });
        observe(step, &s);
    }
    Ok(trace)
}

/// Default burn-in: 5% of the chain.
pub fn default_burn_in(steps: usize) -> usize {
    steps / 20
}

const BATCHES: usize = 20;

/// Time-averaged mode masses after `burn_in`, with a batch-means standard error.
pub fn tt_mode_probabilities(trace: &ChainTrace, burn_in: usize) -> Result<ModeProbabilities> {
    if burn_in >= trace.len() {
        return Err(Error::InvalidInput(format!(
            "burn-in {burn_in} leaves no steps of a {}-step chain",
            trace.len()
        )));
    }
    let ind: Vec<f64> = trace.steps[burn_in..]
        .iter()
        .map(|s| {
            if Mode::of_mean_spin(s.mean_spin) == Mode::Plus {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let n = ind.len();
    let plus = ind.iter().sum::<f64>() / n as f64;
    let batch = n / BATCHES;
    let plus_std_error = if batch == 0 {
        f64::NAN
    } else {
        let means: Vec<f64> = ind
            .chunks_exact(batch)
            .take(BATCHES)
            .map(|c| c.iter().sum::<f64>() / batch as f64)
            .collect();
        let mu = means.iter().sum::<f64>() / means.len() as f64;
        let var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
        (var / means.len() as f64).sqrt()
    };
    Ok(ModeProbabilities {
        plus,
        minus: 1.0 - plus,
        plus_std_error,
    })
}
