//! Sampling multimodal Ising-type models with approximate symmetries.
//!
//! A signed involution `g` that nearly preserves a target log-density `E`
//! induces an exactly symmetric reference `E_R(s) = (E(s) + E(gs)) / 2`.
//! Paths between `E` and `E_R` drive annealed importance sampling
//! ([`ais`]) and tempered transitions ([`tempered`]); temperature paths
//! give the classical baselines. [`oracle`] enumerates tiny models exactly.

pub mod ais;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod oracle;
pub mod rng;
pub mod schedule;
pub mod spin_model;
pub mod symmetry;
pub mod tempered;

pub use ais::{run_ais, AisReport, AisSettings, Estimate, InitSampler, ModeProbabilities};
pub use dynamics::{SweepMode, SweepPlan};
pub use error::{Error, Result};
pub use experiment::{run_experiment, Command, ExperimentConfig, RunSummary};
pub use rng::RngStream;
pub use schedule::{InterpolationCurve, PathFamily, PathKind};
pub use spin_model::{Lattice, Mode, QuadraticModel, SpinConfig};
pub use symmetry::{DistanceNorm, OrbitAveragedModel, SignedInvolution};
pub use tempered::{run_mcmc, ChainTrace, McmcSettings, MoveSchedule, TemperedTransition};
