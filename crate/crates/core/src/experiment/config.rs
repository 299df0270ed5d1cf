//! TOML experiment configuration.
//!
//! ```toml
//! seed = 7
//!
//! [model]
//! kind = "example2"          # example1 | example2 | file
//! n1 = 30
//! n2 = 32
//! beta = 0.8
//!
//! [symmetry]
//! kind = "paired_flip"       # double_flip | paired_flip | file
//! norm = "l2"
//!
//! [ais]
//! levels = 64
//! samples = 10000
//! warmup_sweeps = 1024
//!
//! [tt]
//! levels = 128
//! steps = 10000
//! tt_probability = 0.01
//! ```
//!
//! Unknown keys are rejected and every value is validated before any work
//! starts; errors name the offending key.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::InterpolationCurve;
use crate::spin_model::SidePolarity;
use crate::symmetry::DistanceNorm;
use crate::tempered::MoveSchedule;

pub const DEFAULT_WARMUP_SWEEPS: usize = 16;
pub const DEFAULT_TT_PROBABILITY: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every random stream of a run derives from it.
    #[serde(default)]
    pub seed: u64,
    /// Output directory; the CLI's `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<SymmetrySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ais: Option<AisConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tt: Option<TtConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Example1 {
        n: usize,
        beta: f64,
        noise_scale: f64,
        forcing_seed: u64,
    },
    Example2 {
        n1: usize,
        n2: usize,
        beta: f64,
        #[serde(default)]
        polarity: SidePolarity,
    },
    /// Model file in the `model.txt` format.
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymmetrySpec {
    DoubleFlip,
    PairedFlip {
        #[serde(default)]
        norm: DistanceNorm,
    },
    /// Pairing file in the `pairing.txt` format.
    File {
        path: PathBuf,
    },
}

/// Which continuation path a sampler runs on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathChoice {
    /// Between the target and its orbit-averaged reference.
    #[default]
    Reference,
    /// Inverse-temperature ladder down to `beta = 0`.
    Temperature,
}

impl PathChoice {
    pub fn label(self) -> &'static str {
        match self {
            PathChoice::Reference => "reference",
            PathChoice::Temperature => "temperature",
        }
    }
}

fn one() -> usize {
    1
}

fn default_warmup() -> usize {
    DEFAULT_WARMUP_SWEEPS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AisConfig {
    #[serde(default)]
    pub path: PathChoice,
    pub levels: usize,
    pub samples: usize,
    #[serde(default = "one")]
    pub sweeps_per_level: usize,
    /// Sweeps of the reference after the uniform start; on the temperature
    /// path they are spent at `beta = 0` to keep budgets equal.
    #[serde(default = "default_warmup")]
    pub warmup_sweeps: usize,
    #[serde(default)]
    pub curve: InterpolationCurve,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TtConfig {
    #[serde(default)]
    pub path: PathChoice,
    /// Steps from the target to the turning point.
    pub levels: usize,
    pub steps: usize,
    #[serde(default = "one")]
    pub sweeps_per_level: usize,
    /// Per-step probability of a tempered move. Exclusive with `tt_every`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tt_probability: Option<f64>,
    /// Attempt a tempered move every this many steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tt_every: Option<usize>,
    /// Steps dropped before estimating mode masses; default 5% of `steps`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default)]
    pub curve: InterpolationCurve,
}

impl TtConfig {
    pub fn schedule(&self) -> MoveSchedule {
        match (self.tt_probability, self.tt_every) {
            (_, Some(every)) => MoveSchedule::Periodic { every },
            (p, None) => MoveSchedule::Bernoulli {
                probability: p.unwrap_or(DEFAULT_TT_PROBABILITY),
            },
        }
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
            .unwrap_or_else(|| crate::tempered::default_burn_in(self.steps))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    /// Standard errors allowed between AIS estimates and exact values.
    #[serde(default = "default_sigmas")]
    pub sigmas: f64,
    /// Largest tolerated total variation between the TT chain's state
    /// histogram and the exact distribution.
    #[serde(default = "default_tv")]
    pub max_total_variation: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            sigmas: default_sigmas(),
            max_total_variation: default_tv(),
        }
    }
}

fn default_sigmas() -> f64 {
    3.0
}

fn default_tv() -> f64 {
    0.05
}

fn check(ok: bool, key: &str, reason: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(key, reason()))
    }
}

fn check_beta(key: &str, beta: f64) -> Result<()> {
    check(beta.is_finite() && beta >= 0.0, key, || {
        format!("must be finite and non-negative, got {beta}")
    })
}

fn check_curve(key: &str, curve: InterpolationCurve) -> Result<()> {
    curve
        .validate()
        .map_err(|e| Error::config(key, e.to_string()))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self =
            toml::from_str(text).map_err(|e| Error::config("<config>", e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file; relative `path` entries resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config = Self::from_toml_str(&text)?;
        if let Some(base) = path.parent() {
            config.resolve_paths(base);
        }
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let ModelSpec::File { path } = &mut self.model {
            fix(path);
        }
        if let Some(SymmetrySpec::File { path }) = &mut self.symmetry {
            fix(path);
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        match &self.model {
            ModelSpec::Example1 {
                n,
                beta,
                noise_scale,
                ..
            } => {
                check(*n >= 3, "model.n", || {
                    format!("must be at least 3, got {n}")
                })?;
                check_beta("model.beta", *beta)?;
                check(
                    noise_scale.is_finite() && *noise_scale >= 0.0,
                    "model.noise_scale",
                    || format!("must be finite and non-negative, got {noise_scale}"),
                )?;
            }
            ModelSpec::Example2 { n1, n2, beta, .. } => {
                check(*n1 >= 3, "model.n1", || {
                    format!("must be at least 3, got {n1}")
                })?;
                check(*n2 >= 3, "model.n2", || {
                    format!("must be at least 3, got {n2}")
                })?;
                check_beta("model.beta", *beta)?;
            }
            ModelSpec::File { path } => {
                check(!path.as_os_str().is_empty(), "model.path", || {
                    "must not be empty".into()
                })?;
            }
        }
        if let (Some(SymmetrySpec::DoubleFlip), ModelSpec::Example2 { n1, n2, .. }) =
            (&self.symmetry, &self.model)
        {
            check(n1 == n2, "symmetry.kind", || {
                format!("double_flip needs a square lattice, got {n1}x{n2}")
            })?;
        }
        if let Some(ais) = &self.ais {
            check(ais.levels >= 1, "ais.levels", || {
                "must be at least 1".into()
            })?;
            check(ais.samples >= 2, "ais.samples", || {
                format!("must be at least 2, got {}", ais.samples)
            })?;
            check(ais.sweeps_per_level >= 1, "ais.sweeps_per_level", || {
                "must be at least 1".into()
            })?;
            check(ais.warmup_sweeps >= 1, "ais.warmup_sweeps", || {
                "must be at least 1".into()
            })?;
            check_curve("ais.curve", ais.curve)?;
        }
        if let Some(tt) = &self.tt {
            check(tt.levels >= 1, "tt.levels", || "must be at least 1".into())?;
            check(tt.steps >= 1, "tt.steps", || "must be at least 1".into())?;
            check(tt.sweeps_per_level >= 1, "tt.sweeps_per_level", || {
                "must be at least 1".into()
            })?;
            check(
                tt.tt_probability.is_none() || tt.tt_every.is_none(),
                "tt.tt_every",
                || "conflicts with tt.tt_probability; set one".into(),
            )?;
            if let Some(p) = tt.tt_probability {
                check((0.0..=1.0).contains(&p), "tt.tt_probability", || {
                    format!("must lie in [0, 1], got {p}")
                })?;
            }
            if let Some(every) = tt.tt_every {
                check(every >= 1, "tt.tt_every", || "must be at least 1".into())?;
            }
            check(tt.burn_in() < tt.steps, "tt.burn_in", || {
                format!("must be smaller than tt.steps ({})", tt.steps)
            })?;
            check_curve("tt.curve", tt.curve)?;
        }
        if let Some(oracle) = &self.oracle {
            check(
                oracle.sigmas.is_finite() && oracle.sigmas > 0.0,
                "oracle.sigmas",
                || format!("must be positive, got {}", oracle.sigmas),
            )?;
            check(
                oracle.max_total_variation > 0.0 && oracle.max_total_variation <= 1.0,
                "oracle.max_total_variation",
                || format!("must lie in (0, 1], got {}", oracle.max_total_variation),
            )?;
        }
        Ok(())
    }

    /// Section required by a subcommand.
    pub fn require_ais(&self) -> Result<&AisConfig> {
        self.ais
            .as_ref()
            .ok_or_else(|| Error::config("ais", "section is required for this command"))
    }

    pub fn require_tt(&self) -> Result<&TtConfig> {
        self.tt
            .as_ref()
            .ok_or_else(|| Error::config("tt", "section is required for this command"))
    }

    pub fn require_symmetry(&self) -> Result<&SymmetrySpec> {
        self.symmetry
            .as_ref()
            .ok_or_else(|| Error::config("symmetry", "section is required for this command"))
    }
}
