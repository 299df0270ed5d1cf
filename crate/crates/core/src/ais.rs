//! Annealed importance sampling along a [`PathFamily`].
//!
//! A sample starts from level 0, takes `sweeps_per_level` heat-bath sweeps at
//! each intermediate level, and accumulates the log-weight
//! `sum_{l=1..L} E_l(s_{l-1/2}) - E_{l-1}(s_{l-1/2})`, where `s_{l-1/2}` is the
//! state entering level `l`. All weight arithmetic stays in log space.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{glauber_sweep, sample_reference, SweepPlan};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::schedule::{PathFamily, PathKind};
use crate::spin_model::{Mode, SpinConfig};

/// How the level-0 state is drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitSampler {
    /// Exact uniform draw; correct for a `beta = 0` start.
    Uniform,
    /// Uniform draw followed by sweeps of the level-0 model.
    Warmup { sweeps: usize },
    /// Uniform draw followed by sweeps at level 0, counted in the budget but
    /// without effect on a `beta = 0` start. Used to equalize costs between paths.
    Padded { sweeps: usize },
}

impl InitSampler {
    pub fn sweeps(self) -> usize {
        match self {
            InitSampler::Uniform => 0,
            InitSampler::Warmup { sweeps } | InitSampler::Padded { sweeps } => sweeps,
        }
    }

    /// Default level-0 sampler for a path kind.
    pub fn for_path(kind: PathKind, warmup_sweeps: usize) -> Self {
        match kind {
            PathKind::AisTemperature => InitSampler::Uniform,
            _ => InitSampler::Warmup {
                sweeps: warmup_sweeps,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AisSettings {
    pub sweeps_per_level: usize,
    pub init: InitSampler,
}

/// One AIS draw: final state, its log-weight and the running log-weights
/// `log w_1, ..., log w_L`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSample {
    pub config: SpinConfig,
    pub log_weight: f64,
    pub level_log_weights: Vec<f64>,
}

/// Draws one weighted sample.
pub fn ais_sample(
    path: &PathFamily,
    plan: &SweepPlan,
    settings: &AisSettings,
    rng: &mut RngStream,
) -> Result<WeightedSample> {
    if path.kind().is_palindromic() {
        return Err(Error::InvalidInput(format!(
            "AIS needs a one-way path, got {:?}",
            path.kind()
        )));
    }
    if settings.sweeps_per_level == 0 {
        return Err(Error::InvalidInput(
            "sweeps_per_level must be at least 1".into(),
        ));
    }
    let levels = path.levels();
    let mut s = match settings.init {
        InitSampler::Uniform => SpinConfig::uniform(path.start().len(), rng),
        InitSampler::Warmup { sweeps } | InitSampler::Padded { sweeps } => {
            sample_reference(path.model(0), sweeps, plan, rng)?
        }
    };
    let mut log_w = 0.0;
    let mut history = Vec::with_capacity(levels);
    for l in 1..=levels {
        let (start, end) = path.endpoint_log_densities(&s);
        log_w += path.increment_from(l, start, end);
        history.push(log_w);
        if l < levels {
            let model = path.model(l);
            for _ in 0..settings.sweeps_per_level {
                glauber_sweep(model, &mut s, plan, rng);
            }
        }
    }
    Ok(WeightedSample {
        config: s,
        log_weight: log_w,
        level_log_weights: history,
    })
}

/// `log(sum exp(x))`, `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Log of weights normalized to average one: `log w_k - log(mean w)`.
pub fn normalize_log_weights(log_weights: &[f64]) -> Vec<f64> {
    let log_mean = log_sum_exp(log_weights) - (log_weights.len() as f64).ln();
    log_weights.iter().map(|lw| lw - log_mean).collect()
}

/// `(1 + Var(w_bar))^-1` with `w_bar` normalized to mean one and the
/// population variance. Equals `ESS / K`.
pub fn sampling_efficiency(log_weights: &[f64]) -> f64 {
    let normalized = normalize_log_weights(log_weights);
    let k = normalized.len() as f64;
    let var = normalized
        .iter()
        .map(|lw| {
            let d = lw.exp() - 1.0;
            d * d
        })
        .sum::<f64>()
        / k;
    1.0 / (1.0 + var)
}

/// Outcome of a full AIS run.
#[derive(Clone, Debug)]
pub struct AisReport {
    pub samples: Vec<WeightedSample>,
    /// `normalized_log_weights[k][l-1]` is the normalized `log w_l` of sample `k`.
    pub normalized_log_weights: Vec<Vec<f64>>,
    pub efficiency: f64,
    pub total_sweeps: u64,
    pub sweeps_per_independent_sample: f64,
}

impl AisReport {
    pub fn log_weights(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.log_weight).collect()
    }

    /// Self-normalized weights summing to one.
    pub fn self_normalized_weights(&self) -> Vec<f64> {
        let lw = self.log_weights();
        let total = log_sum_exp(&lw);
        lw.iter().map(|x| (x - total).exp()).collect()
    }

    /// Self-normalized estimate of `E[f]` and its delta-method standard error.
    pub fn expectation<F>(&self, f: F) -> Estimate
    where
        F: Fn(&SpinConfig) -> f64,
    {
        let w = self.self_normalized_weights();
        let values: Vec<f64> = self.samples.iter().map(|s| f(&s.config)).collect();
        weighted_estimate(&w, &values)
    }
}

/// Point estimate with a standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

fn weighted_estimate(w: &[f64], values: &[f64]) -> Estimate {
    let mean: f64 = w.iter().zip(values).map(|(w, v)| w * v).sum();
    let var: f64 = w
        .iter()
        .zip(values)
        .map(|(w, v)| (w * (v - mean)).powi(2))
        .sum();
    Estimate {
        mean,
        std_error: var.sqrt(),
    }
}

/// Runs `samples` independent AIS draws. Sample `k` uses the stream
/// `RngStream::new(seed).derive(k)`, so the report does not depend on the
/// size of the rayon pool it runs on.
pub fn run_ais(
    path: &PathFamily,
    settings: &AisSettings,
    samples: usize,
    seed: u64,
) -> Result<AisReport> {
    if samples < 2 {
        return Err(Error::InvalidInput(format!(
            "AIS needs at least 2 samples to estimate a variance, got {samples}"
        )));
    }
    let plan = path.sweep_plan()?;
    let master = RngStream::new(seed);
    let drawn: Vec<WeightedSample> = (0..samples)
        .into_par_iter()
        .map(|k| ais_sample(path, &plan, settings, &mut master.derive(k as u64)))
        .collect::<Result<_>>()?;
    Ok(assemble_report(drawn, path.levels(), settings))
}

fn assemble_report(
    samples: Vec<WeightedSample>,
    levels: usize,
    settings: &AisSettings,
) -> AisReport {
    let k = samples.len();
    let mut normalized_log_weights = vec![vec![0.0; levels]; k];
    let mut column = vec![0.0; k];
    for l in 0..levels {
        for (c, s) in column.iter_mut().zip(&samples) {
            *c = s.level_log_weights[l];
        }
        for (row, v) in normalized_log_weights
            .iter_mut()
            .zip(normalize_log_weights(&column))
        {
            row[l] = v;
        }
    }
    let final_weights: Vec<f64> = samples.iter().map(|s| s.log_weight).collect();
    let efficiency = sampling_efficiency(&final_weights);
    let per_sample = settings.init.sweeps() as u64
        + (levels.saturating_sub(1) * settings.sweeps_per_level) as u64;
    let total_sweeps = per_sample * k as u64;
    AisReport {
        samples,
        normalized_log_weights,
        efficiency,
        total_sweeps,
        sweeps_per_independent_sample: total_sweeps as f64 / (k as f64 * efficiency),
    }
}

/// Mode masses by sign of mean spin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeProbabilities {
    pub plus: f64,
    pub minus: f64,
    pub plus_std_error: f64,
}

/// Self-normalized weighted mode masses with a caller-supplied classifier.
pub fn weighted_mode_probabilities_with<C>(
    report: &AisReport,
    classify: C,
) -> Result<ModeProbabilities>
where
    C: Fn(&SpinConfig) -> Mode,
{
    if report.samples.is_empty() {
        return Err(Error::InvalidInput("no samples".into()));
    }
    let lw = report.log_weights();
    let total = log_sum_exp(&lw);
    if !total.is_finite() {
        return Err(Error::Numeric(format!(
            "degenerate weights: log sum = {total}"
        )));
    }
    let w: Vec<f64> = lw.iter().map(|x| (x - total).exp()).collect();
    let ind: Vec<f64> = report
        .samples
        .iter()
        .map(|s| {
            if classify(&s.config) == Mode::Plus {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let est = weighted_estimate(&w, &ind);
    Ok(ModeProbabilities {
        plus: est.mean,
        minus: 1.0 - est.mean,
        plus_std_error: est.std_error,
    })
}

/// Mode masses with the mean-spin sign classifier.
pub fn weighted_mode_probabilities(report: &AisReport) -> Result<ModeProbabilities> {
    weighted_mode_probabilities_with(report, SpinConfig::mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::InterpolationCurve;
    use crate::spin_model::{build_example1, build_example2, Lattice, QuadraticModel};
    use crate::symmetry::{build_double_flip, build_paired_flip, build_reference, DistanceNorm};

    const SETTINGS: AisSettings = AisSettings {
        sweeps_per_level: 1,
        init: InitSampler::Warmup { sweeps: 4 },
    };

    #[test]
    fn log_sum_exp_is_stable() {
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
    }

    #[test]
    fn equal_weights_have_unit_efficiency() {
        assert_eq!(sampling_efficiency(&[3.5; 10]), 1.0);
        assert_eq!(sampling_efficiency(&[0.0; 10]), 1.0);
    }

    #[test]
    fn efficiency_is_ess_fraction() {
        let lw = [0.0, 1.0, -2.0, 0.5, 3.0];
        let w: Vec<f64> = lw.iter().map(|x: &f64| x.exp()).collect();
        let s1: f64 = w.iter().sum();
        let s2: f64 = w.iter().map(|x| x * x).sum();
        let ess_fraction = s1 * s1 / s2 / w.len() as f64;
        assert!((sampling_efficiency(&lw) - ess_fraction).abs() < 1e-12);
        let e = sampling_efficiency(&lw);
        assert!(e > 0.0 && e < 1.0);
    }

    #[test]
    fn normalized_weights_average_one() {
        let lw = [700.0, 701.5, 699.0, 702.0];
        let n = normalize_log_weights(&lw);
        let mean: f64 = n.iter().map(|x| x.exp()).sum::<f64>() / 4.0;
        assert!((mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_defect_weights_vanish() {
        let m = build_example1(8, 0.8, 0.0, 0).unwrap();
        let g = build_double_flip(&Lattice::square(8).unwrap()).unwrap();
        let r = build_reference(&m, &g).unwrap();
        let path =
            PathFamily::ais_reference(&r.reference, &m, 8, InterpolationCurve::Linear).unwrap();
        let report = run_ais(&path, &SETTINGS, 50, 1).unwrap();
        assert!(report.samples.iter().all(|s| s.log_weight == 0.0));
        assert_eq!(report.efficiency, 1.0);
    }

    #[test]
    fn history_is_consistent_with_increments() {
        let m = build_example2(5, 6, 0.8).unwrap();
        let g = build_paired_flip(&Lattice::new(5, 6).unwrap(), DistanceNorm::Linf);
        let r = build_reference(&m, &g).unwrap();
        let path =
            PathFamily::ais_reference(&r.reference, &m, 12, InterpolationCurve::Linear).unwrap();
        let plan = path.sweep_plan().unwrap();
        let sample = ais_sample(&path, &plan, &SETTINGS, &mut RngStream::new(3)).unwrap();
        assert_eq!(sample.level_log_weights.len(), 12);
        assert_eq!(*sample.level_log_weights.last().unwrap(), sample.log_weight);
        // The final increment is evaluated at the returned state.
        let last = path.level_increment(12, &sample.config);
        let diff = sample.level_log_weights[11] - sample.level_log_weights[10];
        assert!((last - diff).abs() < 1e-12);
    }

    #[test]
    fn single_level_is_plain_importance_sampling() {
        let m = build_example2(4, 3, 0.6).unwrap();
        let g = build_paired_flip(&Lattice::new(4, 3).unwrap(), DistanceNorm::L2);
        let r = build_reference(&m, &g).unwrap();
        let path =
            PathFamily::ais_reference(&r.reference, &m, 1, InterpolationCurve::Linear).unwrap();
        let report = run_ais(&path, &SETTINGS, 100, 9).unwrap();
        for s in &report.samples {
            let direct = m.log_density(&s.config) - r.reference.log_density(&s.config);
            assert!((s.log_weight - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let m = build_example2(4, 3, 0.6).unwrap();
        let path = PathFamily::ais_temperature(&m, 4, InterpolationCurve::Linear).unwrap();
        assert!(run_ais(&path, &SETTINGS, 1, 0).is_err());
        let tt = PathFamily::tt_temperature(&m, 4, InterpolationCurve::Linear).unwrap();
        assert!(run_ais(&tt, &SETTINGS, 10, 0).is_err());
        let zero = AisSettings {
            sweeps_per_level: 0,
            init: InitSampler::Uniform,
        };
        assert!(run_ais(&path, &zero, 10, 0).is_err());
    }

    #[test]
    fn report_matrix_rows_average_one() {
        let m = build_example2(5, 4, 0.7).unwrap();
        let path = PathFamily::ais_temperature(&m, 6, InterpolationCurve::Linear).unwrap();
        let report = run_ais(
            &path,
            &AisSettings {
                sweeps_per_level: 2,
                init: InitSampler::Uniform,
            },
            200,
            5,
        )
        .unwrap();
        for l in 0..6 {
            let mean: f64 = report
                .normalized_log_weights
                .iter()
                .map(|r| r[l].exp())
                .sum::<f64>()
                / 200.0;
            assert!((mean - 1.0).abs() < 1e-10);
        }
        assert_eq!(report.total_sweeps, 200 * 10);
        assert!(report.efficiency > 0.0 && report.efficiency <= 1.0);
    }

    #[test]
    fn symmetric_model_modes_balance() {
        // Field-free model on an odd node count: E(-s) = E(s) and no ties.
        let lat = Lattice::new(5, 3).unwrap();
        let m = QuadraticModel::from_lattice(&lat, vec![0.0; 15], 0.4).unwrap();
        let path = PathFamily::ais_temperature(&m, 8, InterpolationCurve::Linear).unwrap();
        let report = run_ais(
            &path,
            &AisSettings {
                sweeps_per_level: 1,
                init: InitSampler::Uniform,
            },
            4000,
            2,
        )
        .unwrap();
        let p = weighted_mode_probabilities(&report).unwrap();
        assert!(
            (p.plus - 0.5).abs() < 3.0 * p.plus_std_error + 1e-3,
            "{p:?}"
        );
    }
}
