use std::io::{BufReader, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{AisConfig, ExperimentConfig, ModelSpec, PathChoice, SymmetrySpec, TtConfig};
use super::output::{self, ComparisonRow};
use crate::ais::{
    run_ais, weighted_mode_probabilities, AisReport, AisSettings, Estimate, InitSampler,
    ModeProbabilities,
};
use crate::dynamics::{SweepMode, SweepPlan};
use crate::error::{Error, Result};
use crate::oracle::{self, kernel_stationarity_check, SweepKernel};
use crate::rng::RngStream;
use crate::schedule::PathFamily;
use crate::spin_model::{
    build_example1, build_example2_with, read_model, write_model, Lattice, QuadraticModel,
    SpinConfig,
};
use crate::symmetry::{
    build_double_flip, build_paired_flip, build_reference, pairing_mismatch, random_probes,
    read_pairing, relative_defect, write_pairing, DefectStats, OrbitAveragedModel,
    SignedInvolution, DEFECT_PROBES,
};
use crate::tempered::{
    run_mcmc_observed, tt_mode_probabilities, ChainTrace, McmcSettings, TemperedTransition,
};

/// Stream labels under the master seed.
const AIS_STREAM: u64 = 1;
const AIS_TEMPERATURE_STREAM: u64 = 2;
const TT_STREAM: u64 = 3;
const TT_TEMPERATURE_STREAM: u64 = 4;
const REFERENCE_PROBE_STREAM: u64 = 5;
/// Sweep kernels are pushed exactly only up to this many sites.
const SWEEP_DRIFT_MAX_SITES: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    BuildModel,
    DiagnoseSymmetry,
    RunAis,
    RunTt,
    ComparePaths,
    OracleCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::BuildModel => "build-model",
            Command::DiagnoseSymmetry => "diagnose-symmetry",
            Command::RunAis => "run-ais",
            Command::RunTt => "run-tt",
            Command::ComparePaths => "compare-paths",
            Command::OracleCheck => "oracle-check",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelStats {
    pub nodes: usize,
    pub bonds: usize,
    pub beta: f64,
    pub field_sum: f64,
    pub shape: Option<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryStats {
    pub fixed_points: usize,
    /// `|E(gs) - E(s)|` of the target over uniform probes.
    pub defect: DefectStats,
    /// Largest `|E_R(gs) - E_R(s)| / (1 + |E_R(s)|)` over uniform probes.
    pub reference_relative_defect: f64,
    /// `max_i |y_i - x_{g(i)}|` for geometric pairings.
    pub pairing_mismatch: Option<f64>,
    pub target_bonds: usize,
    pub reference_bonds: usize,
    /// Target bonds `(i, j)` whose image `(g i, g j)` is not a target bond.
    pub unmapped_bonds: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AisStats {
    pub path: String,
    pub levels: usize,
    pub samples: usize,
    pub efficiency: f64,
    pub total_sweeps: u64,
    pub sweeps_per_independent_sample: f64,
    pub mode_probabilities: ModeProbabilities,
    pub mean_spin: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TtStats {
    pub path: String,
    pub levels: usize,
    pub steps: usize,
    pub burn_in: usize,
    pub attempts: usize,
    pub accepts: usize,
    pub acceptance_rate: f64,
    /// Accepted tempered moves that changed the mode.
    pub mode_transitions: usize,
    pub mode_probabilities: ModeProbabilities,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleStats {
    pub sites: usize,
    pub log_partition: f64,
    pub exact_mean_spin: f64,
    pub exact_plus: f64,
    /// `TV(p, p K)` for one sweep of the target, on models small enough to push exactly.
    pub sweep_drift: Option<f64>,
    pub ais_mean_spin_z: Option<f64>,
    pub ais_plus_z: Option<f64>,
    pub tt_total_variation: Option<f64>,
    pub passed: bool,
}

/// Structured summary; reproducible bit for bit from `(config, seed)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub command: Command,
    pub seed: u64,
    pub model: ModelStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<SymmetryStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ais: Option<AisStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tt: Option<TtStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Vec<ComparisonRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleStats>,
    pub config: ExperimentConfig,
}

#[derive(Clone, Debug, Serialize)]
struct Timing {
    command: Command,
    wall_clock_seconds: f64,
    threads: usize,
}

/// Runs `f` on a dedicated rayon pool with `workers` threads (the global
/// pool when `None`).
pub fn with_workers<T, F>(workers: Option<usize>, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::config("workers", "must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Target model described by the config.
pub fn build_model(spec: &ModelSpec) -> Result<QuadraticModel> {
    match spec {
        ModelSpec::Example1 {
            n,
            beta,
            noise_scale,
            forcing_seed,
        } => build_example1(*n, *beta, *noise_scale, *forcing_seed),
        ModelSpec::Example2 {
            n1,
            n2,
            beta,
            polarity,
        } => build_example2_with(*n1, *n2, *beta, *polarity),
        ModelSpec::File { path } => {
            let file = std::fs::File::open(path)?;
            read_model(BufReader::new(file))
        }
    }
}

fn lattice_of(model: &QuadraticModel, what: &str) -> Result<Lattice> {
    let (n1, n2) = model.shape().ok_or_else(|| {
        Error::config(
            "symmetry.kind",
            format!("{what} needs a model with lattice shape"),
        )
    })?;
    Lattice::new(n1, n2)
}

/// Action described by the config, with its pairing mismatch when geometric.
pub fn build_action(
    spec: &SymmetrySpec,
    model: &QuadraticModel,
) -> Result<(SignedInvolution, Option<f64>)> {
    let (action, mismatch) = match spec {
        SymmetrySpec::DoubleFlip => {
            let lat = lattice_of(model, "double_flip")?;
            let g = build_double_flip(&lat)
                .map_err(|e| Error::config("symmetry.kind", e.to_string()))?;
            (g, None)
        }
        SymmetrySpec::PairedFlip { norm } => {
            let lat = lattice_of(model, "paired_flip")?;
            let g = build_paired_flip(&lat, *norm);
            let m = pairing_mismatch(&lat, &g);
            (g, Some(m))
        }
        SymmetrySpec::File { path } => {
            let file = std::fs::File::open(path)?;
            (read_pairing(BufReader::new(file))?, None)
        }
    };
    if action.len() != model.len() {
        return Err(Error::config(
            "symmetry",
            format!(
                "action covers {} nodes, model has {}",
                action.len(),
                model.len()
            ),
        ));
    }
    Ok((action, mismatch))
}

fn model_stats(model: &QuadraticModel) -> ModelStats {
    ModelStats {
        nodes: model.len(),
        bonds: model.edges().count(),
        beta: model.beta(),
        field_sum: model.field().iter().sum(),
        shape: model.shape(),
    }
}

fn symmetry_stats(
    model: &QuadraticModel,
    orbit: &OrbitAveragedModel,
    mismatch: Option<f64>,
    seed: u64,
) -> SymmetryStats {
    let g = &orbit.action;
    let probe_seed = RngStream::new(seed)
        .derive(REFERENCE_PROBE_STREAM)
        .next_u64();
    let probes = random_probes(model.len(), DEFECT_PROBES, probe_seed);
    SymmetryStats {
        fixed_points: g.fixed_points(),
        defect: orbit.defect,
        reference_relative_defect: relative_defect(&orbit.reference, g, &probes),
        pairing_mismatch: mismatch,
        target_bonds: model.edges().count(),
        reference_bonds: orbit.reference.edges().count(),
        unmapped_bonds: model
            .edges()
            .filter(|&(i, j, _)| model.coupling(g.image(i), g.image(j)) == 0.0)
            .count(),
    }
}

fn stream_seed(seed: u64, label: u64) -> u64 {
    RngStream::new(seed).derive(label).next_u64()
}

fn sweep_mode() -> SweepMode {
    if rayon::current_num_threads() > 1 {
        SweepMode::Parallel
    } else {
        SweepMode::Serial
    }
}

/// Everything a sampler run needs, built once.
struct Setup {
    model: QuadraticModel,
    orbit: Option<OrbitAveragedModel>,
    mismatch: Option<f64>,
}

impl Setup {
    fn new(config: &ExperimentConfig, need_symmetry: bool) -> Result<Self> {
        let model = build_model(&config.model)?;
        let (orbit, mismatch) = match (&config.symmetry, need_symmetry) {
            (Some(spec), _) => {
                let (g, m) = build_action(spec, &model)?;
                (Some(build_reference(&model, &g)?), m)
            }
            (None, true) => {
                return Err(Error::config(
                    "symmetry",
                    "section is required for the reference path",
                ))
            }
            (None, false) => (None, None),
        };
        Ok(Self {
            model,
            orbit,
            mismatch,
        })
    }

    fn orbit(&self) -> Result<&OrbitAveragedModel> {
        self.orbit
            .as_ref()
            .ok_or_else(|| Error::config("symmetry", "section is required for the reference path"))
    }

    fn symmetry_stats(&self, seed: u64) -> Option<SymmetryStats> {
        self.orbit
            .as_ref()
            .map(|o| symmetry_stats(&self.model, o, self.mismatch, seed))
    }

    fn ais_path(&self, cfg: &AisConfig, choice: PathChoice) -> Result<PathFamily> {
        match choice {
            PathChoice::Reference => PathFamily::ais_reference(
                &self.orbit()?.reference,
                &self.model,
                cfg.levels,
                cfg.curve,
            ),
            PathChoice::Temperature => {
                PathFamily::ais_temperature(&self.model, cfg.levels, cfg.curve)
            }
        }
    }

    fn tt_move(&self, cfg: &TtConfig, choice: PathChoice) -> Result<TemperedTransition> {
        let tt = match choice {
            PathChoice::Reference => {
                let orbit = self.orbit()?;
                let path =
                    PathFamily::tt_reference(&self.model, &orbit.reference, cfg.levels, cfg.curve)?;
                TemperedTransition::with_group_jump(
                    path,
                    orbit.action.clone(),
                    cfg.sweeps_per_level,
                )
                .map_err(|e| Error::config("symmetry", e.to_string()))?
            }
            PathChoice::Temperature => {
                let path = PathFamily::tt_temperature(&self.model, cfg.levels, cfg.curve)?;
                TemperedTransition::with_turning_sweeps(path, cfg.sweeps_per_level)?
            }
        };
        Ok(tt.with_sweep_mode(sweep_mode()))
    }

    fn write_common(&self, dir: &Path) -> Result<()> {
        let mut out = output::create(dir, output::MODEL_FILE)?;
        write_model(&self.model, &mut out)?;
        out.flush()?;
        if let Some(orbit) = &self.orbit {
            let mut out = output::create(dir, output::PAIRING_FILE)?;
            write_pairing(&orbit.action, self.mismatch, &mut out)?;
            out.flush()?;
        }
        Ok(())
    }
}

fn ais_settings(cfg: &AisConfig, choice: PathChoice) -> AisSettings {
    let init = match choice {
        PathChoice::Reference => InitSampler::Warmup {
            sweeps: cfg.warmup_sweeps,
        },
        // beta = 0 start is sampled exactly; the sweeps only match budgets.
        PathChoice::Temperature => InitSampler::Padded {
            sweeps: cfg.warmup_sweeps,
        },
    };
    AisSettings {
        sweeps_per_level: cfg.sweeps_per_level,
        init,
    }
}

fn ais_stats(report: &AisReport, cfg: &AisConfig, choice: PathChoice) -> Result<AisStats> {
    Ok(AisStats {
        path: choice.label().into(),
        levels: cfg.levels,
        samples: cfg.samples,
        efficiency: report.efficiency,
        total_sweeps: report.total_sweeps,
        sweeps_per_independent_sample: report.sweeps_per_independent_sample,
        mode_probabilities: weighted_mode_probabilities(report)?,
        mean_spin: report.expectation(SpinConfig::mean_spin),
    })
}

fn run_chain<F>(
    setup: &Setup,
    cfg: &TtConfig,
    choice: PathChoice,
    seed: u64,
    label: u64,
    observe: F,
) -> Result<(ChainTrace, TtStats)>
where
    F: FnMut(usize, &SpinConfig),
{
    let tt = setup.tt_move(cfg, choice)?;
    let mut rng = RngStream::new(seed).derive(label);
    let initial = SpinConfig::uniform(setup.model.len(), &mut rng);
    let settings = McmcSettings {
        steps: cfg.steps,
        schedule: cfg.schedule(),
    };
    let trace = run_mcmc_observed(&tt, initial, &settings, &mut rng, observe)?;
    let burn_in = cfg.burn_in();
    let attempts = trace.tt_attempts();
    let accepts = trace.tt_accepts();
    let stats = TtStats {
        path: choice.label().into(),
        levels: cfg.levels,
        steps: cfg.steps,
        burn_in,
        attempts,
        accepts,
        acceptance_rate: if attempts == 0 {
            0.0
        } else {
            accepts as f64 / attempts as f64
        },
        mode_transitions: trace.tt_mode_transitions(),
        mode_probabilities: tt_mode_probabilities(&trace, burn_in)?,
    };
    Ok((trace, stats))
}

fn empty_summary(
    command: Command,
    config: &ExperimentConfig,
    model: &QuadraticModel,
) -> RunSummary {
    RunSummary {
        command,
        seed: config.seed,
        model: model_stats(model),
        symmetry: None,
        ais: None,
        tt: None,
        comparison: None,
        oracle: None,
        config: config.clone(),
    }
}

/// Runs one subcommand and writes its artifacts plus `summary.json` and
/// `timing.json` into `out_dir`, which is created if needed.
pub fn run_experiment(
    command: Command,
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<RunSummary> {
    config.validate()?;
    let started = Instant::now();
    std::fs::create_dir_all(out_dir)?;
    let summary = match command {
        Command::BuildModel => build_model_cmd(config, out_dir)?,
        Command::DiagnoseSymmetry => diagnose_symmetry(config, out_dir)?,
        Command::RunAis => run_ais_cmd(config, out_dir)?,
        Command::RunTt => run_tt_cmd(config, out_dir)?,
        Command::ComparePaths => compare_paths(config, out_dir)?,
        Command::OracleCheck => oracle_check(config, out_dir)?,
    };
    output::write_json(out_dir, output::SUMMARY_FILE, &summary)?;
    let timing = Timing {
        command,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
    };
    output::write_json(out_dir, output::TIMING_FILE, &timing)?;
    Ok(summary)
}

fn build_model_cmd(config: &ExperimentConfig, dir: &Path) -> Result<RunSummary> {
    let setup = Setup::new(config, false)?;
    setup.write_common(dir)?;
    let mut summary = empty_summary(Command::BuildModel, config, &setup.model);
    summary.symmetry = setup.symmetry_stats(config.seed);
    Ok(summary)
}

fn diagnose_symmetry(config: &ExperimentConfig, dir: &Path) -> Result<RunSummary> {
    config.require_symmetry()?;
    let setup = Setup::new(config, true)?;
    setup.write_common(dir)?;
    let mut out = output::create(dir, output::REFERENCE_FILE)?;
    write_model(&setup.orbit()?.reference, &mut out)?;
    out.flush()?;
    let mut summary = empty_summary(Command::DiagnoseSymmetry, config, &setup.model);
    summary.symmetry = setup.symmetry_stats(config.seed);
    Ok(summary)
}

fn run_ais_cmd(config: &ExperimentConfig, dir: &Path) -> Result<RunSummary> {
    let cfg = config.require_ais()?;
    let setup = Setup::new(config, cfg.path == PathChoice::Reference)?;
    let path = setup.ais_path(cfg, cfg.path)?;
    let label = match cfg.path {
        PathChoice::Reference => AIS_STREAM,
        PathChoice::Temperature => AIS_TEMPERATURE_STREAM,
    };
    let report = run_ais(
        &path,
        &ais_settings(cfg, cfg.path),
        cfg.samples,
        stream_seed(config.seed, label),
    )?;
    setup.write_common(dir)?;
    let mut out = output::create(dir, output::SAMPLES_FILE)?;
    output::write_samples(&report, &mut out)?;
    out.flush()?;
    let mut out = output::create(dir, output::WEIGHTS_FILE)?;
    output::write_weight_levels(&report, &mut out)?;
    out.flush()?;
    let mut summary = empty_summary(Command::RunAis, config, &setup.model);
    summary.symmetry = setup.symmetry_stats(config.seed);
    summary.ais = Some(ais_stats(&report, cfg, cfg.path)?);
    Ok(summary)
}

fn run_tt_cmd(config: &ExperimentConfig, dir: &Path) -> Result<RunSummary> {
    let cfg = config.require_tt()?;
    let setup = Setup::new(config, cfg.path == PathChoice::Reference)?;
    let label = match cfg.path {
        PathChoice::Reference => TT_STREAM,
        PathChoice::Temperature => TT_TEMPERATURE_STREAM,
    };
    let (trace, stats) = run_chain(&setup, cfg, cfg.path, config.seed, label, |_, _| {})?;
    setup.write_common(dir)?;
    let mut out = output::create(dir, output::TRACE_FILE)?;
    output::write_trace(&trace, &mut out)?;
    out.flush()?;
    let mut summary = empty_summary(Command::RunTt, config, &setup.model);
    summary.symmetry = setup.symmetry_stats(config.seed);
    summary.tt = Some(stats);
    Ok(summary)
}

/// Reference and temperature paths side by side at equal levels and sweep budget.
fn compare_paths(config: &ExperimentConfig, dir: &Path) -> Result<RunSummary> {
    let cfg = config.require_ais()?;
    let setup = Setup::new(config, true)?;
    let mut rows = Vec::new();
    for (choice, label) in [
        (PathChoice::Reference, AIS_STREAM),
        (PathChoice::Temperature, AIS_TEMPERATURE_STREAM),
    ] {
        let path = setup.ais_path(cfg, choice)?;
        let settings = ais_settings(cfg, choice);
        let report = run_ais(
            &path,
            &settings,
            cfg.samples,
            stream_seed(config.seed, label),
        )?;
        rows.push(ComparisonRow {
            sampler: "ais".into(),
            path: choice.label().into(),
            levels: cfg.levels,
            sweeps: (report.total_sweeps / cfg.samples as u64) as usize,
            metric: "efficiency".into(),
            value: report.efficiency,
        });
    }
    if let Some(tt_cfg) = &config.tt {
        for (choice, label) in [
            (PathChoice::Reference, TT_STREAM),
            (PathChoice::Temperature, TT_TEMPERATURE_STREAM),
        ] {
            let sweeps = setup.tt_move(tt_cfg, choice)?.sweeps_per_move();
            let (_, stats) = run_chain(&setup, tt_cfg, choice, config.seed, label, |_, _| {})?;
            rows.push(ComparisonRow {
                sampler: "tt".into(),
                path: choice.label().into(),
                levels: tt_cfg.levels,
                sweeps,
                metric: "acceptance_rate".into(),
                value: stats.acceptance_rate,
            });
        }
    }
    setup.write_common(dir)?;
    let mut out = output::create(dir, output::COMPARISON_FILE)?;
    output::write_comparison(&rows, &mut out)?;
    out.flush()?;
    let mut summary = empty_summary(Command::ComparePaths, config, &setup.model);
    summary.symmetry = setup.symmetry_stats(config.seed);
    summary.comparison = Some(rows);
    Ok(summary)
}

/// Compares the configured samplers against exact enumeration.
fn oracle_check(config: &ExperimentConfig, dir: &Path) -> Result<RunSummary> {
    let oracle_cfg = config.oracle.clone().unwrap_or_default();
    let setup = Setup::new(config, false)?;
    let exact = oracle::enumerate(&setup.model)?;
    let (exact_plus, _) = exact.mode_masses();
    let exact_mean = exact.mean_spin();
    let sweep_drift = if setup.model.len() <= SWEEP_DRIFT_MAX_SITES {
        let plan = SweepPlan::for_models(&[&setup.model])?;
        Some(kernel_stationarity_check(
            &exact,
            &SweepKernel {
                model: &setup.model,
                plan: &plan,
            },
        )?)
    } else {
        None
    };
    let mut passed = sweep_drift.map_or(true, |d| d < 1e-10);
    let mut summary = empty_summary(Command::OracleCheck, config, &setup.model);
    summary.symmetry = setup.symmetry_stats(config.seed);

    let (mut ais_mean_spin_z, mut ais_plus_z) = (None, None);
    if let Some(cfg) = &config.ais {
        let choice = if setup.orbit.is_some() {
            cfg.path
        } else {
            PathChoice::Temperature
        };
        let path = setup.ais_path(cfg, choice)?;
        let report = run_ais(
            &path,
            &ais_settings(cfg, choice),
            cfg.samples,
            stream_seed(config.seed, AIS_STREAM),
        )?;
        let stats = ais_stats(&report, cfg, choice)?;
        let z = |est: f64, se: f64, exact: f64| (est - exact) / se;
        let zm = z(stats.mean_spin.mean, stats.mean_spin.std_error, exact_mean);
        let zp = z(
            stats.mode_probabilities.plus,
            stats.mode_probabilities.plus_std_error,
            exact_plus,
        );
        passed &= zm.abs() <= oracle_cfg.sigmas && zp.abs() <= oracle_cfg.sigmas;
        ais_mean_spin_z = Some(zm);
        ais_plus_z = Some(zp);
        summary.ais = Some(stats);
    }
    let mut tt_total_variation = None;
    if let Some(cfg) = &config.tt {
        let choice = if setup.orbit.is_some() {
            cfg.path
        } else {
            PathChoice::Temperature
        };
        let burn_in = cfg.burn_in();
        let mut counts = vec![0u64; exact.states()];
        let (_, stats) = run_chain(&setup, cfg, choice, config.seed, TT_STREAM, |step, s| {
            if step >= burn_in {
                counts[s.index() as usize] += 1;
            }
        })?;
        let total = counts.iter().sum::<u64>() as f64;
        let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
        let tv = oracle::total_variation(&empirical, &exact.probs());
        passed &= tv <= oracle_cfg.max_total_variation;
        tt_total_variation = Some(tv);
        summary.tt = Some(stats);
    }
    summary.oracle = Some(OracleStats {
        sites: exact.sites(),
        log_partition: exact.log_partition(),
        exact_mean_spin: exact_mean,
        exact_plus,
        sweep_drift,
        ais_mean_spin_z,
        ais_plus_z,
        tt_total_variation,
        passed,
    });
    setup.write_common(dir)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use std::fs;

    use super::*;
    use crate::experiment::output;

    const SMALL: &str = r#"
    seed = 11

    [model]
    kind = "example2"
    n1 = 3
    n2 = 3
    beta = 0.6

    [symmetry]
    kind = "paired_flip"

    [ais]
    levels = 8
    samples = 400
    warmup_sweeps = 4

    [tt]
    levels = 8
    steps = 4000
    tt_probability = 0.2
    "#;

    fn config() -> ExperimentConfig {
        ExperimentConfig::from_toml_str(SMALL).unwrap()
    }

    fn run(command: Command, dir: &Path) -> RunSummary {
        run_experiment(command, &config(), dir).unwrap()
    }

    fn header(path: &Path) -> String {
        fs::read_to_string(path)
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string()
    }

    #[test]
    fn build_model_writes_model_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let s = run(Command::BuildModel, dir.path());
        assert_eq!(s.model.nodes, 9);
        assert_eq!(s.model.bonds, 12);
        assert!(s.model.field_sum.abs() < 1e-12);
        for f in [
            output::MODEL_FILE,
            output::PAIRING_FILE,
            output::SUMMARY_FILE,
            output::TIMING_FILE,
        ] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let back: RunSummary = serde_json::from_str(
            &fs::read_to_string(dir.path().join(output::SUMMARY_FILE)).unwrap(),
        )
        .unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn diagnose_symmetry_reports_exact_reference() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::from_toml_str(&SMALL.replace("n2 = 3", "n2 = 4")).unwrap();
        let s = run_experiment(Command::DiagnoseSymmetry, &cfg, dir.path()).unwrap();
        let sym = s.symmetry.unwrap();
        assert!(sym.reference_relative_defect <= 1e-12);
        assert!(sym.defect.max > 0.0);
        assert!(dir.path().join(output::REFERENCE_FILE).exists());
    }

    #[test]
    fn run_ais_outputs_have_headers() {
        let dir = tempfile::tempdir().unwrap();
        let s = run(Command::RunAis, dir.path());
        let ais = s.ais.unwrap();
        assert_eq!(ais.samples, 400);
        assert!(ais.efficiency > 0.0 && ais.efficiency <= 1.0);
        assert_eq!(
            header(&dir.path().join(output::SAMPLES_FILE)),
            "index,log_weight,mean_spin,mode"
        );
        assert!(header(&dir.path().join(output::WEIGHTS_FILE)).starts_with("index,level_1,"));
        let rows = fs::read_to_string(dir.path().join(output::SAMPLES_FILE))
            .unwrap()
            .lines()
            .count();
        assert_eq!(rows, 401);
    }

    #[test]
    fn run_tt_trace_has_one_row_per_step() {
        let dir = tempfile::tempdir().unwrap();
        let s = run(Command::RunTt, dir.path());
        let tt = s.tt.unwrap();
        assert!(tt.attempts > 0 && tt.accepts > 0);
        let text = fs::read_to_string(dir.path().join(output::TRACE_FILE)).unwrap();
        assert_eq!(text.lines().count(), 4001);
        assert_eq!(
            text.lines().next().unwrap(),
            "step,mean_spin,move,accepted,log_accept_ratio"
        );
    }

    #[test]
    fn compare_paths_covers_both_samplers() {
        let dir = tempfile::tempdir().unwrap();
        let s = run(Command::ComparePaths, dir.path());
        let rows = s.comparison.unwrap();
        assert_eq!(rows.len(), 4);
        let text = fs::read_to_string(dir.path().join(output::COMPARISON_FILE)).unwrap();
        assert_eq!(output::read_comparison(text.as_bytes()).unwrap(), rows);
    }

    #[test]
    fn oracle_check_passes_on_small_model() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config();
        cfg.tt.as_mut().unwrap().steps = 100_000;
        let s = run_experiment(Command::OracleCheck, &cfg, dir.path()).unwrap();
        let o = s.oracle.unwrap();
        assert_eq!(o.sites, 9);
        assert!(o.sweep_drift.unwrap() < 1e-12);
        assert!(o.passed, "{o:?}");
    }

    #[test]
    fn same_seed_same_bytes_across_workers() {
        let mut outputs = Vec::new();
        for workers in [1, 3] {
            let dir = tempfile::tempdir().unwrap();
            with_workers(Some(workers), || {
                run_experiment(Command::RunTt, &config(), dir.path())
            })
            .unwrap()
            .unwrap();
            let summary = fs::read(dir.path().join(output::SUMMARY_FILE)).unwrap();
            let trace = fs::read(dir.path().join(output::TRACE_FILE)).unwrap();
            outputs.push((summary, trace));
        }
        assert!(outputs[0] == outputs[1]);
    }

    #[test]
    fn reference_path_without_symmetry_names_the_section() {
        let mut cfg = config();
        cfg.symmetry = None;
        let dir = tempfile::tempdir().unwrap();
        match run_experiment(Command::RunAis, &cfg, dir.path()) {
            Err(Error::InvalidConfig { key, .. }) => assert_eq!(key, "symmetry"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn oracle_refuses_large_models() {
        let mut cfg = config();
        cfg.model = ExperimentConfig::from_toml_str(
            "[model]\nkind = \"example2\"\nn1 = 5\nn2 = 5\nbeta = 0.5\n",
        )
        .unwrap()
        .model;
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            run_experiment(Command::OracleCheck, &cfg, dir.path()),
            Err(Error::OracleTooLarge { .. })
        ));
    }

    #[test]
    fn zero_workers_rejected() {
        assert!(with_workers(Some(0), || ()).is_err());
    }
}
