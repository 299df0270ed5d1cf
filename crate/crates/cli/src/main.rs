use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use symsample_core::experiment::{
    run_experiment, with_workers, Command, ExperimentConfig, RunSummary,
};

#[derive(Parser)]
#[command(
    name = "symsample",
    version,
    about = "Multimodal sampling via approximate symmetries"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the target model and write model.txt.
    BuildModel(RunArgs),
    /// Report symmetry defects and write the pairing and reference model.
    DiagnoseSymmetry(RunArgs),
    /// Annealed importance sampling along the configured path.
    RunAis(RunArgs),
    /// Glauber chain with tempered-transition moves.
    RunTt(RunArgs),
    /// Reference versus temperature paths at equal levels and budget.
    ComparePaths(RunArgs),
    /// Check samplers against exact enumeration on a tiny model.
    OracleCheck(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (default: config `out`, else the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Cmd {
    fn split(self) -> (Command, RunArgs) {
        match self {
            Cmd::BuildModel(a) => (Command::BuildModel, a),
            Cmd::DiagnoseSymmetry(a) => (Command::DiagnoseSymmetry, a),
            Cmd::RunAis(a) => (Command::RunAis, a),
            Cmd::RunTt(a) => (Command::RunTt, a),
            Cmd::ComparePaths(a) => (Command::ComparePaths, a),
            Cmd::OracleCheck(a) => (Command::OracleCheck, a),
        }
    }
}

fn run(command: Command, args: RunArgs) -> anyhow::Result<RunSummary> {
    let mut config = ExperimentConfig::from_file(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let out = args
        .out
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let summary = with_workers(args.workers, || run_experiment(command, &config, &out))??;
    Ok(summary)
}

fn report(summary: &RunSummary) {
    if let Some(s) = &summary.symmetry {
        println!(
            "symmetry defect: max {:.6e} mean {:.6e}",
            s.defect.max, s.defect.mean
        );
    }
    if let Some(a) = &summary.ais {
        println!(
            "ais[{}]: efficiency {:.4}, P(+) {:.4} +- {:.4}",
            a.path, a.efficiency, a.mode_probabilities.plus, a.mode_probabilities.plus_std_error
        );
    }
    if let Some(t) = &summary.tt {
        println!(
            "tt[{}]: {} / {} accepted, {} mode transitions, P(+) {:.4} +- {:.4}",
            t.path,
            t.accepts,
            t.attempts,
            t.mode_transitions,
            t.mode_probabilities.plus,
            t.mode_probabilities.plus_std_error
        );
    }
    for row in summary.comparison.iter().flatten() {
        println!(
            "{}[{}] L={} {} {:.6e}",
            row.sampler, row.path, row.levels, row.metric, row.value
        );
    }
    if let Some(o) = &summary.oracle {
        println!("oracle: {}", if o.passed { "pass" } else { "FAIL" });
    }
}

fn main() -> ExitCode {
    let (command, args) = Cli::parse().command.split();
    match run(command, args) {
        Ok(summary) => {
            report(&summary);
            if summary.oracle.as_ref().is_some_and(|o| !o.passed) {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
