use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stochflow_experiments::config::{ScenarioConfig, ScenarioKind};
use stochflow_experiments::selftest::{selftest, Fault};
use stochflow_experiments::{ensemble, single, sweep, weak_strong, ExperimentError, Report};

#[derive(Parser)]
#[command(
    name = "stochflow",
    version,
    about = "Stochastic compressible flow on the torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for ensembles and sweeps (0: all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output stride; overrides the config.
    #[arg(long)]
    stride: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    NonSolenoidalNoise,
}

#[derive(Subcommand)]
enum Command {
    /// Single simulation.
    Simulate(RunArgs),
    /// Monte Carlo ensemble with martingale statistics.
    Ensemble(RunArgs),
    /// Vanishing-viscosity sweep.
    Sweep(RunArgs),
    /// Relative energy against a resolved reference.
    WeakStrong(RunArgs),
    /// Invariant self-test.
    Selftest {
        /// Inject a fault to exercise the matching check.
        #[arg(long, hide = true)]
        inject_fault: Option<FaultArg>,
    },
}

fn load(
    args: &RunArgs,
    expected: &str,
) -> Result<(ScenarioConfig, PathBuf, PathBuf), ExperimentError> {
    let mut cfg = ScenarioConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(stride) = args.stride {
        cfg.stride = stride;
    }
    cfg.validate()?;
    let kind = match cfg.scenario {
        ScenarioKind::Single {} => "single",
        ScenarioKind::Ensemble { .. } => "ensemble",
        ScenarioKind::ViscositySweep { .. } => "viscosity-sweep",
        ScenarioKind::WeakStrong { .. } => "weak-strong",
    };
    if kind != expected {
        return Err(ExperimentError::Config {
            field: "scenario.kind".into(),
            reason: format!("this subcommand runs `{expected}` scenarios, found `{kind}`"),
        });
    }
    let base = args
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out.clone().map(|o| base.join(o)))
        .ok_or_else(|| ExperimentError::Config {
            field: "out".into(),
            reason: "no output directory (set `out` or pass --out)".into(),
        })?;
    cfg.out = Some(out.clone());
    Ok((cfg, out, base))
}

fn run(command: Command) -> Result<Report, ExperimentError> {
    match command {
        Command::Simulate(a) => {
            let (cfg, out, base) = load(&a, "single")?;
            single::run_single(&cfg, &out, &base)
        }
        Command::Ensemble(a) => {
            let (cfg, out, base) = load(&a, "ensemble")?;
            ensemble::run_ensemble(&cfg, &out, &base, a.workers)
        }
        Command::Sweep(a) => {
            let (cfg, out, base) = load(&a, "viscosity-sweep")?;
            sweep::run_viscosity_sweep(&cfg, &out, &base, a.workers)
        }
        Command::WeakStrong(a) => {
            let (cfg, out, base) = load(&a, "weak-strong")?;
            weak_strong::run_weak_strong(&cfg, &out, &base)
        }
        Command::Selftest { .. } => unreachable!("handled separately"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Selftest { inject_fault } = cli.command {
        let fault = inject_fault.map(|FaultArg::NonSolenoidalNoise| Fault::NonSolenoidalNoise);
        let results = selftest(fault);
        for r in &results {
            println!("{r}");
        }
        return if results.iter().all(|r| r.passed) {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(1)
        };
    }
    match run(cli.command) {
        Ok(report) => {
            for f in &report.failures {
                eprintln!("warning: {f}");
            }
            if let Some(reason) = &report.invalidated {
                eprintln!("{reason}");
            }
            println!("{}", report.out.display());
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
