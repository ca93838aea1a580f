//! Command-line front end. Exit codes: 0 success, 1 runtime failure,
//! 2 configuration error, 3 unsupported request, 4 missing artifacts.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use predgame::config::{self, RunConfig};
use predgame::harness::{self, DiagnoseOptions, EvalOptions, FamilyOptions, HarnessError};
use predgame::mi::{ActionMode, Pairing, Units};
use predgame::selftest::{self, Fault};

/// Environment variable naming the output root; `--out` takes precedence.
const OUT_ENV: &str = "PREDGAME_OUT";

#[derive(Parser)]
#[command(name = "predgame", version, about = "Prediction Game experiments: train, evaluate, diagnose, report")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Shipped preset to start from (see `predgame config --list-presets`).
    #[arg(long)]
    preset: Option<String>,
    /// Configuration file layered over the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `section.key=value` override, applied last; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, HarnessError> {
        Ok(config::load(self.preset.as_deref(), self.config.as_deref(), &self.overrides)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scenario for every seed.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output root (default: $PREDGAME_OUT, then run.out_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seeds run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Recompute runs that are already complete.
        #[arg(long)]
        force: bool,
        #[arg(long, short)]
        quiet: bool,
    },
    /// Re-evaluate a run's checkpoints.
    Eval {
        run: PathBuf,
        #[arg(long)]
        episodes: Option<usize>,
        /// Argmax actions instead of sampling.
        #[arg(long)]
        greedy: bool,
        /// Replace the configured agents by scripted partners.
        #[arg(long, conflicts_with = "without_heuristics")]
        with_heuristics: bool,
        /// Evaluate without scripted partners.
        #[arg(long)]
        without_heuristics: bool,
    },
    /// Estimate observation-action and hidden-action mutual information.
    Diagnose {
        run: PathBuf,
        /// Pairings to estimate (default: all the architecture supports).
        #[arg(long = "pairing", value_enum)]
        pairings: Vec<PairingArg>,
        #[arg(long, value_enum)]
        units: Option<UnitsArg>,
        #[arg(long)]
        k: Option<usize>,
        /// Record this many fresh evaluation episodes.
        #[arg(long)]
        episodes: Option<usize>,
        /// Ignore stored trajectories and re-record from checkpoints.
        #[arg(long)]
        recollect: bool,
    },
    /// Aggregate completed runs into summary tables with bootstrap CIs.
    Report {
        /// Output root holding `runs/` (default: $PREDGAME_OUT, then `out`).
        root: Option<PathBuf>,
    },
    /// Run the fast oracle suite.
    Selftest {
        /// Run only these checks; repeatable.
        #[arg(long)]
        only: Vec<String>,
        /// Deliberately break a component to confirm detection.
        #[arg(long, value_name = "FAULT")]
        inject_fault: Option<Fault>,
        /// List check names and exit.
        #[arg(long)]
        list: bool,
    },
    /// Print the resolved configuration.
    Config {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        list_presets: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PairingArg {
    ObsAction,
    HiddenAction,
}

#[derive(Clone, Copy, ValueEnum)]
enum UnitsArg {
    Bits,
    Nats,
}

fn out_root(flag: Option<PathBuf>, cfg_dir: &str) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from(cfg_dir))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, HarnessError> {
    match command {
        Command::Train { config, out, jobs, force, quiet } => {
            let cfg = config.load()?;
            let opts = FamilyOptions { out: out_root(out, &cfg.run.out_dir), jobs, force, verbose: !quiet };
            let outcomes = harness::run_family(&cfg, &opts)?;
            for o in &outcomes {
                let ret = o.metric("return").map_or("-".into(), |v| format!("{v:.3}"));
                let note = if o.skipped { " (already complete)" } else { "" };
                println!("seed {:>4}  return {ret}  {}{note}", o.seed, o.dir.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval { run, episodes, greedy, with_heuristics, without_heuristics } => {
            let partners = match (with_heuristics, without_heuristics) {
                (true, _) => Some(true),
                (_, true) => Some(false),
                _ => None,
            };
            let mode = greedy.then_some(ActionMode::Greedy);
            let s = harness::evaluate_run(&run, &EvalOptions { episodes, mode, partners })?;
            println!("mean return {:.4} over {} episodes -> {}", s.mean_return, s.episodes, s.path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Diagnose { run, pairings, units, k, episodes, recollect } => {
            let opts = DiagnoseOptions {
                pairings: pairings
                    .into_iter()
                    .map(|p| match p {
                        PairingArg::ObsAction => Pairing::ObsAction,
                        PairingArg::HiddenAction => Pairing::HiddenAction,
                    })
                    .collect(),
                units: units.map(|u| match u {
                    UnitsArg::Bits => Units::Bits,
                    UnitsArg::Nats => Units::Nats,
                }),
                k,
                episodes,
                recollect,
            };
            let r = harness::diagnose(&run, &opts)?;
            for (pairing, mean) in &r.means {
                println!("{:<14} mean {mean:.4} {}", pairing.label(), r.units.label());
            }
            println!("report: {}", r.path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { root } => {
            let root = out_root(root, "out");
            let r = harness::report(&root)?;
            println!("{} runs aggregated", r.n_runs);
            for s in r.summary.iter().filter(|s| s.metric == "return") {
                println!(
                    "{:<22} {:<4} blind={:<5} return {:.3} [{:.3}, {:.3}] n={}",
                    s.scenario, s.arch, s.blind, s.mean, s.ci_lo, s.ci_hi, s.n_seeds
                );
            }
            println!("summary: {}", r.summary_path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Selftest { only, inject_fault, list } => {
            if list {
                selftest::check_names().iter().for_each(|n| println!("{n}"));
                return Ok(ExitCode::SUCCESS);
            }
            let unknown: Vec<&String> = only.iter().filter(|o| !selftest::check_names().contains(&o.as_str())).collect();
            if !unknown.is_empty() {
                return Err(HarnessError::Invalid(format!("unknown checks {unknown:?}")));
            }
            let results = selftest::run(&only, inject_fault, |r| {
                let status = if r.passed { "PASS" } else { "FAIL" };
                println!("{status} {:<14} {:>7.2}s  {}", r.name, r.elapsed.as_secs_f64(), r.detail);
            });
            let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
            if failed.is_empty() {
                println!("all {} checks passed", results.len());
                Ok(ExitCode::SUCCESS)
            } else {
                println!("failed checks: {}", failed.join(", "));
                Ok(ExitCode::from(1))
            }
        }
        Command::Config { config, list_presets } => {
            if list_presets {
                config::preset_names().iter().for_each(|n| println!("{n}"));
            } else {
                print!("{}", config.load()?.to_toml());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

