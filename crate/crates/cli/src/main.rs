use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use liftdescent::benchmarks::Benchmark;
use liftdescent_cli::config::RunConfig;
use liftdescent_cli::run::execute;
use liftdescent_cli::verify::{run_suite, Suite};
use liftdescent_cli::CliError;

/// Sample-and-hold descent for controlled ODEs and mean-field continuity
/// equations.
#[derive(Parser)]
#[command(name = "liftdescent", version, after_help = "Dotted overrides such as --descent.N=6, --grid.G=512 or \
--cost.weighted=true may be given to `run`; they take precedence over --config.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the descent on a benchmark and write report.json and CSV artifacts.
    Run {
        #[arg(long)]
        benchmark: Option<String>,
        /// TOML config, or a report.json whose config echo is reused.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Assert that the run uses no randomness (all solvers are deterministic).
        #[arg(long)]
        seedless: bool,
    },
    /// Run a property suite and print a pass/fail table.
    Verify {
        /// increment, conservation or oracle
        suite: String,
    },
    /// List registered benchmarks.
    ListBenchmarks,
}

/// Splits `--section.key=value` and `--section.key value` arguments off the
/// command line.
fn split_overrides(args: Vec<String>) -> (Vec<String>, Vec<String>) {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let dotted = a
            .strip_prefix("--")
            .filter(|k| k.split('=').next().is_some_and(|key| key.contains('.')));
        match dotted {
            Some(kv) if kv.contains('=') => overrides.push(kv.to_string()),
            Some(k) => {
                let key = k.to_string();
                match it.next() {
                    Some(v) => overrides.push(format!("{key}={v}")),
                    None => overrides.push(key),
                }
            }
            None => rest.push(a),
        }
    }
    (rest, overrides)
}

fn run(cli: Cli, overrides: Vec<String>) -> Result<(), CliError> {
    if !overrides.is_empty() && !matches!(cli.command, Command::Run { .. }) {
        return Err(CliError::Config(format!("--{}: overrides apply to `run` only", overrides[0])));
    }
    match cli.command {
        Command::Run {
            benchmark,
            config,
            out,
            seedless,
        } => {
            let mut cfg = match &config {
                Some(path) => RunConfig::load(path)?,
                None => RunConfig::default(),
            };
            cfg = cfg.merge(RunConfig::from_overrides(&overrides)?);
            cfg = cfg.merge(RunConfig {
                benchmark,
                out,
                ..Default::default()
            });
            let outcome = execute(cfg, seedless)?;
            let r = &outcome.report;
            println!("benchmark      {}", r.benchmark);
            println!("cost history   {:?}", r.cost_history);
            println!("primal solves  {}", r.solve_counts.total_primal);
            println!("switches       {} ({} per component)", r.switch_count, r.component_switch_count);
            println!("wall time      {:.3} s", r.wall_time);
            println!("output         {}", outcome.out_dir.display());
            Ok(())
        }
        Command::Verify { suite } => {
            let suite = Suite::from_name(&suite)?;
            let checks = run_suite(suite)?;
            println!("suite: {}", suite.name());
            for c in &checks {
                println!("{c}");
            }
            let failed = checks.iter().filter(|c| !c.passed()).count();
            if failed > 0 {
                return Err(CliError::Solver(format!("{failed} of {} checks failed", checks.len())));
            }
            println!("all {} checks passed", checks.len());
            Ok(())
        }
        Command::ListBenchmarks => {
            for b in Benchmark::ALL {
                println!("{:<18} {}", b.name(), b.description());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let (args, overrides) = split_overrides(std::env::args().collect());
    let cli = Cli::parse_from(args);
    match run(cli, overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
