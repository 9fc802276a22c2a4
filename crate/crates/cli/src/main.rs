use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use peerbias::harness::{run_scenario, write_csv, write_csv_to, ScenarioConfig, SCENARIO_IDS};
use peerbias::Error;

/// Monte Carlo scenarios for testing reviewer bias in single-blind review.
#[derive(Parser)]
#[command(name = "peerbias", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its rejection-rate CSV.
    Simulate {
        #[arg(long)]
        scenario: String,
        /// Iterations per sweep point.
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON file of overrides; command-line flags win on conflict.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override a configuration field by dotted key, e.g. `params.n=400`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long, value_enum)]
        profile: Option<Profile>,
    },
    /// Print the registered scenario ids.
    ListScenarios,
    /// Show a scenario's configuration.
    Describe {
        #[arg(long)]
        scenario: String,
        #[arg(long, value_enum)]
        profile: Option<Profile>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    /// 1000 iterations and half as many papers.
    Ci,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownScenario(_) | Error::Config(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn base_config(scenario: &str, profile: Option<Profile>) -> Result<ScenarioConfig, Failure> {
    let cfg = ScenarioConfig::registered(scenario)?;
    Ok(match profile {
        Some(Profile::Ci) => cfg.ci_profile(),
        None => cfg,
    })
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    scenario: &str,
    iters: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    config: Option<PathBuf>,
    overrides: &[String],
    profile: Option<Profile>,
) -> Result<(), Failure> {
    let mut cfg = base_config(scenario, profile)?;
    if let Some(path) = config {
        let text = std::fs::read_to_string(&path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let json: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        cfg.apply_json(&json)?;
    }
    if let Some(n) = iters {
        cfg.iterations = n;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    for kv in overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v)?;
    }
    cfg.validate()?;
    let result = run_scenario(&cfg)?;
    match out {
        Some(path) => write_csv(&result, &path)?,
        None => write_csv_to(&result, std::io::stdout().lock())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate {
            scenario,
            iters,
            seed,
            out,
            config,
            overrides,
            profile,
        } => simulate(&scenario, iters, seed, out, config, &overrides, profile),
        Command::ListScenarios => {
            let mut stdout = std::io::stdout().lock();
            for id in SCENARIO_IDS {
                writeln!(stdout, "{id}").map_err(|e| Failure::Runtime(e.to_string()))?;
            }
            Ok(())
        }
        Command::Describe { scenario, profile } => {
            print!("{}", base_config(&scenario, profile)?.describe());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n");
            eprintln!("{}", Cli::command().render_usage());
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
