use std::env;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use recloop_cli::commands::{self, DEFAULT_VERIFY_SEED, SUITES};
use recloop_cli::config::{self, PopulationFile, RunFile, SweepFile};
use recloop_cli::error::{CliError, CliResult};
use recloop_cli::presets;

/// Output-directory override, read when `--out` is absent.
const OUT_ENV: &str = "RECLOOP_OUT";

#[derive(Parser)]
#[command(
    name = "recloop",
    version,
    about = "Closed-loop recommendation dynamics: single runs, parameter sweeps, populations, and verification suites"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write trace, block, and utility artifacts
    Run(ScenarioArgs),
    /// Run a parameter sweep and write its result table
    Sweep(ScenarioArgs),
    /// Simulate a population of independent agents and write histograms
    Population(ScenarioArgs),
    /// Run analytic verification suites and report per-property outcomes
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file: TOML, or the metadata.json written by a previous run
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Bundled scenario name (see the project README for the list)
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory; overrides RECLOOP_OUT and the config's out_dir
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides the scenario's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parallel sections (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Which suite to run: oracle-equivalence, monotonicity, limits,
    /// improvement, or all
    #[arg(long, default_value = "all")]
    suite: String,
    /// Directory for report.json (default: stdout only)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for the sampled equivalence grid
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parallel sections (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
}

fn init_jobs(jobs: Option<usize>) -> CliResult<()> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(CliError::validation("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::validation(format!("cannot configure worker pool: {e}")))?;
    }
    Ok(())
}

fn scenario_text(args: &ScenarioArgs, command: &str) -> CliResult<(String, bool)> {
    match (&args.config, &args.preset) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
            let json = path.extension().is_some_and(|ext| ext == "json");
            Ok((text, json))
        }
        (None, Some(name)) => {
            let preset = presets::find(name).ok_or_else(|| {
                CliError::validation(format!(
                    "unknown preset {name:?}; bundled presets: {}",
                    presets::names().join(", ")
                ))
            })?;
            if preset.command != command {
                return Err(CliError::validation(format!(
                    "preset {name:?} is a {} scenario; invoke it with `recloop {}`",
                    preset.command, preset.command
                )));
            }
            Ok((preset.text.to_string(), false))
        }
        (None, None) => {
            Err(CliError::validation("provide either --config <path> or --preset <name>"))
        }
        (Some(_), Some(_)) => unreachable!("clap rejects --config with --preset"),
    }
}

/// Precedence: `--out` flag, then RECLOOP_OUT, then the config's `out_dir`,
/// then `recloop-out/<preset or command>`.
fn out_dir(args: &ScenarioArgs, config_dir: Option<&str>, command: &str) -> PathBuf {
    if let Some(out) = &args.out {
        return out.clone();
    }
    if let Ok(v) = env::var(OUT_ENV) {
        if !v.is_empty() {
            return PathBuf::from(v);
        }
    }
    if let Some(dir) = config_dir {
        return PathBuf::from(dir);
    }
    PathBuf::from("recloop-out").join(args.preset.as_deref().unwrap_or(command))
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run(args) => {
            init_jobs(args.jobs)?;
            let (text, json) = scenario_text(&args, "run")?;
            let mut file: RunFile = config::parse_scenario(&text, json)?;
            if let Some(seed) = args.seed {
                file.seed = seed;
            }
            let out = out_dir(&args, file.out_dir.as_deref(), "run");
            commands::cmd_run(&file, &out)
        }
        Command::Sweep(args) => {
            init_jobs(args.jobs)?;
            let (text, json) = scenario_text(&args, "sweep")?;
            let mut file: SweepFile = config::parse_scenario(&text, json)?;
            if let Some(seed) = args.seed {
                file.seed = seed;
            }
            let out = out_dir(&args, file.out_dir.as_deref(), "sweep");
            commands::cmd_sweep(&file, &out)
        }
        Command::Population(args) => {
            init_jobs(args.jobs)?;
            let (text, json) = scenario_text(&args, "population")?;
            let mut file: PopulationFile = config::parse_scenario(&text, json)?;
            if let Some(seed) = args.seed {
                file.base_seed = seed;
            }
            let out = out_dir(&args, file.out_dir.as_deref(), "population");
            commands::cmd_population(&file, &out)
        }
        Command::Verify(args) => {
            init_jobs(args.jobs)?;
            if !SUITES.contains(&args.suite.as_str()) {
                return Err(CliError::validation(format!(
                    "unknown suite {:?} (expected one of {})",
                    args.suite,
                    SUITES.join(", ")
                )));
            }
            let out = args.out.clone().or_else(|| {
                env::var(OUT_ENV).ok().filter(|v| !v.is_empty()).map(PathBuf::from)
            });
            commands::cmd_verify(
                &args.suite,
                args.seed.unwrap_or(DEFAULT_VERIFY_SEED),
                out.as_deref(),
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
