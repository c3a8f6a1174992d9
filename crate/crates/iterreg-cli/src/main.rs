//! `iterreg` — experiment CLI.
//!
//! Subcommands: `envelope`, `risk`, `paths`, `checks`, `aggregate`.
//! Exit codes: 0 on success, 1 on configuration or IO errors, 2 when a
//! check fails in `checks` mode.

use clap::{Args, Parser, Subcommand};
use iterreg_cli::config::RunConfig;
use iterreg_cli::driver::{self, ExperimentContext};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "iterreg", version, about = "First-order implicit-regularization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Named preset, e.g. gd-linear-under or egd-poisson-over.
    #[arg(long)]
    preset: Option<String>,

    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// RNG seed for data generation.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Step-size schedule as "eta:count,eta:count,...".
    #[arg(long)]
    schedule: Option<String>,

    /// Lambda grid as "min:max:count".
    #[arg(long = "lambda-grid")]
    lambda_grid: Option<String>,

    /// Comma-separated list of checks for the checks subcommand.
    #[arg(long, value_delimiter = ',')]
    checks: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Training-envelope curves (implicit vs. explicit objectives).
    Envelope(CommonArgs),
    /// Prediction-risk curves.
    Risk(CommonArgs),
    /// Solution paths for both estimators.
    Paths(CommonArgs),
    /// Run the property-check groups.
    Checks(CommonArgs),
    /// Model-aggregation demo outputs.
    Aggregate(CommonArgs),
}

fn build_config(args: &CommonArgs) -> iterreg::Result<RunConfig> {
    let mut config = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)?;
            RunConfig::from_toml(&text)?
        }
        (None, Some(name)) => RunConfig::for_preset(iterreg::datagen::parse_preset(name)?),
        (None, None) => {
            return Err(iterreg::Error::InvalidArgument(
                "either --preset or --config is required".into(),
            ))
        }
    };
    config.apply_env();
    if let Some(name) = &args.preset {
        let preset = iterreg::datagen::parse_preset(name)?;
        if args.config.is_some() {
            config.preset = preset;
            config.schedule = iterreg::datagen::named_schedule(
                preset.algorithm,
                preset.task,
                preset.regime,
            );
        }
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }
    if let Some(schedule) = &args.schedule {
        config.schedule = iterreg::optim::StepSchedule::parse(schedule)?;
    }
    if let Some(grid) = &args.lambda_grid {
        config.lambda_grid = iterreg::explicit::LambdaGrid::parse(grid)?;
    }
    if !args.checks.is_empty() {
        config.checks = args.checks.clone();
    }
    Ok(config)
}

fn run(command: &Command) -> iterreg::Result<ExitCode> {
    match command {
        Command::Envelope(args) => {
            let ctx = ExperimentContext::prepare(build_config(args)?)?;
            for path in driver::run_envelope(&ctx)? {
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Risk(args) => {
            let ctx = ExperimentContext::prepare(build_config(args)?)?;
            for path in driver::run_risk(&ctx)? {
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Paths(args) => {
            let ctx = ExperimentContext::prepare(build_config(args)?)?;
            for path in driver::run_paths(&ctx)? {
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Aggregate(args) => {
            let config = build_config(args)?;
            for path in driver::run_aggregate(&config)? {
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Checks(args) => {
            let mut config = match build_config(args) {
                Ok(c) => c,
                Err(iterreg::Error::InvalidArgument(_)) => {
                    // Checks run fine without data parameters.
                    let mut c = RunConfig::for_preset(iterreg::datagen::parse_preset(
                        "gd-linear-under",
                    )?);
                    c.apply_env();
                    if let Some(seed) = args.seed {
                        c.seed = seed;
                    }
                    if !args.checks.is_empty() {
                        c.checks = args.checks.clone();
                    }
                    c
                }
                Err(other) => return Err(other),
            };
            if !args.checks.is_empty() {
                config.checks = args.checks.clone();
            }
            let results = driver::run_checks(&config)?;
            let mut all_passed = true;
            for (name, passed) in &results {
                println!("check {name}: {}", if *passed { "PASS" } else { "FAIL" });
                all_passed &= passed;
            }
            Ok(if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are success; bad usage is a config
            // error (exit 1).
            let _ = err.print();
            return match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::FAILURE,
            };
        }
    };
    match run(&cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
