//! Run configuration: preset or explicit data parameters, schedule, lambda
//! grid, solver options, output directory, and seed. Loaded from a TOML file
//! with flat `[section] key = value` entries, then overridden by the
//! environment (`ITERREG_OUT`, `ITERREG_SEED` only) and command-line flags.

use iterreg::datagen::{self, named_schedule, Algorithm, ExperimentPreset, Regime, Task};
use iterreg::explicit::LambdaGrid;
use iterreg::optim::StepSchedule;
use iterreg::{Error, Result};
use std::path::PathBuf;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iter: usize,
    /// Separate budget for the KL solver, whose low-lambda points converge
    /// slowly on some problems.
    pub kl_max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-8,
            max_iter: 50_000,
            kl_max_iter: 150_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub preset: ExperimentPreset,
    pub schedule: StepSchedule<f64>,
    pub lambda_grid: LambdaGrid<f64>,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Tau checkpoints per decade for the envelope and risk curves.
    pub points_per_decade: usize,
    pub solver: SolverConfig,
    pub checks: Vec<String>,
}

impl RunConfig {
    pub fn for_preset(preset: ExperimentPreset) -> Self {
        RunConfig {
            preset,
            schedule: named_schedule(preset.algorithm, preset.task, preset.regime),
            lambda_grid: LambdaGrid::default_experiment(),
            seed: 0,
            out_dir: PathBuf::from("out"),
            points_per_decade: 8,
            solver: SolverConfig::default(),
            checks: Vec::new(),
        }
    }

    /// Parse a TOML config file. Recognized keys:
    /// `[data] preset|task|algorithm|regime|n|d|gamma|seed`,
    /// `[run] schedule|lambda_grid|out|points_per_decade|checks`,
    /// `[solver] tolerance|max_iter|kl_max_iter`.
    pub fn from_toml(text: &str) -> Result<Self> {
        let value: toml::Table = text
            .parse()
            .map_err(|e| Error::Parse(format!("config: {e}")))?;

        let data = value.get("data");
        let preset = match data.and_then(|d| d.get("preset")).and_then(|v| v.as_str()) {
            Some(name) => datagen::parse_preset(name)?,
            None => {
                let get_str = |key: &str| -> Option<&str> {
                    data.and_then(|d| d.get(key)).and_then(|v| v.as_str())
                };
                let task = match get_str("task") {
                    Some("linear") => Task::Linear,
                    Some("logistic") => Task::Logistic,
                    Some("poisson") => Task::Poisson,
                    Some(other) => return Err(Error::Parse(format!("unknown task `{other}`"))),
                    None => return Err(Error::Parse("config needs data.preset or data.task".into())),
                };
                let algorithm = match get_str("algorithm") {
                    Some("gd") | None => Algorithm::Gd,
                    Some("egd") => Algorithm::Egd,
                    Some(other) => {
                        return Err(Error::Parse(format!("unknown algorithm `{other}`")))
                    }
                };
                let regime = match get_str("regime") {
                    Some("over") => Regime::Over,
                    _ => Regime::Under,
                };
                let mut spec = datagen::preset(task, algorithm, regime);
                if let Some(n) = data.and_then(|d| d.get("n")).and_then(|v| v.as_integer()) {
                    spec.n = n as usize;
                }
                if let Some(d_) = data.and_then(|d| d.get("d")).and_then(|v| v.as_integer()) {
                    spec.d = d_ as usize;
                }
                if let Some(g) = data.and_then(|d| d.get("gamma")).and_then(|v| v.as_float()) {
                    spec.gamma = g;
                }
                spec
            }
        };

        let mut config = RunConfig::for_preset(preset);
        if let Some(seed) = data.and_then(|d| d.get("seed")).and_then(|v| v.as_integer()) {
            config.seed = seed as u64;
        }

        if let Some(run) = value.get("run") {
            if let Some(s) = run.get("schedule").and_then(|v| v.as_str()) {
                config.schedule = StepSchedule::parse(s)?;
            }
            if let Some(s) = run.get("lambda_grid").and_then(|v| v.as_str()) {
                config.lambda_grid = LambdaGrid::parse(s)?;
            }
            if let Some(s) = run.get("out").and_then(|v| v.as_str()) {
                config.out_dir = PathBuf::from(s);
            }
            if let Some(p) = run.get("points_per_decade").and_then(|v| v.as_integer()) {
                config.points_per_decade = (p as usize).max(1);
            }
            if let Some(list) = run.get("checks").and_then(|v| v.as_array()) {
                config.checks = list
                    .iter()
                    .filter_map(|v| v.as_str().map(String::from))
                    .collect();
            }
        }

        if let Some(solver) = value.get("solver") {
            if let Some(t) = solver.get("tolerance").and_then(|v| v.as_float()) {
                config.solver.tolerance = t;
            }
            if let Some(m) = solver.get("max_iter").and_then(|v| v.as_integer()) {
                config.solver.max_iter = m as usize;
            }
            if let Some(m) = solver.get("kl_max_iter").and_then(|v| v.as_integer()) {
                config.solver.kl_max_iter = m as usize;
            }
        }

        Ok(config)
    }

    /// Environment overrides; only the output directory and seed may come
    /// from the environment.
    pub fn apply_env(&mut self) {
        if let Ok(out) = std::env::var("ITERREG_OUT") {
            if !out.is_empty() {
                self.out_dir = PathBuf::from(out);
            }
        }
        if let Ok(seed) = std::env::var("ITERREG_SEED") {
            if let Ok(parsed) = seed.parse::<u64>() {
                self.seed = parsed;
            }
        }
    }
}
