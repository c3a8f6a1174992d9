//! Fixed-design experiment data: Gaussian designs, per-family responses, the
//! named (n, d, gamma) presets, and the named step-size schedule tables.
//!
//! All randomness flows through `ChaCha8`, a seedable counter-based stream
//! cipher RNG: a given seed fully determines the problem. The draw order is
//! fixed: design entries row-major, then the true parameter, then the
//! responses sample by sample. Monte Carlo consumers derive one independent
//! stream per replicate from (master seed, replicate index).

use crate::glm::{Design, GlmFamily, GlmProblem};
use crate::optim::StepSchedule;
use crate::{Error, Result};
use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Poisson, StandardNormal};

/// Smallest Poisson mean used when a sampled linear combination is
/// nonpositive; affected samples are reported alongside the problem.
pub const POISSON_MEAN_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Linear,
    Logistic,
    Poisson,
}

impl Task {
    pub fn family(self) -> GlmFamily {
        match self {
            Task::Linear => GlmFamily::Gaussian,
            Task::Logistic => GlmFamily::Bernoulli,
            Task::Poisson => GlmFamily::Poisson,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Linear => "linear",
            Task::Logistic => "logistic",
            Task::Poisson => "poisson",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Gd,
    Egd,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gd => "gd",
            Algorithm::Egd => "egd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Under,
    Over,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Under => "under",
            Regime::Over => "over",
        }
    }
}

/// One experiment preset: task, algorithm, parameterization regime, and the
/// (n, d, gamma) cell of the preset table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentPreset {
    pub task: Task,
    pub algorithm: Algorithm,
    pub regime: Regime,
    pub n: usize,
    pub d: usize,
    pub gamma: f64,
}

/// The preset table: (n, d) per algorithm/regime and gamma per cell.
pub fn preset(task: Task, algorithm: Algorithm, regime: Regime) -> ExperimentPreset {
    let (n, d) = match (algorithm, regime) {
        (Algorithm::Gd, Regime::Under) => (200, 20),
        (Algorithm::Gd, Regime::Over) => (100, 200),
        (Algorithm::Egd, Regime::Under) => (200, 20),
        (Algorithm::Egd, Regime::Over) => (30, 60),
    };
    let gamma = match (algorithm, task, regime) {
        (Algorithm::Gd, Task::Linear, _) => 5.0,
        (Algorithm::Gd, Task::Logistic, Regime::Under) => 0.3,
        (Algorithm::Gd, Task::Logistic, Regime::Over) => 0.5,
        (Algorithm::Gd, Task::Poisson, Regime::Under) => 0.1,
        (Algorithm::Gd, Task::Poisson, Regime::Over) => 0.15,
        (Algorithm::Egd, Task::Linear, Regime::Under) => 1.0,
        (Algorithm::Egd, Task::Linear, Regime::Over) => 0.1,
        (Algorithm::Egd, Task::Logistic, Regime::Under) => 1.5,
        (Algorithm::Egd, Task::Logistic, Regime::Over) => 10.0,
        (Algorithm::Egd, Task::Poisson, Regime::Under) => 1.2,
        (Algorithm::Egd, Task::Poisson, Regime::Over) => 3.5,
    };
    ExperimentPreset {
        task,
        algorithm,
        regime,
        n,
        d,
        gamma,
    }
}

/// Parse preset names of the form `"gd-linear-under"`.
pub fn parse_preset(name: &str) -> Result<ExperimentPreset> {
    let parts: Vec<&str> = name.split('-').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!(
            "preset `{name}` is not algorithm-task-regime"
        )));
    }
    let algorithm = match parts[0] {
        "gd" => Algorithm::Gd,
        "egd" => Algorithm::Egd,
        other => return Err(Error::Parse(format!("unknown algorithm `{other}`"))),
    };
    let task = match parts[1] {
        "linear" => Task::Linear,
        "logistic" => Task::Logistic,
        "poisson" => Task::Poisson,
        other => return Err(Error::Parse(format!("unknown task `{other}`"))),
    };
    let regime = match parts[2] {
        "under" => Regime::Under,
        "over" => Regime::Over,
        other => return Err(Error::Parse(format!("unknown regime `{other}`"))),
    };
    Ok(preset(task, algorithm, regime))
}

impl ExperimentPreset {
    pub fn name(&self) -> String {
        format!(
            "{}-{}-{}",
            self.algorithm.name(),
            self.task.name(),
            self.regime.name()
        )
    }
}

/// The named step-size schedule tables used by the experiment driver.
pub fn named_schedule(algorithm: Algorithm, task: Task, regime: Regime) -> StepSchedule<f64> {
    let phases: Vec<(f64, usize)> = match algorithm {
        Algorithm::Gd => match (task, regime) {
            (Task::Poisson, Regime::Over) => vec![
                (1e-4, 100_000),
                (2e-4, 200_000),
                (5e-4, 2_000_000),
            ],
            _ => vec![(1e-4, 10_000), (1e-3, 100_000), (1e-2, 100_000)],
        },
        Algorithm::Egd => vec![
            (1e-4, 100_000),
            (1e-3, 100_000),
            (1e-2, 100_000),
            (1e-1, 100_000),
        ],
    };
    StepSchedule::new(phases).expect("static schedule is valid")
}

/// A generated problem and its ground truth.
#[derive(Debug, Clone)]
pub struct Generated {
    pub problem: GlmProblem<f64>,
    pub theta_true: Array1<f64>,
    /// Sample indices where the Poisson mean hit the positivity floor.
    pub clamped_means: Vec<usize>,
}

/// Generate a problem from a preset: standard normal design entries, a true
/// parameter drawn uniformly (signed for GD, simplex-normalized for EGD),
/// and responses from the task's well-specified model with signal scale
/// gamma. Deterministic in the seed.
pub fn generate(spec: &ExperimentPreset, seed: u64) -> Result<Generated> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((spec.n, spec.d), |_| rng.sample::<f64, _>(StandardNormal));

    let theta_true = match spec.algorithm {
        Algorithm::Gd => Array1::from_shape_fn(spec.d, |_| rng.random_range(-1.0..1.0)),
        Algorithm::Egd => {
            let raw = Array1::from_shape_fn(spec.d, |_| rng.random_range(0.0..1.0));
            let s = raw.sum();
            raw.mapv(|v: f64| v / s)
        }
    };

    let design = Design::new(x)?;
    let signal = design.matrix().dot(&theta_true);
    let mut clamped_means = Vec::new();

    let (mean_truth, response) = match spec.task {
        Task::Linear => {
            let mean = signal.clone();
            let y = Array1::from_shape_fn(spec.n, |i| {
                mean[i] + spec.gamma * rng.sample::<f64, _>(StandardNormal)
            });
            (mean, y)
        }
        Task::Logistic => {
            let mean = signal.mapv(|v| 1.0 / (1.0 + (-spec.gamma * v).exp()));
            let y = Array1::from_shape_fn(spec.n, |i| {
                if rng.random_bool(mean[i]) {
                    1.0
                } else {
                    0.0
                }
            });
            (mean, y)
        }
        Task::Poisson => {
            let mut mean = signal.mapv(|v| spec.gamma * v);
            for (i, m) in mean.iter_mut().enumerate() {
                if *m < POISSON_MEAN_FLOOR {
                    *m = POISSON_MEAN_FLOOR;
                    clamped_means.push(i);
                }
            }
            let y = Array1::from_shape_fn(spec.n, |i| {
                let pois = Poisson::new(mean[i]).expect("positive mean");
                rng.sample::<f64, _>(&pois)
            });
            (mean, y)
        }
    };

    let problem = GlmProblem::new(design, response, spec.task.family(), Some(mean_truth))?;
    Ok(Generated {
        problem,
        theta_true,
        clamped_means,
    })
}

/// Draw a fresh response vector for a fixed design and mean vector, one
/// independent replicate stream per (master seed, replicate index).
///
/// `gaussian_sigma` is the noise scale for the Gaussian family and ignored
/// otherwise.
pub fn resample_response(
    family: GlmFamily,
    mean_truth: &Array1<f64>,
    gaussian_sigma: f64,
    master_seed: u64,
    replicate: u64,
) -> Array1<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replicate.wrapping_add(1));
    match family {
        GlmFamily::Gaussian => Array1::from_shape_fn(mean_truth.len(), |i| {
            mean_truth[i] + gaussian_sigma * rng.sample::<f64, _>(StandardNormal)
        }),
        GlmFamily::Bernoulli => Array1::from_shape_fn(mean_truth.len(), |i| {
            if rng.random_bool(mean_truth[i].clamp(0.0, 1.0)) {
                1.0
            } else {
                0.0
            }
        }),
        GlmFamily::Poisson => Array1::from_shape_fn(mean_truth.len(), |i| {
            let pois = Poisson::new(mean_truth[i].max(POISSON_MEAN_FLOOR)).expect("positive mean");
            rng.sample::<f64, _>(&pois)
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_matches_named_cells() {
        let p = parse_preset("gd-linear-under").unwrap();
        assert_eq!((p.n, p.d), (200, 20));
        assert_eq!(p.gamma, 5.0);

        let p = parse_preset("egd-poisson-over").unwrap();
        assert_eq!((p.n, p.d), (30, 60));
        assert_eq!(p.gamma, 3.5);

        let p = parse_preset("gd-logistic-over").unwrap();
        assert_eq!((p.n, p.d), (100, 200));
        assert_eq!(p.gamma, 0.5);

        assert!(parse_preset("gd-linear").is_err());
        assert!(parse_preset("sgd-linear-under").is_err());
    }

    #[test]
    fn named_schedules_match_tables() {
        let gd = named_schedule(Algorithm::Gd, Task::Linear, Regime::Under);
        assert_eq!(
            gd.phases(),
            &[(1e-4, 10_000), (1e-3, 100_000), (1e-2, 100_000)]
        );
        let gd_pois_over = named_schedule(Algorithm::Gd, Task::Poisson, Regime::Over);
        assert_eq!(
            gd_pois_over.phases(),
            &[(1e-4, 100_000), (2e-4, 200_000), (5e-4, 2_000_000)]
        );
        let egd = named_schedule(Algorithm::Egd, Task::Poisson, Regime::Over);
        assert_eq!(
            egd.phases(),
            &[
                (1e-4, 100_000),
                (1e-3, 100_000),
                (1e-2, 100_000),
                (1e-1, 100_000)
            ]
        );
    }

    #[test]
    fn generation_is_reproducible_bitwise() {
        let spec = preset(Task::Poisson, Algorithm::Gd, Regime::Under);
        let a = generate(&spec, 1234).unwrap();
        let b = generate(&spec, 1234).unwrap();
        assert_eq!(a.problem.design.matrix(), b.problem.design.matrix());
        assert_eq!(a.problem.response, b.problem.response);
        assert_eq!(a.theta_true, b.theta_true);
        let c = generate(&spec, 1235).unwrap();
        assert_ne!(a.problem.response, c.problem.response);
    }

    #[test]
    fn design_moments_are_standard_normal() {
        let spec = preset(Task::Linear, Algorithm::Gd, Regime::Under); // 200 x 20
        let g = generate(&spec, 7).unwrap();
        let x = g.problem.design.matrix();
        let nd = (spec.n * spec.d) as f64;
        let mean = x.iter().sum::<f64>() / nd;
        assert!(mean.abs() < 4.0 / nd.sqrt(), "mean {mean}");
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nd;
        assert!((var - 1.0).abs() < 0.1, "variance {var}");
    }

    #[test]
    fn egd_truth_lies_on_simplex() {
        let spec = preset(Task::Linear, Algorithm::Egd, Regime::Over);
        let g = generate(&spec, 99).unwrap();
        assert!(g.theta_true.iter().all(|&v| v >= 0.0));
        assert!((g.theta_true.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_gamma_linear_is_noiseless() {
        let mut spec = preset(Task::Linear, Algorithm::Gd, Regime::Under);
        spec.gamma = 0.0;
        let g = generate(&spec, 5).unwrap();
        let mu = g.problem.mean_truth.as_ref().unwrap();
        for i in 0..spec.n {
            assert_eq!(g.problem.response[i], mu[i]);
        }
    }

    #[test]
    fn poisson_means_are_clamped_and_logged() {
        let spec = preset(Task::Poisson, Algorithm::Gd, Regime::Under);
        let g = generate(&spec, 11).unwrap();
        // Gaussian designs make negative combinations likely at n = 200.
        assert!(!g.clamped_means.is_empty());
        let mu = g.problem.mean_truth.as_ref().unwrap();
        for &i in &g.clamped_means {
            assert_eq!(mu[i], POISSON_MEAN_FLOOR);
        }
        assert!(mu.iter().all(|&m| m > 0.0));
    }

    #[test]
    fn resampling_streams_are_independent_and_reproducible() {
        let mu = Array1::from_elem(50, 0.3);
        let a = resample_response(GlmFamily::Bernoulli, &mu, 0.0, 42, 0);
        let b = resample_response(GlmFamily::Bernoulli, &mu, 0.0, 42, 0);
        let c = resample_response(GlmFamily::Bernoulli, &mu, 0.0, 42, 1);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
