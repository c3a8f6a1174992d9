//! The experiment pipelines behind the CLI subcommands: training envelopes,
//! prediction-risk curves, solution paths, property checks, and the
//! aggregation demo. Each run emits CSV files (canonical) and SVG charts
//! (convenience) into the configured output directory.

use crate::config::RunConfig;
use crate::svg::{line_chart, Series, PALETTE};
use iterreg::bounds::verify_trace;
use iterreg::datagen::{generate, Algorithm, Generated, Task};
use iterreg::explicit::{
    kl_glm_solve, lambda_path_solve, ridge_glm_solve, PathSolver, RegularizedSolution,
    SolveOptions,
};
use iterreg::geometry::{Euclidean, NegativeEntropySimplex};
use iterreg::glm::{EvalMode, SmoothnessGeometry};
use iterreg::io::{write_problem_csv, write_rows_csv, write_theta_csv, write_trace_csv};
use iterreg::linalg::{norm1, norm2};
use iterreg::optim::{egd_run, gd_run, IterateTrace};
use iterreg::{Error, Result};
use ndarray::{Array1, ArrayView1};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

/// A prepared experiment: the generated problem and the implicit-run trace.
/// Preparing once lets several pipelines share the (potentially long)
/// optimizer run.
pub struct ExperimentContext {
    pub config: RunConfig,
    pub generated: Generated,
    pub trace: IterateTrace<f64>,
    /// Additive constant applied to objective values so the linear task
    /// reports the nonnegative least-squares form.
    pub objective_shift: f64,
}

impl ExperimentContext {
    pub fn prepare(config: RunConfig) -> Result<Self> {
        let generated = generate(&config.preset, config.seed)?;
        let problem = &generated.problem;
        let d = config.preset.d;
        let trace = match config.preset.algorithm {
            Algorithm::Gd => gd_run(
                &problem.objective(),
                Array1::zeros(d).view(),
                &config.schedule,
                None,
            )?,
            Algorithm::Egd => {
                let pi = Array1::from_elem(d, 1.0 / d as f64);
                egd_run(&problem.objective(), pi.view(), &config.schedule, None)?
            }
        };
        let objective_shift = match config.preset.task {
            Task::Linear => {
                problem.response.iter().map(|v| v * v).sum::<f64>() / (2.0 * problem.n() as f64)
            }
            _ => 0.0,
        };
        Ok(ExperimentContext {
            config,
            generated,
            trace,
            objective_shift,
        })
    }

    fn out(&self, suffix: &str) -> PathBuf {
        self.config
            .out_dir
            .join(format!("{}_{suffix}", self.config.preset.name()))
    }

    fn x_range(&self) -> (f64, f64) {
        match self.config.preset.algorithm {
            Algorithm::Gd => (1e-4, 1e3),
            Algorithm::Egd => (1e-4, 1e4),
        }
    }

    /// Record indices used as tau checkpoints: the last record in each
    /// log10 bucket of width 1/points_per_decade, plus the final record.
    fn checkpoints(&self) -> Vec<usize> {
        let per_decade = self.config.points_per_decade as f64;
        let mut picked: Vec<usize> = Vec::new();
        let mut current_bucket = i64::MIN;
        for (i, r) in self.trace.records.iter().enumerate() {
            if r.t == 0 {
                continue;
            }
            let bucket = (r.tau.log10() * per_decade).floor() as i64;
            if bucket != current_bucket {
                picked.push(i);
                current_bucket = bucket;
            } else {
                *picked.last_mut().unwrap() = i;
            }
        }
        if picked.last() != Some(&(self.trace.records.len() - 1)) {
            picked.push(self.trace.records.len() - 1);
        }
        picked
    }

    fn implicit_penalty(&self, theta: ArrayView1<f64>) -> f64 {
        match self.config.preset.algorithm {
            Algorithm::Gd => {
                let r = norm2((&theta.to_owned() - self.trace.initial_theta()).view());
                r * r
            }
            Algorithm::Egd => {
                let r = norm1((&theta.to_owned() - self.trace.initial_theta()).view());
                r * r
            }
        }
    }

    /// Explicit solutions along a chain of coefficients, warm-started in
    /// decreasing-lambda order. `lambdas` may be any order; results map
    /// one-to-one. Failures are surfaced per grid point and yield None.
    fn explicit_chain(&self, lambdas: &[f64]) -> Vec<Option<RegularizedSolution<f64>>> {
        let problem = &self.generated.problem;
        let mut order: Vec<usize> = (0..lambdas.len()).collect();
        order.sort_by(|&a, &b| {
            lambdas[b]
                .partial_cmp(&lambdas[a])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut results: Vec<Option<RegularizedSolution<f64>>> = vec![None; lambdas.len()];
        let mut warm: Option<Array1<f64>> = None;
        for &idx in &order {
            let lambda = lambdas[idx];
            let mut options = SolveOptions::default()
                .with_tolerance(self.config.solver.tolerance)
                .with_max_iter(match self.config.preset.algorithm {
                    Algorithm::Gd => self.config.solver.max_iter,
                    Algorithm::Egd => self.config.solver.kl_max_iter,
                });
            if let Some(w) = &warm {
                options.init = Some(w.clone());
            }
            let solved = match self.config.preset.algorithm {
                Algorithm::Gd => ridge_glm_solve(problem, lambda, None, &options),
                Algorithm::Egd => {
                    let d = problem.d();
                    let pi = Array1::from_elem(d, 1.0 / d as f64);
                    kl_glm_solve(problem, lambda, pi.view(), &options)
                }
            };
            match solved {
                Ok(solution) => {
                    warm = Some(solution.theta_hat.clone());
                    results[idx] = Some(solution);
                }
                Err(err) => {
                    eprintln!("explicit solve failed at lambda {lambda:.3e}: {err}");
                }
            }
        }
        results
    }

    /// Explicit envelope value at a solution: f(theta) + lambda * penalty
    /// in the run's geometry, with the task's objective shift applied.
    fn explicit_envelope_value(&self, solution: &RegularizedSolution<f64>, lambda: f64) -> Result<f64> {
        let problem = &self.generated.problem;
        let f = problem.loss_mode(solution.theta_hat.view(), EvalMode::Clamped)? + self.objective_shift;
        Ok(f + lambda * self.implicit_penalty(solution.theta_hat.view()))
    }
}

/// Training-envelope pipeline: CSV columns `tau, implicit_obj,
/// explicit_obj_quarter, explicit_obj_full, explicit_obj_worst` plus an SVG.
/// For GD runs the worst column repeats the full column (there is no third
/// explicit curve in that geometry); for EGD it is the (d+1)/(2 tau) curve.
pub fn run_envelope(ctx: &ExperimentContext) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(&ctx.config.out_dir)?;
    let problem = &ctx.generated.problem;
    let checkpoints = ctx.checkpoints();
    let taus: Vec<f64> = checkpoints
        .iter()
        .map(|&i| ctx.trace.records[i].tau)
        .collect();

    let quarter: Vec<f64> = taus.iter().map(|t| 1.0 / (4.0 * t)).collect();
    let full: Vec<f64> = taus.iter().map(|t| 1.0 / t).collect();
    let quarter_solutions = ctx.explicit_chain(&quarter);
    let full_solutions = ctx.explicit_chain(&full);
    let worst_solutions = match ctx.config.preset.algorithm {
        Algorithm::Egd => {
            let dplus = (ctx.config.preset.d as f64 + 1.0) / 2.0;
            let worst: Vec<f64> = taus.iter().map(|t| dplus / t).collect();
            Some((worst.clone(), ctx.explicit_chain(&worst)))
        }
        Algorithm::Gd => None,
    };

    let mut rows = Vec::new();
    let mut implicit_pts = Vec::new();
    let mut quarter_pts = Vec::new();
    let mut full_pts = Vec::new();
    let mut worst_pts = Vec::new();
    for (k, &idx) in checkpoints.iter().enumerate() {
        let record = &ctx.trace.records[idx];
        let lambda_q = quarter[k];
        let implicit = record.objective
            + ctx.objective_shift
            + lambda_q * ctx.implicit_penalty(record.theta.view());
        let explicit_quarter = match &quarter_solutions[k] {
            Some(s) => ctx.explicit_envelope_value(s, lambda_q)?,
            None => f64::NAN,
        };
        let explicit_full = match &full_solutions[k] {
            Some(s) => ctx.explicit_envelope_value(s, full[k])?,
            None => f64::NAN,
        };
        let explicit_worst = match &worst_solutions {
            Some((lams, sols)) => match &sols[k] {
                Some(s) => ctx.explicit_envelope_value(s, lams[k])?,
                None => f64::NAN,
            },
            None => explicit_full,
        };
        rows.push(vec![
            record.tau.to_string(),
            implicit.to_string(),
            explicit_quarter.to_string(),
            explicit_full.to_string(),
            explicit_worst.to_string(),
        ]);
        implicit_pts.push((record.tau, implicit));
        quarter_pts.push((record.tau, explicit_quarter));
        full_pts.push((record.tau, explicit_full));
        worst_pts.push((record.tau, explicit_worst));
    }

    let csv_path = ctx.out("envelope.csv");
    write_rows_csv(
        &csv_path,
        &[
            "tau",
            "implicit_obj",
            "explicit_obj_quarter",
            "explicit_obj_full",
            "explicit_obj_worst",
        ],
        &rows,
    )?;

    let mut series = vec![
        Series {
            label: "implicit (loss + penalty/4tau)".into(),
            color: PALETTE[0],
            points: implicit_pts,
        },
        Series {
            label: "explicit lambda = 1/(4 tau)".into(),
            color: PALETTE[1],
            points: quarter_pts,
        },
        Series {
            label: "explicit lambda = 1/tau".into(),
            color: PALETTE[2],
            points: full_pts,
        },
    ];
    if ctx.config.preset.algorithm == Algorithm::Egd {
        series.push(Series {
            label: "explicit lambda = (d+1)/(2 tau)".into(),
            color: PALETTE[3],
            points: worst_pts,
        });
    }
    let svg_path = ctx.out("envelope.svg");
    line_chart(
        &svg_path,
        &format!("{} training envelope", ctx.config.preset.name()),
        "tau",
        "loss + penalty",
        ctx.x_range(),
        &series,
    )?;

    // Problem data alongside, consumable by the CSV ingestion interface.
    let problem_path = ctx.out("problem.csv");
    write_problem_csv(&problem_path, problem)?;
    let theta_path = ctx.out("theta_true.csv");
    write_theta_csv(&theta_path, &ctx.generated.theta_true)?;

    Ok(vec![csv_path, svg_path, problem_path, theta_path])
}

/// Prediction-risk pipeline: CSV columns `tau, risk_implicit, risk_quarter,
/// risk_full` plus an SVG.
pub fn run_risk(ctx: &ExperimentContext) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(&ctx.config.out_dir)?;
    let problem = &ctx.generated.problem;
    let checkpoints = ctx.checkpoints();
    let taus: Vec<f64> = checkpoints
        .iter()
        .map(|&i| ctx.trace.records[i].tau)
        .collect();
    let quarter: Vec<f64> = taus.iter().map(|t| 1.0 / (4.0 * t)).collect();
    let full: Vec<f64> = taus.iter().map(|t| 1.0 / t).collect();
    let quarter_solutions = ctx.explicit_chain(&quarter);
    let full_solutions = ctx.explicit_chain(&full);

    let mut rows = Vec::new();
    let mut implicit_pts = Vec::new();
    let mut quarter_pts = Vec::new();
    let mut full_pts = Vec::new();
    for (k, &idx) in checkpoints.iter().enumerate() {
        let record = &ctx.trace.records[idx];
        let risk_implicit = problem.prediction_risk_mode(record.theta.view(), EvalMode::Clamped)?;
        let risk_of = |solution: &Option<RegularizedSolution<f64>>| -> Result<f64> {
            match solution {
                Some(s) => problem.prediction_risk_mode(s.theta_hat.view(), EvalMode::Clamped),
                None => Ok(f64::NAN),
            }
        };
        let risk_quarter = risk_of(&quarter_solutions[k])?;
        let risk_full = risk_of(&full_solutions[k])?;
        rows.push(vec![
            record.tau.to_string(),
            risk_implicit.to_string(),
            risk_quarter.to_string(),
            risk_full.to_string(),
        ]);
        implicit_pts.push((record.tau, risk_implicit));
        quarter_pts.push((record.tau, risk_quarter));
        full_pts.push((record.tau, risk_full));
    }

    let csv_path = ctx.out("risk.csv");
    write_rows_csv(
        &csv_path,
        &["tau", "risk_implicit", "risk_quarter", "risk_full"],
        &rows,
    )?;
    let svg_path = ctx.out("risk.svg");
    line_chart(
        &svg_path,
        &format!("{} prediction risk", ctx.config.preset.name()),
        "tau",
        "risk",
        ctx.x_range(),
        &[
            Series {
                label: "implicit".into(),
                color: PALETTE[0],
                points: implicit_pts,
            },
            Series {
                label: "explicit lambda = 1/(4 tau)".into(),
                color: PALETTE[1],
                points: quarter_pts,
            },
            Series {
                label: "explicit lambda = 1/tau".into(),
                color: PALETTE[2],
                points: full_pts,
            },
        ],
    )?;
    Ok(vec![csv_path, svg_path])
}

/// Solution-path pipeline: long-format CSV `tau_or_invlambda, coord_index,
/// value, estimator_kind`, all d components in the underparameterized regime
/// and exactly the first 40 in the overparameterized one, plus one SVG per
/// estimator.
pub fn run_paths(ctx: &ExperimentContext) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(&ctx.config.out_dir)?;
    let problem = &ctx.generated.problem;
    let d = problem.d();
    let shown = match ctx.config.preset.regime {
        iterreg::datagen::Regime::Over => d.min(40),
        iterreg::datagen::Regime::Under => d,
    };

    let mut rows = Vec::new();
    let mut implicit_series: Vec<Series> = (0..shown)
        .map(|j| Series {
            label: if j == 0 { "coordinates".into() } else { String::new() },
            color: PALETTE[j % PALETTE.len()],
            points: Vec::new(),
        })
        .collect();
    for &idx in &ctx.checkpoints() {
        let record = &ctx.trace.records[idx];
        for j in 0..shown {
            rows.push(vec![
                record.tau.to_string(),
                j.to_string(),
                record.theta[j].to_string(),
                "implicit".to_string(),
            ]);
            implicit_series[j].points.push((record.tau, record.theta[j]));
        }
    }

    let solver = match ctx.config.preset.algorithm {
        Algorithm::Gd => PathSolver::Ridge,
        Algorithm::Egd => PathSolver::Kl {
            anchor: Array1::from_elem(d, 1.0 / d as f64),
        },
    };
    let options = SolveOptions::default()
        .with_tolerance(ctx.config.solver.tolerance)
        .with_max_iter(match ctx.config.preset.algorithm {
            Algorithm::Gd => ctx.config.solver.max_iter,
            Algorithm::Egd => ctx.config.solver.kl_max_iter,
        });
    let path = lambda_path_solve(problem, &solver, &ctx.config.lambda_grid, &options, &[])?;
    let mut explicit_series: Vec<Series> = (0..shown)
        .map(|j| Series {
            label: if j == 0 { "coordinates".into() } else { String::new() },
            color: PALETTE[j % PALETTE.len()],
            points: Vec::new(),
        })
        .collect();
    for solution in &path {
        let inv_lambda = 1.0 / solution.lambda;
        if !solution.converged {
            eprintln!(
                "path point lambda {:.3e} unconverged (residual {:.2e})",
                solution.lambda, solution.residual
            );
        }
        for j in 0..shown {
            rows.push(vec![
                inv_lambda.to_string(),
                j.to_string(),
                solution.theta_hat[j].to_string(),
                "explicit".to_string(),
            ]);
            explicit_series[j]
                .points
                .push((inv_lambda, solution.theta_hat[j]));
        }
    }

    let csv_path = ctx.out("paths.csv");
    write_rows_csv(
        &csv_path,
        &["tau_or_invlambda", "coord_index", "value", "estimator_kind"],
        &rows,
    )?;
    let implicit_svg = ctx.out("paths_implicit.svg");
    line_chart(
        &implicit_svg,
        &format!("{} implicit solution path", ctx.config.preset.name()),
        "tau",
        "coordinate value",
        ctx.x_range(),
        &implicit_series,
    )?;
    let explicit_svg = ctx.out("paths_explicit.svg");
    line_chart(
        &explicit_svg,
        &format!("{} explicit solution path", ctx.config.preset.name()),
        "1/lambda",
        "coordinate value",
        ctx.x_range(),
        &explicit_series,
    )?;

    // The full trace is part of the deliverable for downstream tooling.
    let trace_csv = ctx.out("trace.csv");
    write_trace_csv(&trace_csv, &ctx.trace, false)?;

    Ok(vec![csv_path, implicit_svg, explicit_svg, trace_csv])
}

/// Aggregation demo: Gibbs posteriors along a lambda grid, the EGD
/// equivalence deviations, and the expected-risk gap bounds on a simulated
/// collection.
pub fn run_aggregate(config: &RunConfig) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(&config.out_dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let size = 20usize;
    let population = Array1::from_shape_fn(size, |_| rng.random_range(0.2..0.8));
    let empirical = Array1::from_shape_fn(size, |j| {
        (population[j] + rng.random_range(-0.08..0.08f64)).clamp(0.01, 0.99)
    });
    let collection =
        iterreg::aggregate::ModelCollection::new(empirical.clone(), Some(population.clone()), None)?;

    // Collection echo.
    let coll_path = config.out_dir.join("aggregate_collection.csv");
    let coll_rows: Vec<Vec<String>> = (0..size)
        .map(|j| {
            vec![
                format!("m{j}"),
                empirical[j].to_string(),
                population[j].to_string(),
                (1.0 / size as f64).to_string(),
            ]
        })
        .collect();
    write_rows_csv(
        &coll_path,
        &["model_id", "empirical_risk", "population_risk", "prior_weight"],
        &coll_rows,
    )?;

    // Gibbs weights along a 25-point sub-grid of the configured lambdas.
    let lambdas: Vec<f64> = {
        let all = config.lambda_grid.values();
        let stride = (all.len() / 25).max(1);
        all.into_iter().step_by(stride).collect()
    };
    let mut weight_rows = Vec::new();
    let mut bound_rows = Vec::new();
    let prior = Array1::from_elem(size, 1.0 / size as f64);
    let budget = 0.5;
    let (_, inf_feasible) =
        iterreg::aggregate::kl_ball_linear_min(population.view(), prior.view(), budget)?;
    for &lambda in &lambdas {
        let weights = collection.gibbs_posterior(lambda)?;
        for j in 0..size {
            weight_rows.push(vec![
                lambda.to_string(),
                j.to_string(),
                weights[j].to_string(),
            ]);
        }
        let expected = collection.expected_risk(weights.view())?;
        let gap = expected - inf_feasible;
        let rhs_gibbs = collection.risk_gap_bound(
            iterreg::aggregate::WeightsKind::Gibbs,
            lambda,
            prior.view(),
        )?;
        let rhs_egd = collection.risk_gap_bound(
            iterreg::aggregate::WeightsKind::Egd,
            lambda,
            prior.view(),
        )?;
        bound_rows.push(vec![
            lambda.to_string(),
            expected.to_string(),
            gap.to_string(),
            rhs_gibbs.to_string(),
            rhs_egd.to_string(),
        ]);
    }
    let weights_path = config.out_dir.join("aggregate_weights.csv");
    write_rows_csv(&weights_path, &["lambda", "model_id", "weight"], &weight_rows)?;
    let bounds_path = config.out_dir.join("aggregate_bounds.csv");
    write_rows_csv(
        &bounds_path,
        &["lambda", "expected_risk_gibbs", "gap_vs_kl_ball", "rhs_gibbs_form", "rhs_egd_form"],
        &bound_rows,
    )?;

    // Equivalence deviations across (eta, T) pairs.
    let mut eq_rows = Vec::new();
    for &(eta, t) in &[(0.1, 10usize), (0.37, 113), (1.0, 1), (2.5, 40), (25.0, 4)] {
        let dev = collection.egd_equivalence_check(eta, t)?;
        eq_rows.push(vec![eta.to_string(), t.to_string(), dev.to_string()]);
    }
    let eq_path = config.out_dir.join("aggregate_equivalence.csv");
    write_rows_csv(&eq_path, &["eta", "T", "max_deviation"], &eq_rows)?;

    Ok(vec![coll_path, weights_path, bounds_path, eq_path])
}

/// Named property-check groups run at desk scale. Returns (name, passed)
/// pairs; an empty filter runs everything.
pub fn run_checks(config: &RunConfig) -> Result<Vec<(String, bool)>> {
    let all = ["basicineq", "envelope", "dynamics", "formulas", "equivalence"];
    let selected: Vec<&str> = if config.checks.is_empty() {
        all.to_vec()
    } else {
        all.iter()
            .copied()
            .filter(|name| config.checks.iter().any(|c| c == name))
            .collect()
    };
    if selected.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no known checks among {:?}",
            config.checks
        )));
    }

    let mut results = Vec::new();
    for name in selected {
        let passed = match name {
            "basicineq" => check_basicineq(config.seed)?,
            "envelope" => check_envelope(config.seed)?,
            "dynamics" => check_dynamics(config.seed)?,
            "formulas" => check_formulas(),
            "equivalence" => check_equivalence(config.seed)?,
            _ => unreachable!(),
        };
        results.push((name.to_string(), passed));
    }
    Ok(results)
}

fn desk_problem(seed: u64, task: Task, algorithm: Algorithm) -> Result<Generated> {
    let mut spec = iterreg::datagen::preset(task, algorithm, iterreg::datagen::Regime::Under);
    spec.n = 30;
    spec.d = 6;
    spec.gamma = 1.0;
    generate(&spec, seed)
}

fn check_basicineq(seed: u64) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut min_gap = f64::INFINITY;
    for k in 0..5 {
        let g = desk_problem(seed + k, Task::Linear, Algorithm::Gd)?;
        let l = g
            .problem
            .smoothness_constant(SmoothnessGeometry::Euclidean, None)?;
        let sched = iterreg::optim::StepSchedule::constant(1.0 / l, 150)?;
        let trace = gd_run(&g.problem.objective(), Array1::zeros(6).view(), &sched, Some(l))?;
        let refs: Vec<Array1<f64>> = (0..30)
            .map(|_| Array1::from_shape_fn(6, |_| rng.random_range(-1.5..1.5)))
            .collect();
        let ledger = verify_trace(
            &trace,
            |z| g.problem.loss(z),
            &Euclidean::unconstrained(),
            &refs,
        )?;
        min_gap = min_gap.min(ledger.min_gap().map(|r| r.gap).unwrap_or(f64::INFINITY));

        let ge = desk_problem(seed + 50 + k, Task::Logistic, Algorithm::Egd)?;
        let le = ge
            .problem
            .smoothness_constant(SmoothnessGeometry::L1Simplex, None)?;
        let pi = Array1::from_elem(6, 1.0 / 6.0);
        let sched_e = iterreg::optim::StepSchedule::constant(1.0 / le, 150)?;
        let trace_e = egd_run(&ge.problem.objective(), pi.view(), &sched_e, Some(le))?;
        let refs_e: Vec<Array1<f64>> = (0..30)
            .map(|_| {
                let raw = Array1::from_shape_fn(6, |_| rng.random_range(0.01..1.0f64));
                let s = raw.sum();
                raw.mapv(|v| v / s)
            })
            .collect();
        let ledger_e = verify_trace(
            &trace_e,
            |z| ge.problem.loss(z),
            &NegativeEntropySimplex,
            &refs_e,
        )?;
        min_gap = min_gap.min(ledger_e.min_gap().map(|r| r.gap).unwrap_or(f64::INFINITY));
    }
    Ok(min_gap >= -1e-9)
}

fn check_envelope(seed: u64) -> Result<bool> {
    for k in 0..3 {
        let g = desk_problem(seed + 100 + k, Task::Linear, Algorithm::Gd)?;
        let l = g
            .problem
            .smoothness_constant(SmoothnessGeometry::Euclidean, None)?;
        let sched = iterreg::optim::StepSchedule::constant(1.0 / l, 2000)?;
        let trace = gd_run(&g.problem.objective(), Array1::zeros(6).view(), &sched, Some(l))?;
        let count = trace.records.len();
        for j in 1..=10 {
            let idx = (j * (count - 1) / 10).max(1);
            let triple = iterreg::bounds::envelope_gd(
                |z| g.problem.loss(z),
                &trace,
                idx,
                |coeff| {
                    ridge_glm_solve(&g.problem, coeff, None, &SolveOptions::default())
                        .map(|s| s.objective_value)
                },
            )?;
            if !triple.ordered(1e-7) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn check_dynamics(seed: u64) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd1a);
    for _ in 0..3 {
        let (n, d) = (4, 9);
        let x = ndarray::Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0));
        let theta_star = Array1::from_shape_fn(d, |_| rng.random_range(-1.0..1.0));
        let y = x.dot(&theta_star);
        let ls = iterreg::optim::LeastSquares::new(x.clone(), y.clone())?;
        let sigma = ls.x.t().dot(&ls.x) / n as f64;
        let l = iterreg::linalg::operator_norm_psd(sigma.view(), 1e-12, 10_000)?;
        let sched = iterreg::optim::StepSchedule::constant(1.0 / l, 60_000)?;
        let trace = gd_run(&ls, Array1::zeros(d).view(), &sched, Some(l))?;
        let gram = x.dot(&x.t());
        let w = iterreg::linalg::solve_spd(&gram, y.view())?;
        let min_norm = x.t().dot(&w);
        if norm2((&trace.final_record().theta - &min_norm).view()) >= 1e-4 {
            return Ok(false);
        }
        if trace.descent_violation(1e-9).is_some() {
            return Ok(false);
        }
    }
    Ok(true)
}

fn check_formulas() -> bool {
    let spectral: iterreg::glm::SpectralTerms<f64> = iterreg::glm::SpectralTerms {
        trace: 4.0,
        frobenius: 2.0,
        operator: 1.0,
    };
    let ridge = iterreg::risk::ridge_lambda_star(&spectral, 1.0, 4, 1.0, 1.0);
    let gd = iterreg::risk::gd_lambda_star(&spectral, 1.0, 4, 1.0, 1.0);
    let csg = iterreg::risk::spectral_noise_term(&spectral, 1.0, 4, 1.0);
    (gd - 2.0 * ridge).abs() < 1e-14
        && (csg - 2.5).abs() < 1e-14
        && iterreg::risk::stopping_time(0.1, 1.0).map(|v| v == (10, true)).unwrap_or(false)
}

fn check_equivalence(seed: u64) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
    for _ in 0..20 {
        let size = rng.random_range(2..20usize);
        let risks = Array1::from_shape_fn(size, |_| rng.random_range(0.0..1.0));
        let coll = iterreg::aggregate::ModelCollection::new(risks, None, None)?;
        let eta = rng.random_range(0.1..2.0);
        let t = rng.random_range(1..100usize);
        if coll.egd_equivalence_check(eta, t)? > 1e-10 {
            return Ok(false);
        }
    }
    Ok(true)
}
