//! The algorithm runners. Every algorithm is the same loop over a geometry's
//! closed-form mirror-descent step (the two-stage form: unconstrained step,
//! then Bregman projection), differing only in geometry, validation, and the
//! objective recorded along the trace.

use super::objective::{Objective, PlipObjective};
use super::schedule::StepSchedule;
use super::trace::{AlgorithmTag, IterateTrace, Recorder, TraceRecord};
use crate::geometry::{BregmanGeometry, BurgPositiveOrthant, Euclidean, NegativeEntropySimplex};
use crate::linalg::{norm1, norm2};
use crate::{c, Error, Result, Scalar};
use ndarray::{Array1, ArrayView1};

/// Coordinatewise soft-thresholding: sign(v_j) * max(0, |v_j| - t).
pub fn soft_threshold<F: Scalar>(v: ArrayView1<F>, t: F) -> Array1<F> {
    v.mapv(|x| x.signum() * (x.abs() - t).max(F::zero()))
}

fn validate_max_step<F: Scalar>(schedule: &StepSchedule<F>, limit: Option<F>) -> Result<()> {
    if let Some(lim) = limit {
        let slack = lim * c::<F>(1e-12);
        if schedule.max_step() > lim + slack {
            return Err(Error::invalid(format!(
                "step size {} exceeds the validity limit {}",
                schedule.max_step().to_f64().unwrap_or(f64::NAN),
                lim.to_f64().unwrap_or(f64::NAN)
            )));
        }
    }
    Ok(())
}

fn run_loop<F: Scalar>(
    tag: AlgorithmTag,
    schedule: &StepSchedule<F>,
    theta0: Array1<F>,
    mut step: impl FnMut(usize, &Array1<F>, F) -> Result<Array1<F>>,
    mut value: impl FnMut(&Array1<F>) -> Result<F>,
) -> Result<IterateTrace<F>> {
    if theta0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial point"));
    }
    let mut recorder = Recorder::new(schedule);
    let mut records = Vec::new();
    let mut theta = theta0;
    let mut tau_running = F::zero();

    records.push(TraceRecord {
        t: 0,
        tau: F::zero(),
        objective: value(&theta)?,
        theta: theta.clone(),
    });
    recorder.mark(F::zero());

    let mut t = 0usize;
    for eta in schedule.steps() {
        theta = step(t, &theta, eta)?;
        t += 1;
        tau_running = tau_running + eta;
        if recorder.should_record(t, tau_running) {
            let tau = schedule.accumulated(t);
            records.push(TraceRecord {
                t,
                tau,
                objective: value(&theta)?,
                theta: theta.clone(),
            });
            recorder.mark(tau_running);
        }
    }

    Ok(IterateTrace {
        algorithm: tag,
        schedule: schedule.clone(),
        records,
    })
}

fn checked_gradient<F: Scalar>(
    obj: &impl Objective<F>,
    theta: &Array1<F>,
    t: usize,
) -> Result<Array1<F>> {
    let g = obj.gradient(theta.view())?;
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::DomainViolation {
            context: "non-finite gradient",
            iteration: Some(t),
        });
    }
    Ok(g)
}

fn geometry_run<F: Scalar, G: BregmanGeometry<F>>(
    tag: AlgorithmTag,
    obj: &impl Objective<F>,
    geometry: &G,
    theta0: Array1<F>,
    schedule: &StepSchedule<F>,
) -> Result<IterateTrace<F>> {
    run_loop(
        tag,
        schedule,
        theta0,
        |t, theta, eta| {
            let g = checked_gradient(obj, theta, t)?;
            geometry.step(theta.view(), g.view(), eta).map_err(|e| match e {
                Error::DomainViolation { context, .. } => Error::DomainViolation {
                    context,
                    iteration: Some(t),
                },
                other => other,
            })
        },
        |theta| obj.value(theta.view()),
    )
}

/// Gradient descent theta_{t+1} = theta_t - eta_t grad f(theta_t).
///
/// When `lipschitz` is supplied, every step size is validated against 1/L;
/// without it the schedule is taken as given.
pub fn gd_run<F: Scalar>(
    obj: &impl Objective<F>,
    theta0: ArrayView1<F>,
    schedule: &StepSchedule<F>,
    lipschitz: Option<F>,
) -> Result<IterateTrace<F>> {
    validate_max_step(schedule, lipschitz.map(|l| F::one() / l))?;
    geometry_run(
        AlgorithmTag::Gd,
        obj,
        &Euclidean::unconstrained(),
        theta0.to_owned(),
        schedule,
    )
}

/// Gradient step followed by Euclidean projection onto the centered ball of
/// radius `b`. The initial point must already lie in the ball.
pub fn projected_gd_run<F: Scalar>(
    obj: &impl Objective<F>,
    theta0: ArrayView1<F>,
    schedule: &StepSchedule<F>,
    b: F,
    lipschitz: Option<F>,
) -> Result<IterateTrace<F>> {
    if norm2(theta0) > b + c::<F>(1e-12) {
        return Err(Error::invalid("initial point outside the ball"));
    }
    validate_max_step(schedule, lipschitz.map(|l| F::one() / l))?;
    geometry_run(
        AlgorithmTag::ProjectedGd,
        obj,
        &Euclidean::ball(b),
        theta0.to_owned(),
        schedule,
    )
}

/// Exponentiated gradient descent on the probability simplex: multiplicative
/// update then l1 normalization. The start must be strictly positive and sum
/// to one.
pub fn egd_run<F: Scalar>(
    obj: &impl Objective<F>,
    theta0: ArrayView1<F>,
    schedule: &StepSchedule<F>,
    lipschitz: Option<F>,
) -> Result<IterateTrace<F>> {
    if theta0.iter().any(|&v| v <= F::zero()) {
        return Err(Error::invalid(
            "EGD initialization must have strictly positive coordinates",
        ));
    }
    if (theta0.sum() - F::one()).abs() > c::<F>(1e-12) {
        return Err(Error::invalid("EGD initialization must sum to one"));
    }
    validate_max_step(schedule, lipschitz.map(|l| F::one() / l))?;
    geometry_run(
        AlgorithmTag::Egd,
        obj,
        &NegativeEntropySimplex,
        theta0.to_owned(),
        schedule,
    )
}

/// Generic mirror descent over a pluggable geometry. For the shipped
/// geometries the argmin step is evaluated in closed form; Euclidean reduces
/// to (projected) gradient descent and negative entropy to EGD. When
/// `lipschitz` is supplied the step sizes are validated against
/// alpha/L for strongly convex potentials and 1/L otherwise.
pub fn mirror_descent_run<F: Scalar, G: BregmanGeometry<F>>(
    obj: &impl Objective<F>,
    geometry: &G,
    theta0: ArrayView1<F>,
    schedule: &StepSchedule<F>,
    lipschitz: Option<F>,
) -> Result<IterateTrace<F>> {
    if !geometry.in_constraint(theta0, c::<F>(1e-9)) || !geometry.in_interior(theta0) {
        return Err(Error::DomainViolation {
            context: "mirror descent start outside constraint set interior",
            iteration: Some(0),
        });
    }
    let limit = lipschitz.map(|l| geometry.strong_convexity().unwrap_or(F::one()) / l);
    validate_max_step(schedule, limit)?;
    geometry_run(
        AlgorithmTag::MirrorDescent(geometry.kind()),
        obj,
        geometry,
        theta0.to_owned(),
        schedule,
    )
}

/// ISTA on the composite objective `smooth + lambda ||.||_1`: a gradient step
/// on the smooth part followed by soft-thresholding at eta*lambda. The trace
/// records the composite objective.
pub fn ista_run<F: Scalar>(
    smooth: &impl Objective<F>,
    lambda: F,
    theta0: ArrayView1<F>,
    schedule: &StepSchedule<F>,
    lipschitz: Option<F>,
) -> Result<IterateTrace<F>> {
    if lambda < F::zero() {
        return Err(Error::invalid("l1 weight must be nonnegative"));
    }
    validate_max_step(schedule, lipschitz.map(|l| F::one() / l))?;
    run_loop(
        AlgorithmTag::Ista,
        schedule,
        theta0.to_owned(),
        |t, theta, eta| {
            let g = checked_gradient(smooth, theta, t)?;
            let stepped = Array1::from_shape_fn(theta.len(), |i| theta[i] - eta * g[i]);
            Ok(soft_threshold(stepped.view(), eta * lambda))
        },
        |theta| Ok(smooth.value(theta.view())? + lambda * norm1(theta.view())),
    )
}

/// NoLips on the Poisson linear inverse problem: mirror descent with the Burg
/// potential on the positive orthant. `relative_l` defaults to ||y||_1, the
/// constant making L*phi - f convex; step sizes must satisfy eta <= 1/L.
pub fn nolips_run<F: Scalar>(
    plip: &PlipObjective<F>,
    theta0: ArrayView1<F>,
    schedule: &StepSchedule<F>,
    relative_l: Option<F>,
) -> Result<IterateTrace<F>> {
    if theta0.iter().any(|&v| v <= F::zero()) {
        return Err(Error::invalid("NoLips start must be strictly positive"));
    }
    let l = relative_l.unwrap_or_else(|| norm1(plip.y.view()));
    validate_max_step(schedule, Some(F::one() / l))?;
    geometry_run(
        AlgorithmTag::NoLips,
        plip,
        &BurgPositiveOrthant,
        theta0.to_owned(),
        schedule,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::objective::{FnObjective, LeastSquares, LinearObjective};
    use ndarray::{array, Array2};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn quadratic_shift(center: f64) -> impl Objective<f64> {
        FnObjective {
            value_fn: move |th: ndarray::ArrayView1<f64>| 0.5 * (th[0] - center).powi(2),
            gradient_fn: move |th: ndarray::ArrayView1<f64>| array![th[0] - center],
        }
    }

    #[test]
    fn gd_one_step_exact_solve() {
        let obj = quadratic_shift(1.0);
        let sched = StepSchedule::constant(1.0, 1).unwrap();
        let trace = gd_run(&obj, array![0.0].view(), &sched, Some(1.0)).unwrap();
        let last = trace.final_record();
        assert_eq!(last.theta[0], 1.0);
        assert_eq!(last.objective, 0.0);
    }

    #[test]
    fn gd_full_gradient_step_reaches_origin() {
        let obj = FnObjective {
            value_fn: |th: ndarray::ArrayView1<f64>| 0.5 * th.iter().map(|v| v * v).sum::<f64>(),
            gradient_fn: |th: ndarray::ArrayView1<f64>| th.to_owned(),
        };
        let sched = StepSchedule::constant(1.0, 1).unwrap();
        let trace = gd_run(&obj, array![3.0, -2.0, 0.7].view(), &sched, Some(1.0)).unwrap();
        assert!(trace.final_record().theta.iter().all(|&v| v == 0.0));
    }

    /// Gaussian elimination with partial pivoting, test-only oracle.
    fn solve_dense(mut a: Array2<f64>, mut b: Array1<f64>) -> Array1<f64> {
        let n = a.nrows();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| {
                    a[[i, col]]
                        .abs()
                        .partial_cmp(&a[[j, col]].abs())
                        .unwrap()
                })
                .unwrap();
            if pivot != col {
                for k in 0..n {
                    let tmp = a[[col, k]];
                    a[[col, k]] = a[[pivot, k]];
                    a[[pivot, k]] = tmp;
                }
                b.swap(col, pivot);
            }
            for row in (col + 1)..n {
                let f = a[[row, col]] / a[[col, col]];
                for k in col..n {
                    a[[row, k]] -= f * a[[col, k]];
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = Array1::zeros(n);
        for row in (0..n).rev() {
            let mut s = b[row];
            for k in (row + 1)..n {
                s -= a[[row, k]] * x[k];
            }
            x[row] = s / a[[row, row]];
        }
        x
    }

    fn random_ls(seed: u64, n: usize, d: usize) -> LeastSquares<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0));
        let y = Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0));
        LeastSquares::new(x, y).unwrap()
    }

    fn ls_lipschitz(ls: &LeastSquares<f64>) -> f64 {
        let n = ls.n() as f64;
        let sigma = ls.x.t().dot(&ls.x) / n;
        crate::linalg::operator_norm_psd(sigma.view(), 1e-12, 10_000).unwrap()
    }

    #[test]
    fn gd_least_squares_matches_normal_equations() {
        let ls = random_ls(42, 6, 3);
        let l = ls_lipschitz(&ls);
        let sched = StepSchedule::constant(1.0 / l, 500).unwrap();
        let trace = gd_run(&ls, Array1::zeros(3).view(), &sched, Some(l)).unwrap();
        let theta_t = &trace.final_record().theta;

        let grad = ls.gradient(theta_t.view()).unwrap();
        assert!(norm2(grad.view()) <= 1e-6);

        let xtx = ls.x.t().dot(&ls.x);
        let xty = ls.x.t().dot(&ls.y);
        let oracle = solve_dense(xtx, xty);
        for j in 0..3 {
            assert!((theta_t[j] - oracle[j]).abs() < 1e-5);
        }
    }

    #[test]
    fn gd_overparameterized_limit_is_min_norm_solution() {
        for seed in 0..3u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
            let (n, d) = (4, 9);
            let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0));
            let theta_star = Array1::from_shape_fn(d, |_| rng.random_range(-1.0..1.0));
            let y = x.dot(&theta_star); // consistent system
            let ls = LeastSquares::new(x.clone(), y.clone()).unwrap();
            let l = ls_lipschitz(&ls);
            let sched = StepSchedule::constant(1.0 / l, 60_000).unwrap();
            let trace = gd_run(&ls, Array1::zeros(d).view(), &sched, Some(l)).unwrap();

            // Pseudoinverse solution X^T (X X^T)^{-1} y via dense solve.
            let gram = x.dot(&x.t());
            let w = solve_dense(gram, y);
            let min_norm = x.t().dot(&w);
            let dev = norm2((&trace.final_record().theta - &min_norm).view());
            assert!(dev < 1e-4, "seed {seed}: deviation {dev}");
        }
    }

    #[test]
    fn gd_distance_to_solution_nonincreasing() {
        let ls = random_ls(7, 8, 4);
        let l = ls_lipschitz(&ls);
        let sched = StepSchedule::constant(1.0 / l, 2_000).unwrap();
        let trace = gd_run(&ls, Array1::zeros(4).view(), &sched, Some(l)).unwrap();
        let xtx = ls.x.t().dot(&ls.x);
        let xty = ls.x.t().dot(&ls.y);
        let sol = solve_dense(xtx, xty);
        let mut last = f64::INFINITY;
        for r in &trace.records {
            let dist = norm2((&r.theta - &sol).view());
            assert!(dist <= last + 1e-10);
            last = dist;
        }
    }

    #[test]
    fn projected_gd_examples() {
        // Interior trajectory identical to unconstrained GD.
        let ls = random_ls(3, 5, 2);
        let l = ls_lipschitz(&ls);
        let sched = StepSchedule::constant(1.0 / l, 200).unwrap();
        let free = gd_run(&ls, Array1::zeros(2).view(), &sched, Some(l)).unwrap();
        let boxed =
            projected_gd_run(&ls, Array1::zeros(2).view(), &sched, 100.0, Some(l)).unwrap();
        for (a, b) in free.records.iter().zip(boxed.records.iter()) {
            let dev = norm2((&a.theta - &b.theta).view());
            assert!(dev <= 1e-12);
        }

        // Constrained optimum: f(theta) = 0.5||theta - (2,0)||^2 on the unit ball.
        let obj = FnObjective {
            value_fn: |th: ndarray::ArrayView1<f64>| {
                0.5 * ((th[0] - 2.0).powi(2) + th[1].powi(2))
            },
            gradient_fn: |th: ndarray::ArrayView1<f64>| array![th[0] - 2.0, th[1]],
        };
        let sched = StepSchedule::constant(1.0, 60).unwrap();
        let trace = projected_gd_run(&obj, array![0.0, 0.0].view(), &sched, 1.0, Some(1.0)).unwrap();
        let last = &trace.final_record().theta;
        assert!((last[0] - 1.0).abs() < 1e-10 && last[1].abs() < 1e-12);
        for r in &trace.records {
            assert!(norm2(r.theta.view()) <= 1.0 + 1e-12);
        }

        // Start outside the ball is rejected.
        assert!(projected_gd_run(&obj, array![2.0, 0.0].view(), &sched, 1.0, None).is_err());
    }

    #[test]
    fn egd_fixed_points_and_example() {
        let zero_obj = FnObjective {
            value_fn: |_: ndarray::ArrayView1<f64>| 0.0,
            gradient_fn: |th: ndarray::ArrayView1<f64>| Array1::zeros(th.len()),
        };
        let theta0 = array![0.3, 0.2, 0.5];
        let sched = StepSchedule::constant(0.7, 25).unwrap();
        let trace = egd_run(&zero_obj, theta0.view(), &sched, None).unwrap();
        for r in &trace.records {
            for j in 0..3 {
                assert!((r.theta[j] - theta0[j]).abs() < 1e-15);
            }
        }

        // Constant gradient c*1 cancels in the normalization.
        let const_obj = FnObjective {
            value_fn: |th: ndarray::ArrayView1<f64>| 3.0 * th.sum(),
            gradient_fn: |th: ndarray::ArrayView1<f64>| Array1::from_elem(th.len(), 3.0),
        };
        let trace = egd_run(&const_obj, theta0.view(), &sched, None).unwrap();
        for j in 0..3 {
            assert!((trace.final_record().theta[j] - theta0[j]).abs() < 1e-12);
        }

        // One multiplicative step on f = <(0, log 2), theta>.
        let lin = LinearObjective {
            cost: array![0.0, std::f64::consts::LN_2],
        };
        let sched1 = StepSchedule::constant(1.0, 1).unwrap();
        let trace = egd_run(&lin, array![0.5, 0.5].view(), &sched1, None).unwrap();
        let last = &trace.final_record().theta;
        assert!((last[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((last[1] - 1.0 / 3.0).abs() < 1e-15);

        // Simplex preserved at every record.
        for r in &trace.records {
            assert!(r.theta.iter().all(|&v| v > 0.0));
            assert!((r.theta.sum() - 1.0).abs() < 1e-12);
        }

        // Bad initializations are rejected.
        assert!(egd_run(&lin, array![0.0, 1.0].view(), &sched1, None).is_err());
        assert!(egd_run(&lin, array![0.6, 0.6].view(), &sched1, None).is_err());
    }

    #[test]
    fn mirror_descent_reductions() {
        for seed in 0..50u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(7000 + seed);
            let n = rng.random_range(4..10);
            let d = rng.random_range(2..6);
            let ls = random_ls(seed, n, d);
            let l = ls_lipschitz(&ls);
            let sched = StepSchedule::constant(0.9 / l, 60).unwrap();

            let gd = gd_run(&ls, Array1::zeros(d).view(), &sched, Some(l)).unwrap();
            let md = mirror_descent_run(
                &ls,
                &Euclidean::unconstrained(),
                Array1::zeros(d).view(),
                &sched,
                Some(l),
            )
            .unwrap();
            for (a, b) in gd.records.iter().zip(md.records.iter()) {
                assert_eq!(a.theta, b.theta, "euclidean reduction must be bitwise");
            }

            let lin = LinearObjective {
                cost: Array1::from_shape_fn(d, |_| rng.random_range(-1.0..1.0)),
            };
            let theta0 = Array1::from_elem(d, 1.0 / d as f64);
            let sched2 = StepSchedule::constant(rng.random_range(0.1..1.0), 60).unwrap();
            let egd = egd_run(&lin, theta0.view(), &sched2, None).unwrap();
            let md2: IterateTrace<f64> = mirror_descent_run(
                &lin,
                &NegativeEntropySimplex,
                theta0.view(),
                &sched2,
                None,
            )
            .unwrap();
            for (a, b) in egd.records.iter().zip(md2.records.iter()) {
                let dev = (&a.theta - &b.theta)
                    .iter()
                    .fold(0.0f64, |m, v| m.max(v.abs()));
                assert!(dev <= 1e-12);
            }
        }
    }

    #[test]
    fn mirror_descent_burg_one_step_formula() {
        let lin = LinearObjective {
            cost: array![0.8f64, 2.0],
        };
        let theta0 = array![0.5, 0.25];
        let eta = 0.3;
        let sched = StepSchedule::constant(eta, 1).unwrap();
        let trace = mirror_descent_run(&lin, &BurgPositiveOrthant, theta0.view(), &sched, None)
            .unwrap();
        let last = &trace.final_record().theta;
        for j in 0..2 {
            let expect = 1.0 / (1.0 / theta0[j] + eta * lin.cost[j]);
            assert!((last[j] - expect).abs() < 1e-15);
        }
    }

    /// Brute-force argmin of eta<g, u> + D(u, theta) over a fine grid.
    fn grid_argmin_2d<G: BregmanGeometry<f64>>(
        geom: &G,
        theta: &Array1<f64>,
        grad: &Array1<f64>,
        eta: f64,
        lo: f64,
        hi: f64,
        simplex: bool,
    ) -> Array1<f64> {
        let steps = 4000usize;
        let mut best = (f64::INFINITY, Array1::zeros(2));
        for i in 0..=steps {
            let a = lo + (hi - lo) * i as f64 / steps as f64;
            let candidate = if simplex {
                if !(0.0..=1.0).contains(&a) {
                    continue;
                }
                array![a, 1.0 - a]
            } else {
                // second coordinate scanned in an inner loop below
                array![a, 0.0]
            };
            if simplex {
                if candidate.iter().any(|&v| v <= 0.0) {
                    continue;
                }
                let val = eta * grad.dot(&candidate)
                    + geom.divergence(candidate.view(), theta.view()).unwrap();
                if val < best.0 {
                    best = (val, candidate);
                }
            } else {
                for k in 0..=steps / 10 {
                    let bcoord = lo + (hi - lo) * k as f64 / (steps / 10) as f64;
                    let cand = array![a, bcoord];
                    if !geom.in_interior(cand.view()) {
                        continue;
                    }
                    let val = eta * grad.dot(&cand)
                        + geom.divergence(cand.view(), theta.view()).unwrap();
                    if val < best.0 {
                        best = (val, cand);
                    }
                }
            }
        }
        best.1
    }

    #[test]
    fn mirror_step_matches_grid_search() {
        let theta = array![0.4, 0.6];
        let grad = array![0.9, -0.3];
        let eta = 0.5;

        let ent = NegativeEntropySimplex;
        let closed = ent.step(theta.view(), grad.view(), eta).unwrap();
        let grid = grid_argmin_2d(&ent, &theta, &grad, eta, 1e-4, 1.0 - 1e-4, true);
        assert!((closed[0] - grid[0]).abs() < 1e-4);

        let burg = BurgPositiveOrthant;
        let theta_b = array![0.7, 1.1];
        let grad_b = array![0.5, 0.2];
        let closed_b = burg.step(theta_b.view(), grad_b.view(), eta).unwrap();
        let grid_b = grid_argmin_2d(&burg, &theta_b, &grad_b, eta, 1e-3, 3.0, false);
        assert!((closed_b[0] - grid_b[0]).abs() < 1e-3);
        assert!((closed_b[1] - grid_b[1]).abs() < 1e-3);
    }

    #[test]
    fn soft_threshold_examples() {
        let out = soft_threshold(array![3.0, -0.5].view(), 1.0);
        assert_eq!(out, array![2.0, 0.0]);
        let v = array![0.3, -2.0, 0.0, 5.5];
        assert_eq!(soft_threshold(v.view(), 0.0), v);

        // Scalar-loop oracle on random input.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = Array1::from_shape_fn(20, |_| rng.random_range(-3.0f64..3.0));
        let t = 0.7;
        let fast = soft_threshold(r.view(), t);
        for j in 0..20 {
            let expect = if r[j] > t {
                r[j] - t
            } else if r[j] < -t {
                r[j] + t
            } else {
                0.0
            };
            assert!((fast[j] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn ista_with_zero_weight_is_gd() {
        let ls = random_ls(8, 6, 3);
        let l = ls_lipschitz(&ls);
        let sched = StepSchedule::constant(1.0 / l, 100).unwrap();
        let gd = gd_run(&ls, Array1::zeros(3).view(), &sched, Some(l)).unwrap();
        let ista = ista_run(&ls, 0.0, Array1::zeros(3).view(), &sched, Some(l)).unwrap();
        for (a, b) in gd.records.iter().zip(ista.records.iter()) {
            assert_eq!(a.theta, b.theta);
        }
        assert!(ista_run(&ls, -0.1, Array1::zeros(3).view(), &sched, None).is_err());
    }

    #[test]
    fn ista_orthogonal_design_reaches_lasso_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let d = 6;
        let y = Array1::from_shape_fn(d, |_| rng.random_range(-2.0..2.0));
        let ls = LeastSquares::new(Array2::eye(d), y.clone()).unwrap();
        let lambda = 0.15;
        // L = ||I/d||_op = 1/d.
        let l = 1.0 / d as f64;
        let sched = StepSchedule::constant(1.0 / l, 400).unwrap();
        let trace = ista_run(&ls, lambda, Array1::zeros(d).view(), &sched, Some(l)).unwrap();
        let got = &trace.final_record().theta;
        let expect = soft_threshold(y.view(), d as f64 * lambda);
        for j in 0..d {
            assert!((got[j] - expect[j]).abs() < 1e-8);
        }
        // Composite objective non-increasing.
        assert!(trace.descent_violation(1e-9).is_none());
    }

    #[test]
    fn nolips_one_dimensional_optimum() {
        let n = 5;
        let x = Array2::from_elem((n, 1), 1.0);
        let y = Array1::from_elem(n, 2.5f64);
        let plip = PlipObjective::new(x, y.clone()).unwrap();
        let l = norm1(y.view());
        let sched = StepSchedule::constant(1.0 / l, 4000).unwrap();
        let trace = nolips_run(&plip, array![0.4].view(), &sched, None).unwrap();
        let last = trace.final_record();
        assert!((last.theta[0] - 2.5).abs() < 1e-6);
        assert!(last.objective < 1e-10);
        assert!(trace.descent_violation(1e-9).is_none());
        for r in &trace.records {
            assert!(r.theta.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn nolips_zero_iterations_records_start_only() {
        let plip = PlipObjective::new(Array2::from_elem((2, 1), 1.0), array![1.0, 2.0]).unwrap();
        let sched = StepSchedule::constant(0.1, 0).unwrap();
        let trace = nolips_run(&plip, array![1.0].view(), &sched, None).unwrap();
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.records[0].t, 0);
    }

    #[test]
    fn nolips_rejects_nonpositive_inputs() {
        assert!(PlipObjective::new(Array2::from_elem((2, 1), 1.0), array![1.0, 0.0]).is_err());
        assert!(PlipObjective::new(array![[1.0], [-0.5]], array![1.0, 1.0]).is_err());
        let plip = PlipObjective::new(Array2::from_elem((2, 1), 1.0), array![1.0, 2.0]).unwrap();
        let sched = StepSchedule::constant(0.1, 1).unwrap();
        assert!(nolips_run(&plip, array![-1.0].view(), &sched, None).is_err());
    }

    #[test]
    fn step_size_validation() {
        let ls = random_ls(2, 5, 2);
        let sched = StepSchedule::constant(10.0, 5).unwrap();
        // With L supplied, an oversized step is an error; without it, the
        // schedule is accepted as given.
        assert!(gd_run(&ls, Array1::zeros(2).view(), &sched, Some(1.0)).is_err());
        assert!(gd_run(&ls, Array1::zeros(2).view(), &sched, None).is_ok());
    }

    #[test]
    fn trace_monotone_and_consistent_on_glm() {
        use crate::glm::{Design, GlmFamily, GlmProblem};
        let mut rng = ChaCha8Rng::seed_from_u64(66);
        let x = Array2::from_shape_fn((12, 4), |_| rng.random_range(-1.0..1.0));
        let y = Array1::from_shape_fn(12, |_| if rng.random_bool(0.5) { 1.0 } else { 0.0 });
        let p = GlmProblem::new(Design::new(x).unwrap(), y, GlmFamily::Bernoulli, None).unwrap();
        let l = p
            .smoothness_constant(crate::glm::SmoothnessGeometry::Euclidean, None)
            .unwrap();
        let sched = StepSchedule::new(vec![(0.5 / l, 150), (1.0 / l, 150)]).unwrap();
        let trace = gd_run(&p.objective(), Array1::zeros(4).view(), &sched, Some(l)).unwrap();
        assert!(trace.descent_violation(1e-9).is_none());
        assert!(trace.tau_consistent(1e-9));
        assert_eq!(trace.final_record().t, 300);
        // Phase boundary is recorded.
        assert!(trace.records.iter().any(|r| r.t == 150));
    }
}
