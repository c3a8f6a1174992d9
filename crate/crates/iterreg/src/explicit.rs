//! Explicit-regularization solvers: ridge GLM (damped Newton), KL-regularized
//! GLM on the simplex (exponentiated gradient run to convergence), lasso via
//! ISTA, and warm-started lambda paths.

use crate::geometry::{BregmanGeometry, NegativeEntropySimplex};
use crate::glm::{EvalMode, GlmFamily, GlmProblem, SmoothnessGeometry};
use crate::linalg::{norm1, norm2, solve_spd};
use crate::optim::{soft_threshold, Objective};
use crate::{c, Error, Result, Scalar};
use ndarray::{Array1, Array2, ArrayView1};

/// One regularized solve: the minimizer, its objective and penalty values,
/// and convergence diagnostics (gradient norm for smooth penalties, simplex
/// KKT residual for the KL solver).
#[derive(Debug, Clone)]
pub struct RegularizedSolution<F: Scalar = f64> {
    pub lambda: F,
    pub theta_hat: Array1<F>,
    pub objective_value: F,
    pub penalty_value: F,
    pub converged: bool,
    pub iterations_used: usize,
    pub residual: F,
    /// Poisson only: the linear-predictor clamp was active at the solution.
    pub saturated: bool,
}

#[derive(Debug, Clone)]
pub struct SolveOptions<F: Scalar = f64> {
    pub tolerance: F,
    pub max_iter: usize,
    pub init: Option<Array1<F>>,
}

impl<F: Scalar> Default for SolveOptions<F> {
    fn default() -> Self {
        SolveOptions {
            tolerance: c::<F>(1e-9),
            max_iter: 50_000,
            init: None,
        }
    }
}

impl<F: Scalar> SolveOptions<F> {
    pub fn with_tolerance(mut self, tol: F) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_init(mut self, init: Array1<F>) -> Self {
        self.init = Some(init);
        self
    }
}

/// Minimize `loss(theta) + lambda ||theta - center||^2` by damped Newton with
/// the exact Hessian `(1/n) X^T A''(X theta) X + 2 lambda I` and backtracking
/// halving until the objective decreases. `center` defaults to the origin.
///
/// `lambda = 0` is accepted when the unregularized minimizer exists; the
/// solver may report non-convergence otherwise. Poisson linear predictors are
/// clamped inside the loop (see [`crate::glm::POISSON_CLAMP`]).
pub fn ridge_glm_solve<F: Scalar>(
    problem: &GlmProblem<F>,
    lambda: F,
    center: Option<ArrayView1<F>>,
    options: &SolveOptions<F>,
) -> Result<RegularizedSolution<F>> {
    if lambda < F::zero() {
        return Err(Error::invalid("lambda must be nonnegative"));
    }
    let d = problem.d();
    let n_inv = F::one() / c::<F>(problem.n() as f64);
    let center_vec = center
        .map(|v| v.to_owned())
        .unwrap_or_else(|| Array1::zeros(d));
    let mode = EvalMode::Clamped;
    let two = c::<F>(2.0);

    let penalty = |theta: &Array1<F>| -> F {
        let diff = theta - &center_vec;
        let r = norm2(diff.view());
        r * r
    };
    let objective = |theta: &Array1<F>| -> Result<F> {
        Ok(problem.loss_mode(theta.view(), mode)? + lambda * penalty(theta))
    };
    let gradient = |theta: &Array1<F>| -> Result<Array1<F>> {
        let g = problem.loss_gradient_mode(theta.view(), mode)?;
        Ok(Array1::from_shape_fn(d, |j| {
            g[j] + two * lambda * (theta[j] - center_vec[j])
        }))
    };

    let mut theta = options.init.clone().unwrap_or_else(|| center_vec.clone());
    let mut obj = objective(&theta)?;
    let mut converged = false;
    let mut iterations = 0usize;
    let mut grad_norm = F::infinity();

    // The objective is smooth and (for lambda > 0) strongly convex, so a
    // small Newton budget suffices regardless of max_iter.
    let newton_budget = options.max_iter.clamp(25, 500);
    for iter in 0..newton_budget {
        iterations = iter;
        let grad = gradient(&theta)?;
        grad_norm = norm2(grad.view());
        if grad_norm <= options.tolerance {
            converged = true;
            break;
        }
        // Hessian (1/n) X^T diag(A'') X + 2 lambda I.
        let w = problem.variance_weights(theta.view(), mode)?;
        let x = problem.design.matrix();
        let mut h = Array2::<F>::zeros((d, d));
        for a in 0..d {
            for b in a..d {
                let mut s = F::zero();
                for i in 0..problem.n() {
                    s = s + w[i] * x[[i, a]] * x[[i, b]];
                }
                let v = s * n_inv + if a == b { two * lambda } else { F::zero() };
                h[[a, b]] = v;
                h[[b, a]] = v;
            }
        }
        let neg_grad = grad.mapv(|v| -v);
        let direction = match solve_spd(&h, neg_grad.view()) {
            Ok(dir) => dir,
            Err(_) => {
                // Singular at lambda = 0 on rank-deficient designs: jitter.
                let jitter = c::<F>(1e-10) * (F::one() + h[[0, 0]].abs());
                for a in 0..d {
                    h[[a, a]] = h[[a, a]] + jitter;
                }
                solve_spd(&h, neg_grad.view())?
            }
        };
        let mut step = F::one();
        let mut accepted = false;
        for _ in 0..60 {
            let candidate = &theta + &direction.mapv(|v| v * step);
            let cand_obj = objective(&candidate)?;
            if cand_obj < obj {
                theta = candidate;
                obj = cand_obj;
                accepted = true;
                break;
            }
            step = step / two;
        }
        if !accepted {
            // Near the optimum the objective improvement drops below one ulp
            // while the gradient still contracts; accept the full step on a
            // gradient-norm decrease, otherwise stop.
            let candidate = &theta + &direction;
            let cand_grad = gradient(&candidate)?;
            if norm2(cand_grad.view()) < grad_norm {
                obj = objective(&candidate)?;
                theta = candidate;
            } else {
                break; // stalled; the residual reports how far off we are
            }
        }
    }

    let saturated = problem.family == GlmFamily::Poisson && {
        let xi = problem.design.matrix().dot(&theta);
        xi.iter().any(|&v| v >= c::<F>(crate::glm::POISSON_CLAMP))
    };

    Ok(RegularizedSolution {
        lambda,
        theta_hat: theta.clone(),
        objective_value: obj,
        penalty_value: penalty(&theta),
        converged,
        iterations_used: iterations,
        residual: grad_norm,
        saturated,
    })
}

/// Simplex KKT residual of `s = grad F(theta)`: the entries of `s` must
/// agree with the multiplier `c = <theta, s>` on the support. Coordinates
/// below the support threshold 1e-10 are excluded; at small lambda the exact
/// solution can carry coordinates far below what f64 represents, and their
/// multiplier relation is not meaningful at the numeric floor.
fn simplex_kkt_residual<F: Scalar>(theta: ArrayView1<F>, s: ArrayView1<F>) -> F {
    let mult = theta.dot(&s);
    let support_eps = c::<F>(1e-10);
    let mut r = F::zero();
    for (&ti, &si) in theta.iter().zip(s.iter()) {
        if ti > support_eps {
            r = r.max((si - mult).abs());
        }
    }
    r
}

/// Minimize `obj(theta) + lambda KL(theta, anchor)` over the simplex interior
/// by exponentiated gradient with step 1/(L + lambda), where `L` bounds the
/// Euclidean operator norm of the smooth part's Hessian on the simplex. Stops
/// when both the successive objective decrease and the KKT residual drop
/// below the tolerance.
pub fn kl_solve_objective<F: Scalar>(
    obj: &impl Objective<F>,
    smooth_bound: F,
    lambda: F,
    anchor: ArrayView1<F>,
    options: &SolveOptions<F>,
) -> Result<RegularizedSolution<F>> {
    if lambda <= F::zero() {
        return Err(Error::invalid("KL solver requires lambda > 0"));
    }
    if anchor.iter().any(|&z| z <= F::zero()) {
        return Err(Error::invalid("anchor must be strictly positive"));
    }
    let d = anchor.len();
    let geom = NegativeEntropySimplex;

    // One fused pass: total objective, its gradient, and the KL penalty.
    let evaluate = |theta: ArrayView1<F>| -> Result<(F, Array1<F>, F)> {
        let (v_obj, mut g) = obj.value_and_gradient(theta)?;
        let mut kl = F::zero();
        for i in 0..d {
            let ratio_ln = (theta[i] / anchor[i]).ln();
            kl = kl + theta[i] * ratio_ln;
            g[i] = g[i] + lambda * (ratio_ln + F::one());
        }
        Ok((v_obj + lambda * kl, g, kl))
    };

    let mut theta = match &options.init {
        Some(init) => {
            let mut t = init.clone();
            let floor = c::<F>(1e-300).max(F::min_positive_value());
            t.mapv_inplace(|v| v.max(floor));
            let s = t.sum();
            t.mapv(|v| v / s)
        }
        None => anchor.to_owned(),
    };
    let (mut value, mut grad, mut pen) = evaluate(theta.view())?;
    let mut eta = F::one() / (smooth_bound + lambda);
    let mut converged = false;
    let mut iterations = 0usize;
    let mut residual = F::infinity();
    let mut last_decrease = F::infinity();

    for iter in 0..options.max_iter {
        iterations = iter + 1;
        residual = simplex_kkt_residual(theta.view(), grad.view());
        if residual <= options.tolerance && last_decrease.abs() <= options.tolerance {
            converged = true;
            break;
        }

        let next = geom.step(theta.view(), grad.view(), eta)?;
        let (next_value, next_grad, next_pen) = evaluate(next.view())?;
        // Descent is guaranteed in exact arithmetic at this step size;
        // one-ulp upticks are rounding noise and are accepted. A genuine
        // increase means the supplied curvature bound was too small, so the
        // step is halved for good.
        let noise = c::<F>(1e-10) * (F::one() + value.abs());
        if next_value > value + noise {
            eta = eta / c::<F>(2.0);
            last_decrease = F::infinity();
            continue;
        }
        last_decrease = value - next_value;
        theta = next;
        value = next_value;
        grad = next_grad;
        pen = next_pen;
    }
    Ok(RegularizedSolution {
        lambda,
        theta_hat: theta,
        objective_value: value,
        penalty_value: pen,
        converged,
        iterations_used: iterations,
        residual,
        saturated: false,
    })
}

/// KL-regularized GLM estimator: `argmin over the simplex of loss(theta) +
/// lambda KL(theta, anchor)`.
pub fn kl_glm_solve<F: Scalar>(
    problem: &GlmProblem<F>,
    lambda: F,
    anchor: ArrayView1<F>,
    options: &SolveOptions<F>,
) -> Result<RegularizedSolution<F>> {
    if anchor.len() != problem.d() {
        return Err(Error::DimensionMismatch {
            context: "kl anchor length",
            expected: problem.d(),
            got: anchor.len(),
        });
    }
    // Euclidean curvature bound of the loss over the simplex.
    let op = crate::glm::spectral_terms(&problem.design)?.operator;
    let smooth_bound = match problem.family {
        GlmFamily::Gaussian => op,
        GlmFamily::Bernoulli => op / c::<F>(4.0),
        GlmFamily::Poisson => {
            let max_inf = (0..problem.n())
                .map(|i| {
                    problem
                        .design
                        .matrix()
                        .row(i)
                        .iter()
                        .fold(F::zero(), |m, &v| m.max(v.abs()))
                })
                .fold(F::zero(), |m, v| m.max(v));
            op * max_inf.exp()
        }
    };
    kl_solve_objective(
        &problem.objective_clamped(),
        smooth_bound,
        lambda,
        anchor,
        options,
    )
}

/// The elastic-net value `(1/2n) ||Y - X theta||^2 + lambda1 ||theta||_1 +
/// lambda2 ||theta||_2^2` for a Gaussian problem.
pub fn elastic_net_objective<F: Scalar>(
    problem: &GlmProblem<F>,
    theta: ArrayView1<F>,
    lambda1: F,
    lambda2: F,
) -> Result<F> {
    if problem.family != GlmFamily::Gaussian {
        return Err(Error::invalid("elastic net requires the Gaussian family"));
    }
    let r = &problem.design.matrix().dot(&theta) - &problem.response;
    let sq = r.iter().map(|&v| v * v).sum::<F>() / c::<F>(2.0 * problem.n() as f64);
    let l2 = norm2(theta);
    Ok(sq + lambda1 * norm1(theta) + lambda2 * l2 * l2)
}

/// Lasso for the Gaussian family by ISTA iterations run to the KKT
/// conditions: `|grad_j| <= lambda` on zero coordinates and
/// `grad_j + lambda sign(theta_j) = 0` on the support.
pub fn lasso_solve<F: Scalar>(
    problem: &GlmProblem<F>,
    lambda: F,
    options: &SolveOptions<F>,
) -> Result<RegularizedSolution<F>> {
    if problem.family != GlmFamily::Gaussian {
        return Err(Error::invalid("lasso requires the Gaussian family"));
    }
    if lambda < F::zero() {
        return Err(Error::invalid("lambda must be nonnegative"));
    }
    let d = problem.d();
    let l = problem
        .smoothness_constant(SmoothnessGeometry::Euclidean, None)?
        .max(c::<F>(1e-12));
    let eta = F::one() / l;

    let kkt = |theta: &Array1<F>, grad: &Array1<F>| -> F {
        let mut r = F::zero();
        for j in 0..d {
            let rj = if theta[j] == F::zero() {
                (grad[j].abs() - lambda).max(F::zero())
            } else {
                (grad[j] + lambda * theta[j].signum()).abs()
            };
            r = r.max(rj);
        }
        r
    };

    let mut theta = options.init.clone().unwrap_or_else(|| Array1::zeros(d));
    let mut converged = false;
    let mut iterations = 0usize;
    let mut residual = F::infinity();
    for iter in 0..options.max_iter {
        iterations = iter + 1;
        let grad = problem.loss_gradient(theta.view())?;
        residual = kkt(&theta, &grad);
        if residual <= options.tolerance {
            converged = true;
            break;
        }
        let stepped = Array1::from_shape_fn(d, |j| theta[j] - eta * grad[j]);
        theta = soft_threshold(stepped.view(), eta * lambda);
    }

    let pen = norm1(theta.view());
    let obj = problem.loss(theta.view())? + lambda * pen;
    Ok(RegularizedSolution {
        lambda,
        theta_hat: theta,
        objective_value: obj,
        penalty_value: pen,
        converged,
        iterations_used: iterations,
        residual,
        saturated: false,
    })
}

/// Log-spaced lambda grid specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaGrid<F: Scalar = f64> {
    pub min: F,
    pub max: F,
    pub count: usize,
}

impl<F: Scalar> LambdaGrid<F> {
    pub fn new(min: F, max: F, count: usize) -> Result<Self> {
        if !(min > F::zero()) || max < min || count == 0 {
            return Err(Error::invalid("grid needs 0 < min <= max and count >= 1"));
        }
        Ok(LambdaGrid { min, max, count })
    }

    /// The experiments' default: 500 values log-spaced on [1e-4, 1e4].
    pub fn default_experiment() -> Self {
        LambdaGrid {
            min: c::<F>(1e-4),
            max: c::<F>(1e4),
            count: 500,
        }
    }

    /// Parse the `"min:max:count"` wire format.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("grid `{s}` is not min:max:count")));
        }
        let min: f64 = parts[0]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad grid min `{}`", parts[0])))?;
        let max: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad grid max `{}`", parts[1])))?;
        let count: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad grid count `{}`", parts[2])))?;
        LambdaGrid::new(c::<F>(min), c::<F>(max), count)
    }

    /// Ascending lambda values; a single-point grid is just the minimum.
    pub fn values(&self) -> Vec<F> {
        if self.count == 1 {
            return vec![self.min];
        }
        let lmin = self.min.ln();
        let lmax = self.max.ln();
        let step = (lmax - lmin) / c::<F>((self.count - 1) as f64);
        (0..self.count)
            .map(|k| (lmin + step * c::<F>(k as f64)).exp())
            .collect()
    }
}

/// Which solver a lambda path runs.
#[derive(Debug, Clone)]
pub enum PathSolver<F: Scalar = f64> {
    Ridge,
    Kl { anchor: Array1<F> },
    Lasso,
}

/// Per-lambda max-iteration override, matched by inclusive lambda range.
pub type MaxIterOverride<F> = (F, F, usize);

/// Solve a whole lambda path, warm-starting each point from the previous
/// solution in decreasing-lambda order. Individual non-convergence is
/// recorded in the solution's flag and the path continues. Returned in
/// ascending lambda order.
pub fn lambda_path_solve<F: Scalar>(
    problem: &GlmProblem<F>,
    solver: &PathSolver<F>,
    grid: &LambdaGrid<F>,
    options: &SolveOptions<F>,
    overrides: &[MaxIterOverride<F>],
) -> Result<Vec<RegularizedSolution<F>>> {
    let mut lambdas = grid.values();
    lambdas.reverse(); // largest first: solutions start near the anchor
    let mut out: Vec<RegularizedSolution<F>> = Vec::with_capacity(lambdas.len());
    let mut warm: Option<Array1<F>> = None;
    for &lambda in &lambdas {
        let mut opts = options.clone();
        if let Some(init) = &warm {
            opts.init = Some(init.clone());
        }
        for &(lo, hi, max_iter) in overrides {
            if lambda >= lo && lambda <= hi {
                opts.max_iter = max_iter;
            }
        }
        let solution = match solver {
            PathSolver::Ridge => ridge_glm_solve(problem, lambda, None, &opts)?,
            PathSolver::Kl { anchor } => kl_glm_solve(problem, lambda, anchor.view(), &opts)?,
            PathSolver::Lasso => lasso_solve(problem, lambda, &opts)?,
        };
        warm = Some(solution.theta_hat.clone());
        out.push(solution);
    }
    out.reverse();
    Ok(out)
}

/// Check `lambda -> loss(theta_lambda) + lambda * penalty(theta_lambda)`
/// non-decreasing along an ascending-lambda path.
pub fn regularized_objective_monotone<F: Scalar>(
    path: &[RegularizedSolution<F>],
    tol: F,
) -> bool {
    path.windows(2)
        .all(|w| w[1].objective_value >= w[0].objective_value - tol)
}
