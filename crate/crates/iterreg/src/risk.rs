//! Statistical risk-bound machinery: the spectral noise term, target
//! regularization coefficients and stopping times, per-family sub-Gaussian
//! constants, deterministic bound right-hand sides, and Monte Carlo coverage
//! validation of the high-probability claims.

use crate::datagen::resample_response;
use crate::geometry::project_ball;
use crate::glm::{Design, EvalMode, GlmFamily, GlmProblem, SmoothnessGeometry, SpectralTerms};
use crate::linalg::{norm2, solve_spd};
use crate::optim::{gd_run, StepSchedule};
use crate::{c, Error, Result, Scalar};
use ndarray::Array1;

/// Which high-probability bound a certificate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Ridge,
    Gd,
    Kl,
    Egd,
}

impl BoundKind {
    pub fn name(&self) -> &'static str {
        match self {
            BoundKind::Ridge => "ridge",
            BoundKind::Gd => "gd",
            BoundKind::Kl => "kl",
            BoundKind::Egd => "egd",
        }
    }
}

/// Spectral noise term
/// `C_sG = (sigma^2/n) [tr(S) + 2 ||S||_F sqrt(delta) + 2 ||S||_op delta]`,
/// the high-probability bound on `||X^T eps / n||_2^2`.
pub fn spectral_noise_term<F: Scalar>(
    spectral: &SpectralTerms<F>,
    sigma: F,
    n: usize,
    delta: F,
) -> F {
    let nf = c::<F>(n as f64);
    let two = c::<F>(2.0);
    sigma * sigma / nf
        * (spectral.trace + two * spectral.frobenius * delta.sqrt() + two * spectral.operator * delta)
}

/// Target regularization coefficient for ridge:
/// `sigma / (2 b sqrt(n)) * sqrt(tr + 2 ||.||_F sqrt(delta) + 2 ||.||_op delta)`,
/// equivalently `sqrt(C_sG) / (2 b)`.
pub fn ridge_lambda_star<F: Scalar>(
    spectral: &SpectralTerms<F>,
    sigma: F,
    n: usize,
    delta: F,
    b: F,
) -> F {
    spectral_noise_term(spectral, sigma, n, delta).sqrt() / (c::<F>(2.0) * b)
}

/// Gradient-descent target coefficient, exactly twice the ridge value.
pub fn gd_lambda_star<F: Scalar>(
    spectral: &SpectralTerms<F>,
    sigma: F,
    n: usize,
    delta: F,
    b: F,
) -> F {
    spectral_noise_term(spectral, sigma, n, delta).sqrt() / b
}

/// Column-norm factor `C_{n,d} = max_j ||X_.j||_2 / sqrt(n)`; the simplex
/// bounds hold as printed when this is at most one and pick up the factor
/// otherwise.
pub fn column_norm_factor<F: Scalar>(design: &Design<F>) -> F {
    design.max_column_norm() / c::<F>(design.n() as f64).sqrt()
}

fn effective_column_factor<F: Scalar>(factor: F) -> F {
    factor.max(F::one())
}

/// KL target coefficient `sigma C sqrt((log(2d) + delta) / (n b))`, where C
/// is the column-norm relaxation factor (one when the column-norm condition
/// holds).
pub fn kl_lambda_star<F: Scalar>(sigma: F, n: usize, d: usize, delta: F, b: F, factor: F) -> F {
    let log2d = c::<F>(2.0 * d as f64).ln();
    sigma * effective_column_factor(factor) * ((log2d + delta) / (c::<F>(n as f64) * b)).sqrt()
}

/// EGD target coefficient; the same formula as the KL one.
pub fn egd_lambda_star<F: Scalar>(sigma: F, n: usize, d: usize, delta: F, b: F, factor: F) -> F {
    kl_lambda_star(sigma, n, d, delta, b, factor)
}

/// Per-family sub-Gaussian scale. Gaussian: the largest user-supplied
/// noise scale. Bernoulli: 1/2. Poisson (requires the mean vector and
/// n >= 3): `(2 ||mu||_inf + 2/3) log n + ||mu||_inf / 2`.
pub fn family_sigma<F: Scalar>(
    family: GlmFamily,
    mean_truth: Option<&Array1<F>>,
    gaussian_sigmas: Option<&Array1<F>>,
    n: usize,
) -> Result<F> {
    match family {
        GlmFamily::Gaussian => {
            let sigmas = gaussian_sigmas
                .ok_or_else(|| Error::invalid("Gaussian sigma values must be supplied"))?;
            Ok(sigmas.iter().fold(F::zero(), |m, &v| m.max(v.abs())))
        }
        GlmFamily::Bernoulli => Ok(c::<F>(0.5)),
        GlmFamily::Poisson => {
            if n < 3 {
                return Err(Error::invalid("Poisson sigma requires n >= 3"));
            }
            let mu = mean_truth.ok_or(Error::MissingMeanTruth)?;
            let mu_inf = mu.iter().fold(F::zero(), |m, &v| m.max(v.abs()));
            let logn = c::<F>(n as f64).ln();
            Ok((c::<F>(2.0) * mu_inf + c::<F>(2.0 / 3.0)) * logn + mu_inf / c::<F>(2.0))
        }
    }
}

/// Truncation level `D = 4 (||mu||_inf + 1/3) log n` for the Poisson tail
/// event, whose probability is at most 1/n.
pub fn poisson_truncation_level<F: Scalar>(mu_inf: F, n: usize) -> F {
    c::<F>(4.0) * (mu_inf + c::<F>(1.0 / 3.0)) * c::<F>(n as f64).ln()
}

/// Earliest iteration whose effective coefficient `1/(eta t)` is at most
/// `lambda_star`: `T = ceil(1 / (eta lambda_star))`. The second value says
/// whether `1 / (eta lambda_star)` was integral (within 1e-12), in which case
/// no discretization error accrues.
pub fn stopping_time<F: Scalar>(lambda_star: F, eta: F) -> Result<(usize, bool)> {
    if !(eta > F::zero()) || !(lambda_star > F::zero()) {
        return Err(Error::invalid("stopping time needs eta > 0 and lambda > 0"));
    }
    let raw = F::one() / (eta * lambda_star);
    let rounded = raw.round();
    let integral = (raw - rounded).abs() <= c::<F>(1e-12) * raw.max(F::one());
    let t = if integral {
        rounded.to_f64().unwrap_or(1.0) as usize
    } else {
        raw.ceil().to_f64().unwrap_or(1.0) as usize
    };
    Ok((t.max(1), integral))
}

/// Discretization error added when `1/(eta lambda*)` is not integral:
/// `eta C_sG / 2` for gradient descent and
/// `eta^2 sigma^3 (log(2d) + delta)^{3/2} / (n^{3/2} b^{1/2})` for EGD.
pub fn discretization_extra<F: Scalar>(
    kind: BoundKind,
    spectral: Option<&SpectralTerms<F>>,
    sigma: F,
    n: usize,
    d: usize,
    delta: F,
    b: F,
    eta: F,
) -> Result<F> {
    match kind {
        BoundKind::Gd => {
            let s = spectral.ok_or_else(|| Error::invalid("gd extra needs spectral terms"))?;
            Ok(eta * spectral_noise_term(s, sigma, n, delta) / c::<F>(2.0))
        }
        BoundKind::Egd => {
            let log2d = c::<F>(2.0 * d as f64).ln();
            let nf = c::<F>(n as f64);
            Ok(eta * eta * sigma.powi(3) * (log2d + delta).powf(c::<F>(1.5))
                / (nf.powf(c::<F>(1.5)) * b.sqrt()))
        }
        BoundKind::Ridge | BoundKind::Kl => Ok(F::zero()),
    }
}

/// Inputs a deterministic bound right-hand side depends on.
#[derive(Debug, Clone)]
pub struct BoundInputs<F: Scalar = f64> {
    pub kind: BoundKind,
    pub sigma: F,
    pub n: usize,
    pub d: usize,
    pub delta: F,
    pub b: F,
    pub spectral: Option<SpectralTerms<F>>,
    pub column_factor: F,
}

impl<F: Scalar> BoundInputs<F> {
    /// The high-probability noise level the bound budgets for:
    /// `C_sG` (Euclidean cases) or `2 (sigma C)^2 (log(2d) + delta) / n`
    /// (simplex cases, the bound on `||X^T eps / n||_inf^2`).
    pub fn noise_term(&self) -> Result<F> {
        match self.kind {
            BoundKind::Ridge | BoundKind::Gd => {
                let s = self
                    .spectral
                    .as_ref()
                    .ok_or_else(|| Error::invalid("bound needs spectral terms"))?;
                Ok(spectral_noise_term(s, self.sigma, self.n, self.delta))
            }
            BoundKind::Kl | BoundKind::Egd => {
                let log2d = c::<F>(2.0 * self.d as f64).ln();
                let sc = self.sigma * effective_column_factor(self.column_factor);
                Ok(c::<F>(2.0) * sc * sc * (log2d + self.delta) / c::<F>(self.n as f64))
            }
        }
    }

    pub fn lambda_star(&self) -> Result<F> {
        match self.kind {
            BoundKind::Ridge => Ok(self.noise_term()?.sqrt() / (c::<F>(2.0) * self.b)),
            BoundKind::Gd => Ok(self.noise_term()?.sqrt() / self.b),
            BoundKind::Kl | BoundKind::Egd => Ok(kl_lambda_star(
                self.sigma,
                self.n,
                self.d,
                self.delta,
                self.b,
                self.column_factor,
            )),
        }
    }

    /// Deterministic right-hand side as a function of lambda:
    /// ridge `(1/2L)C + 2Lb^2`, gd `(1/2L)C + (L/2)b^2`,
    /// kl `(1/L)A + 2Lb`, egd `(1/2L)A + Lb`, writing L for lambda and
    /// C / A for the Euclidean / simplex noise terms.
    pub fn bound_at(&self, lambda: F) -> Result<F> {
        if !(lambda > F::zero()) {
            return Err(Error::invalid("bound_at needs lambda > 0"));
        }
        let two = c::<F>(2.0);
        let noise = self.noise_term()?;
        Ok(match self.kind {
            BoundKind::Ridge => noise / (two * lambda) + two * lambda * self.b * self.b,
            BoundKind::Gd => noise / (two * lambda) + lambda / two * self.b * self.b,
            BoundKind::Kl => noise / lambda + two * lambda * self.b,
            BoundKind::Egd => noise / (two * lambda) + lambda * self.b,
        })
    }

    /// The bound at the target coefficient: `2 b sqrt(C_sG)` (ridge),
    /// `b sqrt(C_sG)` (gd), `4 sigma C sqrt(b (log(2d) + delta) / n)` (kl),
    /// half that (egd).
    pub fn optimal_bound(&self) -> Result<F> {
        self.bound_at(self.lambda_star()?)
    }
}

/// Deterministic bound right-hand side for a kind at a given lambda, or at
/// the target coefficient when `lambda` is `None`.
pub fn bound_rhs<F: Scalar>(inputs: &BoundInputs<F>, lambda: Option<F>) -> Result<F> {
    match lambda {
        Some(l) => inputs.bound_at(l),
        None => inputs.optimal_bound(),
    }
}

/// A computed high-probability bound at the target coefficient, including
/// the stopping time and discretization extra for the iterative kinds.
#[derive(Debug, Clone)]
pub struct RiskCertificate<F: Scalar = f64> {
    pub kind: BoundKind,
    pub sigma: F,
    pub delta: F,
    pub b: F,
    pub spectral: Option<SpectralTerms<F>>,
    pub column_factor: Option<F>,
    pub lambda_star: F,
    pub eta: Option<F>,
    pub stopping_time: Option<usize>,
    pub bound_value: F,
    pub discretization_extra: F,
}

/// Assemble a certificate. `eta` is required for the iterative kinds (gd,
/// egd), where the stopping time and any discretization extra are filled in.
pub fn certificate<F: Scalar>(inputs: &BoundInputs<F>, eta: Option<F>) -> Result<RiskCertificate<F>> {
    let lambda_star = inputs.lambda_star()?;
    let base = inputs.optimal_bound()?;
    let iterative = matches!(inputs.kind, BoundKind::Gd | BoundKind::Egd);
    let (t, extra) = if iterative {
        let eta = eta.ok_or_else(|| Error::invalid("iterative bound needs eta"))?;
        let (t, integral) = stopping_time(lambda_star, eta)?;
        let extra = if integral {
            F::zero()
        } else {
            discretization_extra(
                inputs.kind,
                inputs.spectral.as_ref(),
                inputs.sigma,
                inputs.n,
                inputs.d,
                inputs.delta,
                inputs.b,
                eta,
            )?
        };
        (Some(t), extra)
    } else {
        (None, F::zero())
    };
    Ok(RiskCertificate {
        kind: inputs.kind,
        sigma: inputs.sigma,
        delta: inputs.delta,
        b: inputs.b,
        spectral: inputs.spectral,
        column_factor: Some(inputs.column_factor),
        lambda_star,
        eta,
        stopping_time: t,
        bound_value: base + extra,
        discretization_extra: extra,
    })
}

/// Default confidence parameter, `delta = log n`.
pub fn default_delta<F: Scalar>(n: usize) -> F {
    c::<F>(n as f64).ln()
}

/// Outcome of a coverage experiment: the empirical violation rate of a
/// high-probability claim against its target level, passing when the rate is
/// within three binomial standard errors of the target.
#[derive(Debug, Clone)]
pub struct CoverageReport {
    pub check: &'static str,
    pub replicates: usize,
    pub violations: usize,
    pub rate: f64,
    pub target: f64,
    pub standard_error: f64,
}

impl CoverageReport {
    fn new(check: &'static str, replicates: usize, violations: usize, target: f64) -> Self {
        let rate = violations as f64 / replicates as f64;
        let standard_error = (target * (1.0 - target) / replicates as f64).sqrt();
        CoverageReport {
            check,
            replicates,
            violations,
            rate,
            target,
            standard_error,
        }
    }

    pub fn passes(&self) -> bool {
        self.rate <= self.target + 3.0 * self.standard_error
    }
}

/// Which high-probability claim a Monte Carlo run validates.
#[derive(Debug, Clone, Copy)]
pub enum McCheck {
    /// Ridge excess-risk bound at the target lambda.
    RidgeBound,
    /// Gradient-descent excess-risk bound at the stopping time; `eta` is the
    /// constant step size (use 1/L when in doubt).
    GdBound { eta: f64 },
    /// The sub-Gaussian maximal inequality
    /// `||X^T eps||_inf <= sigma max_j ||X_.j|| sqrt(2 (log(2d) + delta))`.
    InftyNorm,
    /// The Poisson truncation event `max_i eps_i >= D` has probability at
    /// most 1/n.
    PoissonTruncation,
}

/// Best prediction risk over the centered ball of radius b, via projected
/// gradient descent on the (deterministic) risk plus a closed-form candidate
/// at the unconstrained risk minimizer. This stands in for the feasible-set
/// infimum in the coverage checks; underestimating the infimum only makes
/// the check harder.
pub fn min_risk_on_ball(problem: &GlmProblem<f64>, b: f64) -> Result<f64> {
    let d = problem.d();
    let l = match problem.family {
        GlmFamily::Poisson => problem.smoothness_constant(SmoothnessGeometry::Euclidean, Some(b))?,
        _ => problem.smoothness_constant(SmoothnessGeometry::Euclidean, None)?,
    };
    let eta = 1.0 / l.max(1e-12);
    let mut theta = Array1::zeros(d);
    let mut best = problem.prediction_risk_mode(theta.view(), EvalMode::Clamped)?;
    for _ in 0..200_000 {
        let g = problem.risk_gradient(theta.view(), EvalMode::Clamped)?;
        let stepped = Array1::from_shape_fn(d, |j| theta[j] - eta * g[j]);
        let next = project_ball(stepped.view(), b);
        let moved = norm2((&next - &theta).view());
        theta = next;
        if moved < 1e-13 {
            break;
        }
    }
    best = best.min(problem.prediction_risk_mode(theta.view(), EvalMode::Clamped)?);

    // Gaussian risk has a closed-form unconstrained minimizer; project it.
    if problem.family == GlmFamily::Gaussian {
        if let Some(mu) = &problem.mean_truth {
            let n = problem.n() as f64;
            let mut a = problem.design.matrix().t().dot(problem.design.matrix()) / n;
            for i in 0..problem.d() {
                a[[i, i]] += 1e-12;
            }
            let rhs = problem.design.matrix().t().dot(mu) / n;
            if let Ok(sol) = solve_spd(&a, rhs.view()) {
                let projected = project_ball(sol.view(), b);
                best = best.min(problem.prediction_risk(projected.view())?);
            }
        }
    }
    Ok(best)
}

/// Monte Carlo validation of a high-probability claim on a fixed design with
/// known mean vector. Each replicate draws a fresh response from its own
/// RNG stream. `b` is the reference radius for the excess-risk checks and
/// `gaussian_sigma` the Gaussian noise scale.
pub fn monte_carlo_validate(
    problem: &GlmProblem<f64>,
    check: McCheck,
    b: f64,
    gaussian_sigma: f64,
    replicates: usize,
    delta: f64,
    master_seed: u64,
) -> Result<CoverageReport> {
    if replicates == 0 {
        return Err(Error::invalid("replicates must be positive"));
    }
    let mu = problem
        .mean_truth
        .as_ref()
        .ok_or(Error::MissingMeanTruth)?
        .clone();
    let n = problem.n();
    let d = problem.d();
    let family = problem.family;
    let sigma = match family {
        GlmFamily::Gaussian => gaussian_sigma,
        _ => family_sigma::<f64>(family, Some(&mu), None, n)?,
    };

    match check {
        McCheck::InftyNorm => {
            let threshold = sigma
                * problem.design.max_column_norm()
                * (2.0 * ((2.0 * d as f64).ln() + delta)).sqrt();
            let mut violations = 0usize;
            for r in 0..replicates {
                let y = resample_response(family, &mu, gaussian_sigma, master_seed, r as u64);
                let eps = &y - &mu;
                let v = problem.design.matrix().t().dot(&eps);
                let inf = v.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
                if inf > threshold {
                    violations += 1;
                }
            }
            Ok(CoverageReport::new(
                "infty_norm",
                replicates,
                violations,
                (-delta).exp(),
            ))
        }
        McCheck::PoissonTruncation => {
            if family != GlmFamily::Poisson {
                return Err(Error::invalid("truncation check needs a Poisson problem"));
            }
            let mu_inf = mu.iter().fold(0.0f64, |m, &v| m.max(v));
            let level = poisson_truncation_level(mu_inf, n);
            let mut violations = 0usize;
            for r in 0..replicates {
                let y = resample_response(family, &mu, 0.0, master_seed, r as u64);
                let worst = (0..n).map(|i| y[i] - mu[i]).fold(f64::NEG_INFINITY, f64::max);
                if worst >= level {
                    violations += 1;
                }
            }
            Ok(CoverageReport::new(
                "poisson_truncation",
                replicates,
                violations,
                1.0 / n as f64,
            ))
        }
        McCheck::RidgeBound | McCheck::GdBound { .. } => {
            let spectral = crate::glm::spectral_terms(&problem.design)?;
            let kind = match check {
                McCheck::RidgeBound => BoundKind::Ridge,
                _ => BoundKind::Gd,
            };
            let inputs = BoundInputs {
                kind,
                sigma,
                n,
                d,
                delta,
                b,
                spectral: Some(spectral),
                column_factor: column_norm_factor(&problem.design),
            };
            let eta = match check {
                McCheck::GdBound { eta } => Some(eta),
                _ => None,
            };
            let cert = certificate(&inputs, eta)?;
            let inf_risk = min_risk_on_ball(problem, b)?;

            let mut violations = 0usize;
            for r in 0..replicates {
                let y = resample_response(family, &mu, gaussian_sigma, master_seed, r as u64);
                let fresh = GlmProblem::new(
                    problem.design.clone(),
                    y,
                    family,
                    Some(mu.clone()),
                )?;
                let estimate = match check {
                    McCheck::RidgeBound => {
                        let sol = crate::explicit::ridge_glm_solve(
                            &fresh,
                            cert.lambda_star,
                            None,
                            &crate::explicit::SolveOptions::default().with_tolerance(1e-9),
                        )?;
                        sol.theta_hat
                    }
                    McCheck::GdBound { eta } => {
                        let t = cert.stopping_time.expect("gd certificate has T");
                        let sched = StepSchedule::constant(eta, t)?;
                        let trace =
                            gd_run(&fresh.objective_clamped(), Array1::zeros(d).view(), &sched, None)?;
                        trace.final_record().theta.clone()
                    }
                    _ => unreachable!(),
                };
                let risk = fresh.prediction_risk_mode(estimate.view(), EvalMode::Clamped)?;
                if risk - inf_risk > cert.bound_value + 1e-12 {
                    violations += 1;
                }
            }
            // The Poisson guarantee carries the extra 1/n truncation slack.
            let target = (-delta).exp()
                + if family == GlmFamily::Poisson {
                    1.0 / n as f64
                } else {
                    0.0
                };
            Ok(CoverageReport::new(
                match kind {
                    BoundKind::Ridge => "ridge_bound",
                    _ => "gd_bound",
                },
                replicates,
                violations,
                target,
            ))
        }
    }
}
