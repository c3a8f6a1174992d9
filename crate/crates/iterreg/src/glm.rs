//! Generalized linear model problems: design, response, exponential-family
//! cumulants, losses, gradients, smoothness constants, and spectral
//! functionals of the empirical covariance.

use crate::linalg::{norm2, operator_norm_psd};
use crate::{c, Error, Result, Scalar};
use ndarray::{Array1, Array2, ArrayView1};

/// Linear predictors above this raise [`Error::Saturation`] when a Poisson
/// cumulant is evaluated strictly.
pub const POISSON_SATURATION: f64 = 700.0;
/// Clamp applied to Poisson linear predictors inside projected-domain solver
/// loops, where a finite surrogate is preferable to aborting.
pub const POISSON_CLAMP: f64 = 30.0;

/// Evaluation mode for Poisson cumulants.
///
/// `Strict` reports saturation (predictor above 700) as an error with the
/// offending sample index; `Clamped` caps predictors at 30 first, which keeps
/// solver internals finite without ever overflowing silently.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Strict,
    Clamped,
}

/// Exponential family choice; carries the cumulant A, mean map A', and
/// variance map A''.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlmFamily {
    Gaussian,
    Bernoulli,
    Poisson,
}

impl GlmFamily {
    /// Cumulant function A(xi).
    pub fn cumulant<F: Scalar>(self, xi: F) -> F {
        match self {
            GlmFamily::Gaussian => xi * xi / c::<F>(2.0),
            // Stable softplus: log(1 + e^xi) = max(xi, 0) + log1p(e^{-|xi|}).
            GlmFamily::Bernoulli => xi.max(F::zero()) + (-xi.abs()).exp().ln_1p(),
            GlmFamily::Poisson => xi.exp(),
        }
    }

    /// Mean map A'(xi).
    pub fn mean<F: Scalar>(self, xi: F) -> F {
        match self {
            GlmFamily::Gaussian => xi,
            GlmFamily::Bernoulli => F::one() / (F::one() + (-xi).exp()),
            GlmFamily::Poisson => xi.exp(),
        }
    }

    /// Variance map A''(xi).
    pub fn variance<F: Scalar>(self, xi: F) -> F {
        match self {
            GlmFamily::Gaussian => F::one(),
            GlmFamily::Bernoulli => {
                let p = self.mean(xi);
                p * (F::one() - p)
            }
            GlmFamily::Poisson => xi.exp(),
        }
    }

    fn check_response<F: Scalar>(self, y: ArrayView1<F>) -> Result<()> {
        for (i, &yi) in y.iter().enumerate() {
            if !yi.is_finite() {
                return Err(Error::NonFinite("response"));
            }
            match self {
                GlmFamily::Bernoulli => {
                    if yi < F::zero() || yi > F::one() {
                        return Err(Error::invalid(format!(
                            "Bernoulli response out of [0,1] at sample {i}"
                        )));
                    }
                }
                GlmFamily::Poisson => {
                    if yi < F::zero() {
                        return Err(Error::invalid(format!(
                            "negative Poisson response at sample {i}"
                        )));
                    }
                }
                GlmFamily::Gaussian => {}
            }
        }
        Ok(())
    }
}

/// Fixed design matrix with cached column norms.
#[derive(Debug, Clone)]
pub struct Design<F: Scalar = f64> {
    x: Array2<F>,
    column_norms: Array1<F>,
}

impl<F: Scalar> Design<F> {
    pub fn new(x: Array2<F>) -> Result<Self> {
        let (n, d) = (x.nrows(), x.ncols());
        if n == 0 || d == 0 {
            return Err(Error::invalid("design must have n >= 1 and d >= 1"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("design entry"));
        }
        let column_norms = Array1::from_shape_fn(d, |j| norm2(x.column(j)));
        Ok(Design { x, column_norms })
    }

    pub fn matrix(&self) -> &Array2<F> {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    /// Euclidean norms of the columns X_{.j}, cached at construction.
    pub fn column_norms(&self) -> &Array1<F> {
        &self.column_norms
    }

    /// max_j ||X_{.j}||_2.
    pub fn max_column_norm(&self) -> F {
        self.column_norms
            .iter()
            .fold(F::zero(), |m, &v| m.max(v))
    }

    /// max_i ||x_i||_2 over rows.
    pub fn max_row_norm(&self) -> F {
        (0..self.n())
            .map(|i| norm2(self.x.row(i)))
            .fold(F::zero(), |m, v| m.max(v))
    }

    /// Empirical covariance X^T X / n.
    pub fn empirical_covariance(&self) -> Array2<F> {
        let n_inv = F::one() / c::<F>(self.n() as f64);
        self.x.t().dot(&self.x).mapv(|v| v * n_inv)
    }
}

/// Spectral functionals of the empirical covariance `X^T X / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralTerms<F: Scalar = f64> {
    pub trace: F,
    pub frobenius: F,
    pub operator: F,
}

/// Trace, Frobenius, and operator norm of `X^T X / n`. Trace and Frobenius
/// are exact; the operator norm runs power iteration to relative tolerance
/// 1e-10 with a deterministic start and a 10 000-iteration cap.
pub fn spectral_terms<F: Scalar>(design: &Design<F>) -> Result<SpectralTerms<F>> {
    let sigma = design.empirical_covariance();
    let trace = (0..sigma.nrows()).map(|i| sigma[[i, i]]).sum();
    let frobenius = sigma.iter().map(|&v| v * v).sum::<F>().sqrt();
    let operator = operator_norm_psd(sigma.view(), c::<F>(1e-10), 10_000)?;
    Ok(SpectralTerms {
        trace,
        frobenius,
        operator,
    })
}

/// Geometry in which a smoothness constant is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothnessGeometry {
    /// L-smoothness with respect to the Euclidean norm.
    Euclidean,
    /// L-smoothness with respect to the l1 norm on the probability simplex.
    L1Simplex,
}

/// A GLM problem: fixed design, response (already mapped through the
/// sufficient statistic when one is used), family, and the true mean vector
/// when known (simulation only).
///
/// Immutable after construction; operations are pure functions of their
/// arguments and safe to evaluate concurrently.
#[derive(Debug, Clone)]
pub struct GlmProblem<F: Scalar = f64> {
    pub design: Design<F>,
    pub response: Array1<F>,
    pub family: GlmFamily,
    pub mean_truth: Option<Array1<F>>,
}

impl<F: Scalar> GlmProblem<F> {
    pub fn new(
        design: Design<F>,
        response: Array1<F>,
        family: GlmFamily,
        mean_truth: Option<Array1<F>>,
    ) -> Result<Self> {
        if response.len() != design.n() {
            return Err(Error::DimensionMismatch {
                context: "response length",
                expected: design.n(),
                got: response.len(),
            });
        }
        family.check_response(response.view())?;
        if let Some(mu) = &mean_truth {
            if mu.len() != design.n() {
                return Err(Error::DimensionMismatch {
                    context: "mean_truth length",
                    expected: design.n(),
                    got: mu.len(),
                });
            }
            if mu.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("mean_truth entry"));
            }
        }
        Ok(GlmProblem {
            design,
            response,
            family,
            mean_truth,
        })
    }

    /// Replace the stored response by `s(y)` componentwise, for exponential
    /// families with a non-identity sufficient statistic. All downstream
    /// formulas are unchanged because only `S(y)` ever enters them.
    pub fn map_response(mut self, s: impl Fn(F) -> F) -> Result<Self> {
        self.response.mapv_inplace(s);
        self.family.check_response(self.response.view())?;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.design.n()
    }

    pub fn d(&self) -> usize {
        self.design.d()
    }

    fn check_theta(&self, theta: ArrayView1<F>) -> Result<()> {
        if theta.len() != self.d() {
            return Err(Error::DimensionMismatch {
                context: "theta length",
                expected: self.d(),
                got: theta.len(),
            });
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("theta entry"));
        }
        Ok(())
    }

    /// Linear predictor X theta with the family's saturation policy applied.
    fn predictor(&self, theta: ArrayView1<F>, mode: EvalMode) -> Result<Array1<F>> {
        self.check_theta(theta)?;
        let mut xi = self.design.matrix().dot(&theta);
        if self.family == GlmFamily::Poisson {
            match mode {
                EvalMode::Strict => {
                    for (i, &v) in xi.iter().enumerate() {
                        if v > c::<F>(POISSON_SATURATION) {
                            return Err(Error::Saturation {
                                index: i,
                                value: v.to_f64().unwrap_or(f64::INFINITY),
                            });
                        }
                    }
                }
                EvalMode::Clamped => {
                    let cap = c::<F>(POISSON_CLAMP);
                    xi.mapv_inplace(|v| v.min(cap));
                }
            }
        }
        Ok(xi)
    }

    /// Negative log-likelihood loss (1/n)(-Y^T X theta + sum_i A((X theta)_i)).
    pub fn loss(&self, theta: ArrayView1<F>) -> Result<F> {
        self.loss_mode(theta, EvalMode::Strict)
    }

    pub fn loss_mode(&self, theta: ArrayView1<F>, mode: EvalMode) -> Result<F> {
        let xi = self.predictor(theta, mode)?;
        let n_inv = F::one() / c::<F>(self.n() as f64);
        let fit: F = self.response.dot(&xi);
        let cum: F = xi.iter().map(|&v| self.family.cumulant(v)).sum();
        let value = n_inv * (cum - fit);
        if !value.is_finite() {
            return Err(Error::NonFinite("loss value"));
        }
        Ok(value)
    }

    /// Gradient -(1/n) X^T (Y - A'(X theta)).
    pub fn loss_gradient(&self, theta: ArrayView1<F>) -> Result<Array1<F>> {
        self.loss_gradient_mode(theta, EvalMode::Strict)
    }

    pub fn loss_gradient_mode(&self, theta: ArrayView1<F>, mode: EvalMode) -> Result<Array1<F>> {
        let xi = self.predictor(theta, mode)?;
        let n_inv = F::one() / c::<F>(self.n() as f64);
        let resid = Array1::from_shape_fn(self.n(), |i| self.family.mean(xi[i]) - self.response[i]);
        let grad = self.design.matrix().t().dot(&resid).mapv(|v| v * n_inv);
        if grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("loss gradient"));
        }
        Ok(grad)
    }

    /// Loss and gradient from a single linear-predictor pass.
    pub fn loss_value_gradient_mode(
        &self,
        theta: ArrayView1<F>,
        mode: EvalMode,
    ) -> Result<(F, Array1<F>)> {
        let xi = self.predictor(theta, mode)?;
        let n_inv = F::one() / c::<F>(self.n() as f64);
        let mut cum = F::zero();
        let mut fit = F::zero();
        let mut resid = Array1::<F>::zeros(self.n());
        for i in 0..self.n() {
            cum = cum + self.family.cumulant(xi[i]);
            fit = fit + self.response[i] * xi[i];
            resid[i] = self.family.mean(xi[i]) - self.response[i];
        }
        let value = n_inv * (cum - fit);
        let grad = self.design.matrix().t().dot(&resid).mapv(|v| v * n_inv);
        if !value.is_finite() || grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("loss evaluation"));
        }
        Ok((value, grad))
    }

    /// Variance weights A''((X theta)_i), used for Newton Hessians.
    pub fn variance_weights(&self, theta: ArrayView1<F>, mode: EvalMode) -> Result<Array1<F>> {
        let xi = self.predictor(theta, mode)?;
        Ok(xi.mapv(|v| self.family.variance(v)))
    }

    /// Smoothness constant of the loss in the requested geometry.
    ///
    /// Euclidean: Gaussian `||S||_op`, Bernoulli `||S||_op / 4`, Poisson
    /// `||S||_op * exp(b * max_i ||x_i||_2)` on the ball of radius `b`
    /// (radius required). l1 on the simplex: Gaussian
    /// `max_j ||X_.j||^2 / n`, Bernoulli a quarter of that, Poisson
    /// `(1/n) max_j sum_i exp(||x_i||_inf) x_ij^2`.
    pub fn smoothness_constant(
        &self,
        geometry: SmoothnessGeometry,
        radius: Option<F>,
    ) -> Result<F> {
        let n_inv = F::one() / c::<F>(self.n() as f64);
        match geometry {
            SmoothnessGeometry::Euclidean => {
                let op = spectral_terms(&self.design)?.operator;
                match self.family {
                    GlmFamily::Gaussian => Ok(op),
                    GlmFamily::Bernoulli => Ok(op / c::<F>(4.0)),
                    GlmFamily::Poisson => {
                        let b = radius.ok_or(Error::MissingRadius)?;
                        Ok(op * (b * self.design.max_row_norm()).exp())
                    }
                }
            }
            SmoothnessGeometry::L1Simplex => {
                let x = self.design.matrix();
                match self.family {
                    GlmFamily::Gaussian | GlmFamily::Bernoulli => {
                        let max_col_sq = self
                            .design
                            .column_norms()
                            .iter()
                            .fold(F::zero(), |m, &v| m.max(v * v));
                        let l = max_col_sq * n_inv;
                        if self.family == GlmFamily::Bernoulli {
                            Ok(l / c::<F>(4.0))
                        } else {
                            Ok(l)
                        }
                    }
                    GlmFamily::Poisson => {
                        let row_inf: Vec<F> = (0..self.n())
                            .map(|i| x.row(i).iter().fold(F::zero(), |m, &v| m.max(v.abs())))
                            .collect();
                        let mut best = F::zero();
                        for j in 0..self.d() {
                            let mut s = F::zero();
                            for i in 0..self.n() {
                                let xij = x[[i, j]];
                                s = s + row_inf[i].exp() * xij * xij;
                            }
                            best = best.max(s * n_inv);
                        }
                        Ok(best)
                    }
                }
            }
        }
    }

    /// Prediction risk (1/n)(-mu^T X theta + sum_i A((X theta)_i)), the
    /// fixed-design expected loss on an independent response copy. Requires
    /// `mean_truth`.
    pub fn prediction_risk(&self, theta: ArrayView1<F>) -> Result<F> {
        self.prediction_risk_mode(theta, EvalMode::Strict)
    }

    pub fn prediction_risk_mode(&self, theta: ArrayView1<F>, mode: EvalMode) -> Result<F> {
        let mu = self.mean_truth.as_ref().ok_or(Error::MissingMeanTruth)?;
        let xi = self.predictor(theta, mode)?;
        let n_inv = F::one() / c::<F>(self.n() as f64);
        let fit: F = mu.dot(&xi);
        let cum: F = xi.iter().map(|&v| self.family.cumulant(v)).sum();
        Ok(n_inv * (cum - fit))
    }

    /// Noise vector eps = Y - mu. Requires `mean_truth`.
    pub fn noise(&self) -> Result<Array1<F>> {
        let mu = self.mean_truth.as_ref().ok_or(Error::MissingMeanTruth)?;
        Ok(&self.response - mu)
    }

    /// Gradient of the prediction risk, (1/n) X^T (A'(X theta) - mu).
    pub fn risk_gradient(&self, theta: ArrayView1<F>, mode: EvalMode) -> Result<Array1<F>> {
        let mu = self.mean_truth.as_ref().ok_or(Error::MissingMeanTruth)?;
        let xi = self.predictor(theta, mode)?;
        let n_inv = F::one() / c::<F>(self.n() as f64);
        let resid = Array1::from_shape_fn(self.n(), |i| self.family.mean(xi[i]) - mu[i]);
        Ok(self.design.matrix().t().dot(&resid).mapv(|v| v * n_inv))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use ndarray::{array, Array2};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_problem(
        seed: u64,
        n: usize,
        d: usize,
        family: GlmFamily,
    ) -> (GlmProblem<f64>, Array1<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0));
        let y = Array1::from_shape_fn(n, |_| match family {
            GlmFamily::Gaussian => rng.random_range(-2.0..2.0),
            GlmFamily::Bernoulli => {
                if rng.random_bool(0.5) {
                    1.0
                } else {
                    0.0
                }
            }
            GlmFamily::Poisson => rng.random_range(0..6) as f64,
        });
        let theta = Array1::from_shape_fn(d, |_| rng.random_range(-0.8..0.8));
        let problem = GlmProblem::new(Design::new(x).unwrap(), y, family, None).unwrap();
        (problem, theta)
    }

    /// Independent per-sample oracle for the loss.
    fn loss_oracle(p: &GlmProblem<f64>, theta: &Array1<f64>) -> f64 {
        let mut total = 0.0;
        for i in 0..p.n() {
            let xi: f64 = p
                .design
                .matrix()
                .row(i)
                .iter()
                .zip(theta.iter())
                .map(|(a, b)| a * b)
                .sum();
            total += p.family.cumulant(xi) - p.response[i] * xi;
        }
        total / p.n() as f64
    }

    #[test]
    fn gaussian_loss_trivial_points() {
        let p = GlmProblem::new(
            Design::new(Array2::eye(2)).unwrap(),
            array![1.0, 1.0],
            GlmFamily::Gaussian,
            None,
        )
        .unwrap();
        assert_eq!(p.loss(array![0.0f64, 0.0].view()).unwrap(), 0.0);
        let at_one = p.loss(array![1.0f64, 1.0].view()).unwrap();
        assert!((at_one - (-0.5)).abs() < 1e-15);
    }

    #[test]
    fn bernoulli_loss_at_zero_is_log_two() {
        let p = GlmProblem::new(
            Design::new(array![[1.0]]).unwrap(),
            array![1.0],
            GlmFamily::Bernoulli,
            None,
        )
        .unwrap();
        let v = p.loss(array![0.0].view()).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn poisson_loss_matches_per_sample_oracle() {
        let (p, theta) = random_problem(11, 3, 4, GlmFamily::Poisson);
        let fast = p.loss(theta.view()).unwrap();
        let slow = loss_oracle(&p, &theta);
        assert!((fast - slow).abs() < 1e-12);
    }

    #[test]
    fn gradient_trivial_points() {
        let p = GlmProblem::new(
            Design::new(Array2::eye(2)).unwrap(),
            array![1.0, 1.0],
            GlmFamily::Gaussian,
            None,
        )
        .unwrap();
        let g = p.loss_gradient(array![0.0f64, 0.0].view()).unwrap();
        assert!((g[0] + 0.5).abs() < 1e-15 && (g[1] + 0.5).abs() < 1e-15);

        let pb = GlmProblem::new(
            Design::new(array![[1.0]]).unwrap(),
            array![1.0],
            GlmFamily::Bernoulli,
            None,
        )
        .unwrap();
        let gb = pb.loss_gradient(array![0.0f64].view()).unwrap();
        assert!((gb[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_central_differences() {
        for (seed, family) in [
            (1, GlmFamily::Gaussian),
            (2, GlmFamily::Bernoulli),
            (3, GlmFamily::Poisson),
        ] {
            let (p, theta) = random_problem(seed, 8, 5, family);
            let g = p.loss_gradient(theta.view()).unwrap();
            let h = 1e-5;
            for j in 0..p.d() {
                let mut plus = theta.clone();
                let mut minus = theta.clone();
                plus[j] += h;
                minus[j] -= h;
                let fd =
                    (p.loss(plus.view()).unwrap() - p.loss(minus.view()).unwrap()) / (2.0 * h);
                let scale = g[j].abs().max(1.0);
                assert!(
                    (g[j] - fd).abs() / scale < 1e-6,
                    "family {family:?} coord {j}: {} vs {}",
                    g[j],
                    fd
                );
            }
        }
    }

    #[test]
    fn convexity_probe() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for family in [GlmFamily::Gaussian, GlmFamily::Bernoulli, GlmFamily::Poisson] {
            let (p, _) = random_problem(7, 10, 4, family);
            for _ in 0..100 {
                let a = Array1::from_shape_fn(4, |_| rng.random_range(-1.0..1.0));
                let b = Array1::from_shape_fn(4, |_| rng.random_range(-1.0..1.0));
                let t: f64 = rng.random_range(0.0..1.0);
                let mix = &a * t + &b * (1.0 - t);
                let lhs = p.loss(mix.view()).unwrap();
                let rhs =
                    t * p.loss(a.view()).unwrap() + (1.0 - t) * p.loss(b.view()).unwrap();
                assert!(lhs <= rhs + 1e-10, "{family:?}: {lhs} > {rhs}");
            }
        }
    }

    #[test]
    fn descent_lemma_certificate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for family in [GlmFamily::Gaussian, GlmFamily::Bernoulli] {
            let (p, _) = random_problem(21, 12, 5, family);
            let l = p
                .smoothness_constant(SmoothnessGeometry::Euclidean, None)
                .unwrap();
            let eta = 1.0 / l;
            for _ in 0..20 {
                let theta = Array1::from_shape_fn(5, |_| rng.random_range(-1.0..1.0));
                let g = p.loss_gradient(theta.view()).unwrap();
                let stepped = &theta - &(&g * eta);
                let lhs = p.loss(stepped.view()).unwrap();
                let rhs = p.loss(theta.view()).unwrap()
                    - eta / 2.0 * g.iter().map(|v| v * v).sum::<f64>();
                assert!(lhs <= rhs + 1e-10);
            }
        }
    }

    #[test]
    fn smoothness_identity_design() {
        let p = GlmProblem::new(
            Design::new(Array2::<f64>::eye(2)).unwrap(),
            array![1.0, 1.0],
            GlmFamily::Gaussian,
            None,
        )
        .unwrap();
        let l = p
            .smoothness_constant(SmoothnessGeometry::Euclidean, None)
            .unwrap();
        assert!((l - 0.5).abs() < 1e-9);
    }

    #[test]
    fn smoothness_bernoulli_is_quarter_of_gaussian() {
        let (pg, _) = random_problem(31, 9, 4, GlmFamily::Gaussian);
        let pb = GlmProblem::new(
            pg.design.clone(),
            pg.response.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 }),
            GlmFamily::Bernoulli,
            None,
        )
        .unwrap();
        let lg = pg
            .smoothness_constant(SmoothnessGeometry::Euclidean, None)
            .unwrap();
        let lb = pb
            .smoothness_constant(SmoothnessGeometry::Euclidean, None)
            .unwrap();
        assert!((lb - lg / 4.0).abs() < 1e-12);
    }

    #[test]
    fn smoothness_l1_matches_column_scan() {
        let (p, _) = random_problem(41, 5, 3, GlmFamily::Gaussian);
        let l = p
            .smoothness_constant(SmoothnessGeometry::L1Simplex, None)
            .unwrap();
        let x = p.design.matrix();
        let mut best: f64 = 0.0;
        for j in 0..3 {
            let s: f64 = (0..5).map(|i| x[[i, j]] * x[[i, j]]).sum();
            best = best.max(s / 5.0);
        }
        assert!((l - best).abs() < 1e-14);
    }

    #[test]
    fn poisson_euclidean_smoothness_requires_radius() {
        let (p, _) = random_problem(43, 5, 3, GlmFamily::Poisson);
        assert!(matches!(
            p.smoothness_constant(SmoothnessGeometry::Euclidean, None),
            Err(Error::MissingRadius)
        ));
        assert!(p
            .smoothness_constant(SmoothnessGeometry::Euclidean, Some(1.0))
            .is_ok());
    }

    #[test]
    fn spectral_terms_identity_and_rank_one() {
        let d = Design::new(Array2::<f64>::eye(4) * 2.0f64.sqrt()).unwrap();
        // X = sqrt(2) I_4, n = 4 -> Sigma = I/2... adjust: X^T X / n = (2 I)/4 = I/2.
        let s = spectral_terms(&d).unwrap();
        assert!((s.trace - 2.0).abs() < 1e-12);
        assert!((s.frobenius - 1.0).abs() < 1e-12);
        assert!((s.operator - 0.5).abs() < 1e-9);

        // Rank-1: X = (1,1)^T (1,0) -> Sigma = diag(1, 0).
        let d1 = Design::new(array![[1.0f64, 0.0], [1.0, 0.0]]).unwrap();
        let s1 = spectral_terms(&d1).unwrap();
        assert!((s1.trace - 1.0).abs() < 1e-12);
        assert!((s1.frobenius - 1.0).abs() < 1e-12);
        assert!((s1.operator - 1.0).abs() < 1e-9);
    }

    /// Jacobi eigenvalue sweep, used only as an independent oracle here.
    fn jacobi_eigenvalues(mut a: Array2<f64>) -> Vec<f64> {
        let n = a.nrows();
        for _ in 0..100 {
            let mut off = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        off += a[[i, j]] * a[[i, j]];
                    }
                }
            }
            if off < 1e-24 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a[[p, q]].abs() < 1e-18 {
                        continue;
                    }
                    let theta = 0.5 * (a[[q, q]] - a[[p, p]]) / a[[p, q]];
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let cos = 1.0 / (t * t + 1.0).sqrt();
                    let sin = t * cos;
                    for k in 0..n {
                        let akp = a[[k, p]];
                        let akq = a[[k, q]];
                        a[[k, p]] = cos * akp - sin * akq;
                        a[[k, q]] = sin * akp + cos * akq;
                    }
                    for k in 0..n {
                        let apk = a[[p, k]];
                        let aqk = a[[q, k]];
                        a[[p, k]] = cos * apk - sin * aqk;
                        a[[q, k]] = sin * apk + cos * aqk;
                    }
                }
            }
        }
        (0..n).map(|i| a[[i, i]]).collect()
    }

    #[test]
    fn spectral_terms_match_eigendecomposition_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let x = Array2::from_shape_fn((10, 4), |_| rng.random_range(-1.0..1.0));
        let d = Design::new(x).unwrap();
        let s = spectral_terms(&d).unwrap();
        let eig = jacobi_eigenvalues(d.empirical_covariance());
        let trace: f64 = eig.iter().sum();
        let frob: f64 = eig.iter().map(|v| v * v).sum::<f64>().sqrt();
        let op = eig.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!((s.trace - trace).abs() < 1e-8);
        assert!((s.frobenius - frob).abs() < 1e-8);
        assert!((s.operator - op).abs() < 1e-8);
    }

    #[test]
    fn spectral_ordering_holds() {
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(2..12);
            let d = rng.random_range(1..8);
            let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-2.0..2.0));
            let s = spectral_terms(&Design::new(x).unwrap()).unwrap();
            assert!(s.operator <= s.frobenius + 1e-10);
            assert!(s.frobenius <= s.trace + 1e-10);
            assert!(s.operator * s.operator <= s.frobenius * s.frobenius + 1e-10);
            assert!(s.frobenius * s.frobenius <= s.trace * s.operator + 1e-10);
        }
    }

    #[test]
    fn risk_decomposition_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for family in [GlmFamily::Gaussian, GlmFamily::Bernoulli, GlmFamily::Poisson] {
            let (mut p, theta) = random_problem(rng.random(), 9, 4, family);
            // Any finite mean vector is allowed; it need not match the family.
            let mu = Array1::from_shape_fn(9, |_| rng.random_range(0.1..0.9));
            p.mean_truth = Some(mu);
            let risk = p.prediction_risk(theta.view()).unwrap();
            let eps = p.noise().unwrap();
            let xtheta = p.design.matrix().dot(&theta);
            let lin = eps.dot(&xtheta) / p.n() as f64;
            let loss = p.loss(theta.view()).unwrap();
            assert!((risk - (loss + lin)).abs() < 1e-10);
        }
    }

    #[test]
    fn risk_at_zero_is_mean_cumulant_at_zero() {
        let (mut p, _) = random_problem(3, 6, 3, GlmFamily::Bernoulli);
        p.mean_truth = Some(Array1::from_elem(6, 0.4));
        let r = p.prediction_risk(Array1::zeros(3).view()).unwrap();
        assert!((r - std::f64::consts::LN_2).abs() < 1e-14);
    }

    #[test]
    fn risk_requires_mean_truth() {
        let (p, theta) = random_problem(4, 6, 3, GlmFamily::Gaussian);
        assert!(matches!(
            p.prediction_risk(theta.view()),
            Err(Error::MissingMeanTruth)
        ));
    }

    #[test]
    fn poisson_saturation_reports_index() {
        let p = GlmProblem::new(
            Design::new(array![[1.0], [800.0]]).unwrap(),
            array![1.0, 1.0],
            GlmFamily::Poisson,
            None,
        )
        .unwrap();
        match p.loss(array![1.0].view()) {
            Err(Error::Saturation { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected saturation, got {other:?}"),
        }
        // Clamped mode stays finite.
        assert!(p.loss_mode(array![1.0].view(), EvalMode::Clamped).is_ok());
    }

    #[test]
    fn column_norm_cache_matches_recompute() {
        let (p, _) = random_problem(51, 7, 4, GlmFamily::Gaussian);
        for j in 0..4 {
            let fresh = linalg::norm2(p.design.matrix().column(j));
            assert_eq!(p.design.column_norms()[j], fresh);
        }
    }

    #[test]
    fn sufficient_statistic_premapping() {
        // Responses mapped through S at ingestion; downstream formulas are
        // unchanged because only S(y) enters them.
        let d = Design::new(array![[1.0f64], [2.0]]).unwrap();
        let p = GlmProblem::new(d, array![4.0, 9.0], GlmFamily::Gaussian, None)
            .unwrap()
            .map_response(|y: f64| y.sqrt())
            .unwrap();
        assert_eq!(p.response, array![2.0, 3.0]);
        let g = p.loss_gradient(array![0.0].view()).unwrap();
        // -(1/2)(1*2 + 2*3) = -4
        assert!((g[0] + 4.0).abs() < 1e-15);

        // The mapped response must still satisfy the family constraints.
        let d2 = Design::new(array![[1.0]]).unwrap();
        let bad = GlmProblem::new(d2, array![0.5], GlmFamily::Bernoulli, None)
            .unwrap()
            .map_response(|y| y * 3.0);
        assert!(bad.is_err());
    }

    #[test]
    fn response_validation() {
        let d = Design::new(array![[1.0], [1.0]]).unwrap();
        assert!(GlmProblem::new(
            d.clone(),
            array![0.5, 1.5],
            GlmFamily::Bernoulli,
            None
        )
        .is_err());
        assert!(GlmProblem::new(d, array![-1.0, 2.0], GlmFamily::Poisson, None).is_err());
    }
}
