//! Objective functions consumed by the runners: a value/gradient trait plus
//! the concrete losses used throughout the crate.

use crate::glm::{EvalMode, GlmProblem};
use crate::{c, Error, Result, Scalar};
use ndarray::{Array1, Array2, ArrayView1};

/// Differentiable objective: value and gradient at a point.
pub trait Objective<F: Scalar> {
    fn value(&self, theta: ArrayView1<F>) -> Result<F>;
    fn gradient(&self, theta: ArrayView1<F>) -> Result<Array1<F>>;

    /// Both at once; implementors whose value and gradient share work (one
    /// linear-predictor pass for GLM losses) override this.
    fn value_and_gradient(&self, theta: ArrayView1<F>) -> Result<(F, Array1<F>)> {
        Ok((self.value(theta)?, self.gradient(theta)?))
    }
}

/// GLM negative log-likelihood as an objective, with a saturation policy.
pub struct GlmLoss<'a, F: Scalar> {
    problem: &'a GlmProblem<F>,
    mode: EvalMode,
}

impl<'a, F: Scalar> GlmLoss<'a, F> {
    pub fn new(problem: &'a GlmProblem<F>) -> Self {
        GlmLoss {
            problem,
            mode: EvalMode::Strict,
        }
    }

    pub fn clamped(problem: &'a GlmProblem<F>) -> Self {
        GlmLoss {
            problem,
            mode: EvalMode::Clamped,
        }
    }
}

impl<F: Scalar> Objective<F> for GlmLoss<'_, F> {
    fn value(&self, theta: ArrayView1<F>) -> Result<F> {
        self.problem.loss_mode(theta, self.mode)
    }

    fn gradient(&self, theta: ArrayView1<F>) -> Result<Array1<F>> {
        self.problem.loss_gradient_mode(theta, self.mode)
    }

    fn value_and_gradient(&self, theta: ArrayView1<F>) -> Result<(F, Array1<F>)> {
        self.problem.loss_value_gradient_mode(theta, self.mode)
    }
}

impl<F: Scalar> GlmProblem<F> {
    /// View this problem as an [`Objective`] with strict saturation checks.
    pub fn objective(&self) -> GlmLoss<'_, F> {
        GlmLoss::new(self)
    }

    /// View with Poisson linear predictors clamped (solver internals).
    pub fn objective_clamped(&self) -> GlmLoss<'_, F> {
        GlmLoss::clamped(self)
    }
}

/// Least-squares loss (1/2n) ||y - X theta||^2.
#[derive(Debug, Clone)]
pub struct LeastSquares<F: Scalar = f64> {
    pub x: Array2<F>,
    pub y: Array1<F>,
}

impl<F: Scalar> LeastSquares<F> {
    pub fn new(x: Array2<F>, y: Array1<F>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                context: "least squares response",
                expected: x.nrows(),
                got: y.len(),
            });
        }
        Ok(LeastSquares { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }
}

impl<F: Scalar> Objective<F> for LeastSquares<F> {
    fn value(&self, theta: ArrayView1<F>) -> Result<F> {
        let r = &self.x.dot(&theta) - &self.y;
        let two_n = c::<F>(2.0 * self.n() as f64);
        Ok(r.iter().map(|&v| v * v).sum::<F>() / two_n)
    }

    fn gradient(&self, theta: ArrayView1<F>) -> Result<Array1<F>> {
        let r = &self.x.dot(&theta) - &self.y;
        let n_inv = F::one() / c::<F>(self.n() as f64);
        Ok(self.x.t().dot(&r).mapv(|v| v * n_inv))
    }

    fn value_and_gradient(&self, theta: ArrayView1<F>) -> Result<(F, Array1<F>)> {
        let r = &self.x.dot(&theta) - &self.y;
        let n_inv = F::one() / c::<F>(self.n() as f64);
        let value = r.iter().map(|&v| v * v).sum::<F>() * n_inv / c::<F>(2.0);
        Ok((value, self.x.t().dot(&r).mapv(|v| v * n_inv)))
    }
}

/// Linear objective <cost, theta>, the model-aggregation loss.
#[derive(Debug, Clone)]
pub struct LinearObjective<F: Scalar = f64> {
    pub cost: Array1<F>,
}

impl<F: Scalar> Objective<F> for LinearObjective<F> {
    fn value(&self, theta: ArrayView1<F>) -> Result<F> {
        Ok(self.cost.dot(&theta))
    }

    fn gradient(&self, _theta: ArrayView1<F>) -> Result<Array1<F>> {
        Ok(self.cost.clone())
    }
}

/// Poisson linear inverse problem loss (1/n) D_BS(y, X theta), where D_BS is
/// the Boltzmann-Shannon Bregman divergence. Requires positive data and a
/// positive linear predictor.
#[derive(Debug, Clone)]
pub struct PlipObjective<F: Scalar = f64> {
    pub x: Array2<F>,
    pub y: Array1<F>,
}

impl<F: Scalar> PlipObjective<F> {
    pub fn new(x: Array2<F>, y: Array1<F>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                context: "plip response",
                expected: x.nrows(),
                got: y.len(),
            });
        }
        if x.iter().any(|&v| v <= F::zero()) {
            return Err(Error::invalid("plip design entries must be positive"));
        }
        if y.iter().any(|&v| v <= F::zero()) {
            return Err(Error::invalid("plip responses must be positive"));
        }
        Ok(PlipObjective { x, y })
    }

    fn predictor(&self, theta: ArrayView1<F>) -> Result<Array1<F>> {
        let m = self.x.dot(&theta);
        if m.iter().any(|&v| v <= F::zero()) {
            return Err(Error::DomainViolation {
                context: "plip predictor left the positive orthant",
                iteration: None,
            });
        }
        Ok(m)
    }
}

impl<F: Scalar> Objective<F> for PlipObjective<F> {
    fn value(&self, theta: ArrayView1<F>) -> Result<F> {
        let m = self.predictor(theta)?;
        let n_inv = F::one() / c::<F>(self.y.len() as f64);
        let mut s = F::zero();
        for (&yi, &mi) in self.y.iter().zip(m.iter()) {
            s = s + yi * (yi / mi).ln() - yi + mi;
        }
        Ok(s * n_inv)
    }

    fn gradient(&self, theta: ArrayView1<F>) -> Result<Array1<F>> {
        let m = self.predictor(theta)?;
        let n_inv = F::one() / c::<F>(self.y.len() as f64);
        let w = Array1::from_shape_fn(self.y.len(), |i| F::one() - self.y[i] / m[i]);
        Ok(self.x.t().dot(&w).mapv(|v| v * n_inv))
    }
}

/// Objective from a pair of closures, handy for tests and custom losses.
pub struct FnObjective<V, G> {
    pub value_fn: V,
    pub gradient_fn: G,
}

impl<F, V, G> Objective<F> for FnObjective<V, G>
where
    F: Scalar,
    V: Fn(ArrayView1<F>) -> F,
    G: Fn(ArrayView1<F>) -> Array1<F>,
{
    fn value(&self, theta: ArrayView1<F>) -> Result<F> {
        Ok((self.value_fn)(theta))
    }

    fn gradient(&self, theta: ArrayView1<F>) -> Result<Array1<F>> {
        Ok((self.gradient_fn)(theta))
    }
}
