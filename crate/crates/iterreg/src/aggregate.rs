//! Randomized predictors and model aggregation: the Gibbs posterior, its
//! exact equivalence with exponentiated gradient iterates on the linear
//! aggregation loss, and the expected-population-risk gap bounds.

use crate::geometry::{BregmanGeometry, NegativeEntropySimplex};
use crate::optim::{egd_run, LinearObjective, StepSchedule};
use crate::risk::CoverageReport;
use crate::{c, Error, Result, Scalar};
use ndarray::{Array1, ArrayView1};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// A finite collection of base models with their empirical risks, optional
/// population risks (simulation only), and a prior over models.
#[derive(Debug, Clone)]
pub struct ModelCollection<F: Scalar = f64> {
    pub empirical_risks: Array1<F>,
    pub population_risks: Option<Array1<F>>,
    pub prior: Array1<F>,
}

impl<F: Scalar> ModelCollection<F> {
    /// Build a collection; `prior` defaults to uniform when `None`.
    pub fn new(
        empirical_risks: Array1<F>,
        population_risks: Option<Array1<F>>,
        prior: Option<Array1<F>>,
    ) -> Result<Self> {
        let size = empirical_risks.len();
        if size == 0 {
            return Err(Error::invalid("collection must contain at least one model"));
        }
        if empirical_risks.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("empirical risk"));
        }
        if let Some(pop) = &population_risks {
            if pop.len() != size {
                return Err(Error::DimensionMismatch {
                    context: "population risks length",
                    expected: size,
                    got: pop.len(),
                });
            }
            if pop.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("population risk"));
            }
        }
        let prior = match prior {
            Some(z) => {
                if z.len() != size {
                    return Err(Error::DimensionMismatch {
                        context: "prior length",
                        expected: size,
                        got: z.len(),
                    });
                }
                if z.iter().any(|&v| v <= F::zero()) {
                    return Err(Error::invalid("prior must be strictly positive"));
                }
                if (z.sum() - F::one()).abs() > c::<F>(1e-10) {
                    return Err(Error::invalid("prior must sum to one"));
                }
                z
            }
            None => Array1::from_elem(size, F::one() / c::<F>(size as f64)),
        };
        Ok(ModelCollection {
            empirical_risks,
            population_risks,
            prior,
        })
    }

    pub fn size(&self) -> usize {
        self.empirical_risks.len()
    }

    /// Gibbs posterior: weights proportional to
    /// `prior * exp(-empirical_risk / lambda)`, computed with
    /// max-subtraction stabilization. Strictly positive, sums to one.
    pub fn gibbs_posterior(&self, lambda: F) -> Result<Array1<F>> {
        if !(lambda > F::zero()) {
            return Err(Error::invalid("Gibbs posterior requires lambda > 0"));
        }
        let exponents: Vec<F> = self
            .empirical_risks
            .iter()
            .map(|&r| -r / lambda)
            .collect();
        let m = exponents
            .iter()
            .fold(F::neg_infinity(), |acc, &v| acc.max(v));
        let mut w = Array1::from_shape_fn(self.size(), |i| {
            self.prior[i] * (exponents[i] - m).exp()
        });
        let total = w.sum();
        if !(total > F::zero()) || !total.is_finite() {
            return Err(Error::NonFinite("Gibbs normalizer"));
        }
        w.mapv_inplace(|v| v / total);
        Ok(w)
    }

    /// Run EGD on the linear aggregation loss `<empirical_risks, theta>` from
    /// the prior for T steps and compare with the Gibbs posterior at
    /// `lambda = 1/(eta T)`. Returns the maximum coordinate deviation. The
    /// loss is linear, so arbitrarily large `eta` is accepted.
    pub fn egd_equivalence_check(&self, eta: F, t: usize) -> Result<F> {
        if t == 0 {
            return Err(Error::invalid("equivalence check needs T >= 1"));
        }
        let objective = LinearObjective {
            cost: self.empirical_risks.clone(),
        };
        let schedule = StepSchedule::constant(eta, t)?;
        let trace = egd_run(&objective, self.prior.view(), &schedule, None)?;
        let lambda_t = F::one() / (eta * c::<F>(t as f64));
        let gibbs = self.gibbs_posterior(lambda_t)?;
        let theta_t = &trace.final_record().theta;
        Ok(theta_t
            .iter()
            .zip(gibbs.iter())
            .fold(F::zero(), |m, (&a, &b)| m.max((a - b).abs())))
    }

    /// `sup over models of |empirical - population|`.
    pub fn sup_deviation(&self) -> Result<F> {
        let pop = self
            .population_risks
            .as_ref()
            .ok_or_else(|| Error::invalid("population risks are absent"))?;
        Ok(self
            .empirical_risks
            .iter()
            .zip(pop.iter())
            .fold(F::zero(), |m, (&a, &b)| m.max((a - b).abs())))
    }

    /// Expected population risk of a model drawn from `weights`.
    pub fn expected_risk(&self, weights: ArrayView1<F>) -> Result<F> {
        let pop = self
            .population_risks
            .as_ref()
            .ok_or_else(|| Error::invalid("population risks are absent"))?;
        if weights.len() != self.size() {
            return Err(Error::DimensionMismatch {
                context: "weights length",
                expected: self.size(),
                got: weights.len(),
            });
        }
        Ok(pop.dot(&weights))
    }

    pub fn expected_empirical_risk(&self, weights: ArrayView1<F>) -> F {
        self.empirical_risks.dot(&weights)
    }

    /// KL divergence to the prior with the 0 log 0 convention.
    pub fn kl_to_prior(&self, weights: ArrayView1<F>) -> Result<F> {
        NegativeEntropySimplex.divergence(weights, self.prior.view())
    }

    /// Right-hand side of the expected-population-risk gap bound for a
    /// reference weight vector:
    /// Gibbs form `(1/lambda) sup|R_hat - R|^2 + 2 lambda KL(ref, prior)`,
    /// EGD form `(1/(2 lambda)) sup|R_hat - R|^2 + lambda KL(ref, prior)`
    /// with `lambda = 1/(eta T)`.
    pub fn risk_gap_bound(
        &self,
        kind: WeightsKind,
        lambda: F,
        reference: ArrayView1<F>,
    ) -> Result<F> {
        if !(lambda > F::zero()) {
            return Err(Error::invalid("risk gap bound requires lambda > 0"));
        }
        let dev = self.sup_deviation()?;
        let kl = self.kl_to_prior(reference)?;
        let two = c::<F>(2.0);
        Ok(match kind {
            WeightsKind::Gibbs => dev * dev / lambda + two * lambda * kl,
            WeightsKind::Egd => dev * dev / (two * lambda) + lambda * kl,
        })
    }
}

/// Which estimator's gap bound is being evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightsKind {
    Gibbs,
    Egd,
}

/// Tuning for bounded losses: `lambda = (C/2) sqrt((log(2|B|) + delta)/(n b))`
/// and the resulting oracle bound `2 C sqrt(b (log(2|B|) + delta) / n)`.
pub fn hoeffding_lambda<F: Scalar>(
    loss_bound: F,
    n: usize,
    cardinality: usize,
    delta: F,
    b: F,
) -> Result<(F, F)> {
    if !(loss_bound > F::zero()) || n == 0 || cardinality == 0 {
        return Err(Error::invalid("hoeffding_lambda needs C > 0, n >= 1, |B| >= 1"));
    }
    let log2b = c::<F>(2.0 * cardinality as f64).ln();
    let nf = c::<F>(n as f64);
    let lambda = loss_bound / c::<F>(2.0) * ((log2b + delta) / (nf * b)).sqrt();
    let bound = c::<F>(2.0) * loss_bound * (b * (log2b + delta) / nf).sqrt();
    Ok((lambda, bound))
}

/// Exact minimizer of `<costs, theta>` over the KL ball
/// `{theta: KL(theta, prior) <= budget}`: a Gibbs tilt of the prior, found by
/// bisection on the temperature. When even the sharpest tilt (point mass on
/// the best models) fits the budget, that limit is returned.
pub fn kl_ball_linear_min<F: Scalar>(
    costs: ArrayView1<F>,
    prior: ArrayView1<F>,
    budget: F,
) -> Result<(Array1<F>, F)> {
    if costs.len() != prior.len() {
        return Err(Error::DimensionMismatch {
            context: "kl ball costs length",
            expected: prior.len(),
            got: costs.len(),
        });
    }
    if budget < F::zero() {
        return Err(Error::invalid("budget must be nonnegative"));
    }
    let geom = NegativeEntropySimplex;
    let tilt = |temperature: F| -> Array1<F> {
        // weights ~ prior * exp(-costs / temperature), stabilized.
        let m = costs
            .iter()
            .fold(F::infinity(), |acc, &v| acc.min(v / temperature));
        let mut w = Array1::from_shape_fn(costs.len(), |i| {
            prior[i] * (-(costs[i] / temperature - m)).exp()
        });
        let s = w.sum();
        w.mapv_inplace(|v| v / s);
        w
    };

    // Sharp limit: uniform over the argmin set, weighted by the prior.
    let min_cost = costs.iter().fold(F::infinity(), |m, &v| m.min(v));
    let tolc = c::<F>(1e-12) * (F::one() + min_cost.abs());
    let mut sharp = Array1::zeros(costs.len());
    let mut mass = F::zero();
    for i in 0..costs.len() {
        if (costs[i] - min_cost).abs() <= tolc {
            sharp[i] = prior[i];
            mass = mass + prior[i];
        }
    }
    sharp.mapv_inplace(|v| v / mass);
    let sharp_kl = {
        // 0 log 0 terms drop; prior is strictly positive.
        let mut s = F::zero();
        for i in 0..costs.len() {
            if sharp[i] > F::zero() {
                s = s + sharp[i] * (sharp[i] / prior[i]).ln();
            }
        }
        s
    };
    if sharp_kl <= budget {
        let value = costs.dot(&sharp);
        return Ok((sharp, value));
    }

    // KL(tilt(T), prior) decreases in T; bisect to land on the budget.
    let mut lo = c::<F>(1e-12);
    let mut hi = F::one();
    while geom.divergence(tilt(hi).view(), prior)? > budget {
        hi = hi * c::<F>(2.0);
        if hi > c::<F>(1e12) {
            break;
        }
    }
    for _ in 0..200 {
        let mid = (lo + hi) / c::<F>(2.0);
        if geom.divergence(tilt(mid).view(), prior)? > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = tilt(hi);
    let value = costs.dot(&theta);
    Ok((theta, value))
}

/// Coverage experiment for the bounded-loss oracle bound: `models`
/// Bernoulli-loss means, n i.i.d. samples per replicate, Gibbs weights at the
/// tuned lambda, and the exact KL-ball infimum as the comparator.
pub fn hoeffding_coverage_mc(
    population_risks: &Array1<f64>,
    n: usize,
    b: f64,
    delta: f64,
    replicates: usize,
    master_seed: u64,
) -> Result<CoverageReport> {
    let cardinality = population_risks.len();
    let (lambda, bound) = hoeffding_lambda(1.0, n, cardinality, delta, b)?;
    let prior = Array1::from_elem(cardinality, 1.0 / cardinality as f64);
    let (_, inf_value) = kl_ball_linear_min(population_risks.view(), prior.view(), b)?;

    let mut violations = 0usize;
    for r in 0..replicates {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(r as u64 + 1);
        let empirical = Array1::from_shape_fn(cardinality, |j| {
            let mut hits = 0usize;
            for _ in 0..n {
                if rng.random_bool(population_risks[j]) {
                    hits += 1;
                }
            }
            hits as f64 / n as f64
        });
        let collection = ModelCollection::new(
            empirical,
            Some(population_risks.clone()),
            Some(prior.clone()),
        )?;
        let gibbs = collection.gibbs_posterior(lambda)?;
        let gap = collection.expected_risk(gibbs.view())? - inf_value;
        if gap > bound + 1e-12 {
            violations += 1;
        }
    }
    let rate = violations as f64 / replicates as f64;
    let target = (-delta).exp();
    Ok(CoverageReport {
        check: "hoeffding_bound",
        replicates,
        violations,
        rate,
        target,
        standard_error: (target * (1.0 - target) / replicates as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn collection(
        empirical: Array1<f64>,
        population: Option<Array1<f64>>,
    ) -> ModelCollection<f64> {
        ModelCollection::new(empirical, population, None).unwrap()
    }

    #[test]
    fn gibbs_trivial_cases() {
        let coll = collection(array![0.3, 0.3, 0.3], None);
        let w = coll.gibbs_posterior(1.0).unwrap();
        for &v in w.iter() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }

        // Risks (0, log 2), lambda 1, uniform prior: (2/3, 1/3).
        let coll2 = collection(array![0.0, std::f64::consts::LN_2], None);
        let w2 = coll2.gibbs_posterior(1.0).unwrap();
        assert!((w2[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((w2[1] - 1.0 / 3.0).abs() < 1e-15);

        // Huge lambda: posterior ~ prior.
        let w3 = coll2.gibbs_posterior(1e12).unwrap();
        assert!((w3[0] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn gibbs_invariant_under_constant_shift() {
        let base = array![0.1, 0.7, 0.4, 0.2];
        let coll = collection(base.clone(), None);
        let shifted = collection(base.mapv(|v| v + 123.456), None);
        let a = coll.gibbs_posterior(0.3).unwrap();
        let b = shifted.gibbs_posterior(0.3).unwrap();
        for j in 0..4 {
            assert!((a[j] - b[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn egd_equivalence_single_step_and_random() {
        let coll = collection(array![0.2, 0.9, 0.5], None);
        // T = 1, eta = 1 corresponds to Gibbs at lambda = 1.
        assert!(coll.egd_equivalence_check(1.0, 1).unwrap() <= 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let risks = Array1::from_shape_fn(20, |_| rng.random_range(0.0..1.0));
        let coll20 = collection(risks, None);
        let dev = coll20.egd_equivalence_check(0.37, 113).unwrap();
        assert!(dev <= 1e-10, "deviation {dev}");

        // Linear loss admits arbitrarily large steps.
        let dev_big = coll20.egd_equivalence_check(250.0, 3).unwrap();
        assert!(dev_big <= 1e-10);
    }

    #[test]
    fn gap_bounds_hold_on_desk_instance() {
        let empirical = array![0.42, 0.61];
        let population = array![0.45, 0.55];
        let coll = collection(empirical, Some(population));
        let refs = [
            array![1.0, 0.0],
            array![0.0, 1.0],
            array![0.5, 0.5],
            array![0.8, 0.2],
        ];
        for lambda in [0.05, 0.3, 1.0, 4.0] {
            let gibbs = coll.gibbs_posterior(lambda).unwrap();
            let egd_weights = gibbs.clone(); // identical weights by equivalence
            for reference in &refs {
                let gap_g = coll.expected_risk(gibbs.view()).unwrap()
                    - coll.expected_risk(reference.view()).unwrap();
                let rhs_g = coll
                    .risk_gap_bound(WeightsKind::Gibbs, lambda, reference.view())
                    .unwrap();
                assert!(gap_g <= rhs_g + 1e-12);

                let gap_e = coll.expected_risk(egd_weights.view()).unwrap()
                    - coll.expected_risk(reference.view()).unwrap();
                let rhs_e = coll
                    .risk_gap_bound(WeightsKind::Egd, lambda, reference.view())
                    .unwrap();
                assert!(gap_e <= rhs_e + 1e-12);
            }
        }
    }

    #[test]
    fn gap_bound_with_exact_empirical_risks() {
        let risks = array![0.3, 0.6, 0.1];
        let coll = collection(risks.clone(), Some(risks));
        let reference = array![0.2, 0.2, 0.6];
        let lambda = 0.7;
        let rhs = coll
            .risk_gap_bound(WeightsKind::Gibbs, lambda, reference.view())
            .unwrap();
        let expected = 2.0 * lambda * coll.kl_to_prior(reference.view()).unwrap();
        assert!((rhs - expected).abs() < 1e-14);
    }

    #[test]
    fn hoeffding_formulas() {
        // C = 1, n = 100, |B| = 2, delta = log 2, b = 1: lambda = 0.5 sqrt(log 8 / 100).
        let (lambda, bound) = hoeffding_lambda(1.0, 100, 2, 2.0f64.ln(), 1.0).unwrap();
        let expect = 0.5 * (8.0f64.ln() / 100.0).sqrt();
        assert!((lambda - expect).abs() < 1e-15);
        assert!((bound - 2.0 * (8.0f64.ln() / 100.0).sqrt()).abs() < 1e-15);

        // Doubling C doubles both.
        let (l2, b2) = hoeffding_lambda(2.0, 100, 2, 2.0f64.ln(), 1.0).unwrap();
        assert!((l2 - 2.0 * lambda).abs() < 1e-15);
        assert!((b2 - 2.0 * bound).abs() < 1e-15);
    }

    #[test]
    fn kl_ball_min_is_feasible_and_beats_candidates() {
        let costs = array![0.9f64, 0.4, 0.7, 0.2];
        let prior = Array1::from_elem(4, 0.25);
        for budget in [0.01, 0.2, 1.0] {
            let (theta, value) = kl_ball_linear_min(costs.view(), prior.view(), budget).unwrap();
            let kl = NegativeEntropySimplex
                .divergence(theta.view(), prior.view())
                .unwrap();
            assert!(kl <= budget + 1e-6, "kl {kl} budget {budget}");
            assert!((theta.sum() - 1.0).abs() < 1e-10);
            // Beats the prior and any feasible Gibbs tilt we try.
            assert!(value <= costs.dot(&prior) + 1e-12);
            for temp in [0.05, 0.2, 1.0, 5.0] {
                let mut w = Array1::from_shape_fn(4, |i| prior[i] * (-costs[i] / temp).exp());
                let s = w.sum();
                w.mapv_inplace(|v| v / s);
                let w_kl = NegativeEntropySimplex
                    .divergence(w.view(), prior.view())
                    .unwrap();
                if w_kl <= budget {
                    assert!(value <= costs.dot(&w) + 1e-6);
                }
            }
        }
        // A generous budget returns the point mass on the best model.
        let (theta, value) = kl_ball_linear_min(costs.view(), prior.view(), 10.0).unwrap();
        assert!((value - 0.2).abs() < 1e-12);
        assert!((theta[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hoeffding_coverage_small() {
        let population = array![0.2, 0.35, 0.5, 0.65, 0.8];
        let report = hoeffding_coverage_mc(&population, 60, 0.5, 2.0, 500, 11).unwrap();
        assert!(report.passes(), "rate {} target {}", report.rate, report.target);
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        assert!(ModelCollection::<f64>::new(array![], None, None).is_err());
        assert!(
            ModelCollection::<f64>::new(array![0.1], None, Some(array![0.9])).is_err()
        );
        assert!(ModelCollection::<f64>::new(
            array![0.1, 0.2],
            Some(array![0.1]),
            None
        )
        .is_err());
        let coll = collection(array![0.5, 0.5], None);
        assert!(coll.gibbs_posterior(0.0).is_err());
        assert!(coll.expected_risk(array![0.5, 0.5].view()).is_err());
    }
}
