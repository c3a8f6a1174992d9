//! Pluggable Bregman geometries: potential, gradient, divergence, and the
//! closed-form mirror-descent step for each shipped geometry.
//!
//! Three geometries ship: the Euclidean geometry (optionally constrained to a
//! centered ball), negative entropy on the probability simplex, and the Burg
//! entropy on the positive orthant (not strongly convex; used by NoLips).

use crate::linalg::{norm1, norm2};
use crate::{c, Error, Result, Scalar};
use ndarray::{Array1, ArrayView1};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryKind {
    Euclidean,
    NegativeEntropySimplex,
    BurgPositiveOrthant,
}

/// A (phi, grad phi, D_phi, step) bundle of Legendre type.
///
/// `divergence(u, v)` requires `v` strictly inside the domain; `u` may touch
/// the boundary (conventions per geometry). `step` performs one mirror-descent
/// update in closed form, including the Bregman projection onto the
/// constraint set.
pub trait BregmanGeometry<F: Scalar> {
    fn kind(&self) -> GeometryKind;

    fn potential(&self, u: ArrayView1<F>) -> Result<F>;

    fn potential_gradient(&self, v: ArrayView1<F>) -> Result<Array1<F>>;

    /// D_phi(u, v) = phi(u) - phi(v) - <grad phi(v), u - v>.
    fn divergence(&self, u: ArrayView1<F>, v: ArrayView1<F>) -> Result<F> {
        let gv = self.potential_gradient(v)?;
        let diff = &u.to_owned() - &v.to_owned();
        Ok(self.potential(u)? - self.potential(v)? - gv.dot(&diff))
    }

    /// Strong convexity modulus with respect to the geometry's norm, when the
    /// potential has one (`None` for Burg entropy).
    fn strong_convexity(&self) -> Option<F>;

    /// Norm with respect to which smoothness/strong convexity are measured.
    fn norm(&self, v: ArrayView1<F>) -> F;

    /// One mirror-descent step from `theta` against gradient `grad` with step
    /// size `eta`: argmin over the constraint set of
    /// `eta <grad, u> + D_phi(u, theta)`.
    fn step(&self, theta: ArrayView1<F>, grad: ArrayView1<F>, eta: F) -> Result<Array1<F>>;

    /// Whether `u` lies in the constraint set (up to `tol`).
    fn in_constraint(&self, u: ArrayView1<F>, tol: F) -> bool;

    /// Whether `u` is strictly inside the potential's domain.
    fn in_interior(&self, u: ArrayView1<F>) -> bool;
}

/// Squared-Euclidean potential, optionally constrained to the origin-centered
/// ball of a given radius. D_phi(u,v) = ||u-v||^2 / 2.
#[derive(Debug, Clone, Copy)]
pub struct Euclidean<F: Scalar = f64> {
    pub radius: Option<F>,
}

impl<F: Scalar> Euclidean<F> {
    pub fn unconstrained() -> Self {
        Euclidean { radius: None }
    }

    pub fn ball(radius: F) -> Self {
        Euclidean {
            radius: Some(radius),
        }
    }
}

/// Euclidean projection onto the centered ball of radius `b`.
pub fn project_ball<F: Scalar>(v: ArrayView1<F>, b: F) -> Array1<F> {
    let n = norm2(v);
    if n <= b {
        v.to_owned()
    } else {
        let scale = b / n;
        v.mapv(|x| x * scale)
    }
}

impl<F: Scalar> BregmanGeometry<F> for Euclidean<F> {
    fn kind(&self) -> GeometryKind {
        GeometryKind::Euclidean
    }

    fn potential(&self, u: ArrayView1<F>) -> Result<F> {
        Ok(u.iter().map(|&x| x * x).sum::<F>() / c::<F>(2.0))
    }

    fn potential_gradient(&self, v: ArrayView1<F>) -> Result<Array1<F>> {
        Ok(v.to_owned())
    }

    fn divergence(&self, u: ArrayView1<F>, v: ArrayView1<F>) -> Result<F> {
        if u.len() != v.len() {
            return Err(Error::DimensionMismatch {
                context: "euclidean divergence",
                expected: u.len(),
                got: v.len(),
            });
        }
        let two = c::<F>(2.0);
        Ok(u.iter()
            .zip(v.iter())
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<F>()
            / two)
    }

    fn strong_convexity(&self) -> Option<F> {
        Some(F::one())
    }

    fn norm(&self, v: ArrayView1<F>) -> F {
        norm2(v)
    }

    fn step(&self, theta: ArrayView1<F>, grad: ArrayView1<F>, eta: F) -> Result<Array1<F>> {
        let mut next = Array1::from_shape_fn(theta.len(), |i| theta[i] - eta * grad[i]);
        if let Some(b) = self.radius {
            next = project_ball(next.view(), b);
        }
        Ok(next)
    }

    fn in_constraint(&self, u: ArrayView1<F>, tol: F) -> bool {
        match self.radius {
            Some(b) => norm2(u) <= b + tol,
            None => true,
        }
    }

    fn in_interior(&self, _u: ArrayView1<F>) -> bool {
        true
    }
}

/// Negative entropy on the probability simplex; D_phi is the KL divergence.
/// 1-strongly convex with respect to the l1 norm by Pinsker's inequality.
#[derive(Debug, Clone, Copy, Default)]
pub struct NegativeEntropySimplex;

/// Coordinate floor applied after the multiplicative update so iterates never
/// underflow out of the simplex interior.
fn entropy_floor<F: Scalar>() -> F {
    c::<F>(1e-300).max(F::min_positive_value())
}

impl<F: Scalar> BregmanGeometry<F> for NegativeEntropySimplex {
    fn kind(&self) -> GeometryKind {
        GeometryKind::NegativeEntropySimplex
    }

    fn potential(&self, u: ArrayView1<F>) -> Result<F> {
        let mut s = F::zero();
        for &x in u.iter() {
            if x < F::zero() {
                return Err(Error::DomainViolation {
                    context: "negative entropy: negative coordinate",
                    iteration: None,
                });
            }
            if x > F::zero() {
                s = s + x * x.ln();
            }
        }
        Ok(s)
    }

    fn potential_gradient(&self, v: ArrayView1<F>) -> Result<Array1<F>> {
        if !self.in_interior(v) {
            return Err(Error::DomainViolation {
                context: "negative entropy gradient on boundary",
                iteration: None,
            });
        }
        Ok(v.mapv(|x| x.ln() + F::one()))
    }

    /// KL divergence with the 0 log 0 = 0 convention on `u`; returns +inf
    /// when some u_i > 0 sits over v_i = 0 only if `v` slipped past the
    /// interior check (v must be strictly positive).
    fn divergence(&self, u: ArrayView1<F>, v: ArrayView1<F>) -> Result<F> {
        if u.len() != v.len() {
            return Err(Error::DimensionMismatch {
                context: "kl divergence",
                expected: u.len(),
                got: v.len(),
            });
        }
        if !self.in_interior(v) {
            return Err(Error::DomainViolation {
                context: "kl divergence: second argument on simplex boundary",
                iteration: None,
            });
        }
        let mut s = F::zero();
        for (&ui, &vi) in u.iter().zip(v.iter()) {
            if ui > F::zero() {
                s = s + ui * (ui / vi).ln();
            }
        }
        Ok(s)
    }

    fn strong_convexity(&self) -> Option<F> {
        Some(F::one())
    }

    fn norm(&self, v: ArrayView1<F>) -> F {
        norm1(v)
    }

    /// Multiplicative update with max-subtraction: theta_i e^{-(eta g_i - m)}
    /// renormalized, where m = min_i eta g_i. The shift cancels in the
    /// normalization and keeps the largest factor at exactly one.
    fn step(&self, theta: ArrayView1<F>, grad: ArrayView1<F>, eta: F) -> Result<Array1<F>> {
        let d = theta.len();
        let m = grad
            .iter()
            .fold(F::infinity(), |acc, &g| acc.min(eta * g));
        let floor = entropy_floor::<F>();
        let mut next = Array1::from_shape_fn(d, |i| {
            let w = theta[i] * (-(eta * grad[i] - m)).exp();
            w.max(floor)
        });
        let total = next.iter().copied().sum::<F>();
        if !total.is_finite() || total <= F::zero() {
            return Err(Error::NonFinite("entropy step normalizer"));
        }
        next.mapv_inplace(|x| x / total);
        // Renormalized coordinates may still underflow; floor once more and
        // re-divide so the simplex sum stays exact to rounding.
        let refloor = next.iter().any(|&x| x < floor);
        if refloor {
            next.mapv_inplace(|x| x.max(floor));
            let t2 = next.iter().copied().sum::<F>();
            next.mapv_inplace(|x| x / t2);
        }
        Ok(next)
    }

    fn in_constraint(&self, u: ArrayView1<F>, tol: F) -> bool {
        u.iter().all(|&x| x >= -tol) && (u.sum() - F::one()).abs() <= tol
    }

    fn in_interior(&self, u: ArrayView1<F>) -> bool {
        u.iter().all(|&x| x > F::zero())
    }
}

/// Burg entropy phi(u) = -sum log u_i on the positive orthant. Not strongly
/// convex; valid for NoLips-style relative smoothness arguments.
#[derive(Debug, Clone, Copy, Default)]
pub struct BurgPositiveOrthant;

impl<F: Scalar> BregmanGeometry<F> for BurgPositiveOrthant {
    fn kind(&self) -> GeometryKind {
        GeometryKind::BurgPositiveOrthant
    }

    fn potential(&self, u: ArrayView1<F>) -> Result<F> {
        if !self.in_interior(u) {
            return Err(Error::DomainViolation {
                context: "burg potential outside positive orthant",
                iteration: None,
            });
        }
        Ok(-u.iter().map(|&x| x.ln()).sum::<F>())
    }

    fn potential_gradient(&self, v: ArrayView1<F>) -> Result<Array1<F>> {
        if !self.in_interior(v) {
            return Err(Error::DomainViolation {
                context: "burg gradient outside positive orthant",
                iteration: None,
            });
        }
        Ok(v.mapv(|x| -F::one() / x))
    }

    /// D(u, v) = sum u_i/v_i - log(u_i/v_i) - 1, the Itakura-Saito form.
    fn divergence(&self, u: ArrayView1<F>, v: ArrayView1<F>) -> Result<F> {
        if u.len() != v.len() {
            return Err(Error::DimensionMismatch {
                context: "burg divergence",
                expected: u.len(),
                got: v.len(),
            });
        }
        if !self.in_interior(v) || !self.in_interior(u) {
            return Err(Error::DomainViolation {
                context: "burg divergence outside positive orthant",
                iteration: None,
            });
        }
        let mut s = F::zero();
        for (&ui, &vi) in u.iter().zip(v.iter()) {
            let r = ui / vi;
            s = s + r - r.ln() - F::one();
        }
        Ok(s)
    }

    fn strong_convexity(&self) -> Option<F> {
        None
    }

    fn norm(&self, v: ArrayView1<F>) -> F {
        norm2(v)
    }

    /// Coordinatewise closed form: 1/theta'_i = 1/theta_i + eta g_i, from the
    /// first-order condition of the Burg proximal subproblem. Fails when some
    /// coordinate would leave the positive orthant.
    fn step(&self, theta: ArrayView1<F>, grad: ArrayView1<F>, eta: F) -> Result<Array1<F>> {
        let mut next = Array1::zeros(theta.len());
        for i in 0..theta.len() {
            let inv = F::one() / theta[i] + eta * grad[i];
            if inv <= F::zero() || !inv.is_finite() {
                return Err(Error::DomainViolation {
                    context: "burg step left the positive orthant",
                    iteration: None,
                });
            }
            next[i] = F::one() / inv;
        }
        Ok(next)
    }

    fn in_constraint(&self, u: ArrayView1<F>, _tol: F) -> bool {
        u.iter().all(|&x| x > F::zero())
    }

    fn in_interior(&self, u: ArrayView1<F>) -> bool {
        u.iter().all(|&x| x > F::zero())
    }
}
