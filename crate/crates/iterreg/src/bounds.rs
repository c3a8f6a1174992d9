//! Basic-inequality bounds, their verification along recorded traces, and the
//! training-envelope sandwiches.
//!
//! The central quantity is the per-iterate bound
//! `f(theta_T) - f(z) <= (D(z, theta_0) - D(z, theta_T)) / tau_T`
//! for a geometry's Bregman divergence D (halved squared distance in the
//! Euclidean case, where the right-hand side reads
//! `(||theta_0 - z||^2 - ||theta_T - z||^2) / (2 tau_T)`).

use crate::geometry::BregmanGeometry;
use crate::linalg::{norm1, norm2, project_simplex};
use crate::optim::{IterateTrace, Objective};
use crate::{c, Error, Result, Scalar};
use ndarray::{Array1, ArrayView1};

/// Right-hand side of the gradient-descent basic inequality:
/// `(||theta0 - z||^2 - ||thetaT - z||^2) / (2 tau)`. May be negative.
pub fn gd_bound<F: Scalar>(
    theta0: ArrayView1<F>,
    theta_t: ArrayView1<F>,
    z: ArrayView1<F>,
    tau: F,
) -> Result<F> {
    if tau <= F::zero() {
        return Err(Error::invalid("tau must be positive"));
    }
    let a = norm2((&theta0.to_owned() - &z.to_owned()).view());
    let b = norm2((&theta_t.to_owned() - &z.to_owned()).view());
    Ok((a * a - b * b) / (c::<F>(2.0) * tau))
}

/// Right-hand side of the mirror-descent basic inequality:
/// `(D(z, theta0) - D(z, thetaT)) / tau`.
pub fn md_bound<F: Scalar>(
    geometry: &impl BregmanGeometry<F>,
    theta0: ArrayView1<F>,
    theta_t: ArrayView1<F>,
    z: ArrayView1<F>,
    tau: F,
) -> Result<F> {
    if tau <= F::zero() {
        return Err(Error::invalid("tau must be positive"));
    }
    let d0 = geometry.divergence(z, theta0)?;
    let dt = geometry.divergence(z, theta_t)?;
    Ok((d0 - dt) / tau)
}

/// Bregman divergence of the given geometry (free-function form).
pub fn divergence<F: Scalar>(
    geometry: &impl BregmanGeometry<F>,
    u: ArrayView1<F>,
    v: ArrayView1<F>,
) -> Result<F> {
    geometry.divergence(u, v)
}

/// One verified (T, z) pair: lhs = f(theta_T) - f(z), rhs the basic-inequality
/// bound, gap = rhs - lhs.
#[derive(Debug, Clone)]
pub struct LedgerRow<F: Scalar = f64> {
    pub t: usize,
    pub tau: F,
    pub z_id: usize,
    pub lhs: F,
    pub rhs: F,
    pub gap: F,
}

/// Every (recorded T, reference point) pair of a verification run. Gaps are
/// reported in absolute terms; the inequality itself demands gap >= 0 up to
/// floating accumulation.
#[derive(Debug, Clone)]
pub struct BoundLedger<F: Scalar = f64> {
    pub rows: Vec<LedgerRow<F>>,
}

impl<F: Scalar> BoundLedger<F> {
    pub fn min_gap(&self) -> Option<&LedgerRow<F>> {
        self.rows
            .iter()
            .min_by(|a, b| a.gap.partial_cmp(&b.gap).unwrap_or(std::cmp::Ordering::Equal))
    }

    pub fn passes(&self, tol: F) -> bool {
        self.rows.iter().all(|r| r.gap >= -tol)
    }

    pub fn violations(&self, tol: F) -> Vec<&LedgerRow<F>> {
        self.rows.iter().filter(|r| r.gap < -tol).collect()
    }
}

/// Evaluate the basic inequality at every recorded T > 0 of a trace against
/// each reference point. A violation is a ledger outcome, not an error.
///
/// `objective` must be the function the inequality speaks about: the
/// composite objective for ISTA traces, the loss itself elsewhere.
pub fn verify_trace<F: Scalar>(
    trace: &IterateTrace<F>,
    objective: impl Fn(ArrayView1<F>) -> Result<F>,
    geometry: &impl BregmanGeometry<F>,
    reference_points: &[Array1<F>],
) -> Result<BoundLedger<F>> {
    let theta0 = trace.initial_theta();
    let f_z: Vec<F> = reference_points
        .iter()
        .map(|z| objective(z.view()))
        .collect::<Result<_>>()?;
    let d0: Vec<F> = reference_points
        .iter()
        .map(|z| geometry.divergence(z.view(), theta0.view()))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for record in trace.records.iter().filter(|r| r.t > 0) {
        let f_t = objective(record.theta.view())?;
        for (z_id, z) in reference_points.iter().enumerate() {
            let dt = geometry.divergence(z.view(), record.theta.view())?;
            let rhs = (d0[z_id] - dt) / record.tau;
            let lhs = f_t - f_z[z_id];
            rows.push(LedgerRow {
                t: record.t,
                tau: record.tau,
                z_id,
                lhs,
                rhs,
                gap: rhs - lhs,
            });
        }
    }
    Ok(BoundLedger { rows })
}

/// The envelope sandwich at a given T for Euclidean-geometry runs, with
/// `lambda = 1 / tau_T`:
/// `min_z f(z) + (lambda/4) ||theta0 - z||^2  <=  f(theta_T) + (lambda/4)
/// ||theta0 - theta_T||^2  <=  min_z f(z) + lambda ||theta0 - z||^2`.
#[derive(Debug, Clone, Copy)]
pub struct EnvelopeTriple<F: Scalar = f64> {
    pub lambda: F,
    pub lower: F,
    pub mid: F,
    pub upper: F,
}

impl<F: Scalar> EnvelopeTriple<F> {
    pub fn ordered(&self, tol: F) -> bool {
        self.lower <= self.mid + tol && self.mid <= self.upper + tol
    }
}

/// Evaluate the gradient-descent envelope at trace record `record_index`.
///
/// `penalized_min(c)` must return the minimum of `f(z) + c ||theta0 - z||^2`
/// over the domain (a ridge solve for GLM losses); solver failures propagate.
pub fn envelope_gd<F: Scalar>(
    objective: impl Fn(ArrayView1<F>) -> Result<F>,
    trace: &IterateTrace<F>,
    record_index: usize,
    mut penalized_min: impl FnMut(F) -> Result<F>,
) -> Result<EnvelopeTriple<F>> {
    let record = trace
        .records
        .get(record_index)
        .ok_or_else(|| Error::invalid("record index out of range"))?;
    if record.tau <= F::zero() {
        return Err(Error::invalid("envelope needs tau > 0; pick a record with t > 0"));
    }
    let lambda = F::one() / record.tau;
    let quarter = lambda / c::<F>(4.0);
    let dist = norm2((&record.theta - trace.initial_theta()).view());
    let mid = objective(record.theta.view())? + quarter * dist * dist;
    let lower = penalized_min(quarter)?;
    let upper = penalized_min(lambda)?;
    Ok(EnvelopeTriple {
        lambda,
        lower,
        mid,
        upper,
    })
}

/// Penalty forms on the right-hand side of the EGD envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EgdPenaltyForm {
    /// ((d+1)/2) ||pi - z||_1^2
    Quadratic,
    /// (1/2) ||pi - z||_1^2 + (log(d)/2) ||pi - z||_1
    Mixed,
}

/// The EGD envelope at a given T:
/// `f(theta_T) + (lambda/4) ||pi - theta_T||_1^2 <= min_z f(z) + lambda *
/// penalty(z)` for both penalty forms.
///
/// The effective coefficient is taken as `lambda = 1 / tau_T`, matching the
/// gradient-descent convention; an `eta * T` convention appears in some
/// statements of this bound but grows without bound in T, which would make
/// the left-hand side exceed any fixed right-hand side, so it is not used
/// here.
#[derive(Debug, Clone, Copy)]
pub struct EgdEnvelope<F: Scalar = f64> {
    pub lambda: F,
    pub lhs: F,
    pub rhs_quadratic: F,
    pub rhs_mixed: F,
}

impl<F: Scalar> EgdEnvelope<F> {
    pub fn holds(&self, tol: F) -> bool {
        self.lhs <= self.rhs_quadratic + tol && self.lhs <= self.rhs_mixed + tol
    }
}

pub fn envelope_egd<F: Scalar>(
    objective: impl Fn(ArrayView1<F>) -> Result<F>,
    trace: &IterateTrace<F>,
    record_index: usize,
    mut penalized_min: impl FnMut(EgdPenaltyForm, F) -> Result<F>,
) -> Result<EgdEnvelope<F>> {
    let record = trace
        .records
        .get(record_index)
        .ok_or_else(|| Error::invalid("record index out of range"))?;
    if record.tau <= F::zero() {
        return Err(Error::invalid("envelope needs tau > 0; pick a record with t > 0"));
    }
    let lambda = F::one() / record.tau;
    let pi = trace.initial_theta();
    let dist = norm1((&record.theta - pi).view());
    let lhs = objective(record.theta.view())? + lambda / c::<F>(4.0) * dist * dist;
    let rhs_quadratic = penalized_min(EgdPenaltyForm::Quadratic, lambda)?;
    let rhs_mixed = penalized_min(EgdPenaltyForm::Mixed, lambda)?;
    Ok(EgdEnvelope {
        lambda,
        lhs,
        rhs_quadratic,
        rhs_mixed,
    })
}

/// Approximate `min_z f(z) + lambda * penalty(||pi - z||_1)` over the simplex
/// by projected subgradient descent from several starts, keeping the best
/// visited value. Used for the EGD envelope right-hand sides, where the
/// penalty is non-smooth; overestimating the minimum only loosens the bound
/// being checked.
pub fn minimize_penalized_simplex<F: Scalar>(
    objective: &impl Objective<F>,
    anchor: ArrayView1<F>,
    form: EgdPenaltyForm,
    lambda: F,
    extra_starts: &[Array1<F>],
    iterations: usize,
) -> Result<(Array1<F>, F)> {
    let d = anchor.len();
    let df = c::<F>(d as f64);
    let penalty = |z: ArrayView1<F>| -> F {
        let r = norm1((&z.to_owned() - &anchor.to_owned()).view());
        match form {
            EgdPenaltyForm::Quadratic => (df + F::one()) / c::<F>(2.0) * r * r,
            EgdPenaltyForm::Mixed => r * r / c::<F>(2.0) + df.ln() / c::<F>(2.0) * r,
        }
    };
    let total = |z: ArrayView1<F>| -> Result<F> { Ok(objective.value(z)? + lambda * penalty(z)) };

    let mut starts: Vec<Array1<F>> = vec![anchor.to_owned()];
    starts.extend(extra_starts.iter().cloned());

    let mut best_z = anchor.to_owned();
    let mut best_v = total(anchor)?;
    for start in starts {
        let mut z = project_simplex(start.view());
        // Nudge off the exact boundary so the objective stays evaluable.
        let floor = c::<F>(1e-12);
        z.mapv_inplace(|x| x.max(floor));
        let zsum = z.sum();
        z.mapv_inplace(|x| x / zsum);

        let step0 = F::one() / (F::one() + lambda) / df.sqrt();
        for k in 0..iterations {
            let v = total(z.view())?;
            if v < best_v {
                best_v = v;
                best_z = z.clone();
            }
            let g_f = objective.gradient(z.view())?;
            let r = norm1((&z - &anchor.to_owned()).view());
            let pen_scale = match form {
                EgdPenaltyForm::Quadratic => (df + F::one()) * r,
                EgdPenaltyForm::Mixed => r + df.ln() / c::<F>(2.0),
            };
            let sub = Array1::from_shape_fn(d, |i| {
                let s = (z[i] - anchor[i]).signum();
                g_f[i] + lambda * pen_scale * s
            });
            let step = step0 / c::<F>(((k + 1) as f64).sqrt());
            let moved = Array1::from_shape_fn(d, |i| z[i] - step * sub[i]);
            z = project_simplex(moved.view());
        }
        let v = total(z.view())?;
        if v < best_v {
            best_v = v;
            best_z = z;
        }
    }
    Ok((best_z, best_v))
}
