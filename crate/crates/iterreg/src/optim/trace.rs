//! Iterate traces: the recorded sequence of (t, tau, objective, theta).

use super::schedule::StepSchedule;
use crate::geometry::GeometryKind;
use crate::{c, Scalar};
use ndarray::Array1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgorithmTag {
    Gd,
    ProjectedGd,
    Egd,
    MirrorDescent(GeometryKind),
    Ista,
    NoLips,
}

impl AlgorithmTag {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmTag::Gd => "gd",
            AlgorithmTag::ProjectedGd => "projected_gd",
            AlgorithmTag::Egd => "egd",
            AlgorithmTag::MirrorDescent(GeometryKind::Euclidean) => "md_euclidean",
            AlgorithmTag::MirrorDescent(GeometryKind::NegativeEntropySimplex) => "md_entropy",
            AlgorithmTag::MirrorDescent(GeometryKind::BurgPositiveOrthant) => "md_burg",
            AlgorithmTag::Ista => "ista",
            AlgorithmTag::NoLips => "nolips",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TraceRecord<F: Scalar = f64> {
    pub t: usize,
    pub tau: F,
    pub objective: F,
    pub theta: Array1<F>,
}

/// Recorded optimizer run. Always contains t = 0 and the final iterate;
/// intermediate iterates are kept densely for t <= 100 and from then on at
/// roughly 1% multiplicative growth in tau, plus every phase boundary.
#[derive(Debug, Clone)]
pub struct IterateTrace<F: Scalar = f64> {
    pub algorithm: AlgorithmTag,
    pub schedule: StepSchedule<F>,
    pub records: Vec<TraceRecord<F>>,
}

impl<F: Scalar> IterateTrace<F> {
    pub fn final_record(&self) -> &TraceRecord<F> {
        self.records.last().expect("trace always has t = 0")
    }

    pub fn initial_theta(&self) -> &Array1<F> {
        &self.records[0].theta
    }

    /// First index pair violating monotone descent beyond `tol`, if any.
    pub fn descent_violation(&self, tol: F) -> Option<(usize, F)> {
        for w in self.records.windows(2) {
            let increase = w[1].objective - w[0].objective;
            if increase > tol {
                return Some((w[1].t, increase));
            }
        }
        None
    }

    /// Recorded tau values agree with the schedule's prefix sums.
    pub fn tau_consistent(&self, tol: F) -> bool {
        self.records
            .iter()
            .all(|r| (r.tau - self.schedule.accumulated(r.t)).abs() <= tol)
    }
}

/// Recording policy shared by all runners.
pub(super) struct Recorder<F: Scalar> {
    boundaries: Vec<usize>,
    total: usize,
    last_tau: Option<F>,
    dense_until: usize,
    growth: F,
}

impl<F: Scalar> Recorder<F> {
    pub(super) fn new(schedule: &StepSchedule<F>) -> Self {
        Recorder {
            boundaries: schedule.phase_boundaries(),
            total: schedule.total_iterations(),
            last_tau: None,
            dense_until: 100,
            growth: c::<F>(1.01),
        }
    }

    pub(super) fn should_record(&self, t: usize, tau: F) -> bool {
        if t == 0 || t == self.total || t <= self.dense_until {
            return true;
        }
        if self.boundaries.binary_search(&t).is_ok() {
            return true;
        }
        match self.last_tau {
            None => true,
            Some(last) => tau >= last * self.growth,
        }
    }

    pub(super) fn mark(&mut self, tau: F) {
        self.last_tau = Some(tau);
    }
}
