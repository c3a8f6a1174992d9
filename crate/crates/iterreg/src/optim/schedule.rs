//! Step-size schedules: ordered phases of (step size, iteration count).

use crate::{Error, Result, Scalar};

/// A piecewise-constant step-size schedule. The accumulated time after `t`
/// steps is the sum of the first `t` step sizes and is strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSchedule<F: Scalar = f64> {
    phases: Vec<(F, usize)>,
}

impl<F: Scalar> StepSchedule<F> {
    /// Build from (step size, count) phases. Counts must be at least one and
    /// step sizes strictly positive; an empty phase list means zero
    /// iterations.
    pub fn new(phases: Vec<(F, usize)>) -> Result<Self> {
        for &(eta, count) in &phases {
            if !(eta > F::zero()) || !eta.is_finite() {
                return Err(Error::invalid("step size must be positive and finite"));
            }
            if count == 0 {
                return Err(Error::invalid("phase iteration count must be >= 1"));
            }
        }
        Ok(StepSchedule { phases })
    }

    pub fn constant(eta: F, iterations: usize) -> Result<Self> {
        if iterations == 0 {
            Self::new(vec![])
        } else {
            Self::new(vec![(eta, iterations)])
        }
    }

    /// Parse the `"eta:count,eta:count,..."` wire format.
    pub fn parse(s: &str) -> Result<Self> {
        let mut phases = Vec::new();
        for part in s.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (eta_s, count_s) = part
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("schedule phase `{part}` missing `:`")))?;
            let eta: f64 = eta_s
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad step size `{eta_s}`")))?;
            let count: usize = count_s
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad iteration count `{count_s}`")))?;
            phases.push((crate::c::<F>(eta), count));
        }
        if phases.is_empty() {
            return Err(Error::Parse("empty schedule".into()));
        }
        Self::new(phases)
    }

    pub fn phases(&self) -> &[(F, usize)] {
        &self.phases
    }

    pub fn total_iterations(&self) -> usize {
        self.phases.iter().map(|&(_, c)| c).sum()
    }

    pub fn max_step(&self) -> F {
        self.phases
            .iter()
            .fold(F::zero(), |m, &(eta, _)| m.max(eta))
    }

    /// Step size used at iteration `t` (0-based).
    pub fn eta_at(&self, t: usize) -> Option<F> {
        let mut offset = 0usize;
        for &(eta, count) in &self.phases {
            if t < offset + count {
                return Some(eta);
            }
            offset += count;
        }
        None
    }

    /// Accumulated time tau_t = sum of the first `t` step sizes.
    pub fn accumulated(&self, t: usize) -> F {
        let mut remaining = t;
        let mut tau = F::zero();
        for &(eta, count) in &self.phases {
            let take = remaining.min(count);
            tau = tau + eta * crate::c::<F>(take as f64);
            remaining -= take;
            if remaining == 0 {
                break;
            }
        }
        tau
    }

    /// Iteration indices at which a phase ends (cumulative counts).
    pub fn phase_boundaries(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.phases.len());
        let mut acc = 0usize;
        for &(_, count) in &self.phases {
            acc += count;
            out.push(acc);
        }
        out
    }

    /// Iterate over per-step (t, eta_t, tau_{t+1}) triples.
    pub fn steps(&self) -> impl Iterator<Item = F> + '_ {
        self.phases
            .iter()
            .flat_map(|&(eta, count)| std::iter::repeat(eta).take(count))
    }

    pub fn to_spec_string(&self) -> String {
        self.phases
            .iter()
            .map(|&(eta, count)| format!("{}:{}", eta.to_f64().unwrap_or(f64::NAN), count))
            .collect::<Vec<_>>()
            .join(",")
    }
}
