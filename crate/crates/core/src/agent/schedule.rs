//! Exponentially decaying epsilon-greedy schedule:
//! `eps(t) = eps_end + (eps_start - eps_end) * exp(-t / decay_rate)`.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplorationSchedule<F> {
    pub eps_start: F,
    pub eps_end: F,
    pub decay_rate: F,
    pub step: u64,
}

impl<F: Real> ExplorationSchedule<F> {
    pub fn new(eps_start: F, eps_end: F, decay_rate: F) -> Result<Self> {
        if !(eps_end >= F::zero() && eps_end <= eps_start && eps_start <= F::one()) {
            return Err(Error::Config("require 0 <= eps_end <= eps_start <= 1".into()));
        }
        if !(decay_rate > F::zero()) {
            return Err(Error::Config("decay rate must be positive".into()));
        }
        Ok(ExplorationSchedule { eps_start, eps_end, decay_rate, step: 0 })
    }

    pub fn eps_at(&self, t: u64) -> F {
        self.eps_end + (self.eps_start - self.eps_end) * (-F::of(t as f64) / self.decay_rate).exp()
    }

    /// Epsilon for the current step, then advance the step counter.
    pub fn update_epsilon(&mut self) -> F {
        let eps = self.eps_at(self.step);
        self.step += 1;
        eps
    }
}
