//! Experience replay with multi-step staging: raw transitions enter a small
//! queue and leave as n-step records carrying the discounted reward sum, the
//! bootstrap state n steps ahead and the number of rewards actually used
//! (fewer than n only at episode end).

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::mdp::{Action, Transition};
use crate::scalar::Real;

/// Discounted multi-step return: `sum_j gamma^j r_j`, plus
/// `gamma^k * bootstrap` unless the trajectory terminated within the window.
pub fn n_step_return<F: Real>(rewards: &[F], gamma: F, bootstrap: F, terminated: bool) -> Result<F> {
    if rewards.is_empty() {
        return Err(Error::Usage("n-step return needs at least one reward".into()));
    }
    let mut g = F::zero();
    let mut discount = F::one();
    for &r in rewards {
        g = g + discount * r;
        discount = discount * gamma;
    }
    if !terminated {
        g = g + discount * bootstrap;
    }
    Ok(g)
}

/// An assembled n-step record. `return_g` excludes the bootstrap term;
/// `steps` is the number of rewards summed into it.
#[derive(Debug, Clone, PartialEq)]
pub struct NStepRecord<F> {
    pub state: Vec<F>,
    pub action: Action,
    pub return_g: F,
    pub steps: u32,
    pub next_state: Vec<F>,
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer<F> {
    capacity: usize,
    records: Vec<NStepRecord<F>>,
    write_pos: usize,
    staging: VecDeque<Transition<F>>,
    gamma: F,
    n: usize,
}

impl<F: Real> ReplayBuffer<F> {
    pub fn new(capacity: usize, gamma: F, n: usize) -> Result<Self> {
        if capacity == 0 || n == 0 {
            return Err(Error::Config("replay capacity and n must be positive".into()));
        }
        Ok(ReplayBuffer {
            capacity,
            records: Vec::new(),
            write_pos: 0,
            staging: VecDeque::with_capacity(n),
            gamma,
            n,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[NStepRecord<F>] {
        &self.records
    }

    /// Stage a transition; emits the record for the oldest staged transition
    /// once `n` rewards are available, and flushes all partial records when
    /// the episode ends.
    pub fn push(&mut self, t: Transition<F>) {
        let done = t.done;
        self.staging.push_back(t);
        if self.staging.len() == self.n {
            self.emit_front();
        }
        if done {
            while !self.staging.is_empty() {
                self.emit_front();
            }
        }
    }

    fn emit_front(&mut self) {
        let rewards: Vec<F> = self.staging.iter().map(|t| t.reward).collect();
        let return_g = n_step_return(&rewards, self.gamma, F::zero(), true).expect("staging non-empty");
        let last = self.staging.back().expect("staging non-empty");
        let record = NStepRecord {
            state: self.staging.front().unwrap().state.clone(),
            action: self.staging.front().unwrap().action,
            return_g,
            steps: rewards.len() as u32,
            next_state: last.next_state.clone(),
            done: last.done,
        };
        self.staging.pop_front();
        self.store(record);
    }

    fn store(&mut self, record: NStepRecord<F>) {
        if self.records.len() < self.capacity {
            self.records.push(record);
        } else {
            self.records[self.write_pos] = record;
        }
        self.write_pos = (self.write_pos + 1) % self.capacity;
    }

    /// Uniform sample with replacement.
    pub fn sample(&self, batch_size: usize, rng: &mut ChaCha8Rng) -> Result<Vec<NStepRecord<F>>> {
        if self.records.is_empty() {
            return Err(Error::Usage("cannot sample from an empty replay buffer".into()));
        }
        Ok((0..batch_size)
            .map(|_| self.records[rng.gen_range(0..self.records.len())].clone())
            .collect())
    }
}
