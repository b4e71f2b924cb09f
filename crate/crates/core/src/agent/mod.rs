//! Dueling double-DQN with multi-step returns, built from scratch on flat
//! parameter buffers.

pub mod adam;
pub mod checkpoint;
pub mod dqn;
pub mod net;
pub mod replay;
pub mod schedule;

pub use dqn::{act_epsilon_greedy, double_q_target, greedy_action, loss_and_grads, DqnAgent};
pub use net::{q_forward, DuelingNet, ForwardCache, LayerSpec, Layout, NetShape};
pub use replay::{n_step_return, NStepRecord, ReplayBuffer};
pub use schedule::ExplorationSchedule;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Learning hyperparameters. Exploration lives in [`ExplorationSchedule`];
/// per-environment overrides are applied at configuration level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Target-network sync period in train steps.
    pub sync_period: u64,
    pub gamma: f64,
    pub n_step: usize,
    pub buffer_capacity: usize,
    pub huber_delta: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 64,
            sync_period: 500,
            gamma: 0.99,
            n_step: 3,
            buffer_capacity: 100_000,
            huber_delta: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.huber_delta > 0.0) {
            return Err(Error::Config("learning rate and huber delta must be positive".into()));
        }
        if self.batch_size == 0 || self.sync_period == 0 || self.n_step == 0 || self.buffer_capacity == 0 {
            return Err(Error::Config("batch size, sync period, n_step and buffer capacity must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config("gamma must lie in (0, 1]".into()));
        }
        Ok(())
    }
}
