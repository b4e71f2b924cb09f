//! The learning agent: online/target dueling networks, double-Q multi-step
//! targets, Huber loss with hand-rolled backpropagation and an Adam update.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mdp::Action;
use crate::scalar::Real;

use super::adam::Adam;
use super::net::{DuelingNet, NetShape};
use super::replay::{NStepRecord, ReplayBuffer};
use super::schedule::ExplorationSchedule;
use super::TrainConfig;

/// Greedy argmax with ties resolved to the lowest action index.
pub fn greedy_action<F: Real>(qvals: &[F]) -> Action {
    let mut best = 0usize;
    for (i, &q) in qvals.iter().enumerate() {
        if q > qvals[best] {
            best = i;
        }
    }
    Action::from_index(best)
}

/// With probability `1 - eps` the greedy action, otherwise uniform random.
pub fn act_epsilon_greedy<F: Real>(qvals: &[F], eps: F, rng: &mut ChaCha8Rng) -> Action {
    let u: f64 = rng.gen();
    if u < eps.to64() {
        Action::from_index(rng.gen_range(0..Action::COUNT))
    } else {
        greedy_action(qvals)
    }
}

/// Double-Q targets: `y = G + gamma^k * Q_target(s', argmax_a Q_online(s', a))`
/// for non-terminal records, `y = G` for terminal ones. `k` is each record's
/// own reward count.
pub fn double_q_target<F: Real>(
    batch: &[NStepRecord<F>],
    online: &DuelingNet<F>,
    target: &DuelingNet<F>,
    gamma: F,
) -> Result<Vec<F>> {
    let mut out = Vec::with_capacity(batch.len());
    for rec in batch {
        if rec.done {
            out.push(rec.return_g);
        } else {
            let q_online = online.forward(&rec.next_state)?;
            let a = greedy_action(&q_online).index();
            let q_target = target.forward(&rec.next_state)?;
            out.push(rec.return_g + gamma.powi(rec.steps as i32) * q_target[a]);
        }
    }
    Ok(out)
}

fn huber<F: Real>(e: F, delta: F) -> F {
    let abs = e.abs();
    if abs <= delta {
        F::of(0.5) * e * e
    } else {
        delta * (abs - F::of(0.5) * delta)
    }
}

fn huber_grad<F: Real>(e: F, delta: F) -> F {
    if e.abs() <= delta {
        e
    } else {
        delta * e.signum()
    }
}

/// Mean Huber loss of `Q(s, a)` against fixed targets, plus its gradient
/// with respect to every network parameter. Targets are treated as
/// constants, matching the semi-gradient update.
pub fn loss_and_grads<F: Real>(
    net: &DuelingNet<F>,
    batch: &[NStepRecord<F>],
    targets: &[F],
    huber_delta: F,
) -> Result<(F, Vec<F>)> {
    debug_assert_eq!(batch.len(), targets.len());
    let mut grads = vec![F::zero(); net.layout().total_params];
    let mut loss = F::zero();
    let scale = F::one() / F::of(batch.len() as f64);
    let actions = net.shape().actions;
    for (rec, &y) in batch.iter().zip(targets) {
        let cache = net.forward_cached(&rec.state)?;
        let a = rec.action.index();
        let e = cache.q[a] - y;
        loss = loss + huber(e, huber_delta);
        let mut dq = vec![F::zero(); actions];
        dq[a] = huber_grad(e, huber_delta) * scale;
        net.backward(&cache, &dq, &mut grads);
    }
    Ok((loss * scale, grads))
}

/// Online/target network pair with optimizer, replay and exploration state.
#[derive(Debug, Clone)]
pub struct DqnAgent<F> {
    pub online: DuelingNet<F>,
    pub target: DuelingNet<F>,
    pub replay: ReplayBuffer<F>,
    pub schedule: ExplorationSchedule<F>,
    pub cfg: TrainConfig,
    opt: Adam<F>,
    train_steps: u64,
}

impl<F: Real> DqnAgent<F> {
    pub fn new(
        shape: NetShape,
        cfg: TrainConfig,
        schedule: ExplorationSchedule<F>,
        init_rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        cfg.validate()?;
        let online = DuelingNet::init(shape, init_rng)?;
        Ok(Self::assemble(online, cfg, schedule))
    }

    /// Build an agent around existing parameters (transfer): both networks
    /// start as copies and the optimizer moments are reset.
    pub fn from_network(net: DuelingNet<F>, cfg: TrainConfig, schedule: ExplorationSchedule<F>) -> Result<Self> {
        cfg.validate()?;
        Ok(Self::assemble(net, cfg, schedule))
    }

    fn assemble(online: DuelingNet<F>, cfg: TrainConfig, schedule: ExplorationSchedule<F>) -> Self {
        let target = online.clone();
        let opt = Adam::new(online.layout().total_params, F::of(cfg.learning_rate));
        let replay = ReplayBuffer::new(cfg.buffer_capacity, F::of(cfg.gamma), cfg.n_step)
            .expect("validated config");
        DqnAgent { online, target, replay, schedule, cfg, opt, train_steps: 0 }
    }

    pub fn train_steps(&self) -> u64 {
        self.train_steps
    }

    /// Copy online parameters into the target network, bit-exactly.
    pub fn sync_target(&mut self) {
        self.target.copy_params_from(&self.online);
    }

    /// Epsilon-greedy action for `features`, advancing the exploration
    /// schedule by one step.
    pub fn select_action(&mut self, features: &[F], rng: &mut ChaCha8Rng) -> Result<Action> {
        let q = self.online.forward(features)?;
        let eps = self.schedule.update_epsilon();
        Ok(act_epsilon_greedy(&q, eps, rng))
    }

    /// One optimization step on `batch`: double-Q targets, Huber loss,
    /// backprop, Adam. Syncs the target network every `sync_period` calls.
    pub fn train_on_batch(&mut self, batch: &[NStepRecord<F>]) -> Result<F> {
        if batch.is_empty() {
            return Err(Error::Usage("training batch must be non-empty".into()));
        }
        let gamma = F::of(self.cfg.gamma);
        let targets = double_q_target(batch, &self.online, &self.target, gamma)?;
        let (loss, grads) = loss_and_grads(&self.online, batch, &targets, F::of(self.cfg.huber_delta))?;
        if !loss.is_finite() {
            return Err(Error::Training(format!("non-finite loss {loss} at train step {}", self.train_steps)));
        }
        self.opt.step(self.online.params_mut(), &grads);
        self.train_steps += 1;
        if self.train_steps % self.cfg.sync_period == 0 {
            self.sync_target();
        }
        Ok(loss)
    }

    /// Sample a batch from replay and train on it.
    pub fn train_step(&mut self, rng: &mut ChaCha8Rng) -> Result<F> {
        let batch = self.replay.sample(self.cfg.batch_size, rng)?;
        self.train_on_batch(&batch)
    }
}
