//! Training loops: single-environment episode training with dynamic user
//! distributions, and the continuous transfer chain that carries weights
//! from one environment into the next.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agent::{
    act_epsilon_greedy, checkpoint, DqnAgent, DuelingNet, ExplorationSchedule, NetShape, TrainConfig,
};
use crate::error::{Error, Result};
use crate::mdp::{
    encode_state, reset, sample_users, select_target, step, MissionSpec, Termination, TrajectoryPoint,
    Transition, UserLink,
};
use crate::propagation::ChannelParams;
use crate::scalar::Real;

use super::meter::{EnergyMeter, MeterCoefficients, MeterMode};
use super::{convergence_episode, efficiency_ratios, success_rate_episode, TrainingRecord, TransferReport};

/// One trainable environment: the mission template (users and target are
/// resampled every episode) plus the link model used for target selection.
#[derive(Debug, Clone)]
pub struct EnvTask<F> {
    pub name: String,
    pub mission: MissionSpec<F>,
    pub channel: ChannelParams<F>,
    pub uav_altitude_m: F,
    pub link: UserLink<F>,
    pub num_users: usize,
    pub convergence_threshold: f64,
    pub area_m2: f64,
}

/// Episode-loop parameters shared across environments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunParams {
    pub max_episodes: usize,
    pub convergence_window: usize,
    pub success_window: usize,
    pub success_rate: f64,
    /// Extra episodes run after convergence before stopping.
    pub patience: usize,
    /// Environment steps between gradient updates.
    pub train_freq: usize,
    /// Minimum replay size before training starts.
    pub warmup: usize,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            max_episodes: 1000,
            convergence_window: 100,
            success_window: 100,
            success_rate: 0.95,
            patience: 200,
            train_freq: 4,
            warmup: 500,
        }
    }
}

impl RunParams {
    pub fn validate(&self) -> Result<()> {
        if self.convergence_window == 0 || self.success_window == 0 || self.train_freq == 0 {
            return Err(Error::Config("windows and train_freq must be positive".into()));
        }
        if !(self.success_rate > 0.0 && self.success_rate <= 1.0) {
            return Err(Error::Config("success rate must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Rebuild an agent from a base checkpoint for transfer: online and target
/// networks take the checkpointed parameters, exploration restarts at the
/// (reduced) transfer epsilon, optimizer moments reset.
pub fn init_from_base<F: Real>(
    checkpoint_bytes: &[u8],
    expected_shape: &NetShape,
    cfg: TrainConfig,
    schedule: ExplorationSchedule<F>,
) -> Result<DqnAgent<F>> {
    let net: DuelingNet<F> = checkpoint::deserialize(checkpoint_bytes)?;
    checkpoint::check_shape(expected_shape, net.shape())?;
    DqnAgent::from_network(net, cfg, schedule)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Train `agent` in one environment. Every episode draws a fresh user
/// distribution, recomputes the optimal target cell, and runs one episode
/// from a random launch position. Work is metered per step; training stops
/// `patience` episodes after convergence or at `max_episodes`. A non-finite
/// loss aborts with the record marked failed.
pub fn train_environment<F: Real>(
    task: &EnvTask<F>,
    agent: &mut DqnAgent<F>,
    run: &RunParams,
    meter: &mut EnergyMeter,
    seed: u64,
    stream_base: u64,
) -> Result<TrainingRecord> {
    run.validate()?;
    let mut ms = task.mission.clone();
    ms.validate()?;
    if ms.feature_len() != agent.online.shape().input_dim {
        return Err(Error::Usage(format!(
            "environment encodes {} features but the agent expects {}",
            ms.feature_len(),
            agent.online.shape().input_dim
        )));
    }

    let mut env_rng = stream_rng(seed, stream_base);
    let mut explore_rng = stream_rng(seed, stream_base + 1);
    let mut sample_rng = stream_rng(seed, stream_base + 2);

    let start_energy = meter.energy_j();
    let start_time = meter.time_s();
    let mut rewards: Vec<f64> = Vec::new();
    let mut successes: Vec<bool> = Vec::new();
    let mut energies: Vec<f64> = Vec::new();
    let mut convergence: Option<usize> = None;
    let mut failed = false;
    let mut global_step = 0u64;

    'episodes: while rewards.len() < run.max_episodes {
        let episode_start_energy = meter.energy_j();
        ms.users = sample_users(&ms.target_area, task.num_users, &mut env_rng)?;
        ms.target = select_target(&ms.users, &ms.outage_map, &ms.target_area, task.uav_altitude_m, &task.channel, &task.link)?;
        let mut es = reset(&ms, &mut env_rng)?;
        while !es.done {
            let features = encode_state(&es, &ms);
            let q = agent.online.forward(&features)?;
            meter.record_forward(1);
            let eps = agent.schedule.update_epsilon();
            let action = act_epsilon_greedy(&q, eps, &mut explore_rng);
            let (reward, done) = step(&ms, &mut es, action)?;
            meter.record_env_steps(1);
            let next_features = encode_state(&es, &ms);
            agent.replay.push(Transition { state: features, action, reward, next_state: next_features, done });
            global_step += 1;
            if agent.replay.len() >= run.warmup && global_step % run.train_freq as u64 == 0 {
                let batch = agent.replay.sample(agent.cfg.batch_size, &mut sample_rng)?;
                // Targets evaluate online and target nets on s' plus the
                // cached online pass on s.
                meter.record_forward(3 * batch.len() as u64);
                meter.record_backward(batch.len() as u64);
                match agent.train_on_batch(&batch) {
                    Ok(_) => {}
                    Err(Error::Training(_)) => {
                        failed = true;
                        rewards.push(es.cumulative_reward.to64());
                        successes.push(false);
                        energies.push(meter.energy_j() - episode_start_energy);
                        break 'episodes;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        rewards.push(es.cumulative_reward.to64());
        successes.push(es.termination == Some(Termination::Reached));
        energies.push(meter.energy_j() - episode_start_energy);
        if convergence.is_none() && rewards.len() >= run.convergence_window {
            let tail = &rewards[rewards.len() - run.convergence_window..];
            let mean: f64 = tail.iter().sum::<f64>() / run.convergence_window as f64;
            if mean >= task.convergence_threshold {
                convergence = Some(rewards.len());
            }
        }
        if let Some(c) = convergence {
            if rewards.len() >= c + run.patience {
                break;
            }
        }
    }

    let record = TrainingRecord {
        env_id: task.name.clone(),
        area_m2: task.area_m2,
        episodes_run: rewards.len(),
        convergence_episode: convergence_episode(&rewards, run.convergence_window, task.convergence_threshold),
        success95_episode: success_rate_episode(&successes, run.success_window, run.success_rate),
        time_s: meter.time_s() - start_time,
        energy_j: meter.energy_j() - start_energy,
        episode_rewards: rewards,
        episode_success: successes,
        episode_energy: energies,
        failed,
    };
    record.validate()?;
    Ok(record)
}

/// Chain configuration for [`run_continuous`].
#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub agent_cfg: TrainConfig,
    pub net_shape: NetShape,
    pub run: RunParams,
    pub eps_start_scratch: f64,
    pub eps_start_transfer: f64,
    pub eps_end: f64,
    pub eps_decay_rate: f64,
    pub meter_mode: MeterMode,
    pub meter_coeff: MeterCoefficients,
    pub seed: u64,
}

impl ChainConfig {
    fn schedule<F: Real>(&self, eps_start: f64) -> Result<ExplorationSchedule<F>> {
        ExplorationSchedule::new(F::of(eps_start), F::of(self.eps_end), F::of(self.eps_decay_rate))
    }
}

/// Output of a continuous chain: the report plus each environment's final
/// checkpoint bytes, in order.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub report: TransferReport,
    pub checkpoints: Vec<Vec<u8>>,
}

/// Train across an ordered environment sequence: the first from scratch,
/// each later one initialized from the previous environment's final
/// checkpoint. A failed record aborts the remaining transfers, leaving a
/// partial report.
pub fn run_continuous<F: Real>(tasks: &[EnvTask<F>], cc: &ChainConfig) -> Result<ChainOutput> {
    if tasks.is_empty() {
        return Err(Error::Usage("transfer chain needs at least one environment".into()));
    }
    let mut meter = EnergyMeter::new(cc.meter_mode, cc.meter_coeff)?;
    let mut records: Vec<TrainingRecord> = Vec::new();
    let mut checkpoints: Vec<Vec<u8>> = Vec::new();

    let mut init_rng = stream_rng(cc.seed, 0);
    let mut agent =
        DqnAgent::<F>::new(cc.net_shape.clone(), cc.agent_cfg, cc.schedule(cc.eps_start_scratch)?, &mut init_rng)?;

    for (i, task) in tasks.iter().enumerate() {
        if i > 0 {
            agent = init_from_base(
                &checkpoints[i - 1],
                &cc.net_shape,
                cc.agent_cfg,
                cc.schedule(cc.eps_start_transfer)?,
            )?;
        }
        let stream_base = 1 + i as u64 * 4;
        let record = train_environment(task, &mut agent, &cc.run, &mut meter, cc.seed, stream_base)?;
        let failed = record.failed;
        records.push(record);
        checkpoints.push(checkpoint::serialize(&agent.online));
        if failed {
            break;
        }
    }

    let (eta_time, eta_energy, normalized_energy) = efficiency_ratios(&records)?;
    Ok(ChainOutput {
        report: TransferReport { records, eta_time, eta_energy, normalized_energy },
        checkpoints,
    })
}

/// Roll one greedy (epsilon = 0) episode and return the visited positions
/// with per-step rewards and outage, for CSV export.
pub fn greedy_rollout<F: Real>(
    net: &DuelingNet<F>,
    task: &EnvTask<F>,
    seed: u64,
) -> Result<Vec<TrajectoryPoint<F>>> {
    let mut ms = task.mission.clone();
    let mut env_rng = stream_rng(seed, 9000);
    ms.users = sample_users(&ms.target_area, task.num_users, &mut env_rng)?;
    ms.target = select_target(&ms.users, &ms.outage_map, &ms.target_area, task.uav_altitude_m, &task.channel, &task.link)?;
    let mut es = reset(&ms, &mut env_rng)?;
    let mut points = Vec::with_capacity(ms.s_max as usize + 1);
    let pos = es.position_m(&ms);
    points.push(TrajectoryPoint {
        step: 0,
        pos,
        reward: F::zero(),
        outage: ms.outage_map.value(es.row, es.col),
    });
    while !es.done {
        let features = encode_state(&es, &ms);
        let q = net.forward(&features)?;
        let action = crate::agent::greedy_action(&q);
        let (reward, _) = step(&ms, &mut es, action)?;
        points.push(TrajectoryPoint {
            step: es.step_count,
            pos: es.position_m(&ms),
            reward,
            outage: ms.outage_map.value(es.row, es.col),
        });
    }
    Ok(points)
}
