//! `train`: run one environment either from scratch or warm-started from a
//! base checkpoint; write the record summary, per-episode series, final
//! checkpoint and a greedy trajectory export.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use uavtl::agent::{checkpoint, DqnAgent, ExplorationSchedule};
use uavtl::error::{Error, Result};
use uavtl::mdp::trajectory_csv;
use uavtl::transfer::{episodes_csv, greedy_rollout, init_from_base, train_environment, EnergyMeter, TrainingRecord};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    Scratch,
    Transfer,
}

pub struct TrainArgs {
    pub env: Option<String>,
    pub mode: TrainMode,
    pub base_checkpoint: Option<PathBuf>,
    pub seed: u64,
}

pub struct TrainOutput {
    pub record: TrainingRecord,
    pub checkpoint_path: PathBuf,
    pub files: Vec<PathBuf>,
}

fn record_summary_csv(r: &TrainingRecord) -> String {
    let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into());
    format!(
        "env_id,episodes,convergence_ep,success95_ep,time_s,energy_j,failed\n{},{},{},{},{},{},{}\n",
        r.env_id,
        r.episodes_run,
        opt(r.convergence_episode),
        opt(r.success95_episode),
        r.time_s,
        r.energy_j,
        r.failed as u8,
    )
}

pub fn run(cfg: &RunConfig, args: &TrainArgs, out_dir: &Path) -> Result<TrainOutput> {
    if args.mode == TrainMode::Transfer && args.base_checkpoint.is_none() {
        return Err(Error::Usage("transfer mode requires --base <checkpoint>".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let entry = match &args.env {
        Some(name) => cfg
            .environments
            .iter()
            .find(|e| &e.name == name)
            .ok_or_else(|| Error::Config(format!("no environment named `{name}` in config")))?,
        None => cfg
            .environments
            .first()
            .ok_or_else(|| Error::Config("config lists no environments".into()))?,
    };
    let task = cfg.build_task(entry)?;
    let shape = cfg.agent.net_shape(cfg.feature_len());
    let train_cfg = cfg.agent.train_config();

    let mut agent = match args.mode {
        TrainMode::Scratch => {
            let schedule =
                ExplorationSchedule::new(cfg.agent.eps_start, cfg.agent.eps_end, cfg.agent.eps_decay_rate)?;
            let mut init_rng = ChaCha8Rng::seed_from_u64(args.seed);
            DqnAgent::<f64>::new(shape, train_cfg, schedule, &mut init_rng)?
        }
        TrainMode::Transfer => {
            let bytes = std::fs::read(args.base_checkpoint.as_ref().unwrap())?;
            let schedule = ExplorationSchedule::new(
                cfg.transfer.eps_start_transfer,
                cfg.agent.eps_end,
                cfg.agent.eps_decay_rate,
            )?;
            init_from_base(&bytes, &shape, train_cfg, schedule)?
        }
    };

    let mut meter = EnergyMeter::new(cfg.meter.mode, cfg.meter.coefficients())?;
    let record = train_environment(&task, &mut agent, &cfg.transfer.run_params(), &mut meter, args.seed, 1)?;

    let mode = match args.mode {
        TrainMode::Scratch => "scratch",
        TrainMode::Transfer => "transfer",
    };
    let stem = format!("{}_{}_seed{}", task.name, mode, args.seed);
    let mut files = Vec::new();
    let mut write = |suffix: &str, contents: &str| -> Result<PathBuf> {
        let path = out_dir.join(format!("{stem}.{suffix}"));
        std::fs::write(&path, contents)?;
        files.push(path.clone());
        Ok(path)
    };
    write("summary.csv", &record_summary_csv(&record))?;
    write("episodes.csv", &episodes_csv(&record))?;
    let rollout = greedy_rollout(&agent.online, &task, args.seed)?;
    write("trajectory.csv", &trajectory_csv(&rollout))?;

    let checkpoint_path = out_dir.join(format!("{stem}.ckpt"));
    checkpoint::save_file(&agent.online, &checkpoint_path)?;
    files.push(checkpoint_path.clone());

    if record.failed {
        return Err(Error::Training(format!(
            "training aborted with non-finite loss in environment {}; partial record written",
            task.name
        )));
    }
    Ok(TrainOutput { record, checkpoint_path, files })
}
