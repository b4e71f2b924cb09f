//! `compare`: for every non-base environment, run a scratch arm and a
//! transfer arm (warm-started through the continuous chain) with matched
//! seeds, then aggregate both arms into a comparison table with percentage
//! savings and per-episode reward curves.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use uavtl::agent::{checkpoint, DqnAgent, ExplorationSchedule};
use uavtl::error::{Error, Result};
use uavtl::transfer::{
    episodes_csv, report_csv, run_continuous, train_environment, ChainOutput, EnergyMeter, EnvTask, TrainingRecord,
};

use crate::config::RunConfig;

pub struct CompareArgs {
    pub jobs: Option<usize>,
}

/// Everything one seed produced: the transfer chain over all environments
/// plus an independent scratch run per non-base environment.
pub struct SeedOutcome {
    pub seed: u64,
    pub chain: ChainOutput,
    pub scratch: Vec<TrainingRecord>,
    pub scratch_checkpoints: Vec<Vec<u8>>,
}

/// Median metrics of one arm (Table-style units: episodes, hours, Wh).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmAggregate {
    pub convergence_episodes: f64,
    pub convergence_time_h: f64,
    pub episodes_to_95_success: f64,
    pub energy_wh: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvComparison {
    pub environment: String,
    pub scratch: ArmAggregate,
    pub transfer: ArmAggregate,
    pub median_eta_time: f64,
    pub median_eta_energy: f64,
}

pub struct CompareOutcome {
    pub env_names: Vec<String>,
    pub seeds: Vec<u64>,
    pub per_seed: Vec<SeedOutcome>,
    pub comparisons: Vec<EnvComparison>,
    pub files: Vec<PathBuf>,
    /// Environments whose arms did not all finish (non-finite loss).
    pub failed_envs: Vec<String>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite metric"));
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Episodes-to-X metrics censor at the episode cap when never reached.
fn censored(ep: Option<usize>, episodes_run: usize) -> f64 {
    ep.unwrap_or(episodes_run) as f64
}

fn aggregate(records: &[&TrainingRecord]) -> ArmAggregate {
    let conv: Vec<f64> = records.iter().map(|r| censored(r.convergence_episode, r.episodes_run)).collect();
    let s95: Vec<f64> = records.iter().map(|r| censored(r.success95_episode, r.episodes_run)).collect();
    let time_h: Vec<f64> = records.iter().map(|r| r.time_s / 3600.0).collect();
    let wh: Vec<f64> = records.iter().map(|r| r.energy_j / 3600.0).collect();
    ArmAggregate {
        convergence_episodes: median(&conv),
        convergence_time_h: median(&time_h),
        episodes_to_95_success: median(&s95),
        energy_wh: median(&wh),
    }
}

fn run_seed(cfg: &RunConfig, tasks: &[EnvTask<f64>], seed: u64) -> Result<SeedOutcome> {
    let cc = cfg.chain_config(seed)?;
    let chain = run_continuous(tasks, &cc)?;
    log::info!(
        "seed {seed}: chain done, episodes per env = {:?}",
        chain.report.records.iter().map(|r| r.episodes_run).collect::<Vec<_>>()
    );
    let mut scratch = Vec::new();
    let mut scratch_checkpoints = Vec::new();
    for (i, task) in tasks.iter().enumerate().skip(1) {
        if i >= chain.report.records.len() {
            break;
        }
        let schedule = ExplorationSchedule::new(cfg.agent.eps_start, cfg.agent.eps_end, cfg.agent.eps_decay_rate)?;
        let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
        init_rng.set_stream(1000 + i as u64);
        let mut agent =
            DqnAgent::<f64>::new(cc.net_shape.clone(), cc.agent_cfg, schedule, &mut init_rng)?;
        let mut meter = EnergyMeter::new(cc.meter_mode, cc.meter_coeff)?;
        // Same per-environment streams as the chain arm: matched user,
        // launch, exploration and replay draws.
        let record = train_environment(task, &mut agent, &cc.run, &mut meter, seed, 1 + i as u64 * 4)?;
        log::info!("seed {seed}: scratch arm {} done after {} episodes", task.name, record.episodes_run);
        scratch.push(record);
        scratch_checkpoints.push(checkpoint::serialize(&agent.online));
    }
    Ok(SeedOutcome { seed, chain, scratch, scratch_checkpoints })
}

const TABLE_HEADER: &str =
    "environment,arm,Convergence Episodes,Convergence Time (h),Episodes to 95% Success Rate,Energy Consumption (Wh)";

fn table_csv(base_env: &str, base: &ArmAggregate, comparisons: &[EnvComparison]) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    let mut row = |env: &str, arm: &str, a: &ArmAggregate| {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            env, arm, a.convergence_episodes, a.convergence_time_h, a.episodes_to_95_success, a.energy_wh
        ));
    };
    row(base_env, "scratch", base);
    for c in comparisons {
        row(&c.environment, "scratch", &c.scratch);
        row(&c.environment, "transfer", &c.transfer);
    }
    out
}

fn savings_pct(scratch: f64, transfer: f64) -> f64 {
    if scratch == 0.0 {
        f64::NAN
    } else {
        (1.0 - transfer / scratch) * 100.0
    }
}

fn savings_csv(comparisons: &[EnvComparison]) -> String {
    let mut out = String::from("environment,metric,scratch,transfer,savings_pct\n");
    for c in comparisons {
        let rows = [
            ("Convergence Episodes", c.scratch.convergence_episodes, c.transfer.convergence_episodes),
            ("Convergence Time (h)", c.scratch.convergence_time_h, c.transfer.convergence_time_h),
            ("Episodes to 95% Success Rate", c.scratch.episodes_to_95_success, c.transfer.episodes_to_95_success),
            ("Energy Consumption (Wh)", c.scratch.energy_wh, c.transfer.energy_wh),
        ];
        for (metric, s, t) in rows {
            out.push_str(&format!("{},{},{},{},{}\n", c.environment, metric, s, t, savings_pct(s, t)));
        }
    }
    out
}

fn records_csv(outcomes: &[SeedOutcome], env_names: &[String]) -> String {
    let mut out = String::from("environment,arm,seed,episodes,convergence_ep,success95_ep,time_s,energy_j\n");
    let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into());
    let mut push = |env: &str, arm: &str, seed: u64, r: &TrainingRecord| {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            env,
            arm,
            seed,
            r.episodes_run,
            opt(r.convergence_episode),
            opt(r.success95_episode),
            r.time_s,
            r.energy_j
        ));
    };
    for o in outcomes {
        for (i, r) in o.chain.report.records.iter().enumerate() {
            let arm = if i == 0 { "scratch" } else { "transfer" };
            push(&env_names[i], arm, o.seed, r);
        }
        for (k, r) in o.scratch.iter().enumerate() {
            push(&env_names[k + 1], "scratch", o.seed, r);
        }
    }
    out
}

pub fn run(cfg: &RunConfig, args: &CompareArgs, out_dir: &Path) -> Result<CompareOutcome> {
    if cfg.environments.len() < 2 {
        return Err(Error::Config("compare needs at least two environments".into()));
    }
    if cfg.seeds.is_empty() {
        return Err(Error::Config("compare needs at least one seed".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    std::fs::create_dir_all(out_dir.join("curves"))?;
    std::fs::create_dir_all(out_dir.join("ckpt"))?;

    let tasks = cfg.build_tasks()?;
    let env_names: Vec<String> = tasks.iter().map(|t| t.name.clone()).collect();
    let jobs = args.jobs.unwrap_or_else(|| cfg.jobs()).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let per_seed: Vec<SeedOutcome> = pool.install(|| {
        cfg.seeds
            .par_iter()
            .map(|&seed| run_seed(cfg, &tasks, seed))
            .collect::<Result<Vec<_>>>()
    })?;

    // Aggregate arms per non-base environment, skipping any environment
    // whose arms did not all complete.
    let mut comparisons = Vec::new();
    let mut failed_envs = Vec::new();
    for i in 1..env_names.len() {
        let transfer_recs: Vec<&TrainingRecord> = per_seed
            .iter()
            .filter_map(|o| o.chain.report.records.get(i))
            .filter(|r| !r.failed)
            .collect();
        let scratch_recs: Vec<&TrainingRecord> = per_seed
            .iter()
            .filter_map(|o| o.scratch.get(i - 1))
            .filter(|r| !r.failed)
            .collect();
        if transfer_recs.len() != per_seed.len() || scratch_recs.len() != per_seed.len() {
            failed_envs.push(env_names[i].clone());
            continue;
        }
        let eta_time: Vec<f64> = per_seed.iter().map(|o| o.chain.report.eta_time[i]).collect();
        let eta_energy: Vec<f64> = per_seed.iter().map(|o| o.chain.report.eta_energy[i]).collect();
        comparisons.push(EnvComparison {
            environment: env_names[i].clone(),
            scratch: aggregate(&scratch_recs),
            transfer: aggregate(&transfer_recs),
            median_eta_time: median(&eta_time),
            median_eta_energy: median(&eta_energy),
        });
    }

    let base_recs: Vec<&TrainingRecord> =
        per_seed.iter().filter_map(|o| o.chain.report.records.first()).filter(|r| !r.failed).collect();
    let base_aggregate = aggregate(&base_recs);

    let mut files = Vec::new();
    let mut write = |path: PathBuf, contents: &[u8]| -> Result<()> {
        std::fs::write(&path, contents)?;
        files.push(path);
        Ok(())
    };

    for o in &per_seed {
        write(out_dir.join(format!("chain_report_seed{}.csv", o.seed)), report_csv(&o.chain.report).as_bytes())?;
        for (i, r) in o.chain.report.records.iter().enumerate() {
            let arm = if i == 0 { "scratch" } else { "transfer" };
            write(
                out_dir.join("curves").join(format!("{}_{}_seed{}.csv", env_names[i], arm, o.seed)),
                episodes_csv(r).as_bytes(),
            )?;
        }
        for (i, bytes) in o.chain.checkpoints.iter().enumerate() {
            let arm = if i == 0 { "scratch" } else { "transfer" };
            write(out_dir.join("ckpt").join(format!("{}_{}_seed{}.ckpt", env_names[i], arm, o.seed)), bytes)?;
        }
        for (k, r) in o.scratch.iter().enumerate() {
            write(
                out_dir.join("curves").join(format!("{}_scratch_seed{}.csv", env_names[k + 1], o.seed)),
                episodes_csv(r).as_bytes(),
            )?;
        }
        for (k, bytes) in o.scratch_checkpoints.iter().enumerate() {
            write(out_dir.join("ckpt").join(format!("{}_scratch_seed{}.ckpt", env_names[k + 1], o.seed)), bytes)?;
        }
    }
    write(out_dir.join("compare_records.csv"), records_csv(&per_seed, &env_names).as_bytes())?;
    write(out_dir.join("compare_table.csv"), table_csv(&env_names[0], &base_aggregate, &comparisons).as_bytes())?;
    write(out_dir.join("compare_savings.csv"), savings_csv(&comparisons).as_bytes())?;

    Ok(CompareOutcome { env_names, seeds: cfg.seeds.clone(), per_seed, comparisons, files, failed_envs })
}
