//! Whole-pipeline checks of the continuous transfer chain on the small
//! open-field preset.

use uavtl::agent::{NetShape, TrainConfig};
use uavtl::geo::Point2;
use uavtl::mdp::{MissionSpec, UserLink};
use uavtl::propagation::{compute_sinr_map, generate_environment, ChannelParams, GenConfig, Preset};
use uavtl::radiomap::sinr_to_outage;
use uavtl::transfer::{run_continuous, ChainConfig, EnvTask, MeterCoefficients, MeterMode, RunParams};

fn smoke_task(gen_seed: u64) -> EnvTask<f64> {
    let cfg = GenConfig::<f64>::preset(Preset::Smoke);
    let env = generate_environment(&cfg, gen_seed).unwrap();
    let ch = ChannelParams::urban_default();
    let sinr = compute_sinr_map(&env, &ch).unwrap();
    let map = sinr_to_outage(&sinr, 0.0).unwrap();
    let mission = MissionSpec {
        outage_map: map,
        launch_area: env.launch_area,
        target_area: env.target_area,
        users: vec![],
        target: Point2::new(100.0, 100.0),
        s_max: 12,
        v_max_mps: 40.0,
        dt_s: 1.0,
        w1: 1.0,
        w2: 2.0,
        objective_w1: 1.0,
        objective_w2: 2.0,
        p_outbound: 1.0,
        p_reach: 100.0,
        reach_radius_m: 40.0,
        outage_event_threshold: 0.5,
        patch_k: 3,
    };
    EnvTask {
        name: format!("smoke{gen_seed}"),
        mission,
        channel: ch,
        uav_altitude_m: 60.0,
        link: UserLink { tx_power_dbm: 30.0, gamma_user_db: -1000.0 },
        num_users: 5,
        convergence_threshold: 60.0,
        area_m2: 120.0 * 120.0,
    }
}

fn chain_config(seed: u64) -> ChainConfig {
    ChainConfig {
        agent_cfg: TrainConfig {
            learning_rate: 1e-3,
            batch_size: 32,
            sync_period: 50,
            gamma: 0.95,
            n_step: 3,
            buffer_capacity: 5000,
            huber_delta: 1.0,
        },
        net_shape: NetShape { input_dim: 13, trunk: vec![32, 32], head_hidden: vec![16], actions: 4 },
        run: RunParams {
            max_episodes: 80,
            convergence_window: 10,
            success_window: 10,
            success_rate: 0.95,
            patience: 15,
            train_freq: 1,
            warmup: 32,
        },
        eps_start_scratch: 1.0,
        eps_start_transfer: 0.3,
        eps_end: 0.0,
        eps_decay_rate: 60.0,
        meter_mode: MeterMode::Proxy,
        meter_coeff: MeterCoefficients::default(),
        seed,
    }
}

#[test]
fn repeating_an_identical_environment_converges_no_slower() {
    // The same task twice in a chain: knowledge reuse must not slow the
    // second pass down, judged by the median over five seeds.
    let mut first = Vec::new();
    let mut second = Vec::new();
    for seed in [1u64, 2, 3, 4, 5] {
        let task = smoke_task(3);
        let out = run_continuous(&[task.clone(), task], &chain_config(seed)).unwrap();
        let conv = |r: &uavtl::transfer::TrainingRecord| r.convergence_episode.unwrap_or(r.episodes_run);
        first.push(conv(&out.report.records[0]));
        second.push(conv(&out.report.records[1]));
    }
    first.sort_unstable();
    second.sort_unstable();
    assert!(
        second[2] <= first[2],
        "repeat-environment medians: first {first:?}, second {second:?}"
    );
}

#[test]
fn chain_energy_ratios_follow_from_records() {
    let tasks = vec![smoke_task(3), smoke_task(4)];
    let out = run_continuous(&tasks, &chain_config(9)).unwrap();
    let r = &out.report;
    assert_eq!(r.records.len(), 2);
    for i in 0..2 {
        assert_eq!(r.eta_time[i], r.records[i].time_s / r.records[0].time_s);
        assert_eq!(r.eta_energy[i], r.records[i].energy_j / r.records[0].energy_j);
        assert_eq!(r.normalized_energy[i], r.records[i].energy_j * 1e6 / r.records[i].area_m2);
    }
}
