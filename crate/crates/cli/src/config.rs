//! Run configuration: one TOML file describing the channel, antenna, mission
//! parameters, agent hyperparameters, transfer settings, meter coefficients
//! and the ordered environment list. Flags override `out_dir`, seeds and
//! jobs. Paths inside the file resolve relative to the file's directory.

use serde::Deserialize;
use std::path::{Path, PathBuf};

use uavtl::agent::{NetShape, TrainConfig};
use uavtl::error::{Error, Result};
use uavtl::geo::Rect;
use uavtl::mdp::{MissionSpec, UserLink};
use uavtl::propagation::{
    compute_sinr_map, generate_environment, AntennaPattern, ChannelParams, EnvironmentSpec, GenConfig, Preset,
};
use uavtl::radiomap::{median_fill, parse_grid_file, parse_outage_file, rescale, sinr_to_outage, OutageMap};
use uavtl::transfer::{ChainConfig, EnvTask, MeterCoefficients, MeterMode, RunParams};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    pub seeds: Vec<u64>,
    pub jobs: Option<usize>,
    pub channel: ChannelCfg,
    pub antenna: AntennaCfg,
    pub mission: MissionCfg,
    pub agent: AgentCfg,
    pub transfer: TransferCfg,
    pub meter: MeterCfg,
    pub environments: Vec<EnvEntry>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            out_dir: PathBuf::from("out"),
            seeds: vec![1],
            jobs: None,
            channel: ChannelCfg::default(),
            antenna: AntennaCfg::default(),
            mission: MissionCfg::default(),
            agent: AgentCfg::default(),
            transfer: TransferCfg::default(),
            meter: MeterCfg::default(),
            environments: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelCfg {
    /// Path-loss intercepts at 1 m, in dB.
    pub x_los_db: f64,
    pub x_nlos_db: f64,
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    pub noise_dbm: f64,
    pub carrier_hz: f64,
}

impl Default for ChannelCfg {
    fn default() -> Self {
        ChannelCfg {
            x_los_db: -31.0,
            x_nlos_db: -41.0,
            alpha_los: 2.2,
            alpha_nlos: 3.5,
            noise_dbm: -95.0,
            carrier_hz: 2.0e9,
        }
    }
}

impl ChannelCfg {
    pub fn to_params(self) -> Result<ChannelParams<f64>> {
        let p = ChannelParams {
            x_los: 10f64.powf(self.x_los_db / 10.0),
            x_nlos: 10f64.powf(self.x_nlos_db / 10.0),
            alpha_los: self.alpha_los,
            alpha_nlos: self.alpha_nlos,
            noise_dbm: self.noise_dbm,
            carrier_hz: self.carrier_hz,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AntennaCfg {
    pub g_max_db: f64,
    pub a_m_db: f64,
    pub horizontal_hpbw_deg: f64,
    pub vertical_hpbw_deg: f64,
    pub sla_v_db: f64,
}

impl Default for AntennaCfg {
    fn default() -> Self {
        let p = AntennaPattern::<f64>::upa_1x8_default();
        AntennaCfg {
            g_max_db: p.g_max_db,
            a_m_db: p.a_m_db,
            horizontal_hpbw_deg: p.horizontal_hpbw_deg,
            vertical_hpbw_deg: p.vertical_hpbw_deg,
            sla_v_db: p.sla_v_db,
        }
    }
}

impl AntennaCfg {
    pub fn to_pattern(self) -> Result<AntennaPattern<f64>> {
        let p = AntennaPattern {
            g_max_db: self.g_max_db,
            a_m_db: self.a_m_db,
            horizontal_hpbw_deg: self.horizontal_hpbw_deg,
            vertical_hpbw_deg: self.vertical_hpbw_deg,
            sla_v_db: self.sla_v_db,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MissionCfg {
    pub s_max: u32,
    pub v_max_mps: f64,
    pub dt_s: f64,
    pub w1: f64,
    pub w2: f64,
    pub objective_w1: f64,
    pub objective_w2: f64,
    pub p_outbound: f64,
    pub p_reach: f64,
    /// Defaults to one cell when absent.
    pub reach_radius_m: Option<f64>,
    pub outage_event_threshold: f64,
    pub patch_k: usize,
    pub num_users: usize,
    pub gamma_user_db: f64,
    pub uav_tx_power_dbm: f64,
}

impl Default for MissionCfg {
    fn default() -> Self {
        MissionCfg {
            s_max: 150,
            v_max_mps: 40.0,
            dt_s: 1.0,
            w1: 1.0,
            w2: 2.0,
            objective_w1: 1.0,
            objective_w2: 2.0,
            p_outbound: 1.0,
            p_reach: 100.0,
            reach_radius_m: None,
            outage_event_threshold: 0.5,
            patch_k: 5,
            num_users: 40,
            gamma_user_db: 40.0,
            uav_tx_power_dbm: 30.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentCfg {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub sync_period: u64,
    pub gamma: f64,
    pub n_step: usize,
    pub buffer_capacity: usize,
    pub huber_delta: f64,
    pub trunk: Vec<usize>,
    pub head_hidden: Vec<usize>,
    pub eps_start: f64,
    pub eps_end: f64,
    pub eps_decay_rate: f64,
}

impl Default for AgentCfg {
    fn default() -> Self {
        AgentCfg {
            learning_rate: 1e-3,
            batch_size: 64,
            sync_period: 500,
            gamma: 0.99,
            n_step: 3,
            buffer_capacity: 100_000,
            huber_delta: 1.0,
            trunk: vec![128, 128],
            head_hidden: vec![64],
            eps_start: 1.0,
            eps_end: 0.05,
            eps_decay_rate: 10_000.0,
        }
    }
}

impl AgentCfg {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            sync_period: self.sync_period,
            gamma: self.gamma,
            n_step: self.n_step,
            buffer_capacity: self.buffer_capacity,
            huber_delta: self.huber_delta,
        }
    }

    pub fn net_shape(&self, feature_len: usize) -> NetShape {
        NetShape {
            input_dim: feature_len,
            trunk: self.trunk.clone(),
            head_hidden: self.head_hidden.clone(),
            actions: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransferCfg {
    pub eps_start_transfer: f64,
    pub max_episodes: usize,
    pub convergence_window: usize,
    pub success_window: usize,
    pub success_rate: f64,
    pub patience: usize,
    pub train_freq: usize,
    pub warmup: usize,
    pub default_convergence_threshold: f64,
}

impl Default for TransferCfg {
    fn default() -> Self {
        TransferCfg {
            eps_start_transfer: 0.3,
            max_episodes: 1000,
            convergence_window: 100,
            success_window: 100,
            success_rate: 0.95,
            patience: 200,
            train_freq: 4,
            warmup: 500,
            default_convergence_threshold: 30.0,
        }
    }
}

impl TransferCfg {
    pub fn run_params(&self) -> RunParams {
        RunParams {
            max_episodes: self.max_episodes,
            convergence_window: self.convergence_window,
            success_window: self.success_window,
            success_rate: self.success_rate,
            patience: self.patience,
            train_freq: self.train_freq,
            warmup: self.warmup,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeterCfg {
    pub mode: MeterMode,
    pub c_fwd_j: f64,
    pub c_bwd_j: f64,
    pub c_env_j: f64,
    pub t_fwd_s: f64,
    pub t_bwd_s: f64,
    pub t_env_s: f64,
}

impl Default for MeterCfg {
    fn default() -> Self {
        let c = MeterCoefficients::default();
        MeterCfg {
            mode: MeterMode::Proxy,
            c_fwd_j: c.c_fwd_j,
            c_bwd_j: c.c_bwd_j,
            c_env_j: c.c_env_j,
            t_fwd_s: c.t_fwd_s,
            t_bwd_s: c.t_bwd_s,
            t_env_s: c.t_env_s,
        }
    }
}

impl MeterCfg {
    pub fn coefficients(&self) -> MeterCoefficients {
        MeterCoefficients {
            c_fwd_j: self.c_fwd_j,
            c_bwd_j: self.c_bwd_j,
            c_env_j: self.c_env_j,
            t_fwd_s: self.t_fwd_s,
            t_bwd_s: self.t_bwd_s,
            t_env_s: self.t_env_s,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectCfg {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl RectCfg {
    fn to_rect(self) -> Rect<f64> {
        Rect::new(self.x, self.y, self.w, self.h)
    }
}

/// One environment: exactly one of `preset`, `grid_file`, `outage_file`.
/// File-based environments must also carry the mission areas and altitude
/// that presets derive from the generator.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvEntry {
    pub name: String,
    pub preset: Option<String>,
    #[serde(default)]
    pub gen_seed: Option<u64>,
    pub grid_file: Option<PathBuf>,
    pub outage_file: Option<PathBuf>,
    #[serde(default)]
    pub gamma_th_db: Option<f64>,
    #[serde(default)]
    pub target_cols: Option<usize>,
    #[serde(default)]
    pub target_rows: Option<usize>,
    #[serde(default)]
    pub launch_area: Option<RectCfg>,
    #[serde(default)]
    pub target_area: Option<RectCfg>,
    #[serde(default)]
    pub uav_altitude_m: Option<f64>,
    #[serde(default)]
    pub convergence_threshold: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for entry in &mut cfg.environments {
            for f in [&mut entry.grid_file, &mut entry.outage_file].into_iter().flatten() {
                if f.is_relative() {
                    *f = base.join(&f);
                }
                if !f.exists() {
                    return Err(Error::Config(format!(
                        "environment `{}` references missing file {}",
                        entry.name,
                        f.display()
                    )));
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list must be non-empty".into()));
        }
        if self.mission.patch_k == 0 || self.mission.patch_k % 2 == 0 {
            return Err(Error::Config("mission.patch_k must be odd and positive".into()));
        }
        let mut names = std::collections::BTreeSet::new();
        for e in &self.environments {
            if !names.insert(e.name.clone()) {
                return Err(Error::Config(format!("duplicate environment name `{}`", e.name)));
            }
            let sources =
                [e.preset.is_some(), e.grid_file.is_some(), e.outage_file.is_some()].iter().filter(|&&b| b).count();
            if sources != 1 {
                return Err(Error::Config(format!(
                    "environment `{}` must set exactly one of preset, grid_file, outage_file",
                    e.name
                )));
            }
            if e.preset.is_none() && (e.launch_area.is_none() || e.target_area.is_none() || e.uav_altitude_m.is_none())
            {
                return Err(Error::Config(format!(
                    "file-based environment `{}` needs launch_area, target_area and uav_altitude_m",
                    e.name
                )));
            }
        }
        Ok(())
    }

    pub fn feature_len(&self) -> usize {
        4 + self.mission.patch_k * self.mission.patch_k
    }

    fn mission_for(&self, map: OutageMap<f64>, launch: Rect<f64>, target_area: Rect<f64>) -> MissionSpec<f64> {
        let m = &self.mission;
        let reach = m.reach_radius_m.unwrap_or(map.cell_size_m);
        let target = target_area.center();
        MissionSpec {
            outage_map: map,
            launch_area: launch,
            target_area,
            users: vec![],
            target,
            s_max: m.s_max,
            v_max_mps: m.v_max_mps,
            dt_s: m.dt_s,
            w1: m.w1,
            w2: m.w2,
            objective_w1: m.objective_w1,
            objective_w2: m.objective_w2,
            p_outbound: m.p_outbound,
            p_reach: m.p_reach,
            reach_radius_m: reach,
            outage_event_threshold: m.outage_event_threshold,
            patch_k: m.patch_k,
        }
    }

    /// Synthesize the environment spec a preset entry describes.
    pub fn generate_preset_env(&self, entry: &EnvEntry) -> Result<EnvironmentSpec<f64>> {
        let preset: Preset = entry
            .preset
            .as_deref()
            .ok_or_else(|| Error::Config(format!("environment `{}` has no preset", entry.name)))?
            .parse()?;
        let mut gen = GenConfig::preset(preset);
        gen.antenna = self.antenna.to_pattern()?;
        generate_environment(&gen, entry.gen_seed.unwrap_or(7))
    }

    /// Resolve one environment entry into a trainable task.
    pub fn build_task(&self, entry: &EnvEntry) -> Result<EnvTask<f64>> {
        let channel = self.channel.to_params()?;
        let gamma_th = entry.gamma_th_db.unwrap_or(0.0);
        let (map, launch, target_area, altitude) = if entry.preset.is_some() {
            let env = self.generate_preset_env(entry)?;
            let sinr = compute_sinr_map(&env, &channel)?;
            let map = sinr_to_outage(&sinr, gamma_th)?;
            (map, env.launch_area, env.target_area, env.uav_altitude_m)
        } else {
            let launch = entry.launch_area.expect("validated").to_rect();
            let target_area = entry.target_area.expect("validated").to_rect();
            let altitude = entry.uav_altitude_m.expect("validated");
            let map = if let Some(path) = &entry.outage_file {
                parse_outage_file(&std::fs::read(path)?)?
            } else {
                let path = entry.grid_file.as_ref().expect("validated");
                let raw = parse_grid_file(&std::fs::read(path)?)?;
                let filled = median_fill(&raw)?;
                let cols = entry.target_cols.unwrap_or(filled.cols);
                let rows = entry.target_rows.unwrap_or(filled.rows);
                let scaled = rescale(&filled, cols, rows)?;
                sinr_to_outage(&scaled, gamma_th)?
            };
            (map, launch, target_area, altitude)
        };
        let area_m2 = map.width_m() * map.height_m();
        let mission = self.mission_for(map, launch, target_area);
        mission.validate()?;
        Ok(EnvTask {
            name: entry.name.clone(),
            mission,
            channel,
            uav_altitude_m: altitude,
            link: UserLink {
                tx_power_dbm: self.mission.uav_tx_power_dbm,
                gamma_user_db: self.mission.gamma_user_db,
            },
            num_users: self.mission.num_users,
            convergence_threshold: entry
                .convergence_threshold
                .unwrap_or(self.transfer.default_convergence_threshold),
            area_m2,
        })
    }

    pub fn build_tasks(&self) -> Result<Vec<EnvTask<f64>>> {
        self.environments.iter().map(|e| self.build_task(e)).collect()
    }

    pub fn chain_config(&self, seed: u64) -> Result<ChainConfig> {
        let coeff = self.meter.coefficients();
        coeff.validate()?;
        Ok(ChainConfig {
            agent_cfg: self.agent.train_config(),
            net_shape: self.agent.net_shape(self.feature_len()),
            run: self.transfer.run_params(),
            eps_start_scratch: self.agent.eps_start,
            eps_start_transfer: self.transfer.eps_start_transfer,
            eps_end: self.agent.eps_end,
            eps_decay_rate: self.agent.eps_decay_rate,
            meter_mode: self.meter.mode,
            meter_coeff: coeff,
            seed,
        })
    }

    pub fn jobs(&self) -> usize {
        self.jobs.unwrap_or_else(|| {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(self.seeds.len().max(1))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips_through_toml() {
        let cfg: RunConfig = toml::from_str("").unwrap();
        assert_eq!(cfg.mission.num_users, 40);
        assert_eq!(cfg.agent.trunk, vec![128, 128]);
        assert_eq!(cfg.feature_len(), 29);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let res: std::result::Result<RunConfig, _> = toml::from_str("unknown_key = 3");
        assert!(res.is_err());
        let res: std::result::Result<RunConfig, _> = toml::from_str("[agent]\nlr = 0.1");
        assert!(res.is_err());
    }

    #[test]
    fn env_entry_requires_exactly_one_source() {
        let text = r#"
            [[environments]]
            name = "both"
            preset = "env1"
            grid_file = "x.grid"
        "#;
        let cfg: RunConfig = toml::from_str(text).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn smoke_preset_builds_a_valid_task() {
        let text = r#"
            [mission]
            patch_k = 3
            s_max = 12
            num_users = 5
            [[environments]]
            name = "smoke"
            preset = "smoke"
            gen_seed = 3
        "#;
        let cfg: RunConfig = toml::from_str(text).unwrap();
        cfg.validate().unwrap();
        let task = cfg.build_task(&cfg.environments[0]).unwrap();
        assert_eq!(task.mission.outage_map.cols, 3);
        assert_eq!(task.area_m2, 120.0 * 120.0);
        assert_eq!(task.mission.feature_len(), 13);
        // Reach radius defaults to one cell.
        assert_eq!(task.mission.reach_radius_m, 40.0);
    }
}
