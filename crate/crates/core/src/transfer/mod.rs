//! Cross-environment transfer controller: per-environment training records,
//! convergence detection, and the time/energy efficiency ratios
//! `eta_time_i = T_i / T_1`, `eta_energy_i = E_i / E_1` relative to the base
//! environment, plus energy normalized to a standard 10^6 m^2 area.

pub mod meter;
pub mod trainer;

pub use meter::{EnergyMeter, MeterCoefficients, MeterMode};
pub use trainer::{
    greedy_rollout, init_from_base, run_continuous, train_environment, ChainConfig, ChainOutput, EnvTask, RunParams,
};

use crate::error::{Error, Result};

/// Outcome of training one environment.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRecord {
    pub env_id: String,
    pub area_m2: f64,
    pub episodes_run: usize,
    /// First episode (1-based) whose trailing window-mean reward crossed the
    /// environment's threshold.
    pub convergence_episode: Option<usize>,
    /// First episode (1-based) whose trailing window success rate reached
    /// the configured level.
    pub success95_episode: Option<usize>,
    pub time_s: f64,
    pub energy_j: f64,
    pub episode_rewards: Vec<f64>,
    pub episode_success: Vec<bool>,
    pub episode_energy: Vec<f64>,
    pub failed: bool,
}

impl TrainingRecord {
    pub fn validate(&self) -> Result<()> {
        if self.episode_rewards.len() != self.episodes_run
            || self.episode_success.len() != self.episodes_run
            || self.episode_energy.len() != self.episodes_run
        {
            return Err(Error::Data("per-episode series must match episodes_run".into()));
        }
        if let Some(c) = self.convergence_episode {
            if c > self.episodes_run {
                return Err(Error::Data("convergence episode beyond episodes_run".into()));
            }
        }
        Ok(())
    }
}

/// Ordered per-environment records with efficiency ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    pub records: Vec<TrainingRecord>,
    pub eta_time: Vec<f64>,
    pub eta_energy: Vec<f64>,
    pub normalized_energy: Vec<f64>,
}

/// First episode index (1-based) at which the trailing `window`-mean of
/// `rewards` reaches `threshold`; `None` if it never does.
pub fn convergence_episode(rewards: &[f64], window: usize, threshold: f64) -> Option<usize> {
    if window == 0 {
        return None;
    }
    for e in window..=rewards.len() {
        let mean: f64 = rewards[e - window..e].iter().sum::<f64>() / window as f64;
        if mean >= threshold {
            return Some(e);
        }
    }
    None
}

/// First episode index (1-based) at which the trailing `window` success rate
/// reaches `rate`.
pub fn success_rate_episode(success: &[bool], window: usize, rate: f64) -> Option<usize> {
    if window == 0 {
        return None;
    }
    for e in window..=success.len() {
        let hits = success[e - window..e].iter().filter(|&&s| s).count();
        if hits as f64 / window as f64 >= rate {
            return Some(e);
        }
    }
    None
}

/// Elementwise `T_i/T_1`, `E_i/E_1` and energy scaled to a standard
/// 10^6 m^2 area.
pub fn efficiency_ratios(records: &[TrainingRecord]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let first = records
        .first()
        .ok_or_else(|| Error::Usage("efficiency ratios need at least one record".into()))?;
    if first.time_s == 0.0 || first.energy_j == 0.0 {
        return Err(Error::Computation("base record has zero time or energy".into()));
    }
    let mut eta_time = Vec::with_capacity(records.len());
    let mut eta_energy = Vec::with_capacity(records.len());
    let mut normalized = Vec::with_capacity(records.len());
    for r in records {
        eta_time.push(r.time_s / first.time_s);
        eta_energy.push(r.energy_j / first.energy_j);
        if r.area_m2 <= 0.0 {
            return Err(Error::Computation(format!("record {} has non-positive area", r.env_id)));
        }
        normalized.push(r.energy_j * 1e6 / r.area_m2);
    }
    Ok((eta_time, eta_energy, normalized))
}

fn opt_cell(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into())
}

/// Report CSV, one row per environment.
pub fn report_csv(report: &TransferReport) -> String {
    let mut out =
        String::from("env_id,episodes,convergence_ep,success95_ep,time_s,energy_j,eta_time,eta_energy,norm_energy\n");
    for (i, r) in report.records.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.env_id,
            r.episodes_run,
            opt_cell(r.convergence_episode),
            opt_cell(r.success95_episode),
            r.time_s,
            r.energy_j,
            report.eta_time[i],
            report.eta_energy[i],
            report.normalized_energy[i],
        ));
    }
    out
}

/// Per-episode series CSV for one record.
pub fn episodes_csv(record: &TrainingRecord) -> String {
    let mut out = String::from("episode,reward,success,energy_j\n");
    for i in 0..record.episodes_run {
        out.push_str(&format!(
            "{},{},{},{}\n",
            i + 1,
            record.episode_rewards[i],
            record.episode_success[i] as u8,
            record.episode_energy[i],
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(env: &str, area: f64, time_s: f64, energy_j: f64) -> TrainingRecord {
        TrainingRecord {
            env_id: env.into(),
            area_m2: area,
            episodes_run: 0,
            convergence_episode: None,
            success95_episode: None,
            time_s,
            energy_j,
            episode_rewards: vec![],
            episode_success: vec![],
            episode_energy: vec![],
            failed: false,
        }
    }

    #[test]
    fn convergence_constant_series_at_window() {
        let series = vec![5.0; 300];
        assert_eq!(convergence_episode(&series, 100, 4.0), Some(100));
    }

    #[test]
    fn convergence_never_crossing_is_none() {
        let series = vec![-1.0; 500];
        assert_eq!(convergence_episode(&series, 100, 0.0), None);
    }

    #[test]
    fn convergence_single_crossing_matches_scan_oracle() {
        // Ramps up mid-series; oracle scans every trailing window.
        let mut series = vec![0.0; 150];
        series.extend(vec![10.0; 150]);
        let window = 40;
        let threshold = 8.0;
        let got = convergence_episode(&series, window, threshold);
        let mut oracle = None;
        for e in window..=series.len() {
            let m: f64 = series[e - window..e].iter().sum::<f64>() / window as f64;
            if m >= threshold {
                oracle = Some(e);
                break;
            }
        }
        assert_eq!(got, oracle);
        assert!(got.is_some());
    }

    #[test]
    fn success_rate_episode_counts_hits() {
        let mut s = vec![false; 50];
        s.extend(vec![true; 100]);
        // At episode 69 the trailing 20 hold 19 hits: exactly 0.95.
        assert_eq!(success_rate_episode(&s, 20, 0.95), Some(69));
        assert_eq!(success_rate_episode(&s, 20, 1.0), Some(70));
        assert_eq!(success_rate_episode(&[false; 100], 20, 0.95), None);
    }

    #[test]
    fn published_energy_pairs_reproduce_savings() {
        // 2.34 -> 1.62 Wh is a 30.8% saving; 2.15 -> 0.89 Wh is 58.6%.
        let recs = vec![record("base", 4e6, 1.0, 2.34), record("tl", 4e6, 1.0, 1.62)];
        let (_, eta_e, _) = efficiency_ratios(&recs).unwrap();
        let savings = (1.0 - eta_e[1]) * 100.0;
        assert!((savings - 30.77).abs() < 0.01, "savings={savings}");

        let recs = vec![record("base", 4e6, 1.0, 2.15), record("tl", 4e6, 1.0, 0.89)];
        let (_, eta_e, _) = efficiency_ratios(&recs).unwrap();
        let savings = (1.0 - eta_e[1]) * 100.0;
        assert!((savings - 58.60).abs() < 0.01, "savings={savings}");
    }

    #[test]
    fn equal_records_have_unit_ratios() {
        let recs = vec![record("a", 1e6, 3.0, 7.0), record("b", 1e6, 3.0, 7.0)];
        let (eta_t, eta_e, _) = efficiency_ratios(&recs).unwrap();
        assert_eq!(eta_t, vec![1.0, 1.0]);
        assert_eq!(eta_e, vec![1.0, 1.0]);
    }

    #[test]
    fn normalization_scales_by_standard_area() {
        // A 960 x 630 m map normalizes by 10^6 / 604800.
        let recs = vec![record("ottawa", 960.0 * 630.0, 1.0, 2.0)];
        let (_, _, norm) = efficiency_ratios(&recs).unwrap();
        assert!((norm[0] - 2.0 * 1.6534391534391535).abs() < 1e-12);
    }

    #[test]
    fn zero_denominators_are_computation_errors() {
        let recs = vec![record("base", 1e6, 0.0, 1.0), record("b", 1e6, 1.0, 1.0)];
        assert!(matches!(efficiency_ratios(&recs).unwrap_err(), Error::Computation(_)));
    }

    #[test]
    fn ratio_identity_against_recomputation() {
        let recs = vec![
            record("a", 1e6, 2.0, 10.0),
            record("b", 2e6, 3.0, 4.0),
            record("c", 5e5, 7.0, 2.5),
        ];
        let (eta_t, eta_e, norm) = efficiency_ratios(&recs).unwrap();
        for (i, r) in recs.iter().enumerate() {
            assert_eq!(eta_t[i], r.time_s / recs[0].time_s);
            assert_eq!(eta_e[i], r.energy_j / recs[0].energy_j);
            assert_eq!(norm[i], r.energy_j * 1e6 / r.area_m2);
        }
        assert_eq!(eta_t[0], 1.0);
        assert_eq!(eta_e[0], 1.0);
    }

    #[test]
    fn coefficient_scaling_leaves_eta_unchanged() {
        // Power-of-two scalings are exact in binary floating point, so the
        // invariance holds bitwise.
        let base = MeterCoefficients::default();
        for scale in [0.25f64, 0.5, 2.0, 8.0] {
            let scaled = MeterCoefficients {
                c_fwd_j: base.c_fwd_j * scale,
                c_bwd_j: base.c_bwd_j * scale,
                c_env_j: base.c_env_j * scale,
                ..base
            };
            let energy = |c: &MeterCoefficients, f: u64, b: u64, e: u64| {
                c.c_fwd_j * f as f64 + c.c_bwd_j * b as f64 + c.c_env_j * e as f64
            };
            let e1 = energy(&base, 1000, 400, 2500);
            let e2 = energy(&base, 700, 280, 1750);
            let s1 = energy(&scaled, 1000, 400, 2500);
            let s2 = energy(&scaled, 700, 280, 1750);
            assert_eq!(e2 / e1, s2 / s1);
        }
    }

    #[test]
    fn csv_shapes() {
        let mut r = record("env1", 4e6, 10.0, 5.0);
        r.episodes_run = 2;
        r.episode_rewards = vec![1.5, -0.5];
        r.episode_success = vec![true, false];
        r.episode_energy = vec![2.5, 2.5];
        r.convergence_episode = Some(2);
        let report = TransferReport {
            records: vec![r.clone()],
            eta_time: vec![1.0],
            eta_energy: vec![1.0],
            normalized_energy: vec![1.25],
        };
        let csv = report_csv(&report);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].split(',').count(), 9);
        assert_eq!(lines[1].split(',').count(), 9);
        assert!(lines[1].starts_with("env1,2,2,NA,"));

        let ep = episodes_csv(&r);
        let lines: Vec<&str> = ep.lines().collect();
        assert_eq!(lines[0], "episode,reward,success,energy_j");
        assert_eq!(lines[1], "1,1.5,1,2.5");
        assert_eq!(lines[2], "2,-0.5,0,2.5");
    }
}
