//! Training energy accounting. The default proxy mode converts work counters
//! (network forwards, backwards, environment steps) into joules and seconds
//! through configurable coefficients, which keeps runs hardware-independent
//! and bit-reproducible. Platform mode reads RAPL energy counters where the
//! host exposes them and is explicitly non-deterministic.

use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeterMode {
    Proxy,
    Platform,
}

/// Joules and seconds per counted unit of work.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeterCoefficients {
    pub c_fwd_j: f64,
    pub c_bwd_j: f64,
    pub c_env_j: f64,
    pub t_fwd_s: f64,
    pub t_bwd_s: f64,
    pub t_env_s: f64,
}

impl Default for MeterCoefficients {
    fn default() -> Self {
        // Ballpark per-op costs of a small CPU MLP at ~30 W package power.
        MeterCoefficients {
            c_fwd_j: 6e-5,
            c_bwd_j: 1.2e-4,
            c_env_j: 3e-5,
            t_fwd_s: 2e-6,
            t_bwd_s: 4e-6,
            t_env_s: 1e-6,
        }
    }
}

impl MeterCoefficients {
    pub fn validate(&self) -> Result<()> {
        let all = [self.c_fwd_j, self.c_bwd_j, self.c_env_j, self.t_fwd_s, self.t_bwd_s, self.t_env_s];
        if all.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(Error::Config("meter coefficients must be non-negative and finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug)]
enum Backend {
    Proxy,
    Platform { started: Instant, rapl_paths: Vec<std::path::PathBuf>, rapl_start_uj: u64 },
}

/// Monotone work counters plus an energy/time backend.
#[derive(Debug)]
pub struct EnergyMeter {
    coeff: MeterCoefficients,
    forward_passes: u64,
    backward_passes: u64,
    env_steps: u64,
    backend: Backend,
}

impl EnergyMeter {
    pub fn new_proxy(coeff: MeterCoefficients) -> Result<Self> {
        coeff.validate()?;
        Ok(EnergyMeter {
            coeff,
            forward_passes: 0,
            backward_passes: 0,
            env_steps: 0,
            backend: Backend::Proxy,
        })
    }

    /// Platform meter backed by RAPL package counters; fails where the host
    /// exposes none.
    pub fn new_platform(coeff: MeterCoefficients) -> Result<Self> {
        coeff.validate()?;
        let rapl_paths = rapl_package_paths();
        if rapl_paths.is_empty() {
            return Err(Error::Config(
                "platform energy mode requires RAPL counters under /sys/class/powercap".into(),
            ));
        }
        let rapl_start_uj = read_rapl_total(&rapl_paths)?;
        Ok(EnergyMeter {
            coeff,
            forward_passes: 0,
            backward_passes: 0,
            env_steps: 0,
            backend: Backend::Platform { started: Instant::now(), rapl_paths, rapl_start_uj },
        })
    }

    pub fn new(mode: MeterMode, coeff: MeterCoefficients) -> Result<Self> {
        match mode {
            MeterMode::Proxy => Self::new_proxy(coeff),
            MeterMode::Platform => Self::new_platform(coeff),
        }
    }

    pub fn mode(&self) -> MeterMode {
        match self.backend {
            Backend::Proxy => MeterMode::Proxy,
            Backend::Platform { .. } => MeterMode::Platform,
        }
    }

    pub fn record_forward(&mut self, n: u64) {
        self.forward_passes += n;
    }

    pub fn record_backward(&mut self, n: u64) {
        self.backward_passes += n;
    }

    pub fn record_env_steps(&mut self, n: u64) {
        self.env_steps += n;
    }

    /// `(forward_passes, backward_passes, env_steps)`.
    pub fn counters(&self) -> (u64, u64, u64) {
        (self.forward_passes, self.backward_passes, self.env_steps)
    }

    pub fn energy_j(&self) -> f64 {
        match &self.backend {
            Backend::Proxy => {
                self.coeff.c_fwd_j * self.forward_passes as f64
                    + self.coeff.c_bwd_j * self.backward_passes as f64
                    + self.coeff.c_env_j * self.env_steps as f64
            }
            Backend::Platform { rapl_paths, rapl_start_uj, .. } => {
                let now = read_rapl_total(rapl_paths).unwrap_or(*rapl_start_uj);
                now.saturating_sub(*rapl_start_uj) as f64 * 1e-6
            }
        }
    }

    pub fn time_s(&self) -> f64 {
        match &self.backend {
            Backend::Proxy => {
                self.coeff.t_fwd_s * self.forward_passes as f64
                    + self.coeff.t_bwd_s * self.backward_passes as f64
                    + self.coeff.t_env_s * self.env_steps as f64
            }
            Backend::Platform { started, .. } => started.elapsed().as_secs_f64(),
        }
    }
}

fn rapl_package_paths() -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    if let Ok(entries) = std::fs::read_dir("/sys/class/powercap") {
        for entry in entries.flatten() {
            let name = entry.file_name();
            let name = name.to_string_lossy();
            // Top-level package domains only (intel-rapl:0, intel-rapl:1, ...).
            if name.starts_with("intel-rapl:") && !name[11..].contains(':') {
                let p = entry.path().join("energy_uj");
                if p.exists() {
                    out.push(p);
                }
            }
        }
    }
    out.sort();
    out
}

fn read_rapl_total(paths: &[std::path::PathBuf]) -> Result<u64> {
    let mut total = 0u64;
    for p in paths {
        let text = std::fs::read_to_string(p)?;
        let v: u64 = text
            .trim()
            .parse()
            .map_err(|_| Error::Data(format!("unreadable RAPL counter at {}", p.display())))?;
        total += v;
    }
    Ok(total)
}
