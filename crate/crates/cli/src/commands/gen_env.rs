//! `gen-env`: synthesize an environment from a preset, compute its SINR and
//! outage maps, and write the bundle (environment TOML, grid files and a
//! per-cell outage CSV for plotting).

use std::path::{Path, PathBuf};

use uavtl::error::{Error, Result};
use uavtl::propagation::compute_sinr_map;
use uavtl::radiomap::sinr_to_outage;

use crate::config::{EnvEntry, RunConfig};

pub struct GenEnvArgs {
    pub preset: String,
    pub name: Option<String>,
    pub seed: u64,
    pub gamma_th_db: f64,
}

fn outage_csv(map: &uavtl::OutageMap64) -> String {
    let mut out = String::from("x_m,y_m,outage\n");
    for r in 0..map.rows {
        for c in 0..map.cols {
            let p = map.cell_center(r, c);
            out.push_str(&format!("{},{},{}\n", p.x, p.y, map.value(r, c)));
        }
    }
    out
}

pub fn run(cfg: &RunConfig, args: &GenEnvArgs, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let name = args.name.clone().unwrap_or_else(|| args.preset.clone());
    let entry = EnvEntry {
        name: name.clone(),
        preset: Some(args.preset.clone()),
        gen_seed: Some(args.seed),
        grid_file: None,
        outage_file: None,
        gamma_th_db: Some(args.gamma_th_db),
        target_cols: None,
        target_rows: None,
        launch_area: None,
        target_area: None,
        uav_altitude_m: None,
        convergence_threshold: None,
    };
    let env = cfg.generate_preset_env(&entry)?;
    let channel = cfg.channel.to_params()?;
    let sinr = compute_sinr_map(&env, &channel)?;
    let outage = sinr_to_outage(&sinr, args.gamma_th_db)?;

    let env_toml =
        toml::to_string_pretty(&env).map_err(|e| Error::Config(format!("cannot serialize environment: {e}")))?;
    let mut written = Vec::new();
    let mut write = |suffix: &str, contents: &str| -> Result<()> {
        let path = out_dir.join(format!("{name}.{suffix}"));
        std::fs::write(&path, contents)?;
        written.push(path);
        Ok(())
    };
    write("env.toml", &env_toml)?;
    write("sinr.grid", &sinr.to_file_string())?;
    write("outage.grid", &outage.to_file_string())?;
    write("outage.csv", &outage_csv(&outage))?;
    Ok(written)
}
