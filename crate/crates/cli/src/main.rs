use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use uavtl::error::{Error, Result};
use uavtl_cli::commands::{compare, gen_env, ingest, report, train};
use uavtl_cli::config::RunConfig;
use uavtl_cli::exit_code;

#[derive(Parser)]
#[command(name = "uavtl", version, about = "UAV trajectory training, radio-map ingestion and transfer comparisons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigOpt {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigOpt {
    fn load(&self) -> Result<RunConfig> {
        match &self.config {
            Some(path) => RunConfig::load(path),
            None => Ok(RunConfig::default()),
        }
    }

    fn out_dir(&self, cfg: &RunConfig) -> PathBuf {
        self.out.clone().unwrap_or_else(|| cfg.out_dir.clone())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize an environment preset and write its radio maps.
    GenEnv {
        #[command(flatten)]
        common: ConfigOpt,
        /// Generator preset: env1, env2 or smoke.
        #[arg(long)]
        preset: String,
        /// Output file stem; defaults to the preset name.
        #[arg(long)]
        name: Option<String>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Outage threshold in dB for the SINR conversion.
        #[arg(long, default_value_t = 0.0)]
        gamma_th: f64,
    },
    /// Convert a receiver-grid export into an outage map file.
    Ingest {
        #[command(flatten)]
        common: ConfigOpt,
        /// Input GRID v1 file.
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        gamma_th: f64,
        /// Rescale target, defaults to the input dimensions.
        #[arg(long)]
        cols: Option<usize>,
        #[arg(long)]
        rows: Option<usize>,
    },
    /// Train one environment from scratch or from a base checkpoint.
    Train {
        #[command(flatten)]
        common: ConfigOpt,
        /// Environment name from the config; defaults to the first entry.
        #[arg(long)]
        env: Option<String>,
        #[arg(long, value_parser = ["scratch", "transfer"], default_value = "scratch")]
        mode: String,
        /// Base checkpoint (required with --mode transfer).
        #[arg(long)]
        base: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run scratch and transfer arms over the configured environments.
    Compare {
        #[command(flatten)]
        common: ConfigOpt,
        /// Parallel worker slots; defaults to min(seeds, cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Rebuild the comparison table from recorded results.
    Report {
        #[command(flatten)]
        common: ConfigOpt,
    },
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenEnv { common, preset, name, seed, gamma_th } => {
            let cfg = common.load()?;
            let out = common.out_dir(&cfg);
            let files =
                gen_env::run(&cfg, &gen_env::GenEnvArgs { preset, name, seed, gamma_th_db: gamma_th }, &out)?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(())
        }
        Command::Ingest { common, grid, gamma_th, cols, rows } => {
            let cfg = common.load()?;
            let out = common.out_dir(&cfg);
            let path = ingest::run(
                &ingest::IngestArgs { grid_file: grid, gamma_th_db: gamma_th, target_cols: cols, target_rows: rows },
                &out,
            )?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Train { common, env, mode, base, seed } => {
            let cfg = common.load()?;
            let out = common.out_dir(&cfg);
            let mode = match mode.as_str() {
                "scratch" => train::TrainMode::Scratch,
                "transfer" => train::TrainMode::Transfer,
                other => return Err(Error::Usage(format!("unknown mode `{other}`"))),
            };
            let result = train::run(&cfg, &train::TrainArgs { env, mode, base_checkpoint: base, seed }, &out)?;
            let r = &result.record;
            println!(
                "env={} episodes={} convergence={} success95={} time_s={} energy_j={}",
                r.env_id,
                r.episodes_run,
                r.convergence_episode.map(|e| e.to_string()).unwrap_or_else(|| "NA".into()),
                r.success95_episode.map(|e| e.to_string()).unwrap_or_else(|| "NA".into()),
                r.time_s,
                r.energy_j
            );
            println!("checkpoint: {}", result.checkpoint_path.display());
            Ok(())
        }
        Command::Compare { common, jobs } => {
            let cfg = common.load()?;
            let out = common.out_dir(&cfg);
            let outcome = compare::run(&cfg, &compare::CompareArgs { jobs }, &out)?;
            for c in &outcome.comparisons {
                println!(
                    "{}: convergence {} -> {} episodes, energy {} -> {} Wh (eta_energy {})",
                    c.environment,
                    c.scratch.convergence_episodes,
                    c.transfer.convergence_episodes,
                    c.scratch.energy_wh,
                    c.transfer.energy_wh,
                    c.median_eta_energy
                );
            }
            if !outcome.failed_envs.is_empty() {
                eprintln!("partial report; failed environments: {}", outcome.failed_envs.join(", "));
            }
            println!("report: {}", out.join("compare_table.csv").display());
            Ok(())
        }
        Command::Report { common } => {
            let cfg = common.load()?;
            let out = common.out_dir(&cfg);
            let table = report::run(&out)?;
            print!("{table}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
