//! `ingest`: parse a receiver-grid export, repair gaps with the median fill,
//! optionally rescale, convert to outage probabilities and write the
//! `OUTAGE v1` file.

use std::path::{Path, PathBuf};

use uavtl::error::Result;
use uavtl::radiomap::{median_fill, parse_grid_file, rescale, sinr_to_outage};

pub struct IngestArgs {
    pub grid_file: PathBuf,
    pub gamma_th_db: f64,
    pub target_cols: Option<usize>,
    pub target_rows: Option<usize>,
}

pub fn run(args: &IngestArgs, out_dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let bytes = std::fs::read(&args.grid_file)?;
    let raw = parse_grid_file::<f64>(&bytes)?;
    let filled = median_fill(&raw)?;
    let cols = args.target_cols.unwrap_or(filled.cols);
    let rows = args.target_rows.unwrap_or(filled.rows);
    let scaled = rescale(&filled, cols, rows)?;
    let outage = sinr_to_outage(&scaled, args.gamma_th_db)?;

    let stem = args
        .grid_file
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "grid".into());
    let path = out_dir.join(format!("{stem}.outage"));
    std::fs::write(&path, outage.to_file_string())?;
    Ok(path)
}
