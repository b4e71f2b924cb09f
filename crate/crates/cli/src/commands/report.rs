//! `report`: rebuild the comparison table from a previously written
//! `compare_records.csv`, recomputing medians and savings from the raw rows.

use std::collections::BTreeMap;
use std::path::Path;

use uavtl::error::{Error, Result};

use super::compare::median;

#[derive(Debug, Clone)]
struct Row {
    environment: String,
    arm: String,
    episodes: usize,
    convergence_ep: Option<usize>,
    success95_ep: Option<usize>,
    time_s: f64,
    energy_j: f64,
}

fn parse_records(text: &str) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != "environment,arm,seed,episodes,convergence_ep,success95_ep,time_s,energy_j" {
                return Err(Error::parse(1, 1, "unexpected compare_records.csv header"));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::parse(i + 1, 1, format!("expected 8 columns, found {}", fields.len())));
        }
        let opt = |s: &str, col: usize| -> Result<Option<usize>> {
            if s == "NA" {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| Error::parse(i + 1, col, "bad episode index"))
            }
        };
        rows.push(Row {
            environment: fields[0].to_string(),
            arm: fields[1].to_string(),
            episodes: fields[3].parse().map_err(|_| Error::parse(i + 1, 4, "bad episode count"))?,
            convergence_ep: opt(fields[4], 5)?,
            success95_ep: opt(fields[5], 6)?,
            time_s: fields[6].parse().map_err(|_| Error::parse(i + 1, 7, "bad time"))?,
            energy_j: fields[7].parse().map_err(|_| Error::parse(i + 1, 8, "bad energy"))?,
        });
    }
    Ok(rows)
}

pub fn render(records_csv: &str) -> Result<String> {
    let rows = parse_records(records_csv)?;
    // (environment, arm) -> metric vectors, in first-seen order.
    let mut order: Vec<(String, String)> = Vec::new();
    let mut groups: BTreeMap<(String, String), Vec<&Row>> = BTreeMap::new();
    for row in &rows {
        let key = (row.environment.clone(), row.arm.clone());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(row);
    }
    let mut out = String::from(
        "environment,arm,Convergence Episodes,Convergence Time (h),Episodes to 95% Success Rate,Energy Consumption (Wh)\n",
    );
    for key in order {
        let rows = &groups[&key];
        let conv: Vec<f64> =
            rows.iter().map(|r| r.convergence_ep.unwrap_or(r.episodes) as f64).collect();
        let s95: Vec<f64> = rows.iter().map(|r| r.success95_ep.unwrap_or(r.episodes) as f64).collect();
        let th: Vec<f64> = rows.iter().map(|r| r.time_s / 3600.0).collect();
        let wh: Vec<f64> = rows.iter().map(|r| r.energy_j / 3600.0).collect();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            key.0,
            key.1,
            median(&conv),
            median(&th),
            median(&s95),
            median(&wh)
        ));
    }
    Ok(out)
}

pub fn run(out_dir: &Path) -> Result<String> {
    let path = out_dir.join("compare_records.csv");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e} (run `compare` first)", path.display())))?;
    render(&text)
}
