//! Writes sweep results to disk.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::formats::{write_json, write_trajectory_csv};
use crate::sweep::{BestConfig, Metadata, RunConfig, RunOutcome, SweepResult};

#[derive(Serialize)]
struct Summary<'a> {
    scenario: &'a str,
    version: &'a str,
    seed: u64,
    spec_hash: &'a str,
    f_star: f64,
    runs: usize,
    succeeded: usize,
    failed: usize,
    best: &'a [BestConfig],
    grid: Vec<GridRow<'a>>,
}

#[derive(Serialize)]
struct GridRow<'a> {
    #[serde(flatten)]
    config: &'a RunConfig,
    #[serde(flatten)]
    outcome: &'a RunOutcome,
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'a str,
    seed: u64,
    spec_hash: &'a str,
    metadata: &'a Metadata,
    files: Vec<String>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    scenario: &'a str,
    config: &'a RunConfig,
    outcome: &'a RunOutcome,
    f_star: f64,
    horizon: f64,
    max_iters: Option<u64>,
    records: usize,
}

/// `<scenario>__<algo>__g<gamma>__m<m>__s<seed>`
pub fn run_stem(scenario: &str, config: &RunConfig) -> String {
    format!(
        "{scenario}__{}__g{}__m{}__s{}",
        config.algorithm, config.gamma, config.m, config.seed
    )
}

/// Writes `summary.json`, `grid.csv`, one trajectory CSV with a JSON sidecar
/// per successful run, and `manifest.json`. Returns the files written.
pub fn emit_report(result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut files = Vec::new();

    let summary = Summary {
        scenario: &result.scenario,
        version: result.metadata.version,
        seed: result.metadata.seed,
        spec_hash: &result.metadata.spec_hash,
        f_star: result.f_star,
        runs: result.runs.len(),
        succeeded: result.succeeded(),
        failed: result.runs.len() - result.succeeded(),
        best: &result.best,
        grid: result
            .runs
            .iter()
            .map(|r| GridRow {
                config: &r.config,
                outcome: &r.outcome,
            })
            .collect(),
    };
    let path = dir.join("summary.json");
    write_json(&path, &summary)?;
    files.push(path);

    let path = dir.join("grid.csv");
    write_grid_csv(&path, result)?;
    files.push(path);

    for run in &result.runs {
        let Some(tr) = &run.trajectory else { continue };
        let stem = run_stem(&result.scenario, &run.config);
        let csv = dir.join(format!("{stem}.csv"));
        write_trajectory_csv(&csv, tr)?;
        let json = dir.join(format!("{stem}.json"));
        write_json(
            &json,
            &Sidecar {
                scenario: &result.scenario,
                config: &run.config,
                outcome: &run.outcome,
                f_star: result.f_star,
                horizon: result.metadata.horizon,
                max_iters: result.metadata.max_iters,
                records: tr.records.len(),
            },
        )?;
        files.push(csv);
        files.push(json);
    }

    let path = dir.join("manifest.json");
    let names = files
        .iter()
        .map(|p| p.file_name().expect("file path").to_string_lossy().into_owned())
        .collect();
    write_json(
        &path,
        &Manifest {
            version: result.metadata.version,
            seed: result.metadata.seed,
            spec_hash: &result.metadata.spec_hash,
            metadata: &result.metadata,
            files: names,
        },
    )?;
    files.push(path);
    Ok(files)
}

fn write_grid_csv(path: &Path, result: &SweepResult) -> Result<()> {
    let io = |e: csv::Error| HarnessError::format(path, e);
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record([
        "scenario",
        "algorithm",
        "gamma",
        "m",
        "replication",
        "seed",
        "status",
        "final_time",
        "final_iter",
        "final_f",
        "final_gap",
        "final_grad_sq_norm",
        "gradients_produced",
        "gradients_used",
        "gradients_discarded",
        "error",
    ])
    .map_err(io)?;
    for run in &result.runs {
        let c = &run.config;
        let mut row = vec![
            result.scenario.clone(),
            c.algorithm.to_string(),
            c.gamma.to_string(),
            c.m.to_string(),
            c.replication.to_string(),
            c.seed.to_string(),
        ];
        match &run.outcome {
            RunOutcome::Ok(s) => row.extend([
                "ok".to_string(),
                s.final_time.to_string(),
                s.final_iter.to_string(),
                s.final_f.to_string(),
                s.final_gap.to_string(),
                s.final_grad_sq_norm.to_string(),
                s.gradients_produced.to_string(),
                s.gradients_used.to_string(),
                s.gradients_discarded.to_string(),
                String::new(),
            ]),
            RunOutcome::Failed { error } => {
                row.push("failed".into());
                row.extend(std::iter::repeat_n(String::new(), 8));
                row.push(error.clone());
            }
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}
