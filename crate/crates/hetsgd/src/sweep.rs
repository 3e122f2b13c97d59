//! Grid sweeps over algorithms, stepsizes and group sizes.

use std::cmp::Ordering;

use hetsgd_core::problem::Quadratic;
use hetsgd_core::simulator::{run, AsyncStepsize, SimConfig, StopRule, Trajectory};
use hetsgd_core::time_models::TimeModel;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::scenario::{build_problem, build_time_model};
use crate::spec::ExperimentSpec;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One cell of the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// Index of the algorithm entry in the spec.
    pub entry: usize,
    pub algorithm: &'static str,
    pub gamma: f64,
    /// `m` for m-sync, the batch for Rennala, `n` for sync and 1 for async.
    pub m: usize,
    pub stepsize: AsyncStepsize,
    pub replication: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStats {
    pub final_time: f64,
    pub final_iter: u64,
    pub final_f: f64,
    /// `f - f*`
    pub final_gap: f64,
    pub final_grad_sq_norm: f64,
    pub gradients_produced: u64,
    pub gradients_used: u64,
    pub gradients_discarded: u64,
}

impl RunStats {
    fn from_trajectory(tr: &Trajectory, f_star: f64) -> Self {
        let last = tr.last();
        Self {
            final_time: last.time,
            final_iter: last.iter,
            final_f: last.f,
            final_gap: last.f - f_star,
            final_grad_sq_norm: last.grad_sq_norm,
            gradients_produced: tr.gradients_produced,
            gradients_used: tr.gradients_used,
            gradients_discarded: tr.gradients_discarded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunOutcome {
    Ok(RunStats),
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub config: RunConfig,
    pub outcome: RunOutcome,
    #[serde(skip)]
    pub trajectory: Option<Trajectory>,
}

/// Best `(gamma, m)` of one algorithm entry, by mean final `f` over
/// replications, then smaller `gamma`, then smaller `m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestConfig {
    pub entry: usize,
    pub algorithm: &'static str,
    pub gamma: f64,
    pub m: usize,
    pub mean_final_f: f64,
    pub mean_final_gap: f64,
    /// Index into `runs` of the first replication.
    pub run: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub version: &'static str,
    pub seed: u64,
    pub spec_hash: String,
    pub replications: u32,
    pub n: usize,
    pub d: usize,
    pub p: f64,
    pub horizon: f64,
    pub max_iters: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub scenario: String,
    pub f_star: f64,
    pub metadata: Metadata,
    pub best: Vec<BestConfig>,
    pub runs: Vec<RunRecord>,
}

impl SweepResult {
    pub fn succeeded(&self) -> usize {
        self.runs
            .iter()
            .filter(|r| matches!(r.outcome, RunOutcome::Ok(_)))
            .count()
    }

    pub fn best_for(&self, algorithm: &str) -> Option<&BestConfig> {
        self.best
            .iter()
            .filter(|b| b.algorithm == algorithm)
            .min_by(|a, b| selection_order((a.mean_final_f, a.gamma, a.m), (b.mean_final_f, b.gamma, b.m)))
    }
}

/// SHA-256 of the validated spec's canonical JSON form.
pub fn spec_hash(spec: &ExperimentSpec) -> String {
    let json = serde_json::to_vec(spec).expect("spec serializes");
    Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
}

/// Seed of replication `r`.
pub fn replication_seed(master: u64, r: u32) -> u64 {
    master.wrapping_add(r as u64)
}

/// Every cell in canonical order: algorithm entry, group size, stepsize,
/// replication.
pub fn grid(spec: &ExperimentSpec) -> Vec<RunConfig> {
    let mut cells = Vec::new();
    for (entry, a) in spec.algorithms.iter().enumerate() {
        for &m in &a.groups {
            for &gamma in &a.gammas {
                for replication in 0..spec.replications {
                    cells.push(RunConfig {
                        entry,
                        algorithm: a.kind.name(),
                        gamma,
                        m,
                        stepsize: a.stepsize,
                        replication,
                        seed: replication_seed(spec.seed, replication),
                    });
                }
            }
        }
    }
    cells
}

/// Stop rule of every run: the wall-clock budget and the optional cap.
pub fn stop_rule(spec: &ExperimentSpec) -> StopRule {
    StopRule {
        max_time: Some(spec.budget.horizon),
        max_iters: spec.budget.max_iters,
    }
}

pub fn run_cell(
    spec: &ExperimentSpec,
    problem: &Quadratic,
    model: &TimeModel,
    cell: &RunConfig,
) -> hetsgd_core::Result<Trajectory> {
    let grid = &spec.algorithms[cell.entry];
    let mut cfg = SimConfig::new(grid.algorithm(cell.m), cell.gamma, stop_rule(spec), cell.seed);
    cfg.record_cap = spec.record_cap;
    run(problem, model, &cfg)
}

fn nan_last(f: f64) -> f64 {
    if f.is_nan() {
        f64::INFINITY
    } else {
        f
    }
}

/// Total order on `(final f, gamma, m)`; NaN counts as worst.
pub fn selection_order(a: (f64, f64, usize), b: (f64, f64, usize)) -> Ordering {
    nan_last(a.0)
        .total_cmp(&nan_last(b.0))
        .then(a.1.total_cmp(&b.1))
        .then(a.2.cmp(&b.2))
}

/// Runs every cell in parallel and selects the best configuration of each
/// algorithm entry. Failed cells are recorded, not fatal.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepResult> {
    let problem = build_problem(spec)?;
    let model = build_time_model(spec)?;
    let f_star = problem.f_star();
    let cells = grid(spec);
    let runs: Vec<RunRecord> = cells
        .into_par_iter()
        .map(|config| match run_cell(spec, &problem, &model, &config) {
            Ok(tr) => RunRecord {
                outcome: RunOutcome::Ok(RunStats::from_trajectory(&tr, f_star)),
                trajectory: Some(tr),
                config,
            },
            Err(e) => RunRecord {
                outcome: RunOutcome::Failed { error: e.to_string() },
                trajectory: None,
                config,
            },
        })
        .collect();
    let best = select_best(&runs, spec.replications);
    Ok(SweepResult {
        scenario: spec.scenario.clone(),
        f_star,
        metadata: Metadata {
            version: VERSION,
            seed: spec.seed,
            spec_hash: spec_hash(spec),
            replications: spec.replications,
            n: spec.n,
            d: spec.problem.d,
            p: spec.problem.p,
            horizon: spec.budget.horizon,
            max_iters: spec.budget.max_iters,
        },
        best,
        runs,
    })
}

/// Groups replications of each `(entry, gamma, m)`; a configuration with any
/// failed replication is not eligible.
pub fn select_best(runs: &[RunRecord], replications: u32) -> Vec<BestConfig> {
    let reps = replications.max(1) as usize;
    let mut best: Vec<BestConfig> = Vec::new();
    for (start, group) in runs.chunks(reps).enumerate().map(|(i, g)| (i * reps, g)) {
        let stats: Option<Vec<&RunStats>> = group
            .iter()
            .map(|r| match &r.outcome {
                RunOutcome::Ok(s) => Some(s),
                RunOutcome::Failed { .. } => None,
            })
            .collect();
        let Some(stats) = stats else { continue };
        let k = stats.len() as f64;
        let c = &group[0].config;
        let candidate = BestConfig {
            entry: c.entry,
            algorithm: c.algorithm,
            gamma: c.gamma,
            m: c.m,
            mean_final_f: stats.iter().map(|s| s.final_f).sum::<f64>() / k,
            mean_final_gap: stats.iter().map(|s| s.final_gap).sum::<f64>() / k,
            run: start,
        };
        match best.iter_mut().find(|b| b.entry == c.entry) {
            Some(b) => {
                let key = |x: &BestConfig| (x.mean_final_f, x.gamma, x.m);
                if selection_order(key(&candidate), key(b)) == Ordering::Less {
                    *b = candidate;
                }
            }
            None => best.push(candidate),
        }
    }
    best
}
