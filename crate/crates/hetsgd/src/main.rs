use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use hetsgd::analysis::{analyze, estimate_distribution_r, DEFAULT_R_SAMPLES};
use hetsgd::formats::{read_samples, write_bounds_csv, write_json, write_trajectory_csv};
use hetsgd::gap::{bound_sequences, cover, run_gap_study};
use hetsgd::report::{emit_report, run_stem};
use hetsgd::scenario::{build_problem, build_time_model};
use hetsgd::spec::{ExperimentSpec, TimeModelRecipe};
use hetsgd::sweep::{grid, run_cell, run_sweep, RunOutcome};
use hetsgd::{load_spec, HarnessError, Overrides};
use hetsgd_core::time_models::estimate_r;

#[derive(Parser)]
#[command(
    name = "hetsgd",
    version,
    about = "Simulate and analyze distributed SGD under heterogeneous compute"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its trajectory.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Algorithm entry of the spec to run.
        #[arg(long, default_value_t = 0)]
        entry: usize,
        /// Stepsize; defaults to the largest in the entry's grid.
        #[arg(long)]
        gamma: Option<f64>,
        /// m or batch size; defaults to the first in the entry's grid.
        #[arg(long)]
        m: Option<usize>,
    },
    /// Run the full grid and write summary.json, grid.csv and trajectories.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate the bound gap on a power-profile scenario.
    Gap {
        #[command(flatten)]
        common: Common,
        /// Whole gradients per upper-recursion step.
        #[arg(long)]
        upper_units: Option<u64>,
    },
    /// Print every closed-form complexity for the spec's time model.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        noise_ratio: Option<f64>,
        #[arg(long)]
        l_delta_over_eps: Option<f64>,
        #[arg(long)]
        r: Option<f64>,
    },
    /// Estimate the sub-exponential scale R of delays.
    EstimateR {
        /// Spec with a random time model to sample from.
        spec: Option<PathBuf>,
        /// File with one delay per line (or a CSV whose first column holds them).
        #[arg(long, conflicts_with = "spec")]
        samples: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_R_SAMPLES)]
        draws: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct Common {
    spec: PathBuf,
    /// Full scale: n = 1000 workers, d = 1000.
    #[arg(long)]
    full: bool,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<u32>,
    /// Output directory; defaults to the spec's output_dir or out/<scenario>.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> hetsgd::Result<ExperimentSpec> {
        load_spec(
            &self.spec,
            &Overrides {
                full: self.full,
                n: self.n,
                d: self.d,
                p: self.p,
                horizon: self.horizon,
                seed: self.seed,
                replications: self.replications,
                output_dir: self.out.clone(),
            },
        )
    }
}

fn out_dir(spec: &ExperimentSpec) -> PathBuf {
    spec.output_dir
        .clone()
        .unwrap_or_else(|| Path::new("out").join(&spec.scenario))
}

/// Exit status of an error: 1 for bad input, 2 for failed runs.
fn status(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<HarnessError>() {
        Some(h) if h.is_validation() => 1,
        Some(HarnessError::Core(hetsgd_core::Error::InvalidParameter { .. })) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(status(&e))
        }
    }
}

fn execute(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Simulate {
            common,
            entry,
            gamma,
            m,
        } => simulate(&common, entry, gamma, m),
        Command::Sweep { common } => sweep(&common),
        Command::Gap { common, upper_units } => gap(&common, upper_units),
        Command::Analyze {
            common,
            noise_ratio,
            l_delta_over_eps,
            r,
        } => {
            let spec = common.load()?;
            let mut settings = spec.analysis;
            settings.noise_ratio = noise_ratio.unwrap_or(settings.noise_ratio);
            settings.l_delta_over_eps = l_delta_over_eps.unwrap_or(settings.l_delta_over_eps);
            settings.r = r.or(settings.r);
            let analysis = analyze(&spec, &settings)?;
            println!("{}", serde_json::to_string_pretty(&analysis)?);
            if let Some(dir) = &common.out {
                std::fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
                write_json(&dir.join("analysis.json"), &analysis)?;
            }
            Ok(0)
        }
        Command::EstimateR {
            spec,
            samples,
            draws,
            seed,
        } => {
            let r = match (spec, samples) {
                (_, Some(path)) => estimate_r(&read_samples(&path)?).map_err(HarnessError::from)?,
                (Some(path), None) => {
                    let spec = load_spec(&path, &Overrides::default())?;
                    let TimeModelRecipe::Random { distribution } = &spec.time_model else {
                        return Err(HarnessError::Validation(vec![
                            "estimate-r needs time_model.kind = \"random\"".into()
                        ])
                        .into());
                    };
                    estimate_distribution_r(distribution, draws, seed.unwrap_or(spec.seed))?
                }
                (None, None) => return Err(HarnessError::Validation(vec!["give a spec or --samples".into()]).into()),
            };
            println!("{r}");
            Ok(0)
        }
    }
}

fn simulate(common: &Common, entry: usize, gamma: Option<f64>, m: Option<usize>) -> anyhow::Result<u8> {
    let spec = common.load()?;
    let Some(algo) = spec.algorithms.get(entry) else {
        return Err(HarnessError::Validation(vec![format!(
            "algorithm entry {entry} does not exist ({} defined)",
            spec.algorithms.len()
        )])
        .into());
    };
    let mut cell = grid(&spec)
        .into_iter()
        .find(|c| c.entry == entry)
        .expect("every entry has cells");
    cell.gamma = gamma.unwrap_or(*algo.gammas.last().expect("nonempty grid"));
    cell.m = m.unwrap_or(cell.m);
    let problem = build_problem(&spec)?;
    let model = build_time_model(&spec)?;
    let tr = run_cell(&spec, &problem, &model, &cell).map_err(HarnessError::from)?;
    let dir = out_dir(&spec);
    std::fs::create_dir_all(&dir).with_context(|| dir.display().to_string())?;
    let path = dir.join(format!("{}.csv", run_stem(&spec.scenario, &cell)));
    write_trajectory_csv(&path, &tr)?;
    let last = tr.last();
    println!(
        "{} gamma={} m={}: t={} iter={} f-f*={:e} |grad|^2={:e} produced={} used={} discarded={}",
        cell.algorithm,
        cell.gamma,
        cell.m,
        last.time,
        last.iter,
        last.f - problem.f_star(),
        last.grad_sq_norm,
        tr.gradients_produced,
        tr.gradients_used,
        tr.gradients_discarded
    );
    println!("wrote {}", path.display());
    Ok(0)
}

fn sweep(common: &Common) -> anyhow::Result<u8> {
    let spec = common.load()?;
    let result = run_sweep(&spec)?;
    let dir = out_dir(&spec);
    let files = emit_report(&result, &dir)?;
    for b in &result.best {
        println!(
            "best {} (entry {}): gamma={} m={} f-f*={:e}",
            b.algorithm, b.entry, b.gamma, b.m, b.mean_final_gap
        );
    }
    let failed = result.runs.len() - result.succeeded();
    println!(
        "{} runs, {} failed; {} files in {}",
        result.runs.len(),
        failed,
        files.len(),
        dir.display()
    );
    for run in &result.runs {
        if let RunOutcome::Failed { error } = &run.outcome {
            eprintln!("failed {}: {error}", run_stem(&spec.scenario, &run.config));
        }
    }
    Ok(if !result.runs.is_empty() && failed == result.runs.len() {
        2
    } else {
        0
    })
}

fn gap(common: &Common, upper_units: Option<u64>) -> anyhow::Result<u8> {
    let mut spec = common.load()?;
    if let Some(u) = upper_units {
        if u == 0 {
            return Err(HarnessError::Validation(vec!["--upper-units must be at least 1".into()]).into());
        }
        spec.gap.upper_units = u;
    }
    let table = run_gap_study(&spec)?;
    for row in &table.rows {
        match (row.best_m, row.best_ratio) {
            (Some(m), Some(r)) => println!(
                "sigma^2/eps = {}: min ratio {r:.4} at m = {m} (t_lower = {:.4})",
                row.noise_ratio, row.t_lower
            ),
            _ => println!("sigma^2/eps = {}: every upper recursion stalled", row.noise_ratio),
        }
    }
    if table.extrapolated {
        eprintln!("warning: recursions ran past the profile data and used its constant tail");
    }
    let dir = out_dir(&spec);
    std::fs::create_dir_all(&dir).with_context(|| dir.display().to_string())?;
    write_json(&dir.join("gap.json"), &table)?;
    let TimeModelRecipe::Power { generator } = &spec.time_model else {
        unreachable!("gap study checked the model")
    };
    let (profiles, _) = cover(generator, spec.n, &spec.gap)?;
    for row in &table.rows {
        if let Some(m) = row.best_m {
            let seqs = bound_sequences(&profiles, &spec.gap, row.noise_ratio, m)?;
            write_bounds_csv(&dir.join(format!("bounds__noise{}__m{m}.csv", row.noise_ratio)), &seqs)?;
        }
    }
    println!("wrote {}", dir.display());
    let stalled = table.cells.iter().all(|c| c.ratio.is_none());
    Ok(if stalled { 2 } else { 0 })
}
