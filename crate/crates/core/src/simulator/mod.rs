//! Event-driven simulation of Synchronous, m-Synchronous, Asynchronous and
//! Rennala SGD on the quadratic problem under any [`TimeModel`].
//!
//! Every worker owns a random stream derived from the master seed and its
//! id. Per gradient it first draws its computation time (random delays
//! only) and then the oracle outcome, so a run is a pure function of its
//! configuration.

mod config;
mod events;
mod trajectory;

use alloc::vec;
use alloc::vec::Vec;

pub use config::{Algorithm, AsyncStepsize, SimConfig, StopRule, DEFAULT_RECORD_CAP};
pub use events::{Event, EventQueue};
pub use trajectory::{Record, Trajectory, UpdateInfo};

use crate::problem::Quadratic;
use crate::rng::{worker_stream, StreamRng};
use crate::time_models::TimeModel;
use crate::{invalid, Error, Result};
use trajectory::Recorder;

/// Runs the algorithm selected in `config`.
pub fn run(problem: &Quadratic, model: &TimeModel, config: &SimConfig) -> Result<Trajectory> {
    match config.algorithm {
        Algorithm::Sync => run_sync(problem, model, config),
        Algorithm::MSync { .. } => run_m_sync(problem, model, config),
        Algorithm::Async { .. } => run_async(problem, model, config),
        Algorithm::Rennala { .. } => run_rennala(problem, model, config),
    }
}

/// A gradient in flight.
#[derive(Debug, Clone)]
struct Job {
    version: u64,
    xi: bool,
    /// Precomputed for asynchronous SGD, which applies stale gradients.
    gradient: Option<Vec<f64>>,
}

struct Run<'a> {
    problem: &'a Quadratic,
    model: &'a TimeModel,
    cfg: &'a SimConfig,
    x: Vec<f64>,
    scratch: Vec<f64>,
    k: u64,
    rngs: Vec<StreamRng>,
    recorder: Recorder,
    produced: u64,
    used: u64,
    discarded: u64,
    updates: Vec<UpdateInfo>,
}

impl<'a> Run<'a> {
    fn new(problem: &'a Quadratic, model: &'a TimeModel, cfg: &'a SimConfig) -> Result<Self> {
        let n = model.n_workers();
        cfg.validate(n)?;
        let x = problem.initial_point();
        let mut run = Self {
            problem,
            model,
            cfg,
            scratch: vec![0.0; x.len()],
            x,
            k: 0,
            rngs: (0..n).map(|i| worker_stream(cfg.seed, i)).collect(),
            recorder: Recorder::new(cfg.record_cap),
            produced: 0,
            used: 0,
            discarded: 0,
            updates: Vec::new(),
        };
        let rec = run.evaluate(0.0);
        run.recorder.push(rec);
        Ok(run)
    }

    fn n(&self) -> usize {
        self.rngs.len()
    }

    fn evaluate(&mut self, time: f64) -> Record {
        let f = self
            .problem
            .objective_value(&self.x)
            .expect("iterate has the problem dimension");
        self.problem
            .gradient_into(&self.x, &mut self.scratch)
            .expect("iterate has the problem dimension");
        let grad_sq_norm = self.scratch.iter().map(|g| g * g).sum();
        Record {
            time,
            iter: self.k,
            f,
            grad_sq_norm,
        }
    }

    /// Worker `w` starts a gradient at `start`: completion time, then oracle
    /// outcome.
    fn draw(&mut self, w: usize, start: f64) -> (f64, bool) {
        let rng = &mut self.rngs[w];
        let finish = self.model.completion_time(w, start, rng);
        let xi = self.problem.draw_xi(rng);
        (finish, xi)
    }

    fn start(&mut self, w: usize, start: f64, queue: &mut EventQueue, jobs: &mut [Option<Job>], eager: bool) {
        let (finish, xi) = self.draw(w, start);
        let gradient = eager.then(|| {
            let mut g = vec![0.0; self.x.len()];
            self.problem
                .averaged_stochastic_gradient_into(&self.x, xi as usize, 1, &mut g)
                .expect("iterate has the problem dimension");
            g
        });
        jobs[w] = Some(Job {
            version: self.k,
            xi,
            gradient,
        });
        queue.schedule(w, finish);
    }

    /// Averages `total` oracle calls at the current iterate and steps.
    fn step_averaged(&mut self, time: f64, successes: usize, total: usize, contributors: Vec<(usize, u64)>) {
        self.problem
            .averaged_stochastic_gradient_into(&self.x, successes, total, &mut self.scratch)
            .expect("iterate has the problem dimension");
        let gamma = self.cfg.gamma;
        for (x, g) in self.x.iter_mut().zip(&self.scratch) {
            *x -= gamma * g;
        }
        self.used += total as u64;
        self.after_update(time, contributors);
    }

    fn step_with(&mut self, time: f64, gradient: &[f64], gamma: f64, contributors: Vec<(usize, u64)>) {
        for (x, g) in self.x.iter_mut().zip(gradient) {
            *x -= gamma * g;
        }
        self.used += 1;
        self.after_update(time, contributors);
    }

    fn after_update(&mut self, time: f64, contributors: Vec<(usize, u64)>) {
        if self.cfg.log_updates {
            self.updates.push(UpdateInfo {
                time,
                iter: self.k,
                contributors,
            });
        }
        self.k += 1;
        if self.recorder.wants(time, self.k) {
            let rec = self.evaluate(time);
            self.recorder.push(rec);
        } else {
            self.recorder.skip(time, self.k);
        }
    }

    /// Next event time within budget; `Ok(None)` ends the run.
    fn next_time(&self, queue: &EventQueue) -> Result<Option<f64>> {
        match queue.peek_time() {
            None if self.cfg.stop.max_time.is_some() => Ok(None),
            None => Err(Error::SimulationStalled { time: queue.now() }),
            Some(t) if self.cfg.stop.time_ok(t) => Ok(Some(t)),
            Some(_) => Ok(None),
        }
    }

    fn finish(mut self) -> Trajectory {
        if let Some((time, iter)) = self.recorder.pending() {
            debug_assert_eq!(iter, self.k);
            let rec = self.evaluate(time);
            self.recorder.push(rec);
        }
        Trajectory {
            records: self.recorder.finish(),
            gradients_produced: self.produced,
            gradients_used: self.used,
            gradients_discarded: self.discarded,
            updates: self.updates,
        }
    }
}

fn expect_algorithm(config: &SimConfig, ok: bool, name: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(invalid(
            "algorithm",
            alloc::format!("expected {name}, got {}", config.algorithm.name()),
        ))
    }
}

/// Synchronous SGD: every iteration all `n` workers compute one gradient at
/// the current iterate and the update waits for the slowest one.
pub fn run_sync(problem: &Quadratic, model: &TimeModel, config: &SimConfig) -> Result<Trajectory> {
    expect_algorithm(config, matches!(config.algorithm, Algorithm::Sync), "sync")?;
    let mut run = Run::new(problem, model, config)?;
    let n = run.n();
    let mut now = 0.0f64;
    while !config.stop.iters_done(run.k) {
        let mut done = now;
        let mut successes = 0;
        for w in 0..n {
            let (finish, xi) = run.draw(w, now);
            done = done.max(finish);
            successes += xi as usize;
        }
        if !done.is_finite() {
            if config.stop.max_time.is_some() {
                break;
            }
            return Err(Error::SimulationStalled { time: now });
        }
        if !config.stop.time_ok(done) {
            break;
        }
        run.produced += n as u64;
        let contributors = if config.log_updates {
            (0..n).map(|w| (w, run.k)).collect()
        } else {
            Vec::new()
        };
        run.step_averaged(done, successes, n, contributors);
        now = done;
    }
    Ok(run.finish())
}

/// m-Synchronous SGD: the update fires at the `m`-th gradient computed at
/// the current iterate. Workers that already delivered wait for the next
/// iteration; gradients from older iterates are discarded on arrival and
/// their worker restarts at the current iterate.
pub fn run_m_sync(problem: &Quadratic, model: &TimeModel, config: &SimConfig) -> Result<Trajectory> {
    let Algorithm::MSync { m } = config.algorithm else {
        return expect_algorithm(config, false, "m_sync").map(|_| unreachable!());
    };
    let mut run = Run::new(problem, model, config)?;
    let n = run.n();
    let mut queue = EventQueue::new();
    let mut jobs: Vec<Option<Job>> = vec![None; n];
    for w in 0..n {
        run.start(w, 0.0, &mut queue, &mut jobs, false);
    }
    let mut waiting: Vec<usize> = Vec::with_capacity(m);
    let mut successes = 0usize;
    while !config.stop.iters_done(run.k) {
        if run.next_time(&queue)?.is_none() {
            break;
        }
        let Event { time, worker } = queue.advance_to_next_event()?;
        let job = jobs[worker].take().expect("event for a busy worker");
        run.produced += 1;
        if job.version != run.k {
            run.discarded += 1;
            run.start(worker, time, &mut queue, &mut jobs, false);
            continue;
        }
        waiting.push(worker);
        successes += job.xi as usize;
        if waiting.len() == m {
            let contributors = if config.log_updates {
                waiting.iter().map(|&w| (w, run.k)).collect()
            } else {
                Vec::new()
            };
            run.step_averaged(time, successes, m, contributors);
            successes = 0;
            waiting.sort_unstable();
            for w in waiting.drain(..) {
                run.start(w, time, &mut queue, &mut jobs, false);
            }
        }
    }
    // delivered but never applied
    run.discarded += waiting.len() as u64;
    Ok(run.finish())
}

/// Asynchronous SGD: each arriving gradient, computed at iterate
/// `k - delta_k`, is applied at once and its worker restarts at the new
/// iterate.
pub fn run_async(problem: &Quadratic, model: &TimeModel, config: &SimConfig) -> Result<Trajectory> {
    let Algorithm::Async { stepsize } = config.algorithm else {
        return expect_algorithm(config, false, "async").map(|_| unreachable!());
    };
    let mut run = Run::new(problem, model, config)?;
    let n = run.n();
    let mut queue = EventQueue::new();
    let mut jobs: Vec<Option<Job>> = vec![None; n];
    for w in 0..n {
        run.start(w, 0.0, &mut queue, &mut jobs, true);
    }
    while !config.stop.iters_done(run.k) {
        if run.next_time(&queue)?.is_none() {
            break;
        }
        let Event { time, worker } = queue.advance_to_next_event()?;
        let job = jobs[worker].take().expect("event for a busy worker");
        run.produced += 1;
        let delay = run.k - job.version;
        let gamma = match stepsize {
            AsyncStepsize::Constant => config.gamma,
            AsyncStepsize::StalenessClipped { max_delay } => {
                config.gamma * (max_delay as f64 / delay.max(1) as f64).min(1.0)
            }
        };
        let gradient = job.gradient.expect("asynchronous jobs carry their gradient");
        run.step_with(time, &gradient, gamma, vec![(worker, job.version)]);
        run.start(worker, time, &mut queue, &mut jobs, true);
    }
    Ok(run.finish())
}

/// Rennala SGD: workers always compute at the current iterate; the server
/// collects `batch` gradients computed at the current iterate, then steps.
/// Gradients from older iterates are discarded. All completions sharing one
/// instant are processed before the finished workers restart, so they
/// restart at the iterate that is current after that instant.
pub fn run_rennala(problem: &Quadratic, model: &TimeModel, config: &SimConfig) -> Result<Trajectory> {
    let Algorithm::Rennala { batch } = config.algorithm else {
        return expect_algorithm(config, false, "rennala").map(|_| unreachable!());
    };
    let mut run = Run::new(problem, model, config)?;
    let n = run.n();
    let mut queue = EventQueue::new();
    let mut jobs: Vec<Option<Job>> = vec![None; n];
    for w in 0..n {
        run.start(w, 0.0, &mut queue, &mut jobs, false);
    }
    let mut collected: Vec<(usize, u64)> = Vec::new();
    let mut count = 0usize;
    let mut successes = 0usize;
    let mut finished: Vec<usize> = Vec::new();
    'outer: while !config.stop.iters_done(run.k) {
        let Some(now) = run.next_time(&queue)? else {
            break;
        };
        while queue.peek_time() == Some(now) {
            let Event { worker, .. } = queue.advance_to_next_event()?;
            let job = jobs[worker].take().expect("event for a busy worker");
            run.produced += 1;
            finished.push(worker);
            if job.version != run.k {
                run.discarded += 1;
                continue;
            }
            count += 1;
            successes += job.xi as usize;
            if config.log_updates {
                collected.push((worker, job.version));
            }
            if count == batch {
                run.step_averaged(now, successes, batch, core::mem::take(&mut collected));
                count = 0;
                successes = 0;
                if config.stop.iters_done(run.k) {
                    break 'outer;
                }
            }
        }
        for w in finished.drain(..) {
            run.start(w, now, &mut queue, &mut jobs, false);
        }
    }
    run.discarded += count as u64;
    Ok(run.finish())
}
