use crate::{invalid, Result};

/// Step size rule of asynchronous SGD.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum AsyncStepsize {
    /// `gamma_k = gamma`.
    #[default]
    Constant,
    /// `gamma_k = gamma * min{1, max_delay / max(delta_k, 1)}`.
    StalenessClipped { max_delay: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Algorithm {
    /// Waits for one gradient from every worker.
    Sync,
    /// Averages the first `m` gradients computed at the current iterate and
    /// discards late arrivals.
    MSync { m: usize },
    /// Applies every arriving gradient immediately.
    Async {
        #[cfg_attr(feature = "serde", serde(default))]
        stepsize: AsyncStepsize,
    },
    /// Collects `batch` gradients computed at the current iterate, then steps.
    Rennala { batch: usize },
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Sync => "sync",
            Self::MSync { .. } => "m_sync",
            Self::Async { .. } => "async",
            Self::Rennala { .. } => "rennala",
        }
    }

    /// The algorithm's size parameter: `n` for sync, `m`, `1` for async, or
    /// the batch size.
    pub fn group_size(&self, n: usize) -> usize {
        match *self {
            Self::Sync => n,
            Self::MSync { m } => m,
            Self::Async { .. } => 1,
            Self::Rennala { batch } => batch,
        }
    }
}

/// When a run ends: at the first update past `max_time`, after `max_iters`
/// updates, whichever comes first.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StopRule {
    pub max_time: Option<f64>,
    pub max_iters: Option<u64>,
}

impl StopRule {
    pub fn time(max_time: f64) -> Self {
        Self {
            max_time: Some(max_time),
            max_iters: None,
        }
    }

    pub fn iters(max_iters: u64) -> Self {
        Self {
            max_time: None,
            max_iters: Some(max_iters),
        }
    }

    pub(crate) fn time_ok(&self, t: f64) -> bool {
        self.max_time.is_none_or(|m| t <= m)
    }

    pub(crate) fn iters_done(&self, k: u64) -> bool {
        self.max_iters.is_some_and(|m| k >= m)
    }
}

pub const DEFAULT_RECORD_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimConfig {
    pub algorithm: Algorithm,
    pub gamma: f64,
    pub stop: StopRule,
    pub seed: u64,
    /// Maximum number of trajectory records kept.
    pub record_cap: usize,
    /// Keep a per-update log of contributing workers and point versions.
    pub log_updates: bool,
}

impl SimConfig {
    pub fn new(algorithm: Algorithm, gamma: f64, stop: StopRule, seed: u64) -> Self {
        Self {
            algorithm,
            gamma,
            stop,
            seed,
            record_cap: DEFAULT_RECORD_CAP,
            log_updates: false,
        }
    }

    pub fn with_update_log(mut self) -> Self {
        self.log_updates = true;
        self
    }

    pub fn validate(&self, n_workers: usize) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(invalid("gamma", "must be positive and finite"));
        }
        match self.algorithm {
            Algorithm::MSync { m } if m == 0 || m > n_workers => {
                return Err(invalid("m", "need 1 <= m <= n"));
            }
            Algorithm::Rennala { batch: 0 } => return Err(invalid("batch", "must be at least 1")),
            Algorithm::Async {
                stepsize: AsyncStepsize::StalenessClipped { max_delay: 0 },
            } => return Err(invalid("max_delay", "must be at least 1")),
            _ => {}
        }
        if self.stop.max_time.is_none() && self.stop.max_iters.is_none() {
            return Err(invalid("stop", "set a time budget, an iteration cap, or both"));
        }
        if let Some(t) = self.stop.max_time {
            if !(t > 0.0) {
                return Err(invalid("max_time", "must be positive"));
            }
        }
        Ok(())
    }
}
