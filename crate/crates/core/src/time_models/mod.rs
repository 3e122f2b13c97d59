//! Computation-time models: fixed per-worker durations, random delays, and
//! time-varying computation power.

mod delay;
mod estimate;
mod fixed;
pub mod generators;
mod profile;

use alloc::vec::Vec;

use rand::Rng;

pub use delay::DelayDistribution;
pub use estimate::estimate_r;
pub use fixed::FixedTimes;
pub use generators::{IdleRule, ParticipationSchedule};
pub use profile::{Interpolation, PowerProfile};

use crate::{invalid, Result};

/// Answers "when does worker `i` finish a gradient started at `t`".
#[derive(Debug, Clone, PartialEq)]
pub enum TimeModel {
    Fixed(FixedTimes),
    /// One delay law per worker, sampled independently per gradient and
    /// independently across workers.
    Random(Vec<DelayDistribution>),
    Power(Vec<PowerProfile>),
}

impl TimeModel {
    pub fn random(delays: Vec<DelayDistribution>) -> Result<Self> {
        if delays.is_empty() {
            return Err(invalid("delays", "need at least one worker"));
        }
        delays.iter().try_for_each(DelayDistribution::validate)?;
        Ok(Self::Random(delays))
    }

    pub fn power(profiles: Vec<PowerProfile>) -> Result<Self> {
        if profiles.is_empty() {
            return Err(invalid("profiles", "need at least one worker"));
        }
        Ok(Self::Power(profiles))
    }

    pub fn n_workers(&self) -> usize {
        match self {
            Self::Fixed(f) => f.n(),
            Self::Random(d) => d.len(),
            Self::Power(p) => p.len(),
        }
    }

    /// Completion time of a gradient `worker` starts at `start`; `+inf` if
    /// the worker never finishes. Draws from `rng` only for random delays.
    pub fn completion_time<R: Rng + ?Sized>(&self, worker: usize, start: f64, rng: &mut R) -> f64 {
        match self {
            Self::Fixed(f) => start + f.tau(worker),
            Self::Random(d) => start + d[worker].sample(rng),
            Self::Power(p) => p[worker].time_to_complete(start, 1),
        }
    }

    /// Mean-delay surrogate used by the closed-form analysis.
    pub fn mean_times(&self) -> Option<FixedTimes> {
        match self {
            Self::Fixed(f) => Some(f.clone()),
            Self::Random(d) => FixedTimes::new(d.iter().map(DelayDistribution::mean).collect()).ok(),
            Self::Power(_) => None,
        }
    }
}
