use alloc::vec::Vec;

use super::rates::*;
use crate::time_models::FixedTimes;
use crate::Result;

/// Constant placed in front of the random-time bound, whose `O` hides it.
pub const RANDOM_BOUND_CONSTANT: f64 = 16.0;

/// Every closed-form quantity for one worker-time vector.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComplexityReport {
    pub n: usize,
    pub constants: RateConstants,
    /// `K(m)` for `m = 1..=n`.
    pub iterations: Vec<u64>,
    pub t_sync: f64,
    pub m_star: usize,
    pub t_optimal: f64,
    pub m_bar: usize,
    /// Synchronous SGD with all `n` workers.
    pub t_sync_all: f64,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub optimal_m: usize,
    pub log_gap_certificate: f64,
    /// `E[T](m)` for `m = 1..=n`, present when `R` is known.
    pub expected_random: Option<Vec<f64>>,
    pub random_bound_constant: f64,
    pub partial_participation: Option<ParticipationBound>,
}

impl ComplexityReport {
    /// `participation` is `(v, p)` for the partial-participation bound.
    pub fn compute(taus: &FixedTimes, c: &RateConstants, participation: Option<(f64, f64)>) -> Result<Self> {
        c.validate()?;
        let n = taus.n();
        let ms = 1..=n;
        let (t_sync, m_star) = t_sync(taus, c);
        let (t_optimal, m_bar) = t_optimal(taus, c);
        let expected_random = match c.r {
            Some(r) => Some(
                ms.clone()
                    .map(|m| expected_random_bound(taus, c, r, m))
                    .collect::<Result<_>>()?,
            ),
            None => None,
        };
        Ok(Self {
            n,
            constants: *c,
            iterations: ms.clone().map(|m| iteration_count(c, m)).collect::<Result<_>>()?,
            t_sync,
            m_star,
            t_optimal,
            m_bar,
            t_sync_all: t_sync_all(taus, c),
            g: ms.clone().map(|m| g_of_m(taus, c, m)).collect::<Result<_>>()?,
            h: ms.map(|m| h_of_m(taus, m)).collect::<Result<_>>()?,
            optimal_m: optimal_m(taus, c),
            log_gap_certificate: log_gap_certificate(taus, c),
            expected_random,
            random_bound_constant: RANDOM_BOUND_CONSTANT,
            partial_participation: participation
                .map(|(v, p)| partial_participation_bound(v, p, n, c))
                .transpose()?,
        })
    }
}
