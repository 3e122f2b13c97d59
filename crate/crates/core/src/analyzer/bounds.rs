use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Reverse;

use super::rates::{iteration_count, RateConstants};
use crate::time_models::PowerProfile;
use crate::{invalid, Error, Result};

/// Units each of the `m` selected workers must finish per upper-bound step.
pub const UPPER_STEP_UNITS: u64 = 2;

/// Per-step unit count under which the reference gap ratios come out
/// (about 1.5 and 1.85 on chaotic profiles, 1.1 and 1.4 on periodic ones).
pub const REFERENCE_GAP_UNITS: u64 = 1;

/// Universal constants of the lower-bound recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LowerConstants {
    pub c1: f64,
    pub c2: f64,
}

impl Default for LowerConstants {
    fn default() -> Self {
        Self { c1: 16.0, c2: 1.0 }
    }
}

impl LowerConstants {
    fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c1.is_finite() && self.c2 > 0.0 && self.c2.is_finite()) {
            return Err(invalid("c1, c2", "must be positive and finite"));
        }
        Ok(())
    }

    /// `K̲ = ⌈c1 LΔ/ε⌉`.
    pub fn steps(&self, c: &RateConstants) -> usize {
        libm::ceil(self.c1 * c.l_delta_over_eps()) as usize
    }

    /// Whole gradients needed per step: `c2 ⌈σ²/ε⌉`, rounded up, at least 1.
    pub fn batch(&self, c: &RateConstants) -> u64 {
        (libm::ceil(self.c2 * libm::ceil(c.noise_ratio())) as u64).max(1)
    }
}

#[derive(Copy, Clone, PartialEq)]
struct Arrival(f64, usize, u64);

impl Eq for Arrival {}

impl PartialOrd for Arrival {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Arrival {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// `min{t : Σ_i N_i(t0, t) >= target}`: the `target`-th smallest of the
/// per-worker completion times of 1, 2, ... whole units after `t0`.
/// `None` if the workers never deliver that many.
pub fn lower_step(profiles: &[PowerProfile], t0: f64, target: u64) -> Option<f64> {
    if target == 0 {
        return Some(t0);
    }
    let mut heap: BinaryHeap<Reverse<Arrival>> = profiles
        .iter()
        .enumerate()
        .map(|(i, p)| Arrival(p.time_to_complete(t0, 1), i, 1))
        .filter(|a| a.0.is_finite())
        .map(Reverse)
        .collect();
    let mut popped = 0;
    while let Some(Reverse(Arrival(t, i, j))) = heap.pop() {
        popped += 1;
        if popped == target {
            return Some(t);
        }
        let next = profiles[i].time_to_complete(t0, j + 1);
        if next.is_finite() {
            heap.push(Reverse(Arrival(next, i, j + 1)));
        }
    }
    None
}

/// `min{t : max_{|S| = m} min_{i in S} N_i(t0, t) = units}`: the `m`-th
/// smallest time by which a worker finishes `units` units after `t0`.
pub fn upper_step(profiles: &[PowerProfile], t0: f64, m: usize, units: u64) -> Option<f64> {
    let mut times: Vec<f64> = profiles.iter().map(|p| p.time_to_complete(t0, units)).collect();
    let (_, t, _) = times.select_nth_unstable_by(m - 1, f64::total_cmp);
    t.is_finite().then_some(*t)
}

fn check_profiles(profiles: &[PowerProfile], m: usize) -> Result<()> {
    if profiles.is_empty() {
        return Err(invalid("profiles", "need at least one worker"));
    }
    if m == 0 || m > profiles.len() {
        return Err(invalid("m", alloc::format!("need 1 <= m <= {}", profiles.len())));
    }
    Ok(())
}

/// `t̲_0 = 0, ..., t̲_K̲` of the universal lower bound.
pub fn lower_bound_sequence(profiles: &[PowerProfile], c: &RateConstants, lc: LowerConstants) -> Result<Vec<f64>> {
    c.validate()?;
    lc.validate()?;
    check_profiles(profiles, 1)?;
    let steps = lc.steps(c);
    let target = lc.batch(c);
    let mut seq = Vec::with_capacity(steps + 1);
    seq.push(0.0);
    for k in 0..steps {
        let next = lower_step(profiles, seq[k], target).ok_or(Error::RecursionStalled { reached: k })?;
        seq.push(next);
    }
    Ok(seq)
}

/// `t̄_0 = 0, ..., t̄_K̄` of m-Synchronous SGD.
pub fn upper_bound_sequence(profiles: &[PowerProfile], c: &RateConstants, m: usize) -> Result<Vec<f64>> {
    upper_bound_sequence_with_units(profiles, c, m, UPPER_STEP_UNITS)
}

/// [`upper_bound_sequence`] with `units` whole gradients per step.
pub fn upper_bound_sequence_with_units(
    profiles: &[PowerProfile],
    c: &RateConstants,
    m: usize,
    units: u64,
) -> Result<Vec<f64>> {
    check_profiles(profiles, m)?;
    if units == 0 {
        return Err(invalid("units", "must be at least 1"));
    }
    let steps = iteration_count(c, m)? as usize;
    let mut seq = Vec::with_capacity(steps + 1);
    seq.push(0.0);
    for k in 0..steps {
        let next = upper_step(profiles, seq[k], m, units).ok_or(Error::RecursionStalled { reached: k })?;
        seq.push(next);
    }
    Ok(seq)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundSequences {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub m: usize,
    pub constants: LowerConstants,
    pub upper_units: u64,
    /// `t̄_K̄ / t̲_K̲`.
    pub gap_ratio: f64,
}

impl BoundSequences {
    pub fn compute(profiles: &[PowerProfile], c: &RateConstants, m: usize, lc: LowerConstants) -> Result<Self> {
        Self::compute_with_units(profiles, c, m, lc, UPPER_STEP_UNITS)
    }

    pub fn compute_with_units(
        profiles: &[PowerProfile],
        c: &RateConstants,
        m: usize,
        lc: LowerConstants,
        upper_units: u64,
    ) -> Result<Self> {
        let lower = lower_bound_sequence(profiles, c, lc)?;
        let upper = upper_bound_sequence_with_units(profiles, c, m, upper_units)?;
        let gap_ratio = upper[upper.len() - 1] / lower[lower.len() - 1];
        Ok(Self {
            lower,
            upper,
            m,
            constants: lc,
            upper_units,
            gap_ratio,
        })
    }

    /// Rows `(k, t̲_k, t̄_k)`, with `None` past the end of the shorter one.
    pub fn rows(&self) -> impl Iterator<Item = (usize, Option<f64>, Option<f64>)> + '_ {
        (0..self.lower.len().max(self.upper.len())).map(|k| (k, self.lower.get(k).copied(), self.upper.get(k).copied()))
    }
}

/// `t̄_K̄ / t̲_K̲`.
pub fn gap_ratio(profiles: &[PowerProfile], c: &RateConstants, m: usize, lc: LowerConstants) -> Result<f64> {
    let lower = lower_bound_sequence(profiles, c, lc)?;
    let upper = upper_bound_sequence(profiles, c, m)?;
    Ok(upper[upper.len() - 1] / lower[lower.len() - 1])
}

/// Gap ratio for every `m`, with the lower sequence computed once. Entries
/// are `(m, ratio)`; stalled upper recursions are reported as errors.
pub fn gap_ratios_over_m(
    profiles: &[PowerProfile],
    c: &RateConstants,
    lc: LowerConstants,
    upper_units: u64,
) -> Result<Vec<(usize, Result<f64>)>> {
    let lower = lower_bound_sequence(profiles, c, lc)?;
    let t_lower = lower[lower.len() - 1];
    Ok((1..=profiles.len())
        .map(|m| {
            (
                m,
                upper_bound_sequence_with_units(profiles, c, m, upper_units).map(|u| u[u.len() - 1] / t_lower),
            )
        })
        .collect())
}
