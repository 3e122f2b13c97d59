use alloc::vec::Vec;

use crate::{invalid, Result};

/// Worker `i` always needs `tau(i)` seconds per stochastic gradient.
///
/// The durations are kept both in worker order and sorted ascending; the
/// analyzer works on the sorted view, the simulator on worker ids.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FixedTimes {
    by_worker: Vec<f64>,
    sorted: Vec<f64>,
    /// `order[k]` is the worker holding the `k`-th smallest duration.
    order: Vec<usize>,
}

impl FixedTimes {
    pub fn new(taus: Vec<f64>) -> Result<Self> {
        if taus.is_empty() {
            return Err(invalid("taus", "need at least one worker"));
        }
        if let Some(bad) = taus.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(invalid(
                "taus",
                alloc::format!("durations must be positive and finite, got {bad}"),
            ));
        }
        let mut order: Vec<usize> = (0..taus.len()).collect();
        order.sort_by(|&a, &b| taus[a].total_cmp(&taus[b]).then(a.cmp(&b)));
        let sorted = order.iter().map(|&i| taus[i]).collect();
        Ok(Self {
            by_worker: taus,
            sorted,
            order,
        })
    }

    /// `tau_i = scale * i^exponent` for `i = 1..=n`.
    pub fn power_law(n: usize, exponent: f64, scale: f64) -> Result<Self> {
        Self::new((1..=n).map(|i| scale * libm::pow(i as f64, exponent)).collect())
    }

    pub fn n(&self) -> usize {
        self.by_worker.len()
    }

    pub fn tau(&self, worker: usize) -> f64 {
        self.by_worker[worker]
    }

    pub fn by_worker(&self) -> &[f64] {
        &self.by_worker
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// The `m`-th smallest duration, `m` 1-based.
    pub fn tau_m(&self, m: usize) -> f64 {
        self.sorted[m - 1]
    }
}
