use alloc::vec::Vec;

use crate::{invalid, Error, Result};

/// How a [`PowerProfile`] is read between knots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Interpolation {
    /// Linear between knots.
    #[default]
    Linear,
    /// The knot value holds on `[t_k, t_{k+1})`; used for on/off schedules.
    Hold,
}

/// Computation power `v(t)` (gradients per second) of one worker, given on
/// knots `t_0 = 0 < t_1 < ...` and extended past the last knot by its value.
///
/// The cumulative work `W(t) = int_0^t v` is tabulated at the knots, so
/// integrals and their inverse are closed-form per segment.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProfile {
    times: Vec<f64>,
    values: Vec<f64>,
    interpolation: Interpolation,
    cumulative: Vec<f64>,
}

impl PowerProfile {
    pub fn new(times: Vec<f64>, values: Vec<f64>, interpolation: Interpolation) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(invalid("profile", "need matching, nonempty knot and value arrays"));
        }
        if times[0] != 0.0 {
            return Err(invalid("profile", "first knot must be at t = 0"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(invalid("profile", "knots must be finite and strictly increasing"));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("profile", "powers must be finite and nonnegative"));
        }
        let mut cumulative = Vec::with_capacity(times.len());
        cumulative.push(0.0);
        for k in 1..times.len() {
            let h = times[k] - times[k - 1];
            let area = match interpolation {
                Interpolation::Linear => 0.5 * (values[k - 1] + values[k]) * h,
                Interpolation::Hold => values[k - 1] * h,
            };
            cumulative.push(cumulative[k - 1] + area);
        }
        Ok(Self {
            times,
            values,
            interpolation,
            cumulative,
        })
    }

    /// Knots on the uniform grid `t_k = step * k`.
    pub fn uniform(step: f64, values: Vec<f64>, interpolation: Interpolation) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(invalid("step", "must be positive"));
        }
        let times = (0..values.len()).map(|k| step * k as f64).collect();
        Self::new(times, values, interpolation)
    }

    pub fn constant(power: f64) -> Result<Self> {
        Self::new(alloc::vec![0.0], alloc::vec![power], Interpolation::Linear)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    /// Index `k` of the segment `[t_k, t_{k+1})` containing `t`; the last
    /// index means the constant tail.
    fn segment(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let k = self.segment(t);
        if k + 1 == self.times.len() || self.interpolation == Interpolation::Hold {
            return self.values[k];
        }
        let (a, b) = (self.times[k], self.times[k + 1]);
        let (va, vb) = (self.values[k], self.values[k + 1]);
        va + (vb - va) * ((t - a) / (b - a))
    }

    /// Work done on `[t_k, t_k + u]` inside segment `k`.
    fn partial(&self, k: usize, u: f64) -> f64 {
        let va = self.values[k];
        if k + 1 == self.times.len() || self.interpolation == Interpolation::Hold {
            return va * u;
        }
        let slope = (self.values[k + 1] - va) / (self.times[k + 1] - self.times[k]);
        u * (va + 0.5 * slope * u)
    }

    /// `W(t) = int_0^t v`.
    pub fn cumulative_work(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let k = self.segment(t);
        self.cumulative[k] + self.partial(k, t - self.times[k])
    }

    /// Exact integral of the power over `[t0, t1]`.
    pub fn integrate(&self, t0: f64, t1: f64) -> Result<f64> {
        check_interval(t0, t1)?;
        if t0 == t1 {
            return Ok(0.0);
        }
        Ok((self.cumulative_work(t1) - self.cumulative_work(t0)).max(0.0))
    }

    /// Whole gradients finished on `[t0, t1]`: `floor(int v)`.
    pub fn gradients_completed(&self, t0: f64, t1: f64) -> Result<u64> {
        Ok(libm::floor(self.integrate(t0, t1)?) as u64)
    }

    /// Smallest `t >= t0` with `integrate(t0, t) >= work`, or `+inf` when the
    /// profile never delivers that much (a dead tail).
    pub fn time_to_work(&self, t0: f64, work: f64) -> f64 {
        if work <= 0.0 {
            return t0;
        }
        let base = self.cumulative_work(t0);
        let target = base + work;
        let last = self.times.len() - 1;
        // first knot whose cumulative work reaches the target
        let j = self.cumulative.partition_point(|&c| c < target);
        let (k, rem) = if j > last {
            if self.values[last] == 0.0 {
                return f64::INFINITY;
            }
            (last, target - self.cumulative[last])
        } else {
            // j >= 1 since cumulative[0] = 0 < target
            (j - 1, target - self.cumulative[j - 1])
        };
        let u = self.solve_in_segment(k, rem);
        let mut t = self.times[k] + u;
        if k < last {
            t = t.min(self.times[k + 1]);
        }
        let mut t = t.max(t0);
        // absorb rounding so that the floor-based count is attained at t
        let mut guard = 0;
        while self.cumulative_work(t) - base < work {
            t = t.next_up();
            guard += 1;
            if guard > 256 {
                return self.bisect_time_to_work(t0, base, work, t);
            }
        }
        t
    }

    fn bisect_time_to_work(&self, t0: f64, base: f64, work: f64, mut lo: f64) -> f64 {
        let mut hi = lo.max(t0) + 1.0;
        while self.cumulative_work(hi) - base < work {
            hi = t0 + 2.0 * (hi - t0);
            if !hi.is_finite() {
                return f64::INFINITY;
            }
        }
        while hi - lo > 1e-12 * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if self.cumulative_work(mid) - base >= work {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Offset `u` into segment `k` where the segment's partial work equals
    /// `rem` (the smaller root of `va u + slope u^2 / 2 = rem`).
    fn solve_in_segment(&self, k: usize, rem: f64) -> f64 {
        let va = self.values[k];
        let last = self.times.len() - 1;
        if k == last || self.interpolation == Interpolation::Hold {
            return rem / va;
        }
        let slope = (self.values[k + 1] - va) / (self.times[k + 1] - self.times[k]);
        let disc = (va * va + 2.0 * slope * rem).max(0.0);
        let denom = va + libm::sqrt(disc);
        if denom == 0.0 {
            0.0
        } else {
            2.0 * rem / denom
        }
    }

    /// Smallest `t >= t0` by which `units` whole gradients are done.
    pub fn time_to_complete(&self, t0: f64, units: u64) -> f64 {
        self.time_to_work(t0, units as f64)
    }
}

fn check_interval(t0: f64, t1: f64) -> Result<()> {
    if !(t0 >= 0.0) || !(t1 >= t0) {
        return Err(Error::InvalidParameter {
            name: "interval",
            reason: alloc::format!("need 0 <= t0 <= t1, got [{t0}, {t1}]"),
        });
    }
    Ok(())
}
