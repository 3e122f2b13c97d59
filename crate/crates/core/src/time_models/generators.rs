//! Scenario generators for computation-power profiles.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::profile::{Interpolation, PowerProfile};
use crate::rng::{stream, Domain};
use crate::{invalid, Result};

fn grid_len(step: f64, horizon: f64) -> Result<usize> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(invalid("step", "must be positive"));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(invalid("horizon", "must be nonnegative"));
    }
    Ok(libm::floor(horizon / step) as usize + 1)
}

/// Workers that switch on and off: `v_i(t_k) = max{sin(a_i t_k + s_i) + e_ik, 0}`
/// with `a_i ~ U(0.5, 1)`, `s_i ~ U(0, 2 pi)`, `e_ik ~ N(0, 0.1^2)` on the grid
/// `t_k = step * k`, linearly interpolated.
pub fn chaotic_profiles(n: usize, step: f64, horizon: f64, seed: u64) -> Result<Vec<PowerProfile>> {
    let len = grid_len(step, horizon)?;
    let noise = Normal::new(0.0, 0.1).expect("valid sd");
    (0..n)
        .map(|i| {
            let mut rng = stream(seed, Domain::ChaoticProfile, i as u64);
            let a: f64 = rng.random_range(0.5..1.0);
            let s: f64 = rng.random_range(0.0..TAU);
            let values = (0..len)
                .map(|k| {
                    let t = step * k as f64;
                    (libm::sin(a * t + s) + noise.sample(&mut rng)).max(0.0)
                })
                .collect();
            PowerProfile::uniform(step, values, Interpolation::Linear)
        })
        .collect()
}

/// Periodic workers: `v_i(t_k) = max{s_i + 3 sin(t_k + phi_i) + e_ik, 0.1}` with
/// `s_i ~ U(10.5, 11)`, `phi_i ~ U(0, 2 pi)`, `e_ik ~ N(0, 0.1^2)`.
pub fn periodic_profiles(n: usize, step: f64, horizon: f64, seed: u64) -> Result<Vec<PowerProfile>> {
    let len = grid_len(step, horizon)?;
    let noise = Normal::new(0.0, 0.1).expect("valid sd");
    (0..n)
        .map(|i| {
            let mut rng = stream(seed, Domain::PeriodicProfile, i as u64);
            let s: f64 = rng.random_range(10.5..11.0);
            let phase: f64 = rng.random_range(0.0..TAU);
            let values = (0..len)
                .map(|k| {
                    let t = step * k as f64;
                    (s + 3.0 * libm::sin(t + phase) + noise.sample(&mut rng)).max(0.1)
                })
                .collect();
            PowerProfile::uniform(step, values, Interpolation::Linear)
        })
        .collect()
}

/// Rule choosing which workers sit idle during one interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)
)]
pub enum IdleRule {
    /// The same (highest-id) workers are always idle.
    Fixed,
    /// Idle slots rotate through the workers.
    RoundRobin,
    /// Each interval idles the workers with the most work completed so far
    /// (ties: lower id first).
    AdversarialFastest,
    /// A fresh uniformly random idle set every interval.
    SeededRandom { seed: u64 },
}

/// Partial participation: at every instant at least `ceil((1 - p) n)`
/// workers run at power `speed`, the others are idle.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParticipationSchedule {
    pub speed: f64,
    pub idle_fraction: f64,
    pub rule: IdleRule,
    pub interval: f64,
    /// Permit `0.4 <= p < 1`, outside the regime with a guarantee.
    #[cfg_attr(feature = "serde", serde(default))]
    pub allow_out_of_regime: bool,
}

impl ParticipationSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err(invalid("speed", "must be positive"));
        }
        if !(self.interval > 0.0 && self.interval.is_finite()) {
            return Err(invalid("interval", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.idle_fraction) {
            return Err(invalid("idle_fraction", "must lie in [0, 1)"));
        }
        if self.idle_fraction >= 0.4 && !self.allow_out_of_regime {
            return Err(invalid(
                "idle_fraction",
                "must be below 0.4 unless out-of-regime schedules are allowed",
            ));
        }
        Ok(())
    }

    /// Number of idle workers per interval, `floor(p n)`.
    pub fn idle_count(&self, n: usize) -> usize {
        libm::floor(self.idle_fraction * n as f64) as usize
    }
}

/// Piecewise-constant profiles realizing `schedule` over `[0, horizon]`;
/// knots sit exactly on the interval boundaries.
pub fn participation_profiles(schedule: &ParticipationSchedule, n: usize, horizon: f64) -> Result<Vec<PowerProfile>> {
    schedule.validate()?;
    if n == 0 {
        return Err(invalid("n", "need at least one worker"));
    }
    let intervals = (libm::ceil(horizon / schedule.interval) as usize).max(1);
    let idle = schedule.idle_count(n);
    let v = schedule.speed;
    let mut values = vec![Vec::with_capacity(intervals); n];
    let mut done = vec![0.0f64; n];
    let mut rng = match schedule.rule {
        IdleRule::SeededRandom { seed } => Some(stream(seed, Domain::Participation, 0)),
        _ => None,
    };
    let mut is_idle = vec![false; n];
    for j in 0..intervals {
        is_idle.iter_mut().for_each(|b| *b = false);
        match schedule.rule {
            IdleRule::Fixed => (n - idle..n).for_each(|i| is_idle[i] = true),
            IdleRule::RoundRobin => (0..idle).for_each(|r| is_idle[(j * idle + r) % n] = true),
            IdleRule::AdversarialFastest => {
                let mut ids: Vec<usize> = (0..n).collect();
                ids.sort_by(|&a, &b| done[b].total_cmp(&done[a]).then(a.cmp(&b)));
                ids[..idle].iter().for_each(|&i| is_idle[i] = true);
            }
            IdleRule::SeededRandom { .. } => {
                let rng = rng.as_mut().expect("seeded rule has a stream");
                index::sample(rng, n, idle).into_iter().for_each(|i| is_idle[i] = true);
            }
        }
        for i in 0..n {
            let p = if is_idle[i] { 0.0 } else { v };
            values[i].push(p);
            done[i] += p * schedule.interval;
        }
    }
    let times: Vec<f64> = (0..intervals).map(|j| schedule.interval * j as f64).collect();
    values
        .into_iter()
        .map(|vals| PowerProfile::new(times.clone(), vals, Interpolation::Hold))
        .collect()
}

/// Worker 0 runs at `v` until `t_switch` and at `v * fast_multiplier` after;
/// all other workers run at `v` throughout.
pub fn speedup_switch_profiles(n: usize, v: f64, t_switch: f64, fast_multiplier: f64) -> Result<Vec<PowerProfile>> {
    if !(fast_multiplier >= 1.0) {
        return Err(invalid("fast_multiplier", "must be at least 1"));
    }
    if !(t_switch > 0.0) {
        return Err(invalid("t_switch", "must be positive"));
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if i == 0 && fast_multiplier > 1.0 {
            out.push(PowerProfile::new(
                vec![0.0, t_switch],
                vec![v, v * fast_multiplier],
                Interpolation::Hold,
            )?);
        } else {
            out.push(PowerProfile::constant(v)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chaotic_is_nonnegative_deterministic_and_intermittent() {
        let a = chaotic_profiles(50, 0.1, 100.0, 7).unwrap();
        let b = chaotic_profiles(50, 0.1, 100.0, 7).unwrap();
        assert_eq!(a, b);
        let c = chaotic_profiles(50, 0.1, 100.0, 8).unwrap();
        assert_ne!(a, c);
        let total: usize = a.iter().map(|p| p.values().len()).sum();
        let zeros: usize = a.iter().map(|p| p.values().iter().filter(|&&v| v == 0.0).count()).sum();
        assert!(a.iter().all(|p| p.values().iter().all(|&v| v >= 0.0)));
        let frac = zeros as f64 / total as f64;
        assert!((0.2..=0.7).contains(&frac), "zero fraction {frac}");
        assert_eq!(a[0].values().len(), 1001);
    }

    #[test]
    fn periodic_is_clamped_and_centred() {
        let ps = periodic_profiles(20, 0.1, 200.0, 3).unwrap();
        assert_eq!(ps, periodic_profiles(20, 0.1, 200.0, 3).unwrap());
        for p in &ps {
            assert!(p.values().iter().all(|&v| v >= 0.1));
            // average over whole periods approximates s_i in [10.5, 11]
            let periods = libm::floor(200.0 / TAU);
            let t1 = periods * TAU;
            let mean = p.integrate(0.0, t1).unwrap() / t1;
            assert!((10.3..=11.2).contains(&mean), "mean {mean}");
        }
    }

    fn schedule(p: f64, rule: IdleRule) -> ParticipationSchedule {
        ParticipationSchedule {
            speed: 2.0,
            idle_fraction: p,
            rule,
            interval: 0.5,
            allow_out_of_regime: false,
        }
    }

    #[test]
    fn participation_respects_active_set_size() {
        let rules = [
            IdleRule::Fixed,
            IdleRule::RoundRobin,
            IdleRule::AdversarialFastest,
            IdleRule::SeededRandom { seed: 4 },
        ];
        for rule in rules {
            let ps = participation_profiles(&schedule(0.1, rule), 10, 30.0).unwrap();
            for j in 0..60 {
                let t = 0.5 * j as f64 + 0.25;
                let active = ps.iter().filter(|p| p.value_at(t) == 2.0).count();
                assert!(active >= 9, "{rule:?} t={t}");
                assert!(ps.iter().all(|p| p.value_at(t) <= 2.0));
            }
        }
    }

    #[test]
    fn no_idling_gives_constant_power() {
        let ps = participation_profiles(&schedule(0.0, IdleRule::AdversarialFastest), 5, 10.0).unwrap();
        for p in &ps {
            assert!(p.values().iter().all(|&v| v == 2.0));
        }
    }

    #[test]
    fn round_robin_time_average() {
        let ps = participation_profiles(&schedule(0.1, IdleRule::RoundRobin), 10, 1000.0).unwrap();
        for p in &ps {
            let avg = p.integrate(0.0, 1000.0).unwrap() / 1000.0;
            assert!((avg / (0.9 * 2.0) - 1.0).abs() < 0.02, "avg {avg}");
        }
    }

    #[test]
    fn participation_rejects_bad_fractions() {
        assert!(participation_profiles(&schedule(1.0, IdleRule::Fixed), 10, 1.0).is_err());
        assert!(participation_profiles(&schedule(0.45, IdleRule::Fixed), 10, 1.0).is_err());
        let mut s = schedule(0.45, IdleRule::Fixed);
        s.allow_out_of_regime = true;
        assert!(participation_profiles(&s, 10, 1.0).is_ok());
    }

    #[test]
    fn speedup_switch_shapes() {
        let same = speedup_switch_profiles(3, 2.0, 1.0, 1.0).unwrap();
        assert!(same.iter().all(|p| p.values() == [2.0]));
        let fast = speedup_switch_profiles(3, 2.0, 1.0, 1e6).unwrap();
        assert_eq!(fast[1], same[1]);
        assert_eq!(fast[0].value_at(0.5), 2.0);
        assert_eq!(fast[0].value_at(1.5), 2e6);
        assert!(speedup_switch_profiles(3, 2.0, 1.0, 0.5).is_err());
    }
}
