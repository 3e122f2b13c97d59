use core::ops::RangeInclusive;

use crate::time_models::FixedTimes;
use crate::{invalid, Error, Result};

/// Smoothness `L`, initial gap `delta`, gradient variance `sigma_sq`, target
/// `eps` and, for random times, the sub-exponential scale `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateConstants {
    pub l: f64,
    pub delta: f64,
    pub sigma_sq: f64,
    pub eps: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub r: Option<f64>,
}

impl RateConstants {
    pub fn new(l: f64, delta: f64, sigma_sq: f64, eps: f64) -> Result<Self> {
        let c = Self {
            l,
            delta,
            sigma_sq,
            eps,
            r: None,
        };
        c.validate()?;
        Ok(c)
    }

    /// Constants with `L = delta = 1`, so `LΔ/ε = 1 / eps`.
    pub fn from_ratios(l_delta_over_eps: f64, sigma_sq_over_eps: f64) -> Result<Self> {
        Self::new(1.0, 1.0, sigma_sq_over_eps / l_delta_over_eps, 1.0 / l_delta_over_eps)
    }

    pub fn with_r(mut self, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(invalid("r", "must be positive and finite"));
        }
        self.r = Some(r);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("l", self.l), ("delta", self.delta), ("eps", self.eps)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be positive and finite"));
            }
        }
        if !(self.sigma_sq >= 0.0 && self.sigma_sq.is_finite()) {
            return Err(invalid("sigma_sq", "must be nonnegative and finite"));
        }
        Ok(())
    }

    /// `LΔ/ε`.
    pub fn l_delta_over_eps(&self) -> f64 {
        self.l * self.delta / self.eps
    }

    /// `σ²/ε`.
    pub fn noise_ratio(&self) -> f64 {
        self.sigma_sq / self.eps
    }

    /// `max{1, σ²/(mε)}`.
    pub fn batch_factor(&self, m: usize) -> f64 {
        (self.noise_ratio() / m as f64).max(1.0)
    }

    /// `max{LΔ/ε, σ²LΔ/(mε²)}`.
    pub fn rate(&self, m: usize) -> f64 {
        self.l_delta_over_eps() * self.batch_factor(m)
    }

    /// `min{⌈σ²/ε⌉, n}`, at least 1.
    pub fn useful_workers(&self, n: usize) -> usize {
        let ceil = libm::ceil(self.noise_ratio());
        if ceil >= n as f64 {
            n
        } else {
            (ceil as usize).max(1)
        }
    }
}

fn check_m(m: usize, n: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(invalid("m", alloc::format!("need 1 <= m <= {n}, got {m}")));
    }
    Ok(())
}

/// Iterations of m-Synchronous SGD: `⌈16 max{LΔ/ε, σ²LΔ/(mε²)}⌉`.
pub fn iteration_count(c: &RateConstants, m: usize) -> Result<u64> {
    c.validate()?;
    if m == 0 {
        return Err(invalid("m", "must be at least 1"));
    }
    Ok(libm::ceil(16.0 * c.rate(m)) as u64)
}

/// `g(m) = τ_m max{1, σ²/(mε)}`.
pub fn g_of_m(taus: &FixedTimes, c: &RateConstants, m: usize) -> Result<f64> {
    check_m(m, taus.n())?;
    Ok(taus.tau_m(m) * c.batch_factor(m))
}

/// `h(m) = τ_m / m`.
pub fn h_of_m(taus: &FixedTimes, m: usize) -> Result<f64> {
    check_m(m, taus.n())?;
    Ok(taus.tau_m(m) / m as f64)
}

/// First index of the minimum of `f` over `1..=upper`.
fn argmin(upper: usize, f: impl Fn(usize) -> f64) -> (f64, usize) {
    let mut best = (f64::INFINITY, 1);
    for m in 1..=upper {
        let v = f(m);
        if v < best.0 {
            best = (v, m);
        }
    }
    best
}

/// Time complexity of m-Synchronous SGD with the best `m`:
/// `(16LΔ/ε) min_m τ_m max{1, σ²/(mε)}` and its smallest minimizer.
pub fn t_sync(taus: &FixedTimes, c: &RateConstants) -> (f64, usize) {
    let (g, m) = argmin(taus.n(), |m| taus.tau_m(m) * c.batch_factor(m));
    (16.0 * c.l_delta_over_eps() * g, m)
}

/// `((1/m) Σ_{i<=m} 1/τ_i)^{-1}` for every `m`, indexed from 0.
pub fn harmonic_terms(taus: &FixedTimes) -> alloc::vec::Vec<f64> {
    let mut acc = 0.0;
    taus.sorted()
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            acc += 1.0 / t;
            (i + 1) as f64 / acc
        })
        .collect()
}

/// The optimal time complexity with unit constant:
/// `min_m H_m max{LΔ/ε, σ²LΔ/(mε²)}` with `H_m` the harmonic-mean term,
/// and its smallest minimizer.
pub fn t_optimal(taus: &FixedTimes, c: &RateConstants) -> (f64, usize) {
    let h = harmonic_terms(taus);
    argmin(taus.n(), |m| h[m - 1] * c.rate(m))
}

/// Synchronous SGD with all workers: `τ_n max{LΔ/ε, σ²LΔ/(nε²)}`.
pub fn t_sync_all(taus: &FixedTimes, c: &RateConstants) -> f64 {
    let n = taus.n();
    taus.tau_m(n) * c.rate(n)
}

/// `T_sync / (T_optimal log(n + 1))`.
pub fn log_gap_certificate(taus: &FixedTimes, c: &RateConstants) -> f64 {
    let (ts, _) = t_sync(taus, c);
    let (to, _) = t_optimal(taus, c);
    ts / (to * libm::log((taus.n() + 1) as f64))
}

/// Exhaustive smallest minimizer of `g` over `1..=min{⌈σ²/ε⌉, n}`.
pub fn optimal_m(taus: &FixedTimes, c: &RateConstants) -> usize {
    argmin(c.useful_workers(taus.n()), |m| taus.tau_m(m) * c.batch_factor(m)).1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PowerLawChoice {
    pub m: usize,
    /// Whether `m >= (delta / tau1)^(1/alpha)`, the regime where the choice
    /// is optimal.
    pub valid: bool,
}

/// The worker count `min{⌈σ²/ε⌉, n}` for `τ_m = tau1 m^alpha + delta_m` with
/// `0 <= delta_m <= delta`.
pub fn power_law_m(tau1: f64, alpha: f64, delta: f64, c: &RateConstants, n: usize) -> Result<PowerLawChoice> {
    if !(tau1 > 0.0) {
        return Err(invalid("tau1", "must be positive"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid("alpha", "must lie in [0, 1]"));
    }
    if !(delta >= 0.0) {
        return Err(invalid("delta", "must be nonnegative"));
    }
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let m = c.useful_workers(n);
    let valid = if alpha == 0.0 {
        delta == 0.0
    } else {
        m as f64 >= libm::pow(delta / tau1, 1.0 / alpha)
    };
    Ok(PowerLawChoice { m, valid })
}

/// The additive cost of delay dispersion: `R log n`.
pub fn noise_term(r: f64, n: usize) -> f64 {
    r * libm::log(n as f64)
}

/// Expected time of m-Synchronous SGD under sub-exponential random times with
/// means `taus`: `16 (LΔ/ε) (τ_m + R log n) max{1, σ²/(mε)}`.
pub fn expected_random_bound(taus: &FixedTimes, c: &RateConstants, r: f64, m: usize) -> Result<f64> {
    check_m(m, taus.n())?;
    if !(r > 0.0) {
        return Err(invalid("r", "must be positive"));
    }
    Ok(16.0 * c.l_delta_over_eps() * (taus.tau_m(m) + noise_term(r, taus.n())) * c.batch_factor(m))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParticipationBound {
    /// `4 K / v` seconds.
    pub seconds: f64,
    /// `K` evaluated at `m = n`.
    pub iterations: u64,
    pub m_range: RangeInclusive<usize>,
}

/// Time bound of m-Synchronous SGD when at most a `p` fraction of workers of
/// power `v` are idle at any instant.
pub fn partial_participation_bound(v: f64, p: f64, n: usize, c: &RateConstants) -> Result<ParticipationBound> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid("v", "must be positive and finite"));
    }
    if !(p >= 0.0) {
        return Err(invalid("p", "must be nonnegative"));
    }
    if p >= 0.4 {
        return Err(Error::OutOfRegime(alloc::format!("idle fraction {p} is not below 0.4")));
    }
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let iterations = iteration_count(c, n)?;
    let hi = libm::floor((1.0 - 2.0 * p) * n as f64 + 1e-9) as usize;
    Ok(ParticipationBound {
        seconds: 4.0 * iterations as f64 / v,
        iterations,
        m_range: (n / 5)..=hi,
    })
}
