use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Exp, Gamma, Normal, Uniform};

use crate::{invalid, Result};

/// Per-gradient computation time of one worker, redrawn independently for
/// every gradient. All variants are nonnegative and sub-exponential.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)
)]
pub enum DelayDistribution {
    Constant {
        tau: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// `N(mu, sd^2)` conditioned on being nonnegative.
    TruncatedNormal {
        mu: f64,
        sd: f64,
    },
    Exponential {
        rate: f64,
    },
    /// `shift + Exp(rate)`.
    ShiftedExponential {
        shift: f64,
        rate: f64,
    },
    Gamma {
        shape: f64,
        scale: f64,
    },
    ChiSquare {
        k: f64,
    },
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, "must be positive and finite"))
    }
}

fn nonnegative(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(name, "must be nonnegative and finite"))
    }
}

/// Standard normal density.
fn phi(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * core::f64::consts::PI)
}

/// Upper tail `1 - Phi(x)`.
fn upper_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x / core::f64::consts::SQRT_2)
}

impl DelayDistribution {
    pub fn constant(tau: f64) -> Result<Self> {
        nonnegative("tau", tau)?;
        Ok(Self::Constant { tau })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        nonnegative("lo", lo)?;
        if !(hi.is_finite() && hi >= lo) {
            return Err(invalid("hi", "must be finite and >= lo"));
        }
        Ok(Self::Uniform { lo, hi })
    }

    /// Rejection sampling from the parent normal; refuses parameters whose
    /// acceptance probability is below 1e-6.
    pub fn truncated_normal(mu: f64, sd: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(invalid("mu", "must be finite"));
        }
        nonnegative("sd", sd)?;
        if sd == 0.0 && mu < 0.0 {
            return Err(invalid("mu", "a point mass below zero cannot be truncated"));
        }
        if sd > 0.0 && upper_tail(-mu / sd) < 1e-6 {
            return Err(invalid("mu", "almost all mass lies below zero"));
        }
        Ok(Self::TruncatedNormal { mu, sd })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        positive("rate", rate)?;
        Ok(Self::Exponential { rate })
    }

    pub fn shifted_exponential(shift: f64, rate: f64) -> Result<Self> {
        nonnegative("shift", shift)?;
        positive("rate", rate)?;
        Ok(Self::ShiftedExponential { shift, rate })
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        positive("shape", shape)?;
        positive("scale", scale)?;
        Ok(Self::Gamma { shape, scale })
    }

    /// Gamma with the given mean and variance: `shape = mean^2 / var`,
    /// `scale = var / mean`.
    pub fn gamma_with_moments(mean: f64, var: f64) -> Result<Self> {
        positive("mean", mean)?;
        positive("var", var)?;
        Self::gamma(mean * mean / var, var / mean)
    }

    pub fn chi_square(k: f64) -> Result<Self> {
        positive("k", k)?;
        Ok(Self::ChiSquare { k })
    }

    /// Re-checks the invariants of a value built without the constructors
    /// (for instance after deserialization).
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Constant { tau } => Self::constant(tau),
            Self::Uniform { lo, hi } => Self::uniform(lo, hi),
            Self::TruncatedNormal { mu, sd } => Self::truncated_normal(mu, sd),
            Self::Exponential { rate } => Self::exponential(rate),
            Self::ShiftedExponential { shift, rate } => Self::shifted_exponential(shift, rate),
            Self::Gamma { shape, scale } => Self::gamma(shape, scale),
            Self::ChiSquare { k } => Self::chi_square(k),
        }
        .map(|_| ())
    }

    /// Exact mean.
    pub fn mean(&self) -> f64 {
        match *self {
            Self::Constant { tau } => tau,
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
            Self::TruncatedNormal { mu, sd } => {
                if sd == 0.0 {
                    return mu;
                }
                let alpha = -mu / sd;
                mu + sd * phi(alpha) / upper_tail(alpha)
            }
            Self::Exponential { rate } => 1.0 / rate,
            Self::ShiftedExponential { shift, rate } => shift + 1.0 / rate,
            Self::Gamma { shape, scale } => shape * scale,
            Self::ChiSquare { k } => k,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Constant { tau } => tau,
            Self::Uniform { lo, hi } => {
                if lo == hi {
                    lo
                } else {
                    Uniform::new(lo, hi).expect("validated bounds").sample(rng)
                }
            }
            Self::TruncatedNormal { mu, sd } => {
                if sd == 0.0 {
                    return mu;
                }
                let parent = Normal::new(mu, sd).expect("validated sd");
                loop {
                    let v = parent.sample(rng);
                    if v >= 0.0 {
                        return v;
                    }
                }
            }
            Self::Exponential { rate } => Exp::new(rate).expect("validated rate").sample(rng),
            Self::ShiftedExponential { shift, rate } => shift + Exp::new(rate).expect("validated rate").sample(rng),
            Self::Gamma { shape, scale } => Gamma::new(shape, scale).expect("validated gamma").sample(rng).max(0.0),
            Self::ChiSquare { k } => ChiSquared::new(k).expect("validated k").sample(rng).max(0.0),
        }
    }
}
