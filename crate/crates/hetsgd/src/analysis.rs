//! Closed-form analysis of a spec's time model.

use hetsgd_core::analyzer::{ComplexityReport, RateConstants};
use hetsgd_core::rng::{stream, Domain};
use hetsgd_core::time_models::{estimate_r, DelayDistribution, FixedTimes, TimeModel};
use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::scenario::build_time_model;
use crate::spec::{AnalysisSpec, ExperimentSpec, TimeModelRecipe};

pub const DEFAULT_R_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Analysis {
    pub scenario: String,
    /// `fixed`, or `random_means` when random delays are replaced by their
    /// means.
    pub times: &'static str,
    /// Whether `R` was estimated from samples rather than given.
    pub r_estimated: bool,
    pub report: ComplexityReport,
}

/// Estimates `R` from `samples` draws of `distribution`.
pub fn estimate_distribution_r(distribution: &DelayDistribution, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = stream(seed, Domain::Sampling, 0);
    let draws: Vec<f64> = (0..samples).map(|_| distribution.sample(&mut rng)).collect();
    Ok(estimate_r(&draws)?)
}

pub fn analyze(spec: &ExperimentSpec, settings: &AnalysisSpec) -> Result<Analysis> {
    let model = build_time_model(spec)?;
    let (taus, times): (FixedTimes, _) = match &model {
        TimeModel::Fixed(t) => (t.clone(), "fixed"),
        TimeModel::Random(_) => (model.mean_times().expect("random model has means"), "random_means"),
        TimeModel::Power(_) => {
            return Err(HarnessError::Validation(vec![
                "analyze needs a fixed or random time model; use the gap study for power profiles".into(),
            ]))
        }
    };
    let mut consts = RateConstants::from_ratios(settings.l_delta_over_eps, settings.noise_ratio)?;
    let mut r_estimated = false;
    match (settings.r, &spec.time_model) {
        (Some(r), _) => consts = consts.with_r(r)?,
        (None, TimeModelRecipe::Random { distribution }) => {
            consts = consts.with_r(estimate_distribution_r(distribution, DEFAULT_R_SAMPLES, spec.seed)?)?;
            r_estimated = true;
        }
        (None, _) => {}
    }
    let report = ComplexityReport::compute(&taus, &consts, settings.participation)?;
    Ok(Analysis {
        scenario: spec.scenario.clone(),
        times,
        r_estimated,
        report,
    })
}
