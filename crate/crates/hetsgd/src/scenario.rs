//! Turns a spec's recipes into a problem and a time model.

use hetsgd_core::problem::Quadratic;
use hetsgd_core::time_models::generators::{
    chaotic_profiles, participation_profiles, periodic_profiles, speedup_switch_profiles,
};
use hetsgd_core::time_models::{FixedTimes, PowerProfile, TimeModel};

use crate::error::Result;
use crate::formats::read_profiles_csv;
use crate::spec::{ExperimentSpec, FixedLaw, PowerGenerator, TimeModelRecipe};

pub fn build_problem(spec: &ExperimentSpec) -> Result<Quadratic> {
    Ok(Quadratic::new(spec.problem.d, spec.problem.p)?)
}

pub fn fixed_times(law: &FixedLaw, scale: f64, n: usize) -> Result<FixedTimes> {
    let taus = match law {
        FixedLaw::Sqrt => (1..=n).map(|i| scale * (i as f64).sqrt()).collect(),
        FixedLaw::Linear => (1..=n).map(|i| scale * i as f64).collect(),
        FixedLaw::Power { exponent } => return Ok(FixedTimes::power_law(n, *exponent, scale)?),
        FixedLaw::Custom { taus } => taus.iter().map(|t| scale * t).collect(),
    };
    Ok(FixedTimes::new(taus)?)
}

/// Profiles of a power recipe, generated up to at least `horizon` seconds
/// where the generator has one.
pub fn build_profiles(generator: &PowerGenerator, n: usize, horizon: Option<f64>) -> Result<Vec<PowerProfile>> {
    let h = |own: f64| horizon.map_or(own, |h| h.max(own));
    Ok(match generator {
        PowerGenerator::Chaotic { step, horizon, seed } => chaotic_profiles(n, *step, h(*horizon), *seed)?,
        PowerGenerator::Periodic { step, horizon, seed } => periodic_profiles(n, *step, h(*horizon), *seed)?,
        PowerGenerator::Participation { schedule, horizon } => participation_profiles(schedule, n, h(*horizon))?,
        PowerGenerator::Speedup {
            speed,
            t_switch,
            multiplier,
        } => speedup_switch_profiles(n, *speed, *t_switch, *multiplier)?,
        PowerGenerator::Csv { path, interpolation } => {
            let profiles = read_profiles_csv(path, *interpolation)?;
            if profiles.len() != n {
                return Err(crate::error::HarnessError::format(
                    path,
                    format!("{} worker columns but n = {n}", profiles.len()),
                ));
            }
            profiles
        }
    })
}

/// Whether regenerating with a longer horizon yields more data.
pub fn extendable(generator: &PowerGenerator) -> bool {
    matches!(
        generator,
        PowerGenerator::Chaotic { .. } | PowerGenerator::Periodic { .. } | PowerGenerator::Participation { .. }
    )
}

pub fn build_time_model(spec: &ExperimentSpec) -> Result<TimeModel> {
    Ok(match &spec.time_model {
        TimeModelRecipe::Fixed { law, scale } => TimeModel::Fixed(fixed_times(law, *scale, spec.n)?),
        TimeModelRecipe::Random { distribution } => TimeModel::random(vec![*distribution; spec.n])?,
        TimeModelRecipe::Power { generator } => {
            TimeModel::power(build_profiles(generator, spec.n, Some(spec.budget.horizon))?)?
        }
    })
}
