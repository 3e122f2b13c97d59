//! Gap between m-Synchronous SGD's upper recursion and the lower bound.

use hetsgd_core::analyzer::{
    lower_bound_sequence, upper_bound_sequence_with_units, BoundSequences, LowerConstants, RateConstants,
};
use hetsgd_core::time_models::PowerProfile;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::scenario::{build_profiles, extendable};
use crate::spec::{ExperimentSpec, GapSpec, PowerGenerator, TimeModelRecipe};

/// Doublings of the profile horizon before giving up on covering both
/// recursions with generated data.
const MAX_EXTENSIONS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapCell {
    pub noise_ratio: f64,
    pub m: usize,
    pub t_lower: f64,
    pub t_upper: Option<f64>,
    pub ratio: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    pub noise_ratio: f64,
    pub t_lower: f64,
    pub best_m: Option<usize>,
    pub best_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapTable {
    pub scenario: String,
    pub n: usize,
    pub l_delta_over_eps: f64,
    pub c1: f64,
    pub c2: f64,
    pub upper_units: u64,
    /// Last knot of the profiles used.
    pub profile_horizon: f64,
    /// Some recursion ran past the last knot of non-extendable profiles and
    /// used their constant tail.
    pub extrapolated: bool,
    pub rows: Vec<GapRow>,
    pub cells: Vec<GapCell>,
}

fn last_knot(profiles: &[PowerProfile]) -> f64 {
    profiles
        .iter()
        .map(|p| *p.times().last().expect("profiles have knots"))
        .fold(0.0, f64::max)
}

fn constants(gap: &GapSpec, noise_ratio: f64) -> Result<RateConstants> {
    Ok(RateConstants::from_ratios(gap.l_delta_over_eps, noise_ratio)?)
}

/// Computes every `(noise, m)` cell on fixed profiles.
pub fn gap_cells(profiles: &[PowerProfile], gap: &GapSpec) -> Result<Vec<GapCell>> {
    let n = profiles.len();
    let ms: Vec<usize> = gap.ms.clone().unwrap_or_else(|| (1..=n).collect());
    let lc = LowerConstants { c1: gap.c1, c2: gap.c2 };
    let mut cells = Vec::new();
    for &noise in &gap.noise_ratios {
        let c = constants(gap, noise)?;
        let lower = lower_bound_sequence(profiles, &c, lc)?;
        let t_lower = *lower.last().expect("sequence starts at 0");
        let row: Vec<GapCell> = ms
            .par_iter()
            .map(
                |&m| match upper_bound_sequence_with_units(profiles, &c, m, gap.upper_units) {
                    Ok(upper) => {
                        let t_upper = *upper.last().expect("sequence starts at 0");
                        GapCell {
                            noise_ratio: noise,
                            m,
                            t_lower,
                            t_upper: Some(t_upper),
                            ratio: Some(t_upper / t_lower),
                            error: None,
                        }
                    }
                    Err(e) => GapCell {
                        noise_ratio: noise,
                        m,
                        t_lower,
                        t_upper: None,
                        ratio: None,
                        error: Some(e.to_string()),
                    },
                },
            )
            .collect();
        cells.extend(row);
    }
    Ok(cells)
}

fn rows(cells: &[GapCell], gap: &GapSpec) -> Vec<GapRow> {
    gap.noise_ratios
        .iter()
        .map(|&noise| {
            let of_noise = cells.iter().filter(|c| c.noise_ratio == noise);
            let t_lower = cells
                .iter()
                .find(|c| c.noise_ratio == noise)
                .map_or(f64::NAN, |c| c.t_lower);
            // first minimum: smallest m on ties
            let best =
                of_noise
                    .filter_map(|c| c.ratio.map(|r| (c.m, r)))
                    .fold(None, |acc: Option<(usize, f64)>, (m, r)| match acc {
                        Some((_, br)) if br <= r => acc,
                        _ => Some((m, r)),
                    });
            GapRow {
                noise_ratio: noise,
                t_lower,
                best_m: best.map(|b| b.0),
                best_ratio: best.map(|b| b.1),
            }
        })
        .collect()
}

fn latest_time(cells: &[GapCell]) -> f64 {
    cells
        .iter()
        .flat_map(|c| [Some(c.t_lower), c.t_upper])
        .flatten()
        .fold(0.0, f64::max)
}

/// Runs the study on a power-profile scenario. Generated profiles are
/// regenerated on a longer horizon until every recursion ends inside the
/// generated data.
pub fn run_gap_study(spec: &ExperimentSpec) -> Result<GapTable> {
    let TimeModelRecipe::Power { generator } = &spec.time_model else {
        return Err(HarnessError::Validation(vec![
            "the gap study needs time_model.kind = \"power\"".into(),
        ]));
    };
    let (profiles, cells) = cover(generator, spec.n, &spec.gap)?;
    let profile_horizon = last_knot(&profiles);
    let extrapolated = latest_time(&cells) > profile_horizon && !matches!(generator, PowerGenerator::Speedup { .. });
    Ok(GapTable {
        scenario: spec.scenario.clone(),
        n: spec.n,
        l_delta_over_eps: spec.gap.l_delta_over_eps,
        c1: spec.gap.c1,
        c2: spec.gap.c2,
        upper_units: spec.gap.upper_units,
        profile_horizon,
        extrapolated,
        rows: rows(&cells, &spec.gap),
        cells,
    })
}

/// Profiles long enough for every recursion, and the cells computed on them.
pub fn cover(generator: &PowerGenerator, n: usize, gap: &GapSpec) -> Result<(Vec<PowerProfile>, Vec<GapCell>)> {
    let mut horizon = None;
    let mut extensions = 0;
    loop {
        let profiles = build_profiles(generator, n, horizon)?;
        let cells = gap_cells(&profiles, gap)?;
        let needed = latest_time(&cells);
        let have = last_knot(&profiles);
        if needed <= have || !extendable(generator) || extensions == MAX_EXTENSIONS {
            return Ok((profiles, cells));
        }
        horizon = Some(2.0 * needed);
        extensions += 1;
    }
}

/// Both sequences for one `(noise, m)` cell, for CSV export.
pub fn bound_sequences(profiles: &[PowerProfile], gap: &GapSpec, noise_ratio: f64, m: usize) -> Result<BoundSequences> {
    let c = constants(gap, noise_ratio)?;
    Ok(BoundSequences::compute_with_units(
        profiles,
        &c,
        m,
        LowerConstants { c1: gap.c1, c2: gap.c2 },
        gap.upper_units,
    )?)
}
