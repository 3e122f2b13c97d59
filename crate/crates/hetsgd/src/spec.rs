//! Experiment spec files (TOML, versioned by `spec_version`).

use std::path::{Path, PathBuf};

use hetsgd_core::simulator::{Algorithm, AsyncStepsize};
use hetsgd_core::time_models::{DelayDistribution, IdleRule, Interpolation, ParticipationSchedule};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const SPEC_VERSION: u32 = 1;
pub const DEFAULT_WORKERS: usize = 100;
pub const DEFAULT_DIM: usize = 1000;
pub const DEFAULT_NOISE_P: f64 = 0.01;
pub const DEFAULT_HORIZON: f64 = 1000.0;
pub const DEFAULT_RECORD_CAP: usize = 1000;
pub const DEFAULT_PROFILE_STEP: f64 = 0.1;
pub const FULL_WORKERS: usize = 1000;
pub const FULL_DIM: usize = 1000;

/// `{2^-16, ..., 2^4}`.
pub fn default_gamma_grid() -> Vec<f64> {
    (-16..=4).map(|e| 2f64.powi(e)).collect()
}

/// `{1, 5, 10, ..., n}`.
pub fn default_group_grid(n: usize) -> Vec<usize> {
    let mut grid = vec![1];
    grid.extend((5..=n).step_by(5));
    if *grid.last().unwrap() != n {
        grid.push(n);
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub spec_version: u32,
    pub scenario: String,
    pub n: usize,
    pub seed: u64,
    pub replications: u32,
    pub output_dir: Option<PathBuf>,
    pub record_cap: usize,
    pub problem: ProblemSpec,
    pub budget: Budget,
    pub time_model: TimeModelRecipe,
    pub algorithms: Vec<AlgorithmGrid>,
    pub gap: GapSpec,
    pub analysis: AnalysisSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemSpec {
    pub d: usize,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Budget {
    /// Wall-clock budget in seconds.
    pub horizon: f64,
    pub max_iters: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeModelRecipe {
    Fixed { law: FixedLaw, scale: f64 },
    Random { distribution: DelayDistribution },
    Power { generator: PowerGenerator },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum FixedLaw {
    /// `τ_i = sqrt(i)`
    Sqrt,
    /// `τ_i = i`
    Linear,
    /// `τ_i = i^exponent`
    Power {
        exponent: f64,
    },
    Custom {
        taus: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum PowerGenerator {
    Chaotic {
        step: f64,
        horizon: f64,
        seed: u64,
    },
    Periodic {
        step: f64,
        horizon: f64,
        seed: u64,
    },
    Participation {
        schedule: ParticipationSchedule,
        horizon: f64,
    },
    Speedup {
        speed: f64,
        t_switch: f64,
        multiplier: f64,
    },
    Csv {
        path: PathBuf,
        interpolation: Interpolation,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    Sync,
    MSync,
    Async,
    Rennala,
}

impl AlgorithmKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sync => "sync",
            Self::MSync => "m_sync",
            Self::Async => "async",
            Self::Rennala => "rennala",
        }
    }
}

/// One algorithm with its stepsize grid and, for m-sync and Rennala, its
/// group-size grid (`m` or `B`). Grids are sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmGrid {
    pub kind: AlgorithmKind,
    pub gammas: Vec<f64>,
    pub groups: Vec<usize>,
    pub stepsize: AsyncStepsize,
}

impl AlgorithmGrid {
    pub fn algorithm(&self, group: usize) -> Algorithm {
        match self.kind {
            AlgorithmKind::Sync => Algorithm::Sync,
            AlgorithmKind::MSync => Algorithm::MSync { m: group },
            AlgorithmKind::Async => Algorithm::Async {
                stepsize: self.stepsize,
            },
            AlgorithmKind::Rennala => Algorithm::Rennala { batch: group },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSpec {
    pub noise_ratios: Vec<f64>,
    pub l_delta_over_eps: f64,
    pub c1: f64,
    pub c2: f64,
    pub upper_units: u64,
    /// `None` means every `m` in `1..=n`.
    pub ms: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalysisSpec {
    pub l_delta_over_eps: f64,
    pub noise_ratio: f64,
    pub r: Option<f64>,
    /// `(v, p)` of a partial-participation regime.
    pub participation: Option<(f64, f64)>,
}

/// Command-line overrides applied before validation.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    /// Full scale: `n = 1000`, `d = 1000`.
    pub full: bool,
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub p: Option<f64>,
    pub horizon: Option<f64>,
    pub seed: Option<u64>,
    pub replications: Option<u32>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    spec_version: Option<u32>,
    scenario: Option<String>,
    n: Option<usize>,
    seed: Option<u64>,
    replications: Option<u32>,
    output_dir: Option<PathBuf>,
    record_cap: Option<usize>,
    #[serde(default)]
    problem: RawProblem,
    #[serde(default)]
    budget: RawBudget,
    #[serde(default)]
    time_model: RawTimeModel,
    #[serde(default)]
    algorithm: Vec<RawAlgorithm>,
    #[serde(default)]
    gap: RawGap,
    #[serde(default)]
    analysis: RawAnalysis,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    d: Option<usize>,
    p: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBudget {
    horizon: Option<f64>,
    max_iters: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTimeModel {
    kind: Option<String>,
    law: Option<String>,
    exponent: Option<f64>,
    taus: Option<Vec<f64>>,
    scale: Option<f64>,
    distribution: Option<DelayDistribution>,
    generator: Option<String>,
    step: Option<f64>,
    profile_horizon: Option<f64>,
    generator_seed: Option<u64>,
    speed: Option<f64>,
    idle_fraction: Option<f64>,
    idle_rule: Option<IdleRule>,
    interval: Option<f64>,
    allow_out_of_regime: Option<bool>,
    t_switch: Option<f64>,
    multiplier: Option<f64>,
    path: Option<PathBuf>,
    interpolation: Option<Interpolation>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgorithm {
    kind: Option<String>,
    gammas: Option<Vec<f64>>,
    ms: Option<Vec<usize>>,
    batches: Option<Vec<usize>>,
    stepsize: Option<String>,
    max_delay: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGap {
    noise_ratios: Option<Vec<f64>>,
    l_delta_over_eps: Option<f64>,
    c1: Option<f64>,
    c2: Option<f64>,
    upper_units: Option<u64>,
    ms: Option<Vec<usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnalysis {
    l_delta_over_eps: Option<f64>,
    noise_ratio: Option<f64>,
    r: Option<f64>,
    participation_speed: Option<f64>,
    idle_fraction: Option<f64>,
}

/// Reads, validates and fills defaults. Relative profile paths resolve
/// against the spec file's directory.
pub fn load_spec(path: &Path, overrides: &Overrides) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_spec(&text, base, overrides).map_err(|e| match e {
        HarnessError::Parse { message, .. } => HarnessError::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

pub fn parse_spec(text: &str, base: &Path, overrides: &Overrides) -> Result<ExperimentSpec> {
    let raw: RawSpec = toml::from_str(text).map_err(|e| HarnessError::Parse {
        path: PathBuf::from("<spec>"),
        message: e.to_string(),
    })?;
    Validator::default().finish(raw, base, overrides)
}

#[derive(Default)]
struct Validator {
    errors: Vec<String>,
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

impl Validator {
    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.errors.push(msg());
        }
    }

    fn unused(&mut self, section: &str, kind: &str, fields: &[(&str, bool)]) {
        for (name, present) in fields {
            if *present {
                self.errors.push(format!("{section}.{name} does not apply to {kind}"));
            }
        }
    }

    fn finish(mut self, mut raw: RawSpec, base: &Path, ov: &Overrides) -> Result<ExperimentSpec> {
        if ov.full {
            raw.n = Some(FULL_WORKERS);
            raw.problem.d = Some(FULL_DIM);
        }
        raw.n = ov.n.or(raw.n);
        raw.problem.d = ov.d.or(raw.problem.d);
        raw.problem.p = ov.p.or(raw.problem.p);
        raw.budget.horizon = ov.horizon.or(raw.budget.horizon);
        raw.seed = ov.seed.or(raw.seed);
        raw.replications = ov.replications.or(raw.replications);
        if ov.output_dir.is_some() {
            raw.output_dir.clone_from(&ov.output_dir);
        }

        let spec_version = raw.spec_version.unwrap_or(SPEC_VERSION);
        self.check(spec_version == SPEC_VERSION, || {
            format!("spec_version {spec_version} is not supported (expected {SPEC_VERSION})")
        });
        let scenario = raw.scenario.clone().unwrap_or_default();
        self.check(!scenario.is_empty(), || "scenario is required".into());
        self.check(
            scenario
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.'),
            || format!("scenario {scenario:?} may only use letters, digits, '_', '-' and '.'"),
        );
        let custom_len = raw.time_model.taus.as_ref().map(Vec::len);
        let n = raw.n.or(custom_len).unwrap_or(DEFAULT_WORKERS);
        self.check(n >= 1, || "n must be at least 1".into());
        let seed = raw.seed.unwrap_or(0);
        let replications = raw.replications.unwrap_or(1);
        self.check(replications >= 1, || "replications must be at least 1".into());
        let record_cap = raw.record_cap.unwrap_or(DEFAULT_RECORD_CAP);
        self.check(record_cap >= 2, || "record_cap must be at least 2".into());

        let problem = ProblemSpec {
            d: raw.problem.d.unwrap_or(DEFAULT_DIM),
            p: raw.problem.p.unwrap_or(DEFAULT_NOISE_P),
        };
        self.check(problem.d >= 1, || "problem.d must be at least 1".into());
        self.check(problem.p > 0.0 && problem.p <= 1.0, || {
            format!("problem.p must lie in (0, 1], got {}", problem.p)
        });

        let budget = Budget {
            horizon: raw.budget.horizon.unwrap_or(DEFAULT_HORIZON),
            max_iters: raw.budget.max_iters,
        };
        self.check(positive(budget.horizon), || {
            format!("budget.horizon must be positive, got {}", budget.horizon)
        });
        self.check(budget.max_iters != Some(0), || {
            "budget.max_iters must be positive".into()
        });

        let time_model = self.time_model(&raw.time_model, n, seed, budget.horizon, base);
        let algorithms = raw
            .algorithm
            .iter()
            .enumerate()
            .filter_map(|(i, a)| self.algorithm(i, a, n))
            .collect();
        let gap = self.gap(&raw.gap, n);
        let analysis = self.analysis(&raw.analysis);

        if !self.errors.is_empty() {
            return Err(HarnessError::Validation(self.errors));
        }
        Ok(ExperimentSpec {
            spec_version,
            scenario,
            n,
            seed,
            replications,
            output_dir: raw.output_dir,
            record_cap,
            problem,
            budget,
            time_model: time_model.expect("validated"),
            algorithms,
            gap,
            analysis,
        })
    }

    fn time_model(
        &mut self,
        t: &RawTimeModel,
        n: usize,
        seed: u64,
        horizon: f64,
        base: &Path,
    ) -> Option<TimeModelRecipe> {
        let kind = t.kind.as_deref().unwrap_or("fixed");
        let fixed_keys = [
            ("law", t.law.is_some()),
            ("exponent", t.exponent.is_some()),
            ("taus", t.taus.is_some()),
            ("scale", t.scale.is_some()),
        ];
        let power_keys = [
            ("generator", t.generator.is_some()),
            ("step", t.step.is_some()),
            ("profile_horizon", t.profile_horizon.is_some()),
            ("generator_seed", t.generator_seed.is_some()),
            ("speed", t.speed.is_some()),
            ("idle_fraction", t.idle_fraction.is_some()),
            ("idle_rule", t.idle_rule.is_some()),
            ("interval", t.interval.is_some()),
            ("allow_out_of_regime", t.allow_out_of_regime.is_some()),
            ("t_switch", t.t_switch.is_some()),
            ("multiplier", t.multiplier.is_some()),
            ("path", t.path.is_some()),
            ("interpolation", t.interpolation.is_some()),
        ];
        let random_keys = [("distribution", t.distribution.is_some())];
        match kind {
            "fixed" => {
                self.unused("time_model", "kind = \"fixed\"", &power_keys);
                self.unused("time_model", "kind = \"fixed\"", &random_keys);
                let scale = t.scale.unwrap_or(1.0);
                self.check(positive(scale), || "time_model.scale must be positive".into());
                let law = match t.law.as_deref().unwrap_or("sqrt") {
                    "sqrt" => FixedLaw::Sqrt,
                    "linear" => FixedLaw::Linear,
                    "power" => {
                        let exponent = t.exponent.unwrap_or(f64::NAN);
                        self.check(exponent.is_finite(), || {
                            "time_model.exponent is required for law = \"power\"".into()
                        });
                        FixedLaw::Power { exponent }
                    }
                    "custom" => {
                        let taus = t.taus.clone().unwrap_or_default();
                        self.check(taus.len() == n, || {
                            format!("time_model.taus has {} entries but n = {n}", taus.len())
                        });
                        self.check(taus.iter().all(|&x| positive(x)), || {
                            "time_model.taus must be positive and finite".into()
                        });
                        FixedLaw::Custom { taus }
                    }
                    other => {
                        self.errors.push(format!(
                            "time_model.law {other:?} is not one of sqrt, linear, power, custom"
                        ));
                        return None;
                    }
                };
                if !matches!(law, FixedLaw::Power { .. }) {
                    self.unused("time_model", "this law", &[("exponent", t.exponent.is_some())]);
                }
                if !matches!(law, FixedLaw::Custom { .. }) {
                    self.unused("time_model", "this law", &[("taus", t.taus.is_some())]);
                }
                Some(TimeModelRecipe::Fixed { law, scale })
            }
            "random" => {
                self.unused("time_model", "kind = \"random\"", &fixed_keys);
                self.unused("time_model", "kind = \"random\"", &power_keys);
                let Some(distribution) = t.distribution else {
                    self.errors
                        .push("time_model.distribution is required for kind = \"random\"".into());
                    return None;
                };
                if let Err(e) = distribution.validate() {
                    self.errors.push(format!("time_model.distribution: {e}"));
                }
                Some(TimeModelRecipe::Random { distribution })
            }
            "power" => {
                self.unused("time_model", "kind = \"power\"", &fixed_keys);
                self.unused("time_model", "kind = \"power\"", &random_keys);
                self.power(t, seed, horizon, base)
                    .map(|generator| TimeModelRecipe::Power { generator })
            }
            other => {
                self.errors
                    .push(format!("time_model.kind {other:?} is not one of fixed, random, power"));
                None
            }
        }
    }

    fn power(&mut self, t: &RawTimeModel, seed: u64, horizon: f64, base: &Path) -> Option<PowerGenerator> {
        let name = t.generator.as_deref().unwrap_or("chaotic");
        let step = t.step.unwrap_or(DEFAULT_PROFILE_STEP);
        let profile_horizon = t.profile_horizon.unwrap_or(horizon);
        let grid_keys = [
            ("step", t.step.is_some()),
            ("generator_seed", t.generator_seed.is_some()),
        ];
        let participation_keys = [
            ("idle_fraction", t.idle_fraction.is_some()),
            ("idle_rule", t.idle_rule.is_some()),
            ("interval", t.interval.is_some()),
            ("allow_out_of_regime", t.allow_out_of_regime.is_some()),
        ];
        let speedup_keys = [
            ("t_switch", t.t_switch.is_some()),
            ("multiplier", t.multiplier.is_some()),
        ];
        let csv_keys = [("path", t.path.is_some()), ("interpolation", t.interpolation.is_some())];
        let context = format!("generator = {name:?}");
        match name {
            "chaotic" | "periodic" => {
                self.unused("time_model", &context, &participation_keys);
                self.unused("time_model", &context, &speedup_keys);
                self.unused("time_model", &context, &csv_keys);
                self.unused("time_model", &context, &[("speed", t.speed.is_some())]);
                self.check(positive(step), || "time_model.step must be positive".into());
                self.check(positive(profile_horizon), || {
                    "time_model.profile_horizon must be positive".into()
                });
                let seed = t.generator_seed.unwrap_or(seed);
                Some(if name == "chaotic" {
                    PowerGenerator::Chaotic {
                        step,
                        horizon: profile_horizon,
                        seed,
                    }
                } else {
                    PowerGenerator::Periodic {
                        step,
                        horizon: profile_horizon,
                        seed,
                    }
                })
            }
            "participation" => {
                self.unused("time_model", &context, &grid_keys);
                self.unused("time_model", &context, &speedup_keys);
                self.unused("time_model", &context, &csv_keys);
                let schedule = ParticipationSchedule {
                    speed: t.speed.unwrap_or(1.0),
                    idle_fraction: t.idle_fraction.unwrap_or(0.0),
                    rule: t.idle_rule.unwrap_or(IdleRule::AdversarialFastest),
                    interval: t.interval.unwrap_or(1.0),
                    allow_out_of_regime: t.allow_out_of_regime.unwrap_or(false),
                };
                if let Err(e) = schedule.validate() {
                    self.errors.push(format!("time_model: {e}"));
                }
                self.check(positive(profile_horizon), || {
                    "time_model.profile_horizon must be positive".into()
                });
                Some(PowerGenerator::Participation {
                    schedule,
                    horizon: profile_horizon,
                })
            }
            "speedup" => {
                self.unused("time_model", &context, &grid_keys);
                self.unused("time_model", &context, &participation_keys);
                self.unused("time_model", &context, &csv_keys);
                self.unused(
                    "time_model",
                    &context,
                    &[("profile_horizon", t.profile_horizon.is_some())],
                );
                let speed = t.speed.unwrap_or(1.0);
                let t_switch = t.t_switch.unwrap_or(f64::NAN);
                let multiplier = t.multiplier.unwrap_or(f64::NAN);
                self.check(positive(speed), || "time_model.speed must be positive".into());
                self.check(positive(t_switch), || {
                    "time_model.t_switch is required and must be positive".into()
                });
                self.check(multiplier >= 1.0 && multiplier.is_finite(), || {
                    "time_model.multiplier is required and must be at least 1".into()
                });
                Some(PowerGenerator::Speedup {
                    speed,
                    t_switch,
                    multiplier,
                })
            }
            "csv" => {
                self.unused("time_model", &context, &grid_keys);
                self.unused("time_model", &context, &participation_keys);
                self.unused("time_model", &context, &speedup_keys);
                self.unused(
                    "time_model",
                    &context,
                    &[
                        ("speed", t.speed.is_some()),
                        ("profile_horizon", t.profile_horizon.is_some()),
                    ],
                );
                let Some(path) = &t.path else {
                    self.errors
                        .push("time_model.path is required for generator = \"csv\"".into());
                    return None;
                };
                Some(PowerGenerator::Csv {
                    path: base.join(path),
                    interpolation: t.interpolation.unwrap_or_default(),
                })
            }
            other => {
                self.errors.push(format!(
                    "time_model.generator {other:?} is not one of chaotic, periodic, participation, speedup, csv"
                ));
                None
            }
        }
    }

    fn algorithm(&mut self, i: usize, a: &RawAlgorithm, n: usize) -> Option<AlgorithmGrid> {
        let at = format!("algorithm[{i}]");
        let kind = match a.kind.as_deref() {
            Some("sync") => AlgorithmKind::Sync,
            Some("m_sync") => AlgorithmKind::MSync,
            Some("async") => AlgorithmKind::Async,
            Some("rennala") => AlgorithmKind::Rennala,
            Some(other) => {
                self.errors.push(format!(
                    "{at}.kind {other:?} is not one of sync, m_sync, async, rennala"
                ));
                return None;
            }
            None => {
                self.errors.push(format!("{at}.kind is required"));
                return None;
            }
        };
        let context = format!("kind = {:?}", kind.name());
        let mut gammas = a.gammas.clone().unwrap_or_else(default_gamma_grid);
        self.check(!gammas.is_empty(), || format!("{at}.gammas must not be empty"));
        self.check(gammas.iter().all(|&g| positive(g)), || {
            format!("{at}.gammas must be positive and finite")
        });
        gammas.sort_by(f64::total_cmp);
        gammas.dedup();

        let group_key = match kind {
            AlgorithmKind::MSync => Some(("ms", &a.ms)),
            AlgorithmKind::Rennala => Some(("batches", &a.batches)),
            _ => None,
        };
        if kind != AlgorithmKind::MSync {
            self.unused(&at, &context, &[("ms", a.ms.is_some())]);
        }
        if kind != AlgorithmKind::Rennala {
            self.unused(&at, &context, &[("batches", a.batches.is_some())]);
        }
        let groups = match group_key {
            Some((key, values)) => {
                let mut g = values.clone().unwrap_or_else(|| default_group_grid(n));
                self.check(!g.is_empty(), || format!("{at}.{key} must not be empty"));
                if kind == AlgorithmKind::MSync {
                    self.check(g.iter().all(|&m| (1..=n).contains(&m)), || {
                        format!("{at}.ms entries must lie in 1..={n}")
                    });
                } else {
                    self.check(g.iter().all(|&b| b >= 1), || {
                        format!("{at}.batches entries must be at least 1")
                    });
                }
                g.sort_unstable();
                g.dedup();
                g
            }
            None if kind == AlgorithmKind::Sync => vec![n],
            None => vec![1],
        };

        let stepsize = if kind == AlgorithmKind::Async {
            match a.stepsize.as_deref().unwrap_or("constant") {
                "constant" => {
                    self.unused(&at, "stepsize = \"constant\"", &[("max_delay", a.max_delay.is_some())]);
                    AsyncStepsize::Constant
                }
                "clipped" => {
                    let max_delay = a.max_delay.unwrap_or(0);
                    self.check(max_delay >= 1, || {
                        format!("{at}.max_delay must be at least 1 for stepsize = \"clipped\"")
                    });
                    AsyncStepsize::StalenessClipped { max_delay }
                }
                other => {
                    self.errors
                        .push(format!("{at}.stepsize {other:?} is not one of constant, clipped"));
                    AsyncStepsize::Constant
                }
            }
        } else {
            self.unused(
                &at,
                &context,
                &[("stepsize", a.stepsize.is_some()), ("max_delay", a.max_delay.is_some())],
            );
            AsyncStepsize::Constant
        };
        Some(AlgorithmGrid {
            kind,
            gammas,
            groups,
            stepsize,
        })
    }

    fn gap(&mut self, g: &RawGap, n: usize) -> GapSpec {
        let mut noise_ratios = g.noise_ratios.clone().unwrap_or_else(|| vec![100.0, 1000.0]);
        self.check(!noise_ratios.is_empty(), || "gap.noise_ratios must not be empty".into());
        self.check(noise_ratios.iter().all(|&x| x >= 0.0 && x.is_finite()), || {
            "gap.noise_ratios must be nonnegative and finite".into()
        });
        noise_ratios.sort_by(f64::total_cmp);
        noise_ratios.dedup();
        let spec = GapSpec {
            noise_ratios,
            l_delta_over_eps: g.l_delta_over_eps.unwrap_or(1.0),
            c1: g.c1.unwrap_or(16.0),
            c2: g.c2.unwrap_or(1.0),
            upper_units: g.upper_units.unwrap_or(hetsgd_core::analyzer::UPPER_STEP_UNITS),
            ms: g.ms.clone().map(|mut ms| {
                ms.sort_unstable();
                ms.dedup();
                ms
            }),
        };
        self.check(positive(spec.l_delta_over_eps), || {
            "gap.l_delta_over_eps must be positive".into()
        });
        self.check(positive(spec.c1) && positive(spec.c2), || {
            "gap.c1 and gap.c2 must be positive".into()
        });
        self.check(spec.upper_units >= 1, || "gap.upper_units must be at least 1".into());
        if let Some(ms) = &spec.ms {
            self.check(!ms.is_empty() && ms.iter().all(|&m| (1..=n).contains(&m)), || {
                format!("gap.ms must be nonempty with entries in 1..={n}")
            });
        }
        spec
    }

    fn analysis(&mut self, a: &RawAnalysis) -> AnalysisSpec {
        let spec = AnalysisSpec {
            l_delta_over_eps: a.l_delta_over_eps.unwrap_or(1.0),
            noise_ratio: a.noise_ratio.unwrap_or(100.0),
            r: a.r,
            participation: match (a.participation_speed, a.idle_fraction) {
                (None, None) => None,
                (v, p) => Some((v.unwrap_or(1.0), p.unwrap_or(0.0))),
            },
        };
        self.check(positive(spec.l_delta_over_eps), || {
            "analysis.l_delta_over_eps must be positive".into()
        });
        self.check(spec.noise_ratio >= 0.0 && spec.noise_ratio.is_finite(), || {
            "analysis.noise_ratio must be nonnegative".into()
        });
        self.check(spec.r.is_none_or(positive), || "analysis.r must be positive".into());
        if let Some((v, p)) = spec.participation {
            self.check(positive(v), || "analysis.participation_speed must be positive".into());
            self.check((0.0..0.4).contains(&p), || {
                "analysis.idle_fraction must lie in [0, 0.4)".into()
            });
        }
        spec
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentSpec> {
        parse_spec(text, Path::new("."), &Overrides::default())
    }

    #[test]
    fn group_grid() {
        assert_eq!(default_group_grid(1), [1]);
        assert_eq!(default_group_grid(12), [1, 5, 10, 12]);
        assert_eq!(default_group_grid(15), [1, 5, 10, 15]);
        assert_eq!(default_gamma_grid().len(), 21);
    }

    #[test]
    fn grids_are_canonical() {
        let s = parse(
            "scenario = \"x\"\nn = 8\n[[algorithm]]\nkind = \"m_sync\"\ngammas = [0.5, 0.125, 0.5]\nms = [8, 2, 2]\n",
        )
        .unwrap();
        assert_eq!(s.algorithms[0].gammas, [0.125, 0.5]);
        assert_eq!(s.algorithms[0].groups, [2, 8]);
    }

    #[test]
    fn custom_taus_set_n() {
        let s = parse("scenario = \"x\"\n[time_model]\nlaw = \"custom\"\ntaus = [1.0, 2.0, 5.0]\n").unwrap();
        assert_eq!(s.n, 3);
    }

    #[test]
    fn overrides_apply() {
        let ov = Overrides {
            full: true,
            seed: Some(9),
            ..Overrides::default()
        };
        let s = parse_spec("scenario = \"x\"\nn = 10\n", Path::new("."), &ov).unwrap();
        assert_eq!((s.n, s.problem.d, s.seed), (FULL_WORKERS, FULL_DIM, 9));
    }
}
