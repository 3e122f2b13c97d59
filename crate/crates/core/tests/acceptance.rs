//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use hetsgd::gap::run_gap_study;
use hetsgd::sweep::run_sweep;
use hetsgd::{parse_spec, Overrides};
use hetsgd_core::analyzer::{
    iteration_count, noise_term, partial_participation_bound, t_optimal, t_sync, upper_bound_sequence, upper_step,
    RateConstants, REFERENCE_GAP_UNITS,
};
use hetsgd_core::problem::Quadratic;
use hetsgd_core::rng::{stream, Domain};
use hetsgd_core::simulator::{run, run_m_sync, run_sync, Algorithm, SimConfig, StopRule};
use hetsgd_core::time_models::generators::participation_profiles;
use hetsgd_core::time_models::{
    estimate_r, DelayDistribution, FixedTimes, IdleRule, Interpolation, ParticipationSchedule, PowerProfile, TimeModel,
};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    if took <= limit {
        Ok(())
    } else {
        Err(format!("took {took:?}, limit {limit:?}"))
    }
}

fn spec(text: &str) -> hetsgd::ExperimentSpec {
    parse_spec(text, Path::new("."), &Overrides::default()).expect("acceptance spec is valid")
}

fn oracle_exactness() -> Outcome {
    let start = Instant::now();
    let d = 50;
    let mut rng = stream(1, Domain::Sampling, 1);
    let mut worst = 0.0f64;
    for p in [0.01, 0.5, 1.0] {
        let q = Quadratic::new(d, p).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let support = rng.random_range(0..=d);
            let x: Vec<f64> = (0..d)
                .map(|i| if i < support { rng.random_range(-3.0..3.0) } else { 0.0 })
                .collect();
            let g = q.gradient(&x).unwrap();
            let hit = q.stochastic_gradient_with(&x, true).unwrap();
            let miss = q.stochastic_gradient_with(&x, false).unwrap();
            for i in 0..d {
                let mean = p * hit[i] + (1.0 - p) * miss[i];
                worst = worst.max((mean - g[i]).abs() / g[i].abs().max(1.0));
            }
        }
    }
    within(Duration::from_secs(1), start)?;
    check(worst <= 1e-12, format!("max deviation {worst:.3e}"))
}

fn sync_wall_clock() -> Outcome {
    let q = Quadratic::new(10, 0.5).unwrap();
    let model = TimeModel::Fixed(FixedTimes::new(vec![1.0, 2.0, 5.0]).unwrap());
    let sync = run_sync(&q, &model, &SimConfig::new(Algorithm::Sync, 0.5, StopRule::iters(3), 0))
        .map_err(|e| e.to_string())?;
    let m_sync = run_m_sync(
        &q,
        &model,
        &SimConfig::new(Algorithm::MSync { m: 2 }, 0.5, StopRule::iters(2), 0),
    )
    .map_err(|e| e.to_string())?;
    check(
        sync.final_time() == 15.0 && m_sync.final_time() == 4.0,
        format!("sync {} s, m-sync(m=2) {} s", sync.final_time(), m_sync.final_time()),
    )
}

fn log_certificate() -> Outcome {
    let start = Instant::now();
    let mut rng = stream(3, Domain::Sampling, 3);
    let mut violations = 0;
    let mut tightest = f64::INFINITY;
    for _ in 0..1000 {
        let n = rng.random_range(1..=512);
        let taus: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-2.0..3.0))).collect();
        let t = FixedTimes::new(taus).unwrap();
        let c = RateConstants::from_ratios(
            10f64.powf(rng.random_range(-1.0..3.0)),
            10f64.powf(rng.random_range(-1.0..4.0)),
        )
        .unwrap();
        let bound = 64.0 * t_optimal(&t, &c).0 * ((n + 1) as f64).ln();
        let ts = t_sync(&t, &c).0;
        tightest = tightest.min(bound / ts);
        if ts > bound {
            violations += 1;
        }
    }
    within(Duration::from_secs(5), start)?;
    let mut growth = Vec::new();
    let mut tight = true;
    for n in [8usize, 64, 512] {
        let t = FixedTimes::new((1..=n).map(|i| i as f64).collect()).unwrap();
        let c = RateConstants::from_ratios(1.0, n as f64).unwrap();
        let ratio = t_sync(&t, &c).0 / t_optimal(&t, &c).0;
        tight &= ratio >= 0.5 * ((n + 1) as f64).ln();
        growth.push(format!("n={n}: {ratio:.3}"));
    }
    check(
        violations == 0 && tight,
        format!(
            "{violations} violations, min slack {tightest:.3}; linear times {}",
            growth.join(", ")
        ),
    )
}

fn constant_power_recursion() -> Outcome {
    let mut rng = stream(4, Domain::Sampling, 4);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(1..=30);
        let mut powers: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..10.0)).collect();
        powers.sort_by(|a, b| b.total_cmp(a));
        let profiles: Vec<PowerProfile> = powers.iter().map(|&v| PowerProfile::constant(v).unwrap()).collect();
        // 16 * 10 = 160 >= 100 steps for every m
        let c = RateConstants::from_ratios(10.0, 0.0).unwrap();
        for m in 1..=n {
            let seq = upper_bound_sequence(&profiles, &c, m).map_err(|e| e.to_string())?;
            if seq.len() < 101 {
                return Err(format!("only {} steps", seq.len() - 1));
            }
            for (k, t) in seq.iter().enumerate().take(101) {
                let want = 2.0 * k as f64 / powers[m - 1];
                worst = worst.max((t - want).abs() / want.max(1.0));
            }
        }
    }
    check(worst <= 1e-12, format!("max relative deviation {worst:.3e}"))
}

fn random_profile(rng: &mut impl Rng) -> PowerProfile {
    let knots = rng.random_range(1..6);
    let mut times = vec![0.0];
    for _ in 1..knots {
        let last = *times.last().unwrap();
        times.push(last + rng.random_range(0.1..3.0));
    }
    let mut values: Vec<f64> = (0..knots)
        .map(|_| {
            if rng.random_bool(0.2) {
                0.0
            } else {
                rng.random_range(0.05..4.0)
            }
        })
        .collect();
    *values.last_mut().unwrap() = rng.random_range(0.05..4.0);
    let interp = if rng.random_bool(0.5) {
        Interpolation::Linear
    } else {
        Interpolation::Hold
    };
    PowerProfile::new(times, values, interp).unwrap()
}

fn order_statistic_identity() -> Outcome {
    let mut rng = stream(5, Domain::Sampling, 5);
    let mut cases = 0u64;
    for n in 1..=8usize {
        for _ in 0..200 {
            let profiles: Vec<PowerProfile> = (0..n).map(|_| random_profile(&mut rng)).collect();
            let t0 = rng.random_range(0.0..5.0);
            let units = rng.random_range(1..=3);
            let done: Vec<f64> = profiles.iter().map(|p| p.time_to_complete(t0, units)).collect();
            for m in 1..=n {
                let mut brute = f64::INFINITY;
                for mask in 0u32..(1 << n) {
                    if mask.count_ones() as usize != m {
                        continue;
                    }
                    let slowest = (0..n)
                        .filter(|i| mask >> i & 1 == 1)
                        .map(|i| done[i])
                        .fold(f64::NEG_INFINITY, f64::max);
                    brute = brute.min(slowest);
                }
                let shortcut = upper_step(&profiles, t0, m, units).unwrap_or(f64::INFINITY);
                if shortcut != brute {
                    return Err(format!("n={n} m={m}: brute {brute} vs shortcut {shortcut}"));
                }
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} cases equal"))
}

fn gap_reproduction() -> Outcome {
    let start = Instant::now();
    let base = |generator: &str, units: u64| {
        spec(&format!(
            "scenario = \"{generator}_gap\"\nn = 50\nseed = 0\n[budget]\nhorizon = 500.0\n[time_model]\nkind = \"power\"\ngenerator = \"{generator}\"\n\
             step = 0.1\n[gap]\nnoise_ratios = [100.0, 1000.0]\nl_delta_over_eps = 1.0\nc1 = 16.0\nc2 = 1.0\n\
             upper_units = {units}\n"
        ))
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for (generator, bounds) in [("chaotic", [2.2, 2.5]), ("periodic", [1.5, 1.8])] {
        let table = run_gap_study(&base(generator, 2)).map_err(|e| e.to_string())?;
        let reference = run_gap_study(&base(generator, REFERENCE_GAP_UNITS)).map_err(|e| e.to_string())?;
        for ((row, one), bound) in table.rows.iter().zip(&reference.rows).zip(bounds) {
            let ratio = row.best_ratio.unwrap_or(f64::INFINITY);
            ok &= ratio <= bound;
            parts.push(format!(
                "{generator} {}: {ratio:.3} (<= {bound}; one-unit steps {:.3})",
                row.noise_ratio,
                one.best_ratio.unwrap_or(f64::NAN)
            ));
        }
    }
    within(Duration::from_secs(120), start)?;
    check(ok, parts.join("; "))
}

fn participation_check() -> Outcome {
    let n = 50;
    let p = 0.3;
    let m = 20;
    let noise = RateConstants::from_ratios(1.0, 100.0).unwrap();
    let iterations = iteration_count(&noise, m).map_err(|e| e.to_string())?;
    let mut violations = 0;
    let mut worst_step = 0.0f64;
    for seed in 0..10u64 {
        let mut rng = stream(seed, Domain::Sampling, 7);
        let v = rng.random_range(0.5..2.0);
        let schedule = ParticipationSchedule {
            speed: v,
            idle_fraction: p,
            rule: IdleRule::AdversarialFastest,
            interval: rng.random_range(0.1..3.0),
            allow_out_of_regime: false,
        };
        let bound = partial_participation_bound(v, p, n, &noise).map_err(|e| e.to_string())?;
        if !bound.m_range.contains(&m) {
            return Err(format!("m = {m} outside {:?}", bound.m_range));
        }
        let budget = 4.0 * iterations as f64 / v;
        let profiles = participation_profiles(&schedule, n, 2.0 * budget).map_err(|e| e.to_string())?;
        let model = TimeModel::power(profiles).map_err(|e| e.to_string())?;
        let q = Quadratic::new(20, 0.5).unwrap();
        let cfg = SimConfig::new(Algorithm::MSync { m }, 0.5, StopRule::iters(iterations), seed).with_update_log();
        let tr = run(&q, &model, &cfg).map_err(|e| e.to_string())?;
        let mut prev = 0.0;
        for u in &tr.updates {
            let step = u.time - prev;
            worst_step = worst_step.max(step * v / 4.0);
            if step > 4.0 / v {
                violations += 1;
            }
            prev = u.time;
        }
        if tr.iterations() != iterations || tr.final_time() > budget {
            violations += 1;
        }
    }
    check(
        violations == 0,
        format!("{violations} violations over 10 seeds, K = {iterations}, worst step {worst_step:.3} x 4/v"),
    )
}

fn r_scale() -> Outcome {
    let mut rng = stream(8, Domain::Sampling, 8);
    let exp = DelayDistribution::exponential(1.0).unwrap();
    let draws: Vec<f64> = (0..100_000).map(|_| exp.sample(&mut rng)).collect();
    let r = estimate_r(&draws).map_err(|e| e.to_string())?;
    let term = noise_term(0.6, 1_000_000);
    check(
        (0.3..=3.0).contains(&r) && (term - 8.29).abs() <= 0.01 && term < 72.2,
        format!("R = {r:.4}, noise term {term:.4}"),
    )
}

fn desk_scale_sweeps() -> Outcome {
    let start = Instant::now();
    let fixed = spec(
        "scenario = \"sqrt_times\"\nn = 100\nseed = 0\nreplications = 5\n[problem]\nd = 200\np = 0.01\n\
         [budget]\nhorizon = 1000.0\n[time_model]\nkind = \"fixed\"\nlaw = \"sqrt\"\n\
         [[algorithm]]\nkind = \"sync\"\n[[algorithm]]\nkind = \"m_sync\"\n",
    );
    let result = run_sweep(&fixed).map_err(|e| e.to_string())?;
    let sync = result.best_for("sync").ok_or("no sync result")?.mean_final_gap;
    let m_sync = result.best_for("m_sync").ok_or("no m-sync result")?;
    let random = spec(
        "scenario = \"uniform_times\"\nn = 100\nseed = 0\nreplications = 5\n[problem]\nd = 200\np = 0.01\n\
         [budget]\nhorizon = 1000.0\n[time_model]\nkind = \"random\"\n\
         distribution = { kind = \"uniform\", lo = 0.5, hi = 1.5 }\n\
         [[algorithm]]\nkind = \"sync\"\n[[algorithm]]\nkind = \"rennala\"\n",
    );
    let result = run_sweep(&random).map_err(|e| e.to_string())?;
    let r_sync = result.best_for("sync").ok_or("no sync result")?.mean_final_gap;
    let rennala = result.best_for("rennala").ok_or("no rennala result")?;
    within(Duration::from_secs(300), start)?;
    check(
        m_sync.mean_final_gap <= 0.5 * sync && r_sync <= 2.0 * rennala.mean_final_gap,
        format!(
            "sqrt times: m-sync(m={}) {:.3e} vs sync {sync:.3e}; uniform times: sync {r_sync:.3e} vs rennala(B={}) {:.3e}",
            m_sync.m, m_sync.mean_final_gap, rennala.m, rennala.mean_final_gap
        ),
    )
}

fn m_sync_full_is_sync() -> Outcome {
    let mut rng = stream(10, Domain::Sampling, 10);
    for case in 0..20 {
        let n = rng.random_range(1..=8);
        let q = Quadratic::new(rng.random_range(5..40), [0.05, 0.3, 1.0][case % 3]).unwrap();
        let model = if case % 2 == 0 {
            TimeModel::Fixed(FixedTimes::new((0..n).map(|_| rng.random_range(0.1..5.0)).collect()).unwrap())
        } else {
            TimeModel::random(
                (0..n)
                    .map(|_| DelayDistribution::uniform(0.1, rng.random_range(0.2..4.0)).unwrap())
                    .collect(),
            )
            .unwrap()
        };
        let stop = StopRule::iters(rng.random_range(1..60));
        let gamma = rng.random_range(0.05..1.5);
        let seed = rng.random();
        let sync = run(&q, &model, &SimConfig::new(Algorithm::Sync, gamma, stop, seed));
        let m_sync = run(
            &q,
            &model,
            &SimConfig::new(Algorithm::MSync { m: n }, gamma, stop, seed),
        );
        if sync != m_sync {
            return Err(format!("case {case} differs"));
        }
    }
    Ok("20 configurations identical".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("oracle exactness", oracle_exactness),
        ("sync wall-clock law", sync_wall_clock),
        ("log certificate", log_certificate),
        ("constant-power recursion", constant_power_recursion),
        ("order-statistic identity", order_statistic_identity),
        ("gap reproduction", gap_reproduction),
        ("partial participation", participation_check),
        ("R scale", r_scale),
        ("desk-scale sweeps", desk_scale_sweeps),
        ("m-sync with m = n is sync", m_sync_full_is_sync),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
