use std::path::Path;

use hetsgd::gap::run_gap_study;
use hetsgd::{parse_spec, HarnessError, Overrides};

fn spec(text: &str) -> hetsgd::ExperimentSpec {
    parse_spec(text, Path::new("."), &Overrides::default()).unwrap()
}

#[test]
fn equal_powers_give_a_ratio_flat_in_m() {
    let s = spec(
        "scenario = \"flat\"\nn = 6\n[time_model]\nkind = \"power\"\ngenerator = \"speedup\"\nspeed = 2.0\nt_switch = 1.0\nmultiplier = 1.0\n\
         [gap]\nnoise_ratios = [0.0, 1.0]\n",
    );
    let table = run_gap_study(&s).unwrap();
    assert_eq!(table.cells.len(), 12);
    for row in &table.rows {
        let ratios: Vec<f64> = table
            .cells
            .iter()
            .filter(|c| c.noise_ratio == row.noise_ratio)
            .map(|c| c.ratio.unwrap())
            .collect();
        for r in &ratios {
            assert!((r - ratios[0]).abs() <= 1e-9 * ratios[0], "{ratios:?}");
        }
    }
    assert!(!table.extrapolated);
}

#[test]
fn generated_profiles_cover_both_recursions() {
    let s = spec(
        "scenario = \"wave\"\nn = 10\n[budget]\nhorizon = 5.0\n[time_model]\nkind = \"power\"\ngenerator = \"periodic\"\n\
         [gap]\nnoise_ratios = [100.0]\n",
    );
    let table = run_gap_study(&s).unwrap();
    assert!(!table.extrapolated);
    let latest = table.cells.iter().filter_map(|c| c.t_upper).fold(0.0, f64::max);
    assert!(latest <= table.profile_horizon);
    assert!(table.rows[0].best_ratio.unwrap() >= 1.0);
}

#[test]
fn gap_needs_power_profiles() {
    let s = spec("scenario = \"fixed\"\nn = 3\n");
    assert!(matches!(run_gap_study(&s), Err(HarnessError::Validation(_))));
}
