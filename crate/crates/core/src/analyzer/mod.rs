//! Closed-form time complexities and the bound recursions under universal
//! computation powers.

mod bounds;
mod rates;
mod report;

pub use bounds::{
    gap_ratio, gap_ratios_over_m, lower_bound_sequence, lower_step, upper_bound_sequence,
    upper_bound_sequence_with_units, upper_step, BoundSequences, LowerConstants, REFERENCE_GAP_UNITS, UPPER_STEP_UNITS,
};
pub use rates::{
    expected_random_bound, g_of_m, h_of_m, harmonic_terms, iteration_count, log_gap_certificate, noise_term, optimal_m,
    partial_participation_bound, power_law_m, t_optimal, t_sync, t_sync_all, ParticipationBound, PowerLawChoice,
    RateConstants,
};
pub use report::{ComplexityReport, RANDOM_BOUND_CONSTANT};
