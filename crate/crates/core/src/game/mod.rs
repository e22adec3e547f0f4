//! Coalition-level analytics on the expected game.

mod coalition;
mod lp;
mod shapley;
mod stability;
mod value_table;

pub use coalition::{PlayerSet, INP, MAX_PLAYERS};
pub use shapley::shapley;
pub(crate) use shapley::{shapley_into, shapley_weights};
pub use stability::{
    check_core, check_supermodularity, delta_from_stability_value, delta_hat, hoeffding_bound, range_square_sums,
    stability_lower_bound, stability_report, stability_report_from_ranges, stability_value_hat, stability_value_lp,
    utility_range, DeltaHat, StabilityReport, SupermodularityViolation,
};
pub use value_table::{build_value_table, marginal_contribution, realized_value, ValueTable};
