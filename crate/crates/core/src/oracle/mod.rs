//! Independent brute-force checks of the analytic formulas.

pub mod coincidence;
pub mod fock;
pub mod smoothing;

pub use coincidence::{coincidence_weight_oracle, CoincidenceEstimate, CoincidencePattern};
pub use fock::{
    check_commutator_identities, check_dropped_terms_quadratic, check_nested_commutator, check_nested_commutator_odd,
    fock_operators, DoublingRatios, FockOperators, FockTruncation,
};
pub use smoothing::{dirac_cumulative_phi, smoothed_pulse_limit, SmoothingReport};
