//! Assumption audits, tuning sequences and probability bounds.

mod audit;
mod bounds;
mod coherence;
mod tuning;

pub use audit::{audit_bounds, audit_scenario, sup_gap, AuditInputs, BoundsAudit, Clause, ClauseCheck, Evidence};
pub use bounds::{
    bernstein_bound, event_bounds, l1_deviation_bound, target_deviation_bounds, BoundParams, BoundValue,
    EventBounds, TargetBounds,
};
pub use coherence::{
    check_coherence, coherence_over, correlations, in_coherent_ball, in_coherent_ball_restricted,
    CoherenceReport, DEFAULT_COHERENCE,
};
pub use tuning::{tuning_sequence, Regime, TuningConfig};
