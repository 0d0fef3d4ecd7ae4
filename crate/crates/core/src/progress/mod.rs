//! Progress-measure engine: extended oracle calls with a record register,
//! the progress projectors, no-jump evolution and the transition-norm claims.

pub mod claims;
pub mod evolution;
pub mod projectors;
pub mod purified;
pub mod space;

pub use claims::{claim_norms, corollary_bound_check, extended_oracle_isometry};
pub use evolution::{
    evolve_no_jump, grover_schedule, progress_measure, progress_trace, success_probability,
    AlgorithmStep, NoJumpState, ProgressRow, ProgressTrace, Readout,
};
pub use projectors::{progress_projectors, ProgressProjectors, QBlockProjector};
pub use space::{ExtendedSpace, RecordKraus, ScenarioKind};
