//! Pure-state trajectory simulation of search strategies under noisy
//! oracles, with classical control between calls.

pub mod runner;
pub mod state;
pub mod stats;
pub mod strategies;
pub mod trajectory;

pub use runner::{
    coin_toss_counts, coin_toss_expectation, reflection_calls, run_outcomes, run_trial, run_trials, trial_seed, Mode, ReflectionKind,
    ReflectionSample,
};
pub use state::{ClassState, DenseState, QueryState};
pub use stats::{fit_exponent, quantile, wilson_interval, RunStatistics, TrialOutcome};
pub use strategies::{Constants, StrategyKind, StrategySpec};
pub use trajectory::{Flags, Noise, NoiseFlavor, Trajectory};
