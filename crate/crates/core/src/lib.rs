//! Closed-loop simulation of a recommendation platform facing a reactive
//! agent, plus analytic oracles for the block-boundary opinion weights.
//!
//! An agent with innate opinion `x0` consumes recommendations in blocks of
//! `s` steps, clicking on the first `T` of each block. Clicking pulls the
//! opinion toward the recommendation; abstaining lets it relax back toward
//! `x0`. Three click schedules (constant, geometrically decreasing,
//! drift-triggered decreasing) are simulated exactly and mirrored by closed
//! forms for the opinion's convex weights at block boundaries, which the
//! `verify` suites cross-check against brute-force recursion.

pub mod agent;
pub mod dist;
pub mod dynamics;
pub mod error;
pub mod oracle;
pub mod payoffs;
pub mod platform;
pub mod population;
pub mod report;
pub mod sim;
pub mod verify;

pub use agent::{AgentPolicy, AgentPolicyState, BlockGeometry};
pub use dist::DistSpec;
pub use dynamics::{DynamicsParams, Opinion, Recommendation, HULL_SLACK};
pub use error::{Error, Result};
pub use oracle::monotonicity::{monotonicity_suite, MonotonicityGrid};
pub use oracle::{
    adaptive_beats_fixed_threshold, brute_force_block_opinion, limit_agent_utility,
    limit_opinion, measure_adaptive_boundary, upsilon_adaptive,
    upsilon_adaptive_with_boundary, upsilon_decreasing, upsilon_fixed, AdaptiveBoundary,
    BlockWeight, LimitValue, Phase, PhaseBoundaries, ThresholdReport,
};
pub use payoffs::{agent_utility, platform_payoff, utility_series, RewardFn, UtilityPoint};
pub use platform::{Observation, PlatformPolicy, PlatformState};
pub use population::{
    distribution_distance, run_population, run_sweep, Histogram, PopulationResult,
    PopulationSpec, SweepBase, SweepParameter, SweepRow, SweepSpec,
};
pub use report::PropertyOutcome;
pub use sim::{replay_check, run, BlockRecord, OpinionTrace, RunSpec, StepRecord};
pub use verify::{improvement_suite, limits_suite, oracle_equivalence_suite};
