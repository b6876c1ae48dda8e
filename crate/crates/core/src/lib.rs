//! Fair council weights for two-tier voting systems.
//!
//! A union of states sends one delegate per state to a council. Delegate `v`
//! votes with the majority of its state and carries weight `w_v`. This crate
//! computes the expected margin `E|S_v|` of each state under three voter
//! models (independent, common belief, mean field), the weights derived from
//! it, the democracy deficit `E(P - C)^2` between popular vote and council,
//! and the scaling laws of the weights in the population size.

pub mod belief;
pub mod binomial;
pub mod commonbelief;
pub mod council;
pub mod error;
pub mod estimators;
pub mod mc;
pub mod meanfield;
pub mod measures;
pub mod model;
pub mod outcome;
pub mod quadrature;
pub mod rng;
pub mod selftest;
pub mod weights;

pub use belief::BeliefDistribution;
pub use commonbelief::{
    classify_regime, distribution_distance, margin_bound_check, mean_vote_law, mu_bar,
    second_moment, BeliefFamily, BoundMode, MarginBoundReport, Regime, RegimeReport,
};
pub use council::{
    compare_weight_rules, council_decision, simulate, state_delegate_vote, Decision,
    RuleComparison, SimulationResult, WeightRule,
};
pub use error::{Error, Result};
pub use estimators::{
    expected_margin_asymptotic, expected_margin_exact, expected_margin_mc, state_moments,
    StateMoments,
};
pub use mc::MonteCarlo;
pub use meanfield::{
    asymptotic_weight_meanfield, geometric_grid, scaling_fit, solve_cj, CjSolution, ScalingFit,
    ScalingMode,
};
pub use measures::{magnetization_pmf, pmf_exact, MagnetizationPmf, ModelSampler};
pub use model::{EstimateMethod, MarginEstimate, VotingModel};
pub use outcome::{affirmative_count, majority_sign, margin, q_margin, Outcome, Quota, Spin};
pub use rng::RngStream;
pub use weights::{
    delta, delta_minimizing_weights, optimal_weights, verify_minimizer, CouncilSpec, DeltaEstimate,
    DeltaMethod, DeltaMode, MinimizerReport, OptimalWeights, State, WeightVector,
};
