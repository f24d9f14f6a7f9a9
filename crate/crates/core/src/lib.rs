//! Multi-group Curie-Weiss voting model.
//!
//! Each group `λ` of `N_λ` voters casts `±1` votes with joint law
//! `P(x) ∝ exp(β_λ S_λ² / (2 N_λ))`, where `S_λ` is the group margin; groups
//! are independent. The crate provides
//!
//! - exact moments of the margin ([`model`]), aggregated over the `N + 1`
//!   margin levels in log space;
//! - the maximum-likelihood estimate of each coupling from the sufficient
//!   statistic `T_λ = mean(S_λ²)` ([`estimator`]);
//! - the entropy function of `S²` and exponential tail bounds ([`ldp`]);
//! - exact, seeded sampling of configurations ([`sampler`]);
//! - council votes and optimal council weights ([`voting`]);
//! - a brute-force enumerator for small groups ([`oracle`]).

pub mod error;
pub mod estimator;
pub mod ldp;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod sampler;
pub mod solve;
pub mod voting;

pub use error::{Error, Result};
pub use estimator::{
    mle_estimate, multi_group_estimate, statistic_t, Classification, EstimateReport, GroupEstimate,
    SufficientSummary,
};
pub use ldp::{
    delta_atypical, delta_bar, entropy_s2, rate_j, tail_bound, CouplingInterval, RateContext,
    TailBound, TailEvent, TailKind,
};
pub use model::{
    abs_moment, log_partition, magnetization_pmf, moment_s2, theta_inverse, var_s2,
    ExtendedCoupling, GroupSpec, MagnetizationPmf,
};
pub use oracle::{brute_force_moments, OracleMoments};
pub use sampler::{sample_configurations, sample_margins, SampleBatch, SAMPLER_VERSION};
pub use voting::{
    council_votes, democracy_deficit, estimate_weights, optimal_weights, WeightEntry, WeightReport,
    WeightSource,
};

/// Crate version, recorded in serialized outputs.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
