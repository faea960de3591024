//! Bayesian agents deciding whether to stay in a rule-governed group.
//!
//! Agents hold Beta beliefs about the share of punishers around them and
//! solve an optimal stopping problem over the belief lattice ([`policy`]).
//! [`information`] measures what perfect knowledge of that share would be
//! worth, [`engine`] simulates whole groups, and [`sweep`] runs the
//! replicated density × cost experiments.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common `f64` and `f32` instantiations.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod information;
pub mod invariants;
pub mod model;
pub mod policy;
pub mod quadrature;
pub mod scalar;
pub mod seeds;
pub mod sweep;

pub use engine::{
    init_group, is_collapsed, run_group, AgentPolicy, AgentState, EngineConfig, GroupState, ObservationScope, Policies,
    Sample, Trajectory, TypeAssignment,
};
pub use error::{Error, Result};
pub use information::{
    expected_clipped_value, full_info_value, observe_then_commit_value, vpi, ClippedValue, VpiOptions, VpiReport,
};
pub use model::{
    adjusted_discount, expected_period_reward, prop1_residual, realize_interaction, AgentType, BeliefState, GameKind,
    ModelParams, PayoffConvention,
};
pub use policy::{
    brute_force_branch, brute_force_value, myopic_decide, solve, solve_value, Boundary, Decision, PolicyTable,
    SolverOptions,
};
pub use scalar::Scalar;
pub use sweep::{
    collapse_stats_from_rows, collapse_time_stats, preset, run_sweep, AggregateRow, CensoredTime, CollapseStats, Grid,
    PolicyKind, SweepResult, SweepSpec,
};

pub type Params = ModelParams<f64>;
pub type Params32 = ModelParams<f32>;
pub type Belief = BeliefState<f64>;
pub type Belief32 = BeliefState<f32>;
pub type Table = PolicyTable<f64>;
pub type Table32 = PolicyTable<f32>;
pub type Group = GroupState<f64>;
pub type Group32 = GroupState<f32>;
pub type Spec = SweepSpec<f64>;
pub type Spec32 = SweepSpec<f32>;
pub type Row = AggregateRow<f64>;
pub type Row32 = AggregateRow<f32>;
