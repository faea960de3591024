// Randomized structural properties, shared by the core property tests and
// the acceptance target.

use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestCaseError, TestRunner};
use silly_rules::invariants::{check_absorption, check_belief_conservation, check_pairing, check_survival, check_vpi};
use silly_rules::sweep::aggregate;
use silly_rules::{
    init_group, run_group, solve, vpi, AgentType, Belief, EngineConfig, Group, ObservationScope, Params,
    PayoffConvention, Policies, SolverOptions, TypeAssignment, VpiOptions,
};

pub const CASES: u32 = 10_000;

pub const NAMES: [&str; 5] = [
    "belief conservation",
    "retirement absorption",
    "pairing validity",
    "non-increasing survival",
    "VPI non-negativity",
];

#[derive(Debug, Clone)]
pub struct GroupCase {
    pub params: Params,
    pub config: EngineConfig,
    pub optimal: bool,
    pub seed: u64,
    /// Periods for single-group runs, timesteps for survival runs.
    pub steps: u32,
    pub groups: u32,
}

fn convention() -> impl Strategy<Value = PayoffConvention> {
    prop_oneof![Just(PayoffConvention::Prose), Just(PayoffConvention::Equation)]
}

fn agent_type() -> impl Strategy<Value = AgentType> {
    prop_oneof![Just(AgentType::Punisher), Just(AgentType::NonPunisher)]
}

fn engine_config() -> impl Strategy<Value = EngineConfig> {
    (any::<bool>(), any::<bool>()).prop_map(|(global, iid)| EngineConfig {
        observation: if global { ObservationScope::Global } else { ObservationScope::PerPair },
        assignment: if iid { TypeAssignment::Iid } else { TypeAssignment::Exact },
    })
}

/// Optimal policies are kept to cheap solves (short effective horizons).
pub fn group_case() -> impl Strategy<Value = GroupCase> {
    (any::<bool>(), 0.0..1.0f64, 0.0..1.0f64).prop_flat_map(|(optimal, du, gu)| {
        let (d, gamma) = if optimal { (0.6 * du, 0.5 + 0.4 * gu) } else { (0.95 * du, 0.5 + 0.45 * gu) };
        (
            0.0..0.15f64,
            0.5..2.0f64,
            0.0..=1.0f64,
            0.2..20.0f64,
            0.2..20.0f64,
            2u32..=24,
            convention(),
            engine_config(),
            any::<u64>(),
            1u32..=20,
            1u32..=6,
        )
            .prop_map(move |(c, r, theta, a, b, n, conv, config, seed, steps, groups)| GroupCase {
                params: Params {
                    density: d,
                    signaling_cost: c,
                    discount: gamma,
                    reward: r,
                    punisher_share: theta,
                    prior_alpha: a,
                    prior_beta: b,
                    group_size: n,
                    payoff_convention: conv,
                },
                config,
                optimal,
                seed,
                steps,
                groups,
            })
    })
}

pub fn policies(case: &GroupCase, periods: u64) -> Policies {
    if !case.optimal {
        return Policies::myopic();
    }
    let depth = match case.config.observation {
        ObservationScope::PerPair => periods,
        ObservationScope::Global => periods * u64::from(case.params.group_size - 1),
    };
    let opts = SolverOptions { min_horizon: depth as u32, value_depth: 0, ..SolverOptions::default() };
    Policies::optimal(
        solve(&case.params, AgentType::Punisher, &opts).unwrap(),
        solve(&case.params, AgentType::NonPunisher, &opts).unwrap(),
    )
}

type PeriodCheck = fn(&Group, &Group) -> Result<(), String>;

fn run_periods(case: &GroupCase, check: PeriodCheck) -> Result<(), TestCaseError> {
    let policies = policies(case, u64::from(case.steps));
    let mut group = init_group(&case.params, case.config, case.seed).map_err(fail)?;
    for _ in 0..case.steps {
        let before = group.clone();
        group.step_period(&policies).map_err(fail)?;
        check(&before, &group).map_err(TestCaseError::fail)?;
    }
    Ok(())
}

fn fail(e: silly_rules::Error) -> TestCaseError {
    TestCaseError::fail(e.to_string())
}

pub fn vpi_case() -> impl Strategy<Value = (Params, Belief, AgentType)> {
    (
        0.0..0.6f64,
        0.5..0.95f64,
        0.0..0.2f64,
        0.5..2.0f64,
        0.2..30.0f64,
        0.2..30.0f64,
        0u32..20,
        0u32..20,
        agent_type(),
        convention(),
    )
        .prop_map(|(d, gamma, c, r, a, b, k, m, ty, conv)| {
            let params = Params {
                density: d,
                signaling_cost: c,
                discount: gamma,
                reward: r,
                punisher_share: 0.5,
                prior_alpha: a,
                prior_beta: b,
                group_size: 2,
                payoff_convention: conv,
            };
            (params, Belief::with_counts(a, b, k, m), ty)
        })
}

pub fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        rng_seed: RngSeed::Fixed(0x5111_7a1e),
        ..Config::default()
    })
}

/// Runs the named property over `cases` random inputs.
pub fn run_property(name: &str, cases: u32) -> Result<(), String> {
    let mut runner = runner(cases);
    let outcome = match name {
        "belief conservation" => {
            runner.run(&group_case(), |c| run_periods(&c, check_belief_conservation)).map_err(|e| e.to_string())
        }
        "retirement absorption" => {
            runner.run(&group_case(), |c| run_periods(&c, check_absorption)).map_err(|e| e.to_string())
        }
        "pairing validity" => {
            runner.run(&group_case(), |c| run_periods(&c, |_, after| check_pairing(after))).map_err(|e| e.to_string())
        }
        "non-increasing survival" => runner
            .run(&group_case(), |case| {
                let timesteps = case.steps.min(8);
                let periods = case.params.periods_per_timestep() * u64::from(timesteps);
                let policies = policies(&case, periods);
                let trajectories = (0..case.groups)
                    .map(|g| run_group(&case.params, case.config, &policies, case.seed ^ u64::from(g), timesteps))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(fail)?;
                let rows = aggregate(&case.params, &trajectories, timesteps);
                prop_assert_eq!(rows.len(), timesteps as usize + 1);
                check_survival(&rows).map_err(TestCaseError::fail)
            })
            .map_err(|e| e.to_string()),
        "VPI non-negativity" => runner
            .run(&vpi_case(), |(params, belief, ty)| {
                let report = vpi(&belief, &params, ty, &VpiOptions::default()).map_err(fail)?;
                check_vpi(&report).map_err(TestCaseError::fail)
            })
            .map_err(|e| e.to_string()),
        other => return Err(format!("unknown property `{other}`")),
    };
    outcome
}
