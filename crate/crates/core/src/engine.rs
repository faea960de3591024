//! One group's super-game: retirement decisions, random pairing, game
//! draws, signals, roles, payoffs and belief updates.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{realize_interaction, AgentType, BeliefState, GameKind, ModelParams};
use crate::policy::{myopic_decide, Decision, PolicyTable};
use crate::scalar::Scalar;
use crate::seeds::{rng_from_seed, GroupRng};

/// Whose signals an agent observes each period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationScope {
    /// Only the partner's.
    #[default]
    PerPair,
    /// Every other paired agent's.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeAssignment {
    /// Exactly `round(θN)` punishers.
    #[default]
    Exact,
    /// Each agent a punisher independently with probability `θ`.
    Iid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct EngineConfig {
    pub observation: ObservationScope,
    pub assignment: TypeAssignment,
}

#[derive(Debug, Clone)]
pub enum AgentPolicy<S = f64> {
    Optimal(Arc<PolicyTable<S>>),
    Myopic,
}

/// The policy each agent type follows.
#[derive(Debug, Clone)]
pub struct Policies<S = f64> {
    pub punisher: AgentPolicy<S>,
    pub non_punisher: AgentPolicy<S>,
}

impl<S: Scalar> Policies<S> {
    pub fn myopic() -> Self {
        Self { punisher: AgentPolicy::Myopic, non_punisher: AgentPolicy::Myopic }
    }

    pub fn optimal(punisher: PolicyTable<S>, non_punisher: PolicyTable<S>) -> Self {
        Self {
            punisher: AgentPolicy::Optimal(Arc::new(punisher)),
            non_punisher: AgentPolicy::Optimal(Arc::new(non_punisher)),
        }
    }

    pub fn decide(&self, ty: AgentType, belief: &BeliefState<S>, params: &ModelParams<S>) -> Result<Decision> {
        let policy = match ty {
            AgentType::Punisher => &self.punisher,
            AgentType::NonPunisher => &self.non_punisher,
        };
        match policy {
            AgentPolicy::Optimal(table) => table.decide(belief),
            AgentPolicy::Myopic => Ok(myopic_decide(belief, params, ty)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState<S = f64> {
    pub id: u32,
    pub agent_type: AgentType,
    pub belief: BeliefState<S>,
    pub active: bool,
    pub cumulative_payoff: S,
    /// Periods in which the agent was paired.
    pub interactions: u32,
}

impl<S: Scalar> AgentState<S> {
    /// Same agent up to its mutable history.
    pub fn same_identity(&self, other: &Self) -> bool {
        self.id == other.id && self.agent_type == other.agent_type && self.belief.same_prior(&other.belief)
    }
}

#[derive(Debug, Clone)]
pub struct GroupState<S = f64> {
    params: ModelParams<S>,
    config: EngineConfig,
    agents: Vec<AgentState<S>>,
    period: u64,
    rng: GroupRng,
    pairs: Vec<(u32, u32)>,
    idle: Option<u32>,
    kinds: Vec<GameKind>,
    order: Vec<u32>,
}

pub fn init_group<S: Scalar>(params: &ModelParams<S>, config: EngineConfig, seed: u64) -> Result<GroupState<S>> {
    params.validate()?;
    let n = params.group_size;
    if n < 2 {
        return Err(invalid("group_size", format!("{n} is below 2")));
    }
    let mut rng = rng_from_seed(seed);
    let theta = params.punisher_share.to_f64_lossy();
    let types: Vec<AgentType> = match config.assignment {
        TypeAssignment::Exact => {
            let punishers = (theta * f64::from(n)).round() as u32;
            let mut types: Vec<AgentType> =
                (0..n).map(|i| if i < punishers { AgentType::Punisher } else { AgentType::NonPunisher }).collect();
            shuffle(&mut types, &mut rng);
            types
        }
        TypeAssignment::Iid => (0..n)
            .map(|_| if rng.gen::<f64>() < theta { AgentType::Punisher } else { AgentType::NonPunisher })
            .collect(),
    };
    let prior = params.prior();
    let agents = types
        .into_iter()
        .enumerate()
        .map(|(id, agent_type)| AgentState {
            id: id as u32,
            agent_type,
            belief: prior,
            active: true,
            cumulative_payoff: S::zero(),
            interactions: 0,
        })
        .collect();
    Ok(GroupState {
        params: *params,
        config,
        agents,
        period: 0,
        rng,
        pairs: Vec::new(),
        idle: None,
        kinds: Vec::new(),
        order: Vec::new(),
    })
}

/// Fisher-Yates with 64-bit index draws, so the permutation does not depend
/// on the platform's pointer width.
fn shuffle<T>(items: &mut [T], rng: &mut GroupRng) {
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i as u64) as usize;
        items.swap(i, j);
    }
}

impl<S: Scalar> GroupState<S> {
    pub fn params(&self) -> &ModelParams<S> {
        &self.params
    }

    pub fn config(&self) -> EngineConfig {
        self.config
    }

    pub fn agents(&self) -> &[AgentState<S>] {
        &self.agents
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn active_count(&self) -> u32 {
        self.agents.iter().filter(|a| a.active).count() as u32
    }

    pub fn is_collapsed(&self) -> bool {
        self.active_count() < 2
    }

    /// Pairs formed in the last period, as `(first, second)` agent ids.
    pub fn last_pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    pub fn last_idle(&self) -> Option<u32> {
        self.idle
    }

    pub fn last_kinds(&self) -> &[GameKind] {
        &self.kinds
    }

    /// Advances one group interaction.
    pub fn step_period(&mut self, policies: &Policies<S>) -> Result<()> {
        // Decisions are simultaneous and use last period's beliefs.
        let mut retiring = Vec::new();
        for agent in self.agents.iter().filter(|a| a.active) {
            if policies.decide(agent.agent_type, &agent.belief, &self.params)? == Decision::Retire {
                retiring.push(agent.id);
            }
        }
        for id in retiring {
            self.agents[id as usize].active = false;
        }

        self.order.clear();
        self.order.extend(self.agents.iter().filter(|a| a.active).map(|a| a.id));
        let mut order = std::mem::take(&mut self.order);
        shuffle(&mut order, &mut self.rng);
        self.idle = if order.len() % 2 == 1 { order.pop() } else { None };
        self.pairs.clear();
        self.pairs.extend(order.chunks_exact(2).map(|c| (c[0], c[1])));
        self.order = order;

        let density = self.params.density.to_f64_lossy();
        self.kinds.clear();
        for i in 0..self.pairs.len() {
            let (a, b) = self.pairs[i];
            let kind = if self.rng.gen::<f64>() < density { GameKind::Silly } else { GameKind::Important };
            let (victim, bystander) = if self.rng.gen::<bool>() { (a, b) } else { (b, a) };
            self.kinds.push(kind);

            let vt = self.agents[victim as usize].agent_type;
            let bt = self.agents[bystander as usize].agent_type;
            let (pv, pb) = realize_interaction(vt, bt, kind, &self.params);
            let v = &mut self.agents[victim as usize];
            v.cumulative_payoff = v.cumulative_payoff + pv;
            let b = &mut self.agents[bystander as usize];
            b.cumulative_payoff = b.cumulative_payoff + pb;
        }

        match self.config.observation {
            ObservationScope::PerPair => {
                for &(a, b) in &self.pairs {
                    let ta = self.agents[a as usize].agent_type;
                    let tb = self.agents[b as usize].agent_type;
                    observe_into(&mut self.agents[a as usize], tb);
                    observe_into(&mut self.agents[b as usize], ta);
                }
            }
            ObservationScope::Global => {
                let paired = 2 * self.pairs.len() as u32;
                let punishers = self
                    .pairs
                    .iter()
                    .flat_map(|&(a, b)| [a, b])
                    .filter(|&i| self.agents[i as usize].agent_type.is_punisher())
                    .count() as u32;
                for &(a, b) in &self.pairs {
                    for id in [a, b] {
                        let agent = &mut self.agents[id as usize];
                        let own = u32::from(agent.agent_type.is_punisher());
                        let seen_p = punishers - own;
                        let seen_n = paired - 1 - seen_p;
                        agent.belief.k += seen_p;
                        agent.belief.m += seen_n;
                        agent.interactions += 1;
                    }
                }
            }
        }

        self.period += 1;
        Ok(())
    }
}

fn observe_into<S: Scalar>(agent: &mut AgentState<S>, partner: AgentType) {
    agent.belief = agent.belief.observe(partner);
    agent.interactions += 1;
}

pub fn is_collapsed<S: Scalar>(group: &GroupState<S>) -> bool {
    group.is_collapsed()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample<S = f64> {
    /// Timestep number, `0..=max_timesteps`.
    pub index: u32,
    /// Expected important interactions per agent, `periods · (1 - d)`.
    pub timestep: S,
    pub periods: u64,
    pub active_count: u32,
    pub collapsed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S = f64> {
    pub density: S,
    pub periods_per_timestep: u64,
    pub max_timesteps: u32,
    pub samples: Vec<Sample<S>>,
}

impl<S: Scalar> Trajectory<S> {
    pub fn timestep_of(&self, index: u32) -> S {
        S::from_count(u64::from(index) * self.periods_per_timestep) * (S::one() - self.density)
    }

    /// Sample at `index`, extending a trajectory that stopped on collapse
    /// with its (frozen) terminal state.
    pub fn sample_at(&self, index: u32) -> Option<Sample<S>> {
        if index > self.max_timesteps {
            return None;
        }
        if let Some(s) = self.samples.get(index as usize) {
            return Some(*s);
        }
        let last = self.samples.last()?;
        Some(Sample {
            index,
            timestep: self.timestep_of(index),
            periods: u64::from(index) * self.periods_per_timestep,
            ..*last
        })
    }

    /// First timestep at which fewer than two agents remain.
    pub fn collapse_index(&self) -> Option<u32> {
        self.samples.iter().find(|s| s.collapsed).map(|s| s.index)
    }

    pub fn final_active(&self) -> u32 {
        self.samples.last().map_or(0, |s| s.active_count)
    }
}

/// Runs one group until collapse or `max_timesteps`, sampling once per
/// timestep of `round(1 / (1 - d))` periods.
pub fn run_group<S: Scalar>(
    params: &ModelParams<S>,
    config: EngineConfig,
    policies: &Policies<S>,
    seed: u64,
    max_timesteps: u32,
) -> Result<Trajectory<S>> {
    if max_timesteps < 1 {
        return Err(invalid("max_timesteps", "must be at least 1"));
    }
    let mut group = init_group(params, config, seed)?;
    let per = params.periods_per_timestep();
    let mut trajectory = Trajectory {
        density: params.density,
        periods_per_timestep: per,
        max_timesteps,
        samples: Vec::with_capacity(max_timesteps as usize + 1),
    };
    let mut record = |group: &GroupState<S>, index: u32| {
        let s = Sample {
            index,
            timestep: trajectory.timestep_of(index),
            periods: u64::from(index) * per,
            active_count: group.active_count(),
            collapsed: group.is_collapsed(),
        };
        trajectory.samples.push(s);
        s.collapsed
    };
    if record(&group, 0) {
        return Ok(trajectory);
    }
    for index in 1..=max_timesteps {
        for _ in 0..per {
            group.step_period(policies)?;
            // a collapsed group is frozen: nobody can be paired again
            if group.is_collapsed() {
                break;
            }
        }
        if record(&group, index) {
            break;
        }
    }
    Ok(trajectory)
}
