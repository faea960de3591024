//! Parameters, payoffs and Beta-Bernoulli beliefs of the rule-following super-game.
//!
//! Games are reduced to their class: a drawn game is [`GameKind::Silly`] with
//! probability `d` (the density) and [`GameKind::Important`] otherwise. Only
//! the victim of an important game has anything at stake, and the scofflaw
//! complies exactly when the bystander is a punisher.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentType {
    Punisher,
    NonPunisher,
}

impl AgentType {
    pub const ALL: [AgentType; 2] = [AgentType::Punisher, AgentType::NonPunisher];

    pub fn is_punisher(self) -> bool {
        matches!(self, AgentType::Punisher)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AgentType::Punisher => "punisher",
            AgentType::NonPunisher => "non_punisher",
        }
    }
}

impl std::fmt::Display for AgentType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AgentType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "punisher" | "p" | "1" => Ok(AgentType::Punisher),
            "non_punisher" | "nonpunisher" | "n" | "0" => Ok(AgentType::NonPunisher),
            other => Err(format!("unknown agent type `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameKind {
    Silly,
    Important,
}

/// How signaling costs enter the payoffs.
///
/// `Prose`: every punisher pays `c` per interaction in either role, nobody
/// else pays or receives anything for signaling.
///
/// `Equation`: the literal important-game payoffs
/// `U_V = (2t_B - 1)R - (2t_V - 1)c` and `U_B = (2t_B - 1)c`, with silly games
/// paying nothing to anyone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffConvention {
    #[default]
    Prose,
    Equation,
}

impl std::str::FromStr for PayoffConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "prose" => Ok(PayoffConvention::Prose),
            "equation" => Ok(PayoffConvention::Equation),
            other => Err(format!("unknown payoff convention `{other}`")),
        }
    }
}

/// Scalar parameters of one super-game environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams<S = f64> {
    /// Probability that a drawn game is silly, in `[0, 1)`.
    pub density: S,
    /// Paid by a punisher per interaction.
    pub signaling_cost: S,
    /// Base discount per important interaction, in `(0, 1)`.
    pub discount: S,
    /// Victim's gain (or loss) in an important game.
    pub reward: S,
    /// True fraction of punishers in the group.
    pub punisher_share: S,
    pub prior_alpha: S,
    pub prior_beta: S,
    pub group_size: u32,
    #[serde(default)]
    pub payoff_convention: PayoffConvention,
}

impl<S: Scalar> ModelParams<S> {
    pub fn validate(&self) -> Result<()> {
        check_density(self.density)?;
        check_discount(self.discount)?;
        if !(self.signaling_cost >= S::zero()) || !self.signaling_cost.is_finite() {
            return Err(invalid("signaling_cost", format!("{} is not >= 0", self.signaling_cost)));
        }
        if !(self.reward > S::zero()) || !self.reward.is_finite() {
            return Err(invalid("reward", format!("{} is not > 0", self.reward)));
        }
        if !(self.punisher_share >= S::zero() && self.punisher_share <= S::one()) {
            return Err(invalid("punisher_share", format!("{} is not in [0, 1]", self.punisher_share)));
        }
        check_prior(self.prior_alpha, self.prior_beta)?;
        if self.group_size < 2 {
            return Err(invalid("group_size", format!("{} is below 2", self.group_size)));
        }
        Ok(())
    }

    pub fn adjusted_discount(&self) -> S {
        S::one() - self.discount_complement()
    }

    /// `1 - γ_d`, computed without cancellation.
    pub fn discount_complement(&self) -> S {
        (S::one() - self.density) * (S::one() - self.discount)
    }

    pub fn prior(&self) -> BeliefState<S> {
        BeliefState::new(self.prior_alpha, self.prior_beta)
    }

    /// Expected one-period reward conditional on the partner's type,
    /// averaged over the game kind and the role draw:
    /// `(partner is a punisher, partner is not)`.
    pub fn partner_rewards(&self, self_type: AgentType) -> (S, S) {
        let half_stake = S::lit(0.5) * (S::one() - self.density) * self.reward;
        let cost = match self.payoff_convention {
            PayoffConvention::Prose if self_type.is_punisher() => self.signaling_cost,
            _ => S::zero(),
        };
        (half_stake - cost, -half_stake - cost)
    }

    /// Largest magnitude of any per-period expected reward.
    pub fn reward_bound(&self, self_type: AgentType) -> S {
        let (r_p, r_n) = self.partner_rewards(self_type);
        r_p.abs().max(r_n.abs())
    }

    /// Number of group interactions that make up one timestep, `round(1 / (1 - d))`.
    pub fn periods_per_timestep(&self) -> u64 {
        let per = (S::one() / (S::one() - self.density)).round();
        per.to_u64().unwrap_or(u64::MAX).max(1)
    }

    pub fn cast<T: Scalar>(&self) -> ModelParams<T> {
        let c = |v: S| T::lit(v.to_f64_lossy());
        ModelParams {
            density: c(self.density),
            signaling_cost: c(self.signaling_cost),
            discount: c(self.discount),
            reward: c(self.reward),
            punisher_share: c(self.punisher_share),
            prior_alpha: c(self.prior_alpha),
            prior_beta: c(self.prior_beta),
            group_size: self.group_size,
            payoff_convention: self.payoff_convention,
        }
    }
}

fn check_density<S: Scalar>(d: S) -> Result<()> {
    if !(d >= S::zero() && d < S::one()) {
        return Err(invalid("density", format!("{d} is not in [0, 1)")));
    }
    Ok(())
}

fn check_discount<S: Scalar>(gamma: S) -> Result<()> {
    if !(gamma > S::zero() && gamma < S::one()) {
        return Err(invalid("discount", format!("{gamma} is not in (0, 1)")));
    }
    Ok(())
}

fn check_prior<S: Scalar>(alpha: S, beta: S) -> Result<()> {
    if !(alpha > S::zero()) || !alpha.is_finite() {
        return Err(invalid("prior_alpha", format!("{alpha} is not > 0")));
    }
    if !(beta > S::zero()) || !beta.is_finite() {
        return Err(invalid("prior_beta", format!("{beta} is not > 0")));
    }
    Ok(())
}

/// Discount per group interaction that keeps the discounted stream of
/// important-game rewards independent of the density: `1 - (1-d)(1-γ)`.
pub fn adjusted_discount<S: Scalar>(gamma: S, density: S) -> Result<S> {
    check_discount(gamma)?;
    check_density(density)?;
    Ok(S::one() - (S::one() - density) * (S::one() - gamma))
}

/// `eu/(1-γ) - (1-d)·eu/(1-γ_d)`: the gap between the discounted value of an
/// important-only stream and the density-diluted stream under `γ_d`.
///
/// `1 - γ_d` is taken in its product form so the check is not dominated by
/// the cancellation in `1 - γ_d` when `γ_d` is close to one.
pub fn prop1_residual<S: Scalar>(gamma: S, density: S, eu: S) -> Result<S> {
    let gamma_d = adjusted_discount(gamma, density)?;
    debug_assert!(gamma_d >= gamma);
    let complement_d = (S::one() - density) * (S::one() - gamma);
    Ok(eu / (S::one() - gamma) - (S::one() - density) * eu / complement_d)
}

/// An agent's Beta posterior over the punisher share: prior pseudo-counts
/// plus integer observation counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefState<S = f64> {
    pub prior_alpha: S,
    pub prior_beta: S,
    /// Punishers observed.
    pub k: u32,
    /// Non-punishers observed.
    pub m: u32,
}

impl<S: Scalar> BeliefState<S> {
    pub fn new(prior_alpha: S, prior_beta: S) -> Self {
        Self::with_counts(prior_alpha, prior_beta, 0, 0)
    }

    pub fn with_counts(prior_alpha: S, prior_beta: S, k: u32, m: u32) -> Self {
        Self { prior_alpha, prior_beta, k, m }
    }

    pub fn validate(&self) -> Result<()> {
        check_prior(self.prior_alpha, self.prior_beta)
    }

    pub fn alpha(&self) -> S {
        self.prior_alpha + S::from_count(self.k.into())
    }

    pub fn beta(&self) -> S {
        self.prior_beta + S::from_count(self.m.into())
    }

    /// Number of observations, `k + m`.
    pub fn depth(&self) -> u64 {
        u64::from(self.k) + u64::from(self.m)
    }

    /// Predictive probability that the next partner is a punisher.
    pub fn posterior_mean(&self) -> S {
        let a = self.alpha();
        a / (a + self.beta())
    }

    #[must_use]
    pub fn observe(self, partner: AgentType) -> Self {
        match partner {
            AgentType::Punisher => Self { k: self.k + 1, ..self },
            AgentType::NonPunisher => Self { m: self.m + 1, ..self },
        }
    }

    /// The belief with its counts folded into the prior.
    pub fn rebased(&self) -> Self {
        Self::new(self.alpha(), self.beta())
    }

    pub fn same_prior(&self, other: &Self) -> bool {
        self.prior_alpha == other.prior_alpha && self.prior_beta == other.prior_beta
    }
}

/// Expected reward of one period of participation when the partner is a
/// punisher with probability `p`.
pub fn expected_period_reward<S: Scalar>(p: S, params: &ModelParams<S>, self_type: AgentType) -> S {
    let (r_p, r_n) = params.partner_rewards(self_type);
    p * r_p + (S::one() - p) * r_n
}

/// Realized `(victim, bystander)` payoffs of one interaction.
pub fn realize_interaction<S: Scalar>(
    victim: AgentType,
    bystander: AgentType,
    kind: GameKind,
    params: &ModelParams<S>,
) -> (S, S) {
    let r = params.reward;
    let c = params.signaling_cost;
    let sign = |t: AgentType| if t.is_punisher() { S::one() } else { -S::one() };
    match params.payoff_convention {
        PayoffConvention::Prose => {
            let base = match kind {
                GameKind::Silly => S::zero(),
                GameKind::Important => sign(bystander) * r,
            };
            let cost = |t: AgentType| if t.is_punisher() { c } else { S::zero() };
            (base - cost(victim), -cost(bystander))
        }
        PayoffConvention::Equation => match kind {
            GameKind::Silly => (S::zero(), S::zero()),
            GameKind::Important => (sign(bystander) * r - sign(victim) * c, sign(bystander) * c),
        },
    }
}
