//! Optimal participate/retire policy over the Beta-Bernoulli belief lattice.
//!
//! The agent's value at lattice point `(k, m)` satisfies
//!
//! ```text
//! V(k,m) = max{ 0, p·[r_P + γ_d·V(k+1,m)] + (1-p)·[r_N + γ_d·V(k,m+1)] }
//! ```
//!
//! with `p` the posterior mean. The recursion is solved by backward induction
//! over the diagonals `n = k + m`, starting from a truncation depth `T` whose
//! error bound `γ_d^T · B / (1 - γ_d)` is below the requested tolerance.
//!
//! Tables keep the retirement threshold of every diagonal (the region is
//! checked to be a prefix in `k`) and the dense values of the shallow part of
//! the lattice, so memory stays linear in `T` while the solve is quadratic.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::model::{expected_period_reward, AgentType, BeliefState, ModelParams};
use crate::scalar::Scalar;

/// Largest horizon `brute_force_value` enumerates.
pub const BRUTE_FORCE_LIMIT: u32 = 8;

const CACHE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Continue,
    Retire,
}

/// Value assigned to the cells of the deepest diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// `max{0, r(p) / (1 - γ_d)}`: commit to participating forever at the
    /// current belief or retire.
    #[default]
    Perpetuity,
    /// The game ends at the boundary (finite-horizon problem).
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions<S = f64> {
    pub tolerance: S,
    pub horizon_cap: u32,
    /// Solve at least this deep, e.g. to cover every belief a simulation can reach.
    pub min_horizon: u32,
    /// Bypass the error-bound rule and truncate exactly here.
    pub fixed_horizon: Option<u32>,
    /// Fail instead of reporting when the cap leaves the bound above tolerance.
    pub strict: bool,
    pub boundary: Boundary,
    /// Diagonals `n <= value_depth` keep their dense values.
    pub value_depth: u32,
}

impl<S: Scalar> Default for SolverOptions<S> {
    fn default() -> Self {
        Self {
            tolerance: S::lit(1e-6),
            horizon_cap: 200_000,
            min_horizon: 0,
            fixed_horizon: None,
            strict: false,
            boundary: Boundary::Perpetuity,
            value_depth: 256,
        }
    }
}

impl<S: Scalar> SolverOptions<S> {
    /// Finite game of exactly `horizon` periods with no terminal value.
    pub fn finite(horizon: u32) -> Self {
        Self { fixed_horizon: Some(horizon), boundary: Boundary::Zero, value_depth: horizon, ..Self::default() }
    }
}

/// Truncation depth actually used by a solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonChoice<S> {
    pub horizon: u32,
    pub truncation_bound: S,
    pub cap_hit: bool,
}

/// `γ_d^T · B / (1 - γ_d)` with `B` the largest per-period reward magnitude.
pub fn truncation_bound<S: Scalar>(params: &ModelParams<S>, self_type: AgentType, horizon: u32) -> S {
    let complement = params.discount_complement();
    let log_discount = (-complement).ln_1p();
    let scale = params.reward_bound(self_type) / complement;
    (log_discount * S::from_count(horizon.into())).exp() * scale
}

pub fn choose_horizon<S: Scalar>(
    params: &ModelParams<S>,
    self_type: AgentType,
    opts: &SolverOptions<S>,
) -> Result<HorizonChoice<S>> {
    if !(opts.tolerance > S::zero()) {
        return Err(invalid("tolerance", format!("{} is not > 0", opts.tolerance)));
    }
    if let Some(h) = opts.fixed_horizon {
        return Ok(HorizonChoice {
            horizon: h,
            truncation_bound: truncation_bound(params, self_type, h),
            cap_hit: false,
        });
    }
    let complement = params.discount_complement();
    let scale = params.reward_bound(self_type) / complement;
    let needed = if scale <= opts.tolerance {
        0.0
    } else {
        ((opts.tolerance / scale).ln() / (-complement).ln_1p()).ceil().to_f64_lossy()
    };
    let needed = needed.max(f64::from(opts.min_horizon));
    if needed > f64::from(opts.horizon_cap) {
        let bound = truncation_bound(params, self_type, opts.horizon_cap);
        if opts.strict && bound > opts.tolerance {
            return Err(Error::HorizonCapExceeded {
                cap: opts.horizon_cap,
                bound: bound.to_f64_lossy(),
                tolerance: opts.tolerance.to_f64_lossy(),
            });
        }
        return Ok(HorizonChoice {
            horizon: opts.horizon_cap,
            truncation_bound: bound,
            cap_hit: bound > opts.tolerance,
        });
    }
    let horizon = needed as u32;
    Ok(HorizonChoice { horizon, truncation_bound: truncation_bound(params, self_type, horizon), cap_hit: false })
}

/// Runs the backward induction rooted at `root` (whose counts are folded
/// into the prior) and hands every diagonal, deepest first, to `visit` as
/// `(n, values, participation_branch)`.
fn backward_induction<S, F>(
    params: &ModelParams<S>,
    self_type: AgentType,
    root: &BeliefState<S>,
    horizon: u32,
    boundary: Boundary,
    mut visit: F,
) -> Result<()>
where
    S: Scalar,
    F: FnMut(u32, &[S], &[S]) -> Result<()>,
{
    let (r_p, r_n) = params.partner_rewards(self_type);
    let discount = params.adjusted_discount();
    let complement = params.discount_complement();
    let a0 = root.alpha();
    let ab0 = a0 + root.beta();

    let width = horizon as usize + 1;
    let mut next = vec![S::zero(); width];
    let mut value = vec![S::zero(); width];
    let mut branch = vec![S::zero(); width];

    let inv = S::one() / (ab0 + S::from_count(horizon.into()));
    for k in 0..width {
        let p = (a0 + S::from_count(k as u64)) * inv;
        branch[k] = match boundary {
            Boundary::Perpetuity => (p * r_p + (S::one() - p) * r_n) / complement,
            Boundary::Zero => S::zero(),
        };
        value[k] = branch[k].max(S::zero());
    }
    visit(horizon, &value, &branch)?;

    for n in (0..horizon as usize).rev() {
        std::mem::swap(&mut next, &mut value);
        let inv = S::one() / (ab0 + S::from_count(n as u64));
        for k in 0..=n {
            let p = (a0 + S::from_count(k as u64)) * inv;
            let b = p * (r_p + discount * next[k + 1]) + (S::one() - p) * (r_n + discount * next[k]);
            branch[k] = b;
            value[k] = b.max(S::zero());
        }
        visit(n as u32, &value[..=n], &branch[..=n])?;
    }
    Ok(())
}

/// Optimal value at a belief, without keeping a table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootValue<S> {
    pub value: S,
    pub horizon: HorizonChoice<S>,
}

pub fn solve_value<S: Scalar>(
    params: &ModelParams<S>,
    self_type: AgentType,
    belief: &BeliefState<S>,
    opts: &SolverOptions<S>,
) -> Result<RootValue<S>> {
    params.validate()?;
    belief.validate()?;
    let horizon = choose_horizon(params, self_type, opts)?;
    let mut root = S::zero();
    backward_induction(params, self_type, &belief.rebased(), horizon.horizon, opts.boundary, |n, values, _| {
        if n == 0 {
            root = values[0];
        }
        Ok(())
    })?;
    Ok(RootValue { value: root, horizon })
}

/// Solved stopping policy for one `(params, agent type)` pair, rooted at the
/// params' prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Serialize", deserialize = "S: Deserialize<'de>"))]
pub struct PolicyTable<S = f64> {
    fingerprint: String,
    params: ModelParams<S>,
    self_type: AgentType,
    options: SolverOptions<S>,
    horizon: u32,
    truncation_bound: S,
    cap_hit: bool,
    /// Per diagonal: retire iff `k < thresholds[n]`.
    thresholds: Vec<u32>,
    value_depth: u32,
    /// Triangular storage, `n(n+1)/2 + k`.
    values: Vec<S>,
    branches: Vec<S>,
}

pub fn solve<S: Scalar>(
    params: &ModelParams<S>,
    self_type: AgentType,
    opts: &SolverOptions<S>,
) -> Result<PolicyTable<S>> {
    params.validate()?;
    let choice = choose_horizon(params, self_type, opts)?;
    let horizon = choice.horizon;
    let value_depth = opts.value_depth.min(horizon);
    let stored = triangle(value_depth + 1);
    let mut values = vec![S::zero(); stored];
    let mut branches = vec![S::zero(); stored];
    let mut thresholds = vec![0u32; horizon as usize + 1];

    backward_induction(params, self_type, &params.prior(), horizon, opts.boundary, |n, row, branch| {
        let first_continue = branch.iter().position(|b| *b >= S::zero()).unwrap_or(row.len());
        if branch[first_continue..].iter().any(|b| *b < S::zero()) {
            return Err(Error::NonMonotoneBoundary { depth: n });
        }
        thresholds[n as usize] = first_continue as u32;
        if n <= value_depth {
            let at = triangle(n);
            values[at..at + row.len()].copy_from_slice(row);
            branches[at..at + row.len()].copy_from_slice(branch);
        }
        Ok(())
    })?;

    Ok(PolicyTable {
        fingerprint: fingerprint(params, self_type, opts),
        params: *params,
        self_type,
        options: *opts,
        horizon,
        truncation_bound: choice.truncation_bound,
        cap_hit: choice.cap_hit,
        thresholds,
        value_depth,
        values,
        branches,
    })
}

fn triangle(n: u32) -> usize {
    let n = n as usize;
    n * (n + 1) / 2
}

impl<S: Scalar> PolicyTable<S> {
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn params(&self) -> &ModelParams<S> {
        &self.params
    }

    pub fn self_type(&self) -> AgentType {
        self.self_type
    }

    pub fn options(&self) -> &SolverOptions<S> {
        &self.options
    }

    /// Deepest diagonal `T`; beliefs with `k + m <= T` can be queried.
    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn truncation_bound(&self) -> S {
        self.truncation_bound
    }

    /// Whether the horizon cap stopped the solve short of the tolerance.
    pub fn cap_hit(&self) -> bool {
        self.cap_hit
    }

    pub fn value_depth(&self) -> u32 {
        self.value_depth
    }

    /// Smallest `k` on diagonal `n` at which the agent participates
    /// (`n + 1` when the whole diagonal retires).
    pub fn threshold(&self, n: u32) -> Option<u32> {
        self.thresholds.get(n as usize).copied()
    }

    pub fn thresholds(&self) -> &[u32] {
        &self.thresholds
    }

    fn stored_index(&self, k: u32, m: u32) -> Option<usize> {
        let n = k.checked_add(m)?;
        (n <= self.value_depth).then(|| triangle(n) + k as usize)
    }

    /// `V(k, m)`, available for `k + m <= value_depth`.
    pub fn value(&self, k: u32, m: u32) -> Option<S> {
        self.stored_index(k, m).map(|i| self.values[i])
    }

    /// Value of participating this period at `(k, m)`, before clipping at 0.
    pub fn branch_value(&self, k: u32, m: u32) -> Option<S> {
        self.stored_index(k, m).map(|i| self.branches[i])
    }

    pub fn root_value(&self) -> S {
        self.values[0]
    }

    pub fn decide(&self, belief: &BeliefState<S>) -> Result<Decision> {
        if !belief.same_prior(&self.params.prior()) {
            return Err(Error::PriorMismatch {
                alpha: belief.prior_alpha.to_f64_lossy(),
                beta: belief.prior_beta.to_f64_lossy(),
            });
        }
        let depth = belief.depth();
        if depth > u64::from(self.horizon) {
            return Err(Error::OutOfHorizon { depth, horizon: self.horizon });
        }
        Ok(if belief.k < self.thresholds[depth as usize] { Decision::Retire } else { Decision::Continue })
    }

    pub fn cache_path(dir: &Path, fingerprint: &str) -> PathBuf {
        dir.join(format!("policy-{fingerprint}.json"))
    }
}

impl<S: Scalar + Serialize + for<'de> Deserialize<'de>> PolicyTable<S> {
    /// Writes the table to `dir` under its fingerprint.
    pub fn save_cache(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir).map_err(|e| Error::Cache(e.to_string()))?;
        let path = Self::cache_path(dir, &self.fingerprint);
        let doc = CacheDoc { format_version: CACHE_FORMAT_VERSION, table: self.clone() };
        let bytes = serde_json::to_vec(&doc).map_err(|e| Error::Cache(e.to_string()))?;
        fs::write(&path, bytes).map_err(|e| Error::Cache(e.to_string()))?;
        Ok(path)
    }

    /// Loads a cached table for these inputs, or `None` if absent.
    /// A present entry with the wrong version or fingerprint is an error.
    pub fn load_cache(
        dir: &Path,
        params: &ModelParams<S>,
        self_type: AgentType,
        opts: &SolverOptions<S>,
    ) -> Result<Option<Self>> {
        let expected = fingerprint(params, self_type, opts);
        let path = Self::cache_path(dir, &expected);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::Cache(e.to_string())),
        };
        let doc: CacheDoc<S> = serde_json::from_slice(&bytes).map_err(|e| Error::Cache(e.to_string()))?;
        if doc.format_version != CACHE_FORMAT_VERSION {
            return Err(Error::Cache(format!(
                "{}: format version {} (expected {CACHE_FORMAT_VERSION})",
                path.display(),
                doc.format_version
            )));
        }
        if doc.table.fingerprint != expected {
            return Err(Error::Cache(format!("{}: fingerprint mismatch", path.display())));
        }
        Ok(Some(doc.table))
    }

    pub fn solve_cached(
        dir: &Path,
        params: &ModelParams<S>,
        self_type: AgentType,
        opts: &SolverOptions<S>,
    ) -> Result<Self> {
        if let Some(t) = Self::load_cache(dir, params, self_type, opts)? {
            return Ok(t);
        }
        let table = solve(params, self_type, opts)?;
        table.save_cache(dir)?;
        Ok(table)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "S: Serialize", deserialize = "S: Deserialize<'de>"))]
struct CacheDoc<S> {
    format_version: u32,
    table: PolicyTable<S>,
}

/// Stable identifier of the inputs that determine a table.
pub fn fingerprint<S: Scalar>(params: &ModelParams<S>, self_type: AgentType, opts: &SolverOptions<S>) -> String {
    let key = serde_json::json!({
        "format_version": CACHE_FORMAT_VERSION,
        "scalar": std::any::type_name::<S>(),
        "params": params.cast::<f64>(),
        "self_type": self_type,
        "tolerance": opts.tolerance.to_f64_lossy(),
        "horizon_cap": opts.horizon_cap,
        "min_horizon": opts.min_horizon,
        "fixed_horizon": opts.fixed_horizon,
        "strict": opts.strict,
        "boundary": opts.boundary,
        "value_depth": opts.value_depth,
    });
    let digest = Sha256::digest(key.to_string().as_bytes());
    hex::encode(&digest[..16])
}

/// Retire iff the expected reward of the coming period is negative.
pub fn myopic_decide<S: Scalar>(belief: &BeliefState<S>, params: &ModelParams<S>, self_type: AgentType) -> Decision {
    if expected_period_reward(belief.posterior_mean(), params, self_type) < S::zero() {
        Decision::Retire
    } else {
        Decision::Continue
    }
}

/// Exact expectimax value of the `horizon`-period game with outside option
/// 0, by enumerating every partner-type sequence. Exponential; test oracle.
pub fn brute_force_value<S: Scalar>(
    params: &ModelParams<S>,
    self_type: AgentType,
    belief: &BeliefState<S>,
    horizon: u32,
) -> Result<S> {
    Ok(brute_force_branch(params, self_type, belief, horizon)?.max(S::zero()))
}

/// Participation branch of the `horizon`-period game (may be negative).
pub fn brute_force_branch<S: Scalar>(
    params: &ModelParams<S>,
    self_type: AgentType,
    belief: &BeliefState<S>,
    horizon: u32,
) -> Result<S> {
    if horizon > BRUTE_FORCE_LIMIT {
        return Err(Error::HorizonTooLarge { horizon, limit: BRUTE_FORCE_LIMIT });
    }
    params.validate()?;
    belief.validate()?;
    let (r_p, r_n) = params.partner_rewards(self_type);
    let discount = params.adjusted_discount();

    fn node<S: Scalar>(b: BeliefState<S>, left: u32, r: (S, S), discount: S) -> S {
        if left == 0 {
            return S::zero();
        }
        let p = b.posterior_mean();
        let up = node(b.observe(AgentType::Punisher), left - 1, r, discount).max(S::zero());
        let down = node(b.observe(AgentType::NonPunisher), left - 1, r, discount).max(S::zero());
        p * (r.0 + discount * up) + (S::one() - p) * (r.1 + discount * down)
    }

    Ok(node(*belief, horizon, (r_p, r_n), discount))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PayoffConvention;

    fn params(alpha: f64, beta: f64, d: f64, c: f64) -> ModelParams {
        ModelParams {
            density: d,
            signaling_cost: c,
            discount: 0.98,
            reward: 1.0,
            punisher_share: 0.6,
            prior_alpha: alpha,
            prior_beta: beta,
            group_size: 100,
            payoff_convention: PayoffConvention::Prose,
        }
    }

    #[test]
    fn confident_favourable_prior_continues() {
        for d in [0.0, 0.5, 0.9] {
            let p = params(30.0, 20.0, d, 0.0);
            let t = solve(&p, AgentType::NonPunisher, &SolverOptions::default()).unwrap();
            assert_eq!(t.decide(&p.prior()).unwrap(), Decision::Continue);
            assert!(t.root_value() > 0.0);
        }
    }

    #[test]
    fn zero_horizon_symmetric_prior_is_worthless() {
        let p = params(1.0, 1.0, 0.0, 0.0);
        let opts = SolverOptions { fixed_horizon: Some(0), ..SolverOptions::default() };
        let t = solve(&p, AgentType::NonPunisher, &opts).unwrap();
        assert_eq!(t.horizon(), 0);
        assert_eq!(t.root_value(), 0.0);
    }

    #[test]
    fn extreme_beliefs() {
        let p = params(1.0, 1.0, 0.5, 0.01);
        let opts = SolverOptions { min_horizon: 60, ..SolverOptions::default() };
        let t = solve(&p, AgentType::Punisher, &opts).unwrap();
        assert_eq!(t.decide(&BeliefState::with_counts(1.0, 1.0, 50, 0)).unwrap(), Decision::Continue);
        let p = params(1.0, 1.0, 0.5, 0.02);
        let t = solve(&p, AgentType::Punisher, &opts).unwrap();
        assert_eq!(t.decide(&BeliefState::with_counts(1.0, 1.0, 0, 50)).unwrap(), Decision::Retire);
    }

    #[test]
    fn out_of_horizon_and_prior_mismatch_fail() {
        let p = params(1.0, 1.0, 0.0, 0.0);
        let t = solve(&p, AgentType::NonPunisher, &SolverOptions::finite(3)).unwrap();
        let deep = BeliefState::with_counts(1.0, 1.0, 2, 2);
        assert!(matches!(t.decide(&deep), Err(Error::OutOfHorizon { depth: 4, horizon: 3 })));
        let other = BeliefState::new(2.0, 1.0);
        assert!(matches!(t.decide(&other), Err(Error::PriorMismatch { .. })));
    }

    #[test]
    fn strict_cap_fails_and_lenient_cap_reports() {
        let p = params(1.0, 1.0, 0.9, 0.0);
        let strict = SolverOptions { horizon_cap: 100, strict: true, ..SolverOptions::default() };
        assert!(matches!(solve(&p, AgentType::NonPunisher, &strict), Err(Error::HorizonCapExceeded { cap: 100, .. })));
        let lenient = SolverOptions { strict: false, ..strict };
        let t = solve(&p, AgentType::NonPunisher, &lenient).unwrap();
        assert!(t.cap_hit());
        assert_eq!(t.horizon(), 100);
    }

    #[test]
    fn horizon_meets_tolerance() {
        let p = params(1.0, 1.0, 0.5, 0.02);
        let opts = SolverOptions::default();
        let h = choose_horizon(&p, AgentType::Punisher, &opts).unwrap();
        assert!(h.truncation_bound <= 1e-6);
        assert!(truncation_bound(&p, AgentType::Punisher, h.horizon - 1) > 1e-6);
        assert!(!h.cap_hit);
    }

    #[test]
    fn brute_force_examples() {
        let p = params(1.0, 1.0, 0.0, 0.0);
        let b = p.prior();
        assert_eq!(brute_force_value(&p, AgentType::NonPunisher, &b, 0).unwrap(), 0.0);
        assert_eq!(brute_force_value(&p, AgentType::NonPunisher, &b, 1).unwrap(), 0.0);
        assert!(matches!(brute_force_value(&p, AgentType::NonPunisher, &b, 9), Err(Error::HorizonTooLarge { .. })));
    }

    #[test]
    fn brute_force_matches_finite_dp_on_h2_preset() {
        let p = params(1.2, 0.8, 0.5, 0.02);
        let h = 4;
        for ty in AgentType::ALL {
            let t = solve(&p, ty, &SolverOptions::finite(h)).unwrap();
            for n in 0..h {
                for k in 0..=n {
                    let b = BeliefState::with_counts(1.2, 0.8, k, n - k);
                    let oracle = brute_force_branch(&p, ty, &b.rebased(), h - n).unwrap();
                    let dp = t.branch_value(k, n - k).unwrap();
                    assert!((oracle - dp).abs() <= 1e-9, "{ty} ({k},{}) {oracle} vs {dp}", n - k);
                    let oracle_decision = if oracle < 0.0 { Decision::Retire } else { Decision::Continue };
                    assert_eq!(t.decide(&b).unwrap(), oracle_decision);
                }
            }
        }
    }

    #[test]
    fn myopic_examples() {
        let p = params(30.0, 20.0, 0.0, 0.0);
        assert_eq!(myopic_decide(&p.prior(), &p, AgentType::NonPunisher), Decision::Continue);
        let p = params(1.0, 1.0, 0.0, 0.01);
        assert_eq!(myopic_decide(&p.prior(), &p, AgentType::Punisher), Decision::Retire);
        let p = params(0.55, 0.45, 0.9, 0.004);
        assert_eq!(myopic_decide(&p.prior(), &p, AgentType::Punisher), Decision::Continue);
    }

    #[test]
    fn root_value_matches_table() {
        let p = params(1.2, 0.8, 0.5, 0.02);
        let opts = SolverOptions::default();
        let t = solve(&p, AgentType::Punisher, &opts).unwrap();
        let r = solve_value(&p, AgentType::Punisher, &p.prior(), &opts).unwrap();
        assert_eq!(r.value, t.root_value());
        // rooting at a lattice point reproduces the stored cell
        let b = BeliefState::with_counts(1.2, 0.8, 3, 2);
        let shifted = SolverOptions { fixed_horizon: Some(t.horizon() - 5), ..opts };
        let r = solve_value(&p, AgentType::Punisher, &b, &shifted).unwrap();
        assert!((r.value - t.value(3, 2).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn f32_solve_tracks_f64() {
        let p = params(1.2, 0.8, 0.5, 0.02);
        let t64 = solve(&p, AgentType::NonPunisher, &SolverOptions::default()).unwrap();
        let opts32 = SolverOptions { tolerance: 1e-4f32, ..SolverOptions::default() };
        let t32 = solve(&p.cast::<f32>(), AgentType::NonPunisher, &opts32).unwrap();
        assert!((f64::from(t32.root_value()) - t64.root_value()).abs() < 1e-2);
    }

    #[test]
    fn cache_round_trip() {
        let dir = std::env::temp_dir().join(format!("silly-rules-cache-{}", std::process::id()));
        let p = params(1.2, 0.8, 0.5, 0.02);
        let opts = SolverOptions::default();
        let t = PolicyTable::solve_cached(&dir, &p, AgentType::Punisher, &opts).unwrap();
        let again = PolicyTable::load_cache(&dir, &p, AgentType::Punisher, &opts).unwrap().unwrap();
        assert_eq!(t, again);
        let other = params(1.2, 0.8, 0.5, 0.03);
        assert!(PolicyTable::load_cache(&dir, &other, AgentType::Punisher, &opts).unwrap().is_none());
        let _ = fs::remove_dir_all(&dir);
    }
}
