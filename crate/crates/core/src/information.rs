//! Value of perfect information about the punisher share.
//!
//! With full information an agent participates forever iff `V(θ) >= 0`, so
//! its value at a belief is `E[max{V(θ), 0}]` under the Beta posterior. The
//! VPI is that quantity minus the optimal partial-information value.

use serde::Serialize;
use statrs::function::beta::{beta_reg, ln_beta};

use crate::error::{invalid, Error, Result};
use crate::model::{AgentType, BeliefState, ModelParams};
use crate::policy::{solve_value, SolverOptions};
use crate::quadrature::integrate;
use crate::scalar::Scalar;

pub const DEFAULT_QUAD_TOL: f64 = 1e-8;
pub const OBSERVATION_CAP: u64 = 10_000;
const MAX_INTERVALS: usize = 4000;

/// Expected discounted value of participating forever when the true
/// punisher share is `theta`.
pub fn full_info_value<S: Scalar>(theta: S, params: &ModelParams<S>, self_type: AgentType) -> S {
    let (r_p, r_n) = params.partner_rewards(self_type);
    (theta * r_p + (S::one() - theta) * r_n) / params.discount_complement()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClippedValue<S> {
    /// Adaptive quadrature of `∫ max{V(θ),0} Beta(θ; α, β) dθ`.
    pub value: S,
    pub closed_form: S,
    pub error_estimate: S,
}

/// `E[max{V(θ), 0} | α, β]` by quadrature, cross-checked against the
/// closed form in the regularized incomplete beta function.
pub fn expected_clipped_value<S: Scalar>(
    belief: &BeliefState<S>,
    params: &ModelParams<S>,
    self_type: AgentType,
    quad_tol: S,
) -> Result<ClippedValue<S>> {
    if !(quad_tol > S::zero()) {
        return Err(invalid("quad_tol", format!("{quad_tol} is not > 0")));
    }
    params.validate()?;
    belief.validate()?;
    let (r_p, r_n) = params.partner_rewards(self_type);
    let complement = params.discount_complement();
    let alpha = belief.alpha().to_f64_lossy();
    let beta = belief.beta().to_f64_lossy();

    // V(θ) = (r_N + θ (r_P - r_N)) / (1 - γ_d), increasing in θ.
    let slope = r_p - r_n;
    let root = (-r_n / slope).max(S::zero());
    if root >= S::one() {
        let zero = ClippedValue { value: S::zero(), closed_form: S::zero(), error_estimate: S::zero() };
        return Ok(zero);
    }

    let root64 = root.to_f64_lossy();
    let mean = alpha / (alpha + beta);
    let tail = |a: f64, b: f64| if root64 <= 0.0 { 1.0 } else { 1.0 - beta_reg(a, b, root64) };
    let closed_form = (r_n * S::lit(tail(alpha, beta)) + slope * S::lit(mean * tail(alpha + 1.0, beta))) / complement;

    let log_norm = ln_beta(alpha, beta);
    let value_at = |t: f64| (r_n + S::lit(t) * slope) / complement;
    let integrand = |theta: S| {
        let t = theta.to_f64_lossy();
        let log_pdf = (alpha - 1.0) * t.ln() + (beta - 1.0) * (-t).ln_1p() - log_norm;
        value_at(t) * S::lit(log_pdf.exp())
    };

    let sd = (alpha * beta / ((alpha + beta).powi(2) * (alpha + beta + 1.0))).sqrt();
    let mut points = vec![root64, 1.0];
    for z in [0.0, 1.0, 2.0, 4.0, 8.0, 16.0] {
        for x in [mean - z * sd, mean + z * sd] {
            if x > root64 && x < 1.0 {
                points.push(x);
            }
        }
    }
    points.sort_by(|a, b| a.total_cmp(b));
    points.dedup();
    if points.len() == 2 {
        points.insert(1, 0.5 * (root64 + 1.0));
    }

    // A shape parameter below one puts an integrable singularity at that
    // end; substituting θ = u^{1/α} (or 1 - θ = u^{1/β}) there makes the
    // integrand bounded.
    let lower_singular = alpha < 1.0 && root64 <= 0.0;
    let upper_singular = beta < 1.0;
    let n = points.len();
    let mut value = S::zero();
    let mut error = S::zero();
    let parts = S::lit(3.0);
    if lower_singular {
        let end = points[1].powf(alpha);
        let f = |u: S| {
            let t = u.to_f64_lossy().powf(1.0 / alpha);
            let log_w = (beta - 1.0) * (-t).ln_1p() - log_norm - alpha.ln();
            value_at(t) * S::lit(log_w.exp())
        };
        let q = integrate(f, &[S::zero(), S::lit(end)], quad_tol / parts, MAX_INTERVALS)?;
        value = value + q.value;
        error = error + q.error;
    }
    if upper_singular {
        let end = (1.0 - points[n - 2]).powf(beta);
        let f = |u: S| {
            let t = 1.0 - u.to_f64_lossy().powf(1.0 / beta);
            let log_w = (alpha - 1.0) * t.ln() - log_norm - beta.ln();
            value_at(t) * S::lit(log_w.exp())
        };
        let q = integrate(f, &[S::zero(), S::lit(end)], quad_tol / parts, MAX_INTERVALS)?;
        value = value + q.value;
        error = error + q.error;
    }
    let first = usize::from(lower_singular);
    let last = n - usize::from(upper_singular);
    if last - first >= 2 {
        let middle: Vec<S> = points[first..last].iter().map(|&x| S::lit(x)).collect();
        let q = integrate(integrand, &middle, quad_tol / parts, MAX_INTERVALS)?;
        value = value + q.value;
        error = error + q.error;
    }
    let allowed = S::lit(10.0) * quad_tol;
    if (value - closed_form).abs() > allowed {
        return Err(Error::QuadratureMismatch {
            quadrature: value.to_f64_lossy(),
            closed_form: closed_form.to_f64_lossy(),
            allowed: allowed.to_f64_lossy(),
        });
    }
    Ok(ClippedValue { value, closed_form, error_estimate: error })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VpiOptions<S = f64> {
    pub quad_tol: S,
    pub solver: SolverOptions<S>,
}

impl<S: Scalar> Default for VpiOptions<S> {
    fn default() -> Self {
        Self { quad_tol: S::lit(DEFAULT_QUAD_TOL), solver: SolverOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VpiReport<S = f64> {
    pub belief: BeliefState<S>,
    pub density: S,
    pub full_info_component: S,
    pub partial_info_value: S,
    pub vpi: S,
    pub quadrature_error_estimate: S,
    pub truncation_bound: S,
    pub cap_hit: bool,
}

impl<S: Scalar> VpiReport<S> {
    /// Slack below zero the VPI may show from numerical error alone.
    pub fn tolerance(&self) -> S {
        self.quadrature_error_estimate + self.truncation_bound
    }
}

pub fn vpi<S: Scalar>(
    belief: &BeliefState<S>,
    params: &ModelParams<S>,
    self_type: AgentType,
    opts: &VpiOptions<S>,
) -> Result<VpiReport<S>> {
    let clipped = expected_clipped_value(belief, params, self_type, opts.quad_tol)?;
    let partial = solve_value(params, self_type, belief, &opts.solver)?;
    Ok(VpiReport {
        belief: *belief,
        density: params.density,
        full_info_component: clipped.value,
        partial_info_value: partial.value,
        vpi: clipped.value - partial.value,
        quadrature_error_estimate: clipped.error_estimate,
        truncation_bound: partial.horizon.truncation_bound,
        cap_hit: partial.horizon.cap_hit,
    })
}

/// Length of the forced observation phase, `ceil(1 / sqrt(1 - d))`.
pub fn observation_rounds<S: Scalar>(density: S) -> u64 {
    let x = (S::one() / (S::one() - density).sqrt()).to_f64_lossy();
    // absorb the rounding of 1 - d so exact squares stay exact
    (x * (1.0 - 1e-12)).ceil().max(1.0) as u64
}

/// Exact value of the policy that participates for `τ(d)` rounds, then
/// retires for good iff the posterior `E[V(θ)]` is negative and otherwise
/// participates forever.
pub fn observe_then_commit_value<S: Scalar>(
    belief: &BeliefState<S>,
    params: &ModelParams<S>,
    self_type: AgentType,
) -> Result<S> {
    params.validate()?;
    belief.validate()?;
    let tau = observation_rounds(params.density);
    if tau > OBSERVATION_CAP {
        return Err(Error::EnumerationCap { tau, cap: OBSERVATION_CAP });
    }
    let (r_p, r_n) = params.partner_rewards(self_type);
    let reward = |p: S| p * r_p + (S::one() - p) * r_n;
    let discount = params.adjusted_discount();
    let complement = params.discount_complement();
    let decay = discount.powi(tau as i32);

    let alpha = belief.alpha();
    let beta = belief.beta();
    // The predictive mean is a martingale, so every observation round has
    // the same expected reward as the first.
    let observing = reward(alpha / (alpha + beta)) * (S::one() - decay) / complement;

    // Pólya-urn (beta-binomial) law of the punisher count after τ rounds.
    let n = S::from_count(tau);
    let mut log_pmf: S = (0..tau)
        .map(|i| {
            let i = S::from_count(i);
            ((beta + i) / (alpha + beta + i)).ln()
        })
        .sum();
    let mut committed = S::zero();
    for k in 0..=tau {
        let kk = S::from_count(k);
        let p_post = (alpha + kk) / (alpha + beta + n);
        committed = committed + log_pmf.exp() * (reward(p_post) / complement).max(S::zero());
        if k < tau {
            log_pmf = log_pmf + ((n - kk) / (kk + S::one())).ln() + ((alpha + kk) / (beta + n - kk - S::one())).ln();
        }
    }
    Ok(observing + decay * committed)
}
