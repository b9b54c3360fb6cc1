//! Fixed, distribution-dependent sample budgets.
//!
//! [`plan_budget`] finds the smallest fluctuation slack `c` (on a `c_step`
//! grid) such that
//!
//! ```text
//! r̄ e^{-c/4} + 2 r̄ sqrt(P_p(log p/q > D(p||q) + c/2)) <= βτ/(β+1)
//! ```
//!
//! and budgets `n = ceil(e^{D + c})` samples. [`direct_sample_size`] is the
//! distribution-agnostic alternative `4 ln(2/ε) / (2 τ² (β - 2ε)²)`.

use serde::{Deserialize, Serialize};

use crate::distributions::{kl_divergence, Distribution, LogRatioProfile};
use crate::rng::{stream, StreamLabel};
use crate::rounding::RoundingGrid;
use crate::{Error, Result, Scalar};

/// Largest fluctuation slack the scan will try.
pub const C_MAX: f64 = 200.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct PlannerParams<S> {
    /// Allowed probability that two runs disagree.
    pub beta: S,
    /// Accuracy target on the rounded output.
    pub tau: S,
    /// Worst-case risk over the subjects under test.
    pub r_bar: S,
    /// Scan increment for `c`.
    #[serde(default = "default_c_step")]
    pub c_step: S,
    /// Reliability cap on the per-run sample count.
    #[serde(default)]
    pub gamma_cap: Option<u64>,
    /// Confidence parameter of the distribution-agnostic budget.
    #[serde(default)]
    pub epsilon: Option<S>,
}

fn default_c_step<S: Scalar>() -> S {
    S::lit(0.01)
}

impl<S: Scalar> PlannerParams<S> {
    pub fn new(beta: S, tau: S, r_bar: S) -> Self {
        Self { beta, tau, r_bar, c_step: default_c_step(), gamma_cap: None, epsilon: None }
    }

    pub fn with_epsilon(mut self, epsilon: S) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (zero, one) = (S::zero(), S::one());
        if !(self.beta > zero && self.beta < one) {
            return Err(Error::param(format!("beta must lie in (0, 1), got {}", self.beta)));
        }
        if !(self.tau > zero && self.tau <= one) {
            return Err(Error::param(format!("tau must lie in (0, 1], got {}", self.tau)));
        }
        if !(self.r_bar > zero && self.r_bar <= one) {
            return Err(Error::param(format!("r_bar must lie in (0, 1], got {}", self.r_bar)));
        }
        if !(self.c_step > zero) || !self.c_step.is_finite() {
            return Err(Error::param(format!("c_step must be positive, got {}", self.c_step)));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > zero && eps < one) {
                return Err(Error::param(format!("epsilon must lie in (0, 1), got {eps}")));
            }
        }
        Ok(())
    }

    /// Right-hand side `βτ/(β+1)` of the budget inequality.
    pub fn target(&self) -> S {
        self.beta * self.tau / (self.beta + S::one())
    }

    fn epsilon_checked(&self) -> Result<S> {
        let eps = self.epsilon.ok_or_else(|| Error::param("epsilon is required"))?;
        if !(self.beta - S::lit(2.0) * eps > S::zero()) {
            return Err(Error::param(format!(
                "need beta - 2 epsilon > 0, got beta = {}, epsilon = {eps}",
                self.beta
            )));
        }
        Ok(eps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetPlan<S> {
    /// `D(p || q)`.
    pub kl: S,
    /// Accepted fluctuation slack.
    pub c: S,
    /// Number of `c_step` increments taken.
    pub c_steps: u64,
    /// Samples per run, `ceil(e^{kl + c})`.
    pub n: u64,
    /// Whether `c <= ln(gamma_cap) - kl`; always true without a cap.
    pub feasible: bool,
    /// Left side of the budget inequality at the accepted `c`.
    pub lhs_at_c: S,
    /// Right side `βτ/(β+1)`.
    pub target: S,
}

/// `KL(p||q)` and the log-ratio tail, computed once and reused across
/// parameter sweeps.
#[derive(Debug, Clone)]
pub struct BudgetPlanner<S> {
    kl: S,
    profile: LogRatioProfile<S>,
}

impl<S: Scalar> BudgetPlanner<S> {
    pub fn new(p: &Distribution<S>, q: &Distribution<S>) -> Result<Self> {
        Ok(Self { kl: kl_divergence(p, q)?, profile: LogRatioProfile::new(p, q)? })
    }

    pub fn kl(&self) -> S {
        self.kl
    }

    /// Left side of the budget inequality at slack `c`.
    pub fn lhs(&self, r_bar: S, c: S) -> S {
        let tail = self.profile.tail(self.kl + c / S::lit(2.0));
        r_bar * (-c / S::lit(4.0)).exp() + S::lit(2.0) * r_bar * tail.sqrt()
    }

    pub fn plan(&self, params: &PlannerParams<S>) -> Result<BudgetPlan<S>> {
        params.validate()?;
        let target = params.target();
        let c_max = S::lit(C_MAX);
        let mut k: u64 = 0;
        let (c, lhs) = loop {
            // c = k * c_step rather than repeated addition, so the grid has no drift
            let c = S::lit(k as f64) * params.c_step;
            if c > c_max {
                return Err(Error::PlannerDiverged { c_max: C_MAX });
            }
            let lhs = self.lhs(params.r_bar, c);
            if lhs <= target {
                break (c, lhs);
            }
            k += 1;
        };
        let n_real = (self.kl + c).exp().ceil();
        let n = n_real
            .to_f64()
            .filter(|v| *v <= 2f64.powi(62))
            .map(|v| v as u64)
            .ok_or(Error::PlannerDiverged { c_max: C_MAX })?;
        let feasible = match params.gamma_cap {
            Some(cap) => c <= S::lit(cap as f64).ln() - self.kl,
            None => true,
        };
        Ok(BudgetPlan { kl: self.kl, c, c_steps: k, n, feasible, lhs_at_c: lhs, target })
    }
}

/// Fixed budget for estimating risk under `p` with importance law `q`.
pub fn plan_budget<S: Scalar>(
    p: &Distribution<S>,
    q: &Distribution<S>,
    params: &PlannerParams<S>,
) -> Result<BudgetPlan<S>> {
    params.validate()?;
    BudgetPlanner::new(p, q)?.plan(params)
}

/// Distribution-agnostic budget `ceil(4 ln(2/ε) / (2 τ² (β - 2ε)²))`.
pub fn direct_sample_size<S: Scalar>(params: &PlannerParams<S>) -> Result<u64> {
    params.validate()?;
    let eps = params.epsilon_checked()?;
    let gap = params.beta - S::lit(2.0) * eps;
    let n = S::lit(4.0) * (S::lit(2.0) / eps).ln() / (S::lit(2.0) * params.tau * params.tau * gap * gap);
    n.ceil()
        .to_u64()
        .ok_or_else(|| Error::param("direct sample size overflows"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridVariant {
    /// Width `2τ/(β+1)`, paired with [`plan_budget`].
    Alg3,
    /// Width `2τ/(β+1-2ε)`, paired with [`direct_sample_size`].
    Direct,
}

/// Draws the rounding grid. The offset depends only on `grid_seed`, never on
/// trial seeds, so every operator holding the same seed uses the same grid.
pub fn make_grid<S: Scalar>(
    params: &PlannerParams<S>,
    variant: GridVariant,
    grid_seed: u64,
) -> Result<RoundingGrid<S>> {
    params.validate()?;
    let two_tau = S::lit(2.0) * params.tau;
    let alpha = match variant {
        GridVariant::Alg3 => two_tau / (params.beta + S::one()),
        GridVariant::Direct => {
            let eps = params.epsilon_checked()?;
            two_tau / (params.beta + S::one() - S::lit(2.0) * eps)
        }
    };
    let alpha = alpha.min(S::one());
    let mut rng = stream(grid_seed, 0, StreamLabel::Grid);
    let u = S::lit(rand::Rng::gen::<f64>(&mut rng));
    RoundingGrid::new(alpha, (alpha * u).min(alpha))
}

/// Probability bound `min(1, 2 e^{-2 n τ²})` that a run misses `τ`-accuracy.
pub fn repeatability_failure_prob<S: Scalar>(n: u64, tau: S) -> S {
    let bound = S::lit(2.0) * (-S::lit(2.0) * S::lit(n as f64) * tau * tau).exp();
    bound.min(S::one())
}
