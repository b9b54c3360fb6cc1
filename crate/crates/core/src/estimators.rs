//! Sampling loops: nominal Monte Carlo and importance sampling, driven by a
//! pluggable termination rule.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::subjects::TestingSubject;
use crate::{Error, Result, Scalar};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959964;

/// Running state of a risk estimator.
///
/// `value` is always `weighted_sum / sample_count` exactly as accumulated; the
/// variance of the weighted indicator sequence is tracked with Welford's
/// recurrence so memory does not grow with the sample count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate<S> {
    pub value: S,
    pub sample_count: u64,
    pub failure_count: u64,
    pub weighted_sum: S,
    /// Welford running mean of the weighted indicators.
    pub mean: S,
    /// Welford sum of squared deviations.
    pub m2: S,
    /// `false` when the rule gave up at its sample cap without being satisfied.
    pub terminated: bool,
}

impl<S: Scalar> Default for RiskEstimate<S> {
    fn default() -> Self {
        Self {
            value: S::zero(),
            sample_count: 0,
            failure_count: 0,
            weighted_sum: S::zero(),
            mean: S::zero(),
            m2: S::zero(),
            terminated: false,
        }
    }
}

impl<S: Scalar> RiskEstimate<S> {
    /// Folds in one weighted indicator (`weight` is ignored when `failed` is false).
    #[inline]
    pub fn push(&mut self, failed: bool, weight: S) {
        let y = if failed { weight } else { S::zero() };
        self.sample_count += 1;
        if failed {
            self.failure_count += 1;
        }
        self.weighted_sum = self.weighted_sum + y;
        let n = S::lit(self.sample_count as f64);
        let delta = y - self.mean;
        self.mean = self.mean + delta / n;
        self.m2 = self.m2 + delta * (y - self.mean);
        self.value = self.weighted_sum / n;
    }

    /// Unbiased sample variance of the weighted indicators.
    pub fn sample_variance(&self) -> S {
        if self.sample_count < 2 {
            return S::zero();
        }
        (self.m2 / S::lit((self.sample_count - 1) as f64)).max(S::zero())
    }

    pub fn sample_std(&self) -> S {
        self.sample_variance().sqrt()
    }

    /// Mean of the squared weighted indicators.
    pub fn mean_weight_sq(&self) -> S {
        if self.sample_count == 0 {
            return S::zero();
        }
        let n = S::lit(self.sample_count as f64);
        self.m2 / n + self.mean * self.mean
    }

    /// `z * std / (sqrt(n) * value)`; `None` while the estimate is zero.
    pub fn relative_half_width(&self, z: S) -> Option<S> {
        if !(self.value > S::zero()) || self.sample_count == 0 {
            return None;
        }
        let n = S::lit(self.sample_count as f64);
        Some(z * self.sample_std() / (n.sqrt() * self.value))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct RhwRule<S> {
    pub s_r: S,
    #[serde(default = "default_z")]
    pub confidence_z: S,
    #[serde(default = "default_n_min")]
    pub n_min: u64,
    #[serde(default = "default_n_max")]
    pub n_max: u64,
    #[serde(default = "default_min_failures")]
    pub min_failures: u64,
}

fn default_z<S: Scalar>() -> S {
    S::lit(Z_95)
}

fn default_n_min() -> u64 {
    100
}

fn default_n_max() -> u64 {
    10_000_000
}

fn default_min_failures() -> u64 {
    1
}

impl<S: Scalar> RhwRule<S> {
    pub fn new(s_r: S) -> Self {
        Self {
            s_r,
            confidence_z: default_z(),
            n_min: default_n_min(),
            n_max: default_n_max(),
            min_failures: default_min_failures(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound(deserialize = "S: Scalar + Deserialize<'de>"))]
pub enum TerminationRule<S> {
    /// Stop after exactly this many samples.
    FixedN { n: u64 },
    /// Stop once the relative half-width drops below `s_r`.
    Rhw(RhwRule<S>),
}

impl<S: Scalar> TerminationRule<S> {
    pub fn fixed(n: u64) -> Self {
        Self::FixedN { n }
    }

    pub fn rhw(s_r: S) -> Self {
        Self::Rhw(RhwRule::new(s_r))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::FixedN { n } if *n < 1 => Err(Error::param("fixed_n must be at least 1")),
            Self::FixedN { .. } => Ok(()),
            Self::Rhw(r) => {
                if !(r.s_r > S::zero() && r.s_r < S::one()) {
                    return Err(Error::param(format!("s_r must lie in (0, 1), got {}", r.s_r)));
                }
                if !(r.confidence_z > S::zero()) {
                    return Err(Error::param("confidence_z must be positive"));
                }
                if r.n_min < 2 || r.n_max < r.n_min {
                    return Err(Error::param("RHW rule needs 2 <= n_min <= n_max"));
                }
                Ok(())
            }
        }
    }

    pub fn check(&self, est: &RiskEstimate<S>) -> Decision {
        match self {
            Self::FixedN { n } => {
                if est.sample_count >= *n {
                    Decision::Stop { terminated: true }
                } else {
                    Decision::Continue
                }
            }
            Self::Rhw(rule) => check_rhw(est, rule),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Continue,
    /// `terminated` is false when the sample cap forced the stop.
    Stop { terminated: bool },
}

/// Runtime relative-half-width observer.
pub fn check_rhw<S: Scalar>(est: &RiskEstimate<S>, rule: &RhwRule<S>) -> Decision {
    if est.sample_count >= rule.n_min && est.failure_count >= rule.min_failures {
        if let Some(rhw) = est.relative_half_width(rule.confidence_z) {
            if rhw <= rule.s_r {
                return Decision::Stop { terminated: true };
            }
        }
    }
    if est.sample_count >= rule.n_max {
        return Decision::Stop { terminated: false };
    }
    Decision::Continue
}

/// One row of the optional per-sample trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleTrace<S> {
    pub index: u64,
    pub x: S,
    pub weight: S,
    pub indicator: u8,
    pub running_value: S,
}

/// Nominal Monte Carlo: draws from `p`, unit weights.
pub fn run_monte_carlo<S, T, R>(
    subject: &T,
    p: &Distribution<S>,
    rule: &TerminationRule<S>,
    rng: &mut R,
) -> Result<RiskEstimate<S>>
where
    S: Scalar,
    T: TestingSubject<S> + ?Sized,
    R: Rng + ?Sized,
{
    run(subject, p, None, rule, rng, |_: &SampleTrace<S>| {})
}

/// Importance sampling: draws from `q`, weights failures by `p(x)/q(x)`.
pub fn run_importance_sampling<S, T, R>(
    subject: &T,
    p: &Distribution<S>,
    q: &Distribution<S>,
    rule: &TerminationRule<S>,
    rng: &mut R,
) -> Result<RiskEstimate<S>>
where
    S: Scalar,
    T: TestingSubject<S> + ?Sized,
    R: Rng + ?Sized,
{
    run(subject, p, Some(q), rule, rng, |_: &SampleTrace<S>| {})
}

/// Either estimator with a per-sample callback. `q = None` runs nominal Monte Carlo.
pub fn run_traced<S, T, R, F>(
    subject: &T,
    p: &Distribution<S>,
    q: Option<&Distribution<S>>,
    rule: &TerminationRule<S>,
    rng: &mut R,
    trace: F,
) -> Result<RiskEstimate<S>>
where
    S: Scalar,
    T: TestingSubject<S> + ?Sized,
    R: Rng + ?Sized,
    F: FnMut(&SampleTrace<S>),
{
    run(subject, p, q, rule, rng, trace)
}

fn run<S, T, R, F>(
    subject: &T,
    p: &Distribution<S>,
    q: Option<&Distribution<S>>,
    rule: &TerminationRule<S>,
    rng: &mut R,
    mut trace: F,
) -> Result<RiskEstimate<S>>
where
    S: Scalar,
    T: TestingSubject<S> + ?Sized,
    R: Rng + ?Sized,
    F: FnMut(&SampleTrace<S>),
{
    rule.validate()?;
    let sampler = q.unwrap_or(p);
    let mut est = RiskEstimate::default();
    loop {
        let x = sampler.draw_value(rng);
        let failed = subject.failure_at(x)?;
        let weight = match q {
            Some(q) if failed => p.density_at(x) / q.density_at(x),
            _ => S::one(),
        };
        est.push(failed, weight);
        trace(&SampleTrace {
            index: est.sample_count - 1,
            x,
            weight,
            indicator: u8::from(failed),
            running_value: est.value,
        });
        if let Decision::Stop { terminated } = rule.check(&est) {
            est.terminated = terminated;
            return Ok(est);
        }
    }
}
