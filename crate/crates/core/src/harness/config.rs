//! Campaign configuration, read from a JSON file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::distributions::{
    pendulum_importance_bimodal, pendulum_importance_uniform, pendulum_nominal, Distribution,
};
use crate::estimators::{RhwRule, TerminationRule};
use crate::planner::PlannerParams;
use crate::subjects::{
    CategoricalSubject, ControllerKind, ControllerSpec, PendulumParams, PendulumSubject,
    TestingSubject,
};
use crate::{Error, Result};

/// Estimator run by every trial of a campaign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Nominal Monte Carlo under a fixed budget or the RHW rule.
    Mc,
    /// Importance sampling stopped by the RHW rule.
    IsRhw,
    /// Planned budget plus randomized rounding.
    Alg3,
    /// Distribution-agnostic budget plus randomized rounding.
    DirectSq,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Mc => "mc",
            Variant::IsRhw => "is_rhw",
            Variant::Alg3 => "alg3",
            Variant::DirectSq => "direct_sq",
        }
    }

    /// Whether outputs go through the rounding grid.
    pub fn rounds(self) -> bool {
        matches!(self, Variant::Alg3 | Variant::DirectSq)
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionConfig {
    TruncatedNormal { mean: f64, std: f64, lower: f64, upper: f64 },
    Uniform { lower: f64, upper: f64 },
    Categorical { probabilities: Vec<f64> },
    Mixture { weights: Vec<f64>, components: Vec<DistributionConfig> },
    /// `pendulum_nominal`, `pendulum_q1` (uniform) or `pendulum_q2` (bimodal).
    Preset { name: String },
}

impl DistributionConfig {
    pub fn build(&self) -> Result<Distribution<f64>> {
        match self {
            Self::TruncatedNormal { mean, std, lower, upper } => {
                Distribution::truncated_normal(*mean, *std, *lower, *upper)
            }
            Self::Uniform { lower, upper } => Distribution::uniform(*lower, *upper),
            Self::Categorical { probabilities } => Distribution::categorical(probabilities.clone()),
            Self::Mixture { weights, components } => {
                let parts = components.iter().map(Self::build).collect::<Result<Vec<_>>>()?;
                Distribution::mixture(weights.clone(), parts)
            }
            Self::Preset { name } => match name.as_str() {
                "pendulum_nominal" => Ok(pendulum_nominal()),
                "pendulum_q1" => Ok(pendulum_importance_uniform()),
                "pendulum_q2" => Ok(pendulum_importance_bimodal()),
                other => Err(Error::config(format!("unknown distribution preset `{other}`"))),
            },
        }
    }
}

/// A controller entry: the kind plus any gains to override.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub kind: ControllerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ki: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_substeps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
}

impl ControllerConfig {
    pub fn new(kind: ControllerKind) -> Self {
        Self {
            kind,
            kp: None,
            ki: None,
            kd: None,
            q_theta: None,
            q_rate: None,
            r: None,
            horizon: None,
            model_substeps: None,
            iterations: None,
        }
    }

    pub fn spec(&self) -> Result<ControllerSpec<f64>> {
        let misplaced = |names: &[(&str, bool)]| -> Result<()> {
            match names.iter().find(|(_, set)| *set) {
                Some((name, _)) => {
                    Err(Error::config(format!("`{name}` does not apply to a {} controller", self.kind)))
                }
                None => Ok(()),
            }
        };
        let pid_only = [("kp", self.kp.is_some()), ("ki", self.ki.is_some()), ("kd", self.kd.is_some())];
        let cost = [
            ("q_theta", self.q_theta.is_some()),
            ("q_rate", self.q_rate.is_some()),
            ("r", self.r.is_some()),
        ];
        let nmpc_only = [
            ("horizon", self.horizon.is_some()),
            ("model_substeps", self.model_substeps.is_some()),
            ("iterations", self.iterations.is_some()),
        ];
        Ok(match ControllerSpec::default_for(self.kind) {
            ControllerSpec::Pid { kp, ki, kd } => {
                misplaced(&cost)?;
                misplaced(&nmpc_only)?;
                ControllerSpec::Pid {
                    kp: self.kp.unwrap_or(kp),
                    ki: self.ki.unwrap_or(ki),
                    kd: self.kd.unwrap_or(kd),
                }
            }
            ControllerSpec::Lqr { q_theta, q_rate, r } => {
                misplaced(&pid_only)?;
                misplaced(&nmpc_only)?;
                ControllerSpec::Lqr {
                    q_theta: self.q_theta.unwrap_or(q_theta),
                    q_rate: self.q_rate.unwrap_or(q_rate),
                    r: self.r.unwrap_or(r),
                }
            }
            ControllerSpec::Nmpc { q_theta, q_rate, r, horizon, model_substeps, iterations } => {
                misplaced(&pid_only)?;
                ControllerSpec::Nmpc {
                    q_theta: self.q_theta.unwrap_or(q_theta),
                    q_rate: self.q_rate.unwrap_or(q_rate),
                    r: self.r.unwrap_or(r),
                    horizon: self.horizon.unwrap_or(horizon),
                    model_substeps: self.model_substeps.unwrap_or(model_substeps),
                    iterations: self.iterations.unwrap_or(iterations),
                }
            }
        })
    }
}

fn all_controllers() -> Vec<ControllerConfig> {
    [ControllerKind::Pid, ControllerKind::Lqr, ControllerKind::Nmpc]
        .into_iter()
        .map(ControllerConfig::new)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SubjectConfig {
    Pendulum {
        #[serde(default)]
        params: PendulumParams<f64>,
        #[serde(default = "all_controllers")]
        controllers: Vec<ControllerConfig>,
    },
    Categorical {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        failure_labels: Option<Vec<u8>>,
        /// JSON array of labels, or whitespace/comma separated 0/1 values.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels_file: Option<PathBuf>,
    },
}

/// A built subject together with the name used in reports.
pub struct NamedSubject {
    pub name: String,
    pub subject: Box<dyn TestingSubject<f64>>,
    /// Canonical description hashed into the ground-truth cache key.
    pub fingerprint: String,
    pub categorical: Option<CategoricalSubject>,
}

impl SubjectConfig {
    /// Builds one subject per controller (pendulum) or a single table subject.
    pub fn build(&self, base: &Path) -> Result<Vec<NamedSubject>> {
        match self {
            Self::Pendulum { params, controllers } => {
                if controllers.is_empty() {
                    return Err(Error::config("pendulum subject needs at least one controller"));
                }
                params.validate().map_err(|e| Error::config(e.to_string()))?;
                let mut out = Vec::with_capacity(controllers.len());
                for c in controllers {
                    let spec = c.spec()?;
                    let subject = PendulumSubject::new(params.clone(), &spec)
                        .map_err(|e| Error::config(e.to_string()))?;
                    let name = unique_name(&out, c.kind.name());
                    let fingerprint = serde_json::to_string(&(params, &spec))?;
                    out.push(NamedSubject { name, subject: Box::new(subject), fingerprint, categorical: None });
                }
                Ok(out)
            }
            Self::Categorical { failure_labels, labels_file } => {
                let labels = match (failure_labels, labels_file) {
                    (Some(l), None) => l.clone(),
                    (None, Some(path)) => read_labels(&base.join(path))?,
                    _ => {
                        return Err(Error::config(
                            "categorical subject needs exactly one of `failure_labels` or `labels_file`",
                        ))
                    }
                };
                let subject = CategoricalSubject::new(labels).map_err(|e| Error::config(e.to_string()))?;
                let fingerprint = serde_json::to_string(&subject)?;
                Ok(vec![NamedSubject {
                    name: "categorical".into(),
                    subject: Box::new(subject.clone()),
                    fingerprint,
                    categorical: Some(subject),
                }])
            }
        }
    }
}

fn unique_name(existing: &[NamedSubject], base: &str) -> String {
    let taken = |n: &str| existing.iter().any(|s| s.name == n);
    if !taken(base) {
        return base.to_string();
    }
    (2..).map(|k| format!("{base}-{k}")).find(|n| !taken(n)).expect("unbounded")
}

fn read_labels(path: &Path) -> Result<Vec<u8>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read labels file {}: {e}", path.display())))?;
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("labels file {}: {e}", path.display())));
    }
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<u8>()
                .map_err(|_| Error::config(format!("labels file {}: bad label `{t}`", path.display())))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthConfig {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    /// Directory holding cached enumerations, keyed by a content hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

impl Default for TruthConfig {
    fn default() -> Self {
        Self { enabled: true, resolution: default_resolution(), cache_dir: None }
    }
}

fn yes() -> bool {
    true
}

fn default_resolution() -> f64 {
    0.002
}

/// The `(τ, r̄)` sweep of `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub taus: Vec<f64>,
    pub r_bars: Vec<f64>,
    /// Trials per cell and variant used to measure the achieved error; 0 skips it.
    #[serde(default)]
    pub error_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub subject: SubjectConfig,
    pub p: DistributionConfig,
    /// Importance law; defaults to `p`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<DistributionConfig>,
    pub variant: Variant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planner: Option<PlannerParams<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhw: Option<RhwRule<f64>>,
    /// Fixed budget for `mc`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_n: Option<u64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub grid_seed: u64,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub truth: TruthConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Directory relative paths are resolved against; set by [`CampaignConfig::load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_trials() -> usize {
    100
}

impl CampaignConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_json(&text)?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if let Some(dir) = config.truth.cache_dir.take() {
            config.truth.cache_dir = Some(config.base_dir.join(dir));
        }
        Ok(config)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        let need = |what: &str| Error::config(format!("variant {} requires `{what}`", self.variant));
        match self.variant {
            Variant::Mc => {
                if self.fixed_n.is_some() == self.rhw.is_some() {
                    return Err(Error::config("variant mc requires exactly one of `fixed_n` or `rhw`"));
                }
            }
            Variant::IsRhw => {
                self.rhw.as_ref().ok_or_else(|| need("rhw.s_r"))?;
            }
            Variant::Alg3 => {
                self.planner.as_ref().ok_or_else(|| need("planner"))?;
            }
            Variant::DirectSq => {
                let planner = self.planner.as_ref().ok_or_else(|| need("planner"))?;
                planner.epsilon.ok_or_else(|| need("planner.epsilon"))?;
            }
        }
        if let Some(p) = &self.planner {
            p.validate().map_err(|e| Error::config(e.to_string()))?;
        }
        self.termination()?;
        if self.truth.enabled && !(self.truth.resolution > 0.0) {
            return Err(Error::config("truth.resolution must be positive"));
        }
        if let Some(c) = &self.compare {
            if c.taus.is_empty() || c.r_bars.is_empty() {
                return Err(Error::config("compare needs non-empty `taus` and `r_bars`"));
            }
        }
        Ok(())
    }

    pub fn p(&self) -> Result<Distribution<f64>> {
        self.p.build().map_err(|e| Error::config(format!("p: {e}")))
    }

    pub fn q(&self) -> Result<Distribution<f64>> {
        match &self.q {
            Some(q) => q.build().map_err(|e| Error::config(format!("q: {e}"))),
            None => self.p(),
        }
    }

    pub fn subjects(&self) -> Result<Vec<NamedSubject>> {
        self.subject.build(&self.base_dir)
    }

    /// Stopping rule for the sequential variants; `None` for planned budgets.
    pub fn termination(&self) -> Result<Option<TerminationRule<f64>>> {
        let rule = match self.variant {
            Variant::Mc => match (&self.rhw, self.fixed_n) {
                (Some(r), _) => TerminationRule::Rhw(r.clone()),
                (None, Some(n)) => TerminationRule::fixed(n),
                (None, None) => return Err(Error::config("variant mc requires `fixed_n` or `rhw`")),
            },
            Variant::IsRhw => {
                TerminationRule::Rhw(self.rhw.clone().ok_or_else(|| Error::config("missing `rhw`"))?)
            }
            Variant::Alg3 | Variant::DirectSq => return Ok(None),
        };
        rule.validate().map_err(|e| Error::config(e.to_string()))?;
        Ok(Some(rule))
    }

    pub fn planner(&self) -> Result<&PlannerParams<f64>> {
        self.planner.as_ref().ok_or_else(|| Error::config("missing `planner` block"))
    }
}
