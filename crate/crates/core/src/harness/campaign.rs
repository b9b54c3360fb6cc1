//! Running N independent trials and summarizing how often they agree.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{CampaignConfig, NamedSubject, Variant};
use super::truth::{ground_truth, SubjectTruth};
use crate::distributions::Distribution;
use crate::estimators::{run_importance_sampling, run_monte_carlo, RiskEstimate, TerminationRule};
use crate::planner::{
    direct_sample_size, make_grid, plan_budget, repeatability_failure_prob, BudgetPlan, GridVariant,
    PlannerParams,
};
use crate::rng::{stream, stream_id, StreamLabel};
use crate::rounding::{round_estimate, RoundingGrid};
use crate::{Error, Result};

/// One trial of one subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub subject: String,
    pub trial_index: u64,
    /// Identifier of the trial's sampling stream.
    pub seed: u64,
    pub raw_estimate: Option<f64>,
    pub rounded_estimate: Option<f64>,
    pub interval_index: Option<i64>,
    pub sample_count: u64,
    pub failure_count: u64,
    pub terminated: bool,
    pub error: Option<String>,
    /// Seconds; reported separately so that the other reports stay byte-stable.
    #[serde(skip)]
    pub wall_time: f64,
}

impl TrialRecord {
    /// The value the estimator reports: rounded when a grid is in use.
    pub fn output(&self) -> Option<f64> {
        self.rounded_estimate.or(self.raw_estimate)
    }
}

/// Agreement, accuracy and effort statistics for one subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectSummary {
    pub subject: String,
    pub trials: usize,
    /// Trials that returned an error instead of an estimate.
    pub failed_trials: usize,
    /// Trials stopped by `n_max` rather than by their rule.
    pub unterminated_trials: usize,
    pub r_star: Option<f64>,
    pub modal_output: Option<f64>,
    pub modal_share: f64,
    pub pairwise_equal_rate: f64,
    pub distinct_outputs: usize,
    pub max_abs_error: Option<f64>,
    pub mean_output: Option<f64>,
    pub min_sample_count: u64,
    pub max_sample_count: u64,
    pub mean_sample_count: f64,
    /// Sample standard deviation of the sample counts over their mean.
    pub sample_count_cv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub variant: Variant,
    pub trials: usize,
    pub master_seed: u64,
    pub grid_seed: u64,
    /// Budget every trial runs, for the planned variants.
    pub planned_n: Option<u64>,
    pub plan: Option<BudgetPlan<f64>>,
    pub grid: Option<RoundingGrid<f64>>,
    /// Bound on the probability that one trial misses the accuracy target.
    pub miss_probability_bound: Option<f64>,
    pub subjects: Vec<SubjectSummary>,
    pub warnings: Vec<String>,
}

impl CampaignSummary {
    pub fn subject(&self, name: &str) -> Option<&SubjectSummary> {
        self.subjects.iter().find(|s| s.subject == name)
    }
}

#[derive(Debug, Clone)]
pub struct CampaignOutcome {
    pub records: Vec<TrialRecord>,
    pub summary: CampaignSummary,
    pub truths: Vec<SubjectTruth>,
}

impl CampaignOutcome {
    /// Whether any trial ran out of samples before its rule was met.
    pub fn budget_exhausted(&self) -> bool {
        self.summary.subjects.iter().any(|s| s.unterminated_trials > 0)
    }
}

/// Fraction of unordered pairs whose outputs are bit-identical. A single
/// output counts as fully repeatable.
pub fn pairwise_equal_rate(outputs: &[f64]) -> Result<f64> {
    if outputs.is_empty() {
        return Err(Error::input("pairwise_equal_rate needs at least one output"));
    }
    let n = outputs.len() as u64;
    if n == 1 {
        return Ok(1.0);
    }
    let equal: u64 = bit_counts(outputs).values().map(|&k| k * (k - 1) / 2).sum();
    Ok(equal as f64 / (n * (n - 1) / 2) as f64)
}

fn bit_counts(outputs: &[f64]) -> HashMap<u64, u64> {
    let mut counts = HashMap::new();
    for x in outputs {
        *counts.entry(x.to_bits()).or_insert(0) += 1;
    }
    counts
}

/// The shared budget and grid of a planned campaign.
#[derive(Debug, Clone)]
pub(crate) struct Budget {
    pub n: u64,
    pub plan: Option<BudgetPlan<f64>>,
    pub grid: RoundingGrid<f64>,
}

pub(crate) fn planned_budget(
    variant: Variant,
    params: &PlannerParams<f64>,
    p: &Distribution<f64>,
    q: &Distribution<f64>,
    grid_seed: u64,
) -> Result<Budget> {
    match variant {
        Variant::Alg3 => {
            let plan = plan_budget(p, q, params)?;
            if !plan.feasible {
                return Err(Error::Infeasible { n: plan.n, cap: params.gamma_cap.unwrap_or(u64::MAX) });
            }
            let grid = make_grid(params, GridVariant::Alg3, grid_seed)?;
            Ok(Budget { n: plan.n, plan: Some(plan), grid })
        }
        Variant::DirectSq => {
            let n = direct_sample_size(params)?;
            if let Some(cap) = params.gamma_cap.filter(|&cap| n > cap) {
                return Err(Error::Infeasible { n, cap });
            }
            let grid = make_grid(params, GridVariant::Direct, grid_seed)?;
            Ok(Budget { n, plan: None, grid })
        }
        Variant::Mc | Variant::IsRhw => Err(Error::config(format!("variant {variant} has no planned budget"))),
    }
}

/// Everything a trial needs besides its index.
pub(crate) struct TrialSetup<'a> {
    pub variant: Variant,
    pub p: &'a Distribution<f64>,
    pub q: &'a Distribution<f64>,
    pub rule: TerminationRule<f64>,
    pub grid: Option<RoundingGrid<f64>>,
    pub master_seed: u64,
}

impl TrialSetup<'_> {
    pub fn run(&self, subject: &NamedSubject, trial_index: u64) -> TrialRecord {
        let mut rng = stream(self.master_seed, trial_index, StreamLabel::Trial);
        let start = Instant::now();
        let estimate = match self.variant {
            Variant::Mc => run_monte_carlo(subject.subject.as_ref(), self.p, &self.rule, &mut rng),
            _ => run_importance_sampling(subject.subject.as_ref(), self.p, self.q, &self.rule, &mut rng),
        };
        let mut record = TrialRecord {
            subject: subject.name.clone(),
            trial_index,
            seed: stream_id(self.master_seed, trial_index, StreamLabel::Trial),
            raw_estimate: None,
            rounded_estimate: None,
            interval_index: None,
            sample_count: 0,
            failure_count: 0,
            terminated: false,
            error: None,
            wall_time: 0.0,
        };
        match estimate.and_then(|est| self.finish(&mut record, est)) {
            Ok(()) => {}
            Err(e) => record.error = Some(e.to_string()),
        }
        record.wall_time = start.elapsed().as_secs_f64();
        record
    }

    fn finish(&self, record: &mut TrialRecord, est: RiskEstimate<f64>) -> Result<()> {
        record.raw_estimate = Some(est.value);
        record.sample_count = est.sample_count;
        record.failure_count = est.failure_count;
        record.terminated = est.terminated;
        if let Some(grid) = &self.grid {
            let rounded = round_estimate(est.value, grid)?;
            record.rounded_estimate = Some(rounded.value);
            record.interval_index = Some(rounded.interval_index);
        }
        Ok(())
    }
}

/// Runs every trial of every subject in `config`.
///
/// Planned variants fix the budget and the grid once, before any trial runs.
/// Trial `i` samples from the stream derived from `(master_seed, i)`, so the
/// result does not depend on the worker count or on scheduling.
pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignOutcome> {
    config.validate()?;
    let pool = thread_pool(config.workers)?;
    pool.install(|| run_campaign_inner(config))
}

pub(crate) fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(format!("cannot start {workers} workers: {e}")))
}

fn run_campaign_inner(config: &CampaignConfig) -> Result<CampaignOutcome> {
    let p = config.p()?;
    let q = config.q()?;
    let subjects = config.subjects()?;
    let mut warnings = Vec::new();

    let budget = match config.variant {
        Variant::Alg3 | Variant::DirectSq => {
            let budget = planned_budget(config.variant, config.planner()?, &p, &q, config.grid_seed)?;
            log::info!("planned n = {} per trial, grid {:?}", budget.n, budget.grid);
            Some(budget)
        }
        _ => None,
    };
    let rule = match &budget {
        Some(b) => TerminationRule::fixed(b.n),
        None => config.termination()?.expect("sequential variant has a rule"),
    };

    let truths = if config.truth.enabled {
        subjects
            .iter()
            .map(|s| ground_truth(s, &p, &config.truth))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    if let Some(params) = &config.planner {
        for t in &truths {
            if t.r_star > params.r_bar {
                let msg = format!(
                    "r_bar = {} is below the ground-truth risk {:.6} of `{}`; the planned budget does not cover this subject",
                    params.r_bar, t.r_star, t.subject
                );
                log::warn!("{msg}");
                warnings.push(msg);
            }
        }
    }

    let setup = TrialSetup {
        variant: config.variant,
        p: &p,
        q: &q,
        rule,
        grid: budget.as_ref().map(|b| b.grid),
        master_seed: config.master_seed,
    };
    let jobs: Vec<(usize, u64)> = (0..subjects.len())
        .flat_map(|s| (0..config.trials as u64).map(move |t| (s, t)))
        .collect();
    let records: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(s, t)| {
            let record = setup.run(&subjects[s], t);
            log::debug!(
                "{} trial {}: output {:?}, n = {}",
                record.subject,
                t,
                record.output(),
                record.sample_count
            );
            record
        })
        .collect();

    let r_stars: BTreeMap<String, f64> = truths.iter().map(|t| (t.subject.clone(), t.r_star)).collect();
    let order: Vec<String> = subjects.iter().map(|s| s.name.clone()).collect();
    let table = summarize(&records, &order, &r_stars)?;
    for s in &table {
        if s.failed_trials > 0 {
            let msg = format!("{} of {} trials of `{}` failed", s.failed_trials, s.trials, s.subject);
            log::warn!("{msg}");
            warnings.push(msg);
        }
        if s.unterminated_trials > 0 {
            let msg = format!(
                "{} of {} trials of `{}` exhausted the sample budget before the stopping rule was met",
                s.unterminated_trials, s.trials, s.subject
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }

    let miss_probability_bound = match (&budget, &config.planner) {
        (Some(b), Some(params)) => Some(repeatability_failure_prob(b.n, params.tau)),
        _ => None,
    };
    let summary = CampaignSummary {
        variant: config.variant,
        trials: config.trials,
        master_seed: config.master_seed,
        grid_seed: config.grid_seed,
        planned_n: budget.as_ref().map(|b| b.n),
        plan: budget.as_ref().and_then(|b| b.plan.clone()),
        grid: budget.as_ref().map(|b| b.grid),
        miss_probability_bound,
        subjects: table,
        warnings,
    };
    Ok(CampaignOutcome { records, summary, truths })
}

/// Per-subject statistics over `records`, listed in `order`. Subjects that
/// appear in `records` but not in `order` follow in name order.
pub fn summarize(
    records: &[TrialRecord],
    order: &[String],
    r_stars: &BTreeMap<String, f64>,
) -> Result<Vec<SubjectSummary>> {
    let mut names: Vec<String> = order.to_vec();
    let mut extra: Vec<String> =
        records.iter().map(|r| r.subject.clone()).filter(|s| !names.contains(s)).collect();
    extra.sort();
    extra.dedup();
    names.extend(extra);

    let mut table = Vec::with_capacity(names.len());
    for name in names {
        let mut mine: Vec<&TrialRecord> = records.iter().filter(|r| r.subject == name).collect();
        mine.sort_by_key(|r| r.trial_index);
        table.push(summarize_subject(&name, &mine, r_stars.get(&name).copied())?);
    }
    Ok(table)
}

fn summarize_subject(name: &str, records: &[&TrialRecord], r_star: Option<f64>) -> Result<SubjectSummary> {
    let ok: Vec<&TrialRecord> = records.iter().copied().filter(|r| r.error.is_none()).collect();
    let outputs: Vec<f64> = ok.iter().filter_map(|r| r.output()).collect();
    let counts: Vec<f64> = ok.iter().map(|r| r.sample_count as f64).collect();

    let (modal_output, modal_share, pairwise, distinct) = if outputs.is_empty() {
        (None, 0.0, 0.0, 0)
    } else {
        let tally = bit_counts(&outputs);
        // most frequent output; ties go to the smaller value
        let (&bits, &k) = tally
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(f64::from_bits(*b.0).total_cmp(&f64::from_bits(*a.0))))
            .expect("non-empty");
        (Some(f64::from_bits(bits)), k as f64 / outputs.len() as f64, pairwise_equal_rate(&outputs)?, tally.len())
    };
    let max_abs_error = r_star
        .filter(|_| !outputs.is_empty())
        .map(|r| outputs.iter().map(|o| (o - r).abs()).fold(0.0, f64::max));
    let mean_output = (!outputs.is_empty()).then(|| outputs.iter().sum::<f64>() / outputs.len() as f64);
    let (mean_n, cv) = mean_and_cv(&counts);

    Ok(SubjectSummary {
        subject: name.to_string(),
        trials: records.len(),
        failed_trials: records.len() - ok.len(),
        unterminated_trials: ok.iter().filter(|r| !r.terminated).count(),
        r_star,
        modal_output,
        modal_share,
        pairwise_equal_rate: pairwise,
        distinct_outputs: distinct,
        max_abs_error,
        mean_output,
        min_sample_count: ok.iter().map(|r| r.sample_count).min().unwrap_or(0),
        max_sample_count: ok.iter().map(|r| r.sample_count).max().unwrap_or(0),
        mean_sample_count: mean_n,
        sample_count_cv: cv,
    })
}

fn mean_and_cv(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 || mean == 0.0 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt() / mean)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_examples() {
        assert_eq!(pairwise_equal_rate(&[0.25, 0.25, 0.25]).unwrap(), 1.0);
        assert_eq!(pairwise_equal_rate(&[0.25, 0.35]).unwrap(), 0.0);
        assert!((pairwise_equal_rate(&[0.25, 0.25, 0.35]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(pairwise_equal_rate(&[0.7]).unwrap(), 1.0);
        assert!(pairwise_equal_rate(&[]).is_err());
    }

    #[test]
    fn pairwise_matches_brute_force() {
        let xs = [0.1, 0.2, 0.1, 0.3, 0.2, 0.1, 0.4];
        let mut equal = 0;
        let mut pairs = 0;
        for i in 0..xs.len() {
            for j in i + 1..xs.len() {
                pairs += 1;
                if xs[i] == xs[j] {
                    equal += 1;
                }
            }
        }
        assert_eq!(pairwise_equal_rate(&xs).unwrap(), equal as f64 / pairs as f64);
    }

    fn record(subject: &str, i: u64, out: f64, n: u64) -> TrialRecord {
        TrialRecord {
            subject: subject.into(),
            trial_index: i,
            seed: i,
            raw_estimate: Some(out + 0.01),
            rounded_estimate: Some(out),
            interval_index: Some(0),
            sample_count: n,
            failure_count: 1,
            terminated: true,
            error: None,
            wall_time: 0.0,
        }
    }

    #[test]
    fn summary_statistics() {
        let records = vec![
            record("a", 0, 0.5, 10),
            record("a", 1, 0.5, 10),
            record("a", 2, 0.3, 10),
            record("b", 0, 0.2, 5),
        ];
        let truth = BTreeMap::from([("a".to_string(), 0.45)]);
        let table = summarize(&records, &["a".into()], &truth).unwrap();
        assert_eq!(table.len(), 2);
        let a = &table[0];
        assert_eq!(a.modal_output, Some(0.5));
        assert!((a.modal_share - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(a.distinct_outputs, 2);
        assert!((a.max_abs_error.unwrap() - 0.15).abs() < 1e-12);
        assert_eq!(a.sample_count_cv, 0.0);
        let b = &table[1];
        assert_eq!(b.subject, "b");
        assert_eq!(b.modal_share, 1.0);
        assert_eq!(b.pairwise_equal_rate, 1.0);
        assert_eq!(b.max_abs_error, None);
    }

    #[test]
    fn modal_tie_goes_to_smaller_output() {
        let records = vec![record("a", 0, 0.5, 1), record("a", 1, 0.3, 1)];
        let table = summarize(&records, &[], &BTreeMap::new()).unwrap();
        assert_eq!(table[0].modal_output, Some(0.3));
        assert_eq!(table[0].modal_share, 0.5);
    }

    #[test]
    fn failed_trials_are_excluded() {
        let mut bad = record("a", 1, 0.0, 0);
        bad.error = Some("boom".into());
        bad.rounded_estimate = None;
        bad.raw_estimate = None;
        let table = summarize(&[record("a", 0, 0.5, 3), bad], &[], &BTreeMap::new()).unwrap();
        assert_eq!(table[0].failed_trials, 1);
        assert_eq!(table[0].trials, 2);
        assert_eq!(table[0].modal_share, 1.0);
        assert_eq!(table[0].mean_sample_count, 3.0);
    }

    #[test]
    fn cv_uses_sample_deviation() {
        let (mean, cv) = mean_and_cv(&[1.0, 3.0]);
        assert_eq!(mean, 2.0);
        assert!((cv - 2f64.sqrt() / 2.0).abs() < 1e-15);
    }
}
