//! Budget comparison between the planned and the distribution-agnostic
//! variants over a `(τ, r̄)` sweep.

use serde::{Deserialize, Serialize};

use super::campaign::{planned_budget, thread_pool, Budget, TrialSetup};
use super::config::{CampaignConfig, Variant};
use super::truth::ground_truth;
use crate::estimators::TerminationRule;
use crate::planner::{make_grid, BudgetPlanner, GridVariant, PlannerParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    PlannerDiverged,
    Infeasible,
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub tau: f64,
    pub r_bar: f64,
    pub alg3_status: CellStatus,
    pub alg3_n: Option<u64>,
    pub alg3_log10_n: Option<f64>,
    pub direct_status: CellStatus,
    pub direct_n: Option<u64>,
    pub direct_log10_n: Option<f64>,
    /// `alg3_n / direct_n` when both are available.
    pub n_ratio: Option<f64>,
    pub alg3_max_abs_error: Option<f64>,
    pub direct_max_abs_error: Option<f64>,
}

impl CompareRow {
    pub fn both_feasible(&self) -> bool {
        self.alg3_status == CellStatus::Ok && self.direct_status == CellStatus::Ok
    }
}

fn status_of(e: &Error) -> CellStatus {
    match e {
        Error::PlannerDiverged { .. } => CellStatus::PlannerDiverged,
        Error::Infeasible { .. } => CellStatus::Infeasible,
        _ => CellStatus::Invalid,
    }
}

/// Sweeps `compare.taus × compare.r_bars`; β, ε, `c_step` and the cap come
/// from the `planner` block. A cell whose planner fails is recorded with its
/// status instead of aborting the sweep.
///
/// With `error_trials > 0`, each feasible cell also runs that many trials per
/// variant and subject and records the largest `|output - r*|`.
pub fn compare_variants(config: &CampaignConfig) -> Result<Vec<CompareRow>> {
    config.validate()?;
    let sweep = config.compare.as_ref().ok_or_else(|| Error::config("missing `compare` block"))?;
    let base = config.planner()?;
    if base.epsilon.is_none() {
        return Err(Error::config("compare requires `planner.epsilon`"));
    }
    let p = config.p()?;
    let q = config.q()?;
    // KL and the log-ratio profile are shared by every cell
    let planner = BudgetPlanner::new(&p, &q).map_err(|e| Error::config(e.to_string()))?;
    let pool = thread_pool(config.workers)?;

    let subjects = if sweep.error_trials > 0 { config.subjects()? } else { Vec::new() };
    let truths = pool.install(|| {
        subjects.iter().map(|s| ground_truth(s, &p, &config.truth)).collect::<Result<Vec<_>>>()
    })?;

    let mut rows = Vec::new();
    let mut cell_index = 0u64;
    for &tau in &sweep.taus {
        for &r_bar in &sweep.r_bars {
            let params = PlannerParams { tau, r_bar, ..base.clone() };
            let alg3 = planner.plan(&params).and_then(|plan| {
                if !plan.feasible {
                    return Err(Error::Infeasible { n: plan.n, cap: params.gamma_cap.unwrap_or(u64::MAX) });
                }
                let grid = make_grid(&params, GridVariant::Alg3, config.grid_seed)?;
                Ok(Budget { n: plan.n, plan: Some(plan), grid })
            });
            let direct = planned_budget(Variant::DirectSq, &params, &p, &q, config.grid_seed);

            let mut errors = [None, None];
            if sweep.error_trials > 0 {
                for (slot, (variant, budget)) in
                    [(Variant::Alg3, &alg3), (Variant::DirectSq, &direct)].into_iter().enumerate()
                {
                    let Ok(budget) = budget else { continue };
                    let setup = TrialSetup {
                        variant,
                        p: &p,
                        q: &q,
                        rule: TerminationRule::fixed(budget.n),
                        grid: Some(budget.grid),
                        master_seed: config.master_seed,
                    };
                    let mut worst = 0.0f64;
                    for (subject, truth) in subjects.iter().zip(&truths) {
                        let first = cell_index * sweep.error_trials as u64;
                        let records: Vec<_> = pool.install(|| {
                            use rayon::prelude::*;
                            (first..first + sweep.error_trials as u64)
                                .into_par_iter()
                                .map(|t| setup.run(subject, t))
                                .collect()
                        });
                        for r in records {
                            let out = r.output().ok_or_else(|| {
                                Error::Input(r.error.clone().unwrap_or_else(|| "trial produced no output".into()))
                            })?;
                            worst = worst.max((out - truth.r_star).abs());
                        }
                    }
                    errors[slot] = Some(worst);
                }
            }
            cell_index += 1;

            let n_of = |b: &Result<Budget>| b.as_ref().ok().map(|b| b.n);
            let status = |b: &Result<Budget>| b.as_ref().err().map_or(CellStatus::Ok, status_of);
            let (an, dn) = (n_of(&alg3), n_of(&direct));
            rows.push(CompareRow {
                tau,
                r_bar,
                alg3_status: status(&alg3),
                alg3_n: an,
                alg3_log10_n: an.map(|n| (n as f64).log10()),
                direct_status: status(&direct),
                direct_n: dn,
                direct_log10_n: dn.map(|n| (n as f64).log10()),
                n_ratio: an.zip(dn).map(|(a, d)| a as f64 / d as f64),
                alg3_max_abs_error: errors[0],
                direct_max_abs_error: errors[1],
            });
        }
    }
    Ok(rows)
}
