//! Report files. Everything except `timings.csv` is a pure function of the
//! configuration, so two runs with the same seeds produce identical bytes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::campaign::{summarize, CampaignOutcome, SubjectSummary, TrialRecord};
use super::compare::CompareRow;
use super::truth::SubjectTruth;
use crate::Result;

pub const TRIALS_FILE: &str = "trials.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TIMINGS_FILE: &str = "timings.csv";
pub const TRUTH_FILE: &str = "ground_truth.json";
pub const COMPARE_FILE: &str = "compare.csv";

#[derive(Serialize)]
struct Timing<'a> {
    subject: &'a str,
    trial_index: u64,
    wall_time: f64,
}

/// Writes `trials.csv`, `summary.json`, `ground_truth.json` and `timings.csv` into `dir`.
pub fn write_reports(outcome: &CampaignOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_csv(&dir.join(TRIALS_FILE), &outcome.records)?;
    write_json(&dir.join(SUMMARY_FILE), &outcome.summary)?;
    write_json(&dir.join(TRUTH_FILE), &outcome.truths)?;
    let timings: Vec<Timing> = outcome
        .records
        .iter()
        .map(|r| Timing { subject: &r.subject, trial_index: r.trial_index, wall_time: r.wall_time })
        .collect();
    write_csv(&dir.join(TIMINGS_FILE), &timings)
}

pub fn write_compare(rows: &[CompareRow], path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    write_csv(path, rows)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trials(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let records = r.deserialize().collect::<std::result::Result<Vec<TrialRecord>, _>>()?;
    Ok(records)
}

/// Recomputes the per-subject table from a report directory: `trials.csv`,
/// plus `ground_truth.json` when present.
pub fn reaggregate(dir: &Path) -> Result<Vec<SubjectSummary>> {
    let records = read_trials(&dir.join(TRIALS_FILE))?;
    let truth_path = dir.join(TRUTH_FILE);
    let truths: Vec<SubjectTruth> = if truth_path.exists() {
        serde_json::from_str(&std::fs::read_to_string(truth_path)?)?
    } else {
        Vec::new()
    };
    let r_stars: BTreeMap<String, f64> = truths.iter().map(|t| (t.subject.clone(), t.r_star)).collect();
    // first-appearance order keeps the campaign's subject order
    let mut order: Vec<String> = Vec::new();
    for r in &records {
        if !order.contains(&r.subject) {
            order.push(r.subject.clone());
        }
    }
    summarize(&records, &order, &r_stars)
}
