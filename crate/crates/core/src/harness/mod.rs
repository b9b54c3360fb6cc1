//! Campaigns: many independent trials of one estimator variant against one or
//! more subjects, with agreement, accuracy and effort statistics.

mod campaign;
mod compare;
mod config;
mod report;
mod truth;

pub use campaign::{
    pairwise_equal_rate, run_campaign, summarize, CampaignOutcome, CampaignSummary, SubjectSummary,
    TrialRecord,
};
pub use compare::{compare_variants, CellStatus, CompareRow};
pub use config::{
    CampaignConfig, CompareConfig, ControllerConfig, DistributionConfig, NamedSubject, SubjectConfig,
    TruthConfig, Variant,
};
pub use report::{
    read_trials, reaggregate, write_compare, write_json, write_reports, COMPARE_FILE, SUMMARY_FILE,
    TIMINGS_FILE, TRIALS_FILE, TRUTH_FILE,
};
pub use truth::{cache_key, cache_path, ground_truth, SubjectTruth, TruthMethod};
