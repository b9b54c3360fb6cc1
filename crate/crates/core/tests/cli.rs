use std::path::Path;
use std::process::{Command, Output};

use reprisk::harness::{CampaignSummary, SubjectSummary};

fn reprisk(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reprisk")).args(args).current_dir(dir).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const CATEGORICAL: &str = r#"{
    "subject": {"kind": "categorical", "labels_file": "labels.txt"},
    "p": {"kind": "categorical", "probabilities": [0.6, 0.3, 0.1]},
    "q": {"kind": "categorical", "probabilities": [0.4, 0.3, 0.3]},
    "variant": "alg3",
    "planner": {"beta": 0.4, "tau": 0.1, "r_bar": 0.5, "epsilon": 0.01},
    "compare": {"taus": [0.1, 0.2], "r_bars": [0.3, 0.5], "error_trials": 2},
    "trials": 30,
    "master_seed": 4,
    "grid_seed": 9
}"#;

fn workspace(config: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("labels.txt"), "0 1 1\n").unwrap();
    std::fs::write(dir.path().join("campaign.json"), config).unwrap();
    dir
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn run_is_byte_reproducible_and_report_reaggregates() {
    let ws = workspace(CATEGORICAL);
    let dir = ws.path();
    let a = reprisk(&["run", "--config", "campaign.json", "--out", "a"], dir);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    let b = reprisk(&["run", "--config", "campaign.json", "--out", "b", "--workers", "2"], dir);
    assert_eq!(code(&b), 0);
    for f in ["trials.csv", "summary.json", "ground_truth.json"] {
        assert_eq!(read(&dir.join("a").join(f)), read(&dir.join("b").join(f)), "{f}");
    }
    assert!(dir.join("a/timings.csv").exists());

    let summary: CampaignSummary = serde_json::from_slice(&read(&dir.join("a/summary.json"))).unwrap();
    let s = &summary.subjects[0];
    assert_eq!(s.modal_share, 1.0);
    assert!((s.r_star.unwrap() - 0.4).abs() < 1e-15);
    assert!(s.max_abs_error.unwrap() <= 0.1);

    let report = reprisk(&["report", "--out", "a"], dir);
    assert_eq!(code(&report), 0);
    let table: Vec<SubjectSummary> = serde_json::from_slice(&report.stdout).unwrap();
    assert_eq!(table, summary.subjects);
}

#[test]
fn seed_flags_override_the_config() {
    let ws = workspace(CATEGORICAL);
    let dir = ws.path();
    let rhw = CATEGORICAL.replace("\"alg3\"", "\"is_rhw\", \"rhw\": {\"s_r\": 0.05}");
    std::fs::write(dir.join("rhw.json"), rhw).unwrap();
    reprisk(&["run", "--config", "rhw.json", "--out", "x"], dir);
    reprisk(&["run", "--config", "rhw.json", "--out", "y", "--seed", "77"], dir);
    assert_ne!(read(&dir.join("x/trials.csv")), read(&dir.join("y/trials.csv")));

    let plan = |grid: &str| {
        let o = reprisk(&["plan", "--config", "campaign.json", "--grid-seed", grid], dir);
        assert_eq!(code(&o), 0);
        serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap()
    };
    assert_ne!(plan("1")["grid"]["alpha0"], plan("2")["grid"]["alpha0"]);
    assert_eq!(plan("1")["grid"], plan("1")["grid"]);
}

#[test]
fn plan_prints_both_budgets() {
    let ws = workspace(CATEGORICAL);
    let o = reprisk(&["plan", "--config", "campaign.json"], ws.path());
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["direct_n"], 7339);
    assert_eq!(v["n"], v["plan"]["n"]);
}

#[test]
fn config_errors_exit_with_2() {
    let ws = workspace(CATEGORICAL);
    let dir = ws.path();
    assert_eq!(code(&reprisk(&["run", "--config", "missing.json"], dir)), 2);
    assert_eq!(code(&reprisk(&["run"], dir)), 2);
    std::fs::write(dir.join("bad.json"), "{ not json").unwrap();
    assert_eq!(code(&reprisk(&["run", "--config", "bad.json"], dir)), 2);
    std::fs::write(dir.join("zero.json"), CATEGORICAL.replace("\"trials\": 30", "\"trials\": 0")).unwrap();
    assert_eq!(code(&reprisk(&["run", "--config", "zero.json"], dir)), 2);
    assert_eq!(code(&reprisk(&["report", "--out", "nowhere"], dir)), 2);
}

#[test]
fn infeasible_plans_exit_with_3() {
    let capped = CATEGORICAL.replace("\"epsilon\": 0.01", "\"epsilon\": 0.01, \"gamma_cap\": 100");
    let ws = workspace(&capped);
    assert_eq!(code(&reprisk(&["plan", "--config", "campaign.json"], ws.path())), 3);
    assert_eq!(code(&reprisk(&["run", "--config", "campaign.json", "--out", "o"], ws.path())), 3);
}

#[test]
fn exhausted_budgets_exit_with_4() {
    let tight = CATEGORICAL.replace("\"alg3\"", "\"is_rhw\", \"rhw\": {\"s_r\": 0.0001, \"n_max\": 500}");
    let ws = workspace(&tight);
    let o = reprisk(&["run", "--config", "campaign.json", "--out", "o"], ws.path());
    assert_eq!(code(&o), 4);
    let summary: CampaignSummary = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary.subjects[0].unterminated_trials, 30);
    assert!(!summary.warnings.is_empty());
    assert_eq!(code(&reprisk(&["report", "--out", "o"], ws.path())), 4);
}

#[test]
fn compare_writes_a_stable_csv() {
    let ws = workspace(CATEGORICAL);
    let dir = ws.path();
    assert_eq!(code(&reprisk(&["compare", "--config", "campaign.json", "--out", "c1"], dir)), 0);
    assert_eq!(code(&reprisk(&["compare", "--config", "campaign.json", "--out", "c2"], dir)), 0);
    let (a, b) = (read(&dir.join("c1/compare.csv")), read(&dir.join("c2/compare.csv")));
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.starts_with("tau,r_bar,alg3_status,alg3_n"));
}

#[test]
fn truth_command_writes_its_file() {
    let ws = workspace(CATEGORICAL);
    let o = reprisk(&["truth", "--config", "campaign.json", "--out", "t"], ws.path());
    assert_eq!(code(&o), 0);
    assert!(ws.path().join("t/ground_truth.json").exists());
}
