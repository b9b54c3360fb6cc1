use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use reprisk::harness::{
    compare_variants, ground_truth, reaggregate, run_campaign, write_compare, write_json, write_reports,
    CampaignConfig, Variant, COMPARE_FILE, TRUTH_FILE,
};
use reprisk::planner::{direct_sample_size, make_grid, plan_budget, BudgetPlan, GridVariant};
use reprisk::rounding::RoundingGrid;
use reprisk::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_BUDGET: u8 = 4;

#[derive(Parser)]
#[command(name = "reprisk", version, about = "Repeatable importance-sampling risk estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Campaign configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for the per-trial sampling streams.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Seed of the rounding-grid offset.
    #[arg(long, global = true)]
    grid_seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Log progress to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Print the sample budget and rounding grid.
    Plan,
    /// Compute (or read from the cache) the ground-truth risk of each subject.
    Truth,
    /// Run a campaign and write its reports.
    Run,
    /// Sweep (tau, r_bar) and compare the planned and direct budgets.
    Compare,
    /// Re-aggregate a report directory from its trials CSV.
    Report,
}

#[derive(Serialize)]
struct PlanReport {
    variant: Variant,
    n: u64,
    plan: Option<BudgetPlan<f64>>,
    direct_n: Option<u64>,
    grid: RoundingGrid<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.common.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Input(_) | Error::Parameter(_) | Error::AbsoluteContinuity { .. } => {
            EXIT_CONFIG
        }
        Error::PlannerDiverged { .. } | Error::Infeasible { .. } => EXIT_INFEASIBLE,
        _ => EXIT_FAILURE,
    }
}

fn load(common: &Common) -> reprisk::Result<CampaignConfig> {
    let path = common.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut config = CampaignConfig::load(path)?;
    if let Some(seed) = common.seed {
        config.master_seed = seed;
    }
    if let Some(seed) = common.grid_seed {
        config.grid_seed = seed;
    }
    if let Some(w) = common.workers {
        config.workers = w;
    }
    Ok(config)
}

fn out_dir(common: &Common, config: Option<&CampaignConfig>) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| config.and_then(|c| c.output_dir.as_ref().map(|d| c.base_dir.join(d))))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn print_json<T: Serialize>(value: &T) -> reprisk::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn dispatch(cli: &Cli) -> reprisk::Result<u8> {
    let common = &cli.common;
    match cli.command {
        Command::Plan => {
            let config = load(common)?;
            print_json(&plan(&config)?)?;
            Ok(0)
        }
        Command::Truth => {
            let config = load(common)?;
            let p = config.p()?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(config.workers)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            let truths = pool.install(|| {
                config
                    .subjects()?
                    .iter()
                    .map(|s| ground_truth(s, &p, &config.truth))
                    .collect::<reprisk::Result<Vec<_>>>()
            })?;
            if let Some(dir) = &common.out {
                std::fs::create_dir_all(dir)?;
                write_json(&dir.join(TRUTH_FILE), &truths)?;
            }
            print_json(&truths)?;
            Ok(0)
        }
        Command::Run => {
            let config = load(common)?;
            let dir = out_dir(common, Some(&config));
            let outcome = run_campaign(&config)?;
            write_reports(&outcome, &dir)?;
            print_json(&outcome.summary)?;
            log::info!("reports written to {}", dir.display());
            Ok(if outcome.budget_exhausted() { EXIT_BUDGET } else { 0 })
        }
        Command::Compare => {
            let config = load(common)?;
            let rows = compare_variants(&config)?;
            let path = out_dir(common, Some(&config)).join(COMPARE_FILE);
            write_compare(&rows, &path)?;
            print_json(&rows)?;
            log::info!("comparison written to {}", path.display());
            Ok(0)
        }
        Command::Report => {
            let dir = out_dir(common, None);
            report(&dir)
        }
    }
}

fn plan(config: &CampaignConfig) -> reprisk::Result<PlanReport> {
    let params = config.planner()?;
    let (p, q) = (config.p()?, config.q()?);
    let direct_n = params.epsilon.map(|_| direct_sample_size(params)).transpose()?;
    match config.variant {
        Variant::DirectSq => {
            let n = direct_n.expect("validated");
            if let Some(cap) = params.gamma_cap.filter(|&cap| n > cap) {
                return Err(Error::Infeasible { n, cap });
            }
            let grid = make_grid(params, GridVariant::Direct, config.grid_seed)?;
            Ok(PlanReport { variant: config.variant, n, plan: None, direct_n, grid })
        }
        _ => {
            let budget = plan_budget(&p, &q, params)?;
            if !budget.feasible {
                return Err(Error::Infeasible { n: budget.n, cap: params.gamma_cap.unwrap_or(u64::MAX) });
            }
            let grid = make_grid(params, GridVariant::Alg3, config.grid_seed)?;
            Ok(PlanReport { variant: Variant::Alg3, n: budget.n, plan: Some(budget), direct_n, grid })
        }
    }
}

fn report(dir: &Path) -> reprisk::Result<u8> {
    if !dir.join(reprisk::harness::TRIALS_FILE).exists() {
        return Err(Error::Config(format!("no trials report in {}", dir.display())));
    }
    let table = reaggregate(dir)?;
    print_json(&table)?;
    Ok(if table.iter().any(|s| s.unterminated_trials > 0) { EXIT_BUDGET } else { 0 })
}
