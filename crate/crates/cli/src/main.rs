use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dsvrp::controller::{run_online, ClockMode, ControllerConfig, DecisionRule};
use dsvrp::experiment::{
    aggregate, fig1_demo, load_reports, performance_profile, profile_csv, run_campaign, GenerateSpec, Manifest,
    RunReport,
};
use dsvrp::instance::{read_dynamic_instance, write_dynamic_instance};
use dsvrp::Strategy;

#[derive(Parser)]
#[command(name = "dsvrp", version, about = "Online routing with stochastic requests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dynamic instance of a benchmark class.
    Generate(GenerateArgs),
    /// Run one algorithm on one instance and print its report.
    Run(RunArgs),
    /// Run every run of a TOML manifest.
    Campaign(CampaignArgs),
    /// Rebuild tables and profiles from a campaign's reports.
    Profile(ProfileArgs),
    /// Print the nonanticipation example values.
    Fig1,
}

#[derive(Args)]
struct GenerateArgs {
    /// Instance class: 1-4 or 6.
    #[arg(long)]
    class: u8,
    /// Seed of the request draw.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seed of the synthetic base instance.
    #[arg(long, default_value_t = 1)]
    base_seed: u64,
    /// Solomon-format base instance instead of a synthetic one.
    #[arg(long)]
    base_file: Option<PathBuf>,
    #[arg(long)]
    customers: Option<usize>,
    #[arg(long)]
    vehicles: Option<usize>,
    #[arg(long)]
    horizon: Option<u32>,
    /// Output file; stdout if absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Dynamic instance file.
    instance: PathBuf,
    /// GSA-df, GSA-dfr, GSA-ro, GSA-wf, GSA-cw, GLS-df or EXP.
    #[arg(long, short, default_value = "GSA-df")]
    algorithm: String,
    /// Overrides the algorithm's decision rule: gsa, gls or expectation.
    #[arg(long)]
    rule: Option<String>,
    /// Overrides the algorithm's waiting strategy: df, wf, cw or ro.
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Enables relocation visits.
    #[arg(long)]
    relocation: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// logical (budgets count evaluations) or wallclock (milliseconds).
    #[arg(long, default_value = "logical")]
    clock: ClockMode,
    #[arg(long)]
    pool_size: Option<usize>,
    #[arg(long)]
    resample_period: Option<usize>,
    #[arg(long)]
    insertion_budget: Option<usize>,
    #[arg(long)]
    offline_budget: Option<usize>,
    #[arg(long)]
    epoch_budget: Option<usize>,
    /// Writes the decision log as JSON.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Writes the per-epoch event log as JSON lines.
    #[arg(long)]
    events: Option<PathBuf>,
}

#[derive(Args)]
struct CampaignArgs {
    manifest: PathBuf,
    /// Parent of the campaign directory.
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
    /// Concurrent runs.
    #[arg(long, short, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct ProfileArgs {
    /// Campaign directory containing `reports/`.
    campaign: PathBuf,
    /// Print the one-decimal table instead of the profile.
    #[arg(long)]
    table: bool,
    #[arg(long)]
    rounded: bool,
}

/// Exit status: 1 for anything the caller got wrong, 2 when a run fails.
enum Failure {
    Usage(String),
    Run(String),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a),
        Command::Campaign(a) => campaign(a),
        Command::Profile(a) => profile(a),
        Command::Fig1 => fig1(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Run(m)) => {
            eprintln!("run failed: {m}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

fn generate(a: GenerateArgs) -> Result<(), Failure> {
    let spec = GenerateSpec {
        class: a.class,
        seed: a.seed,
        base_seed: a.base_seed,
        base_file: a.base_file,
        customers: a.customers,
        vehicles: a.vehicles,
        horizon: a.horizon,
    };
    let inst = spec.build(Path::new(".")).map_err(|e| Failure::Usage(e.to_string()))?;
    let text = write_dynamic_instance(&inst);
    match a.out {
        Some(path) => write(&path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(a: RunArgs) -> Result<(), Failure> {
    let inst = read_dynamic_instance(&read(&a.instance)?).map_err(|e| Failure::Usage(format!("{}: {e}", a.instance.display())))?;
    let mut cfg = ControllerConfig::for_algorithm(&a.algorithm).map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(rule) = &a.rule {
        cfg.rule = match rule.to_ascii_lowercase().as_str() {
            "gsa" => DecisionRule::Gsa,
            "gls" => DecisionRule::Gls,
            "expectation" | "exp" => DecisionRule::Expectation,
            other => return Err(Failure::Usage(format!("unknown rule {other:?} (expected gsa, gls or expectation)"))),
        };
    }
    if let Some(s) = a.strategy {
        cfg.strategy = s;
    }
    cfg.relocation |= a.relocation;
    cfg.seed = a.seed;
    cfg.clock = a.clock;
    macro_rules! set {
        ($($field:ident),*) => { $(if let Some(v) = a.$field { cfg.$field = v; })* };
    }
    set!(pool_size, resample_period, insertion_budget, offline_budget, epoch_budget);
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;

    let out = run_online(&inst, &cfg).map_err(|e| Failure::Run(e.to_string()))?;
    let mut report = RunReport::from_output(inst.name(), &cfg, &out);
    if let Some(path) = &a.log {
        write(path, &out.log.to_json())?;
    }
    if let Some(path) = &a.events {
        write(path, &out.events_jsonl())?;
        report.event_log_path = Some(path.display().to_string());
    }
    print!("{}", json(&report));
    Ok(())
}

fn campaign(a: CampaignArgs) -> Result<(), Failure> {
    let manifest = Manifest::parse(&read(&a.manifest)?).map_err(|e| Failure::Usage(e.to_string()))?;
    let base = a.manifest.parent().unwrap_or(Path::new("."));
    let summary = run_campaign(&manifest, base, &a.out, a.jobs).map_err(|e| match e {
        dsvrp::experiment::CampaignError::Io { .. } => Failure::Run(e.to_string()),
        other => Failure::Usage(other.to_string()),
    })?;
    println!("{}", summary.dir.display());
    let failed: Vec<&RunReport> = summary.reports.iter().filter(|r| !r.succeeded()).collect();
    for r in &failed {
        eprintln!("{} {} seed {}: {}", r.instance_id, r.algorithm_id, r.seed, r.error.as_deref().unwrap_or(""));
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Run(format!("{} of {} runs failed", failed.len(), summary.reports.len())))
    }
}

fn profile(a: ProfileArgs) -> Result<(), Failure> {
    let reports = load_reports(&a.campaign).map_err(|e| Failure::Usage(e.to_string()))?;
    if reports.is_empty() {
        return Err(Failure::Usage(format!("no reports under {}", a.campaign.display())));
    }
    let table = aggregate(&reports);
    if a.table {
        print!("{}", table.to_csv(a.rounded));
    } else {
        print!("{}", profile_csv(&performance_profile(&table)));
    }
    Ok(())
}

fn fig1() -> Result<(), Failure> {
    let demo = fig1_demo().map_err(|e| Failure::Run(e.to_string()))?;
    print!("{}", json(&demo));
    Ok(())
}
