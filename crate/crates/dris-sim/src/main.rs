//! Command-line front end: closed-form sweeps, Monte-Carlo sweeps with
//! cross-validation, worked estimation timelines, and the acceptance suite.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use dris_sim::channel::derive_link_budget;
use dris_sim::harness::{
    closed_forms, cross_validate, render_cep_demo_csv, render_closed_csv, render_sweep_csv,
    run_all, run_cep_demo, run_sweep, write_text, ClosedForms, SweepAxis,
};
use dris_sim::harness::apply_axis;
use dris_sim::scenario::{default_config, load_scenario, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "dris-sim",
    version,
    about = "Link-level simulator for surface-in-the-middle attacks and the \
non-reciprocal surface defense"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the closed-form link and security figures along a sweep axis.
    Analyze(AnalyzeArgs),
    /// Run Monte-Carlo trials along a sweep axis, write the results next to
    /// the closed forms, and print a consistency report.
    Simulate(SimulateArgs),
    /// Walk one channel-estimation timeline and dump every stage average,
    /// recovered estimate and verdict next to ground truth.
    CepDemo(CepDemoArgs),
    /// Run the acceptance suite and report one line per check.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct ConfigArg {
    /// Scenario file (key = value lines); defaults to the built-in scenario.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Axis to sweep: tx_power_dbm, noise_dbm, m_a, m_e or eta_s.
    #[arg(long)]
    sweep: String,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    values: Vec<f64>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Axis to sweep: tx_power_dbm, noise_dbm, m_a, m_e or eta_s.
    #[arg(long)]
    sweep: String,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    values: Vec<f64>,
    /// Monte-Carlo trials per axis value; defaults to the scenario's count.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CepDemoArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Timeline to walk: opt1 (clean), opt2 (always-on adversary) or
    /// polluted (co-activation).
    #[arg(long)]
    scenario: String,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    config: ConfigArg,
}

fn load_config(arg: &ConfigArg) -> anyhow::Result<ScenarioConfig> {
    let mut cfg = match &arg.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            load_scenario(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => default_config(),
    };
    if let Ok(seed) = std::env::var("DRIS_SEED") {
        cfg.run.seed = seed
            .trim()
            .parse()
            .context("DRIS_SEED must be an unsigned 64-bit integer")?;
    }
    Ok(cfg)
}

fn parse_axis(name: &str) -> anyhow::Result<SweepAxis> {
    name.parse::<SweepAxis>().map_err(|e| anyhow!(e))
}

fn analyze(args: &AnalyzeArgs) -> anyhow::Result<ExitCode> {
    let cfg = load_config(&args.config)?;
    let axis = parse_axis(&args.sweep)?;
    let mut rows: Vec<(f64, ClosedForms)> = Vec::with_capacity(args.values.len());
    for &value in &args.values {
        let mut point = cfg.clone();
        apply_axis(&mut point, axis, value)?;
        let budget = derive_link_budget(&point)?;
        rows.push((value, closed_forms(&point, &budget)?));
    }
    write_text(&args.out, &render_closed_csv(&cfg, axis, &rows))?;
    println!("wrote {} closed-form rows to {}", rows.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn simulate(args: &SimulateArgs) -> anyhow::Result<ExitCode> {
    let cfg = load_config(&args.config)?;
    let axis = parse_axis(&args.sweep)?;
    let trials = args.trials.unwrap_or(cfg.run.trials);
    let rows = run_sweep(&cfg, axis, &args.values, trials, args.workers)?;
    write_text(&args.out, &render_sweep_csv(&cfg, axis, &rows))?;
    println!(
        "wrote {} rows ({} trials each) to {}",
        rows.len(),
        trials,
        args.out.display()
    );
    let mut consistent = true;
    for row in &rows {
        let report = cross_validate(&cfg, row);
        for line in report.lines() {
            println!("{line}");
        }
        consistent &= report.all_pass;
    }
    if consistent {
        println!("cross-validation: all {} axis points consistent", rows.len());
    } else {
        println!("cross-validation: deviations found; see the report above");
    }
    Ok(ExitCode::SUCCESS)
}

fn cep_demo(args: &CepDemoArgs) -> anyhow::Result<ExitCode> {
    let cfg = load_config(&args.config)?;
    let demo = run_cep_demo(&cfg, &args.scenario)?;
    write_text(&args.out, &render_cep_demo_csv(&cfg, &demo))?;
    println!("wrote {} timeline to {}", demo.label, args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn validate(args: &ValidateArgs) -> anyhow::Result<ExitCode> {
    let cfg = load_config(&args.config)?;
    let results = run_all(&cfg);
    let mut failed = 0usize;
    for result in &results {
        println!("{}", result.line());
        failed += usize::from(!result.ok());
    }
    if failed == 0 {
        println!("acceptance: all {} checks passed", results.len());
        Ok(ExitCode::SUCCESS)
    } else {
        println!("acceptance: {failed} of {} checks failed", results.len());
        Ok(ExitCode::FAILURE)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = match &cli.command {
        Command::Analyze(args) => analyze(args),
        Command::Simulate(args) => simulate(args),
        Command::CepDemo(args) => cep_demo(args),
        Command::Validate(args) => validate(args),
    };
    match run {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
