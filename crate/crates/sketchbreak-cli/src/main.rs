//! `sketchbreak` command-line front end: runs attack campaigns, the lemma
//! validation suite, and the χ² advantage table from a JSON config file.

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use sketchbreak_core::experiment::{
    chi2_table, run_campaign, validate_lemmas_with_fault_check, write_chi2_csv, write_jsonl,
    write_summary_csv, ExperimentConfig, Scenario,
};
use std::fs;
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "sketchbreak", about = "Adaptive attacks on linear sketches")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON experiment configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed (SKETCHBREAK_SEED takes precedence over the
    /// config file; this flag takes precedence over both).
    #[arg(long)]
    seed: Option<u64>,
    /// Number of worker threads for the campaign.
    #[arg(long)]
    jobs: Option<usize>,
    /// External oracle command; queried over stdin/stdout JSON lines. Pass it
    /// last: it greedily consumes the remaining arguments (including flags
    /// destined for the child process).
    #[arg(long, num_args = 1.., value_name = "ARGV", allow_hyphen_values = true)]
    oracle_cmd: Option<Vec<String>>,
    /// Record per-cell diagnostics (true-rowspace projections) in the trace.
    #[arg(long)]
    diagnostics: bool,
}

#[derive(Subcommand)]
enum Command {
    /// GapNorm attack campaign (weak or strong certificates via `q`).
    Attack(CommonArgs),
    /// ℓp-estimation attack campaign.
    Lp(CommonArgs),
    /// Sparse-recovery attack campaign.
    Recovery(CommonArgs),
    /// Emit the χ² advantage table Δ(s) as CSV.
    Chi2Table(CommonArgs),
    /// Run the numeric lemma validation suite.
    Validate(CommonArgs),
}

fn load_config(args: &CommonArgs, scenario: Scenario) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    cfg.scenario = scenario;
    if let Ok(env_seed) = std::env::var("SKETCHBREAK_SEED") {
        cfg.seed = env_seed
            .parse()
            .context("SKETCHBREAK_SEED must be an unsigned integer")?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(argv) = &args.oracle_cmd {
        cfg.oracle_cmd = Some(argv.clone());
    }
    if args.diagnostics {
        cfg.diagnostics = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn campaign(args: &CommonArgs, scenario: Scenario) -> Result<()> {
    let cfg = load_config(args, scenario)?;
    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .ok();
    }
    let result = run_campaign(&cfg)?;
    let stem = cfg
        .output_path
        .clone()
        .unwrap_or_else(|| "campaign".to_string());
    let trace_path = format!("{stem}.jsonl");
    let summary_path = format!("{stem}.csv");
    let mut trace = fs::File::create(&trace_path)?;
    write_jsonl(&mut trace, &result)?;
    let mut summary = fs::File::create(&summary_path)?;
    write_summary_csv(&mut summary, &result)?;
    let s = &result.summary;
    println!(
        "campaign complete: {}/{} trials succeeded (rate {:.3}), median rounds {:.1}, \
         median queries {:.0}; trace -> {trace_path}, summary -> {summary_path}",
        s.successes, s.trials, s.success_rate, s.median_rounds, s.median_queries
    );
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Attack(args) => campaign(args, Scenario::GapnormAttack)?,
        Command::Lp(args) => campaign(args, Scenario::LpAttack)?,
        Command::Recovery(args) => campaign(args, Scenario::SparseRecoveryAttack)?,
        Command::Chi2Table(args) => {
            let cfg = load_config(args, Scenario::Chi2Table)?;
            let table = chi2_table(cfg.d, cfg.b, 512)?;
            let path = cfg
                .output_path
                .clone()
                .unwrap_or_else(|| "chi2_table.csv".to_string());
            let mut out = fs::File::create(&path)?;
            write_chi2_csv(&mut out, &table)?;
            println!("wrote {} rows to {path}", table.len());
        }
        Command::Validate(args) => {
            let cfg = load_config(args, Scenario::LemmaValidation)?;
            let checks = validate_lemmas_with_fault_check(cfg.seed)?;
            let mut failed = 0;
            let mut out = std::io::stdout().lock();
            for c in &checks {
                writeln!(
                    out,
                    "{} {} (margin {:+.3e}): {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.margin,
                    c.detail
                )?;
                if !c.passed {
                    failed += 1;
                }
            }
            if failed > 0 {
                anyhow::bail!("{failed} lemma checks failed");
            }
        }
    }
    Ok(())
}
