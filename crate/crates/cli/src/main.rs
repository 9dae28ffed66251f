//! `bankreg`: drive the banked-cache bandwidth regulation simulator from
//! scenario and suite files.
//!
//! Exit codes: 0 on success, 1 for usage and file-format errors, 2 for
//! simulation or I/O failures, 3 when `suite --check` finds a failing
//! check.

use anyhow::Context;
use bankreg::audit::{audit_budget, replay_against_reference};
use bankreg::scenario::RawDoc;
use bankreg::suite::{ExperimentPlan, SuiteError, Variation};
use bankreg::{
    parse_plan, parse_scenario, register_report, run_report, run_suite, run_traced, suite_csv,
    Scenario,
};
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "bankreg",
    version,
    about = "Simulate bandwidth regulation of a multi-bank shared cache"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario file and print a per-core report.
    Run {
        /// Scenario file.
        scenario: PathBuf,
        /// Override the scenario's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run every variation of a suite file and emit CSV results.
    Suite {
        /// Suite file.
        suite: PathBuf,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Evaluate the suite's checks; any failure exits with code 3.
        #[arg(long)]
        check: bool,
        /// Omit the `# generated <time>` header (byte-identical reruns).
        #[arg(long)]
        no_timestamp: bool,
        /// Worker threads for running variations (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run a scenario once per value of one parameter and emit CSV.
    Sweep {
        /// Scenario file.
        scenario: PathBuf,
        /// Parameter to vary, as `section.key` (e.g. `domain.1.budget`).
        #[arg(long)]
        param: String,
        /// Comma-separated values to sweep over.
        #[arg(long)]
        values: String,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Omit the `# generated <time>` header.
        #[arg(long)]
        no_timestamp: bool,
        /// Override the scenario's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run one scenario and print each core's per-bank access histogram.
    Profile {
        /// Scenario file.
        scenario: PathBuf,
        /// Only show this core.
        #[arg(long)]
        core: Option<usize>,
        /// Override the scenario's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the regulator's register file for a scenario.
    DumpRegisters {
        /// Scenario file.
        scenario: PathBuf,
    },
}

/// Failures sorted by exit code.
enum CliError {
    /// Bad invocation or unparsable input file: exit 1.
    Usage(String),
    /// Simulation, audit, or I/O failure: exit 2.
    Run(String),
    /// `--check` found failing checks: exit 3.
    ChecksFailed,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Run(_) => 2,
            CliError::ChecksFailed => 3,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests are not errors
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(msg) | CliError::Run(msg) => eprintln!("error: {msg}"),
                CliError::ChecksFailed => {}
            }
            ExitCode::from(e.code())
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(|e| CliError::Usage(format!("{e:#}")))
}

fn load_scenario(path: &Path, seed: Option<u64>) -> Result<Scenario, CliError> {
    let text = read_file(path)?;
    let mut scenario =
        parse_scenario(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    Ok(scenario)
}

/// Runs a scenario with tracing and re-verifies the trace against the
/// budget audit and the reference model before reporting anything.
fn run_audited(scenario: &Scenario) -> Result<bankreg::SimResult, CliError> {
    let (result, trace) = run_traced(scenario).map_err(|e| CliError::Run(e.to_string()))?;
    audit_budget(&trace, scenario)
        .and_then(|()| replay_against_reference(&trace, scenario))
        .map_err(|e| CliError::Run(format!("regulator self-check failed: {e}")))?;
    Ok(result)
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(|e| CliError::Run(format!("{e:#}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn suite_error(e: SuiteError) -> CliError {
    match e {
        SuiteError::Parse(_) | SuiteError::Plan { .. } | SuiteError::BadVariation { .. } => {
            CliError::Usage(e.to_string())
        }
        SuiteError::Sim { .. } | SuiteError::Audit { .. } => CliError::Run(e.to_string()),
    }
}

fn run_plan(plan: &ExperimentPlan, jobs: Option<usize>) -> Result<bankreg::SuiteOutcome, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Run(format!("building worker pool: {e}")))?;
    pool.install(|| run_suite(plan)).map_err(suite_error)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Run { scenario, seed } => {
            let scenario = load_scenario(&scenario, seed)?;
            let result = run_audited(&scenario)?;
            print!("{}", run_report(&scenario, &result));
            Ok(())
        }
        Cmd::Suite {
            suite,
            out,
            check,
            no_timestamp,
            jobs,
        } => {
            let text = read_file(&suite)?;
            let plan = parse_plan(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", suite.display())))?;
            let outcome = run_plan(&plan, jobs)?;
            write_out(out.as_deref(), &suite_csv(&outcome, !no_timestamp))?;
            if check {
                for c in &outcome.checks {
                    let verdict = if c.passed { "PASS" } else { "FAIL" };
                    eprintln!("check {}: {verdict} ({})", c.name, c.detail);
                }
                if !outcome.all_checks_passed() {
                    return Err(CliError::ChecksFailed);
                }
            }
            Ok(())
        }
        Cmd::Sweep {
            scenario,
            param,
            values,
            out,
            no_timestamp,
            seed,
        } => {
            let text = read_file(&scenario)?;
            let mut base = RawDoc::parse(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", scenario.display())))?;
            if let Some(seed) = seed {
                base.set("run", "seed", &seed.to_string());
            }
            let (section, key) = param.rsplit_once('.').ok_or_else(|| {
                CliError::Usage(format!("--param `{param}` must be `section.key`"))
            })?;
            let variations: Vec<Variation> = values
                .split(',')
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .map(|value| Variation {
                    name: format!("{key}_{}", sanitize(value)),
                    overrides: vec![(section.to_string(), key.to_string(), value.to_string())],
                })
                .collect();
            if variations.is_empty() {
                return Err(CliError::Usage("--values lists no values".into()));
            }
            let plan = ExperimentPlan {
                name: format!("sweep_{}", sanitize(&param)),
                baseline: None,
                base,
                variations,
                checks: Vec::new(),
            };
            let outcome = run_plan(&plan, None)?;
            write_out(out.as_deref(), &suite_csv(&outcome, !no_timestamp))
        }
        Cmd::Profile {
            scenario,
            core,
            seed,
        } => {
            let scenario = load_scenario(&scenario, seed)?;
            if let Some(c) = core {
                if c >= scenario.cores.len() {
                    return Err(CliError::Usage(format!(
                        "--core {c} out of range ({} cores)",
                        scenario.cores.len()
                    )));
                }
            }
            let result = run_audited(&scenario)?;
            for (c, counts) in result.per_bank_access.iter().enumerate() {
                if core.is_some_and(|only| only != c) {
                    continue;
                }
                let total: u64 = counts.iter().sum();
                let shares: Vec<String> = counts
                    .iter()
                    .map(|&n| {
                        if total == 0 {
                            "0.0%".to_string()
                        } else {
                            format!("{:.1}%", 100.0 * n as f64 / total as f64)
                        }
                    })
                    .collect();
                println!(
                    "core {c}: {total} accesses, per bank {counts:?} ({})",
                    shares.join(", ")
                );
            }
            Ok(())
        }
        Cmd::DumpRegisters { scenario } => {
            let scenario = load_scenario(&scenario, None)?;
            print!("{}", register_report(&scenario));
            Ok(())
        }
    }
}

fn sanitize(value: &str) -> String {
    value
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}
