//! The four subcommands. Each takes an already-parsed scenario file plus a
//! resolved output directory, runs the work, and writes artifacts.

use std::fs;
use std::path::Path;

use serde::Serialize;

use recloop_core::{
    agent_utility, distribution_distance, improvement_suite, limits_suite, monotonicity_suite,
    oracle_equivalence_suite, platform_payoff, run, run_population, run_sweep, utility_series,
    MonotonicityGrid, PropertyOutcome,
};

use crate::artifacts::{
    write_agents_csv, write_blocks_csv, write_histogram_csv, write_json, write_sweep_csv,
    write_trace_csv, write_utilities_csv, Metadata,
};
use crate::config::{PopulationFile, RunFile, SweepFile};
use crate::error::{CliError, CliResult};

/// Sampled tuples per policy for the oracle-equivalence suite (three rows,
/// so 240 tuples in total).
pub const EQUIVALENCE_TUPLES_PER_POLICY: u32 = 80;
/// Horizon for the limit and improvement suites: 1250 blocks of 8 steps is
/// the 10^4-step horizon the long-run tolerances are calibrated for.
pub const LIMIT_SUITE_BLOCKS: u32 = 1250;
/// Seed for the equivalence suite when `--seed` is not given.
pub const DEFAULT_VERIFY_SEED: u64 = 24001;

fn ensure_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", path.display())))
}

#[derive(Debug, Serialize)]
struct RunSummary {
    policy: String,
    final_opinion: f64,
    final_drift: f64,
    agent_utility: f64,
    platform_payoff: f64,
    total_clicks: u64,
}

pub fn cmd_run(file: &RunFile, out: &Path) -> CliResult<()> {
    let scenario = file.resolve()?;
    ensure_dir(out)?;
    let mut artifacts = Vec::new();
    let mut summaries = Vec::new();
    for (name, spec) in &scenario.runs {
        let trace = run(spec)?;
        let series = utility_series(&trace, &spec.reward, spec.lambda)?;
        let trace_file = format!("trace_{name}.csv");
        write_trace_csv(&out.join(&trace_file), &trace)?;
        let blocks_file = format!("blocks_{name}.csv");
        write_blocks_csv(&out.join(&blocks_file), &trace)?;
        let utilities_file = format!("utilities_{name}.csv");
        write_utilities_csv(&out.join(&utilities_file), &series)?;
        artifacts.extend([trace_file, blocks_file, utilities_file]);
        summaries.push(RunSummary {
            policy: name.clone(),
            final_opinion: trace.final_opinion,
            final_drift: (trace.final_opinion - spec.x0.value()).abs(),
            agent_utility: agent_utility(&trace, &spec.reward, spec.lambda)?,
            platform_payoff: platform_payoff(&trace, &spec.reward)?,
            total_clicks: trace.steps.iter().filter(|s| s.clicked).count() as u64,
        });
    }
    write_json(&out.join("summary.json"), &summaries)?;
    artifacts.push("summary.json".into());
    write_json(
        &out.join("metadata.json"),
        &Metadata { command: "run", config: &scenario.resolved, artifacts },
    )?;
    for s in &summaries {
        println!(
            "{}: final_opinion={:.6} drift={:.6} agent_utility={:.6} platform_payoff={:.6}",
            s.policy, s.final_opinion, s.final_drift, s.agent_utility, s.platform_payoff
        );
    }
    println!("artifacts written to {}", out.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct SweepSummary {
    parameter: String,
    grid_points: usize,
    policies: Vec<String>,
    rows: usize,
}

pub fn cmd_sweep(file: &SweepFile, out: &Path) -> CliResult<()> {
    let scenario = file.resolve()?;
    ensure_dir(out)?;
    let rows = run_sweep(&scenario.spec)?;
    write_sweep_csv(&out.join("sweep.csv"), &rows)?;
    let summary = SweepSummary {
        parameter: file.parameter.clone(),
        grid_points: scenario.spec.grid.len(),
        policies: scenario.spec.base.policies.iter().map(|p| p.name().into()).collect(),
        rows: rows.len(),
    };
    write_json(&out.join("summary.json"), &summary)?;
    write_json(
        &out.join("metadata.json"),
        &Metadata {
            command: "sweep",
            config: &scenario.resolved,
            artifacts: vec!["sweep.csv".into(), "summary.json".into()],
        },
    )?;
    println!(
        "swept {} over {} grid points x {} policies ({} rows)",
        summary.parameter,
        summary.grid_points,
        summary.policies.len(),
        summary.rows
    );
    println!("artifacts written to {}", out.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct PopulationSummary {
    policy: String,
    count: u32,
    mean_final: f64,
    w_final_innate: f64,
    w_final_rec: f64,
    w_innate_rec: f64,
}

pub fn cmd_population(file: &PopulationFile, out: &Path) -> CliResult<()> {
    let scenario = file.resolve()?;
    ensure_dir(out)?;
    let mut artifacts = Vec::new();
    let mut summaries = Vec::new();
    for (name, spec) in &scenario.populations {
        let result = run_population(spec)?;
        let agents_file = format!("agents_{name}.csv");
        write_agents_csv(
            &out.join(&agents_file),
            &result.innates,
            &result.recommendations,
            &result.finals,
        )?;
        artifacts.push(agents_file);
        for (label, hist) in [
            ("innate", &result.innate_hist),
            ("recommendation", &result.rec_hist),
            ("final", &result.final_hist),
        ] {
            let file_name = format!("hist_{label}_{name}.csv");
            write_histogram_csv(&out.join(&file_name), hist)?;
            artifacts.push(file_name);
        }
        summaries.push(PopulationSummary {
            policy: name.clone(),
            count: spec.count,
            mean_final: result.finals.iter().sum::<f64>() / result.finals.len() as f64,
            w_final_innate: distribution_distance(&result.final_hist, &result.innate_hist)?,
            w_final_rec: distribution_distance(&result.final_hist, &result.rec_hist)?,
            w_innate_rec: distribution_distance(&result.innate_hist, &result.rec_hist)?,
        });
    }
    write_json(&out.join("summary.json"), &summaries)?;
    artifacts.push("summary.json".into());
    write_json(
        &out.join("metadata.json"),
        &Metadata { command: "population", config: &scenario.resolved, artifacts },
    )?;
    for s in &summaries {
        println!(
            "{}: {} agents, W(final, innate)={:.4} W(final, rec)={:.4} W(innate, rec)={:.4}",
            s.policy, s.count, s.w_final_innate, s.w_final_rec, s.w_innate_rec
        );
    }
    println!("artifacts written to {}", out.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    suite: String,
    passed: bool,
    outcomes: Vec<PropertyOutcome>,
}

pub const SUITES: &[&str] =
    &["oracle-equivalence", "monotonicity", "limits", "improvement", "all"];

fn suite_outcomes(suite: &str, seed: u64) -> CliResult<Vec<PropertyOutcome>> {
    let outcomes = match suite {
        "oracle-equivalence" => oracle_equivalence_suite(seed, EQUIVALENCE_TUPLES_PER_POLICY),
        "monotonicity" => monotonicity_suite(&MonotonicityGrid::default()),
        "limits" => limits_suite(LIMIT_SUITE_BLOCKS),
        "improvement" => improvement_suite(LIMIT_SUITE_BLOCKS),
        "all" => {
            let mut all = oracle_equivalence_suite(seed, EQUIVALENCE_TUPLES_PER_POLICY);
            all.extend(monotonicity_suite(&MonotonicityGrid::default()));
            all.extend(limits_suite(LIMIT_SUITE_BLOCKS));
            all.extend(improvement_suite(LIMIT_SUITE_BLOCKS));
            all
        }
        other => {
            return Err(CliError::validation(format!(
                "unknown suite {other:?} (expected one of {})",
                SUITES.join(", ")
            )))
        }
    };
    Ok(outcomes)
}

pub fn cmd_verify(suite: &str, seed: u64, out: Option<&Path>) -> CliResult<()> {
    let outcomes = suite_outcomes(suite, seed)?;
    for o in &outcomes {
        let status = if o.pass { "pass" } else { "FAIL" };
        match &o.counterexample {
            Some(ce) => println!("{status}  {} [{}]: {ce}", o.property, o.grid_line),
            None => println!("{status}  {} [{}]", o.property, o.grid_line),
        }
    }
    let passed = outcomes.iter().all(|o| o.pass);
    let failed = outcomes.len() - outcomes.iter().filter(|o| o.pass).count();
    if let Some(dir) = out {
        ensure_dir(dir)?;
        let report = VerifyReport { suite: suite.into(), passed, outcomes };
        write_json(&dir.join("report.json"), &report)?;
        println!("report written to {}", dir.join("report.json").display());
    }
    if passed {
        println!("suite {suite}: all properties hold");
        Ok(())
    } else {
        Err(CliError::suite(format!("suite {suite}: {failed} property check(s) failed")))
    }
}
