//! CSV and JSON artifact writers. All floats are serialized with 17
//! significant digits so artifacts replay bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use recloop_core::{Histogram, OpinionTrace, SweepRow, UtilityPoint};

use crate::error::{CliError, CliResult};

/// `{:.16e}` prints one leading digit plus 16 fractional digits: exactly the
/// 17 significant digits that make `f64` round-trips lossless.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::io(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_file(path, &text)
}

pub fn write_trace_csv(path: &Path, trace: &OpinionTrace) -> CliResult<()> {
    let mut out = String::from("k,x,u,clk,agent_reward,platform_reward\n");
    for s in &trace.steps {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            s.k,
            fmt_f64(s.x),
            fmt_f64(s.u),
            u8::from(s.clicked),
            fmt_f64(s.agent_reward),
            fmt_f64(s.platform_reward),
        );
    }
    write_file(path, &out)
}

pub fn write_blocks_csv(path: &Path, trace: &OpinionTrace) -> CliResult<()> {
    let mut out = String::from("i,x_block,T_i\n");
    for b in &trace.blocks {
        let _ = writeln!(out, "{},{},{}", b.index, fmt_f64(b.x_start), b.t);
    }
    write_file(path, &out)
}

pub fn write_utilities_csv(path: &Path, series: &[UtilityPoint]) -> CliResult<()> {
    let mut out = String::from("k,agent_utility,platform_payoff\n");
    for p in series {
        let _ = writeln!(out, "{},{},{}", p.k, fmt_f64(p.agent_utility), fmt_f64(p.platform_payoff));
    }
    write_file(path, &out)
}

pub fn write_histogram_csv(path: &Path, hist: &Histogram) -> CliResult<()> {
    let mut out = String::from("bin_left,bin_right,count\n");
    for (k, count) in hist.counts().iter().enumerate() {
        let (left, right) = hist.cell(k as u32);
        let _ = writeln!(out, "{},{},{}", fmt_f64(left), fmt_f64(right), count);
    }
    write_file(path, &out)
}

pub fn write_agents_csv(
    path: &Path,
    innates: &[f64],
    recommendations: &[f64],
    finals: &[f64],
) -> CliResult<()> {
    let mut out = String::from("idx,x0,u0,x_final\n");
    for (idx, ((x0, u0), xf)) in
        innates.iter().zip(recommendations).zip(finals).enumerate()
    {
        let _ = writeln!(out, "{},{},{},{}", idx, fmt_f64(*x0), fmt_f64(*u0), fmt_f64(*xf));
    }
    write_file(path, &out)
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> CliResult<()> {
    let mut out = String::from("value,policy,final_drift,agent_utility,platform_payoff\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(r.value),
            r.policy,
            fmt_f64(r.final_drift),
            fmt_f64(r.agent_utility),
            fmt_f64(r.platform_payoff),
        );
    }
    write_file(path, &out)
}

/// Sidecar written next to every artifact set. Feeding it back through
/// `--config` reproduces the artifacts byte for byte.
#[derive(Debug, Serialize)]
pub struct Metadata<T: Serialize> {
    pub command: &'static str,
    pub config: T,
    pub artifacts: Vec<String>,
}
