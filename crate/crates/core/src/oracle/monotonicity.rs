//! Order and shape properties of the boundary weights, checked on a grid.
//!
//! The suite emits exactly seven rows:
//!
//! * `alpha-monotonicity/{fixed,decreasing,adaptive}`: at every checked
//!   block index, `upsilon` strictly decreases as alpha grows along each
//!   beta line (stronger anchoring leaves less room for the
//!   recommendation).
//! * `block-index-monotonicity`: under the constant schedule `upsilon` is
//!   strictly increasing and concave in the block index. Under both
//!   shrinking schedules it is strictly *decreasing* from the first
//!   boundary on: one block's drift weight is at most `B * b_max <= b/2`
//!   of the previous one once the count drops, so each boundary forgets
//!   most of the accumulated drift. The increasing-concave shape lives in
//!   the per-block contribution series instead: summing contributions from
//!   the newest block backward gives strictly increasing, strictly concave
//!   partial sums. Both facts are checked here.
//! * `t0-monotonicity`: `upsilon` strictly increases with the initial
//!   click count.
//! * `kappa-monotonicity` / `tau-monotonicity`: faster-shrinking schedules
//!   give strictly smaller `upsilon` from block 2 on, and identical
//!   `upsilon` at block 1 (the first block never saw a decrement).

use crate::dynamics::DynamicsParams;
use crate::error::Result;
use crate::report::PropertyOutcome;

use super::{block_coeffs, upsilon_adaptive, upsilon_decreasing, upsilon_fixed};

/// Block indices probed on the fixed-schedule and t0 lines.
const SPREAD_INDICES: [u32; 3] = [1, 3, 6];
/// Block indices probed on the shrinking-schedule lines (3 transient
/// blocks plus the first steady one at the default grid).
const SHRINK_INDICES: [u32; 4] = [1, 2, 3, 4];
/// Strict decrease in the block index holds until the steady recursion
/// saturates in f64; at the default parameters the consecutive difference
/// falls below one ulp of the fixed point after this index.
const ADAPTIVE_STRICT_END: u32 = 7;

/// Parameter grid for [`monotonicity_suite`].
#[derive(Debug, Clone)]
pub struct MonotonicityGrid {
    pub s: u32,
    pub t0: u32,
    /// Parameters for the single-line rows (block index, t0, kappa, tau).
    pub base: DynamicsParams,
    /// Beta lines for the alpha sweeps.
    pub betas: Vec<f64>,
    /// Alpha starts at beta (the smallest admissible value) on each line.
    pub alpha_step: f64,
    /// Alpha sweeps stop at alpha + beta <= this; keeping the cap below 1
    /// keeps eta < 1 and the comparisons strict.
    pub alpha_cap: f64,
    pub kappas: Vec<f64>,
    pub taus: Vec<u32>,
    /// Shrink factor used on rows that need one fixed decreasing schedule.
    pub kappa_base: f64,
    /// Decrement used on rows that need one fixed adaptive schedule.
    pub tau_base: u32,
    /// Stabilization block imposed on the analytic adaptive schedules.
    pub m_ad: u32,
    pub max_index: u32,
    /// Slack for comparisons expected to be equalities.
    pub slack: f64,
}

impl Default for MonotonicityGrid {
    fn default() -> Self {
        MonotonicityGrid {
            s: 8,
            t0: 8,
            base: DynamicsParams::new(0.25, 0.2).expect("reference parameters are valid"),
            betas: vec![0.1, 0.2],
            alpha_step: 0.05,
            alpha_cap: 0.95,
            kappas: vec![2.0, 4.0, 8.0],
            taus: vec![1, 2, 3],
            kappa_base: 2.0,
            tau_base: 3,
            m_ad: 3,
            max_index: 8,
            slack: 1e-12,
        }
    }
}

/// Runs all seven property rows. A row fails on the first counterexample
/// or on any evaluation error inside its grid line.
pub fn monotonicity_suite(grid: &MonotonicityGrid) -> Vec<PropertyOutcome> {
    let mut rows = Vec::with_capacity(7);
    rows.push(outcome(
        "alpha-monotonicity/fixed",
        format!(
            "s={}, t0={}, beta in {:?}, alpha from beta step {} while alpha+beta <= {}, i in {:?}",
            grid.s, grid.t0, grid.betas, grid.alpha_step, grid.alpha_cap, SPREAD_INDICES
        ),
        alpha_row(grid, &SPREAD_INDICES, |p, i| {
            Ok(upsilon_fixed(p, grid.s, grid.t0, i)?.upsilon)
        }),
    ));
    rows.push(outcome(
        "alpha-monotonicity/decreasing",
        format!(
            "s={}, t0={}, kappa={}, beta in {:?}, alpha from beta step {} while alpha+beta <= {}, i in {:?}",
            grid.s, grid.t0, grid.kappa_base, grid.betas, grid.alpha_step, grid.alpha_cap,
            SHRINK_INDICES
        ),
        alpha_row(grid, &SHRINK_INDICES, |p, i| {
            Ok(upsilon_decreasing(p, grid.s, grid.t0, grid.kappa_base, i)?.upsilon)
        }),
    ));
    rows.push(outcome(
        "alpha-monotonicity/adaptive",
        format!(
            "s={}, t0={}, tau={}, m_ad={}, beta in {:?}, alpha from beta step {} while alpha+beta <= {}, i in {:?}",
            grid.s, grid.t0, grid.tau_base, grid.m_ad, grid.betas, grid.alpha_step,
            grid.alpha_cap, SHRINK_INDICES
        ),
        alpha_row(grid, &SHRINK_INDICES, |p, i| {
            Ok(upsilon_adaptive(p, grid.s, grid.t0, grid.tau_base, i, grid.m_ad)?.upsilon)
        }),
    ));
    rows.push(outcome(
        "block-index-monotonicity",
        format!(
            "alpha={}, beta={}, s={}, t0={}, i in 0..={}; kappa={}, tau={}, m_ad={}",
            grid.base.alpha(), grid.base.beta(), grid.s, grid.t0, grid.max_index,
            grid.kappa_base, grid.tau_base, grid.m_ad
        ),
        block_index_row(grid),
    ));
    rows.push(outcome(
        "t0-monotonicity",
        format!(
            "alpha={}, beta={}, s={}, t0 in 0..={}, i in {:?}",
            grid.base.alpha(), grid.base.beta(), grid.s, grid.s, SPREAD_INDICES
        ),
        t0_row(grid),
    ));
    rows.push(outcome(
        "kappa-monotonicity",
        format!(
            "alpha={}, beta={}, s={}, t0={}, kappa in {:?}, i in {:?}",
            grid.base.alpha(), grid.base.beta(), grid.s, grid.t0, grid.kappas, SHRINK_INDICES
        ),
        schedule_row(grid, &grid.kappas, |p, &kappa, i| {
            Ok(upsilon_decreasing(p, grid.s, grid.t0, kappa, i)?.upsilon)
        }),
    ));
    rows.push(outcome(
        "tau-monotonicity",
        format!(
            "alpha={}, beta={}, s={}, t0={}, tau in {:?}, m_ad={}, i in {:?}",
            grid.base.alpha(), grid.base.beta(), grid.s, grid.t0, grid.taus, grid.m_ad,
            SHRINK_INDICES
        ),
        schedule_row(grid, &grid.taus, |p, &tau, i| {
            Ok(upsilon_adaptive(p, grid.s, grid.t0, tau, i, grid.m_ad)?.upsilon)
        }),
    ));
    rows
}

fn outcome(property: &str, grid_line: String, check: Result<Option<String>>) -> PropertyOutcome {
    match check {
        Ok(None) => PropertyOutcome::pass(property, grid_line),
        Ok(Some(cx)) => PropertyOutcome::fail(property, grid_line, cx),
        Err(e) => PropertyOutcome::fail(property, grid_line, format!("evaluation error: {e}")),
    }
}

/// Alpha values admissible on one beta line: from beta (the smallest value
/// keeping alpha >= beta) in fixed steps while alpha + beta stays under
/// the cap.
fn alpha_line(grid: &MonotonicityGrid, beta: f64) -> Vec<f64> {
    (0..)
        .map(|j| beta + f64::from(j) * grid.alpha_step)
        .take_while(|alpha| alpha + beta <= grid.alpha_cap + 1e-9)
        .collect()
}

fn alpha_row(
    grid: &MonotonicityGrid,
    indices: &[u32],
    upsilon: impl Fn(&DynamicsParams, u32) -> Result<f64>,
) -> Result<Option<String>> {
    for &beta in &grid.betas {
        for &i in indices {
            let mut prev: Option<(f64, f64)> = None;
            for alpha in alpha_line(grid, beta) {
                let p = DynamicsParams::new(alpha, beta)?;
                let v = upsilon(&p, i)?;
                if let Some((pa, pv)) = prev {
                    if v >= pv {
                        return Ok(Some(format!(
                            "beta={beta}, i={i}: alpha={pa} -> {pv:e} but alpha={alpha} -> {v:e}"
                        )));
                    }
                }
                prev = Some((alpha, v));
            }
        }
    }
    Ok(None)
}

fn block_index_row(grid: &MonotonicityGrid) -> Result<Option<String>> {
    let p = &grid.base;
    let (s, t0) = (grid.s, grid.t0);

    // Constant schedule: increasing and concave. The exact increment from
    // block i to i+1 is b * a^i; once that drops below a few ulps of the
    // weight the f64 series saturates, so strictness is only demanded
    // while the increment is representable.
    let fixed: Vec<f64> = (0..=grid.max_index)
        .map(|i| Ok(upsilon_fixed(p, s, t0, i)?.upsilon))
        .collect::<Result<_>>()?;
    let c = block_coeffs(p, s, t0);
    let crisp = |i: usize| c.b * c.a.powi(i as i32) > 8.0 * f64::EPSILON * fixed[i + 1];
    for (i, w) in fixed.windows(2).enumerate() {
        let ok = if crisp(i) { w[1] > w[0] } else { w[1] + grid.slack >= w[0] };
        if !ok {
            return Ok(Some(format!("fixed: i={i} -> {:e}, i={} -> {:e}", w[0], i + 1, w[1])));
        }
    }
    let diffs: Vec<f64> = fixed.windows(2).map(|w| w[1] - w[0]).collect();
    for (i, w) in diffs.windows(2).enumerate() {
        let ok = if crisp(i + 1) { w[1] < w[0] } else { w[1] <= w[0] + grid.slack };
        if !ok {
            return Ok(Some(format!(
                "fixed concavity: increment at i={i} is {:e}, at i={} is {:e}",
                w[0], i + 1, w[1]
            )));
        }
    }

    let dec: Vec<f64> = (1..=grid.max_index)
        .map(|i| Ok(upsilon_decreasing(p, s, t0, grid.kappa_base, i)?.upsilon))
        .collect::<Result<_>>()?;
    for (k, w) in dec.windows(2).enumerate() {
        if w[1] >= w[0] {
            return Ok(Some(format!(
                "decreasing: i={} -> {:e}, i={} -> {:e}",
                k + 1, w[0], k + 2, w[1]
            )));
        }
    }

    let ad: Vec<f64> = (1..=grid.max_index)
        .map(|i| Ok(upsilon_adaptive(p, s, t0, grid.tau_base, i, grid.m_ad)?.upsilon))
        .collect::<Result<_>>()?;
    for (k, w) in ad.windows(2).enumerate() {
        let i = k as u32 + 1;
        let strict = i < ADAPTIVE_STRICT_END;
        let ok = if strict { w[1] < w[0] } else { w[1] <= w[0] + grid.slack };
        if !ok {
            return Ok(Some(format!(
                "adaptive: i={i} -> {:e}, i={} -> {:e} (strict={strict})",
                w[0], i + 1, w[1]
            )));
        }
    }

    // Contribution series, shrinking schedules only: block m contributes
    // b(T_m) * prod_{q>m} a(T_q) to the boundary after the last transient
    // block. Contributions strictly grow with m, so the newest-first
    // partial sums are strictly increasing and strictly concave.
    let mut dec_counts = Vec::new();
    let mut t = t0;
    while t > 0 {
        dec_counts.push(t);
        t = crate::agent::floor_div(t, grid.kappa_base);
    }
    let dec_transient = dec_counts.len() as u32;
    let ad_counts: Vec<u32> =
        (0..grid.m_ad).map(|m| t0 - m * grid.tau_base).collect();
    for (name, counts, total) in [
        (
            "decreasing",
            dec_counts,
            upsilon_decreasing(p, s, t0, grid.kappa_base, dec_transient)?.upsilon,
        ),
        (
            "adaptive",
            ad_counts,
            upsilon_adaptive(p, s, t0, grid.tau_base, grid.m_ad, grid.m_ad)?.upsilon,
        ),
    ] {
        let mut contrib = vec![0.0; counts.len()];
        let mut suffix = 1.0;
        for m in (0..counts.len()).rev() {
            let c = block_coeffs(p, s, counts[m]);
            contrib[m] = c.b * suffix;
            suffix *= c.a;
        }
        for (m, w) in contrib.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Ok(Some(format!(
                    "{name} series: contribution of block {m} is {:e}, of block {} is {:e}",
                    w[0], m + 1, w[1]
                )));
            }
        }
        let sum: f64 = contrib.iter().sum();
        if (sum - total).abs() > 1e-12 * total.max(1.0) {
            return Ok(Some(format!(
                "{name} series: contributions sum to {sum:e} but the fold gives {total:e}"
            )));
        }
    }
    Ok(None)
}

fn t0_row(grid: &MonotonicityGrid) -> Result<Option<String>> {
    for &i in &SPREAD_INDICES {
        let mut prev: Option<(u32, f64)> = None;
        for t0 in 0..=grid.s {
            let v = upsilon_fixed(&grid.base, grid.s, t0, i)?.upsilon;
            if let Some((pt, pv)) = prev {
                if v <= pv {
                    return Ok(Some(format!(
                        "i={i}: t0={pt} -> {pv:e} but t0={t0} -> {v:e}"
                    )));
                }
            }
            prev = Some((t0, v));
        }
    }
    Ok(None)
}

/// Shared shape of the kappa and tau rows: at block 1 the schedules have
/// not yet diverged (values equal within slack), from block 2 on a faster
/// shrink gives a strictly smaller weight.
fn schedule_row<K: Copy + std::fmt::Debug>(
    grid: &MonotonicityGrid,
    knobs: &[K],
    upsilon: impl Fn(&DynamicsParams, &K, u32) -> Result<f64>,
) -> Result<Option<String>> {
    for &i in &SHRINK_INDICES {
        let mut prev: Option<(K, f64)> = None;
        for knob in knobs {
            let v = upsilon(&grid.base, knob, i)?;
            if let Some((pk, pv)) = prev {
                let ok = if i == 1 { (v - pv).abs() <= grid.slack } else { v < pv };
                if !ok {
                    return Ok(Some(format!(
                        "i={i}: {pk:?} -> {pv:e} but {knob:?} -> {v:e}"
                    )));
                }
            }
            prev = Some((*knob, v));
        }
    }
    Ok(None)
}
