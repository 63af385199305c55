//! Closed forms for the opinion at block boundaries.
//!
//! Under a fixed recommendation `u0`, the opinion at every block boundary is
//! a convex combination `x_{is} = gamma_i * x0 + upsilon_i * u0`. One block
//! with click count `t` acts affinely on the boundary opinion `y`:
//!
//! ```text
//! y' = g_t * x0 + a_t * y + b_t * u0
//! a_t = B^(s-t) * beta^t
//! b_t = (1 - eta) * B^(s-t) * (1 - beta^t)
//! g_t = (1 - B^(s-t)) + eta * B^(s-t) * (1 - beta^t)
//! ```
//!
//! with `g_t + b_t = 1 - a_t`. Folding these maps over a click-count
//! schedule yields the weights for all three agent policies; the constant
//! schedule additionally collapses to a geometric series. `gamma` and
//! `upsilon` are accumulated through independent coefficient folds, so the
//! convexity identity `gamma + upsilon = 1` is a real cross-check rather
//! than true by construction.
//!
//! `brute_force_block_opinion` re-runs the raw per-step recursion in
//! double-double precision and is the reference the closed forms are tested
//! against.

mod dd;
pub mod monotonicity;

use serde::{Deserialize, Serialize};

use crate::agent::{floor_div, AgentPolicy, BlockGeometry};
use crate::dynamics::{DynamicsParams, Opinion, Recommendation};
use crate::error::{Error, Result};
use crate::payoffs::{validate_lambda, RewardFn};
use crate::platform::PlatformPolicy;
use crate::sim::{run, RunSpec};

use dd::Dd;

/// Whether a block index falls before or after the policy's click schedule
/// has stopped changing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Transient,
    SteadyState,
}

/// Convex weights of the boundary opinion `x_{is} = gamma*x0 + upsilon*u0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockWeight {
    pub gamma: f64,
    pub upsilon: f64,
    pub phase: Phase,
    pub block_index: u32,
}

/// First block index at which each shrinking schedule stops changing:
/// `m_d` is the first block with a zero count under the divide-by-kappa
/// schedule, `m_ad` the first block whose start satisfies the drift trigger
/// under the adaptive schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseBoundaries {
    pub m_d: Option<u32>,
    pub m_ad: Option<u32>,
}

impl PhaseBoundaries {
    /// Boundaries derivable from the policy alone. `m_ad` depends on the
    /// whole scenario and must come from [`measure_adaptive_boundary`].
    pub fn for_policy(policy: &AgentPolicy) -> Self {
        PhaseBoundaries { m_d: policy.first_zero_block().ok(), m_ad: None }
    }
}

/// Stabilization point of the adaptive schedule: from block `m_ad` on, the
/// click count stays at `steady_t`. Either the trigger went quiet with a
/// positive count, or a firing floored the count at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdaptiveBoundary {
    pub m_ad: u32,
    pub steady_t: u32,
}

/// A long-horizon limit: a single value, or a band when only bounds exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LimitValue {
    Point(f64),
    Interval { lo: f64, hi: f64 },
}

impl LimitValue {
    fn band(lo: f64, hi: f64) -> Self {
        if lo == hi {
            LimitValue::Point(lo)
        } else {
            LimitValue::Interval { lo, hi }
        }
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        match *self {
            LimitValue::Point(p) => (v - p).abs() <= tol,
            LimitValue::Interval { lo, hi } => v >= lo - tol && v <= hi + tol,
        }
    }
}

/// Outcome of the skip-one-click comparison against always clicking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    /// Limit drift weight of the schedule that skips one click per block.
    pub epsilon1: f64,
    /// Whether that schedule strictly beats always clicking in the limit.
    pub strict_improvement_possible: bool,
    /// Limit utility of the skip-one-click schedule.
    pub skip_one_utility: f64,
    /// Limit utility of always clicking.
    pub fixed_limit_utility: f64,
}

/// Coefficients of one block's affine action on the boundary opinion.
#[derive(Debug, Clone, Copy)]
struct BlockCoeffs {
    a: f64,
    b: f64,
    g: f64,
}

fn block_coeffs(params: &DynamicsParams, s: u32, t: u32) -> BlockCoeffs {
    debug_assert!(t <= s);
    let tail = params.b().powi((s - t) as i32);
    let clicked = params.beta().powi(t as i32);
    BlockCoeffs {
        a: tail * clicked,
        b: (1.0 - params.eta()) * tail * (1.0 - clicked),
        g: (1.0 - tail) + params.eta() * tail * (1.0 - clicked),
    }
}

/// Shaves the ulp of rounding dust the closed forms can accumulate at
/// degenerate parameters (e.g. eta = 1); interior weights pass unchanged.
fn unit(w: f64) -> f64 {
    w.clamp(0.0, 1.0)
}

/// Folds per-block affine maps over a click-count schedule, in block order.
/// `gamma` and `upsilon` use disjoint coefficient sets (`g` vs `b`), keeping
/// the convexity identity informative.
fn fold_counts(params: &DynamicsParams, s: u32, counts: impl Iterator<Item = u32>) -> (f64, f64) {
    let mut gamma = 1.0;
    let mut upsilon = 0.0;
    for t in counts {
        let c = block_coeffs(params, s, t);
        gamma = c.g + c.a * gamma;
        upsilon = c.a * upsilon + c.b;
    }
    (unit(gamma), unit(upsilon))
}

fn check_geometry(s: u32, t0: u32) -> Result<()> {
    if s == 0 {
        return Err(Error::InvalidParams("block length must be >= 1".into()));
    }
    if t0 > s {
        return Err(Error::InvalidParams(format!(
            "initial clicking count {t0} exceeds block length {s}"
        )));
    }
    Ok(())
}

/// Boundary weights under the constant schedule: every block clicks `t0`
/// times, so the fold telescopes to a geometric series in `a_t0`.
pub fn upsilon_fixed(params: &DynamicsParams, s: u32, t0: u32, i: u32) -> Result<BlockWeight> {
    check_geometry(s, t0)?;
    let c = block_coeffs(params, s, t0);
    let denom = 1.0 - c.a;
    if denom == 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    let a_pow = c.a.powi(i as i32);
    let series = (1.0 - a_pow) / denom;
    Ok(BlockWeight {
        gamma: unit(series * c.g + a_pow),
        upsilon: unit(series * c.b),
        // The schedule never changes, so every block is steady.
        phase: Phase::SteadyState,
        block_index: i,
    })
}

/// Boundary weights under the divide-by-kappa schedule. Valid only when
/// every division that produces a positive count used by the formula is
/// exact; the final division that floors to zero is exempt (that is how the
/// schedule terminates at all).
pub fn upsilon_decreasing(
    params: &DynamicsParams,
    s: u32,
    t0: u32,
    kappa: f64,
    i: u32,
) -> Result<BlockWeight> {
    check_geometry(s, t0)?;
    if !kappa.is_finite() || kappa < 1.0 {
        return Err(Error::InvalidParams(format!(
            "halving factor must be a finite real >= 1, got {kappa}"
        )));
    }
    // First block index with a zero count; none when kappa = 1 keeps the
    // count constant forever.
    let m_d = if kappa > 1.0 {
        let mut t = t0;
        let mut m = 0u32;
        while t > 0 {
            t = floor_div(t, kappa);
            m += 1;
        }
        Some(m)
    } else {
        None
    };
    let transient_blocks = m_d.map_or(i, |m| i.min(m));
    let mut counts = Vec::with_capacity(i as usize);
    let mut t = t0;
    for q in 0..transient_blocks {
        counts.push(t);
        if q + 1 < transient_blocks {
            let next = floor_div(t, kappa);
            if f64::from(next) * kappa != f64::from(t) {
                return Err(Error::InexactDivision(format!(
                    "count {t} at block {} is not exactly divisible by kappa {kappa}",
                    q + 1
                )));
            }
            t = next;
        }
    }
    // Blocks past m_d have a zero count; extending the fold with them makes
    // the steady recurrence upsilon' = B^s * upsilon hold exactly.
    counts.resize(i as usize, 0);
    let (gamma, upsilon) = fold_counts(params, s, counts.into_iter());
    let phase = match m_d {
        Some(m) if i > m => Phase::SteadyState,
        _ => Phase::Transient,
    };
    Ok(BlockWeight { gamma, upsilon, phase, block_index: i })
}

/// Boundary weights under the adaptive schedule, given its measured
/// stabilization point. Transient blocks `m < m_ad` click `t0 - m*tau`
/// times; blocks from `m_ad` on click `steady_t` times.
pub fn upsilon_adaptive_with_boundary(
    params: &DynamicsParams,
    s: u32,
    t0: u32,
    tau: u32,
    i: u32,
    boundary: &AdaptiveBoundary,
) -> Result<BlockWeight> {
    check_geometry(s, t0)?;
    if tau == 0 {
        return Err(Error::InvalidParams("decrement tau must be >= 1".into()));
    }
    if boundary.m_ad == 0 {
        return Err(Error::InvalidBoundary(
            "stabilization block index must be >= 1".into(),
        ));
    }
    let m_ad = i64::from(boundary.m_ad);
    let nominal = i64::from(t0) - (m_ad - 1) * i64::from(tau);
    let quiet = nominal >= 0 && i64::from(boundary.steady_t) == nominal;
    let floored =
        boundary.steady_t == 0 && nominal >= 0 && nominal - i64::from(tau) <= 0;
    if !(quiet || floored) {
        return Err(Error::InvalidBoundary(format!(
            "steady count {} at block {} unreachable from t0 {} with decrement {}",
            boundary.steady_t, boundary.m_ad, t0, tau
        )));
    }
    let counts = (0..i).map(|m| {
        if m < boundary.m_ad {
            (i64::from(t0) - i64::from(m) * i64::from(tau)) as u32
        } else {
            boundary.steady_t
        }
    });
    let (gamma, upsilon) = fold_counts(params, s, counts);
    let phase = if i > boundary.m_ad { Phase::SteadyState } else { Phase::Transient };
    Ok(BlockWeight { gamma, upsilon, phase, block_index: i })
}

/// Adaptive weights when the trigger fired at every boundary before `m_ad`
/// and went quiet with a positive count, i.e. `steady_t = t0 - (m_ad-1)*tau`.
/// Use [`upsilon_adaptive_with_boundary`] when flooring at zero ended the
/// schedule instead.
pub fn upsilon_adaptive(
    params: &DynamicsParams,
    s: u32,
    t0: u32,
    tau: u32,
    i: u32,
    m_ad: u32,
) -> Result<BlockWeight> {
    if m_ad == 0 {
        return Err(Error::InvalidBoundary(
            "stabilization block index must be >= 1".into(),
        ));
    }
    let nominal = i64::from(t0) - (i64::from(m_ad) - 1) * i64::from(tau);
    if nominal < 0 {
        return Err(Error::InvalidBoundary(format!(
            "steady clicking count t0 - (m_ad-1)*tau = {nominal} is negative"
        )));
    }
    upsilon_adaptive_with_boundary(
        params,
        s,
        t0,
        tau,
        i,
        &AdaptiveBoundary { m_ad, steady_t: nominal as u32 },
    )
}

/// Drifts within this margin of the trigger tolerance make the realized
/// schedule numerically brittle (f64 and extended precision can disagree on
/// the comparison), so boundary measurement rejects them.
pub const KNIFE_MARGIN: f64 = 1e-9;

/// Limit of `upsilon` under a constant count `t`: the fixed point of one
/// block's affine map.
fn fixed_point_upsilon(params: &DynamicsParams, s: u32, t: u32) -> Result<f64> {
    let c = block_coeffs(params, s, t);
    let denom = 1.0 - c.a;
    if denom == 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    Ok(c.b / denom)
}

/// Runs the adaptive scenario and extracts where the click schedule
/// stabilizes. Errors when the realized schedule cannot be certified:
/// a boundary drift within [`KNIFE_MARGIN`] of the tolerance, trigger
/// firings that are not an unbroken run from the first boundary (the
/// closed form covers only that pattern), or a horizon too short to
/// observe and certify stabilization.
#[allow(clippy::too_many_arguments)]
pub fn measure_adaptive_boundary(
    params: &DynamicsParams,
    s: u32,
    t0: u32,
    tau: u32,
    x_drift: f64,
    x0: Opinion,
    u0: Recommendation,
    max_blocks: u32,
) -> Result<AdaptiveBoundary> {
    if max_blocks < 2 {
        return Err(Error::InvalidParams(
            "boundary measurement needs at least 2 blocks".into(),
        ));
    }
    let agent = AgentPolicy::AdaptiveDecreasing { t0, tau, x_drift };
    agent.validate(s)?;
    let spec = RunSpec {
        params: *params,
        geometry: BlockGeometry::new(s, max_blocks)?,
        agent,
        platform: PlatformPolicy::FixedRecommendation { u0: u0.value() },
        reward: RewardFn::Constant,
        lambda: 0.5,
        x0,
        seed: 0,
    };
    let trace = run(&spec)?;
    let t_seq: Vec<u32> = trace.blocks.iter().map(|b| b.t).collect();
    let xs = trace.boundary_opinions();
    let n = t_seq.len();

    // Knife-edge screen on every boundary where the trigger could matter.
    for j in 1..n {
        if t_seq[j - 1] == 0 {
            continue;
        }
        let drift = (xs[j] - x0.value()).abs();
        if (drift - x_drift).abs() < KNIFE_MARGIN {
            return Err(Error::InvalidBoundary(format!(
                "boundary {j} drift {drift} sits within {KNIFE_MARGIN} of the tolerance {x_drift}"
            )));
        }
    }

    let fired: Vec<u32> = (1..n)
        .filter(|&j| t_seq[j] != t_seq[j - 1])
        .map(|j| j as u32)
        .collect();
    let Some(&last) = fired.last() else {
        // Schedule never moved. Stable from block 1 iff the limit drift
        // stays clear of the tolerance; otherwise a later boundary would
        // fire beyond this horizon.
        let limit_drift =
            fixed_point_upsilon(params, s, t0)? * (u0.value() - x0.value()).abs();
        if limit_drift >= x_drift - KNIFE_MARGIN {
            return Err(Error::InvalidBoundary(format!(
                "limit drift {limit_drift} not certifiably below tolerance {x_drift}"
            )));
        }
        return Ok(AdaptiveBoundary { m_ad: 1, steady_t: t0 });
    };
    if fired.len() as u32 != last {
        return Err(Error::InvalidBoundary(format!(
            "trigger firings {fired:?} are not an unbroken run from boundary 1"
        )));
    }

    let last_t = t_seq[last as usize];
    if last_t == 0 {
        // Floored at zero: absorbing regardless of later drift.
        return Ok(AdaptiveBoundary { m_ad: last, steady_t: 0 });
    }
    // Quiet stabilization: need to observe at least one quiet boundary and
    // certify the monotone approach to the fixed point stays below the
    // tolerance (the drift envelope after block m_ad is the larger of the
    // first quiet drift, already knife-checked, and the limit drift).
    let m_ad = last + 1;
    if u64::from(m_ad) + 1 > n as u64 {
        return Err(Error::InvalidBoundary(format!(
            "horizon of {n} blocks too short to observe stabilization at block {m_ad}"
        )));
    }
    let limit_drift =
        fixed_point_upsilon(params, s, last_t)? * (u0.value() - x0.value()).abs();
    if limit_drift >= x_drift - KNIFE_MARGIN {
        return Err(Error::InvalidBoundary(format!(
            "limit drift {limit_drift} not certifiably below tolerance {x_drift}"
        )));
    }
    Ok(AdaptiveBoundary { m_ad, steady_t: last_t })
}

/// The opinion at boundary `i` by literal per-step recursion in
/// double-double precision, including the policy's own block-end logic.
/// Reference implementation for the closed forms; error ~1e-30, far below
/// the 1e-9 equivalence tolerance.
pub fn brute_force_block_opinion(
    params: &DynamicsParams,
    policy: &AgentPolicy,
    s: u32,
    x0: Opinion,
    u0: Recommendation,
    i: u32,
) -> Result<Opinion> {
    policy.validate(s)?;
    let alpha = params.alpha();
    let beta = params.beta();
    let x0v = x0.value();
    let u0v = u0.value();
    // Coefficients to full precision: the clicked weight on u0 is
    // 1 - (alpha + beta) with the sum kept exact, and the no-click weights
    // are B = beta/(alpha+beta) and 1 - B.
    let z = Dd::from_f64(alpha).add(Dd::from_f64(beta));
    let cu = Dd::ONE.sub(z);
    let b = Dd::from_f64(beta).div(z);
    let one_minus_b = Dd::ONE.sub(b);
    let x0_dd = Dd::from_f64(x0v);

    let mut x = x0_dd;
    let mut t = policy.t0();
    for _ in 0..i {
        for k in 0..s {
            x = if k < t {
                Dd::prod(alpha, x0v).add(x.mul_f64(beta)).add(cu.mul_f64(u0v))
            } else {
                one_minus_b.mul_f64(x0v).add(b.mul(x))
            };
        }
        t = match *policy {
            AgentPolicy::Fixed { .. } => t,
            AgentPolicy::Decreasing { kappa, .. } => floor_div(t, kappa),
            AgentPolicy::AdaptiveDecreasing { tau, x_drift, .. } => {
                if x.sub(x0_dd).abs().ge_f64(x_drift) {
                    t.saturating_sub(tau)
                } else {
                    t
                }
            }
        };
    }
    Opinion::new(x.to_f64().clamp(-1.0, 1.0))
}

/// Long-horizon boundary-opinion limit for each policy, under the
/// always-click start `t0 = s`.
pub fn limit_opinion(
    policy: &AgentPolicy,
    params: &DynamicsParams,
    s: u32,
    x0: Opinion,
    u0: Recommendation,
) -> Result<LimitValue> {
    policy.validate(s)?;
    if policy.t0() != s {
        return Err(Error::HypothesisViolated(format!(
            "opinion limits assume t0 = s, got t0 {} with s {s}",
            policy.t0()
        )));
    }
    let x0v = x0.value();
    let u0v = u0.value();
    let eta = params.eta();
    let clicked_limit = eta * x0v + (1.0 - eta) * u0v;
    Ok(match *policy {
        AgentPolicy::Fixed { .. } => LimitValue::Point(clicked_limit),
        AgentPolicy::Decreasing { kappa, .. } => {
            if kappa > 1.0 {
                // The count hits zero and the opinion relaxes back.
                LimitValue::Point(x0v)
            } else {
                // kappa = 1 never stops clicking.
                LimitValue::Point(clicked_limit)
            }
        }
        AgentPolicy::AdaptiveDecreasing { x_drift, .. } => {
            if u0v > x0v {
                LimitValue::band(x0v, (x0v + x_drift).min(1.0))
            } else if u0v < x0v {
                LimitValue::band((x0v - x_drift).max(-1.0), x0v)
            } else {
                LimitValue::Point(x0v)
            }
        }
    })
}

/// Long-horizon agent-utility limit for each policy, under unit click
/// rewards and the always-click start `t0 = s`.
pub fn limit_agent_utility(
    policy: &AgentPolicy,
    params: &DynamicsParams,
    s: u32,
    x0: Opinion,
    u0: Recommendation,
    lambda: f64,
) -> Result<LimitValue> {
    validate_lambda(lambda)?;
    policy.validate(s)?;
    if policy.t0() != s {
        return Err(Error::HypothesisViolated(format!(
            "utility limits assume t0 = s, got t0 {} with s {s}",
            policy.t0()
        )));
    }
    let drift = (u0.value() - x0.value()).abs();
    let fixed_limit = lambda - (1.0 - lambda) * (1.0 - params.eta()) * drift;
    Ok(match *policy {
        AgentPolicy::Fixed { .. } => LimitValue::Point(fixed_limit),
        AgentPolicy::Decreasing { kappa, .. } => {
            if kappa > 1.0 {
                // Click average and terminal drift both vanish.
                LimitValue::Point(0.0)
            } else {
                LimitValue::Point(fixed_limit)
            }
        }
        AgentPolicy::AdaptiveDecreasing { .. } => LimitValue::band(0.0, lambda),
    })
}

/// Compares always clicking against the schedule that skips exactly one
/// click per block (whose limit drift weight is `epsilon1`). The skip
/// schedule strictly wins iff
/// `epsilon1 < 1 - (lambda/s) / ((1-lambda)(1-eta)|u0-x0|)`.
pub fn adaptive_beats_fixed_threshold(
    params: &DynamicsParams,
    s: u32,
    lambda: f64,
    x0: Opinion,
    u0: Recommendation,
) -> Result<ThresholdReport> {
    if s == 0 {
        return Err(Error::InvalidParams("block length must be >= 1".into()));
    }
    validate_lambda(lambda)?;
    if lambda >= 1.0 {
        return Err(Error::HypothesisViolated(
            "comparison assumes lambda < 1 (drift must carry weight)".into(),
        ));
    }
    let drift = (u0.value() - x0.value()).abs();
    if drift == 0.0 {
        return Err(Error::HypothesisViolated(
            "comparison assumes u0 != x0".into(),
        ));
    }
    let eta = params.eta();
    let fixed_limit = lambda - (1.0 - lambda) * (1.0 - eta) * drift;
    if fixed_limit < 0.0 {
        return Err(Error::HypothesisViolated(format!(
            "always-click limit utility {fixed_limit} is negative"
        )));
    }
    let b = params.b();
    let beta_pow = params.beta().powi(s as i32 - 1);
    let epsilon1 = b * (1.0 - beta_pow) / (1.0 - b * beta_pow);
    let threshold = 1.0 - (lambda / f64::from(s)) / ((1.0 - lambda) * (1.0 - eta) * drift);
    let skip_one_utility =
        lambda - lambda / f64::from(s) - (1.0 - lambda) * (1.0 - eta) * drift * epsilon1;
    Ok(ThresholdReport {
        epsilon1,
        strict_improvement_possible: epsilon1 < threshold,
        skip_one_utility,
        fixed_limit_utility: fixed_limit,
    })
}
