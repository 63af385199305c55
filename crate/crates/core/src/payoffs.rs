//! Reward functions and run-level utilities.
//!
//! The agent's utility over a horizon of `K` steps balances clicked rewards
//! against how far the final opinion drifted from the innate one:
//!
//! ```text
//! U_agent = lambda * (1/K) * sum_k clk_k * R(|x_k - u_k|) - (1 - lambda) * |x_K - x0|
//! ```
//!
//! The platform simply averages its clicked rewards:
//!
//! ```text
//! U_platform = (1/K) * sum_k clk_k * R(|x_k - u_k|)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::OpinionTrace;

/// Reward as a function of the opinion-recommendation distance `d` in `[0, 2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RewardFn {
    /// Unit reward regardless of distance.
    Constant,
    /// `1 - c * d`. For `c > 1/2` the raw value can go negative at `d` close
    /// to 2; it is floored at zero so a reward never punishes a click.
    LinearDistance { c: f64 },
}

impl RewardFn {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RewardFn::Constant => Ok(()),
            RewardFn::LinearDistance { c } => {
                if !c.is_finite() || !(0.0..=1.0).contains(&c) {
                    return Err(Error::InvalidParams(format!(
                        "distance slope must lie in [0, 1], got {c}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, distance: f64) -> f64 {
        debug_assert!((0.0..=2.0).contains(&distance), "distance {distance} out of range");
        match *self {
            RewardFn::Constant => 1.0,
            RewardFn::LinearDistance { c } => (1.0 - c * distance).max(0.0),
        }
    }
}

pub fn validate_lambda(lambda: f64) -> Result<()> {
    if !lambda.is_finite() || !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParams(format!(
            "reward-drift tradeoff must lie in [0, 1], got {lambda}"
        )));
    }
    Ok(())
}

fn clicked_reward_sum(trace: &OpinionTrace, reward: &RewardFn) -> f64 {
    trace
        .steps
        .iter()
        .filter(|s| s.clicked)
        .map(|s| reward.eval((s.x - s.u).abs()))
        .sum()
}

/// Agent utility over the whole trace. Rewards are recomputed from the
/// recorded `(x, u, clicked)` triples so a trace can be scored under any
/// reward function and tradeoff, not just the ones it ran with.
pub fn agent_utility(trace: &OpinionTrace, reward: &RewardFn, lambda: f64) -> Result<f64> {
    reward.validate()?;
    validate_lambda(lambda)?;
    if trace.steps.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let k = trace.steps.len() as f64;
    let click_term = clicked_reward_sum(trace, reward) / k;
    let drift = (trace.final_opinion - trace.x0()).abs();
    Ok(lambda * click_term - (1.0 - lambda) * drift)
}

/// Platform payoff over the whole trace.
pub fn platform_payoff(trace: &OpinionTrace, reward: &RewardFn) -> Result<f64> {
    reward.validate()?;
    if trace.steps.is_empty() {
        return Err(Error::EmptyTrace);
    }
    Ok(clicked_reward_sum(trace, reward) / trace.steps.len() as f64)
}

/// One row of [`utility_series`]: utilities of the prefix ending after step
/// `k - 1`, i.e. over the first `k` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityPoint {
    pub k: u64,
    pub agent_utility: f64,
    pub platform_payoff: f64,
}

/// Running utilities after every step, for trajectory plots. The drift term
/// of prefix `k` reads the opinion holding after step `k - 1`.
pub fn utility_series(
    trace: &OpinionTrace,
    reward: &RewardFn,
    lambda: f64,
) -> Result<Vec<UtilityPoint>> {
    reward.validate()?;
    validate_lambda(lambda)?;
    if trace.steps.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let x0 = trace.x0();
    let n = trace.steps.len();
    let mut out = Vec::with_capacity(n);
    let mut reward_sum = 0.0;
    for (idx, s) in trace.steps.iter().enumerate() {
        if s.clicked {
            reward_sum += reward.eval((s.x - s.u).abs());
        }
        let x_end = if idx + 1 < n { trace.steps[idx + 1].x } else { trace.final_opinion };
        let k = (idx + 1) as f64;
        out.push(UtilityPoint {
            k: idx as u64 + 1,
            agent_utility: lambda * reward_sum / k - (1.0 - lambda) * (x_end - x0).abs(),
            platform_payoff: reward_sum / k,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::tests::synthetic_trace;

    #[test]
    fn reward_shapes() {
        assert_eq!(RewardFn::Constant.eval(2.0), 1.0);
        let r = RewardFn::LinearDistance { c: 0.1 };
        assert!((r.eval(2.0) - 0.8).abs() < 1e-15);
        assert!((r.eval(0.0) - 1.0).abs() < 1e-15);
        // Slopes above 1/2 are floored at zero near the maximal distance.
        let steep = RewardFn::LinearDistance { c: 1.0 };
        assert_eq!(steep.eval(2.0), 0.0);
        assert!(RewardFn::LinearDistance { c: 1.5 }.validate().is_err());
    }

    #[test]
    fn agent_utility_hand_value() {
        // Always-click unit rewards, final drift 1.375, lambda 1/2:
        // 0.5 * 1 - 0.5 * 1.375 = -0.1875.
        let trace = synthetic_trace(-1.0, &[(-1.0, 1.0, true); 16], 0.375);
        let u = agent_utility(&trace, &RewardFn::Constant, 0.5).unwrap();
        assert!((u - (-0.1875)).abs() < 1e-15);
    }

    #[test]
    fn platform_payoff_hand_values() {
        let none = synthetic_trace(0.0, &[(0.0, 1.0, false); 8], 0.0);
        assert_eq!(platform_payoff(&none, &RewardFn::Constant).unwrap(), 0.0);

        let all = synthetic_trace(0.0, &[(0.0, 1.0, true); 8], 0.0);
        assert_eq!(platform_payoff(&all, &RewardFn::Constant).unwrap(), 1.0);

        // Constant distance 2 under slope 0.1 pays 0.8 per click.
        let far = synthetic_trace(-1.0, &[(-1.0, 1.0, true); 8], -1.0);
        let p = platform_payoff(&far, &RewardFn::LinearDistance { c: 0.1 }).unwrap();
        assert!((p - 0.8).abs() < 1e-15);
    }

    #[test]
    fn empty_trace_is_rejected() {
        let empty = synthetic_trace(0.0, &[], 0.0);
        assert!(matches!(agent_utility(&empty, &RewardFn::Constant, 0.5), Err(Error::EmptyTrace)));
        assert!(matches!(platform_payoff(&empty, &RewardFn::Constant), Err(Error::EmptyTrace)));
        assert!(matches!(
            utility_series(&empty, &RewardFn::Constant, 0.5),
            Err(Error::EmptyTrace)
        ));
    }

    #[test]
    fn series_last_row_matches_whole_trace_scores() {
        let steps = [(-1.0, 1.0, true), (-0.3, 0.9, false), (0.1, 0.9, true), (0.2, 0.4, true)];
        let trace = synthetic_trace(-1.0, &steps, 0.25);
        let reward = RewardFn::LinearDistance { c: 0.1 };
        let series = utility_series(&trace, &reward, 0.3).unwrap();
        assert_eq!(series.len(), 4);
        let last = series.last().unwrap();
        assert_eq!(last.k, 4);
        let full_agent = agent_utility(&trace, &reward, 0.3).unwrap();
        let full_platform = platform_payoff(&trace, &reward).unwrap();
        assert!((last.agent_utility - full_agent).abs() < 1e-15);
        assert!((last.platform_payoff - full_platform).abs() < 1e-15);
    }

    #[test]
    fn single_step_series_equals_full_trace() {
        let trace = synthetic_trace(0.0, &[(0.0, 0.5, true)], 0.15);
        let series = utility_series(&trace, &RewardFn::Constant, 0.5).unwrap();
        assert_eq!(series.len(), 1);
        assert!(
            (series[0].agent_utility - agent_utility(&trace, &RewardFn::Constant, 0.5).unwrap())
                .abs()
                < 1e-15
        );
    }

    #[test]
    fn agent_utility_is_affine_in_lambda() {
        let steps = [(-0.8, 0.7, true), (-0.2, 0.7, true), (0.0, 0.1, false), (0.3, -0.9, true)];
        let trace = synthetic_trace(-0.8, &steps, -0.1);
        let reward = RewardFn::LinearDistance { c: 0.3 };
        let u = |l: f64| agent_utility(&trace, &reward, l).unwrap();
        // Equally spaced points on an affine function have a vanishing
        // second difference.
        for (a, b, c) in [(0.0, 0.25, 0.5), (0.1, 0.5, 0.9), (0.5, 0.75, 1.0)] {
            let second = u(a) - 2.0 * u(b) + u(c);
            assert!(second.abs() < 1e-12, "second difference {second} at ({a},{b},{c})");
        }
    }

    #[test]
    fn lambda_validation() {
        let trace = synthetic_trace(0.0, &[(0.0, 0.5, true)], 0.1);
        assert!(agent_utility(&trace, &RewardFn::Constant, -0.1).is_err());
        assert!(agent_utility(&trace, &RewardFn::Constant, 1.1).is_err());
        assert!(agent_utility(&trace, &RewardFn::Constant, f64::NAN).is_err());
    }
}
