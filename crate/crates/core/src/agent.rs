//! Click-rationing policies.
//!
//! Time is divided into blocks of `s` steps. Within block `i` the agent
//! clicks on the first `T_i` recommendations and ignores the rest. The three
//! policies differ only in how `T_i` evolves at block boundaries:
//!
//! * `Fixed`: `T_i = T0` forever.
//! * `Decreasing`: `T_{i+1} = max(0, floor(T_i / kappa))`.
//! * `AdaptiveDecreasing`: `T_{i+1} = max(0, T_i - tau)` whenever the block
//!   ended with the opinion at least `x_drift` away from the innate opinion,
//!   otherwise `T_{i+1} = T_i`. The trigger reads only the block-end opinion
//!   and is armed from the first boundary on; there is no recovery rule, so
//!   `T` never increases.

use serde::{Deserialize, Serialize};

use crate::dynamics::Opinion;
use crate::error::{Error, Result};

/// Block layout of a run: `n` blocks of `s` steps, `K = n * s` steps total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGeometry", into = "RawGeometry")]
pub struct BlockGeometry {
    s: u32,
    n: u32,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawGeometry {
    s: u32,
    n: u32,
}

impl TryFrom<RawGeometry> for BlockGeometry {
    type Error = Error;

    fn try_from(raw: RawGeometry) -> Result<Self> {
        BlockGeometry::new(raw.s, raw.n)
    }
}

impl From<BlockGeometry> for RawGeometry {
    fn from(g: BlockGeometry) -> Self {
        RawGeometry { s: g.s, n: g.n }
    }
}

impl BlockGeometry {
    pub fn new(s: u32, n: u32) -> Result<Self> {
        if s == 0 || n == 0 {
            return Err(Error::InvalidParams(format!(
                "block geometry needs s >= 1 and n >= 1, got s={s}, n={n}"
            )));
        }
        Ok(Self { s, n })
    }

    pub fn block_len(&self) -> u32 {
        self.s
    }

    pub fn blocks(&self) -> u32 {
        self.n
    }

    pub fn horizon(&self) -> u64 {
        u64::from(self.s) * u64::from(self.n)
    }
}

/// Static description of a clicking policy. Runtime state lives in
/// [`AgentPolicyState`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AgentPolicy {
    Fixed { t0: u32 },
    Decreasing { t0: u32, kappa: f64 },
    AdaptiveDecreasing { t0: u32, tau: u32, x_drift: f64 },
}

impl AgentPolicy {
    pub fn t0(&self) -> u32 {
        match *self {
            AgentPolicy::Fixed { t0 }
            | AgentPolicy::Decreasing { t0, .. }
            | AgentPolicy::AdaptiveDecreasing { t0, .. } => t0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AgentPolicy::Fixed { .. } => "fixed",
            AgentPolicy::Decreasing { .. } => "decreasing",
            AgentPolicy::AdaptiveDecreasing { .. } => "adaptive",
        }
    }

    /// Validates the policy against a block length `s`.
    pub fn validate(&self, s: u32) -> Result<()> {
        let t0 = self.t0();
        if t0 > s {
            return Err(Error::InvalidParams(format!(
                "initial clicking count {t0} exceeds block length {s}"
            )));
        }
        match *self {
            AgentPolicy::Fixed { .. } => Ok(()),
            AgentPolicy::Decreasing { kappa, .. } => {
                if !kappa.is_finite() || kappa < 1.0 {
                    return Err(Error::InvalidParams(format!(
                        "halving factor must be a finite real >= 1, got {kappa}"
                    )));
                }
                Ok(())
            }
            AgentPolicy::AdaptiveDecreasing { tau, x_drift, .. } => {
                if tau == 0 {
                    return Err(Error::InvalidParams("decrement tau must be >= 1".into()));
                }
                if !x_drift.is_finite() || x_drift <= 0.0 {
                    return Err(Error::InvalidParams(format!(
                        "drift tolerance must be positive, got {x_drift}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Index of the first block with a zero clicking count under the
    /// `Decreasing` schedule. Only defined there, and only for `kappa > 1`
    /// (with `kappa = 1` the count never shrinks).
    pub fn first_zero_block(&self) -> Result<u32> {
        match *self {
            AgentPolicy::Decreasing { t0, kappa } => {
                if kappa <= 1.0 {
                    return Err(Error::NotApplicable(
                        "clicking count never reaches zero for kappa <= 1".into(),
                    ));
                }
                let mut t = t0;
                let mut block = 0u32;
                while t > 0 {
                    t = floor_div(t, kappa);
                    block += 1;
                }
                Ok(block)
            }
            _ => Err(Error::NotApplicable(
                "first zero block is defined for the decreasing policy only".into(),
            )),
        }
    }
}

/// `max(0, floor(t / kappa))` on a small non-negative integer count.
pub(crate) fn floor_div(t: u32, kappa: f64) -> u32 {
    let q = (f64::from(t) / kappa).floor();
    if q <= 0.0 {
        0
    } else {
        q as u32
    }
}

/// A policy plus its per-run mutable state. Small value type; block updates
/// are pure (state in, state out).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentPolicyState {
    policy: AgentPolicy,
    geometry: BlockGeometry,
    current_block: u32,
    current_t: u32,
}

impl AgentPolicyState {
    pub fn new(policy: AgentPolicy, geometry: BlockGeometry) -> Result<Self> {
        policy.validate(geometry.block_len())?;
        Ok(Self { policy, geometry, current_block: 0, current_t: policy.t0() })
    }

    pub fn policy(&self) -> &AgentPolicy {
        &self.policy
    }

    pub fn current_block(&self) -> u32 {
        self.current_block
    }

    /// Clicking count of the block currently in progress.
    pub fn current_t(&self) -> u32 {
        self.current_t
    }

    /// Click decision for position `step_in_block` (0-based) of the current
    /// block: click exactly on the first `current_t` steps.
    pub fn decide_click(&self, step_in_block: u32) -> bool {
        assert!(
            step_in_block < self.geometry.block_len(),
            "step {step_in_block} outside block of length {}",
            self.geometry.block_len()
        );
        step_in_block < self.current_t
    }

    /// Advances the policy across a block boundary. `x_end` is the opinion at
    /// the boundary, i.e. after the last update of the block just finished.
    #[must_use]
    pub fn end_of_block_update(&self, x_end: Opinion, x0: Opinion) -> Self {
        let next_t = match self.policy {
            AgentPolicy::Fixed { .. } => self.current_t,
            AgentPolicy::Decreasing { kappa, .. } => floor_div(self.current_t, kappa),
            AgentPolicy::AdaptiveDecreasing { tau, x_drift, .. } => {
                // Boundary equality counts as a trigger.
                if (x_end.value() - x0.value()).abs() >= x_drift {
                    self.current_t.saturating_sub(tau)
                } else {
                    self.current_t
                }
            }
        };
        Self {
            policy: self.policy,
            geometry: self.geometry,
            current_block: self.current_block + 1,
            current_t: next_t,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(s: u32, n: u32) -> BlockGeometry {
        BlockGeometry::new(s, n).unwrap()
    }

    fn op(v: f64) -> Opinion {
        Opinion::new(v).unwrap()
    }

    #[test]
    fn clicks_only_on_leading_steps() {
        let st = AgentPolicyState::new(AgentPolicy::Fixed { t0: 8 }, geom(8, 4)).unwrap();
        assert!(st.decide_click(7));

        let st = AgentPolicyState::new(AgentPolicy::Fixed { t0: 3 }, geom(8, 4)).unwrap();
        assert!(!st.decide_click(3));

        let st = AgentPolicyState::new(AgentPolicy::Fixed { t0: 0 }, geom(8, 4)).unwrap();
        assert!(!st.decide_click(0));
    }

    #[test]
    fn fixed_policy_never_changes() {
        let mut st = AgentPolicyState::new(AgentPolicy::Fixed { t0: 5 }, geom(8, 10)).unwrap();
        for _ in 0..10 {
            st = st.end_of_block_update(op(0.9), op(-1.0));
            assert_eq!(st.current_t(), 5);
        }
        assert_eq!(st.current_block(), 10);
    }

    #[test]
    fn decreasing_policy_halves_and_sticks_at_zero() {
        let pol = AgentPolicy::Decreasing { t0: 8, kappa: 2.0 };
        let mut st = AgentPolicyState::new(pol, geom(8, 10)).unwrap();
        let mut seen = vec![st.current_t()];
        for _ in 0..6 {
            st = st.end_of_block_update(op(0.0), op(0.0));
            seen.push(st.current_t());
        }
        assert_eq!(seen, vec![8, 4, 2, 1, 0, 0, 0]);
    }

    #[test]
    fn first_zero_block_matches_repeated_flooring() {
        // Independent check: run the state machine until the count is zero
        // and compare against the closed computation.
        for &(t0, kappa, expected) in
            &[(8u32, 2.0, 4u32), (1, 2.0, 1), (8, 8.0, 2), (9, 1.5, 5), (8, 3.0, 2)]
        {
            let pol = AgentPolicy::Decreasing { t0, kappa };
            assert_eq!(pol.first_zero_block().unwrap(), expected, "t0={t0} kappa={kappa}");

            let mut st = AgentPolicyState::new(pol, geom(16, 64)).unwrap();
            let mut blocks = 0;
            while st.current_t() > 0 {
                st = st.end_of_block_update(op(0.0), op(0.0));
                blocks += 1;
            }
            assert_eq!(blocks, expected, "state machine disagrees at t0={t0} kappa={kappa}");
        }
    }

    #[test]
    fn first_zero_block_rejects_other_policies_and_unit_kappa() {
        assert!(matches!(
            AgentPolicy::Fixed { t0: 8 }.first_zero_block(),
            Err(Error::NotApplicable(_))
        ));
        assert!(matches!(
            AgentPolicy::Decreasing { t0: 8, kappa: 1.0 }.first_zero_block(),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn adaptive_trigger_fires_on_boundary_equality() {
        // 0.5 and -0.5 are exactly representable, so the drift comes out as
        // exactly x_drift and exercises the >= comparison's equality case.
        let pol = AgentPolicy::AdaptiveDecreasing { t0: 8, tau: 3, x_drift: 0.5 };
        let st = AgentPolicyState::new(pol, geom(8, 4)).unwrap();
        let fired = st.end_of_block_update(op(-0.5), op(-1.0));
        assert_eq!(fired.current_t(), 5);
        // Strictly inside the tolerance stays put.
        let quiet = st.end_of_block_update(op(-0.75), op(-1.0));
        assert_eq!(quiet.current_t(), 8);
    }

    #[test]
    fn adaptive_decrement_floors_at_zero() {
        let pol = AgentPolicy::AdaptiveDecreasing { t0: 2, tau: 3, x_drift: 0.1 };
        let st = AgentPolicyState::new(pol, geom(8, 4)).unwrap();
        let next = st.end_of_block_update(op(0.9), op(-1.0));
        assert_eq!(next.current_t(), 0);
    }

    #[test]
    fn validation_rejects_malformed_policies() {
        assert!(AgentPolicy::Fixed { t0: 9 }.validate(8).is_err());
        assert!(AgentPolicy::Decreasing { t0: 8, kappa: 0.5 }.validate(8).is_err());
        assert!(AgentPolicy::AdaptiveDecreasing { t0: 8, tau: 0, x_drift: 0.1 }
            .validate(8)
            .is_err());
        assert!(AgentPolicy::AdaptiveDecreasing { t0: 8, tau: 1, x_drift: 0.0 }
            .validate(8)
            .is_err());
        assert!(BlockGeometry::new(0, 4).is_err());
        assert!(BlockGeometry::new(8, 0).is_err());
    }
}
