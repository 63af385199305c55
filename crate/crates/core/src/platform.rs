//! Recommendation policies.
//!
//! `FixedRecommendation` emits one constant value. `ExplorePeriodically`
//! draws a fresh recommendation from its exploration distribution at steps
//! `0, delta, 2*delta, ...` and otherwise replays the best recommendation
//! observed so far, where "best" means the highest clicked platform reward
//! and ties keep the earliest step. Rewards of steps that were not clicked
//! count as zero, so with no clicks at all the earliest explored value wins.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::DistSpec;
use crate::dynamics::Recommendation;
use crate::error::{Error, Result};

/// Static description of a platform policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PlatformPolicy {
    FixedRecommendation { u0: f64 },
    ExplorePeriodically { delta: u32, explore_dist: DistSpec },
}

impl PlatformPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PlatformPolicy::FixedRecommendation { u0 } => {
                Recommendation::new(u0).map(|_| ())
            }
            PlatformPolicy::ExplorePeriodically { delta, explore_dist } => {
                if delta == 0 {
                    return Err(Error::InvalidParams(
                        "exploration period must be >= 1".into(),
                    ));
                }
                explore_dist.validate()
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PlatformPolicy::FixedRecommendation { .. } => "fixed-recommendation",
            PlatformPolicy::ExplorePeriodically { .. } => "explore-periodically",
        }
    }
}

/// One observed step: what was shown, whether it was clicked, and the clicked
/// platform reward (zero when not clicked).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub step: u64,
    pub u: f64,
    pub clicked: bool,
    pub reward: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct BestRecord {
    reward: f64,
    u: f64,
    step: u64,
}

/// Per-run platform state. The RNG is a named, seedable generator so runs
/// replay exactly from (policy, seed).
#[derive(Debug, Clone)]
pub struct PlatformState {
    policy: PlatformPolicy,
    rng: ChaCha8Rng,
    best: Option<BestRecord>,
    history: Vec<Observation>,
}

impl PlatformState {
    pub fn new(policy: PlatformPolicy, seed: u64) -> Result<Self> {
        policy.validate()?;
        Ok(Self { policy, rng: ChaCha8Rng::seed_from_u64(seed), best: None, history: Vec::new() })
    }

    pub fn policy(&self) -> &PlatformPolicy {
        &self.policy
    }

    pub fn history(&self) -> &[Observation] {
        &self.history
    }

    /// Highest clicked reward observed so far, with its recommendation and
    /// step index. Ties keep the earliest step; updates require a strict
    /// improvement.
    pub fn best(&self) -> Option<(f64, f64, u64)> {
        self.best.map(|b| (b.reward, b.u, b.step))
    }

    /// Recommendation for step `k`.
    pub fn recommend(&mut self, k: u64) -> Recommendation {
        let value = match self.policy {
            PlatformPolicy::FixedRecommendation { u0 } => u0,
            PlatformPolicy::ExplorePeriodically { delta, explore_dist } => {
                if k.is_multiple_of(u64::from(delta)) {
                    explore_dist.sample(&mut self.rng)
                } else {
                    // Step 0 always explores, so by the first exploitation
                    // step at least one observation has been recorded.
                    self.best
                        .map(|b| b.u)
                        .expect("exploitation before any observed step")
                }
            }
        };
        Recommendation::new(value).expect("policies only emit in-range values")
    }

    /// Records the outcome of step `k`. `reward` must already be the clicked
    /// reward, i.e. zero whenever `clicked` is false.
    pub fn observe_outcome(&mut self, k: u64, u: Recommendation, clicked: bool, reward: f64) {
        debug_assert!(clicked || reward == 0.0, "unclicked steps carry zero reward");
        self.history.push(Observation { step: k, u: u.value(), clicked, reward });
        match self.best {
            None => self.best = Some(BestRecord { reward, u: u.value(), step: k }),
            Some(b) if reward > b.reward => {
                self.best = Some(BestRecord { reward, u: u.value(), step: k })
            }
            Some(_) => {}
        }
    }
}
