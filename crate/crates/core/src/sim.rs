//! Closed-loop run of one agent against one platform.
//!
//! Step order inside step `k`:
//!
//! 1. the platform emits `u_k` (drawing from its RNG on exploration steps),
//! 2. the agent decides `clk_k` from its position in the current block,
//! 3. both rewards are evaluated at the pre-update pair `(x_k, u_k)`,
//! 4. the opinion updates to `x_{k+1}`,
//! 5. the platform observes `(k, u_k, clk_k, reward)`.
//!
//! After the last step of each block the agent's block update runs and reads
//! the opinion that the block left behind, `x_{(i+1)s}`.
//!
//! A trace carries its full [`RunSpec`], so any trace can be re-executed and
//! compared bit for bit; see [`replay_check`].

use serde::{Deserialize, Serialize};

use crate::agent::{AgentPolicy, AgentPolicyState, BlockGeometry};
use crate::dynamics::{step, DynamicsParams, Opinion};
use crate::error::{Error, Result};
use crate::payoffs::{validate_lambda, RewardFn};
use crate::platform::{PlatformPolicy, PlatformState};

/// Everything needed to reproduce a run. Serialized verbatim into trace
/// metadata; parsing it back and re-running yields identical artifacts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub params: DynamicsParams,
    pub geometry: BlockGeometry,
    pub agent: AgentPolicy,
    pub platform: PlatformPolicy,
    /// Applied to both the agent and platform sides of a clicked step.
    pub reward: RewardFn,
    pub lambda: f64,
    pub x0: Opinion,
    pub seed: u64,
}

impl RunSpec {
    pub fn validate(&self) -> Result<()> {
        self.agent.validate(self.geometry.block_len())?;
        self.platform.validate()?;
        self.reward.validate()?;
        validate_lambda(self.lambda)?;
        Ok(())
    }
}

/// State of step `k` before the opinion update, plus the decision and
/// rewards taken there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: u64,
    pub x: f64,
    pub u: f64,
    pub clicked: bool,
    pub agent_reward: f64,
    pub platform_reward: f64,
}

/// Block `index` started at opinion `x_start` and clicked its first `t`
/// steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub index: u32,
    pub x_start: f64,
    pub t: u32,
}

/// A completed run: one step record per step, one block record per block,
/// and the opinion left after the final step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionTrace {
    pub spec: RunSpec,
    pub steps: Vec<StepRecord>,
    pub blocks: Vec<BlockRecord>,
    pub final_opinion: f64,
    /// Clicking count the policy would apply to the block after the horizon.
    pub final_t: u32,
}

impl OpinionTrace {
    pub fn x0(&self) -> f64 {
        self.spec.x0.value()
    }

    /// Opinions at block boundaries `0, s, 2s, ..., n*s`; `n + 1` values.
    pub fn boundary_opinions(&self) -> Vec<f64> {
        let mut xs: Vec<f64> = self.blocks.iter().map(|b| b.x_start).collect();
        xs.push(self.final_opinion);
        xs
    }
}

pub fn run(spec: &RunSpec) -> Result<OpinionTrace> {
    spec.validate()?;
    let s = spec.geometry.block_len();
    let horizon = spec.geometry.horizon();

    let mut agent = AgentPolicyState::new(spec.agent, spec.geometry)?;
    let mut platform = PlatformState::new(spec.platform, spec.seed)?;
    let mut x = spec.x0;

    let mut steps = Vec::with_capacity(horizon as usize);
    let mut blocks = Vec::with_capacity(spec.geometry.blocks() as usize);

    for k in 0..horizon {
        let pos = (k % u64::from(s)) as u32;
        if pos == 0 {
            blocks.push(BlockRecord {
                index: agent.current_block(),
                x_start: x.value(),
                t: agent.current_t(),
            });
        }

        let u = platform.recommend(k);
        let clicked = agent.decide_click(pos);
        let distance = (x.value() - u.value()).abs();
        let agent_reward = if clicked { spec.reward.eval(distance) } else { 0.0 };
        let platform_reward = if clicked { spec.reward.eval(distance) } else { 0.0 };

        let x_next = step(&spec.params, spec.x0, x, u, clicked);
        platform.observe_outcome(k, u, clicked, platform_reward);
        steps.push(StepRecord { k, x: x.value(), u: u.value(), clicked, agent_reward, platform_reward });

        x = x_next;
        if pos == s - 1 {
            agent = agent.end_of_block_update(x, spec.x0);
        }
    }

    Ok(OpinionTrace {
        spec: *spec,
        steps,
        blocks,
        final_opinion: x.value(),
        final_t: agent.current_t(),
    })
}

/// Re-executes the trace's own spec and demands bitwise identity with the
/// recorded steps, blocks and final opinion. Returns the first divergent
/// step index on failure.
pub fn replay_check(trace: &OpinionTrace) -> Result<()> {
    let fresh = run(&trace.spec)?;

    let n = trace.steps.len().min(fresh.steps.len());
    for i in 0..n {
        let (a, b) = (&trace.steps[i], &fresh.steps[i]);
        let same = a.k == b.k
            && a.x.to_bits() == b.x.to_bits()
            && a.u.to_bits() == b.u.to_bits()
            && a.clicked == b.clicked
            && a.agent_reward.to_bits() == b.agent_reward.to_bits()
            && a.platform_reward.to_bits() == b.platform_reward.to_bits();
        if !same {
            return Err(Error::CorruptTrace { step: a.k });
        }
    }
    if trace.steps.len() != fresh.steps.len() {
        return Err(Error::CorruptTrace { step: n as u64 });
    }
    for (a, b) in trace.blocks.iter().zip(&fresh.blocks) {
        if a.index != b.index || a.x_start.to_bits() != b.x_start.to_bits() || a.t != b.t {
            return Err(Error::CorruptTrace {
                step: u64::from(a.index) * u64::from(trace.spec.geometry.block_len()),
            });
        }
    }
    if trace.blocks.len() != fresh.blocks.len()
        || trace.final_opinion.to_bits() != fresh.final_opinion.to_bits()
        || trace.final_t != fresh.final_t
    {
        return Err(Error::CorruptTrace { step: trace.spec.geometry.horizon() });
    }
    Ok(())
}
