//! Opinion update kernel.
//!
//! One discrete step moves the current opinion toward a convex mixture of the
//! innate opinion `x0`, the previous opinion, and (only when the user clicked)
//! the recommendation shown at that step:
//!
//! ```text
//! clicked:      x' = alpha * x0 + beta * x + (1 - alpha - beta) * u
//! not clicked:  x' = (alpha / (alpha + beta)) * x0 + (beta / (alpha + beta)) * x
//! ```
//!
//! Both branches are convex combinations, so opinions can never leave the
//! hull of their inputs. Nothing is ever clipped; an assertion guards the
//! convexity invariant instead, because clipping would silently mask bugs in
//! the update itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute slack admitted when asserting convex-hull containment.
/// Rounding in a three-term convex combination perturbs the result by a few
/// ulps; genuine dynamics bugs overshoot by far more than this.
pub const HULL_SLACK: f64 = 1e-12;

/// An opinion value in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Opinion(f64);

impl TryFrom<f64> for Opinion {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Opinion::new(value)
    }
}

impl From<Opinion> for f64 {
    fn from(o: Opinion) -> f64 {
        o.0
    }
}

impl Opinion {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || !(-1.0..=1.0).contains(&value) {
            return Err(Error::InvalidParams(format!(
                "opinion must lie in [-1, 1], got {value}"
            )));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// A recommendation value in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Recommendation(f64);

impl TryFrom<f64> for Recommendation {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Recommendation::new(value)
    }
}

impl From<Recommendation> for f64 {
    fn from(r: Recommendation) -> f64 {
        r.0
    }
}

impl Recommendation {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || !(-1.0..=1.0).contains(&value) {
            return Err(Error::InvalidParams(format!(
                "recommendation must lie in [-1, 1], got {value}"
            )));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Validated update weights plus the derived constants used throughout the
/// closed forms.
///
/// Constraints: `alpha, beta` in `[0, 1]`, `0 < alpha + beta <= 1`,
/// `alpha >= beta`, and `beta > 0` strictly. A zero `beta` would make the
/// no-click map forget the current opinion entirely and every derived
/// constant trivial, so it is rejected rather than special-cased.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct DynamicsParams {
    alpha: f64,
    beta: f64,
    // Derived once at validation; all in (0, 1] for valid inputs.
    z: f64,
    b: f64,
    eta: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawParams {
    alpha: f64,
    beta: f64,
}

impl TryFrom<RawParams> for DynamicsParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        DynamicsParams::new(raw.alpha, raw.beta)
    }
}

impl From<DynamicsParams> for RawParams {
    fn from(p: DynamicsParams) -> Self {
        RawParams { alpha: p.alpha, beta: p.beta }
    }
}

impl DynamicsParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidParams("weights must be finite".into()));
        }
        if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&beta) {
            return Err(Error::InvalidParams(format!(
                "weights must lie in [0, 1], got alpha={alpha}, beta={beta}"
            )));
        }
        if beta == 0.0 {
            return Err(Error::InvalidParams("beta must be strictly positive".into()));
        }
        if alpha < beta {
            return Err(Error::InvalidParams(format!(
                "innate weight must dominate: alpha={alpha} < beta={beta}"
            )));
        }
        let z = alpha + beta;
        if z <= 0.0 || z > 1.0 {
            return Err(Error::InvalidParams(format!(
                "alpha + beta must lie in (0, 1], got {z}"
            )));
        }
        // alpha >= beta > 0 and alpha + beta <= 1 imply beta < 1, so eta is
        // well defined and all three constants land in (0, 1].
        let b = beta / z;
        let eta = alpha / (1.0 - beta);
        Ok(Self { alpha, beta, z, b, eta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `alpha + beta`: total anchoring weight of a clicked step.
    pub fn z(&self) -> f64 {
        self.z
    }

    /// `beta / (alpha + beta)`: per-step memory of the no-click map.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// `alpha / (1 - beta)`: innate share of the always-click fixed point.
    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// One opinion update. `clicked` selects the branch; the no-click branch
/// ignores the recommendation entirely.
pub fn step(
    params: &DynamicsParams,
    x0: Opinion,
    x_prev: Opinion,
    u_prev: Recommendation,
    clicked: bool,
) -> Opinion {
    let (x0, x, u) = (x0.value(), x_prev.value(), u_prev.value());
    let next = if clicked {
        params.alpha * x0 + params.beta * x + (1.0 - params.z) * u
    } else {
        (1.0 - params.b) * x0 + params.b * x
    };

    // Convex-hull containment, up to rounding dust. The recommendation only
    // participates in the clicked branch.
    let (lo, hi) = if clicked {
        (x0.min(x).min(u), x0.max(x).max(u))
    } else {
        (x0.min(x), x0.max(x))
    };
    assert!(
        next >= lo - HULL_SLACK && next <= hi + HULL_SLACK,
        "step left the convex hull: {next} outside [{lo}, {hi}]"
    );

    // Rounding can push a result a few ulps past a hull endpoint that sits
    // exactly on the domain boundary; fold that dust back. Anything larger
    // was already rejected above.
    Opinion(next.clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: f64, beta: f64) -> DynamicsParams {
        DynamicsParams::new(alpha, beta).unwrap()
    }

    #[test]
    fn derived_constants_at_reference_point() {
        let p = params(0.25, 0.2);
        assert!((p.z() - 0.45).abs() < 1e-15);
        assert!((p.b() - 0.2 / 0.45).abs() < 1e-15);
        assert!((p.eta() - 0.3125).abs() < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_weights() {
        assert!(DynamicsParams::new(0.2, 0.25).is_err()); // alpha < beta
        assert!(DynamicsParams::new(0.6, 0.5).is_err()); // sum > 1
        assert!(DynamicsParams::new(0.25, 0.0).is_err()); // beta = 0
        assert!(DynamicsParams::new(-0.1, 0.1).is_err());
        assert!(DynamicsParams::new(f64::NAN, 0.1).is_err());
        assert!(DynamicsParams::new(1.1, 0.2).is_err());
    }

    #[test]
    fn boundary_weights_accepted() {
        // alpha + beta = 1 is allowed.
        let p = params(0.5, 0.5);
        assert!((p.z() - 1.0).abs() < 1e-15);
        assert!((p.eta() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn clicked_step_hand_value() {
        // 0.25*(-1) + 0.2*(-1) + 0.55*1 = 0.1
        let p = params(0.25, 0.2);
        let next = step(
            &p,
            Opinion::new(-1.0).unwrap(),
            Opinion::new(-1.0).unwrap(),
            Recommendation::new(1.0).unwrap(),
            true,
        );
        assert!((next.value() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn shared_value_is_a_fixed_point_of_both_branches() {
        let p = params(0.25, 0.2);
        let v = Opinion::new(0.5).unwrap();
        let u = Recommendation::new(0.5).unwrap();
        let clicked = step(&p, v, v, u, true);
        let skipped = step(&p, v, v, u, false);
        assert!((clicked.value() - 0.5).abs() < 1e-15);
        assert!((skipped.value() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn no_click_contracts_toward_innate() {
        let p = params(0.25, 0.2);
        let x0 = Opinion::new(-0.4).unwrap();
        let x = Opinion::new(0.9).unwrap();
        let u = Recommendation::new(1.0).unwrap();
        let next = step(&p, x0, x, u, false);
        let expected = p.b() * (x.value() - x0.value());
        assert!(((next.value() - x0.value()) - expected).abs() < 1e-14);
    }

    #[test]
    fn endpoints_survive_repeated_updates() {
        // Opinion pinned at the domain boundary must not drift outside it.
        let p = params(0.25, 0.2);
        let x0 = Opinion::new(-1.0).unwrap();
        let u = Recommendation::new(-1.0).unwrap();
        let mut x = x0;
        for k in 0..1000 {
            x = step(&p, x0, x, u, k % 2 == 0);
            assert!(x.value() >= -1.0 && x.value() <= 1.0);
            assert!((x.value() + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn opinion_newtype_rejects_out_of_range() {
        assert!(Opinion::new(1.0 + 1e-9).is_err());
        assert!(Opinion::new(f64::INFINITY).is_err());
        assert!(Recommendation::new(-1.5).is_err());
        assert!(Opinion::new(1.0).is_ok());
        assert!(Opinion::new(-1.0).is_ok());
    }
}
