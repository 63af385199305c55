//! Randomized invariants over the full public surface: weight ranges, the
//! convexity identity, closed-form/simulation agreement, opinion hulls,
//! utility bounds, and metric axioms for the histogram distance.

use proptest::prelude::*;

use recloop_core::{
    agent_utility, distribution_distance, platform_payoff, replay_check, run, upsilon_fixed,
    AgentPolicy, BlockGeometry, DynamicsParams, Histogram, Opinion, PlatformPolicy, RewardFn,
    RunSpec,
};

fn params_strategy() -> impl Strategy<Value = DynamicsParams> {
    (0.01f64..0.45).prop_flat_map(|beta| (Just(beta), beta..=(1.0 - beta))).prop_map(
        |(beta, alpha)| DynamicsParams::new(alpha, beta).expect("sampled within invariants"),
    )
}

fn policy_strategy(s: u32) -> impl Strategy<Value = AgentPolicy> {
    prop_oneof![
        (0..=s).prop_map(|t0| AgentPolicy::Fixed { t0 }),
        (0..=s, 1.0f64..8.0).prop_map(|(t0, kappa)| AgentPolicy::Decreasing { t0, kappa }),
        (1..=s, 1..=s, 0.01f64..1.5).prop_map(|(t0, tau, x_drift)| {
            AgentPolicy::AdaptiveDecreasing { t0, tau, x_drift }
        }),
    ]
}

fn scenario_strategy() -> impl Strategy<Value = RunSpec> {
    (params_strategy(), 1u32..=10, 1u32..=12).prop_flat_map(|(params, s, blocks)| {
        (
            Just(params),
            Just(BlockGeometry::new(s, blocks).expect("s, n >= 1")),
            policy_strategy(s),
            prop_oneof![
                Just(RewardFn::Constant),
                (0.0f64..=1.0).prop_map(|c| RewardFn::LinearDistance { c }),
            ],
            0.0f64..=1.0,
            -1.0f64..=1.0,
            -1.0f64..=1.0,
            any::<u64>(),
        )
            .prop_map(|(params, geometry, agent, reward, lambda, x0, u0, seed)| RunSpec {
                params,
                geometry,
                agent,
                platform: PlatformPolicy::FixedRecommendation { u0 },
                reward,
                lambda,
                x0: Opinion::new(x0).expect("sampled in range"),
                seed,
            })
    })
}

proptest! {
    #[test]
    fn fixed_weights_are_convex_and_monotone_in_t0(
        params in params_strategy(),
        s in 1u32..=10,
        i in 0u32..=12,
        frac in 0.0f64..=1.0,
    ) {
        let t0 = ((f64::from(s) + 1.0) * frac) as u32 % (s + 1);
        let w = upsilon_fixed(&params, s, t0, i).unwrap();
        prop_assert!((0.0..=1.0).contains(&w.upsilon));
        prop_assert!((0.0..=1.0).contains(&w.gamma));
        prop_assert!((w.gamma + w.upsilon - 1.0).abs() <= 1e-12);
        if t0 < s {
            let more = upsilon_fixed(&params, s, t0 + 1, i).unwrap();
            prop_assert!(more.upsilon + 1e-12 >= w.upsilon);
        }
    }

    #[test]
    fn simulated_boundaries_agree_with_fixed_closed_form(
        params in params_strategy(),
        s in 1u32..=10,
        frac in 0.0f64..=1.0,
        x0 in -1.0f64..=1.0,
        u0 in -1.0f64..=1.0,
    ) {
        let t0 = ((f64::from(s) + 1.0) * frac) as u32 % (s + 1);
        let spec = RunSpec {
            params,
            geometry: BlockGeometry::new(s, 12).unwrap(),
            agent: AgentPolicy::Fixed { t0 },
            platform: PlatformPolicy::FixedRecommendation { u0 },
            reward: RewardFn::Constant,
            lambda: 0.5,
            x0: Opinion::new(x0).unwrap(),
            seed: 0,
        };
        let xs = run(&spec).unwrap();
        for (i, &x) in xs.boundary_opinions().iter().enumerate() {
            let w = upsilon_fixed(&params, s, t0, i as u32).unwrap();
            let closed = w.gamma * x0 + w.upsilon * u0;
            prop_assert!((x - closed).abs() <= 1e-9, "boundary {i}: {x} vs {closed}");
        }
    }

    #[test]
    fn every_opinion_stays_in_the_hull(spec in scenario_strategy()) {
        let trace = run(&spec).unwrap();
        let u0 = match spec.platform {
            PlatformPolicy::FixedRecommendation { u0 } => u0,
            _ => unreachable!("scenario strategy only emits fixed recommendations"),
        };
        let x0 = spec.x0.value();
        let (lo, hi) = (x0.min(u0) - 1e-12, x0.max(u0) + 1e-12);
        for step in &trace.steps {
            prop_assert!(step.x >= lo && step.x <= hi, "step {}: {}", step.k, step.x);
        }
        prop_assert!(trace.final_opinion >= lo && trace.final_opinion <= hi);
    }

    #[test]
    fn block_counts_never_grow_and_bound_the_block_length(spec in scenario_strategy()) {
        let trace = run(&spec).unwrap();
        let s = spec.geometry.block_len();
        prop_assert_eq!(trace.steps.len() as u64, spec.geometry.horizon());
        prop_assert_eq!(trace.blocks.len() as u32, spec.geometry.blocks());
        for pair in trace.blocks.windows(2) {
            prop_assert!(pair[1].t <= pair[0].t, "counts grew: {} -> {}", pair[0].t, pair[1].t);
        }
        for b in &trace.blocks {
            prop_assert!(b.t <= s);
        }
    }

    #[test]
    fn utilities_respect_their_elementary_bounds(spec in scenario_strategy()) {
        let trace = run(&spec).unwrap();
        let p = platform_payoff(&trace, &spec.reward).unwrap();
        prop_assert!((0.0..=1.0).contains(&p), "platform payoff {p}");
        let u = agent_utility(&trace, &spec.reward, spec.lambda).unwrap();
        let lo = -(1.0 - spec.lambda) * 2.0 - 1e-12;
        let hi = spec.lambda + 1e-12;
        prop_assert!(u >= lo && u <= hi, "agent utility {u} outside [{lo}, {hi}]");
    }

    #[test]
    fn fresh_traces_always_replay(spec in scenario_strategy()) {
        let trace = run(&spec).unwrap();
        prop_assert!(replay_check(&trace).is_ok());
    }

    #[test]
    fn histogram_distance_is_a_metric(
        xs in prop::collection::vec(-1.0f64..=1.0, 1..40),
        ys in prop::collection::vec(-1.0f64..=1.0, 1..40),
        zs in prop::collection::vec(-1.0f64..=1.0, 1..40),
    ) {
        let a = Histogram::from_values(40, &xs).unwrap();
        let b = Histogram::from_values(40, &ys).unwrap();
        let c = Histogram::from_values(40, &zs).unwrap();
        let d = |p: &Histogram, q: &Histogram| distribution_distance(p, q).unwrap();
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() <= 1e-15);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
        prop_assert!(d(&a, &b) <= 2.0 + 1e-12);
    }
}
