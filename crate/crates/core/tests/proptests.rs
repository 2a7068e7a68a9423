//! Property tests over the model IR, factor space, budget math, and the
//! solver pair.

mod common;

use common::{random_oracle_network, Rng};
use num_bigint::BigUint;
use num_traits::One;
use proptest::prelude::*;
use scalesynth_core::budget::{compute_budget, BudgetResult, BudgetSpec, ClassScope};
use scalesynth_core::factorspace::{
    count_solution_space, divisors, enumerate_window, factor_sets, DEFAULT_ENUMERATION_CAP,
};
use scalesynth_core::ir::{parse_document, to_document_string};
use scalesynth_core::numeric::{ratio, ratio_u64};
use scalesynth_core::solver::{
    solve_bruteforce, solve_dp, BottleneckPolicy, Objective, SolveRequest,
};

fn networks() -> impl Strategy<Value = scalesynth_core::ir::Network> {
    any::<u64>().prop_map(|seed| {
        let mut rng = Rng::new(seed);
        random_oracle_network(&mut rng, 6, 50_000)
    })
}

proptest! {
    #[test]
    fn document_round_trip_is_identity(net in networks()) {
        let text = to_document_string(&net);
        let parsed = parse_document(&text).unwrap();
        prop_assert_eq!(parsed.network, net);
    }

    #[test]
    fn param_count_strictly_monotone_in_depth(net in networks(), bump in 1u64..64) {
        let base = net.param_count().unwrap();
        let mut rng = Rng::new(base ^ bump);
        let l = rng.below(net.macro_layers.len() as u64) as usize;
        let b = rng.below(net.macro_layers[l].branches.len() as u64) as usize;
        let m = rng.below(net.macro_layers[l].branches[b].micro_layers().len() as u64) as usize;
        let mut bumped = net.clone();
        bumped.macro_layers[l].branches[b].0[m].depth += bump;
        prop_assert!(bumped.param_count().unwrap() > base);
    }

    #[test]
    fn factor_sets_divide_every_depth(net in networks()) {
        for (set, layer) in factor_sets(&net).iter().zip(&net.macro_layers) {
            prop_assert!(set.factors.contains(&1));
            prop_assert!(set.factors.windows(2).all(|w| w[0] < w[1]));
            for depth in layer.depths() {
                let enumerated = divisors(depth);
                for f in &set.factors {
                    prop_assert_eq!(depth % f, 0);
                    prop_assert!(enumerated.contains(f));
                }
            }
        }
    }

    #[test]
    fn affine_scaling_preserves_contribution_ratios(net in networks(), pick in any::<u64>()) {
        // d/q is one constant per macro-layer: the chosen factor, exactly
        let mut rng = Rng::new(pick | 1);
        let factors: Vec<u64> = factor_sets(&net)
            .iter()
            .map(|s| s.factors[rng.below(s.factors.len() as u64) as usize])
            .collect();
        let plan = scalesynth_core::solver::ScalePlan::for_network(&net, factors.clone()).unwrap();
        for ((layer, depths), factor) in net.macro_layers.iter().zip(&plan.scaled_depths).zip(&factors) {
            for (branch, scaled_branch) in layer.branches.iter().zip(depths) {
                for (micro, &q) in branch.micro_layers().iter().zip(scaled_branch) {
                    prop_assert_eq!(micro.depth, q * factor);
                }
            }
        }
    }

    #[test]
    fn covering_window_count_equals_closed_form(net in networks()) {
        let out = enumerate_window(&net, &ratio(1, 1), &ratio(1, 1), DEFAULT_ENUMERATION_CAP, None)
            .unwrap();
        prop_assert_eq!(&out.matching, &out.total_space);
        prop_assert_eq!(&out.total_space, &count_solution_space(&net, true));
        // every factor assignment scales to integer depths, so the affine
        // count is also a lower bound on the non-affine one
        prop_assert!(count_solution_space(&net, false) >= out.total_space);
    }

    #[test]
    fn budget_fraction_monotone_in_beta_and_lambda(
        alpha in 2u64..2000,
        beta_lo in 1u64..1999,
        lambda_num in 1u64..100,
    ) {
        let beta_lo = beta_lo.min(alpha - 1);
        let beta_hi = beta_lo + 1;
        let lambda = ratio_u64(lambda_num, 100);
        let spec = |beta, lambda: &num_rational::BigRational| BudgetSpec {
            phi: 1_000_000,
            scope: ClassScope::new(alpha, beta, lambda.clone()).unwrap(),
            scope_aware: true,
            window_tolerance: ratio(0, 1),
        };
        let lo = compute_budget(&spec(beta_lo, &lambda)).unwrap();
        let hi = compute_budget(&spec(beta_hi, &lambda)).unwrap();
        prop_assert!(hi.fraction >= lo.fraction);

        if lambda_num < 100 {
            let bigger_lambda = ratio_u64(lambda_num + 1, 100);
            let boosted = compute_budget(&spec(beta_lo, &bigger_lambda)).unwrap();
            prop_assert!(boosted.fraction >= lo.fraction);
        }
    }
}

// fewer cases for the expensive oracle comparison; the acceptance suite
// runs the full deterministic sweep
proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn dp_matches_bruteforce(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let net = random_oracle_network(&mut rng, 5, 20_000);
        let phi = net.param_count().unwrap();
        let policy = match rng.below(3) {
            0 => BottleneckPolicy::default(),
            1 => BottleneckPolicy::baseline_relative(),
            _ => BottleneckPolicy::strict_nondecreasing(),
        };
        let fraction = ratio_u64(1 + rng.below(100), 100);
        let budget = BudgetResult {
            phi_prime_floor: scalesynth_core::numeric::ceil_mul(phi, &fraction),
            gamma_ideal: ratio_u64(phi, 1000),
            fraction: fraction.clone(),
        };
        let objective = if rng.chance(1, 2) {
            Objective::CapMaximize
        } else {
            Objective::Window { tolerance: ratio_u64(rng.below(40), 1000) }
        };
        let req = SolveRequest::new(net, budget, policy, objective);
        let dp = solve_dp(&req);
        let brute = solve_bruteforce(&req, DEFAULT_ENUMERATION_CAP);
        match (dp, brute) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.phi_prime, b.phi_prime);
                prop_assert_eq!(a, b);
            }
            (Err(a), Err(b)) => prop_assert_eq!(format!("{a}"), format!("{b}")),
            (a, b) => prop_assert!(false, "solver disagreement: dp={a:?} brute={b:?}"),
        }
    }
}

#[test]
fn solution_space_is_product_of_factor_set_sizes() {
    let mut rng = Rng::new(7);
    for _ in 0..50 {
        let net = random_oracle_network(&mut rng, 6, 1_000_000);
        let product = factor_sets(&net).iter().fold(BigUint::one(), |acc, s| {
            acc * BigUint::from(s.factors.len())
        });
        assert_eq!(count_solution_space(&net, true), product);
    }
}
