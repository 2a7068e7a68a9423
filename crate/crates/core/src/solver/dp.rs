//! Exact dynamic program over reachable parameter sums.
//!
//! State is (macro-layer, factor chosen there, set of reachable cumulative
//! parameter sums); the sum sets are dense bit-vectors bounded by the
//! baseline count, so a layer transition is a handful of shifted ORs. The
//! optimum `phi'` is read off the final layer's union; the plan itself is
//! reconstructed by intersecting forward- and backward-reachable sums and
//! walking the resulting trajectory graph under the tie-break (largest
//! minimum channel ratio, then lexicographically smallest factors).
//!
//! With a quantization granularity `g`, contributions are rounded up to
//! multiples of `g`: reachable-state size shrinks by `g`, any returned
//! plan still respects the cap, but optimality is no longer guaranteed and
//! results are reported as approximate.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::solver::bitset::Bitset;
use crate::solver::{
    Infeasibility, Instance, MinRatio, Objective, ScalePlan, SolveError, SolveRequest,
};

/// Optimal plan for the request, or an infeasibility report carrying the
/// tightest policy-feasible `phi'` on each side of the admissible range.
pub fn solve_dp(req: &SolveRequest) -> Result<ScalePlan, SolveError> {
    let inst = Instance::build(&req.network, &req.policy)?;
    req.validate(inst.phi)?;
    let granularity = req.quantization.unwrap_or(1);
    if granularity > 1 && matches!(req.objective, Objective::Window { .. }) {
        return Err(SolveError::InvalidRequest(
            "quantization applies to cap-maximize mode; window mode needs exact sums".into(),
        ));
    }

    let n = inst.layer_count();
    let quantize = |v: u64| v.div_ceil(granularity);
    let contrib: Vec<Vec<Vec<u64>>> = inst
        .contrib
        .iter()
        .map(|layer| {
            layer
                .iter()
                .map(|row| row.iter().map(|&c| quantize(c)).collect())
                .collect()
        })
        .collect();

    // contributions are maximal at factor 1 (index 0 everywhere)
    let bound: u64 = (0..n).map(|i| contrib[i][0][0]).sum();
    let nbits = bound as usize + 1;

    let (raw_lo, raw_hi) = req.objective_range(inst.phi);
    let lo = if granularity == 1 {
        raw_lo.max(0) as u64
    } else {
        0
    };
    let hi = if granularity == 1 {
        raw_hi.min(bound as i128)
    } else {
        // floor(cap / g): a quantized sum within this bound over-approximates
        // the true sum, so the cap can never be exceeded
        raw_hi.div_euclid(granularity as i128).min(bound as i128)
    };

    // forward reachable sums per (layer, factor)
    let mut fwd: Vec<Vec<Bitset>> = Vec::with_capacity(n);
    let first: Vec<Bitset> = (0..inst.factor_sets[0].len())
        .map(|b| {
            let mut set = Bitset::new(nbits);
            set.set(contrib[0][0][b] as usize);
            set
        })
        .collect();
    fwd.push(first);
    for i in 1..n {
        let (prev_layers, _) = fwd.split_at(i);
        let prev = &prev_layers[i - 1];
        let layer: Vec<Bitset> = (0..inst.factor_sets[i].len())
            .into_par_iter()
            .map(|b| {
                let mut acc = Bitset::new(nbits);
                for (a, prev_set) in prev.iter().enumerate() {
                    if inst.transition_ok[i][a][b] {
                        acc.or_shifted(prev_set, contrib[i][a][b] as usize);
                    }
                }
                acc
            })
            .collect();
        fwd.push(layer);
    }

    let mut finals = Bitset::new(nbits);
    for set in &fwd[n - 1] {
        finals.or(set);
    }

    let opt = if hi >= lo as i128 && hi >= 0 {
        finals.max_in_range(lo as usize, hi as usize)
    } else {
        None
    };
    let Some(opt) = opt else {
        let below = match lo {
            0 => None,
            lo => finals.max_in_range(0, lo as usize - 1),
        };
        let above_from = if hi < 0 { 0usize } else { hi as usize + 1 };
        let above = finals.min_in_range(above_from, bound as usize);
        return Err(SolveError::Infeasible(Infeasibility {
            nearest_below: below.map(|s| s as u64 * granularity),
            nearest_above: above.map(|s| s as u64 * granularity),
        }));
    };
    let opt = opt as u64;

    // backward reachable suffix sums per (layer, factor)
    let mut bwd: Vec<Vec<Bitset>> = (0..n).map(|_| Vec::new()).collect();
    bwd[n - 1] = (0..inst.factor_sets[n - 1].len())
        .map(|_| {
            let mut set = Bitset::new(nbits);
            set.set(0);
            set
        })
        .collect();
    for i in (0..n.saturating_sub(1)).rev() {
        let next = &bwd[i + 1];
        bwd[i] = (0..inst.factor_sets[i].len())
            .into_par_iter()
            .map(|a| {
                let mut acc = Bitset::new(nbits);
                for (b, next_set) in next.iter().enumerate() {
                    if inst.transition_ok[i + 1][a][b] {
                        acc.or_shifted(next_set, contrib[i + 1][a][b] as usize);
                    }
                }
                acc
            })
            .collect();
    }

    let mut recon = Reconstruction {
        inst: &inst,
        contrib: &contrib,
        fwd: &fwd,
        bwd: &bwd,
        opt,
        suffix_memo: HashMap::new(),
    };

    let starts: Vec<(usize, u64)> = (0..inst.factor_sets[0].len())
        .map(|b| (b, contrib[0][0][b]))
        .filter(|&(b, s)| recon.on_optimal_trajectory(0, b, s))
        .collect();
    let best_ratio = starts
        .iter()
        .map(|&(b, s)| recon.suffix_bottleneck(0, b, s))
        .max()
        .expect("optimum is reachable, so an optimal start exists");

    let (mut cur_idx, mut cur_sum) = starts
        .iter()
        .copied()
        .find(|&(b, s)| recon.suffix_bottleneck(0, b, s) >= best_ratio)
        .expect("a start attains the best suffix ratio");
    let mut factors = Vec::with_capacity(n);
    factors.push(inst.factor_sets[0][cur_idx]);
    // several parallel tables are indexed by (i, c); plain index loops
    #[allow(clippy::needless_range_loop)]
    for i in 1..n {
        let mut stepped = false;
        for c in 0..inst.factor_sets[i].len() {
            if !inst.transition_ok[i][cur_idx][c] {
                continue;
            }
            let next_sum = cur_sum + contrib[i][cur_idx][c];
            if recon.on_optimal_trajectory(i, c, next_sum)
                && inst.transition_ratio(i, cur_idx, c) >= best_ratio
                && recon.suffix_bottleneck(i, c, next_sum) >= best_ratio
            {
                factors.push(inst.factor_sets[i][c]);
                cur_idx = c;
                cur_sum = next_sum;
                stepped = true;
                break;
            }
        }
        debug_assert!(stepped, "optimal trajectory must continue at layer {i}");
        if !stepped {
            return Err(SolveError::InvalidRequest(
                "internal reconstruction failure".into(),
            ));
        }
    }

    let plan = ScalePlan::for_network(&req.network, factors)?;
    if granularity == 1 {
        debug_assert_eq!(plan.phi_prime, opt);
    }
    Ok(plan)
}

struct Reconstruction<'a> {
    inst: &'a Instance,
    contrib: &'a [Vec<Vec<u64>>],
    fwd: &'a [Vec<Bitset>],
    bwd: &'a [Vec<Bitset>],
    opt: u64,
    suffix_memo: HashMap<(usize, usize, u64), MinRatio>,
}

impl Reconstruction<'_> {
    /// A node lies on some optimal trajectory iff its prefix sum is forward
    /// reachable and the remainder to `opt` is backward reachable.
    fn on_optimal_trajectory(&self, layer: usize, idx: usize, sum: u64) -> bool {
        sum <= self.opt
            && self.fwd[layer][idx].get(sum as usize)
            && self.bwd[layer][idx].get((self.opt - sum) as usize)
    }

    /// Best achievable minimum transition ratio over completions of this
    /// node to `opt`. Only called for nodes on an optimal trajectory.
    fn suffix_bottleneck(&mut self, layer: usize, idx: usize, sum: u64) -> MinRatio {
        let n = self.inst.layer_count();
        if layer == n - 1 {
            return MinRatio::Infinite;
        }
        if let Some(&cached) = self.suffix_memo.get(&(layer, idx, sum)) {
            return cached;
        }
        let mut best: Option<MinRatio> = None;
        for c in 0..self.inst.factor_sets[layer + 1].len() {
            if !self.inst.transition_ok[layer + 1][idx][c] {
                continue;
            }
            let next_sum = sum + self.contrib[layer + 1][idx][c];
            if !self.on_optimal_trajectory(layer + 1, c, next_sum) {
                continue;
            }
            let through = self
                .inst
                .transition_ratio(layer + 1, idx, c)
                .combined_with(self.suffix_bottleneck(layer + 1, c, next_sum));
            if best.is_none_or(|b| through > b) {
                best = Some(through);
            }
        }
        let best = best.expect("backward reachability guarantees a continuation");
        self.suffix_memo.insert((layer, idx, sum), best);
        best
    }
}

#[cfg(test)]
mod tests {
    use crate::budget::BudgetResult;
    use crate::factorspace::DEFAULT_ENUMERATION_CAP;
    use crate::ir::{Branch, MacroLayer, MicroLayer, Network};
    use crate::models;
    use crate::numeric::{ceil_mul, ratio, ratio_u64};
    use crate::solver::{
        check_bottleneck, solve_bruteforce, solve_dp, BottleneckMode, BottleneckPolicy, Objective,
        SolveError, SolveRequest,
    };

    fn cap_request(network: Network, cap: u64, policy: BottleneckPolicy) -> SolveRequest {
        let phi = network.param_count().unwrap();
        SolveRequest::new(
            network,
            BudgetResult {
                phi_prime_floor: cap,
                gamma_ideal: ratio_u64(phi, 1000),
                fraction: ratio_u64(cap, phi),
            },
            policy,
            Objective::CapMaximize,
        )
    }

    fn single_layer(depth: u64) -> Network {
        Network::new(
            "single",
            3,
            10,
            vec![MacroLayer::new(
                "m0",
                vec![Branch::new(vec![MicroLayer::new(1, 1, depth, 4, 4)])],
            )],
        )
    }

    #[test]
    fn single_layer_half_budget_picks_factor_two() {
        // phi = 3 * 96 = 288, cap = 144 -> factor 2
        let req = cap_request(single_layer(96), 144, BottleneckPolicy::default());
        let plan = solve_dp(&req).unwrap();
        assert_eq!(plan.factors, vec![2]);
        assert_eq!(plan.phi_prime, 144);
        let brute = solve_bruteforce(&req, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(brute, plan);
    }

    #[test]
    fn full_budget_returns_identity() {
        let net = models::alexnet();
        let req = cap_request(net, 3_745_824, BottleneckPolicy::default());
        let plan = solve_dp(&req).unwrap();
        assert_eq!(plan.factors, vec![1, 1, 1, 1, 1]);
        assert_eq!(plan.phi_prime, 3_745_824);
        assert_eq!(
            solve_bruteforce(&req, DEFAULT_ENUMERATION_CAP).unwrap(),
            plan
        );
    }

    #[test]
    fn alexnet_cap_maximize_agrees_with_oracle() {
        let net = models::alexnet();
        let cap = ceil_mul(3_745_824, &ratio(8, 100));
        assert_eq!(cap, 299_666);
        let req = cap_request(net.clone(), cap, BottleneckPolicy::default());
        let dp = solve_dp(&req).unwrap();
        let brute = solve_bruteforce(&req, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(dp.phi_prime, 299_661);
        assert_eq!(dp, brute);
        assert!(check_bottleneck(&net, &dp, &req.policy).is_empty());
    }

    #[test]
    fn alexnet_window_agrees_with_oracle() {
        let net = models::alexnet();
        let phi = 3_745_824;
        let mut req = cap_request(net, phi, BottleneckPolicy::default());
        req.budget.fraction = ratio(8, 100);
        req.budget.phi_prime_floor = ceil_mul(phi, &ratio(8, 100));
        req.objective = Objective::Window {
            tolerance: ratio(2, 1000),
        };
        let dp = solve_dp(&req).unwrap();
        let brute = solve_bruteforce(&req, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(dp.phi_prime, 307_095);
        assert_eq!(dp.factors, vec![32, 128, 4, 4, 1]);
        assert_eq!(dp, brute);
        // inside the window, strictly
        let achieved = ratio_u64(dp.phi_prime, phi);
        assert!(achieved > ratio(78, 1000) && achieved < ratio(82, 1000));
    }

    #[test]
    fn infeasible_cap_reports_nearest_bounds() {
        // phi = 288; largest factor 96 leaves 3 params, cap of 2 is below it
        let req = cap_request(single_layer(96), 2, BottleneckPolicy::default());
        for result in [
            solve_dp(&req),
            solve_bruteforce(&req, DEFAULT_ENUMERATION_CAP),
        ] {
            match result.unwrap_err() {
                SolveError::Infeasible(diag) => {
                    assert_eq!(diag.nearest_below, None);
                    assert_eq!(diag.nearest_above, Some(3));
                }
                other => panic!("expected infeasibility, got {other:?}"),
            }
        }
    }

    #[test]
    fn policy_can_make_everything_infeasible() {
        // layer 1 has coprime depths (gcd 1, channel sum pinned at 5);
        // layer 2 can never reach a sum of 5 with theta = 1
        let net = Network::new(
            "pinned",
            1,
            10,
            vec![
                MacroLayer::new(
                    "wide",
                    vec![
                        Branch::new(vec![MicroLayer::new(1, 1, 2, 4, 4)]),
                        Branch::new(vec![MicroLayer::new(1, 1, 3, 4, 4)]),
                    ],
                ),
                MacroLayer::new(
                    "narrow",
                    vec![Branch::new(vec![MicroLayer::new(1, 1, 2, 4, 4)])],
                ),
            ],
        );
        let policy = BottleneckPolicy {
            mode: BottleneckMode::AbsoluteRatio,
            theta: ratio(1, 1),
        };
        let phi = net.param_count().unwrap();
        let req = cap_request(net, phi, policy);
        for result in [
            solve_dp(&req),
            solve_bruteforce(&req, DEFAULT_ENUMERATION_CAP),
        ] {
            match result.unwrap_err() {
                SolveError::Infeasible(diag) => {
                    assert_eq!(diag.nearest_below, None);
                    assert_eq!(diag.nearest_above, None);
                }
                other => panic!("expected infeasibility, got {other:?}"),
            }
        }
    }

    #[test]
    fn window_infeasibility_reports_both_sides() {
        // single layer, phi = 288, achievable sums are 288/f for divisors
        // of 96; a window strictly between 144 and 96 is unreachable
        let net = single_layer(96);
        let mut req = cap_request(net, 288, BottleneckPolicy::default());
        req.budget.fraction = ratio(110, 288); // target 110 params
        req.objective = Objective::Window {
            tolerance: ratio(1, 100),
        }; // +/- 2.88
        for result in [
            solve_dp(&req),
            solve_bruteforce(&req, DEFAULT_ENUMERATION_CAP),
        ] {
            match result.unwrap_err() {
                SolveError::Infeasible(diag) => {
                    assert_eq!(diag.nearest_below, Some(96));
                    assert_eq!(diag.nearest_above, Some(144));
                }
                other => panic!("expected infeasibility, got {other:?}"),
            }
        }
    }

    #[test]
    fn budget_monotonicity_on_reference_network() {
        let net = models::alexnet();
        let mut last = 0;
        for cap in [100_000u64, 299_666, 500_000, 1_000_000, 3_745_824] {
            let req = cap_request(net.clone(), cap, BottleneckPolicy::default());
            let plan = solve_dp(&req).unwrap();
            assert!(plan.phi_prime >= last, "cap {cap} shrank the optimum");
            assert!(plan.phi_prime <= cap);
            last = plan.phi_prime;
        }
    }

    #[test]
    fn brute_force_refuses_oversized_spaces() {
        let net = models::alexnet();
        let req = cap_request(net, 299_666, BottleneckPolicy::default());
        let err = solve_bruteforce(&req, 1000).unwrap_err();
        assert!(matches!(err, SolveError::SpaceExceedsCap { cap: 1000, .. }));
    }

    #[test]
    fn results_are_thread_count_independent() {
        let net = models::alexnet();
        let req = cap_request(net, 299_666, BottleneckPolicy::default());
        let reference_dp = solve_dp(&req).unwrap();
        let reference_brute = solve_bruteforce(&req, DEFAULT_ENUMERATION_CAP).unwrap();
        for threads in [1usize, 2, 7] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let (dp, brute) = pool.install(|| {
                (
                    solve_dp(&req).unwrap(),
                    solve_bruteforce(&req, DEFAULT_ENUMERATION_CAP).unwrap(),
                )
            });
            assert_eq!(dp, reference_dp);
            assert_eq!(brute, reference_brute);
        }
    }

    #[test]
    fn quantized_solve_stays_under_cap_and_marks_nothing_exact() {
        let net = models::googlenet();
        let cap = 1_513_942;
        let mut req = cap_request(net.clone(), cap, BottleneckPolicy::default());
        req.quantization = Some(1024);
        let plan = solve_dp(&req).unwrap();
        assert!(plan.phi_prime <= cap);
        assert!(check_bottleneck(&net, &plan, &req.policy).is_empty());
        // exact run dominates the quantized one
        req.quantization = None;
        let exact = solve_dp(&req).unwrap();
        assert!(exact.phi_prime >= plan.phi_prime);

        // window mode rejects quantization
        req.quantization = Some(64);
        req.objective = Objective::Window {
            tolerance: ratio(1, 100),
        };
        assert!(matches!(solve_dp(&req), Err(SolveError::InvalidRequest(_))));
    }

    #[test]
    fn identity_budget_with_baseline_relative_policy() {
        let net = models::googlenet();
        let phi = net.param_count().unwrap();
        let req = cap_request(net, phi, BottleneckPolicy::baseline_relative());
        let plan = solve_dp(&req).unwrap();
        assert_eq!(plan.phi_prime, phi);
        assert!(plan.factors.iter().all(|&f| f == 1));
    }
}
