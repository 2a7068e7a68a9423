//! Exhaustive oracle over the affine solution space.
//!
//! Walks every factor assignment, prunes policy-violating transitions as
//! it descends, and keeps the best admissible candidate under the solve
//! comparator. Partitioned across first-layer factors; the comparator is a
//! total order, so the parallel reduction is deterministic.

use num_bigint::BigUint;
use num_traits::One;
use rayon::prelude::*;

use crate::solver::{
    Candidate, Infeasibility, Instance, MinRatio, ScalePlan, SolveError, SolveRequest,
};

struct Search<'a> {
    inst: &'a Instance,
    lo: i128,
    hi: i128,
    best: Option<Candidate>,
    nearest_below: Option<u64>,
    nearest_above: Option<u64>,
    factors: Vec<u64>,
}

impl Search<'_> {
    fn descend(&mut self, layer: usize, prev_idx: usize, sum: u64, min_ratio: MinRatio) {
        if layer == self.inst.layer_count() {
            let total = sum as i128;
            if self.lo <= total && total <= self.hi {
                let better = match &self.best {
                    None => true,
                    Some(best) => Candidate {
                        phi_prime: sum,
                        min_ratio,
                        factors: self.factors.clone(),
                    }
                    .better_than(best),
                };
                if better {
                    self.best = Some(Candidate {
                        phi_prime: sum,
                        min_ratio,
                        factors: self.factors.clone(),
                    });
                }
            } else if total < self.lo {
                if self.nearest_below.is_none_or(|b| sum > b) {
                    self.nearest_below = Some(sum);
                }
            } else if self.nearest_above.is_none_or(|a| sum < a) {
                self.nearest_above = Some(sum);
            }
            return;
        }
        for idx in 0..self.inst.factor_sets[layer].len() {
            if layer > 0 && !self.inst.transition_ok[layer][prev_idx][idx] {
                continue;
            }
            let ratio = if layer == 0 {
                MinRatio::Infinite
            } else {
                self.inst.transition_ratio(layer, prev_idx, idx)
            };
            self.factors.push(self.inst.factor_sets[layer][idx]);
            self.descend(
                layer + 1,
                idx,
                sum + self.inst.contrib[layer][if layer == 0 { 0 } else { prev_idx }][idx],
                min_ratio.combined_with(ratio),
            );
            self.factors.pop();
        }
    }
}

/// Exhaustive search with the same objective, policy, and tie-break as
/// [`solve_dp`](crate::solver::solve_dp). Refuses solution spaces larger
/// than `enumeration_cap`.
pub fn solve_bruteforce(req: &SolveRequest, enumeration_cap: u64) -> Result<ScalePlan, SolveError> {
    let inst = Instance::build(&req.network, &req.policy)?;
    req.validate(inst.phi)?;

    let space = inst
        .factor_sets
        .iter()
        .fold(BigUint::one(), |acc, s| acc * BigUint::from(s.len()));
    if space > BigUint::from(enumeration_cap) {
        return Err(SolveError::SpaceExceedsCap {
            space,
            cap: enumeration_cap,
        });
    }

    let (lo, hi) = req.objective_range(inst.phi);

    let merged = (0..inst.factor_sets[0].len())
        .into_par_iter()
        .map(|first_idx| {
            let mut search = Search {
                inst: &inst,
                lo,
                hi,
                best: None,
                nearest_below: None,
                nearest_above: None,
                factors: vec![inst.factor_sets[0][first_idx]],
            };
            search.descend(
                1,
                first_idx,
                inst.contrib[0][0][first_idx],
                MinRatio::Infinite,
            );
            (search.best, search.nearest_below, search.nearest_above)
        })
        .reduce(
            || (None, None, None),
            |(best_a, below_a, above_a), (best_b, below_b, above_b)| {
                let best = match (best_a, best_b) {
                    (Some(a), Some(b)) => Some(if a.better_than(&b) { a } else { b }),
                    (a, b) => a.or(b),
                };
                let below = match (below_a, below_b) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    (a, b) => a.or(b),
                };
                let above = match (above_a, above_b) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                };
                (best, below, above)
            },
        );

    match merged.0 {
        Some(candidate) => ScalePlan::for_network(&req.network, candidate.factors),
        None => Err(SolveError::Infeasible(Infeasibility {
            nearest_below: merged.1,
            nearest_above: merged.2,
        })),
    }
}
