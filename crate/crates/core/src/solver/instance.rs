//! Precomputed solve instance shared by the dynamic program and the
//! brute-force oracle.
//!
//! Layer contributions are indexed by the factor chosen at the previous
//! layer and at the current layer, because the previous factor sets this
//! layer's input channel width — the reward dependency that makes the
//! selection problem non-separable.

use std::cmp::Ordering;

use crate::factorspace;
use crate::ir::Network;
use crate::solver::{BottleneckPolicy, SolveError};

/// Minimum consecutive-layer channel ratio along a plan, the first
/// tie-break key. `Infinite` is the empty minimum (single-layer networks).
#[derive(Debug, Clone, Copy)]
pub(crate) enum MinRatio {
    Finite { num: u64, den: u64 },
    Infinite,
}

impl MinRatio {
    pub fn combined_with(self, other: MinRatio) -> MinRatio {
        if self <= other {
            self
        } else {
            other
        }
    }
}

impl PartialEq for MinRatio {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for MinRatio {}

impl PartialOrd for MinRatio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MinRatio {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (MinRatio::Infinite, MinRatio::Infinite) => Ordering::Equal,
            (MinRatio::Infinite, MinRatio::Finite { .. }) => Ordering::Greater,
            (MinRatio::Finite { .. }, MinRatio::Infinite) => Ordering::Less,
            (MinRatio::Finite { num: a, den: b }, MinRatio::Finite { num: c, den: d }) => {
                (*a as u128 * *d as u128).cmp(&(*c as u128 * *b as u128))
            }
        }
    }
}

pub(crate) struct Instance {
    /// Admissible factors per macro-layer, sorted ascending.
    pub factor_sets: Vec<Vec<u64>>,
    /// Baseline concatenated channel sum per macro-layer.
    pub base_sums: Vec<u64>,
    /// `contrib[i][a][b]`: parameters layer `i` contributes when layer
    /// `i-1` uses its `a`-th factor and layer `i` its `b`-th. Layer 0 has a
    /// single pseudo-predecessor at `a = 0`.
    pub contrib: Vec<Vec<Vec<u64>>>,
    /// `transition_ok[i][a][b]` for `i >= 1`: the bottleneck policy admits
    /// the pair. `transition_ok[0]` is empty.
    pub transition_ok: Vec<Vec<Vec<bool>>>,
    pub phi: u64,
}

impl Instance {
    pub fn build(network: &Network, policy: &BottleneckPolicy) -> Result<Self, SolveError> {
        let findings = network.validate();
        if !findings.is_empty() {
            return Err(SolveError::InvalidRequest(format!(
                "network fails structural validation: {}",
                findings[0]
            )));
        }
        let phi = network
            .param_count()
            .map_err(|e| SolveError::InvalidRequest(e.to_string()))?;

        let factor_sets: Vec<Vec<u64>> = factorspace::factor_sets(network)
            .into_iter()
            .map(|s| s.factors)
            .collect();
        let base_sums = network.channel_sums();
        let n = network.macro_layers.len();

        let mut contrib = Vec::with_capacity(n);
        let mut transition_ok = Vec::with_capacity(n);
        for (i, layer) in network.macro_layers.iter().enumerate() {
            let prev_factors: &[u64] = if i == 0 { &[1] } else { &factor_sets[i - 1] };
            let in_base = if i == 0 {
                network.input_channels
            } else {
                base_sums[i - 1]
            };

            let mut layer_contrib = Vec::with_capacity(prev_factors.len());
            let mut layer_ok = Vec::with_capacity(prev_factors.len());
            for &fp in prev_factors {
                let in_scaled = if i == 0 { in_base } else { in_base / fp };
                let mut row_contrib = Vec::with_capacity(factor_sets[i].len());
                let mut row_ok = Vec::with_capacity(factor_sets[i].len());
                for &fc in &factor_sets[i] {
                    let mut params = 0u64;
                    for branch in &layer.branches {
                        let mut link_in = in_scaled;
                        for micro in branch.micro_layers() {
                            let q = micro.depth / fc;
                            params += link_in * micro.kernel_width * micro.kernel_height * q;
                            link_in = q;
                        }
                    }
                    row_contrib.push(params);
                    if i > 0 {
                        row_ok.push(!policy.flags_transition(
                            base_sums[i - 1],
                            base_sums[i],
                            base_sums[i - 1] / fp,
                            base_sums[i] / fc,
                        ));
                    }
                }
                layer_contrib.push(row_contrib);
                if i > 0 {
                    layer_ok.push(row_ok);
                }
            }
            contrib.push(layer_contrib);
            transition_ok.push(layer_ok);
        }

        Ok(Instance {
            factor_sets,
            base_sums,
            contrib,
            transition_ok,
            phi,
        })
    }

    pub fn layer_count(&self) -> usize {
        self.factor_sets.len()
    }

    /// Scaled channel sum of layer `i` under its `idx`-th factor.
    pub fn scaled_sum(&self, i: usize, idx: usize) -> u64 {
        self.base_sums[i] / self.factor_sets[i][idx]
    }

    /// Channel ratio of the transition into layer `i` (`i >= 1`).
    pub fn transition_ratio(&self, i: usize, prev_idx: usize, cur_idx: usize) -> MinRatio {
        MinRatio::Finite {
            num: self.scaled_sum(i, cur_idx),
            den: self.scaled_sum(i - 1, prev_idx),
        }
    }
}

/// A complete assignment under evaluation, ordered by the solve
/// comparator: larger `phi_prime` first, then larger minimum channel
/// ratio, then lexicographically smaller factor vector.
#[derive(Debug, Clone)]
pub(crate) struct Candidate {
    pub phi_prime: u64,
    pub min_ratio: MinRatio,
    pub factors: Vec<u64>,
}

impl Candidate {
    pub fn better_than(&self, other: &Candidate) -> bool {
        match self.phi_prime.cmp(&other.phi_prime) {
            Ordering::Greater => return true,
            Ordering::Less => return false,
            Ordering::Equal => {}
        }
        match self.min_ratio.cmp(&other.min_ratio) {
            Ordering::Greater => return true,
            Ordering::Less => return false,
            Ordering::Equal => {}
        }
        self.factors < other.factors
    }
}
