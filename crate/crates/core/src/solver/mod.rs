//! Scaling-plan selection under a parameter budget.
//!
//! The selection problem is a multiple-choice knapsack with dependent
//! rewards: each macro-layer picks one factor from its common-divisor set,
//! a factor's parameter contribution depends on the neighbouring layer's
//! choice (it sets the input channel width), and consecutive layers must
//! not collapse the channel sum (bottleneck avoidance). [`solve_dp`] is the
//! production solver; [`solve_bruteforce`] is the independent exhaustive
//! oracle it is verified against.

mod bitset;
mod brute;
mod dp;
mod instance;
mod synthesize;

use std::error::Error;
use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;

use crate::budget::BudgetResult;
use crate::ir::Network;
use crate::numeric::{self, window_int_bounds};

pub use brute::solve_bruteforce;
pub use dp::solve_dp;
pub use synthesize::{synthesize, SynthesisError, SynthesizeOptions};

pub(crate) use instance::{Candidate, Instance, MinRatio};

/// How a transition's scaled channel sums are judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BottleneckMode {
    /// Flag layer `i` iff `S'_i < theta * S'_{i-1}`.
    AbsoluteRatio,
    /// Flag layer `i` iff `S'_i / S'_{i-1} < theta * (S_i / S_{i-1})`,
    /// i.e. the scaled transition loses more than a `theta` share of the
    /// baseline transition's ratio.
    BaselineRelative,
    /// Flag any strict decrease of the scaled channel sum.
    StrictNondecreasing,
}

/// Bottleneck-avoidance policy: mode plus ratio threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct BottleneckPolicy {
    pub mode: BottleneckMode,
    pub theta: BigRational,
}

impl Default for BottleneckPolicy {
    /// Absolute-ratio mode with theta = 1/2.
    fn default() -> Self {
        BottleneckPolicy {
            mode: BottleneckMode::AbsoluteRatio,
            theta: numeric::ratio(1, 2),
        }
    }
}

impl BottleneckPolicy {
    /// Baseline-relative mode at its default theta = 1/4.
    pub fn baseline_relative() -> Self {
        BottleneckPolicy {
            mode: BottleneckMode::BaselineRelative,
            theta: numeric::ratio(1, 4),
        }
    }

    pub fn strict_nondecreasing() -> Self {
        BottleneckPolicy {
            mode: BottleneckMode::StrictNondecreasing,
            theta: numeric::ratio(1, 1),
        }
    }

    pub fn describe(&self) -> String {
        match self.mode {
            BottleneckMode::AbsoluteRatio => {
                format!(
                    "absolute-ratio(theta={})",
                    numeric::display_fraction(&self.theta)
                )
            }
            BottleneckMode::BaselineRelative => {
                format!(
                    "baseline-relative(theta={})",
                    numeric::display_fraction(&self.theta)
                )
            }
            BottleneckMode::StrictNondecreasing => "strict-nondecreasing".into(),
        }
    }

    /// True when the transition from scaled sum `scaled_prev` to
    /// `scaled_cur` violates the policy.
    pub fn flags_transition(
        &self,
        base_prev: u64,
        base_cur: u64,
        scaled_prev: u64,
        scaled_cur: u64,
    ) -> bool {
        match self.mode {
            BottleneckMode::AbsoluteRatio => {
                numeric::ratio_u64(scaled_cur, 1) < &self.theta * numeric::ratio_u64(scaled_prev, 1)
            }
            BottleneckMode::BaselineRelative => {
                numeric::ratio_u64(scaled_cur, scaled_prev)
                    < &self.theta * numeric::ratio_u64(base_cur, base_prev)
            }
            BottleneckMode::StrictNondecreasing => scaled_cur < scaled_prev,
        }
    }

    fn validate(&self) -> Result<(), SolveError> {
        let zero = numeric::ratio(0, 1);
        let one = numeric::ratio(1, 1);
        if matches!(
            self.mode,
            BottleneckMode::AbsoluteRatio | BottleneckMode::BaselineRelative
        ) && (self.theta <= zero || self.theta > one)
        {
            return Err(SolveError::InvalidRequest(format!(
                "theta must lie in (0, 1] for ratio policies (got {})",
                numeric::display_fraction(&self.theta)
            )));
        }
        Ok(())
    }
}

/// A layer flagged as a bottleneck. `ordinal` is 1-based to match how
/// layers are usually numbered in architecture tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BottleneckFlag {
    pub ordinal: usize,
    pub layer: String,
    pub prev_scaled_sum: u64,
    pub scaled_sum: u64,
}

impl fmt::Display for BottleneckFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "layer {} ({}): scaled channel sum drops {} -> {}",
            self.ordinal, self.layer, self.prev_scaled_sum, self.scaled_sum
        )
    }
}

/// One factor per macro-layer plus everything derived from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScalePlan {
    pub factors: Vec<u64>,
    /// Scaled depth of every micro-layer: `[macro][branch][micro]`.
    pub scaled_depths: Vec<Vec<Vec<u64>>>,
    /// Parameter count of the scaled network.
    pub phi_prime: u64,
}

impl ScalePlan {
    /// Builds the plan for `factors`, checking divisibility layer by layer.
    pub fn for_network(network: &Network, factors: Vec<u64>) -> Result<Self, SolveError> {
        if factors.len() != network.macro_layers.len() {
            return Err(SolveError::InvalidRequest(format!(
                "plan has {} factors but the network has {} macro-layers",
                factors.len(),
                network.macro_layers.len()
            )));
        }
        let mut scaled_depths = Vec::with_capacity(factors.len());
        let mut phi_prime = 0u64;
        let mut in_scaled = network.input_channels;
        for (layer, &factor) in network.macro_layers.iter().zip(&factors) {
            if factor == 0 {
                return Err(SolveError::InvalidRequest(
                    "scaling factors must be >= 1".into(),
                ));
            }
            let mut layer_depths = Vec::with_capacity(layer.branches.len());
            let mut out_sum = 0u64;
            for branch in &layer.branches {
                let mut link_in = in_scaled;
                let mut branch_depths = Vec::with_capacity(branch.micro_layers().len());
                for micro in branch.micro_layers() {
                    if micro.depth % factor != 0 {
                        return Err(SolveError::NonDivisibleFactor {
                            layer: layer.name.clone(),
                            factor,
                            depth: micro.depth,
                        });
                    }
                    let q = micro.depth / factor;
                    phi_prime += link_in * micro.kernel_width * micro.kernel_height * q;
                    branch_depths.push(q);
                    link_in = q;
                }
                out_sum += link_in;
                layer_depths.push(branch_depths);
            }
            scaled_depths.push(layer_depths);
            in_scaled = out_sum;
        }
        Ok(ScalePlan {
            factors,
            scaled_depths,
            phi_prime,
        })
    }

    /// The all-ones plan; `phi_prime` equals the baseline count.
    pub fn identity(network: &Network) -> Result<Self, SolveError> {
        Self::for_network(network, vec![1; network.macro_layers.len()])
    }

    /// Scaled channel sum per macro-layer.
    pub fn scaled_sums(&self) -> Vec<u64> {
        self.scaled_depths
            .iter()
            .map(|layer| {
                layer
                    .iter()
                    .map(|branch| branch.last().copied().unwrap_or(0))
                    .sum()
            })
            .collect()
    }
}

/// What the solver optimizes within.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// Maximize `phi'` subject to `phi' <= budget floor`.
    CapMaximize,
    /// Maximize `phi'` subject to `|phi' - fraction * phi| / phi <
    /// tolerance` (strict; tolerance 0 admits exact hits only).
    Window { tolerance: BigRational },
}

impl Objective {
    pub fn describe(&self, budget: &BudgetResult) -> String {
        match self {
            Objective::CapMaximize => format!("cap-maximize(cap={})", budget.phi_prime_floor),
            Objective::Window { tolerance } => format!(
                "window(target-fraction={}, tolerance={})",
                numeric::display_fraction(&budget.fraction),
                numeric::display_fraction(tolerance)
            ),
        }
    }
}

/// A full solve request.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveRequest {
    pub network: Network,
    pub budget: BudgetResult,
    pub policy: BottleneckPolicy,
    pub objective: Objective,
    /// Optional sum granularity for the dynamic program. Contributions are
    /// rounded up to multiples of it, bounding state at the cost of
    /// optimality; results are marked approximate. Off by default.
    pub quantization: Option<u64>,
}

impl SolveRequest {
    pub fn new(
        network: Network,
        budget: BudgetResult,
        policy: BottleneckPolicy,
        objective: Objective,
    ) -> Self {
        SolveRequest {
            network,
            budget,
            policy,
            objective,
            quantization: None,
        }
    }

    /// Inclusive integer range of admissible `phi'` values.
    pub(crate) fn objective_range(&self, phi: u64) -> (i128, i128) {
        match &self.objective {
            Objective::CapMaximize => (0, self.budget.phi_prime_floor as i128),
            Objective::Window { tolerance } => {
                let (lo, hi) = window_int_bounds(phi, &self.budget.fraction, tolerance);
                // window bounds fit comfortably: phi' <= phi <= u64
                (
                    i128::try_from(lo).unwrap_or(i128::MAX),
                    i128::try_from(hi).unwrap_or(i128::MIN),
                )
            }
        }
    }

    pub(crate) fn validate(&self, phi: u64) -> Result<(), SolveError> {
        self.policy.validate()?;
        if self.budget.phi_prime_floor > phi {
            return Err(SolveError::InvalidRequest(format!(
                "budget floor {} exceeds the baseline parameter count {}",
                self.budget.phi_prime_floor, phi
            )));
        }
        if let Objective::Window { tolerance } = &self.objective {
            if tolerance < &numeric::ratio(0, 1) {
                return Err(SolveError::InvalidRequest(
                    "window tolerance must be >= 0".into(),
                ));
            }
        }
        if self.quantization == Some(0) {
            return Err(SolveError::InvalidRequest(
                "quantization granularity must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// No plan satisfies the budget and policy. Carries the tightest
/// policy-feasible parameter counts on either side of the admissible range
/// as actionable diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Infeasibility {
    pub nearest_below: Option<u64>,
    pub nearest_above: Option<u64>,
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "no feasible plan in the requested range")?;
        match (self.nearest_below, self.nearest_above) {
            (None, None) => write!(f, "; no plan satisfies the bottleneck policy at all"),
            (below, above) => {
                if let Some(b) = below {
                    write!(f, "; tightest achievable below: {b}")?;
                }
                if let Some(a) = above {
                    write!(f, "; tightest achievable above: {a}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveError {
    Infeasible(Infeasibility),
    /// Brute-force refusal: the affine space is too large to enumerate.
    SpaceExceedsCap {
        space: BigUint,
        cap: u64,
    },
    NonDivisibleFactor {
        layer: String,
        factor: u64,
        depth: u64,
    },
    InvalidRequest(String),
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::Infeasible(i) => i.fmt(f),
            SolveError::SpaceExceedsCap { space, cap } => write!(
                f,
                "solution space has {space} assignments, above the enumeration cap {cap}"
            ),
            SolveError::NonDivisibleFactor {
                layer,
                factor,
                depth,
            } => write!(
                f,
                "factor {factor} does not divide depth {depth} in macro-layer {layer}"
            ),
            SolveError::InvalidRequest(msg) => write!(f, "invalid solve request: {msg}"),
        }
    }
}

impl Error for SolveError {}

/// Applies a plan: every micro-layer depth in macro-layer `i` is divided
/// by `factors[i]`. Kernel sizes, geometry, annotations, and the layer
/// count are untouched; declared input widths are re-propagated.
pub fn apply_plan(network: &Network, plan: &ScalePlan) -> Result<Network, SolveError> {
    // re-derive against this network so divisibility is guaranteed
    let plan = ScalePlan::for_network(network, plan.factors.clone())?;
    let mut scaled = network.clone();
    let mut in_scaled = network.input_channels;
    for (layer, layer_depths) in scaled.macro_layers.iter_mut().zip(&plan.scaled_depths) {
        let mut out_sum = 0u64;
        for (branch, branch_depths) in layer.branches.iter_mut().zip(layer_depths) {
            let mut link_in = in_scaled;
            for (micro, &q) in branch.0.iter_mut().zip(branch_depths) {
                micro.depth = q;
                if micro.in_channels.is_some() {
                    micro.in_channels = Some(link_in);
                }
                link_in = q;
            }
            out_sum += link_in;
        }
        in_scaled = out_sum;
    }
    Ok(scaled)
}

/// Evaluates the bottleneck policy over consecutive macro-layer channel
/// sums of the scaled network. An empty result means the plan is clean.
pub fn check_bottleneck(
    network: &Network,
    plan: &ScalePlan,
    policy: &BottleneckPolicy,
) -> Vec<BottleneckFlag> {
    let base = network.channel_sums();
    let scaled = plan.scaled_sums();
    let mut flags = Vec::new();
    for i in 1..scaled.len().min(base.len()) {
        if policy.flags_transition(base[i - 1], base[i], scaled[i - 1], scaled[i]) {
            flags.push(BottleneckFlag {
                ordinal: i + 1,
                layer: network.macro_layers[i].name.clone(),
                prev_scaled_sum: scaled[i - 1],
                scaled_sum: scaled[i],
            });
        }
    }
    flags
}
