//! End-to-end synthesis: budget, factor sets, solve, apply, rewrite.

use std::error::Error;
use std::fmt;

use crate::budget::{compute_budget, rewrite_classifier, BudgetError, BudgetSpec, ClassScope};
use crate::factorspace::count_solution_space;
use crate::ir::{Network, ValidationFinding};
use crate::numeric::{self, decimal_or_fraction, display_fraction, rounded_decimal};
use crate::report::{LayerPlan, SynthesisReport};
use crate::solver::{
    apply_plan, check_bottleneck, solve_dp, BottleneckPolicy, Objective, SolveError, SolveRequest,
};

/// Knobs for a synthesis run.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizeOptions {
    pub scope_aware: bool,
    pub objective: Objective,
    pub policy: BottleneckPolicy,
    pub quantization: Option<u64>,
}

impl Default for SynthesizeOptions {
    fn default() -> Self {
        SynthesizeOptions {
            scope_aware: false,
            objective: Objective::CapMaximize,
            policy: BottleneckPolicy::default(),
            quantization: None,
        }
    }
}

#[derive(Debug)]
pub enum SynthesisError {
    Validation(Vec<ValidationFinding>),
    Budget(BudgetError),
    Solve(SolveError),
}

impl fmt::Display for SynthesisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthesisError::Validation(findings) => {
                write!(
                    f,
                    "network fails validation with {} finding(s):",
                    findings.len()
                )?;
                for finding in findings {
                    write!(f, "\n  {finding}")?;
                }
                Ok(())
            }
            SynthesisError::Budget(e) => e.fmt(f),
            SynthesisError::Solve(e) => e.fmt(f),
        }
    }
}

impl Error for SynthesisError {}

impl From<BudgetError> for SynthesisError {
    fn from(e: BudgetError) -> Self {
        SynthesisError::Budget(e)
    }
}

impl From<SolveError> for SynthesisError {
    fn from(e: SolveError) -> Self {
        SynthesisError::Solve(e)
    }
}

/// Scales `network` to the budget implied by `scope`, returning the scaled
/// network with its rewritten classifier and a full report.
pub fn synthesize(
    network: &Network,
    scope: &ClassScope,
    options: &SynthesizeOptions,
) -> Result<(Network, SynthesisReport), SynthesisError> {
    let findings = network.validate();
    if !findings.is_empty() {
        return Err(SynthesisError::Validation(findings));
    }
    let phi = network
        .param_count()
        .expect("validated network propagates cleanly");

    let window_tolerance = match &options.objective {
        Objective::Window { tolerance } => tolerance.clone(),
        Objective::CapMaximize => numeric::ratio(0, 1),
    };
    let budget = compute_budget(&BudgetSpec {
        phi,
        scope: scope.clone(),
        scope_aware: options.scope_aware,
        window_tolerance,
    })?;

    let request = SolveRequest {
        network: network.clone(),
        budget: budget.clone(),
        policy: options.policy.clone(),
        objective: options.objective.clone(),
        quantization: options.quantization,
    };
    let plan = solve_dp(&request)?;
    let scaled = apply_plan(network, &plan)?;
    let result = rewrite_classifier(&scaled, scope, options.scope_aware)?;
    let flags = check_bottleneck(network, &plan, &options.policy);
    debug_assert!(flags.is_empty(), "solver must return policy-clean plans");

    let achieved_fraction = numeric::ratio_u64(plan.phi_prime, phi);
    let scaled_sums = plan.scaled_sums();
    let layers = network
        .macro_layers
        .iter()
        .zip(&plan.factors)
        .zip(&plan.scaled_depths)
        .zip(&scaled_sums)
        .map(|(((layer, &factor), depths), &channels)| LayerPlan {
            layer: layer.name.clone(),
            factor,
            output_channels: channels,
            scaled_depths: depths.clone(),
        })
        .collect();

    let report = SynthesisReport {
        network: network.name.clone(),
        alpha: scope.alpha,
        beta: scope.beta,
        lambda: display_fraction(&scope.lambda),
        scope_aware: options.scope_aware,
        objective: options.objective.describe(&budget),
        policy: options.policy.describe(),
        baseline_params: phi,
        budget_fraction: display_fraction(&budget.fraction),
        budget_fraction_decimal: decimal_or_fraction(&budget.fraction),
        budget_floor: budget.phi_prime_floor,
        ideal_params_per_class: decimal_or_fraction(&budget.gamma_ideal),
        achieved_params: plan.phi_prime,
        achieved_fraction: display_fraction(&achieved_fraction),
        achieved_fraction_decimal: rounded_decimal(&achieved_fraction, 6),
        classifier_classes: result.classifier_classes,
        baseline_flops: network
            .flop_count()
            .expect("validated network propagates cleanly"),
        scaled_flops: result
            .flop_count()
            .expect("scaled network propagates cleanly"),
        solution_space_affine: count_solution_space(network, true).to_string(),
        solution_space_non_affine: count_solution_space(network, false).to_string(),
        layers,
        bottleneck_flags: flags.iter().map(ToString::to_string).collect(),
        approximate: options.quantization.is_some(),
        notes: Vec::new(),
    };
    Ok((result, report))
}
