//! Class scope and parameter budgets.
//!
//! Given a baseline trained on `alpha` classes and a task needing only
//! `beta` of them, the budget for the scaled network is a fraction of the
//! baseline's parameter count:
//!
//! * plain: `beta / alpha`
//! * scope-aware: `(beta + lambda * (alpha - beta)) / alpha`, reserving a
//!   `lambda` share of per-class capacity for a single miscellaneous class
//!   that absorbs everything out of scope.
//!
//! All fractions are exact rationals; the budget floor is the ceiling of
//! `phi * fraction` because budgets are parameter counts.

use std::error::Error;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::ir::Network;
use crate::numeric::{self, ceil_mul};

/// Returns the default miscellaneous-class coefficient, 1/4.
pub fn default_lambda() -> BigRational {
    numeric::ratio(1, 4)
}

/// Cardinalities driving the budget: `alpha` baseline classes, `beta`
/// classes of interest, and the miscellaneous-class coefficient `lambda`.
/// Class identities are not modeled; every formula in scope depends only
/// on the counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassScope {
    pub alpha: u64,
    pub beta: u64,
    pub lambda: BigRational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BudgetError {
    InvalidScope(String),
    ClassifierWidthMismatch { expected: u64, found: u64 },
}

impl fmt::Display for BudgetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BudgetError::InvalidScope(msg) => write!(f, "invalid class scope: {msg}"),
            BudgetError::ClassifierWidthMismatch { expected, found } => write!(
                f,
                "classifier width mismatch: scope expects an {expected}-way classifier, network has {found}"
            ),
        }
    }
}

impl Error for BudgetError {}

impl ClassScope {
    pub fn new(alpha: u64, beta: u64, lambda: BigRational) -> Result<Self, BudgetError> {
        let scope = Self {
            alpha,
            beta,
            lambda,
        };
        scope.check()?;
        Ok(scope)
    }

    fn check(&self) -> Result<(), BudgetError> {
        if self.beta < 1 || self.beta > self.alpha {
            return Err(BudgetError::InvalidScope(format!(
                "beta must satisfy 1 <= beta <= alpha (got beta={}, alpha={})",
                self.beta, self.alpha
            )));
        }
        let zero = numeric::ratio(0, 1);
        if self.lambda <= zero || self.lambda > BigRational::one() {
            return Err(BudgetError::InvalidScope(format!(
                "lambda must lie in (0, 1] (got {})",
                numeric::display_fraction(&self.lambda)
            )));
        }
        Ok(())
    }
}

/// Inputs for a budget computation.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetSpec {
    /// Baseline convolutional parameter count.
    pub phi: u64,
    pub scope: ClassScope,
    pub scope_aware: bool,
    /// Relative half-width for window-mode solving, e.g. 0.002.
    pub window_tolerance: BigRational,
}

/// Budget derived from a [`BudgetSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetResult {
    /// `ceil(phi * fraction)` — the smallest admissible integer budget.
    pub phi_prime_floor: u64,
    /// Ideal per-class parameter share of the baseline, `phi / alpha`.
    pub gamma_ideal: BigRational,
    /// Exact budget fraction of `phi`.
    pub fraction: BigRational,
}

/// Ideal average parameters available per class: `phi / alpha`, exact.
pub fn ideal_params_per_class(phi: u64, alpha: u64) -> BigRational {
    assert!(alpha >= 1, "alpha must be >= 1");
    numeric::ratio_u64(phi, alpha)
}

/// Computes the budget fraction and its integer floor for a scope.
pub fn compute_budget(spec: &BudgetSpec) -> Result<BudgetResult, BudgetError> {
    spec.scope.check()?;
    let zero = numeric::ratio(0, 1);
    if spec.window_tolerance < zero {
        return Err(BudgetError::InvalidScope(
            "window_tolerance must be >= 0".into(),
        ));
    }
    let alpha = BigRational::from_integer(BigInt::from(spec.scope.alpha));
    let beta = BigRational::from_integer(BigInt::from(spec.scope.beta));
    let fraction = if spec.scope_aware {
        (&beta + &spec.scope.lambda * (&alpha - &beta)) / &alpha
    } else {
        &beta / &alpha
    };
    Ok(BudgetResult {
        phi_prime_floor: ceil_mul(spec.phi, &fraction),
        gamma_ideal: ideal_params_per_class(spec.phi, spec.scope.alpha),
        fraction,
    })
}

/// Rewrites the classifier width for scope-restricted inference: `beta`
/// classes, plus one miscellaneous class when scope-aware. Everything else
/// is untouched.
pub fn rewrite_classifier(
    network: &Network,
    scope: &ClassScope,
    scope_aware: bool,
) -> Result<Network, BudgetError> {
    if network.classifier_classes != scope.alpha {
        return Err(BudgetError::ClassifierWidthMismatch {
            expected: scope.alpha,
            found: network.classifier_classes,
        });
    }
    let mut rewritten = network.clone();
    rewritten.classifier_classes = if scope_aware {
        scope.beta + 1
    } else {
        scope.beta
    };
    Ok(rewritten)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use crate::numeric::{ratio, rounded_decimal};

    fn scope(alpha: u64, beta: u64, lambda: BigRational) -> ClassScope {
        ClassScope::new(alpha, beta, lambda).unwrap()
    }

    #[test]
    fn ideal_share_examples() {
        assert_eq!(
            ideal_params_per_class(3_745_824, 1000),
            ratio(3_745_824, 1000)
        );
        assert_eq!(ideal_params_per_class(0, 7), ratio(0, 1));
        assert_eq!(ideal_params_per_class(100, 100), ratio(1, 1));
    }

    #[test]
    fn scope_aware_fraction_for_small_scopes() {
        let spec = BudgetSpec {
            phi: 5_966_272,
            scope: scope(1000, 5, default_lambda()),
            scope_aware: true,
            window_tolerance: ratio(0, 1),
        };
        let result = compute_budget(&spec).unwrap();
        assert_eq!(result.fraction, ratio(203, 800)); // 0.25375
        assert_eq!(result.phi_prime_floor, 1_513_942);
        assert_eq!(rounded_decimal(&result.fraction, 2), "0.25");
    }

    #[test]
    fn reference_fraction_column() {
        // alpha=1000, lambda=1/4, beta in {5,10,15,20,25,30}
        let expected = ["0.25", "0.26", "0.26", "0.27", "0.27", "0.27"];
        for (beta, want) in [5u64, 10, 15, 20, 25, 30].into_iter().zip(expected) {
            let spec = BudgetSpec {
                phi: 5_966_272,
                scope: scope(1000, beta, default_lambda()),
                scope_aware: true,
                window_tolerance: ratio(0, 1),
            };
            let got = compute_budget(&spec).unwrap();
            assert_eq!(rounded_decimal(&got.fraction, 2), want, "beta={beta}");
        }
    }

    #[test]
    fn full_scope_is_identity_fraction() {
        let spec = BudgetSpec {
            phi: 1000,
            scope: scope(80, 80, default_lambda()),
            scope_aware: false,
            window_tolerance: ratio(0, 1),
        };
        let result = compute_budget(&spec).unwrap();
        assert_eq!(result.fraction, ratio(1, 1));
        assert_eq!(result.phi_prime_floor, 1000);
    }

    #[test]
    fn lambda_one_collapses_to_full_budget() {
        for beta in [1u64, 7, 500, 1000] {
            let spec = BudgetSpec {
                phi: 3_745_824,
                scope: scope(1000, beta, ratio(1, 1)),
                scope_aware: true,
                window_tolerance: ratio(0, 1),
            };
            assert_eq!(compute_budget(&spec).unwrap().fraction, ratio(1, 1));
        }
    }

    #[test]
    fn scope_aware_dominates_plain_until_full_scope() {
        for beta in [1u64, 5, 400, 999, 1000] {
            let plain = compute_budget(&BudgetSpec {
                phi: 10_000,
                scope: scope(1000, beta, default_lambda()),
                scope_aware: false,
                window_tolerance: ratio(0, 1),
            })
            .unwrap();
            let aware = compute_budget(&BudgetSpec {
                phi: 10_000,
                scope: scope(1000, beta, default_lambda()),
                scope_aware: true,
                window_tolerance: ratio(0, 1),
            })
            .unwrap();
            if beta == 1000 {
                assert_eq!(aware.fraction, plain.fraction);
            } else {
                assert!(aware.fraction > plain.fraction);
            }
        }
    }

    #[test]
    fn invalid_scopes_rejected() {
        assert!(ClassScope::new(10, 0, default_lambda()).is_err());
        assert!(ClassScope::new(10, 11, default_lambda()).is_err());
        assert!(ClassScope::new(10, 5, ratio(0, 1)).is_err());
        assert!(ClassScope::new(10, 5, ratio(5, 4)).is_err());
        assert!(ClassScope::new(10, 5, ratio(1, 1)).is_ok());
    }

    #[test]
    fn classifier_rewrite_variants() {
        let net = models::alexnet();
        let aware = rewrite_classifier(&net, &scope(1000, 5, default_lambda()), true).unwrap();
        assert_eq!(aware.classifier_classes, 6);
        let plain = rewrite_classifier(&net, &scope(1000, 10, default_lambda()), false).unwrap();
        assert_eq!(plain.classifier_classes, 10);
        let full = rewrite_classifier(&net, &scope(1000, 1000, default_lambda()), false).unwrap();
        assert_eq!(full.classifier_classes, 1000);
        assert_eq!(full.macro_layers, net.macro_layers);

        let err = rewrite_classifier(&net, &scope(500, 5, default_lambda()), true).unwrap_err();
        assert!(matches!(
            err,
            BudgetError::ClassifierWidthMismatch {
                expected: 500,
                found: 1000
            }
        ));
    }
}
