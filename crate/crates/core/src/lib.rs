//! Budget-driven scaling of convolutional network architectures.
//!
//! Given a baseline architecture trained for many classes and a task that
//! needs only a few of them, this crate derives a smaller architecture
//! whose parameter budget is proportional to the task: it picks one
//! integer scaling factor per macro-layer (a common divisor of the
//! micro-layer depths inside it, so contribution ratios are preserved
//! exactly), subject to a bottleneck-avoidance constraint on consecutive
//! channel sums, and maximizes the scaled parameter count within the
//! budget via an exact dynamic program — verified against a brute-force
//! oracle over the full factor space.
//!
//! Modules:
//! * [`ir`] — the network model, counting, validation, documents;
//! * [`budget`] — class scopes, budget fractions, classifier rewrites;
//! * [`factorspace`] — divisors, admissible factor sets, space counting;
//! * [`solver`] — bottleneck policy, plan application, DP and oracle;
//! * [`report`] — synthesis reports (document and table forms);
//! * [`models`] — reference fixtures;
//! * [`numeric`] — exact rational helpers.
//!
//! ```
//! use scalesynth_core::{budget::ClassScope, budget::default_lambda, models, solver};
//!
//! // five classes of interest out of a thousand, scope-aware
//! let scope = ClassScope::new(1000, 5, default_lambda())?;
//! let options = solver::SynthesizeOptions { scope_aware: true, ..Default::default() };
//! let (scaled, report) = solver::synthesize(&models::googlenet(), &scope, &options)?;
//!
//! assert_eq!(scaled.classifier_classes, 6); // beta + 1 (miscellaneous)
//! assert!(report.achieved_params <= report.budget_floor);
//! assert!(report.bottleneck_flags.is_empty());
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod budget;
pub mod factorspace;
pub mod ir;
pub mod models;
pub mod numeric;
pub mod report;
pub mod solver;

pub use budget::{
    compute_budget, default_lambda, ideal_params_per_class, rewrite_classifier, BudgetError,
    BudgetResult, BudgetSpec, ClassScope,
};
pub use factorspace::{
    count_solution_space, divisors, enumerate_window, factor_set, factor_sets, FactorSet,
    FactorSpaceError, PlanVisitor, WindowCount, DEFAULT_ENUMERATION_CAP,
};
pub use ir::{
    parse_document, to_document_string, Branch, DocumentScope, MacroLayer, MicroLayer, Network,
    ParseError, ParsedDocument, ValidationFinding, WiringError,
};
pub use report::{LayerPlan, SynthesisReport};
pub use solver::{
    apply_plan, check_bottleneck, solve_bruteforce, solve_dp, synthesize, BottleneckFlag,
    BottleneckMode, BottleneckPolicy, Infeasibility, Objective, ScalePlan, SolveError,
    SolveRequest, SynthesisError, SynthesizeOptions,
};
