//! Command-line front end: validate network documents, compute budgets,
//! count and enumerate the scaling solution space, and synthesize scaled
//! architectures.
//!
//! Artifacts (documents, plan streams) go to files or standard output;
//! diagnostics and human-readable summaries go to standard error. Exit
//! codes: 0 success, 2 parse (document or command line), 3 validation
//! findings, 4 infeasible, 5 enumeration-cap refusal, 1 anything else.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use scalesynth_core::budget::{compute_budget, default_lambda, BudgetSpec, ClassScope};
use scalesynth_core::factorspace::{
    count_solution_space, enumerate_window, FactorSpaceError, DEFAULT_ENUMERATION_CAP,
};
use scalesynth_core::ir::{parse_document, to_document_string, Network, ParsedDocument};
use scalesynth_core::numeric::{decimal_or_fraction, display_fraction, parse_rational};
use scalesynth_core::solver::{
    synthesize, BottleneckMode, BottleneckPolicy, Objective, SolveError, SynthesisError,
    SynthesizeOptions,
};

const EXIT_PARSE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;
const EXIT_CAP_REFUSAL: u8 = 5;

#[derive(Parser)]
#[command(
    name = "scalesynth",
    version,
    about = "Scale a CNN architecture to a task-proportional parameter budget"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a network document against every structural rule.
    Validate {
        /// Network document (JSON).
        input: PathBuf,
    },
    /// Compute the parameter budget for a class scope.
    Budget {
        /// Network document supplying the baseline parameter count (and
        /// optionally a scope block).
        #[arg(long, conflicts_with = "phi")]
        input: Option<PathBuf>,
        /// Baseline parameter count, if no document is given.
        #[arg(long)]
        phi: Option<u64>,
        #[command(flatten)]
        scope: ScopeArgs,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Count the affine and non-affine scaling solution spaces.
    CountSpace {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Exhaustively count (and optionally stream) factor assignments whose
    /// scaled parameter count lands in a window around a target fraction.
    Enumerate {
        input: PathBuf,
        /// Window center as a fraction of the baseline count, e.g. 0.08.
        #[arg(long, value_parser = rational_arg)]
        target_fraction: Rational,
        /// Relative half-width of the window (strict), e.g. 0.002.
        #[arg(long, value_parser = rational_arg, default_value = "0.002")]
        tolerance: Rational,
        /// Refuse exhaustive enumeration above this many assignments.
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u64,
        /// Stream qualifying plans, one `f1,f2,...  phi'` line each.
        #[arg(long)]
        emit_plans: bool,
        /// Where to write the plan stream (default: standard output).
        #[arg(long, requires = "emit_plans")]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Scale a network to its scope-derived budget and emit the scaled
    /// document plus a synthesis report.
    Synthesize {
        input: PathBuf,
        #[command(flatten)]
        scope: ScopeArgs,
        /// cap-maximize: largest phi' at or under the budget floor.
        /// window: largest phi' inside the tolerance window around the
        /// budget fraction.
        #[arg(long, value_enum, default_value_t = ObjectiveArg::CapMaximize)]
        objective: ObjectiveArg,
        /// Window tolerance (window objective only).
        #[arg(long, value_parser = rational_arg, default_value = "0.002")]
        tolerance: Rational,
        #[arg(long, value_enum, default_value_t = PolicyArg::AbsoluteRatio)]
        policy: PolicyArg,
        /// Bottleneck threshold; defaults to 1/2 (absolute-ratio) or 1/4
        /// (baseline-relative).
        #[arg(long, value_parser = rational_arg)]
        theta: Option<Rational>,
        /// Solve with sums rounded up to this granularity (approximate).
        #[arg(long)]
        quantization: Option<u64>,
        /// Where to write the scaled network document (default: stdout).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Where to write the synthesis report.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Content of the report file.
        #[arg(long, value_enum, default_value_t = Format::Document)]
        report_format: Format,
    },
}

#[derive(Args)]
struct ScopeArgs {
    /// Number of classes the baseline classifier covers.
    #[arg(long)]
    alpha: Option<u64>,
    /// Number of classes the task needs.
    #[arg(long)]
    beta: Option<u64>,
    /// Miscellaneous-class coefficient in (0, 1].
    #[arg(long, value_parser = rational_arg)]
    lambda: Option<Rational>,
    /// Reserve capacity for a miscellaneous class (beta + 1 classifier).
    #[arg(long)]
    scope_aware: bool,
}

type Rational = num_rational::BigRational;

fn rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    /// Structured JSON document.
    Document,
    /// Human-readable table.
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ObjectiveArg {
    CapMaximize,
    Window,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    AbsoluteRatio,
    BaselineRelative,
    StrictNondecreasing,
}

/// Error carrying its process exit code.
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::new(1, format!("{e:#}"))
    }
}

impl From<SynthesisError> for CliError {
    fn from(e: SynthesisError) -> Self {
        let code = match &e {
            SynthesisError::Validation(_) => EXIT_VALIDATION,
            SynthesisError::Budget(_) => EXIT_PARSE,
            SynthesisError::Solve(solve) => solve_exit_code(solve),
        };
        CliError::new(code, e.to_string())
    }
}

fn solve_exit_code(e: &SolveError) -> u8 {
    match e {
        SolveError::Infeasible(_) => EXIT_INFEASIBLE,
        SolveError::SpaceExceedsCap { .. } => EXIT_CAP_REFUSAL,
        SolveError::NonDivisibleFactor { .. } | SolveError::InvalidRequest(_) => EXIT_PARSE,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { input } => cmd_validate(&input),
        Command::Budget {
            input,
            phi,
            scope,
            format,
        } => cmd_budget(input, phi, scope, format),
        Command::CountSpace { input, format } => cmd_count_space(&input, format),
        Command::Enumerate {
            input,
            target_fraction,
            tolerance,
            cap,
            emit_plans,
            output,
            format,
        } => cmd_enumerate(
            &input,
            &target_fraction,
            &tolerance,
            cap,
            emit_plans,
            output,
            format,
        ),
        Command::Synthesize {
            input,
            scope,
            objective,
            tolerance,
            policy,
            theta,
            quantization,
            output,
            report,
            report_format,
        } => cmd_synthesize(
            &input,
            scope,
            objective,
            tolerance,
            policy,
            theta,
            quantization,
            output,
            report,
            report_format,
        ),
    }
}

fn load_document(path: &Path) -> Result<ParsedDocument, CliError> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(CliError::from)?;
    parse_document(&text).map_err(|e| CliError::new(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn write_artifact(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        Some(path) => fs::write(path, content)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(CliError::from),
        None => {
            print!("{content}");
            std::io::stdout().flush().ok();
            Ok(())
        }
    }
}

fn cmd_validate(input: &Path) -> Result<(), CliError> {
    let doc = load_document(input)?;
    let findings = doc.network.validate();
    if findings.is_empty() {
        println!(
            "ok: {} is well formed ({} macro-layers)",
            doc.network.name,
            doc.network.macro_layers.len()
        );
        Ok(())
    } else {
        let mut message = format!("{} finding(s) in {}:", findings.len(), doc.network.name);
        for finding in &findings {
            message.push_str(&format!("\n  {finding}"));
        }
        Err(CliError::new(EXIT_VALIDATION, message))
    }
}

/// Resolves the scope from flags, falling back to the document's scope
/// block field by field.
fn resolve_scope(
    args: &ScopeArgs,
    doc: Option<&ParsedDocument>,
) -> Result<(ClassScope, bool), CliError> {
    let doc_scope = doc.and_then(|d| d.scope.as_ref());
    let alpha = args.alpha.or(doc_scope.map(|s| s.alpha)).ok_or_else(|| {
        CliError::new(
            EXIT_PARSE,
            "missing --alpha (and no scope block in the document)",
        )
    })?;
    let beta = args.beta.or(doc_scope.map(|s| s.beta)).ok_or_else(|| {
        CliError::new(
            EXIT_PARSE,
            "missing --beta (and no scope block in the document)",
        )
    })?;
    let lambda = match (&args.lambda, doc_scope.and_then(|s| s.lambda.as_deref())) {
        (Some(l), _) => l.clone(),
        (None, Some(text)) => parse_rational(text)
            .map_err(|e| CliError::new(EXIT_PARSE, format!("scope block lambda: {e}")))?,
        (None, None) => default_lambda(),
    };
    let scope_aware = args.scope_aware || doc_scope.map(|s| s.scope_aware).unwrap_or(false);
    let scope = ClassScope::new(alpha, beta, lambda)
        .map_err(|e| CliError::new(EXIT_PARSE, e.to_string()))?;
    Ok((scope, scope_aware))
}

fn cmd_budget(
    input: Option<PathBuf>,
    phi: Option<u64>,
    scope_args: ScopeArgs,
    format: Format,
) -> Result<(), CliError> {
    let doc = input.as_deref().map(load_document).transpose()?;
    let phi = match (phi, &doc) {
        (Some(phi), _) => phi,
        (None, Some(doc)) => doc
            .network
            .param_count()
            .map_err(|e| CliError::new(EXIT_VALIDATION, e.to_string()))?,
        (None, None) => return Err(CliError::new(EXIT_PARSE, "supply --phi or --input")),
    };
    let (scope, scope_aware) = resolve_scope(&scope_args, doc.as_ref())?;
    let budget = compute_budget(&BudgetSpec {
        phi,
        scope: scope.clone(),
        scope_aware,
        window_tolerance: scalesynth_core::numeric::ratio(0, 1),
    })
    .map_err(|e| CliError::new(EXIT_PARSE, e.to_string()))?;

    match format {
        Format::Document => {
            let doc = serde_json::json!({
                "phi": phi,
                "alpha": scope.alpha,
                "beta": scope.beta,
                "lambda": display_fraction(&scope.lambda),
                "scope_aware": scope_aware,
                "fraction": display_fraction(&budget.fraction),
                "fraction_decimal": decimal_or_fraction(&budget.fraction),
                "phi_prime_floor": budget.phi_prime_floor,
                "ideal_params_per_class": decimal_or_fraction(&budget.gamma_ideal),
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&doc).expect("budget document")
            );
        }
        Format::Table => {
            println!("baseline params (phi):  {phi}");
            println!(
                "scope:                  alpha={} beta={} lambda={} scope-aware={}",
                scope.alpha,
                scope.beta,
                display_fraction(&scope.lambda),
                scope_aware
            );
            println!(
                "budget fraction:        {} ({})",
                decimal_or_fraction(&budget.fraction),
                display_fraction(&budget.fraction)
            );
            println!("phi' floor:             {}", budget.phi_prime_floor);
            println!(
                "ideal params per class: {}",
                decimal_or_fraction(&budget.gamma_ideal)
            );
        }
    }
    Ok(())
}

fn cmd_count_space(input: &Path, format: Format) -> Result<(), CliError> {
    let doc = load_document(input)?;
    ensure_valid(&doc.network)?;
    let affine = count_solution_space(&doc.network, true);
    let non_affine = count_solution_space(&doc.network, false);
    match format {
        Format::Document => {
            let doc = serde_json::json!({
                "network": doc.network.name,
                "affine": affine.to_string(),
                "non_affine": non_affine.to_string(),
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&doc).expect("count document")
            );
        }
        Format::Table => {
            println!("network:            {}", doc.network.name);
            println!("affine space:       {affine}");
            println!("non-affine space:   {non_affine}");
        }
    }
    Ok(())
}

fn ensure_valid(network: &Network) -> Result<(), CliError> {
    let findings = network.validate();
    if findings.is_empty() {
        return Ok(());
    }
    let mut message = format!("{} finding(s):", findings.len());
    for finding in &findings {
        message.push_str(&format!("\n  {finding}"));
    }
    Err(CliError::new(EXIT_VALIDATION, message))
}

fn cmd_enumerate(
    input: &Path,
    target_fraction: &Rational,
    tolerance: &Rational,
    cap: u64,
    emit_plans: bool,
    output: Option<PathBuf>,
    format: Format,
) -> Result<(), CliError> {
    let doc = load_document(input)?;
    ensure_valid(&doc.network)?;

    let mut stream: Box<dyn Write> = match (&output, emit_plans) {
        (Some(path), true) => Box::new(
            fs::File::create(path)
                .with_context(|| format!("cannot create {}", path.display()))
                .map_err(CliError::from)?,
        ),
        _ => Box::new(std::io::stdout()),
    };
    let plans_to_stdout = emit_plans && output.is_none();

    let mut emit = |factors: &[u64], phi_prime: u64| {
        let joined = factors
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(",");
        writeln!(stream, "{joined}  {phi_prime}").expect("plan stream write");
    };
    let mut visitor: Option<scalesynth_core::factorspace::PlanVisitor<'_>> =
        if emit_plans { Some(&mut emit) } else { None };

    let count = enumerate_window(
        &doc.network,
        target_fraction,
        tolerance,
        cap,
        visitor.take(),
    )
    .map_err(|e| match e {
        FactorSpaceError::SpaceExceedsCap { .. } => CliError::new(EXIT_CAP_REFUSAL, e.to_string()),
        FactorSpaceError::InvalidWindow(_) => CliError::new(EXIT_PARSE, e.to_string()),
    })?;
    drop(stream);

    let summary = |out: &mut dyn Write| match format {
        Format::Document => {
            let doc = serde_json::json!({
                "network": doc.network.name,
                "target_fraction": display_fraction(target_fraction),
                "tolerance": display_fraction(tolerance),
                "matching": count.matching.to_string(),
                "total_space": count.total_space.to_string(),
                "enumerated": count.enumerated,
            });
            writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&doc).expect("summary document")
            )
        }
        Format::Table => writeln!(
            out,
            "{} of {} assignments land in the window (target {}, tolerance {}){}",
            count.matching,
            count.total_space,
            decimal_or_fraction(target_fraction),
            decimal_or_fraction(tolerance),
            if count.enumerated {
                ""
            } else {
                " [closed form]"
            }
        ),
    };
    if plans_to_stdout {
        summary(&mut std::io::stderr()).expect("summary write");
    } else {
        summary(&mut std::io::stdout()).expect("summary write");
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_synthesize(
    input: &Path,
    scope_args: ScopeArgs,
    objective: ObjectiveArg,
    tolerance: Rational,
    policy: PolicyArg,
    theta: Option<Rational>,
    quantization: Option<u64>,
    output: Option<PathBuf>,
    report_path: Option<PathBuf>,
    report_format: Format,
) -> Result<(), CliError> {
    let doc = load_document(input)?;
    let (scope, scope_aware) = resolve_scope(&scope_args, Some(&doc))?;

    let mut bottleneck = match policy {
        PolicyArg::AbsoluteRatio => BottleneckPolicy::default(),
        PolicyArg::BaselineRelative => BottleneckPolicy::baseline_relative(),
        PolicyArg::StrictNondecreasing => BottleneckPolicy::strict_nondecreasing(),
    };
    if let Some(theta) = theta {
        if bottleneck.mode == BottleneckMode::StrictNondecreasing {
            return Err(CliError::new(
                EXIT_PARSE,
                "--theta does not apply to the strict policy",
            ));
        }
        bottleneck.theta = theta;
    }
    let options = SynthesizeOptions {
        scope_aware,
        objective: match objective {
            ObjectiveArg::CapMaximize => Objective::CapMaximize,
            ObjectiveArg::Window => Objective::Window { tolerance },
        },
        policy: bottleneck,
        quantization,
    };

    let (scaled, report) = synthesize(&doc.network, &scope, &options)?;

    write_artifact(output.as_deref(), &to_document_string(&scaled))?;
    if let Some(path) = &report_path {
        let content = match report_format {
            Format::Document => report.to_json_string(),
            Format::Table => report.render_table(),
        };
        write_artifact(Some(path), &content)?;
    }
    eprint!("{}", report.render_table());
    Ok(())
}
