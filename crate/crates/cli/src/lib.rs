//! Scenario-file driven front end for the two-time total-probability
//! calculus: JSON scenario ingestion, a registry of named checks, builtin
//! scenario constructors, and report emission as table, CSV, or JSON.

pub mod builtins;
pub mod checks;
pub mod context;
pub mod document;
pub mod error;
pub mod report;
pub mod sweep;

use crate::builtins::BuiltinRegistry;
use crate::checks::{CheckOptions, CheckRegistry};
use crate::context::{context_from_document, ScenarioContext};
use crate::document::{CheckSpec, ScenarioDoc};
use crate::error::CliResult;
use crate::report::Report;
use std::path::Path;

/// Loads a scenario file and runs the requested checks (the file's own
/// `checks` section when the filter is empty).
pub fn run_scenario_file(
    path: &Path,
    checks_filter: &[String],
    opts: &CheckOptions,
) -> CliResult<Report> {
    let doc = document::load_document(path)?;
    let builtins = BuiltinRegistry::standard();
    let ctx = context_from_document(&doc, &builtins)?;
    run_checks(&ctx, checks_filter, opts)
}

/// Runs checks against an already-built context.
pub fn run_checks(
    ctx: &ScenarioContext,
    checks_filter: &[String],
    opts: &CheckOptions,
) -> CliResult<Report> {
    let registry = CheckRegistry::standard();
    let specs: Vec<CheckSpec> = if checks_filter.is_empty() {
        ctx.checks.clone()
    } else {
        checks_filter
            .iter()
            .map(|name| {
                // carry n/seed from the scenario's own spec when the filter
                // re-selects a declared check
                ctx.checks
                    .iter()
                    .find(|c| &c.name == name)
                    .cloned()
                    .unwrap_or_else(|| CheckSpec::named(name.clone()))
            })
            .collect()
    };
    let mut report = Report {
        scenario: ctx.name.clone(),
        checks: Vec::new(),
    };
    for spec in &specs {
        let check = registry.get(&spec.name)?;
        report.checks.push(check.run(ctx, spec, opts)?);
    }
    Ok(report)
}

/// Builds a builtin scenario by name with default parameters.
pub fn build_builtin(name: &str) -> CliResult<ScenarioContext> {
    let builtins = BuiltinRegistry::standard();
    builtins.get(name)?.build(&Default::default())
}

/// Export: materializes a context into a scenario document.
pub fn export_context(ctx: &ScenarioContext) -> ScenarioDoc {
    ctx.to_document()
}
