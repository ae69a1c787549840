//! Parameter sweeps over builtin-backed scenarios: one grid of a numeric
//! parameter, one check, one row of results per grid point.

use crate::builtins::BuiltinRegistry;
use crate::context::Structure;
use crate::document::{ParamMap, ParamValue, ScenarioDoc};
use crate::error::{CliError, CliResult};
use crate::report::{format_significant, CheckReport, Report, Table, TableRow};
use qtotal_core::composite::{check_corollary2, ewf_total_law_residual};
use qtotal_core::scenarios::brukner_appendix_d;
use qtotal_core::twotime::{check_theorem1, total_law_residual, ConditionReport};

#[derive(Debug, Clone, Copy)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepRange {
    /// Parses "start:stop:steps" where steps is the number of grid points.
    pub fn parse(text: &str) -> CliResult<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::validation(format!(
                "range `{text}` must have the form start:stop:steps"
            )));
        }
        let start: f64 = parts[0]
            .parse()
            .map_err(|_| CliError::validation(format!("bad range start `{}`", parts[0])))?;
        let stop: f64 = parts[1]
            .parse()
            .map_err(|_| CliError::validation(format!("bad range stop `{}`", parts[1])))?;
        let steps: usize = parts[2]
            .parse()
            .map_err(|_| CliError::validation(format!("bad range step count `{}`", parts[2])))?;
        if steps == 0 {
            return Err(CliError::validation("range must have at least one step"));
        }
        Ok(Self { start, stop, steps })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        (0..self.steps)
            .map(|k| self.start + (self.stop - self.start) * k as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

fn condition_columns(report: &ConditionReport, columns: &mut Vec<String>, values: &mut Vec<f64>) {
    for entry in &report.entries {
        columns.push(format!("{}.ok", entry.id));
        values.push(if !entry.applicable {
            -1.0
        } else if entry.satisfied {
            1.0
        } else {
            0.0
        });
        columns.push(format!("{}.residual", entry.id));
        values.push(entry.residual);
    }
}

/// Runs the sweep: the scenario must be builtin-backed (that is where the
/// parameter lives); rows are ordered by the monotone parameter grid.
pub fn run_sweep(
    doc: &ScenarioDoc,
    registry: &BuiltinRegistry,
    param: &str,
    range: SweepRange,
    check: &str,
    tol: f64,
) -> CliResult<Report> {
    let builtin_name = doc
        .state
        .as_ref()
        .and_then(|s| s.builtin.clone())
        .ok_or_else(|| CliError::UnknownParameter {
            name: format!("{param} (the scenario is not builtin-backed)"),
        })?;
    let builtin = registry.get(&builtin_name)?;
    if !builtin.has_param(param) {
        return Err(CliError::UnknownParameter { name: param.into() });
    }
    let base_params: ParamMap = {
        let mut p = doc.params.clone().unwrap_or_default();
        if let Some(extra) = doc.state.as_ref().and_then(|s| s.params.clone()) {
            p.extend(extra);
        }
        p
    };

    let mut columns: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for value in range.values() {
        let mut params = base_params.clone();
        params.insert(param.to_string(), ParamValue::Number(value));
        let ctx = builtin.build(&params)?;

        let mut row_columns = vec!["param".to_string()];
        let mut row_values = vec![value];
        match check {
            "total-law" => match ctx.structure {
                Structure::Ewf { .. } => {
                    let exp = ctx.ewf_experiment()?.expect("EWF structure");
                    let b = ewf_total_law_residual(&exp, 0, 0)?;
                    row_columns.extend(["lhs".into(), "rhs".into(), "residual".into()]);
                    row_values.extend([b.lhs, b.rhs, b.residual]);
                }
                Structure::TwoTime { .. } => {
                    let exp = ctx.two_time_experiment()?;
                    let b = total_law_residual(&exp, 0)?;
                    row_columns.extend(["lhs".into(), "rhs".into(), "residual".into()]);
                    row_values.extend([b.lhs, b.rhs, b.residual]);
                }
            },
            "conditions" => match ctx.structure {
                Structure::Ewf { .. } => {
                    let exp = ctx.ewf_experiment()?.expect("EWF structure");
                    let b = ewf_total_law_residual(&exp, 0, 0)?;
                    row_columns.extend(["lhs".into(), "rhs".into(), "residual".into()]);
                    row_values.extend([b.lhs, b.rhs, b.residual]);
                    let report = check_corollary2(&exp, 0, 0, tol)?;
                    condition_columns(&report, &mut row_columns, &mut row_values);
                }
                Structure::TwoTime { .. } => {
                    let exp = ctx.two_time_experiment()?;
                    let b = total_law_residual(&exp, 0)?;
                    row_columns.extend(["lhs".into(), "rhs".into(), "residual".into()]);
                    row_values.extend([b.lhs, b.rhs, b.residual]);
                    let report = check_theorem1(&exp, 0, tol)?;
                    condition_columns(&report, &mut row_columns, &mut row_values);
                }
            },
            "appendix-d" => {
                let theta = ctx.theta().ok_or_else(|| CliError::Check {
                    check: check.into(),
                    message: "appendix-d sweeps need a theta parameter".into(),
                })?;
                let values = brukner_appendix_d(theta)?;
                row_columns.extend([
                    "rhs_sum".into(),
                    "lhs".into(),
                    "residual".into(),
                    "c5_residual".into(),
                ]);
                row_values.extend([
                    values.rhs_sum,
                    values.lhs,
                    values.residual,
                    values.c5_residual,
                ]);
            }
            other => {
                return Err(CliError::Check {
                    check: other.into(),
                    message: "sweep supports the checks total-law, conditions, and appendix-d"
                        .into(),
                })
            }
        }
        if columns.is_none() {
            columns = Some(row_columns);
        }
        rows.push(TableRow {
            label: format_significant(value),
            values: row_values,
        });
    }

    let mut check_report = CheckReport::new(format!("sweep:{check}"));
    check_report.note(format!(
        "parameter {param} over [{}, {}] in {} steps",
        range.start, range.stop, range.steps
    ));
    check_report.table(Table {
        title: format!("{param} sweep"),
        columns: columns.unwrap_or_default(),
        rows,
    });
    Ok(Report {
        scenario: builtin_name,
        checks: vec![check_report],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::StateDoc;

    fn builtin_doc(name: &str) -> ScenarioDoc {
        ScenarioDoc {
            state: Some(StateDoc {
                builtin: Some(name.into()),
                ..Default::default()
            }),
            ..Default::default()
        }
    }

    #[test]
    fn range_parsing() {
        let r = SweepRange::parse("0:2.5:5").unwrap();
        assert_eq!(r.values().len(), 5);
        assert!((r.values()[0] - 0.0).abs() < 1e-15);
        assert!((r.values()[4] - 2.5).abs() < 1e-15);
        assert!(SweepRange::parse("1:2").is_err());
        assert!(SweepRange::parse("a:b:3").is_err());
        assert_eq!(SweepRange::parse("1.0:9.9:1").unwrap().values(), vec![1.0]);
    }

    #[test]
    fn brukner_theta_sweep_has_constant_rhs() {
        let registry = BuiltinRegistry::standard();
        let report = run_sweep(
            &builtin_doc("brukner"),
            &registry,
            "theta",
            SweepRange::parse("0:3.141592653589793:9").unwrap(),
            "total-law",
            1e-9,
        )
        .unwrap();
        let crate::report::ReportItem::Table(table) = &report.checks[0].items[1] else {
            panic!("expected table");
        };
        assert_eq!(table.rows.len(), 9);
        let rhs_col = table.columns.iter().position(|c| c == "rhs").unwrap();
        let lhs_col = table.columns.iter().position(|c| c == "lhs").unwrap();
        for row in &table.rows {
            assert!((row.values[rhs_col] - 0.25).abs() < 1e-10);
            let theta = row.values[0];
            let want = 0.5 * (theta / 2.0).sin().powi(2);
            assert!((row.values[lhs_col] - want).abs() < 1e-10);
        }
    }

    #[test]
    fn stable_facts_lambda_sweep_stays_stable() {
        let registry = BuiltinRegistry::standard();
        let report = run_sweep(
            &builtin_doc("stable-facts"),
            &registry,
            "lambda0",
            SweepRange::parse("0:1:10").unwrap(),
            "total-law",
            1e-9,
        )
        .unwrap();
        let crate::report::ReportItem::Table(table) = &report.checks[0].items[1] else {
            panic!("expected table");
        };
        let res_col = table.columns.iter().position(|c| c == "residual").unwrap();
        for row in &table.rows {
            assert!(row.values[res_col] <= 1e-10);
        }
    }

    #[test]
    fn unknown_parameter_is_rejected() {
        let registry = BuiltinRegistry::standard();
        let err = run_sweep(
            &builtin_doc("double-slit"),
            &registry,
            "theta",
            SweepRange::parse("0:1:3").unwrap(),
            "total-law",
            1e-9,
        )
        .unwrap_err();
        assert!(matches!(err, CliError::UnknownParameter { .. }));
    }
}
