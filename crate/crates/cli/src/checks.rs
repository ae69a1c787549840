//! Check registry: every verification routine sits behind a common trait,
//! is registered by name, and is selected at runtime from the scenario
//! file's `checks` section or the `--checks` flag. A failing law is
//! reported, never raised.

use crate::context::{ScenarioContext, Structure};
use crate::document::CheckSpec;
use crate::error::{CliError, CliResult};
use crate::report::{CheckReport, ReportItem, Table, TableRow};
use qtotal_core::composite::{check_corollary2, ewf_total_law_residual, lift};
use qtotal_core::measurement::bayes_gap;
use qtotal_core::oracle;
use qtotal_core::scenarios::{bong_commutator_report, brukner_appendix_d, guerin_marginal_check};
use qtotal_core::twotime::{check_theorem1, total_law_residual, two_time_conditional};

pub const DEFAULT_SAMPLE_N: usize = 100_000;
pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Clone, Copy)]
pub struct CheckOptions {
    pub tol: f64,
    pub seed: Option<u64>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            seed: None,
        }
    }
}

pub trait Check: Sync + Send {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    fn run(
        &self,
        ctx: &ScenarioContext,
        spec: &CheckSpec,
        opts: &CheckOptions,
    ) -> CliResult<CheckReport>;
}

pub struct CheckRegistry {
    checks: Vec<Box<dyn Check>>,
}

impl CheckRegistry {
    pub fn standard() -> Self {
        Self {
            checks: vec![
                Box::new(TotalLawCheck),
                Box::new(ConditionsCheck),
                Box::new(BayesGapCheck),
                Box::new(AppendixDCheck),
                Box::new(CommutatorsCheck),
                Box::new(OracleCheck),
                Box::new(SampleCheck),
            ],
        }
    }

    pub fn get(&self, name: &str) -> CliResult<&dyn Check> {
        self.checks
            .iter()
            .map(|c| c.as_ref())
            .find(|c| c.name() == name)
            .ok_or_else(|| CliError::UnknownCheck { name: name.into() })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.checks.iter().map(|c| c.name()).collect()
    }
}

fn check_failure(check: &str, err: impl std::fmt::Display) -> CliError {
    CliError::Check {
        check: check.into(),
        message: err.to_string(),
    }
}

fn verdicts_from(report: &qtotal_core::twotime::ConditionReport, out: &mut CheckReport) {
    for entry in &report.entries {
        out.items.push(ReportItem::Verdict {
            condition: entry.id.to_string(),
            applicable: entry.applicable,
            satisfied: entry.satisfied,
            residual: entry.residual,
            witness: entry.witness.clone(),
        });
    }
}

struct TotalLawCheck;

impl Check for TotalLawCheck {
    fn name(&self) -> &'static str {
        "total-law"
    }

    fn summary(&self) -> &'static str {
        "lhs vs rhs of the two-time law of total probability per outcome, plus marginal consistency"
    }

    fn run(
        &self,
        ctx: &ScenarioContext,
        _spec: &CheckSpec,
        _opts: &CheckOptions,
    ) -> CliResult<CheckReport> {
        let mut report = CheckReport::new(self.name());
        match ctx.structure {
            Structure::Ewf { .. } => {
                let exp = ctx.ewf_experiment()?.expect("EWF structure");
                let mut rows = Vec::new();
                for a in 0..exp.super_a.len() {
                    for b in 0..exp.super_b.len() {
                        let breakdown = ewf_total_law_residual(&exp, a, b)
                            .map_err(|e| check_failure(self.name(), e))?;
                        rows.push(TableRow {
                            label: format!(
                                "{}.{}",
                                exp.super_a.elements()[a].name(),
                                exp.super_b.elements()[b].name()
                            ),
                            values: vec![breakdown.lhs, breakdown.rhs, breakdown.residual],
                        });
                    }
                }
                report.table(Table {
                    title: "composite total law per super outcome".into(),
                    columns: vec!["lhs".into(), "rhs".into(), "residual".into()],
                    rows,
                });
            }
            Structure::TwoTime { .. } => {
                let exp = ctx.two_time_experiment()?;
                let mut rows = Vec::new();
                for j in 0..exp.second.len() {
                    let breakdown =
                        total_law_residual(&exp, j).map_err(|e| check_failure(self.name(), e))?;
                    rows.push(TableRow {
                        label: exp.second.elements()[j].name().to_string(),
                        values: vec![breakdown.lhs, breakdown.rhs, breakdown.residual],
                    });
                }
                report.table(Table {
                    title: "total law per second outcome".into(),
                    columns: vec!["lhs".into(), "rhs".into(), "residual".into()],
                    rows,
                });

                let marginals =
                    guerin_marginal_check(&exp.initial, &exp.first, &exp.second, &exp.evolution)
                        .map_err(|e| check_failure(self.name(), e))?;
                report.table(Table {
                    title: "first-index marginal consistency".into(),
                    columns: vec!["marginal".into(), "joint-sum".into(), "residual".into()],
                    rows: marginals
                        .first_labels
                        .iter()
                        .enumerate()
                        .map(|(i, label)| TableRow {
                            label: label.clone(),
                            values: vec![
                                marginals.first_marginals[i],
                                marginals.first_marginals[i] - marginals.first_residuals[i],
                                marginals.first_residuals[i],
                            ],
                        })
                        .collect(),
                });
                report.table(Table {
                    title: "second-index marginal consistency".into(),
                    columns: vec!["marginal".into(), "joint-sum".into(), "residual".into()],
                    rows: marginals
                        .second_labels
                        .iter()
                        .enumerate()
                        .map(|(j, label)| TableRow {
                            label: label.clone(),
                            values: vec![
                                marginals.second_marginals[j],
                                marginals.joint.iter().map(|row| row[j]).sum(),
                                marginals.second_residuals[j],
                            ],
                        })
                        .collect(),
                });
            }
        }
        Ok(report)
    }
}

struct ConditionsCheck;

impl Check for ConditionsCheck {
    fn name(&self) -> &'static str {
        "conditions"
    }

    fn summary(&self) -> &'static str {
        "sufficient-condition verdicts: C1-C3 and primed variants for two-time scenarios, C4/C5 for EWF scenarios"
    }

    fn run(
        &self,
        ctx: &ScenarioContext,
        _spec: &CheckSpec,
        opts: &CheckOptions,
    ) -> CliResult<CheckReport> {
        let mut report = CheckReport::new(self.name());
        match ctx.structure {
            Structure::Ewf { .. } => {
                let exp = ctx.ewf_experiment()?.expect("EWF structure");
                for a in 0..exp.super_a.len() {
                    for b in 0..exp.super_b.len() {
                        report.note(format!(
                            "super outcome {}.{}",
                            exp.super_a.elements()[a].name(),
                            exp.super_b.elements()[b].name()
                        ));
                        let conditions = check_corollary2(&exp, a, b, opts.tol)
                            .map_err(|e| check_failure(self.name(), e))?;
                        verdicts_from(&conditions, &mut report);
                    }
                }
            }
            Structure::TwoTime { .. } => {
                let exp = ctx.two_time_experiment()?;
                for j in 0..exp.second.len() {
                    report.note(format!(
                        "second outcome {}",
                        exp.second.elements()[j].name()
                    ));
                    let conditions = check_theorem1(&exp, j, opts.tol)
                        .map_err(|e| check_failure(self.name(), e))?;
                    verdicts_from(&conditions, &mut report);
                }
            }
        }
        Ok(report)
    }
}

struct BayesGapCheck;

impl Check for BayesGapCheck {
    fn name(&self) -> &'static str {
        "bayes-gap"
    }

    fn summary(&self) -> &'static str {
        "order asymmetry |Tr(sqrtA rho sqrtA B) - Tr(sqrtB rho sqrtB A)| per element pair"
    }

    fn run(
        &self,
        ctx: &ScenarioContext,
        _spec: &CheckSpec,
        _opts: &CheckOptions,
    ) -> CliResult<CheckReport> {
        let mut report = CheckReport::new(self.name());
        let exp = ctx.two_time_experiment()?;
        let mut rows = Vec::new();
        let mut max_gap = 0.0f64;
        for a in exp.first.elements() {
            for b in exp.second.elements() {
                let gap =
                    bayes_gap(&exp.initial, a, b).map_err(|e| check_failure(self.name(), e))?;
                let commutator = a.matrix().commutator(b.matrix()).frobenius_norm();
                max_gap = max_gap.max(gap);
                rows.push(TableRow {
                    label: format!("{}|{}", a.name(), b.name()),
                    values: vec![gap, commutator],
                });
            }
        }
        report.table(Table {
            title: "bayes gap per element pair".into(),
            columns: vec!["gap".into(), "commutator-norm".into()],
            rows,
        });
        report.scalar("max-gap", max_gap);
        Ok(report)
    }
}

struct AppendixDCheck;

impl Check for AppendixDCheck {
    fn name(&self) -> &'static str {
        "appendix-d"
    }

    fn summary(&self) -> &'static str {
        "theta-parameterized composite law values for the brukner scenario: rhs 1/4, lhs (1/2)sin^2(theta/2)"
    }

    fn run(
        &self,
        ctx: &ScenarioContext,
        _spec: &CheckSpec,
        _opts: &CheckOptions,
    ) -> CliResult<CheckReport> {
        let theta = ctx.theta().ok_or_else(|| CliError::Check {
            check: self.name().into(),
            message: "requires a brukner scenario with a `theta` parameter".into(),
        })?;
        let values = brukner_appendix_d(theta).map_err(|e| check_failure(self.name(), e))?;
        let mut report = CheckReport::new(self.name());
        report.scalar("theta", values.theta);
        report.scalar("rhs_sum", values.rhs_sum);
        report.scalar("lhs", values.lhs);
        report.scalar("residual", values.residual);
        report.scalar("c3prime_residual_0", values.c3prime_residuals[0]);
        report.scalar("c3prime_residual_1", values.c3prime_residuals[1]);
        report.scalar("c5_residual", values.c5_residual);
        Ok(report)
    }
}

struct CommutatorsCheck;

impl Check for CommutatorsCheck {
    fn name(&self) -> &'static str {
        "commutators"
    }

    fn summary(&self) -> &'static str {
        "Frobenius norms of within-stage commutators; for bong, both friend-operator variants plus the cross-lab zero certificate"
    }

    fn run(
        &self,
        ctx: &ScenarioContext,
        _spec: &CheckSpec,
        _opts: &CheckOptions,
    ) -> CliResult<CheckReport> {
        let mut report = CheckReport::new(self.name());
        if let Some(bong) = &ctx.bong {
            let values = bong_commutator_report(bong).map_err(|e| check_failure(self.name(), e))?;
            report.table(Table {
                title: "within-lab [A(x), C(x)] norms".into(),
                columns: vec!["norm".into(), "degenerate".into()],
                rows: values
                    .rows
                    .iter()
                    .map(|r| TableRow {
                        label: format!("{}/x={}/{}", r.lab, r.setting, r.variant),
                        values: vec![r.norm, if r.degenerate { 1.0 } else { 0.0 }],
                    })
                    .collect(),
            });
            report.scalar("cross_lab_max", values.cross_lab_max);
            return Ok(report);
        }
        match ctx.structure {
            Structure::Ewf {
                friend_c,
                friend_d,
                super_a,
                super_b,
            } => {
                let mut rows = Vec::new();
                for (friend, superset, lab) in [
                    (friend_c, super_a, "first factor"),
                    (friend_d, super_b, "second factor"),
                ] {
                    for f in ctx.measurements[friend].set.elements() {
                        for s in ctx.measurements[superset].set.elements() {
                            rows.push(TableRow {
                                label: format!("{}: [{}, {}]", lab, s.name(), f.name()),
                                values: vec![s.matrix().commutator(f.matrix()).frobenius_norm()],
                            });
                        }
                    }
                }
                report.table(Table {
                    title: "within-factor commutator norms".into(),
                    columns: vec!["norm".into()],
                    rows,
                });
                // cross-factor certificate over lifted first-stage pairs
                let mut cross = 0.0f64;
                for f in ctx.measurements[friend_c].set.elements() {
                    for g in ctx.measurements[friend_d].set.elements() {
                        let lf = lift(f.matrix(), 0, &ctx.space)?;
                        let lg = lift(g.matrix(), 1, &ctx.space)?;
                        cross = cross.max(lf.commutator(&lg).frobenius_norm());
                    }
                }
                report.scalar("cross_factor_max", cross);
            }
            Structure::TwoTime { first, second } => {
                let first_set = ctx.lifted_set(first)?;
                let second_set = ctx.lifted_set(second)?;
                let mut rows = Vec::new();
                for a in first_set.elements() {
                    for b in second_set.elements() {
                        rows.push(TableRow {
                            label: format!("[{}, {}]", a.name(), b.name()),
                            values: vec![a.matrix().commutator(b.matrix()).frobenius_norm()],
                        });
                    }
                }
                report.table(Table {
                    title: "first-stage vs second-stage commutator norms".into(),
                    columns: vec!["norm".into()],
                    rows,
                });
            }
        }
        Ok(report)
    }
}

struct OracleCheck;

impl Check for OracleCheck {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn summary(&self) -> &'static str {
        "cross-checks the analytic conditionals and total-law sides against brute-force enumeration"
    }

    fn run(
        &self,
        ctx: &ScenarioContext,
        _spec: &CheckSpec,
        _opts: &CheckOptions,
    ) -> CliResult<CheckReport> {
        let mut report = CheckReport::new(self.name());
        let exp = ctx.two_time_experiment()?;
        let schedule = oracle::MeasurementSchedule::two_step(
            exp.first.clone(),
            exp.evolution.clone(),
            exp.second.clone(),
        )
        .map_err(|e| check_failure(self.name(), e))?;
        let dist = oracle::enumerate(&exp.initial, &schedule)
            .map_err(|e| check_failure(self.name(), e))?;

        let mut max_conditional_dev = 0.0f64;
        for (i, a) in exp.first.elements().iter().enumerate() {
            let p_first = dist.marginal_prefix(a.name());
            if p_first < 1e-9 {
                continue;
            }
            for (j, b) in exp.second.elements().iter().enumerate() {
                let joint = dist.probability(&format!("{},{}", a.name(), b.name()));
                let analytic =
                    two_time_conditional(&exp, i, j).map_err(|e| check_failure(self.name(), e))?;
                max_conditional_dev = max_conditional_dev.max((analytic - joint / p_first).abs());
            }
        }
        let mut max_rhs_dev = 0.0f64;
        for (j, b) in exp.second.elements().iter().enumerate() {
            let breakdown =
                total_law_residual(&exp, j).map_err(|e| check_failure(self.name(), e))?;
            let rhs_oracle: f64 = dist
                .iter()
                .filter(|(k, _)| k.ends_with(&format!(",{}", b.name())))
                .map(|(_, p)| p)
                .sum();
            max_rhs_dev = max_rhs_dev.max((breakdown.rhs - rhs_oracle).abs());
        }
        report.scalar("max_conditional_deviation", max_conditional_dev);
        report.scalar("max_rhs_deviation", max_rhs_dev);
        report.scalar("enumeration_mass", dist.total_mass());
        report.note(format!("enumerated {} outcome strings", dist.len()));
        Ok(report)
    }
}

struct SampleCheck;

impl Check for SampleCheck {
    fn name(&self) -> &'static str {
        "sample"
    }

    fn summary(&self) -> &'static str {
        "seeded Monte Carlo trajectories against the enumerated distribution, with 3-sigma binomial bounds per cell"
    }

    fn run(
        &self,
        ctx: &ScenarioContext,
        spec: &CheckSpec,
        opts: &CheckOptions,
    ) -> CliResult<CheckReport> {
        let n = spec.n.unwrap_or(DEFAULT_SAMPLE_N);
        // CLI flag wins over the file-declared seed
        let seed = opts.seed.or(spec.seed).unwrap_or(DEFAULT_SEED);
        let exp = ctx.two_time_experiment()?;
        let schedule = oracle::MeasurementSchedule::two_step(
            exp.first.clone(),
            exp.evolution.clone(),
            exp.second.clone(),
        )
        .map_err(|e| check_failure(self.name(), e))?;
        let exact = oracle::enumerate(&exp.initial, &schedule)
            .map_err(|e| check_failure(self.name(), e))?;
        let empirical = oracle::sample(&exp.initial, &schedule, n, seed)
            .map_err(|e| check_failure(self.name(), e))?;

        let mut rows = Vec::new();
        let mut max_excess = f64::NEG_INFINITY;
        for (outcome, p) in exact.iter() {
            let e = empirical.probability(outcome);
            let bound = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
            max_excess = max_excess.max((e - p).abs() - bound);
            rows.push(TableRow {
                label: outcome.to_string(),
                values: vec![p, e, (e - p).abs(), bound],
            });
        }
        let mut report = CheckReport::new(self.name());
        report.scalar("n", n as f64);
        report.scalar("seed", seed as f64);
        report.scalar("tv_distance", empirical.total_variation(&exact));
        report.scalar("max_excess_over_3sigma", max_excess);
        report.table(Table {
            title: "cells".into(),
            columns: vec![
                "exact".into(),
                "empirical".into(),
                "abs-diff".into(),
                "3sigma-bound".into(),
            ],
            rows,
        });
        Ok(report)
    }
}
