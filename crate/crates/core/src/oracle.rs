//! Independent brute-force ground truth: depth-first enumeration of
//! sequential measurement outcomes, seeded Monte Carlo trajectories, and a
//! classical-probability baseline. The enumeration recomputes every state
//! update from scratch out of the raw kernel; it never calls the analytic
//! conditional-probability paths it is used to cross-check.

use crate::composite::{lift, EwfExperiment};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::measurement::{DensityOperator, PovmElement, PovmSet};
use crate::random;
use crate::twotime::Evolution;
use std::collections::BTreeMap;

/// Branches below this probability are recorded as zero and not expanded.
pub const BRANCH_CUTOFF: f64 = 1e-15;

/// One step of a measurement schedule: an optional free evolution applied
/// first, then a complete POVM measured at the given time.
#[derive(Debug, Clone)]
pub struct ScheduleStep {
    pub time: f64,
    pub povm: PovmSet,
    pub evolution_before: Option<Evolution>,
}

/// Strictly time-ordered sequence of measurements on one system.
#[derive(Debug, Clone)]
pub struct MeasurementSchedule {
    steps: Vec<ScheduleStep>,
}

impl MeasurementSchedule {
    pub fn new(steps: Vec<ScheduleStep>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::EmptyPovm);
        }
        let dim = steps[0].povm.dim();
        let mut last_time = f64::NEG_INFINITY;
        for step in &steps {
            if step.time <= last_time {
                return Err(Error::ScheduleOrdering);
            }
            last_time = step.time;
            if step.povm.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: step.povm.dim(),
                });
            }
            if let Some(ev) = &step.evolution_before {
                if ev.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        left: dim,
                        right: ev.dim(),
                    });
                }
            }
        }
        Ok(Self { steps })
    }

    /// First set at t=0, evolution, second set at t=1.
    pub fn two_step(first: PovmSet, evolution: Evolution, second: PovmSet) -> Result<Self> {
        Self::new(vec![
            ScheduleStep {
                time: 0.0,
                povm: first,
                evolution_before: None,
            },
            ScheduleStep {
                time: 1.0,
                povm: second,
                evolution_before: Some(evolution),
            },
        ])
    }

    pub fn steps(&self) -> &[ScheduleStep] {
        &self.steps
    }

    pub fn dim(&self) -> usize {
        self.steps[0].povm.dim()
    }
}

/// Map from outcome strings (step labels joined by commas) to probabilities.
#[derive(Debug, Clone, Default)]
pub struct OutcomeDistribution {
    probabilities: BTreeMap<String, f64>,
}

impl OutcomeDistribution {
    pub fn probability(&self, outcome: &str) -> f64 {
        self.probabilities.get(outcome).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.probabilities.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.probabilities.values().sum()
    }

    /// Sum of probabilities whose outcome string starts with the prefix.
    pub fn marginal_prefix(&self, prefix: &str) -> f64 {
        self.probabilities
            .iter()
            .filter(|(k, _)| k.as_str() == prefix || k.starts_with(&format!("{prefix},")))
            .map(|(_, v)| v)
            .sum()
    }

    /// Total variation distance against another distribution over the union
    /// of outcome strings.
    pub fn total_variation(&self, other: &OutcomeDistribution) -> f64 {
        let mut keys: std::collections::BTreeSet<&str> =
            self.probabilities.keys().map(|s| s.as_str()).collect();
        keys.extend(other.probabilities.keys().map(|s| s.as_str()));
        0.5 * keys
            .into_iter()
            .map(|k| (self.probability(k) - other.probability(k)).abs())
            .sum::<f64>()
    }

    fn add(&mut self, outcome: String, p: f64) {
        *self.probabilities.entry(outcome).or_insert(0.0) += p;
    }
}

fn born_raw(state: &CMatrix, element: &PovmElement) -> f64 {
    (state * element.matrix()).trace().re.max(0.0)
}

fn update_raw(state: &CMatrix, element: &PovmElement, p: f64) -> Result<CMatrix> {
    let root = linalg::psd_sqrt(element.matrix(), linalg::PSD_CLAMP_TOL)?;
    Ok((&(&root * state) * &root).scale_re(1.0 / p).hermitized())
}

fn enumerate_recurse(
    steps: &[ScheduleStep],
    state: &CMatrix,
    cumulative: f64,
    labels: &mut Vec<String>,
    out: &mut OutcomeDistribution,
) -> Result<()> {
    let Some((step, rest)) = steps.split_first() else {
        out.add(labels.join(","), cumulative);
        return Ok(());
    };
    let current = match &step.evolution_before {
        Some(ev) => ev.evolve(state),
        None => state.clone(),
    };
    for element in step.povm.elements() {
        let p = born_raw(&current, element);
        labels.push(element.name().to_string());
        if p < BRANCH_CUTOFF {
            out.add(labels.join(","), 0.0);
        } else {
            let next = update_raw(&current, element, p)?;
            enumerate_recurse(rest, &next, cumulative * p, labels, out)?;
        }
        labels.pop();
    }
    Ok(())
}

/// Exhaustive outcome distribution by recursive application of the Born rule
/// and the square-root state update, branch by branch.
pub fn enumerate(
    rho0: &DensityOperator,
    schedule: &MeasurementSchedule,
) -> Result<OutcomeDistribution> {
    if rho0.dim() != schedule.dim() {
        return Err(Error::DimensionMismatch {
            left: rho0.dim(),
            right: schedule.dim(),
        });
    }
    let mut out = OutcomeDistribution::default();
    let mut labels = Vec::new();
    enumerate_recurse(schedule.steps(), rho0.matrix(), 1.0, &mut labels, &mut out)?;
    Ok(out)
}

/// Empirical distribution from n independent sequential trajectories.
/// Trajectory k draws from stream k of the ChaCha8 generator keyed by
/// `seed`, so results are reproducible and shardable.
pub fn sample(
    rho0: &DensityOperator,
    schedule: &MeasurementSchedule,
    n: usize,
    seed: u64,
) -> Result<OutcomeDistribution> {
    if n == 0 {
        return Err(Error::InvalidWeights {
            detail: "sample count must be at least 1".into(),
        });
    }
    if rho0.dim() != schedule.dim() {
        return Err(Error::DimensionMismatch {
            left: rho0.dim(),
            right: schedule.dim(),
        });
    }
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for k in 0..n {
        let mut rng = random::rng_for_shard(seed, k as u64);
        let mut state = rho0.matrix().clone();
        let mut labels = Vec::with_capacity(schedule.steps().len());
        for step in schedule.steps() {
            if let Some(ev) = &step.evolution_before {
                state = ev.evolve(&state);
            }
            let probs: Vec<f64> = step
                .povm
                .elements()
                .iter()
                .map(|e| born_raw(&state, e))
                .collect();
            let total: f64 = probs.iter().sum();
            let draw = random::uniform(&mut rng) * total;
            let mut acc = 0.0;
            let mut chosen = step.povm.len() - 1;
            for (i, p) in probs.iter().enumerate() {
                acc += p;
                if draw < acc {
                    chosen = i;
                    break;
                }
            }
            let element = step.povm.get(chosen)?;
            labels.push(element.name().to_string());
            state = update_raw(&state, element, probs[chosen].max(BRANCH_CUTOFF))?;
        }
        *counts.entry(labels.join(",")).or_insert(0) += 1;
    }
    let mut out = OutcomeDistribution::default();
    for (k, v) in counts {
        out.add(k, v as f64 / n as f64);
    }
    Ok(out)
}

/// Lifted product POVM sets for an EWF experiment: friend pairs labelled
/// "c.d" and super pairs labelled "a.b".
pub fn ewf_product_sets(exp: &EwfExperiment) -> Result<(PovmSet, PovmSet)> {
    let build = |set0: &PovmSet, set1: &PovmSet| -> Result<PovmSet> {
        let mut elements = Vec::new();
        let mut index = 0;
        for e0 in set0.elements() {
            for e1 in set1.elements() {
                let m0 = lift(e0.matrix(), 0, &exp.space)?;
                let m1 = lift(e1.matrix(), 1, &exp.space)?;
                elements.push(PovmElement::new(
                    (&m0 * &m1).hermitized(),
                    format!("{}.{}", e0.name(), e1.name()),
                    index,
                )?);
                index += 1;
            }
        }
        PovmSet::new(elements, None)
    };
    Ok((
        build(&exp.friend_c, &exp.friend_d)?,
        build(&exp.super_a, &exp.super_b)?,
    ))
}

/// Enumerates an EWF experiment as a two-step schedule over the lifted
/// product sets; outcome strings read "c.d,a.b".
pub fn enumerate_ewf(exp: &EwfExperiment) -> Result<OutcomeDistribution> {
    let (first, second) = ewf_product_sets(exp)?;
    let schedule = MeasurementSchedule::two_step(first, exp.evolution.clone(), second)?;
    enumerate(&exp.initial, &schedule)
}

/// Finite joint table p(a_i, b_j) of non-negative reals summing to 1.
#[derive(Debug, Clone)]
pub struct ClassicalJoint {
    table: Vec<Vec<f64>>,
}

impl ClassicalJoint {
    pub fn new(table: Vec<Vec<f64>>) -> Result<Self> {
        let cols = table.first().map_or(0, |r| r.len());
        if cols == 0 {
            return Err(Error::InvalidWeights {
                detail: "joint table must be non-empty".into(),
            });
        }
        let mut total = 0.0;
        for row in &table {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    left: cols,
                    right: row.len(),
                });
            }
            for &v in row {
                if v < -1e-12 {
                    return Err(Error::InvalidWeights {
                        detail: format!("negative cell {v:.3e}"),
                    });
                }
                total += v;
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidWeights {
                detail: format!("table mass {total:.12} is not 1"),
            });
        }
        Ok(Self { table })
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.table
    }

    pub fn row_marginal(&self, i: usize) -> f64 {
        self.table[i].iter().sum()
    }

    pub fn col_marginal(&self, j: usize) -> f64 {
        self.table.iter().map(|r| r[j]).sum()
    }
}

/// Classical total-law verification on a joint table.
#[derive(Debug, Clone)]
pub struct ClassicalTotalLawReport {
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// Rows with zero marginal mass: conditioning is skipped there.
    pub skipped_rows: Vec<usize>,
}

/// Verifies p(b_j) = sum_i p(b_j | a_i) p(a_i) cell by cell; the classical
/// baseline that always passes, conditioning route included.
pub fn classical_total_law(joint: &ClassicalJoint) -> ClassicalTotalLawReport {
    let cols = joint.table()[0].len();
    let mut skipped = Vec::new();
    let row_marginals: Vec<f64> = (0..joint.table().len())
        .map(|i| joint.row_marginal(i))
        .collect();
    for (i, &m) in row_marginals.iter().enumerate() {
        if m <= 0.0 {
            skipped.push(i);
        }
    }
    let mut residuals = Vec::with_capacity(cols);
    for j in 0..cols {
        let direct = joint.col_marginal(j);
        let mut via_conditionals = 0.0;
        for (row, &mass) in joint.table().iter().zip(&row_marginals) {
            if mass <= 0.0 {
                continue;
            }
            let conditional = row[j] / mass;
            via_conditionals += conditional * mass;
        }
        residuals.push((direct - via_conditionals).abs());
    }
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    ClassicalTotalLawReport {
        residuals,
        max_residual,
        skipped_rows: skipped,
    }
}
