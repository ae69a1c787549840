//! Marginal-consistency check for two-time joint assignments: with
//! q(f1, f2) = p(f2 at t2 | f1 at t1) p(f1), the f1 marginals always come
//! back consistent, while the f2 marginals generically do not when the two
//! POVM sets fail to commute.

use crate::error::{Error, Result};
use crate::linalg;
use crate::measurement::{real_trace, DensityOperator, PovmSet, COMPLETENESS_TOL};
use crate::twotime::Evolution;

#[derive(Debug, Clone)]
pub struct MarginalCheckReport {
    pub first_labels: Vec<String>,
    pub second_labels: Vec<String>,
    /// p(f1) = Tr(rho A_{f1}).
    pub first_marginals: Vec<f64>,
    /// p(f2) = Tr(B_{f2} U rho U^dag).
    pub second_marginals: Vec<f64>,
    /// q(f1, f2) = Tr(B U sqrt(A) rho sqrt(A) U^dag): the two-time joint,
    /// taken as the raw trace so zero-mass rows need no division.
    pub joint: Vec<Vec<f64>>,
    /// |sum_f2 q(f1, f2) - p(f1)|; bounded by completeness of the second set.
    pub first_residuals: Vec<f64>,
    /// |sum_f1 q(f1, f2) - p(f2)|; the total-law defect per second outcome.
    pub second_residuals: Vec<f64>,
}

impl MarginalCheckReport {
    pub fn max_first_residual(&self) -> f64 {
        self.first_residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_second_residual(&self) -> f64 {
        self.second_residuals.iter().copied().fold(0.0, f64::max)
    }
}

pub fn guerin_marginal_check(
    rho: &DensityOperator,
    first: &PovmSet,
    second: &PovmSet,
    evolution: &Evolution,
) -> Result<MarginalCheckReport> {
    for set in [first, second] {
        let resid = set.completeness_residual();
        if resid > COMPLETENESS_TOL {
            return Err(Error::IncompletePovm { residual: resid });
        }
    }
    let u = evolution.unitary();
    let evolved_state = evolution.evolve(rho.matrix());

    let first_marginals: Vec<f64> = first
        .elements()
        .iter()
        .map(|a| real_trace((rho.matrix() * a.matrix()).trace()))
        .collect::<Result<Vec<_>>>()?;
    let second_marginals: Vec<f64> = second
        .elements()
        .iter()
        .map(|b| real_trace((b.matrix() * &evolved_state).trace()))
        .collect::<Result<Vec<_>>>()?;

    let mut joint = Vec::with_capacity(first.len());
    for a in first.elements() {
        let root = linalg::psd_sqrt(a.matrix(), linalg::PSD_CLAMP_TOL)?;
        let branch = &(&root * rho.matrix()) * &root;
        let evolved = &(u * &branch) * &u.adjoint();
        let row = second
            .elements()
            .iter()
            .map(|b| real_trace((b.matrix() * &evolved).trace()))
            .collect::<Result<Vec<_>>>()?;
        joint.push(row);
    }

    let first_residuals: Vec<f64> = joint
        .iter()
        .zip(&first_marginals)
        .map(|(row, p)| (row.iter().sum::<f64>() - p).abs())
        .collect();
    let second_residuals: Vec<f64> = (0..second.len())
        .map(|j| {
            let mass: f64 = joint.iter().map(|row| row[j]).sum();
            (mass - second_marginals[j]).abs()
        })
        .collect();

    Ok(MarginalCheckReport {
        first_labels: first
            .elements()
            .iter()
            .map(|e| e.name().to_string())
            .collect(),
        second_labels: second
            .elements()
            .iter()
            .map(|e| e.name().to_string())
            .collect(),
        first_marginals,
        second_marginals,
        joint,
        first_residuals,
        second_residuals,
    })
}
