//! Stable facts: a system decohered into a pointer basis carries a diagonal
//! density matrix, which is exactly the C2' configuration, so the total law
//! holds for any probe. The undecohered control shows the law failing for
//! the same pointer family.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::measurement::{DensityOperator, PovmElement, PovmSet, PureState, VALIDATION_TOL};
use crate::twotime::{total_law_residual, Evolution, TotalLawBreakdown, TwoTimeExperiment};

#[derive(Debug, Clone)]
pub struct StableFactsScenario {
    pub weights: Vec<f64>,
    /// Orthonormal pointer states |Fa_i>, one per weight, spanning the space.
    pub pointer_basis: Vec<CVector>,
    pub probe: PovmElement,
}

pub fn build_stable_facts(
    weights: Vec<f64>,
    pointer_basis: Vec<CVector>,
    probe: PovmElement,
) -> Result<StableFactsScenario> {
    if weights.len() != pointer_basis.len() {
        return Err(Error::DimensionMismatch {
            left: weights.len(),
            right: pointer_basis.len(),
        });
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|&w| w < -1e-12) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidWeights {
            detail: format!(
                "sum {total:.12}, min {:?}",
                weights.iter().cloned().reduce(f64::min)
            ),
        });
    }
    let mut gram_residual = 0.0f64;
    for (i, u) in pointer_basis.iter().enumerate() {
        for (j, v) in pointer_basis.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            gram_residual += (u.inner(v) - num_complex::Complex64::new(want, 0.0)).norm_sqr();
        }
    }
    let gram_residual = gram_residual.sqrt();
    if gram_residual > 1e-10 {
        return Err(Error::NotOrthonormal {
            residual: gram_residual,
        });
    }
    if probe.dim() != pointer_basis[0].dim() {
        return Err(Error::DimensionMismatch {
            left: probe.dim(),
            right: pointer_basis[0].dim(),
        });
    }
    Ok(StableFactsScenario {
        weights,
        pointer_basis,
        probe,
    })
}

fn pointer_set(basis: &[CVector]) -> Result<PovmSet> {
    let els = basis
        .iter()
        .enumerate()
        .map(|(i, v)| PovmElement::new(v.projector(), i.to_string(), i))
        .collect::<Result<Vec<_>>>()?;
    PovmSet::new(els, Some("pointer".into()))
}

fn probe_set(probe: &PovmElement) -> Result<PovmSet> {
    let complement = &CMatrix::identity(probe.dim()) - probe.matrix();
    let els = vec![
        PovmElement::new(probe.matrix().clone(), probe.name().to_string(), 0)?,
        PovmElement::new(complement.hermitized(), "complement", 1)?,
    ];
    PovmSet::new(els, Some("probe".into()))
}

impl StableFactsScenario {
    /// rho = sum_i lambda_i |Fa_i><Fa_i| probed by {B, I - B} with no
    /// evolution.
    pub fn experiment(&self) -> Result<TwoTimeExperiment> {
        let dim = self.pointer_basis[0].dim();
        let mut rho = CMatrix::zeros(dim, dim);
        for (w, v) in self.weights.iter().zip(&self.pointer_basis) {
            rho = &rho + &v.projector().scale_re(*w);
        }
        let rho = DensityOperator::new(rho.hermitized(), "F", vec![dim], VALIDATION_TOL)?;
        TwoTimeExperiment::new(
            rho,
            pointer_set(&self.pointer_basis)?,
            Evolution::identity(dim, 0.0, 1.0),
            probe_set(&self.probe)?,
            0.5,
            2.0,
        )
    }
}

/// Total-law breakdown of the decohered configuration; the residual is the
/// stability defect and vanishes by C2'.
pub fn stable_facts_residual(scenario: &StableFactsScenario) -> Result<TotalLawBreakdown> {
    total_law_residual(&scenario.experiment()?, 0)
}

/// Control: the same pointer family and probe applied to an undecohered pure
/// state instead of the pointer mixture.
pub fn undecohered_control_residual(
    state: &PureState,
    pointer_basis: &[CVector],
    probe: &PovmElement,
) -> Result<TotalLawBreakdown> {
    let exp = TwoTimeExperiment::new(
        state.to_density("F"),
        pointer_set(pointer_basis)?,
        Evolution::identity(state.dim(), 0.0, 1.0),
        probe_set(probe)?,
        0.5,
        2.0,
    )?;
    total_law_residual(&exp, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use num_complex::Complex64;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn z_basis() -> Vec<CVector> {
        vec![CVector::basis_state(2, 0), CVector::basis_state(2, 1)]
    }

    fn plus_probe() -> PovmElement {
        let plus = CVector::new(vec![re(1.0), re(1.0)]).normalized();
        PovmElement::new(plus.projector(), "+", 0).unwrap()
    }

    #[test]
    fn decohered_mixture_is_stable_for_any_probe() {
        let mut rng = random::rng_from_seed(19);
        for _ in 0..20 {
            let w0 = random::uniform(&mut rng);
            let sc = build_stable_facts(vec![w0, 1.0 - w0], z_basis(), plus_probe()).unwrap();
            let b = stable_facts_residual(&sc).unwrap();
            assert!(b.residual <= 1e-10, "residual {}", b.residual);
        }
    }

    #[test]
    fn random_probe_still_stable() {
        let mut rng = random::rng_from_seed(21);
        let probe_m = random::random_povm(&mut rng, 2, 2).remove(0);
        let probe = PovmElement::new(probe_m, "p", 0).unwrap();
        let sc = build_stable_facts(vec![0.3, 0.7], z_basis(), probe).unwrap();
        assert!(stable_facts_residual(&sc).unwrap().residual <= 1e-10);
    }

    #[test]
    fn undecohered_plus_state_fails_by_half() {
        let plus =
            PureState::new(CVector::new(vec![re(1.0), re(1.0)]).normalized(), vec![2]).unwrap();
        let b = undecohered_control_residual(&plus, &z_basis(), &plus_probe()).unwrap();
        assert!((b.residual - 0.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_weight_vector_is_stable() {
        let sc = build_stable_facts(vec![1.0, 0.0], z_basis(), plus_probe()).unwrap();
        let b = stable_facts_residual(&sc).unwrap();
        assert!(b.residual <= 1e-12);
    }

    #[test]
    fn weights_validated() {
        assert!(matches!(
            build_stable_facts(vec![0.7, 0.7], z_basis(), plus_probe()),
            Err(Error::InvalidWeights { .. })
        ));
    }

    #[test]
    fn basis_orthonormality_validated() {
        let skewed = vec![
            CVector::basis_state(2, 0),
            CVector::new(vec![re(1.0), re(1.0)]).normalized(),
        ];
        assert!(matches!(
            build_stable_facts(vec![0.5, 0.5], skewed, plus_probe()),
            Err(Error::NotOrthonormal { .. })
        ));
    }
}
