//! Constructors and verification routines for the named scenarios: the
//! Brukner extended Wigner's friend instance, the Bong operator algebra,
//! stable-facts decoherence, the Guerin marginal-consistency check, and the
//! double-slit configuration they all contrast against.

mod bong;
mod brukner;
mod guerin;
mod stable_facts;

pub use bong::{
    bong_commutator_report, build_bong, default_e_choices, BongCommutatorReport, BongCommutatorRow,
    BongScenario, Entangler, DEFAULT_TILT,
};
pub use brukner::{
    brukner_appendix_d, brukner_commutator, build_brukner, AppendixDReport, BruknerScenario,
};
pub use guerin::{guerin_marginal_check, MarginalCheckReport};
pub use stable_facts::{
    build_stable_facts, stable_facts_residual, undecohered_control_residual, StableFactsScenario,
};

use crate::error::Result;
use crate::linalg::{CMatrix, CVector};
use crate::measurement::{validate_density, PovmElement, PovmSet, VALIDATION_TOL};
use crate::twotime::{Evolution, TwoTimeExperiment};
use num_complex::Complex64;

pub(crate) fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// |i><i| on the computational basis of the given dimension.
pub fn basis_projector(dim: usize, index: usize) -> CMatrix {
    CVector::basis_state(dim, index).projector()
}

/// Qubit Z projectors {|0><0|, |1><1|}.
pub fn z_projectors() -> Vec<CMatrix> {
    vec![basis_projector(2, 0), basis_projector(2, 1)]
}

/// Qubit X projectors {|+><+|, |-><-|}.
pub fn x_projectors() -> Vec<CMatrix> {
    let plus = CVector::new(vec![re(1.0), re(1.0)]).normalized();
    let minus = CVector::new(vec![re(1.0), re(-1.0)]).normalized();
    vec![plus.projector(), minus.projector()]
}

pub(crate) fn z_set() -> PovmSet {
    let els = vec![
        PovmElement::new(basis_projector(2, 0), "0", 0).unwrap(),
        PovmElement::new(basis_projector(2, 1), "1", 1).unwrap(),
    ];
    PovmSet::new(els, Some("Z".into())).unwrap()
}

pub(crate) fn x_set() -> PovmSet {
    let projs = x_projectors();
    let els = vec![
        PovmElement::new(projs[0].clone(), "+", 0).unwrap(),
        PovmElement::new(projs[1].clone(), "-", 1).unwrap(),
    ];
    PovmSet::new(els, Some("X".into())).unwrap()
}

/// The double-slit configuration: |+> measured in Z then in X with no
/// evolution in between. Interference makes the total law fail with
/// residual exactly 1/2 at the "+" outcome.
pub fn double_slit_experiment() -> Result<TwoTimeExperiment> {
    let plus = CVector::new(vec![re(1.0), re(1.0)]).normalized();
    let rho = validate_density(plus.projector(), VALIDATION_TOL)?;
    TwoTimeExperiment::new(
        rho,
        z_set(),
        Evolution::identity(2, 0.0, 1.0),
        x_set(),
        0.5,
        2.0,
    )
}
