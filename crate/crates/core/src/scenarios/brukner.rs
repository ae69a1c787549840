//! The Brukner extended Wigner's friend instance: a theta-parameterized
//! entangled state of two labs, two projective measurement choices per
//! super-observer, and the computations showing that each single observer
//! satisfies the total law while the composite law fails for generic theta.
//!
//! Each lab carries spin (x) pointer; after the friend's measurement the
//! state only populates the correlated two-dimensional span of |00> and
//! |11>, so the measurement families act on that span and a complement
//! projector is appended as a discard outcome to keep each set complete on
//! the full four-dimensional lab factor.

use super::re;
use crate::composite::{
    check_corollary2, ewf_total_law_residual, lift, CompositeSpace, EwfExperiment,
};
use crate::error::Result;
use crate::linalg::{CMatrix, CVector};
use crate::measurement::{PovmElement, PovmSet, PureState};
use crate::twotime::{ConditionId, Evolution, TwoTimeExperiment, CONDITION_TOL};

const LAB_DIM: usize = 4;
const UP: usize = 0; // |00>: spin up, pointer up
const DOWN: usize = 3; // |11>: spin down, pointer down

#[derive(Debug, Clone)]
pub struct BruknerScenario {
    pub theta: f64,
    pub space: CompositeSpace,
    /// |Psi(theta)> on the 4 (x) 4 lab pair.
    pub state: PureState,
    /// First measurement choice on L1: pointer projectors plus discard guard.
    pub a1: PovmSet,
    /// Second measurement choice on L1: chi projectors plus discard guard.
    pub a2: PovmSet,
    pub b1: PovmSet,
    pub b2: PovmSet,
}

fn lab_basis(index: usize) -> CVector {
    CVector::basis_state(LAB_DIM, index)
}

fn chi(sign_index: usize) -> CVector {
    let sign = if sign_index.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    };
    let mut v = CVector::zeros(LAB_DIM);
    v.set(UP, re(sign / std::f64::consts::SQRT_2));
    v.set(DOWN, re(1.0 / std::f64::consts::SQRT_2));
    v
}

fn guard() -> CMatrix {
    let full = CMatrix::identity(LAB_DIM);
    let correlated = &lab_basis(UP).projector() + &lab_basis(DOWN).projector();
    &full - &correlated
}

fn family(projs: [CMatrix; 2], setting: &str) -> PovmSet {
    let els = vec![
        PovmElement::new(projs[0].clone(), "0", 0).expect("projector is a valid element"),
        PovmElement::new(projs[1].clone(), "1", 1).expect("projector is a valid element"),
        PovmElement::new(guard(), "discard", 2).expect("guard is a valid element"),
    ];
    PovmSet::new(els, Some(setting.into())).expect("family is complete by construction")
}

/// Builds the scenario with the wave-function amplitudes
/// -(1/sqrt2) sin(theta/2) on |00,00> and |11,11>,
/// +(1/sqrt2) cos(theta/2) on |00,11>, -(1/sqrt2) cos(theta/2) on |11,00>.
pub fn build_brukner(theta: f64) -> BruknerScenario {
    let s = (theta / 2.0).sin() / std::f64::consts::SQRT_2;
    let c = (theta / 2.0).cos() / std::f64::consts::SQRT_2;
    let mut amplitudes = CVector::zeros(LAB_DIM * LAB_DIM);
    amplitudes.set(UP * LAB_DIM + UP, re(-s));
    amplitudes.set(DOWN * LAB_DIM + DOWN, re(-s));
    amplitudes.set(UP * LAB_DIM + DOWN, re(c));
    amplitudes.set(DOWN * LAB_DIM + UP, re(-c));
    let state = PureState::new(amplitudes, vec![LAB_DIM, LAB_DIM])
        .expect("Brukner amplitudes are normalized for every theta");

    let a1 = family(
        [lab_basis(UP).projector(), lab_basis(DOWN).projector()],
        "A1",
    );
    let a2 = family([chi(0).projector(), chi(1).projector()], "A2");
    let b1 = family(
        [lab_basis(UP).projector(), lab_basis(DOWN).projector()],
        "B1",
    );
    let b2 = family([chi(0).projector(), chi(1).projector()], "B2");

    BruknerScenario {
        theta,
        space: CompositeSpace::pair(LAB_DIM, LAB_DIM),
        state,
        a1,
        a2,
        b1,
        b2,
    }
}

impl BruknerScenario {
    /// EWF view: friends (first stage) measure A1/B1, super-observers A2/B2,
    /// with stationary evolution.
    pub fn to_ewf(&self) -> Result<EwfExperiment> {
        EwfExperiment::new(
            self.space.clone(),
            self.state.to_density("L1xL2"),
            self.a1.clone(),
            self.b1.clone(),
            self.a2.clone(),
            self.b2.clone(),
            Evolution::identity(self.space.total_dim(), 0.0, 1.0),
        )
    }

    /// Alice-only view on the full space: lifted A1 then lifted A2, U = I.
    pub fn single_observer_experiment(&self) -> Result<TwoTimeExperiment> {
        let lift_set = |set: &PovmSet| -> Result<PovmSet> {
            let els = set
                .elements()
                .iter()
                .map(|e| {
                    PovmElement::new(
                        lift(e.matrix(), 0, &self.space)?,
                        e.name().to_string(),
                        e.index(),
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            PovmSet::new(els, set.setting_label().map(|s| s.to_string()))
        };
        TwoTimeExperiment::new(
            self.state.to_density("L1xL2"),
            lift_set(&self.a1)?,
            Evolution::identity(self.space.total_dim(), 0.0, 1.0),
            lift_set(&self.a2)?,
            0.5,
            2.0,
        )
    }
}

/// [A1_{a1}, A2_{a2}] on the L1 factor; proportional to
/// |00><11| - |11><00| with sign (-1)^(a1+a2) and coefficient 1/2.
pub fn brukner_commutator(scenario: &BruknerScenario, a1: usize, a2: usize) -> CMatrix {
    let first = scenario.a1.elements()[a1].matrix();
    let second = scenario.a2.elements()[a2].matrix();
    first.commutator(second)
}

/// The Appendix-D quantities for the outcome pair (a2, b2) = (0, 0).
#[derive(Debug, Clone)]
pub struct AppendixDReport {
    pub theta: f64,
    /// sum over first-stage outcomes of <Psi| A1 B1 A2 B2 A1 B1 |Psi>;
    /// equals 1/4 independent of theta.
    pub rhs_sum: f64,
    /// <Psi| A2 B2 |Psi> = (1/2) sin^2(theta/2).
    pub lhs: f64,
    pub residual: f64,
    /// |<Psi|[A1_i, A2_0] A1_i|Psi>| for i in {0, 1}; both vanish.
    pub c3prime_residuals: [f64; 2],
    /// Composite condition residual; strictly positive for every theta where
    /// the law fails.
    pub c5_residual: f64,
}

pub fn brukner_appendix_d(theta: f64) -> Result<AppendixDReport> {
    let scenario = build_brukner(theta);
    let exp = scenario.to_ewf()?;
    let breakdown = ewf_total_law_residual(&exp, 0, 0)?;

    let psi = scenario.state.vector();
    let a2_lifted = lift(scenario.a2.elements()[0].matrix(), 0, &scenario.space)?;
    let mut c3prime = [0.0f64; 2];
    for (i, slot) in c3prime.iter_mut().enumerate() {
        let a1_lifted = lift(scenario.a1.elements()[i].matrix(), 0, &scenario.space)?;
        let m = &a1_lifted.commutator(&a2_lifted) * &a1_lifted;
        *slot = m.expectation(psi).norm();
    }

    let corollary = check_corollary2(&exp, 0, 0, CONDITION_TOL)?;
    let c5 = corollary
        .entry(ConditionId::C5)
        .map(|e| e.residual)
        .unwrap_or(f64::NAN);

    Ok(AppendixDReport {
        theta,
        rhs_sum: breakdown.rhs,
        lhs: breakdown.lhs,
        residual: breakdown.residual,
        c3prime_residuals: c3prime,
        c5_residual: c5,
    })
}
