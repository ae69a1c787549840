//! The Bong operator algebra: each lab is friend (x) spin (friend is the
//! leftmost factor), the friend's measurement is modeled by an entangler
//! unitary, and the super-observer either asks the friend (setting 1) or
//! undoes the entanglement and measures the spin (settings 2, 3). The
//! commutator report certifies that the super-observer and friend operators
//! never commute within a lab while cross-lab operators commute exactly.
//!
//! The default entangler copies the spin onto the friend's pointer in a
//! tilted spin basis. A plain computational-basis copy would conjugate the
//! refined friend projector back to a spin-local operator, which commutes
//! with the setting-1 operator, so the tilt is what keeps every within-lab
//! commutator bounded away from zero.

use super::re;
use crate::composite::{lift, CompositeSpace};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::measurement::{DensityOperator, VALIDATION_TOL};
use num_complex::Complex64;

const LAB_DIM: usize = 4;

/// Bloch angle of the default copy basis, chosen so the copy direction is
/// distinct from Z, X, and the (X+Z)/sqrt2 axis used by the default E^3.
pub const DEFAULT_TILT: f64 = 3.0 * std::f64::consts::PI / 8.0;

/// How the friend's pre-measurement unitary is constructed.
#[derive(Debug, Clone)]
pub enum Entangler {
    /// Copy the spin onto the pointer in the basis tilted by the given Bloch
    /// angle from Z toward X.
    TiltedCopy { tilt: f64 },
    /// Copy in the computational basis (the self-inverse permutation
    /// |r, s> <-> |s, s>); degenerate for the refined setting-1 commutator.
    PlainCopy,
    /// Caller-supplied 4x4 unitary on friend (x) spin.
    Custom(CMatrix),
}

impl Default for Entangler {
    fn default() -> Self {
        Entangler::TiltedCopy { tilt: DEFAULT_TILT }
    }
}

fn plain_copy() -> CMatrix {
    // |0,1> <-> |1,1> under index 2f + s
    let mut m = CMatrix::zeros(LAB_DIM, LAB_DIM);
    m.set(0, 0, re(1.0));
    m.set(3, 1, re(1.0));
    m.set(2, 2, re(1.0));
    m.set(1, 3, re(1.0));
    m
}

fn y_rotation(angle: f64) -> CMatrix {
    let (s, c) = (angle / 2.0).sin_cos();
    CMatrix::from_rows(vec![vec![re(c), re(-s)], vec![re(s), re(c)]]).expect("2x2 rotation")
}

impl Entangler {
    pub fn build(&self) -> Result<CMatrix> {
        let u = match self {
            Entangler::TiltedCopy { tilt } => {
                let r = y_rotation(*tilt);
                let spin_rot = linalg::tensor(&CMatrix::identity(2), &r)?;
                let spin_rot_back = linalg::tensor(&CMatrix::identity(2), &r.adjoint())?;
                &(&spin_rot * &plain_copy()) * &spin_rot_back
            }
            Entangler::PlainCopy => plain_copy(),
            Entangler::Custom(m) => m.clone(),
        };
        let resid = u.unitarity_residual();
        if resid > 1e-9 {
            return Err(Error::InvalidEntangler { residual: resid });
        }
        Ok(u)
    }
}

/// Default spin elements: E^2 projects along X, E^3 along (X+Z)/sqrt2.
pub fn default_e_choices() -> [CMatrix; 2] {
    let plus = CVector::new(vec![re(1.0), re(1.0)]).normalized();
    let x_plus = plus.projector();
    let m = CMatrix::from_rows(vec![
        vec![
            re(1.0 / std::f64::consts::SQRT_2),
            re(1.0 / std::f64::consts::SQRT_2),
        ],
        vec![
            re(1.0 / std::f64::consts::SQRT_2),
            re(-1.0 / std::f64::consts::SQRT_2),
        ],
    ])
    .expect("2x2");
    let eig = linalg::hermitian_eig(&m).expect("Hermitian");
    let xz_plus = eig.eigenvector(0).projector();
    [x_plus, xz_plus]
}

/// Operator families for one Bong lab and the shared initial state.
#[derive(Debug, Clone)]
pub struct BongScenario {
    pub space: CompositeSpace,
    /// Friend pre-measurement unitary, identical in both labs.
    pub entangler: CMatrix,
    /// Spin elements behind settings 2 and 3.
    pub e_choices: [CMatrix; 2],
    /// The friend outcome c the setting-1 operator asks about.
    pub pointer_outcome: usize,
    /// A(1), A(2), A(3) on the 4-dimensional lab.
    pub a: [CMatrix; 3],
    /// Friend operator as the bare entangler unitary.
    pub c_unitary: CMatrix,
    /// Refined friend operator U^dag (I (x) |c><c|) U; a projector.
    pub c_refined: CMatrix,
    /// Spin-entangled initial state with both friends ready, on lab1 (x) lab2.
    pub initial: DensityOperator,
    pub theta: f64,
}

/// Builds the scenario; the two labs are mirror images, so one operator
/// family serves both.
pub fn build_bong(
    entangler: Entangler,
    e_choices: [CMatrix; 2],
    theta: f64,
) -> Result<BongScenario> {
    for e in &e_choices {
        let herm = e.hermiticity_residual();
        if herm > VALIDATION_TOL {
            return Err(Error::NonHermitian { residual: herm });
        }
        let eig = linalg::hermitian_eig(e)?;
        if eig.min_eigenvalue() < -VALIDATION_TOL || eig.max_eigenvalue() > 1.0 + VALIDATION_TOL {
            return Err(Error::ElementOutOfRange {
                value: eig.min_eigenvalue(),
            });
        }
    }
    let u = entangler.build()?;
    let pointer_outcome = 0;

    let pointer = CVector::basis_state(2, pointer_outcome).projector();
    let a1 = linalg::tensor(&pointer, &CMatrix::identity(2))?;
    let conj = |e: &CMatrix| -> Result<CMatrix> {
        let lifted = linalg::tensor(&CMatrix::identity(2), e)?;
        Ok(&(&u * &lifted) * &u.adjoint())
    };
    let a2 = conj(&e_choices[0])?;
    let a3 = conj(&e_choices[1])?;

    let spin_pointer = linalg::tensor(
        &CMatrix::identity(2),
        &CVector::basis_state(2, pointer_outcome).projector(),
    )?;
    let c_refined = &(&u.adjoint() * &spin_pointer) * &u;

    // spins in the theta-entangled state, friends ready in |0>
    let s = (theta / 2.0).sin() / std::f64::consts::SQRT_2;
    let c = (theta / 2.0).cos() / std::f64::consts::SQRT_2;
    let mut amplitudes = CVector::zeros(LAB_DIM * LAB_DIM);
    // lab index = 2f + s with f = 0, so a lab holding spin s sits at index s
    let spins = |s1: usize, s2: usize| s1 * LAB_DIM + s2;
    amplitudes.set(spins(0, 0), re(-s));
    amplitudes.set(spins(1, 1), re(-s));
    amplitudes.set(spins(0, 1), re(c));
    amplitudes.set(spins(1, 0), re(-c));
    let initial = DensityOperator::new(
        amplitudes.projector(),
        "lab1xlab2",
        vec![LAB_DIM, LAB_DIM],
        VALIDATION_TOL,
    )?;

    Ok(BongScenario {
        space: CompositeSpace::new(vec![("lab1".into(), LAB_DIM), ("lab2".into(), LAB_DIM)])?,
        entangler: u.clone(),
        e_choices,
        pointer_outcome,
        a: [a1, a2, a3],
        c_unitary: u,
        c_refined,
        initial,
        theta,
    })
}

impl BongScenario {
    pub fn default_scenario() -> Self {
        build_bong(
            Entangler::default(),
            default_e_choices(),
            std::f64::consts::FRAC_PI_2,
        )
        .expect("default Bong scenario is valid")
    }
}

#[derive(Debug, Clone)]
pub struct BongCommutatorRow {
    pub lab: &'static str,
    pub setting: usize,
    pub variant: &'static str,
    pub norm: f64,
    /// Set when the setting's operator is within tolerance of a multiple of
    /// the identity, which trivializes its commutators.
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct BongCommutatorReport {
    pub rows: Vec<BongCommutatorRow>,
    /// max over settings of ||[A(x) (x) I, I (x) B(y)]||_F; exactly zero.
    pub cross_lab_max: f64,
}

fn is_scalar_multiple_of_identity(m: &CMatrix, tol: f64) -> bool {
    let dim = m.dim() as f64;
    let mean = m.trace() / Complex64::new(dim, 0.0);
    (m - &CMatrix::identity(m.dim()).scale(mean)).frobenius_norm() <= tol
}

/// Frobenius norms of [A(x), C(x)] for x in {1, 2, 3} under both friend
/// operator variants (both labs, mirrored), plus the cross-lab certificate.
pub fn bong_commutator_report(scenario: &BongScenario) -> Result<BongCommutatorReport> {
    let mut rows = Vec::new();
    for lab in ["lab1", "lab2"] {
        for (k, a) in scenario.a.iter().enumerate() {
            let degenerate = is_scalar_multiple_of_identity(a, 1e-9);
            for (variant, c_op) in [
                ("unitary", &scenario.c_unitary),
                ("refined", &scenario.c_refined),
            ] {
                rows.push(BongCommutatorRow {
                    lab,
                    setting: k + 1,
                    variant,
                    norm: a.commutator(c_op).frobenius_norm(),
                    degenerate,
                });
            }
        }
    }
    let mut cross = 0.0f64;
    for a in &scenario.a {
        for b in &scenario.a {
            let lifted_a = lift(a, 0, &scenario.space)?;
            let lifted_b = lift(b, 1, &scenario.space)?;
            cross = cross.max(lifted_a.commutator(&lifted_b).frobenius_norm());
        }
    }
    Ok(BongCommutatorReport {
        rows,
        cross_lab_max: cross,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scenario_is_valid() {
        let sc = BongScenario::default_scenario();
        assert!(sc.entangler.unitarity_residual() < 1e-12);
        assert!((sc.initial.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plain_copy_entangler_builds() {
        let sc = build_bong(
            Entangler::PlainCopy,
            default_e_choices(),
            std::f64::consts::FRAC_PI_2,
        )
        .unwrap();
        assert!(sc.entangler.unitarity_residual() < 1e-12);
    }

    #[test]
    fn custom_entangler_must_be_unitary() {
        let not_unitary = CMatrix::identity(4).scale_re(2.0);
        assert!(matches!(
            build_bong(Entangler::Custom(not_unitary), default_e_choices(), 1.0),
            Err(Error::InvalidEntangler { .. })
        ));
    }

    #[test]
    fn setting_one_is_lifted_pointer_projector() {
        let sc = BongScenario::default_scenario();
        assert!(sc.a[0].approx_eq(&CMatrix::from_real_diag(&[1.0, 1.0, 0.0, 0.0]), 1e-12));
    }

    #[test]
    fn refined_friend_operator_is_projector() {
        let sc = BongScenario::default_scenario();
        let c = &sc.c_refined;
        assert!((&(c * c) - c).frobenius_norm() < 1e-12);
    }

    #[test]
    fn default_commutators_all_bounded_away_from_zero() {
        let sc = BongScenario::default_scenario();
        let report = bong_commutator_report(&sc).unwrap();
        assert_eq!(report.rows.len(), 12);
        for row in &report.rows {
            assert!(!row.degenerate);
            assert!(
                row.norm > 0.1,
                "lab {} setting {} variant {}: {}",
                row.lab,
                row.setting,
                row.variant,
                row.norm
            );
        }
        assert_eq!(report.cross_lab_max, 0.0);
    }

    #[test]
    fn plain_copy_kills_refined_setting_one() {
        let sc = build_bong(
            Entangler::PlainCopy,
            default_e_choices(),
            std::f64::consts::FRAC_PI_2,
        )
        .unwrap();
        let report = bong_commutator_report(&sc).unwrap();
        let row = report
            .rows
            .iter()
            .find(|r| r.lab == "lab1" && r.setting == 1 && r.variant == "refined")
            .unwrap();
        assert!(row.norm < 1e-12);
    }

    #[test]
    fn degenerate_identity_choice_is_flagged() {
        let sc = build_bong(
            Entangler::default(),
            [CMatrix::identity(2), default_e_choices()[1].clone()],
            std::f64::consts::FRAC_PI_2,
        )
        .unwrap();
        let report = bong_commutator_report(&sc).unwrap();
        let row = report
            .rows
            .iter()
            .find(|r| r.lab == "lab1" && r.setting == 2 && r.variant == "refined")
            .unwrap();
        assert!(row.degenerate);
        assert!(row.norm < 1e-12);
    }
}
