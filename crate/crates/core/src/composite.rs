//! Tensor-structured systems: lifting local operators into a composite
//! space, the four-operator two-time conditional for extended Wigner's
//! friend setups, the composite law of total probability, and the checkers
//! for its sufficient conditions C4 and C5.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, MAX_TOTAL_DIM};
use crate::measurement::{
    real_trace, DensityOperator, PovmSet, COMPLETENESS_TOL, P_MIN, VALIDATION_TOL,
};
use crate::twotime::{
    two_time_conditional_elements, ConditionEntry, ConditionId, ConditionReport, Evolution,
    TotalLawBreakdown,
};

/// Ordered list of labelled tensor factors.
#[derive(Debug, Clone)]
pub struct CompositeSpace {
    factors: Vec<(String, usize)>,
}

impl CompositeSpace {
    pub fn new(factors: Vec<(String, usize)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for (label, _) in &factors {
            if !seen.insert(label.clone()) {
                return Err(Error::DuplicateFactorLabel {
                    label: label.clone(),
                });
            }
        }
        let total: usize = factors.iter().map(|(_, d)| d).product();
        if total > MAX_TOTAL_DIM {
            return Err(Error::DimensionOverflow {
                dim: total,
                max: MAX_TOTAL_DIM,
            });
        }
        Ok(Self { factors })
    }

    /// Two unlabelled qubit-like factors of the given dimensions.
    pub fn pair(dim_a: usize, dim_b: usize) -> Self {
        Self::new(vec![("L1".into(), dim_a), ("L2".into(), dim_b)]).expect("pair within bounds")
    }

    pub fn total_dim(&self) -> usize {
        self.factors.iter().map(|(_, d)| d).product()
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn factor_dim(&self, slot: usize) -> Result<usize> {
        self.factors
            .get(slot)
            .map(|(_, d)| *d)
            .ok_or(Error::BadSlot {
                slot,
                count: self.factors.len(),
            })
    }

    pub fn label(&self, slot: usize) -> Result<&str> {
        self.factors
            .get(slot)
            .map(|(l, _)| l.as_str())
            .ok_or(Error::BadSlot {
                slot,
                count: self.factors.len(),
            })
    }

    pub fn slot_of(&self, label: &str) -> Option<usize> {
        self.factors.iter().position(|(l, _)| l == label)
    }

    pub fn factors(&self) -> &[(String, usize)] {
        &self.factors
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|(_, d)| *d).collect()
    }
}

/// Places a local operator at the given slot, identity on every other
/// factor; the leftmost factor is slot 0.
pub fn lift(op: &CMatrix, slot: usize, space: &CompositeSpace) -> Result<CMatrix> {
    let expected = space.factor_dim(slot)?;
    if op.rows() != expected || op.cols() != expected {
        return Err(Error::DimensionMismatch {
            left: expected,
            right: op.rows(),
        });
    }
    let mut out = CMatrix::identity(1);
    for (k, (_, d)) in space.factors().iter().enumerate() {
        let next = if k == slot {
            op.clone()
        } else {
            CMatrix::identity(*d)
        };
        out = linalg::tensor(&out, &next)?;
    }
    Ok(out)
}

/// Two-time conditional probability with local first and second elements
/// lifted into the composite space.
pub fn composite_two_time_conditional(
    rho: &DensityOperator,
    first: &CMatrix,
    slot_first: usize,
    evolution: &Evolution,
    second: &CMatrix,
    slot_second: usize,
    space: &CompositeSpace,
) -> Result<f64> {
    let lifted_first = lift(first, slot_first, space)?;
    let lifted_second = lift(second, slot_second, space)?;
    two_time_conditional_elements(
        rho.matrix(),
        &lifted_first,
        evolution.unitary(),
        &lifted_second,
    )
}

/// Extended Wigner's friend configuration: friends measure locally at t_a
/// (sets C on factor 0 and D on factor 1, combined as one lifted product),
/// super-observers measure at t_b (sets A on factor 0, B on factor 1), with
/// a factorized evolution in between.
#[derive(Debug, Clone)]
pub struct EwfExperiment {
    pub space: CompositeSpace,
    pub initial: DensityOperator,
    pub friend_c: PovmSet,
    pub friend_d: PovmSet,
    pub super_a: PovmSet,
    pub super_b: PovmSet,
    pub evolution: Evolution,
    pub settings: (Option<String>, Option<String>),
}

impl EwfExperiment {
    pub fn new(
        space: CompositeSpace,
        initial: DensityOperator,
        friend_c: PovmSet,
        friend_d: PovmSet,
        super_a: PovmSet,
        super_b: PovmSet,
        evolution: Evolution,
    ) -> Result<Self> {
        if space.num_factors() != 2 {
            return Err(Error::BadSlot {
                slot: 2,
                count: space.num_factors(),
            });
        }
        let (d0, d1) = (space.factor_dim(0)?, space.factor_dim(1)?);
        for (set, want) in [
            (&friend_c, d0),
            (&super_a, d0),
            (&friend_d, d1),
            (&super_b, d1),
        ] {
            if set.dim() != want {
                return Err(Error::DimensionMismatch {
                    left: want,
                    right: set.dim(),
                });
            }
        }
        let total = space.total_dim();
        if initial.dim() != total || evolution.dim() != total {
            return Err(Error::DimensionMismatch {
                left: total,
                right: initial.dim(),
            });
        }
        Ok(Self {
            space,
            initial,
            friend_c,
            friend_d,
            super_a,
            super_b,
            evolution,
            settings: (None, None),
        })
    }

    pub fn with_settings(mut self, x: impl Into<String>, y: impl Into<String>) -> Self {
        self.settings = (Some(x.into()), Some(y.into()));
        self
    }

    /// Lifted product of local square roots: sqrt(C (x) D) = sqrt(C) (x)
    /// sqrt(D) for PSD factors.
    fn lifted_sqrt_pair(&self, c: usize, d: usize) -> Result<CMatrix> {
        let root_c = self.friend_c.get(c)?.sqrt()?;
        let root_d = self.friend_d.get(d)?.sqrt()?;
        Ok(&lift(&root_c, 0, &self.space)? * &lift(&root_d, 1, &self.space)?)
    }

    fn lifted_pair(&self, set0: &PovmSet, i0: usize, set1: &PovmSet, i1: usize) -> Result<CMatrix> {
        let m0 = lift(set0.get(i0)?.matrix(), 0, &self.space)?;
        let m1 = lift(set1.get(i1)?.matrix(), 1, &self.space)?;
        Ok(&m0 * &m1)
    }

    /// Tr(rho C_c D_d): joint probability of the friends' outcomes.
    pub fn friend_probability(&self, c: usize, d: usize) -> Result<f64> {
        let cd = self.lifted_pair(&self.friend_c, c, &self.friend_d, d)?;
        real_trace((self.initial.matrix() * &cd).trace())
    }
}

/// p(ab at t2 | cd at t1, rho) = Tr(rho sqrt(CD) U^dag AB U sqrt(CD)) /
/// Tr(rho CD), all operators lifted.
pub fn ewf_conditional(exp: &EwfExperiment, c: usize, d: usize, a: usize, b: usize) -> Result<f64> {
    let p_cd = exp.friend_probability(c, d)?;
    if p_cd < P_MIN {
        return Err(Error::OutcomeProbabilityZero { probability: p_cd });
    }
    let root = exp.lifted_sqrt_pair(c, d)?;
    let ab = exp.lifted_pair(&exp.super_a, a, &exp.super_b, b)?;
    let u = exp.evolution.unitary();
    let conjugated = &(&u.adjoint() * &ab) * u;
    let num = real_trace((&(&(exp.initial.matrix() * &root) * &conjugated) * &root).trace())?;
    let p = num / p_cd;
    if !(-1e-10..=1.0 + 1e-10).contains(&p) {
        return Err(Error::ProbabilityOutOfRange { value: p });
    }
    Ok(p.clamp(0.0, 1.0))
}

/// lhs = Tr(rho U^dag A B U); rhs = sum over friend outcomes of
/// Tr(rho sqrt(CD) U^dag AB U sqrt(CD)).
pub fn ewf_total_law_residual(
    exp: &EwfExperiment,
    a: usize,
    b: usize,
) -> Result<TotalLawBreakdown> {
    for set in [&exp.friend_c, &exp.friend_d] {
        let resid = set.completeness_residual();
        if resid > COMPLETENESS_TOL {
            return Err(Error::IncompletePovm { residual: resid });
        }
    }
    let ab = exp.lifted_pair(&exp.super_a, a, &exp.super_b, b)?;
    let u = exp.evolution.unitary();
    let conjugated = &(&u.adjoint() * &ab) * u;
    let lhs = real_trace((exp.initial.matrix() * &conjugated).trace())?;
    let mut rhs = 0.0;
    for c in 0..exp.friend_c.len() {
        for d in 0..exp.friend_d.len() {
            let root = exp.lifted_sqrt_pair(c, d)?;
            rhs += real_trace((&(&(exp.initial.matrix() * &root) * &conjugated) * &root).trace())?;
        }
    }
    Ok(TotalLawBreakdown {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

/// True when every friend-outcome post-measurement state is unchanged by
/// the evolution within tol.
pub fn ewf_evolution_is_stationary(exp: &EwfExperiment, tol: f64) -> Result<bool> {
    for c in 0..exp.friend_c.len() {
        for d in 0..exp.friend_d.len() {
            let p = exp.friend_probability(c, d)?;
            if p < P_MIN {
                continue;
            }
            let root = exp.lifted_sqrt_pair(c, d)?;
            let post = (&(&root * exp.initial.matrix()) * &root).scale_re(1.0 / p);
            let moved = exp.evolution.evolve(&post);
            if (&moved - &post).frobenius_norm() > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Evaluates the composite sufficient conditions for the chosen
/// super-observer outcome pair: C4 (within-lab commutation) and C5 (the
/// pure-state projective identity, summed over friend outcomes with the
/// per-term values recorded).
pub fn check_corollary2(
    exp: &EwfExperiment,
    a: usize,
    b: usize,
    tol: f64,
) -> Result<ConditionReport> {
    let stationary = ewf_evolution_is_stationary(exp, tol)?;
    let mut entries = Vec::new();
    let note = || Some("evolution is not stationary on the post-measurement states".to_string());

    let a_mat = exp.super_a.get(a)?.matrix();
    let b_mat = exp.super_b.get(b)?.matrix();
    let mut c4 = 0.0f64;
    let mut c4_witness = None;
    for (i, c_el) in exp.friend_c.elements().iter().enumerate() {
        let norm = a_mat.commutator(c_el.matrix()).frobenius_norm();
        if norm > c4 {
            c4 = norm;
            c4_witness = Some(format!("[A_{a}, C_{i}]"));
        }
    }
    for (j, d_el) in exp.friend_d.elements().iter().enumerate() {
        let norm = b_mat.commutator(d_el.matrix()).frobenius_norm();
        if norm > c4 {
            c4 = norm;
            c4_witness = Some(format!("[B_{b}, D_{j}]"));
        }
    }
    entries.push(ConditionEntry {
        id: ConditionId::C4,
        applicable: stationary,
        satisfied: stationary && c4 <= tol,
        residual: c4,
        witness: if stationary {
            (c4 > tol).then_some(c4_witness).flatten()
        } else {
            note()
        },
    });

    let pure = exp.initial.is_pure(tol.max(VALIDATION_TOL));
    let projective = exp
        .friend_c
        .elements()
        .iter()
        .chain(exp.friend_d.elements())
        .all(|e| e.is_projector(tol.max(VALIDATION_TOL)));
    let c5_applicable = stationary && pure && projective;
    let (c5, witness) = if c5_applicable {
        let psi = exp.initial.top_eigenvector()?;
        let ab = exp.lifted_pair(&exp.super_a, a, &exp.super_b, b)?;
        let mut total = 0.0;
        let mut terms = Vec::new();
        for c in 0..exp.friend_c.len() {
            for d in 0..exp.friend_d.len() {
                let cd = exp.lifted_pair(&exp.friend_c, c, &exp.friend_d, d)?;
                let m = &cd.commutator(&ab) * &cd;
                let term = m.expectation(&psi).norm();
                terms.push(format!("({c},{d})={term:.3e}"));
                total += term;
            }
        }
        (
            total,
            Some(format!(
                "per-term |<Psi|[CD,AB]CD|Psi>|: {}",
                terms.join(" ")
            )),
        )
    } else if !stationary {
        (0.0, note())
    } else {
        (
            0.0,
            Some("requires a pure state and projective friend elements".to_string()),
        )
    };
    entries.push(ConditionEntry {
        id: ConditionId::C5,
        applicable: c5_applicable,
        satisfied: c5_applicable && c5 <= tol,
        residual: c5,
        witness,
    });

    Ok(ConditionReport {
        tolerance: tol,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CVector;
    use crate::measurement::validate_density;
    use crate::oracle;
    use crate::random;
    use crate::twotime;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn proj(amplitudes: &[f64]) -> CMatrix {
        CVector::new(amplitudes.iter().map(|&x| c(x, 0.0)).collect())
            .normalized()
            .projector()
    }

    fn qubit_pair() -> CompositeSpace {
        CompositeSpace::pair(2, 2)
    }

    #[test]
    fn lift_identity_is_identity() {
        let space = qubit_pair();
        let lifted = lift(&CMatrix::identity(2), 1, &space).unwrap();
        assert!(lifted.approx_eq(&CMatrix::identity(4), 0.0));
    }

    #[test]
    fn lift_respects_slot_ordering() {
        let space = qubit_pair();
        let lifted = lift(&proj(&[1.0, 0.0]), 0, &space).unwrap();
        assert!(lifted.approx_eq(&CMatrix::from_real_diag(&[1.0, 1.0, 0.0, 0.0]), 1e-15));
    }

    #[test]
    fn lift_checks_slot_and_dims() {
        let space = qubit_pair();
        assert!(matches!(
            lift(&CMatrix::identity(2), 2, &space),
            Err(Error::BadSlot { .. })
        ));
        assert!(matches!(
            lift(&CMatrix::identity(3), 0, &space),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn space_validation() {
        assert!(matches!(
            CompositeSpace::new(vec![("L".into(), 2), ("L".into(), 2)]),
            Err(Error::DuplicateFactorLabel { .. })
        ));
        assert!(matches!(
            CompositeSpace::new(vec![("A".into(), 9), ("B".into(), 9)]),
            Err(Error::DimensionOverflow { .. })
        ));
    }

    #[test]
    fn structural_locality_commutation() {
        let space = qubit_pair();
        let mut rng = random::rng_from_seed(17);
        for _ in 0..100 {
            let p = random::random_hermitian(&mut rng, 2);
            let q = random::random_hermitian(&mut rng, 2);
            let lp = lift(&p, 0, &space).unwrap();
            let lq = lift(&q, 1, &space).unwrap();
            assert_eq!(lp.commutator(&lq).frobenius_norm(), 0.0);
        }
    }

    #[test]
    fn product_state_factorizes() {
        // rho = rho1 (x) rho2, first on slot 0, second on slot 1, U = I:
        // the conditional equals Tr(rho2 Q) regardless of the first outcome.
        let space = qubit_pair();
        let mut rng = random::rng_from_seed(23);
        let rho1 = random::random_density(&mut rng, 2);
        let rho2 = random::random_density(&mut rng, 2);
        let rho = validate_density(
            linalg::tensor(&rho1, &rho2).unwrap().hermitized(),
            VALIDATION_TOL,
        )
        .unwrap();
        let p = proj(&[1.0, 0.3]);
        let q = proj(&[0.4, 1.0]);
        let ev = Evolution::identity(4, 0.0, 1.0);
        let got = composite_two_time_conditional(&rho, &p, 0, &ev, &q, 1, &space).unwrap();
        let want = real_trace((&rho2 * &q).trace()).unwrap();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn second_element_identity_gives_one() {
        let space = qubit_pair();
        let mut rng = random::rng_from_seed(29);
        let rho = validate_density(random::random_density(&mut rng, 4), VALIDATION_TOL).unwrap();
        let p = proj(&[1.0, 0.0]);
        let ev = Evolution::identity(4, 0.0, 1.0);
        let got =
            composite_two_time_conditional(&rho, &p, 0, &ev, &CMatrix::identity(2), 1, &space)
                .unwrap();
        assert!((got - 1.0).abs() < 1e-12);
    }

    #[test]
    fn same_slot_noncommuting_differs_from_naive_joint() {
        // entangled state with surviving local coherence
        let space = qubit_pair();
        let v00 = CVector::basis_state(2, 0).tensor(&CVector::basis_state(2, 0));
        let vp1 = CVector::new(vec![c(1.0, 0.0), c(1.0, 0.0)])
            .normalized()
            .tensor(&CVector::basis_state(2, 1));
        let mut chi = CVector::zeros(4);
        for i in 0..4 {
            chi.set(
                i,
                v00.get(i) * c(0.9f64.sqrt(), 0.0) + vp1.get(i) * c(0.1f64.sqrt(), 0.0),
            );
        }
        let chi = chi.normalized();
        let rho = validate_density(chi.projector(), VALIDATION_TOL).unwrap();
        let p = proj(&[1.0, 0.0]);
        let q = proj(&[1.0, 1.0]);
        let ev = Evolution::identity(4, 0.0, 1.0);
        let two_time = composite_two_time_conditional(&rho, &p, 0, &ev, &q, 0, &space).unwrap();
        let lifted_p = lift(&p, 0, &space).unwrap();
        let lifted_q = lift(&q, 0, &space).unwrap();
        let p_first = real_trace((rho.matrix() * &lifted_p).trace()).unwrap();
        let naive =
            real_trace((&(rho.matrix() * &lifted_p) * &lifted_q).trace()).unwrap() / p_first;
        assert!(
            (two_time - naive).abs() > 0.01,
            "two_time={two_time} naive={naive}"
        );
    }

    fn ewf_from_locals(
        rho: DensityOperator,
        c_set: PovmSet,
        d_set: PovmSet,
        a_set: PovmSet,
        b_set: PovmSet,
        unitary: Option<CMatrix>,
    ) -> EwfExperiment {
        let space = CompositeSpace::pair(c_set.dim(), d_set.dim());
        let total = space.total_dim();
        let ev = match unitary {
            Some(u) => Evolution::from_unitary(u, 0.0, 1.0).unwrap(),
            None => Evolution::identity(total, 0.0, 1.0),
        };
        EwfExperiment::new(space, rho, c_set, d_set, a_set, b_set, ev).unwrap()
    }

    fn z_set() -> PovmSet {
        PovmSet::from_matrices(vec![proj(&[1.0, 0.0]), proj(&[0.0, 1.0])], None).unwrap()
    }

    #[test]
    fn conditional_with_identity_supers_is_one() {
        let mut rng = random::rng_from_seed(37);
        let rho = validate_density(random::random_density(&mut rng, 4), VALIDATION_TOL).unwrap();
        let trivial = PovmSet::from_matrices(vec![CMatrix::identity(2)], None).unwrap();
        let exp = ewf_from_locals(rho, z_set(), z_set(), trivial.clone(), trivial, None);
        assert!((ewf_conditional(&exp, 0, 0, 0, 0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn brukner_quarter_conditional() {
        let sc = crate::scenarios::build_brukner(std::f64::consts::FRAC_PI_2);
        let exp = sc.to_ewf().unwrap();
        let p = ewf_conditional(&exp, 0, 0, 0, 0).unwrap();
        assert!((p - 0.25).abs() < 1e-10, "got {p}");
    }

    #[test]
    fn diagonal_family_matches_classical_chain_rule() {
        // everything diagonal: quantum conditionals must reproduce the
        // classical chain rule on the induced joint table
        let mut rng = random::rng_from_seed(41);
        let diag: Vec<f64> = random::random_probability_vector(&mut rng, 4);
        let rho = validate_density(CMatrix::from_real_diag(&diag), VALIDATION_TOL).unwrap();
        let exp = ewf_from_locals(rho, z_set(), z_set(), z_set(), z_set(), None);
        for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            for (cc, dd) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                let p_cd = exp.friend_probability(cc, dd).unwrap();
                if p_cd < 1e-9 {
                    continue;
                }
                // classical: p(ab|cd) = delta(a=c) delta(b=d) for Z-diagonal
                let expected = if a == cc && b == dd { 1.0 } else { 0.0 };
                let got = ewf_conditional(&exp, cc, dd, a, b).unwrap();
                assert!((got - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn total_law_diagonal_setup_holds() {
        let mut rng = random::rng_from_seed(43);
        let diag: Vec<f64> = random::random_probability_vector(&mut rng, 4);
        let rho = validate_density(CMatrix::from_real_diag(&diag), VALIDATION_TOL).unwrap();
        let exp = ewf_from_locals(rho, z_set(), z_set(), z_set(), z_set(), None);
        let breakdown = ewf_total_law_residual(&exp, 0, 0).unwrap();
        assert!(breakdown.residual < 1e-12);
    }

    #[test]
    fn brukner_rhs_quarter_and_generic_theta_failure() {
        let sc = crate::scenarios::build_brukner(std::f64::consts::FRAC_PI_2);
        let exp = sc.to_ewf().unwrap();
        let breakdown = ewf_total_law_residual(&exp, 0, 0).unwrap();
        assert!((breakdown.rhs - 0.25).abs() < 1e-10);

        let sc3 = crate::scenarios::build_brukner(std::f64::consts::FRAC_PI_3);
        let exp3 = sc3.to_ewf().unwrap();
        let b3 = ewf_total_law_residual(&exp3, 0, 0).unwrap();
        assert!(b3.residual > 0.01, "residual {}", b3.residual);
    }

    #[test]
    fn corollary2_diagonal_setup_satisfies_c4() {
        let mut rng = random::rng_from_seed(47);
        let diag: Vec<f64> = random::random_probability_vector(&mut rng, 4);
        let rho = validate_density(CMatrix::from_real_diag(&diag), VALIDATION_TOL).unwrap();
        let exp = ewf_from_locals(rho, z_set(), z_set(), z_set(), z_set(), None);
        let report = check_corollary2(&exp, 0, 0, twotime::CONDITION_TOL).unwrap();
        let c4 = report.entry(ConditionId::C4).unwrap();
        assert!(c4.applicable && c4.satisfied);
    }

    #[test]
    fn corollary2_brukner_fails_both() {
        let sc = crate::scenarios::build_brukner(std::f64::consts::FRAC_PI_3);
        let exp = sc.to_ewf().unwrap();
        let report = check_corollary2(&exp, 0, 0, twotime::CONDITION_TOL).unwrap();
        let c4 = report.entry(ConditionId::C4).unwrap();
        assert!(c4.applicable && !c4.satisfied && c4.residual > 0.1);
        let c5 = report.entry(ConditionId::C5).unwrap();
        assert!(c5.applicable && !c5.satisfied && c5.residual > 0.01);
    }

    #[test]
    fn sqrt_of_lifted_product_factorizes() {
        let mut rng = random::rng_from_seed(53);
        let space = qubit_pair();
        for _ in 0..10 {
            let c_m = random::random_povm(&mut rng, 2, 2).remove(0);
            let d_m = random::random_povm(&mut rng, 2, 2).remove(0);
            let root_c = linalg::psd_sqrt(&c_m, linalg::PSD_CLAMP_TOL).unwrap();
            let root_d = linalg::psd_sqrt(&d_m, linalg::PSD_CLAMP_TOL).unwrap();
            let factored = &lift(&root_c, 0, &space).unwrap() * &lift(&root_d, 1, &space).unwrap();
            let product = &lift(&c_m, 0, &space).unwrap() * &lift(&d_m, 1, &space).unwrap();
            let direct = linalg::psd_sqrt(&product.hermitized(), linalg::PSD_CLAMP_TOL).unwrap();
            assert!(factored.approx_eq(&direct, 1e-10));
        }
    }

    #[test]
    fn c4_construction_implies_total_law() {
        let mut rng = random::rng_from_seed(59);
        for _ in 0..25 {
            let basis1 = random::random_unitary(&mut rng, 2);
            let basis2 = random::random_unitary(&mut rng, 2);
            let diag_set = |rng: &mut rand_chacha::ChaCha8Rng, basis: &CMatrix| {
                let mut d0 = vec![0.0; 2];
                let mut d1 = vec![0.0; 2];
                for k in 0..2 {
                    let s = random::uniform(rng);
                    d0[k] = s;
                    d1[k] = 1.0 - s;
                }
                let m0 = (&(basis * &CMatrix::from_real_diag(&d0)) * &basis.adjoint()).hermitized();
                let m1 = (&(basis * &CMatrix::from_real_diag(&d1)) * &basis.adjoint()).hermitized();
                PovmSet::from_matrices(vec![m0, m1], None).unwrap()
            };
            let c_set = diag_set(&mut rng, &basis1);
            let a_set = diag_set(&mut rng, &basis1);
            let d_set = diag_set(&mut rng, &basis2);
            let b_set = diag_set(&mut rng, &basis2);
            let rho =
                validate_density(random::random_density(&mut rng, 4), VALIDATION_TOL).unwrap();
            let exp = ewf_from_locals(rho, c_set, d_set, a_set, b_set, None);
            for (a, b) in [(0, 0), (1, 1)] {
                let breakdown = ewf_total_law_residual(&exp, a, b).unwrap();
                assert!(
                    breakdown.residual <= 1e-9,
                    "residual {}",
                    breakdown.residual
                );
                let report = check_corollary2(&exp, a, b, twotime::CONDITION_TOL).unwrap();
                assert!(report.entry(ConditionId::C4).unwrap().satisfied);
            }
        }
    }

    #[test]
    fn c5_filtered_instances_imply_total_law() {
        // Psi inside one product block of projective friend families with a
        // rank-2 block per side; the C5 identity then holds for any supers.
        let mut rng = random::rng_from_seed(61);
        for _ in 0..25 {
            let dim = 3;
            let mk_blocks = |rng: &mut rand_chacha::ChaCha8Rng| {
                let basis = random::random_unitary(rng, dim);
                let col = |k: usize| CVector::new((0..dim).map(|r| basis.get(r, k)).collect());
                let block = (&col(0).projector() + &col(1).projector()).hermitized();
                let rest = col(2).projector();
                (
                    basis,
                    PovmSet::from_matrices(vec![block, rest], None).unwrap(),
                )
            };
            let (basis1, c_set) = mk_blocks(&mut rng);
            let (basis2, d_set) = mk_blocks(&mut rng);
            // entangled state inside block0 (x) block0
            let mut psi = CVector::zeros(dim * dim);
            for i in 0..2 {
                for j in 0..2 {
                    let amp = random::complex_gaussian(&mut rng);
                    let vi = CVector::new((0..dim).map(|r| basis1.get(r, i)).collect());
                    let vj = CVector::new((0..dim).map(|r| basis2.get(r, j)).collect());
                    let prod = vi.tensor(&vj);
                    for k in 0..dim * dim {
                        psi.set(k, psi.get(k) + prod.get(k) * amp);
                    }
                }
            }
            let psi = psi.normalized();
            let rho =
                DensityOperator::new(psi.projector(), "L1xL2", vec![dim, dim], VALIDATION_TOL)
                    .unwrap();
            let a_set =
                PovmSet::from_matrices(random::random_povm(&mut rng, dim, 2), None).unwrap();
            let b_set =
                PovmSet::from_matrices(random::random_povm(&mut rng, dim, 2), None).unwrap();
            let space = CompositeSpace::pair(dim, dim);
            let ev = Evolution::identity(dim * dim, 0.0, 1.0);
            let exp = EwfExperiment::new(space, rho, c_set, d_set, a_set, b_set, ev).unwrap();
            for (a, b) in [(0, 0), (1, 0)] {
                let report = check_corollary2(&exp, a, b, twotime::CONDITION_TOL).unwrap();
                let c5 = report.entry(ConditionId::C5).unwrap();
                assert!(
                    c5.applicable && c5.residual <= 1e-10,
                    "filter: {}",
                    c5.residual
                );
                let breakdown = ewf_total_law_residual(&exp, a, b).unwrap();
                assert!(
                    breakdown.residual <= 1e-9,
                    "residual {}",
                    breakdown.residual
                );
            }
        }
    }

    #[test]
    fn marginal_consistency_sums_to_one() {
        let mut rng = random::rng_from_seed(67);
        for _ in 0..10 {
            let rho =
                validate_density(random::random_density(&mut rng, 4), VALIDATION_TOL).unwrap();
            let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                PovmSet::from_matrices(random::random_povm(rng, 2, 2), None).unwrap()
            };
            let exp = ewf_from_locals(
                rho,
                mk(&mut rng),
                mk(&mut rng),
                mk(&mut rng),
                mk(&mut rng),
                None,
            );
            let mut total = 0.0;
            for cc in 0..2 {
                for dd in 0..2 {
                    let p_cd = exp.friend_probability(cc, dd).unwrap();
                    if p_cd < P_MIN {
                        continue;
                    }
                    for a in 0..2 {
                        for b in 0..2 {
                            total += ewf_conditional(&exp, cc, dd, a, b).unwrap() * p_cd;
                        }
                    }
                }
            }
            assert!((total - 1.0).abs() < 1e-9, "total {total}");
        }
    }

    #[test]
    fn ewf_conditional_matches_enumeration_oracle() {
        let sc = crate::scenarios::build_brukner(1.1);
        let exp = sc.to_ewf().unwrap();
        let dist = oracle::enumerate_ewf(&exp).unwrap();
        for cc in 0..2 {
            for dd in 0..2 {
                let p_cd = exp.friend_probability(cc, dd).unwrap();
                if p_cd < 1e-9 {
                    continue;
                }
                for a in 0..2 {
                    for b in 0..2 {
                        let joint = dist.probability(&format!("{cc}.{dd},{a}.{b}"));
                        let got = ewf_conditional(&exp, cc, dd, a, b).unwrap();
                        assert!(
                            (got - joint / p_cd).abs() < 1e-12,
                            "mismatch at {cc}{dd}{a}{b}"
                        );
                    }
                }
            }
        }
    }
}
