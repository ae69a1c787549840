//! Two-time conditional probability for POVM measurements, the two-time law
//! of total probability and its residual, and checkers for the sufficient
//! conditions C1-C3 (and their stationary variants C1'-C3') under which the
//! law holds.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::measurement::{
    self, born_probability, real_trace, DensityOperator, PovmSet, PureState, COMPLETENESS_TOL,
    P_MIN, VALIDATION_TOL,
};
use crate::random;
use rand_chacha::ChaCha8Rng;

/// Default tolerance for condition residual verdicts.
pub const CONDITION_TOL: f64 = 1e-9;

/// Unitarity tolerance for evolutions.
pub const UNITARITY_TOL: f64 = 1e-9;

/// Unitary time evolution over an interval, optionally generated from a
/// Hamiltonian (hbar = 1 throughout; times are dimensionless).
#[derive(Debug, Clone)]
pub struct Evolution {
    unitary: CMatrix,
    t_start: f64,
    t_end: f64,
    hamiltonian: Option<CMatrix>,
}

impl Evolution {
    pub fn identity(dim: usize, t_start: f64, t_end: f64) -> Self {
        Self {
            unitary: CMatrix::identity(dim),
            t_start,
            t_end,
            hamiltonian: None,
        }
    }

    pub fn from_unitary(unitary: CMatrix, t_start: f64, t_end: f64) -> Result<Self> {
        let resid = unitary.unitarity_residual();
        if resid > UNITARITY_TOL {
            return Err(Error::NonUnitary { residual: resid });
        }
        Ok(Self {
            unitary,
            t_start,
            t_end,
            hamiltonian: None,
        })
    }

    /// U = exp(-i H (t_end - t_start)).
    pub fn from_hamiltonian(hamiltonian: CMatrix, t_start: f64, t_end: f64) -> Result<Self> {
        let u = linalg::unitary_from_hamiltonian(&hamiltonian, t_end - t_start)?;
        Ok(Self {
            unitary: u,
            t_start,
            t_end,
            hamiltonian: Some(hamiltonian),
        })
    }

    /// Validates a caller-supplied (U, H) pair for mutual consistency.
    pub fn with_hamiltonian(
        unitary: CMatrix,
        hamiltonian: CMatrix,
        t_start: f64,
        t_end: f64,
    ) -> Result<Self> {
        let mut ev = Self::from_unitary(unitary, t_start, t_end)?;
        let rebuilt = linalg::unitary_from_hamiltonian(&hamiltonian, t_end - t_start)?;
        let resid = (&rebuilt - &ev.unitary).frobenius_norm();
        if resid > UNITARITY_TOL {
            return Err(Error::EvolutionMismatch { residual: resid });
        }
        ev.hamiltonian = Some(hamiltonian);
        Ok(ev)
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    pub fn hamiltonian(&self) -> Option<&CMatrix> {
        self.hamiltonian.as_ref()
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn dt(&self) -> f64 {
        self.t_end - self.t_start
    }

    pub fn dim(&self) -> usize {
        self.unitary.dim()
    }

    /// U M U^dag.
    pub fn evolve(&self, m: &CMatrix) -> CMatrix {
        &(&self.unitary * m) * &self.unitary.adjoint()
    }
}

/// A complete two-time configuration: initial state, first POVM set at t_a,
/// free evolution to t_b, second POVM set, and the observation times
/// t_a < t1 < t_b < t2.
#[derive(Debug, Clone)]
pub struct TwoTimeExperiment {
    pub initial: DensityOperator,
    pub first: PovmSet,
    pub evolution: Evolution,
    pub second: PovmSet,
    pub t1: f64,
    pub t2: f64,
}

impl TwoTimeExperiment {
    pub fn new(
        initial: DensityOperator,
        first: PovmSet,
        evolution: Evolution,
        second: PovmSet,
        t1: f64,
        t2: f64,
    ) -> Result<Self> {
        let dim = initial.dim();
        for d in [first.dim(), evolution.dim(), second.dim()] {
            if d != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: d,
                });
            }
        }
        if !(evolution.t_start() < t1 && t1 < evolution.t_end() && evolution.t_end() < t2) {
            return Err(Error::TimeOrdering);
        }
        Ok(Self {
            initial,
            first,
            evolution,
            second,
            t1,
            t2,
        })
    }

    /// Observation times placed canonically inside the evolution interval.
    pub fn with_default_times(
        initial: DensityOperator,
        first: PovmSet,
        evolution: Evolution,
        second: PovmSet,
    ) -> Result<Self> {
        let t1 = evolution.t_start() + 0.5 * evolution.dt().abs().max(1.0);
        let t2 = evolution.t_end() + 1.0;
        let t1 = if t1 >= evolution.t_end() {
            0.5 * (evolution.t_start() + evolution.t_end())
        } else {
            t1
        };
        Self::new(initial, first, evolution, second, t1, t2)
    }
}

/// Element-level kernel: Tr(B U sqrt(A) rho sqrt(A) U^dag) / Tr(rho A).
/// Shared by the experiment-level API and the composite lift.
pub fn two_time_conditional_elements(
    rho: &CMatrix,
    first: &CMatrix,
    unitary: &CMatrix,
    second: &CMatrix,
) -> Result<f64> {
    let p_first = real_trace((rho * first).trace())?;
    if p_first < P_MIN {
        return Err(Error::OutcomeProbabilityZero {
            probability: p_first,
        });
    }
    let root = linalg::psd_sqrt(first, linalg::PSD_CLAMP_TOL)?;
    let branch = &(&root * rho) * &root;
    let evolved = &(unitary * &branch) * &unitary.adjoint();
    let num = real_trace((second * &evolved).trace())?;
    clamp01(num / p_first)
}

fn clamp01(p: f64) -> Result<f64> {
    if !(-measurement::PROBABILITY_CLAMP_TOL..=1.0 + measurement::PROBABILITY_CLAMP_TOL)
        .contains(&p)
    {
        return Err(Error::ProbabilityOutOfRange { value: p });
    }
    Ok(p.clamp(0.0, 1.0))
}

/// p(b_j at t2 | a_i at t1, rho_0) per the two-time rule.
pub fn two_time_conditional(exp: &TwoTimeExperiment, i: usize, j: usize) -> Result<f64> {
    let a = exp.first.get(i)?;
    let b = exp.second.get(j)?;
    two_time_conditional_elements(
        exp.initial.matrix(),
        a.matrix(),
        exp.evolution.unitary(),
        b.matrix(),
    )
}

/// |<psi| U |phi>|^2, derived from the two-time rule with projective
/// elements (rho_0 = A_i = |phi><phi|, B_j = |psi><psi|).
pub fn transition_probability(
    phi: &PureState,
    evolution: &Evolution,
    psi: &PureState,
) -> Result<f64> {
    let rho = phi.to_density("S");
    let a = phi.vector().projector();
    let b = psi.vector().projector();
    two_time_conditional_elements(rho.matrix(), &a, evolution.unitary(), &b)
}

/// Both sides of the two-time law of total probability for one second-stage
/// outcome, and their absolute gap.
#[derive(Debug, Clone, Copy)]
pub struct TotalLawBreakdown {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// lhs = Tr(B_j U rho U^dag); rhs = sum_i Tr(B_j U sqrt(A_i) rho sqrt(A_i)
/// U^dag). The rhs is a sum of raw traces, so zero-probability first
/// outcomes contribute their term directly and no division occurs.
pub fn total_law_residual(exp: &TwoTimeExperiment, j: usize) -> Result<TotalLawBreakdown> {
    let resid = exp.first.completeness_residual();
    if resid > COMPLETENESS_TOL {
        return Err(Error::IncompletePovm { residual: resid });
    }
    let b = exp.second.get(j)?.matrix();
    let u = exp.evolution.unitary();
    let evolved = exp.evolution.evolve(exp.initial.matrix());
    let lhs = real_trace((b * &evolved).trace())?;
    let mut rhs = 0.0;
    for a in exp.first.elements() {
        let root = linalg::psd_sqrt(a.matrix(), linalg::PSD_CLAMP_TOL)?;
        let branch = &(&root * exp.initial.matrix()) * &root;
        let branch_evolved = &(u * &branch) * &u.adjoint();
        rhs += real_trace((b * &branch_evolved).trace())?;
    }
    Ok(TotalLawBreakdown {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

/// Identifier for a sufficient condition of the total law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConditionId {
    C1,
    C2,
    C3,
    C1Prime,
    C2Prime,
    C3Prime,
    C4,
    C5,
}

impl std::fmt::Display for ConditionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ConditionId::C1 => "C1",
            ConditionId::C2 => "C2",
            ConditionId::C3 => "C3",
            ConditionId::C1Prime => "C1'",
            ConditionId::C2Prime => "C2'",
            ConditionId::C3Prime => "C3'",
            ConditionId::C4 => "C4",
            ConditionId::C5 => "C5",
        };
        f.write_str(s)
    }
}

/// Verdict for one condition: whether its structural preconditions apply,
/// its numerical residual, and where the worst violation sits.
#[derive(Debug, Clone)]
pub struct ConditionEntry {
    pub id: ConditionId,
    pub applicable: bool,
    pub satisfied: bool,
    pub residual: f64,
    pub witness: Option<String>,
}

/// Per-condition verdicts at a fixed tolerance.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub tolerance: f64,
    pub entries: Vec<ConditionEntry>,
}

impl ConditionReport {
    pub fn entry(&self, id: ConditionId) -> Option<&ConditionEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// True when at least one applicable condition is satisfied.
    pub fn any_satisfied(&self) -> bool {
        self.entries.iter().any(|e| e.applicable && e.satisfied)
    }
}

fn push_entry(
    entries: &mut Vec<ConditionEntry>,
    id: ConditionId,
    applicable: bool,
    residual: f64,
    tol: f64,
    witness: Option<String>,
) {
    entries.push(ConditionEntry {
        id,
        applicable,
        satisfied: applicable && residual <= tol,
        residual,
        witness,
    });
}

/// Max over first-set elements of ||[A_i, U^dag B U]||_F, with the argmax.
fn c1_residual(first: &PovmSet, conjugated: &CMatrix) -> (f64, usize) {
    let mut worst = 0.0;
    let mut at = 0;
    for (i, a) in first.elements().iter().enumerate() {
        let norm = a.matrix().commutator(conjugated).frobenius_norm();
        if norm > worst {
            worst = norm;
            at = i;
        }
    }
    (worst, at)
}

/// Off-diagonal mass of rho in the rank-1 projector basis of the first set.
fn c2_residual(rho: &CMatrix, basis_vectors: &[CVector]) -> f64 {
    let n = basis_vectors.len();
    let mut off = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mij = basis_vectors[i].inner(&rho.apply(&basis_vectors[j]));
            off += mij.norm_sqr();
        }
    }
    off.sqrt()
}

/// sum_i |<Psi| [A_i, U^dag B U] A_i |Psi>| over projective first elements.
fn c3_residual(psi: &CVector, first: &PovmSet, conjugated: &CMatrix) -> (f64, usize) {
    let mut total = 0.0;
    let mut worst = 0.0;
    let mut at = 0;
    for (i, a) in first.elements().iter().enumerate() {
        let m = &a.matrix().commutator(conjugated) * a.matrix();
        let term = m.expectation(psi).norm();
        total += term;
        if term > worst {
            worst = term;
            at = i;
        }
    }
    (total, at)
}

/// True when every post-measurement state of the first set is unchanged by
/// the evolution within tol (outcomes below the probability cutoff skipped).
pub fn evolution_is_stationary(exp: &TwoTimeExperiment, tol: f64) -> Result<bool> {
    for a in exp.first.elements() {
        let p = born_probability(&exp.initial, a)?;
        if p < P_MIN {
            continue;
        }
        let post = measurement::post_measurement_state(&exp.initial, a)?;
        let moved = exp.evolution.evolve(post.matrix());
        if (&moved - post.matrix()).frobenius_norm() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Evaluates C1-C3 for the given second-stage outcome, plus the stationary
/// variants C1'-C3' (computed with U replaced by the identity) when the
/// evolution is numerically stationary on every post-measurement state.
pub fn check_theorem1(exp: &TwoTimeExperiment, j: usize, tol: f64) -> Result<ConditionReport> {
    let b = exp.second.get(j)?.matrix();
    let u = exp.evolution.unitary();
    let conjugated = &(&u.adjoint() * b) * u;
    let rho = exp.initial.matrix();
    let mut entries = Vec::new();

    let (c1, c1_at) = c1_residual(&exp.first, &conjugated);
    push_entry(
        &mut entries,
        ConditionId::C1,
        true,
        c1,
        tol,
        (c1 > tol).then(|| format!("max commutator at first element {c1_at}")),
    );

    let all_rank_one = exp
        .first
        .elements()
        .iter()
        .all(|a| a.is_rank_one_projector(tol.max(VALIDATION_TOL)));
    let spans_space = exp.first.len() == exp.initial.dim();
    let c2_applicable = all_rank_one && spans_space;
    let c2 = if c2_applicable {
        let vectors: Vec<CVector> = exp
            .first
            .elements()
            .iter()
            .map(|a| top_column(a.matrix()))
            .collect::<Result<Vec<_>>>()?;
        c2_residual(rho, &vectors)
    } else {
        f64::NAN
    };
    push_entry(
        &mut entries,
        ConditionId::C2,
        c2_applicable,
        if c2_applicable { c2 } else { 0.0 },
        tol,
        (!c2_applicable).then(|| "first set is not a complete rank-1 projector family".into()),
    );

    let pure = exp.initial.is_pure(tol.max(VALIDATION_TOL));
    let all_projective = exp
        .first
        .elements()
        .iter()
        .all(|a| a.is_projector(tol.max(VALIDATION_TOL)));
    let c3_applicable = pure && all_projective;
    let (c3, c3_at) = if c3_applicable {
        let psi = exp.initial.top_eigenvector()?;
        c3_residual(&psi, &exp.first, &conjugated)
    } else {
        (0.0, 0)
    };
    push_entry(
        &mut entries,
        ConditionId::C3,
        c3_applicable,
        c3,
        tol,
        if !c3_applicable {
            Some("requires a pure state and projective first elements".into())
        } else {
            (c3 > tol).then(|| format!("max term at first element {c3_at}"))
        },
    );

    let stationary = evolution_is_stationary(exp, tol)?;
    let note = || Some("evolution is not stationary on the post-measurement states".into());

    let (c1p, c1p_at) = c1_residual(&exp.first, b);
    push_entry(
        &mut entries,
        ConditionId::C1Prime,
        stationary,
        c1p,
        tol,
        if stationary {
            (c1p > tol).then(|| format!("max commutator at first element {c1p_at}"))
        } else {
            note()
        },
    );

    push_entry(
        &mut entries,
        ConditionId::C2Prime,
        stationary && c2_applicable,
        if c2_applicable { c2 } else { 0.0 },
        tol,
        if !stationary { note() } else { None },
    );

    let (c3p, _) = if c3_applicable {
        let psi = exp.initial.top_eigenvector()?;
        c3_residual(&psi, &exp.first, b)
    } else {
        (0.0, 0)
    };
    push_entry(
        &mut entries,
        ConditionId::C3Prime,
        stationary && c3_applicable,
        c3p,
        tol,
        if !stationary { note() } else { None },
    );

    Ok(ConditionReport {
        tolerance: tol,
        entries,
    })
}

/// Dominant eigenvector of a rank-1 projector.
fn top_column(projector: &CMatrix) -> Result<CVector> {
    let eig = linalg::hermitian_eig(projector)?;
    Ok(eig.eigenvector(0))
}

/// Outcome of one randomized implication batch.
#[derive(Debug, Clone)]
pub struct BatchStats {
    pub condition: &'static str,
    pub cases: usize,
    pub max_residual: f64,
    /// Cases where `check_theorem1` failed to flag the constructed condition
    /// as satisfied; should stay zero.
    pub condition_misses: usize,
}

/// Outcome of the unconditioned random batch.
#[derive(Debug, Clone)]
pub struct UnconditionedStats {
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// Cases where some condition was satisfied yet the law failed beyond
    /// tolerance; must stay zero (the implication direction of the theorem).
    pub implication_violations: usize,
}

/// Report of the randomized theorem harness.
#[derive(Debug, Clone)]
pub struct ImplicationReport {
    pub dim: usize,
    pub tolerance: f64,
    pub batches: Vec<BatchStats>,
    pub unconditioned: UnconditionedStats,
}

fn povm_from_matrices(mats: Vec<CMatrix>) -> Result<PovmSet> {
    PovmSet::from_matrices(mats, None)
}

fn diagonal_povm_in_basis(
    rng: &mut ChaCha8Rng,
    basis: &CMatrix,
    dim: usize,
    outcomes: usize,
) -> Result<PovmSet> {
    // random diagonal PSD fractions summing to I, conjugated into the basis
    let mut diags = vec![vec![0.0f64; dim]; outcomes];
    for d in 0..dim {
        let split = random::random_probability_vector(rng, outcomes);
        for (diag, s) in diags.iter_mut().zip(&split) {
            diag[d] = *s;
        }
    }
    let mats = diags
        .into_iter()
        .map(|d| (&(basis * &CMatrix::from_real_diag(&d)) * &basis.adjoint()).hermitized())
        .collect();
    povm_from_matrices(mats)
}

fn experiment(
    rho: DensityOperator,
    first: PovmSet,
    unitary: CMatrix,
    second: PovmSet,
) -> Result<TwoTimeExperiment> {
    let evolution = Evolution::from_unitary(unitary, 0.0, 1.0)?;
    TwoTimeExperiment::new(rho, first, evolution, second, 0.5, 2.0)
}

/// Randomized test harness for Theorem 1: constructs experiments satisfying
/// each condition by construction, asserts the law holds on them, and records
/// the residual distribution of unconditioned random experiments (which
/// typically violate the law).
pub fn verify_theorem1_implication(
    sample_count: usize,
    dim: usize,
    seed: u64,
) -> Result<ImplicationReport> {
    let tol = CONDITION_TOL;
    let mut rng = random::rng_from_seed(seed);
    let mut batches = Vec::new();

    // C1: both sets diagonal in a shared basis after undoing the evolution.
    let mut max_c1 = 0.0f64;
    let mut miss_c1 = 0;
    for _ in 0..sample_count {
        let basis = random::random_unitary(&mut rng, dim);
        let u = random::random_unitary(&mut rng, dim);
        let first = diagonal_povm_in_basis(&mut rng, &basis, dim, 2)?;
        let inner = diagonal_povm_in_basis(&mut rng, &basis, dim, 2)?;
        let second_mats = inner
            .elements()
            .iter()
            .map(|e| (&(&u * e.matrix()) * &u.adjoint()).hermitized())
            .collect();
        let second = povm_from_matrices(second_mats)?;
        let rho =
            measurement::validate_density(random::random_density(&mut rng, dim), VALIDATION_TOL)?;
        let exp = experiment(rho, first, u, second)?;
        for j in 0..exp.second.len() {
            let breakdown = total_law_residual(&exp, j)?;
            max_c1 = max_c1.max(breakdown.residual);
            if !check_theorem1(&exp, j, tol)?
                .entry(ConditionId::C1)
                .is_some_and(|e| e.satisfied)
            {
                miss_c1 += 1;
            }
        }
    }
    batches.push(BatchStats {
        condition: "C1",
        cases: sample_count,
        max_residual: max_c1,
        condition_misses: miss_c1,
    });

    // C2: rho mixed diagonally in a random orthonormal basis used as the
    // first projector family.
    let mut max_c2 = 0.0f64;
    let mut miss_c2 = 0;
    for _ in 0..sample_count {
        let family = random::random_projective_family(&mut rng, dim);
        let weights = random::random_probability_vector(&mut rng, dim);
        let mut rho_m = CMatrix::zeros(dim, dim);
        for (w, p) in weights.iter().zip(&family) {
            rho_m = &rho_m + &p.scale_re(*w);
        }
        let rho = measurement::validate_density(rho_m.hermitized(), VALIDATION_TOL)?;
        let first = povm_from_matrices(family)?;
        let second = povm_from_matrices(random::random_povm(&mut rng, dim, 2))?;
        let u = random::random_unitary(&mut rng, dim);
        let exp = experiment(rho, first, u, second)?;
        for j in 0..exp.second.len() {
            let breakdown = total_law_residual(&exp, j)?;
            max_c2 = max_c2.max(breakdown.residual);
            if !check_theorem1(&exp, j, tol)?
                .entry(ConditionId::C2)
                .is_some_and(|e| e.satisfied)
            {
                miss_c2 += 1;
            }
        }
    }
    batches.push(BatchStats {
        condition: "C2",
        cases: sample_count,
        max_residual: max_c2,
        condition_misses: miss_c2,
    });

    // C3: random pure state supported inside one block of a projector family
    // with a rank >= 2 block, then filtered on the C3 identity itself.
    let mut max_c3 = 0.0f64;
    let mut miss_c3 = 0;
    for _ in 0..sample_count {
        let basis = random::random_unitary(&mut rng, dim);
        let block = 2.max(dim / 2);
        let mut p_block = CMatrix::zeros(dim, dim);
        let mut blocks: Vec<CMatrix> = Vec::new();
        for k in 0..block {
            let col = CVector::new((0..dim).map(|r| basis.get(r, k)).collect());
            p_block = &p_block + &col.projector();
        }
        blocks.push(p_block.hermitized());
        for k in block..dim {
            let col = CVector::new((0..dim).map(|r| basis.get(r, k)).collect());
            blocks.push(col.projector());
        }
        // Psi: random combination inside the first block
        let mut psi = CVector::zeros(dim);
        for k in 0..block {
            let amp = random::complex_gaussian(&mut rng);
            for r in 0..dim {
                psi.set(r, psi.get(r) + basis.get(r, k) * amp);
            }
        }
        let psi = psi.normalized();
        let rho = measurement::validate_density(psi.projector(), VALIDATION_TOL)?;
        let first = povm_from_matrices(blocks)?;
        let second = povm_from_matrices(random::random_povm(&mut rng, dim, 2))?;
        let u = random::random_unitary(&mut rng, dim);
        let exp = experiment(rho, first, u, second)?;
        for j in 0..exp.second.len() {
            let report = check_theorem1(&exp, j, tol)?;
            let entry = report.entry(ConditionId::C3).expect("C3 entry present");
            // generation filter: the identity must hold by construction
            if !(entry.applicable && entry.residual <= 1e-10) {
                miss_c3 += 1;
                continue;
            }
            let breakdown = total_law_residual(&exp, j)?;
            max_c3 = max_c3.max(breakdown.residual);
        }
    }
    batches.push(BatchStats {
        condition: "C3",
        cases: sample_count,
        max_residual: max_c3,
        condition_misses: miss_c3,
    });

    // Unconditioned batch: fully random experiments.
    let mut residuals = Vec::new();
    let mut violations = 0;
    for _ in 0..sample_count {
        let rho =
            measurement::validate_density(random::random_density(&mut rng, dim), VALIDATION_TOL)?;
        let first = povm_from_matrices(random::random_povm(&mut rng, dim, 2))?;
        let second = povm_from_matrices(random::random_povm(&mut rng, dim, 2))?;
        let u = random::random_unitary(&mut rng, dim);
        let exp = experiment(rho, first, u, second)?;
        for j in 0..exp.second.len() {
            let breakdown = total_law_residual(&exp, j)?;
            residuals.push(breakdown.residual);
            let report = check_theorem1(&exp, j, tol)?;
            if report.any_satisfied() && breakdown.residual > tol {
                violations += 1;
            }
        }
    }
    let max_unconditioned = residuals.iter().copied().fold(0.0, f64::max);

    Ok(ImplicationReport {
        dim,
        tolerance: tol,
        batches,
        unconditioned: UnconditionedStats {
            residuals,
            max_residual: max_unconditioned,
            implication_violations: violations,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{validate_density, PovmElement};
    use num_complex::Complex64;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn proj(amplitudes: &[f64]) -> CMatrix {
        CVector::new(amplitudes.iter().map(|&x| c(x, 0.0)).collect())
            .normalized()
            .projector()
    }

    fn z_set() -> PovmSet {
        PovmSet::from_matrices(vec![proj(&[1.0, 0.0]), proj(&[0.0, 1.0])], None).unwrap()
    }

    fn x_set() -> PovmSet {
        PovmSet::from_matrices(vec![proj(&[1.0, 1.0]), proj(&[1.0, -1.0])], None).unwrap()
    }

    fn pure(amplitudes: &[f64]) -> DensityOperator {
        validate_density(proj(amplitudes), VALIDATION_TOL).unwrap()
    }

    fn identity_exp(rho: DensityOperator, first: PovmSet, second: PovmSet) -> TwoTimeExperiment {
        let dim = rho.dim();
        TwoTimeExperiment::new(
            rho,
            first,
            Evolution::identity(dim, 0.0, 1.0),
            second,
            0.5,
            2.0,
        )
        .unwrap()
    }

    #[test]
    fn repeatability_with_trivial_evolution() {
        let exp = identity_exp(pure(&[1.0, 0.0]), z_set(), z_set());
        assert!((two_time_conditional(&exp, 0, 0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rabi_rotation_gives_half() {
        let x = CMatrix::from_rows(vec![
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let u = linalg::unitary_from_hamiltonian(&x, FRAC_PI_4).unwrap();
        let exp = TwoTimeExperiment::new(
            pure(&[1.0, 0.0]),
            z_set(),
            Evolution::from_unitary(u, 0.0, 1.0).unwrap(),
            z_set(),
            0.5,
            2.0,
        )
        .unwrap();
        let p = two_time_conditional(&exp, 0, 1).unwrap();
        assert!((p - 0.5).abs() < 1e-12, "got {p}");
    }

    #[test]
    fn stationary_case_reduces_to_single_time_conditional() {
        let exp = identity_exp(pure(&[1.0, 0.0]), x_set(), z_set());
        let a = exp.first.get(0).unwrap().clone();
        let b = exp.second.get(0).unwrap().clone();
        let via_two_time = two_time_conditional(&exp, 0, 0).unwrap();
        let via_single = measurement::conditional_probability(&exp.initial, &a, &b).unwrap();
        assert!((via_two_time - via_single).abs() < 1e-14);
    }

    #[test]
    fn two_time_matches_composed_update() {
        let mut rng = random::rng_from_seed(5);
        for _ in 0..20 {
            let dim = 3;
            let rho =
                validate_density(random::random_density(&mut rng, dim), VALIDATION_TOL).unwrap();
            let first =
                PovmSet::from_matrices(random::random_povm(&mut rng, dim, 2), None).unwrap();
            let second =
                PovmSet::from_matrices(random::random_povm(&mut rng, dim, 2), None).unwrap();
            let u = random::random_unitary(&mut rng, dim);
            let exp = experiment(rho, first, u, second).unwrap();
            let p = two_time_conditional(&exp, 0, 1).unwrap();
            let post = measurement::post_measurement_state(&exp.initial, exp.first.get(0).unwrap())
                .unwrap();
            let evolved = validate_density(
                exp.evolution.evolve(post.matrix()).hermitized(),
                VALIDATION_TOL,
            )
            .unwrap();
            let composed =
                measurement::born_probability(&evolved, exp.second.get(1).unwrap()).unwrap();
            assert!((p - composed).abs() < 1e-12);
        }
    }

    #[test]
    fn transition_same_state_identity() {
        let phi = PureState::new(CVector::new(vec![c(1.0, 0.0), c(0.0, 0.0)]), vec![2]).unwrap();
        let ev = Evolution::identity(2, 0.0, 1.0);
        assert!((transition_probability(&phi, &ev, &phi).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transition_orthogonal_identity() {
        let phi = PureState::new(CVector::new(vec![c(1.0, 0.0), c(0.0, 0.0)]), vec![2]).unwrap();
        let psi = PureState::new(CVector::new(vec![c(0.0, 0.0), c(1.0, 0.0)]), vec![2]).unwrap();
        let ev = Evolution::identity(2, 0.0, 1.0);
        assert!(transition_probability(&phi, &ev, &psi).unwrap() < 1e-12);
    }

    #[test]
    fn transition_y_rotation() {
        // exp(-i Y theta/2)|0> = cos(theta/2)|0> + sin(theta/2)|1>
        let y = CMatrix::from_rows(vec![
            vec![c(0.0, 0.0), c(0.0, -1.0)],
            vec![c(0.0, 1.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let theta = PI / 3.0;
        let ev = Evolution::from_hamiltonian(y.scale_re(0.5 * theta), 0.0, 1.0).unwrap();
        let phi = PureState::new(CVector::new(vec![c(1.0, 0.0), c(0.0, 0.0)]), vec![2]).unwrap();
        let psi = PureState::new(CVector::new(vec![c(0.0, 0.0), c(1.0, 0.0)]), vec![2]).unwrap();
        let p = transition_probability(&phi, &ev, &psi).unwrap();
        assert!((p - 0.25).abs() < 1e-12, "got {p}");
    }

    #[test]
    fn total_law_commuting_diagonal_case() {
        let rho = validate_density(CMatrix::from_real_diag(&[0.25, 0.75]), VALIDATION_TOL).unwrap();
        let exp = identity_exp(rho, z_set(), z_set());
        let breakdown = total_law_residual(&exp, 0).unwrap();
        assert!(breakdown.residual < 1e-12);
    }

    #[test]
    fn total_law_double_slit() {
        let exp = identity_exp(pure(&[1.0, 1.0]), z_set(), x_set());
        let breakdown = total_law_residual(&exp, 0).unwrap();
        assert!((breakdown.lhs - 1.0).abs() < 1e-12);
        assert!((breakdown.rhs - 0.5).abs() < 1e-12);
        assert!((breakdown.residual - 0.5).abs() < 1e-12);
    }

    #[test]
    fn total_law_c2_construction_holds() {
        let mut rng = random::rng_from_seed(9);
        let dim = 3;
        let family = random::random_projective_family(&mut rng, dim);
        let weights = random::random_probability_vector(&mut rng, dim);
        let mut rho_m = CMatrix::zeros(dim, dim);
        for (w, p) in weights.iter().zip(&family) {
            rho_m = &rho_m + &p.scale_re(*w);
        }
        let rho = validate_density(rho_m.hermitized(), VALIDATION_TOL).unwrap();
        let first = PovmSet::from_matrices(family, None).unwrap();
        let second = PovmSet::from_matrices(random::random_povm(&mut rng, dim, 2), None).unwrap();
        let u = random::random_unitary(&mut rng, dim);
        let exp = experiment(rho, first, u, second).unwrap();
        assert!(total_law_residual(&exp, 0).unwrap().residual < 1e-9);
    }

    #[test]
    fn total_law_requires_complete_first_set() {
        let p0 = PovmElement::new(proj(&[1.0, 0.0]), "0", 0).unwrap();
        let first = PovmSet::new_unchecked(vec![p0], None).unwrap();
        let exp = TwoTimeExperiment::new(
            pure(&[1.0, 1.0]),
            first,
            Evolution::identity(2, 0.0, 1.0),
            z_set(),
            0.5,
            2.0,
        )
        .unwrap();
        assert!(matches!(
            total_law_residual(&exp, 0),
            Err(Error::IncompletePovm { .. })
        ));
    }

    #[test]
    fn conditions_commuting_diagonal_setup() {
        let rho = validate_density(CMatrix::from_real_diag(&[0.25, 0.75]), VALIDATION_TOL).unwrap();
        let exp = identity_exp(rho, z_set(), z_set());
        let report = check_theorem1(&exp, 0, CONDITION_TOL).unwrap();
        let c1 = report.entry(ConditionId::C1).unwrap();
        assert!(c1.satisfied && c1.residual < 1e-12);
        assert!(report.entry(ConditionId::C1Prime).unwrap().satisfied);
        assert!(report.entry(ConditionId::C2).unwrap().satisfied);
    }

    #[test]
    fn conditions_all_fail_for_plus_z_x() {
        let exp = identity_exp(pure(&[1.0, 1.0]), z_set(), x_set());
        let report = check_theorem1(&exp, 0, CONDITION_TOL).unwrap();
        for id in [ConditionId::C1, ConditionId::C2, ConditionId::C3] {
            let entry = report.entry(id).unwrap();
            assert!(entry.applicable, "{id} should apply");
            assert!(!entry.satisfied, "{id} should fail");
            assert!(entry.residual > 0.1, "{id} residual {}", entry.residual);
        }
        assert!(!report.any_satisfied());
    }

    #[test]
    fn brukner_single_observer_satisfies_c3_prime() {
        let sc = crate::scenarios::build_brukner(FRAC_PI_2);
        let exp = sc.single_observer_experiment().unwrap();
        let report = check_theorem1(&exp, 0, CONDITION_TOL).unwrap();
        let c3p = report.entry(ConditionId::C3Prime).unwrap();
        assert!(c3p.applicable);
        assert!(c3p.satisfied, "residual {}", c3p.residual);
    }

    #[test]
    fn primed_conditions_inapplicable_when_not_stationary() {
        let x = CMatrix::from_rows(vec![
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let u = linalg::unitary_from_hamiltonian(&x, FRAC_PI_2).unwrap();
        let exp = TwoTimeExperiment::new(
            pure(&[1.0, 0.0]),
            z_set(),
            Evolution::from_unitary(u, 0.0, 1.0).unwrap(),
            z_set(),
            0.5,
            2.0,
        )
        .unwrap();
        let report = check_theorem1(&exp, 0, CONDITION_TOL).unwrap();
        assert!(!report.entry(ConditionId::C1Prime).unwrap().applicable);
        assert!(!report.entry(ConditionId::C3Prime).unwrap().applicable);
    }

    #[test]
    fn hamiltonian_unitary_pair_checked_for_consistency() {
        let x = CMatrix::from_rows(vec![
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let u = linalg::unitary_from_hamiltonian(&x, 0.7).unwrap();
        let ok = Evolution::with_hamiltonian(u.clone(), x.clone(), 0.0, 0.7);
        assert!(ok.is_ok());
        let mismatched = Evolution::with_hamiltonian(u, x, 0.0, 1.4);
        assert!(matches!(mismatched, Err(Error::EvolutionMismatch { .. })));
    }

    #[test]
    fn time_ordering_enforced() {
        let r = TwoTimeExperiment::new(
            pure(&[1.0, 0.0]),
            z_set(),
            Evolution::identity(2, 0.0, 1.0),
            z_set(),
            1.5,
            2.0,
        );
        assert!(matches!(r, Err(Error::TimeOrdering)));
    }

    #[test]
    fn second_set_normalizes() {
        let mut rng = random::rng_from_seed(31);
        for _ in 0..20 {
            let dim = 3;
            let rho =
                validate_density(random::random_density(&mut rng, dim), VALIDATION_TOL).unwrap();
            let first =
                PovmSet::from_matrices(random::random_povm(&mut rng, dim, 3), None).unwrap();
            let second =
                PovmSet::from_matrices(random::random_povm(&mut rng, dim, 3), None).unwrap();
            let u = random::random_unitary(&mut rng, dim);
            let exp = experiment(rho, first, u, second).unwrap();
            for i in 0..exp.first.len() {
                let p =
                    measurement::born_probability(&exp.initial, exp.first.get(i).unwrap()).unwrap();
                if p < 1e-6 {
                    continue;
                }
                let total: f64 = (0..exp.second.len())
                    .map(|j| two_time_conditional(&exp, i, j).unwrap())
                    .sum();
                assert!((total - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn basis_covariance_and_global_phase() {
        let mut rng = random::rng_from_seed(13);
        let dim = 3;
        let rho = validate_density(random::random_density(&mut rng, dim), VALIDATION_TOL).unwrap();
        let first = PovmSet::from_matrices(random::random_povm(&mut rng, dim, 2), None).unwrap();
        let second = PovmSet::from_matrices(random::random_povm(&mut rng, dim, 2), None).unwrap();
        let u = random::random_unitary(&mut rng, dim);
        let exp = experiment(rho.clone(), first.clone(), u.clone(), second.clone()).unwrap();
        let base = two_time_conditional(&exp, 0, 0).unwrap();

        // global phase on U
        let phase = Complex64::from_polar(1.0, 0.7);
        let exp_phase =
            experiment(rho.clone(), first.clone(), u.scale(phase), second.clone()).unwrap();
        assert!((two_time_conditional(&exp_phase, 0, 0).unwrap() - base).abs() < 1e-10);

        // rho -> V rho V^dag, A -> V A V^dag, U -> U V^dag
        let v = random::random_unitary(&mut rng, dim);
        let rho_v = validate_density(
            (&(&v * rho.matrix()) * &v.adjoint()).hermitized(),
            VALIDATION_TOL,
        )
        .unwrap();
        let first_v = PovmSet::from_matrices(
            first
                .elements()
                .iter()
                .map(|e| (&(&v * e.matrix()) * &v.adjoint()).hermitized())
                .collect(),
            None,
        )
        .unwrap();
        let exp_v = experiment(rho_v, first_v, &u * &v.adjoint(), second).unwrap();
        assert!((two_time_conditional(&exp_v, 0, 0).unwrap() - base).abs() < 1e-10);
    }

    #[test]
    fn implication_harness_c2_dim3() {
        let report = verify_theorem1_implication(25, 3, 12345).unwrap();
        for batch in &report.batches {
            assert!(
                batch.max_residual <= 1e-9,
                "{}: {}",
                batch.condition,
                batch.max_residual
            );
            assert_eq!(batch.condition_misses, 0, "{}", batch.condition);
        }
        assert_eq!(report.unconditioned.implication_violations, 0);
        assert!(report.unconditioned.max_residual > 0.01);
    }
}
