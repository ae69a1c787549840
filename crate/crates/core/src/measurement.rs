//! Single-time POVM measurement calculus: validated states and POVM sets,
//! Born probabilities, the square-root state update, same-state conditional
//! probabilities, and the Bayes-symmetry gap.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, PSD_CLAMP_TOL};
use num_complex::Complex64;

/// States/operators are validated to this tolerance unless overridden.
pub const VALIDATION_TOL: f64 = 1e-10;

/// Completeness tolerance for POVM sets (Frobenius norm of sum minus I).
pub const COMPLETENESS_TOL: f64 = 1e-9;

/// Conditioning on outcomes with probability below this cutoff is an error,
/// never a silent 0/0.
pub const P_MIN: f64 = 1e-12;

/// Probabilities within this distance of [0, 1] are clamped; larger
/// excursions are treated as modeling bugs.
pub const PROBABILITY_CLAMP_TOL: f64 = 1e-10;

fn clamp_probability(p: f64) -> Result<f64> {
    if !(-PROBABILITY_CLAMP_TOL..=1.0 + PROBABILITY_CLAMP_TOL).contains(&p) {
        return Err(Error::ProbabilityOutOfRange { value: p });
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Real part of a trace that must be real; rejects significant imaginary
/// residue as a sign of invalid inputs.
pub(crate) fn real_trace(t: Complex64) -> Result<f64> {
    if t.im.abs() > VALIDATION_TOL {
        return Err(Error::NonRealProbability { imaginary: t.im });
    }
    Ok(t.re)
}

/// Validated density operator: Hermitian, PSD, unit trace.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    matrix: CMatrix,
    space_label: String,
    dims: Vec<usize>,
}

impl DensityOperator {
    /// Validates all three invariants, reporting which one broke and by how
    /// much.
    pub fn new(
        matrix: CMatrix,
        space_label: impl Into<String>,
        dims: Vec<usize>,
        tol: f64,
    ) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        let n = matrix.dim();
        let claimed: usize = dims.iter().product();
        if claimed != n {
            return Err(Error::DimensionMismatch {
                left: claimed,
                right: n,
            });
        }
        let herm = matrix.hermiticity_residual();
        if herm > tol {
            return Err(Error::NonHermitian { residual: herm });
        }
        let eig = linalg::hermitian_eig(&matrix)?;
        let min = eig.min_eigenvalue();
        if min < -tol {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
            });
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::TraceNotOne { trace: tr.re });
        }
        Ok(Self {
            matrix,
            space_label: space_label.into(),
            dims,
        })
    }

    pub fn from_pure(state: &PureState, space_label: impl Into<String>) -> Self {
        Self {
            matrix: state.vector().normalized().projector(),
            space_label: space_label.into(),
            dims: state.dims().to_vec(),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn space_label(&self) -> &str {
        &self.space_label
    }

    /// Tr(rho^2).
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        (self.purity() - 1.0).abs() <= tol
    }

    /// Dominant eigenvector; the state vector when `self` is pure.
    pub fn top_eigenvector(&self) -> Result<CVector> {
        let eig = linalg::hermitian_eig(&self.matrix)?;
        Ok(eig.eigenvector(0))
    }
}

/// Validates a raw matrix as a density operator with a single-factor space.
pub fn validate_density(matrix: CMatrix, tol: f64) -> Result<DensityOperator> {
    let n = matrix.rows();
    DensityOperator::new(matrix, "S", vec![n], tol)
}

/// Unit-norm state vector with subsystem dimensions.
#[derive(Debug, Clone)]
pub struct PureState {
    vector: CVector,
    dims: Vec<usize>,
}

impl PureState {
    pub fn new(vector: CVector, dims: Vec<usize>) -> Result<Self> {
        if !vector.is_finite() {
            return Err(Error::NonFinite);
        }
        let claimed: usize = dims.iter().product();
        if claimed != vector.dim() {
            return Err(Error::DimensionMismatch {
                left: claimed,
                right: vector.dim(),
            });
        }
        let norm = vector.norm();
        if (norm - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { vector, dims })
    }

    pub fn vector(&self) -> &CVector {
        &self.vector
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.vector.dim()
    }

    pub fn to_density(&self, space_label: impl Into<String>) -> DensityOperator {
        DensityOperator::from_pure(self, space_label)
    }
}

/// Outcome identity within a POVM set: (index, name).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeLabel {
    pub name: String,
    pub index: usize,
}

impl OutcomeLabel {
    pub fn new(name: impl Into<String>, index: usize) -> Self {
        Self {
            name: name.into(),
            index,
        }
    }
}

/// Positive operator bounded by the identity, tagged with its outcome.
#[derive(Debug, Clone)]
pub struct PovmElement {
    matrix: CMatrix,
    label: OutcomeLabel,
}

impl PovmElement {
    pub fn new(matrix: CMatrix, name: impl Into<String>, index: usize) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        let herm = matrix.hermiticity_residual();
        if herm > VALIDATION_TOL {
            return Err(Error::NonHermitian { residual: herm });
        }
        let eig = linalg::hermitian_eig(&matrix)?;
        let min = eig.min_eigenvalue();
        let max = eig.max_eigenvalue();
        if min < -VALIDATION_TOL {
            return Err(Error::ElementOutOfRange { value: min });
        }
        if max > 1.0 + VALIDATION_TOL {
            return Err(Error::ElementOutOfRange { value: max });
        }
        Ok(Self {
            matrix,
            label: OutcomeLabel::new(name, index),
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn label(&self) -> &OutcomeLabel {
        &self.label
    }

    pub fn name(&self) -> &str {
        &self.label.name
    }

    pub fn index(&self) -> usize {
        self.label.index
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// sqrt(A), recomputed on each call (dimensions are tiny).
    pub fn sqrt(&self) -> Result<CMatrix> {
        linalg::psd_sqrt(&self.matrix, PSD_CLAMP_TOL)
    }

    /// ||A^2 - A||_F <= tol and Tr A within tol of an integer rank.
    pub fn is_projector(&self, tol: f64) -> bool {
        (&(&self.matrix * &self.matrix) - &self.matrix).frobenius_norm() <= tol
    }

    pub fn is_rank_one_projector(&self, tol: f64) -> bool {
        self.is_projector(tol) && (self.matrix.trace().re - 1.0).abs() <= tol
    }
}

/// Ordered list of POVM elements summing to the identity.
#[derive(Debug, Clone)]
pub struct PovmSet {
    elements: Vec<PovmElement>,
    setting_label: Option<String>,
}

impl PovmSet {
    /// Validates element dimensions, outcome-index uniqueness, and
    /// completeness within [`COMPLETENESS_TOL`].
    pub fn new(elements: Vec<PovmElement>, setting_label: Option<String>) -> Result<Self> {
        let set = Self::new_unchecked(elements, setting_label)?;
        let resid = set.completeness_residual();
        if resid > COMPLETENESS_TOL {
            return Err(Error::IncompletePovm { residual: resid });
        }
        Ok(set)
    }

    /// Same as [`PovmSet::new`] but skips the completeness check; used for
    /// deliberately incomplete sets when exercising error paths.
    pub fn new_unchecked(
        elements: Vec<PovmElement>,
        setting_label: Option<String>,
    ) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::EmptyPovm);
        }
        let dim = elements[0].dim();
        let mut seen = std::collections::HashSet::new();
        for e in &elements {
            if e.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: e.dim(),
                });
            }
            if !seen.insert(e.index()) {
                return Err(Error::DuplicateOutcomeIndex { index: e.index() });
            }
        }
        Ok(Self {
            elements,
            setting_label,
        })
    }

    /// Convenience constructor labelling elements "0", "1", ... by position.
    pub fn from_matrices(matrices: Vec<CMatrix>, setting_label: Option<String>) -> Result<Self> {
        let elements = matrices
            .into_iter()
            .enumerate()
            .map(|(i, m)| PovmElement::new(m, i.to_string(), i))
            .collect::<Result<Vec<_>>>()?;
        Self::new(elements, setting_label)
    }

    pub fn elements(&self) -> &[PovmElement] {
        &self.elements
    }

    pub fn get(&self, index: usize) -> Result<&PovmElement> {
        self.elements.get(index).ok_or(Error::BadOutcomeIndex {
            index,
            count: self.elements.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn setting_label(&self) -> Option<&str> {
        self.setting_label.as_deref()
    }

    /// ||sum_i A_i - I||_F.
    pub fn completeness_residual(&self) -> f64 {
        let dim = self.dim();
        let mut sum = CMatrix::zeros(dim, dim);
        for e in &self.elements {
            sum = &sum + e.matrix();
        }
        (&sum - &CMatrix::identity(dim)).frobenius_norm()
    }

    pub fn is_complete(&self, tol: f64) -> bool {
        self.completeness_residual() <= tol
    }
}

fn require_dims_match(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { left: a, right: b });
    }
    Ok(())
}

/// Born rule p = Tr(rho A), clamped into [0, 1] near the boundary.
pub fn born_probability(rho: &DensityOperator, element: &PovmElement) -> Result<f64> {
    require_dims_match(rho.dim(), element.dim())?;
    let t = (rho.matrix() * element.matrix()).trace();
    clamp_probability(real_trace(t)?)
}

/// Square-root state update: rho' = sqrt(A) rho sqrt(A) / Tr(rho A).
pub fn post_measurement_state(
    rho: &DensityOperator,
    element: &PovmElement,
) -> Result<DensityOperator> {
    let p = born_probability(rho, element)?;
    if p < P_MIN {
        return Err(Error::OutcomeProbabilityZero { probability: p });
    }
    let root = element.sqrt()?;
    let updated = (&(&root * rho.matrix()) * &root).scale_re(1.0 / p);
    DensityOperator::new(
        updated.hermitized(),
        rho.space_label().to_string(),
        rho.dims().to_vec(),
        VALIDATION_TOL,
    )
}

/// p(b | a, rho) = Tr(sqrt(A) rho sqrt(A) B) / Tr(rho A) for two measurements
/// on the same state with no evolution in between.
pub fn conditional_probability(
    rho: &DensityOperator,
    first: &PovmElement,
    then: &PovmElement,
) -> Result<f64> {
    require_dims_match(rho.dim(), first.dim())?;
    require_dims_match(rho.dim(), then.dim())?;
    let p_first = born_probability(rho, first)?;
    if p_first < P_MIN {
        return Err(Error::OutcomeProbabilityZero {
            probability: p_first,
        });
    }
    let root = first.sqrt()?;
    let sandwiched = &(&root * rho.matrix()) * &root;
    let num = real_trace((&sandwiched * then.matrix()).trace())?;
    clamp_probability(num / p_first)
}

/// |Tr(sqrt(A) rho sqrt(A) B) - Tr(sqrt(B) rho sqrt(B) A)|: the gap between
/// the two orderings of the quantum Bayes identity. Zero iff the symmetry
/// holds for this triple.
pub fn bayes_gap(rho: &DensityOperator, a: &PovmElement, b: &PovmElement) -> Result<f64> {
    require_dims_match(rho.dim(), a.dim())?;
    require_dims_match(rho.dim(), b.dim())?;
    let root_a = a.sqrt()?;
    let root_b = b.sqrt()?;
    let ab = real_trace((&(&(&root_a * rho.matrix()) * &root_a) * b.matrix()).trace())?;
    let ba = real_trace((&(&(&root_b * rho.matrix()) * &root_b) * a.matrix()).trace())?;
    Ok((ab - ba).abs())
}
