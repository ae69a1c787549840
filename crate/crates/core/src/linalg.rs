//! Dense complex-matrix kernel for small Hilbert spaces.
//!
//! Self-contained: products, adjoints, traces, Kronecker products, a cyclic
//! Jacobi eigensolver for Hermitian matrices, PSD square roots, and unitary
//! generation from a Hamiltonian. Dimensions are capped at [`MAX_TOTAL_DIM`];
//! everything here is exact enough at that scale that no iterative refinement
//! is needed.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

/// Hard cap on operator dimension, guarding against runaway tensor products.
pub const MAX_TOTAL_DIM: usize = 64;

/// Tolerance used when checking that an input is Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Default clamp tolerance for near-zero negative eigenvalues in [`psd_sqrt`].
pub const PSD_CLAMP_TOL: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 48;
const JACOBI_OFF_TOL: f64 = 1e-15;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, f(r, c));
            }
        }
        m
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let nr = rows.len();
        let nc = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(nr * nc);
        for row in &rows {
            if row.len() != nc {
                return Err(Error::DimensionMismatch {
                    left: nc,
                    right: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: nr,
            cols: nc,
            data,
        })
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, Complex64::new(v, 0.0));
        }
        m
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Side length of a square matrix.
    pub fn dim(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    pub fn trace(&self) -> Complex64 {
        debug_assert!(self.is_square());
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: Complex64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> CMatrix {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn commutator(&self, other: &CMatrix) -> CMatrix {
        &(self * other) - &(other * self)
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// ||M - M^dag||_F.
    pub fn hermiticity_residual(&self) -> f64 {
        debug_assert!(self.is_square());
        (self - &self.adjoint()).frobenius_norm()
    }

    /// ||M^dag M - I||_F.
    pub fn unitarity_residual(&self) -> f64 {
        debug_assert!(self.is_square());
        (&(&self.adjoint() * self) - &CMatrix::identity(self.rows)).frobenius_norm()
    }

    pub fn approx_eq(&self, other: &CMatrix, tol: f64) -> bool {
        self.rows == other.rows && self.cols == other.cols && (self - other).frobenius_norm() <= tol
    }

    /// Matrix-vector product M|v>.
    pub fn apply(&self, v: &CVector) -> CVector {
        assert_eq!(self.cols, v.dim(), "apply: dimension mismatch");
        let out = (0..self.rows)
            .map(|r| {
                (0..self.cols)
                    .map(|c| self.get(r, c) * v.data[c])
                    .sum::<Complex64>()
            })
            .collect();
        CVector::new(out)
    }

    /// <v| M |v>.
    pub fn expectation(&self, v: &CVector) -> Complex64 {
        v.inner(&self.apply(v))
    }

    /// (M + M^dag) / 2.
    pub fn hermitized(&self) -> CMatrix {
        debug_assert!(self.is_square());
        let adj = self.adjoint();
        CMatrix::from_fn(self.rows, self.cols, |r, c| {
            (self.get(r, c) + adj.get(r, c)) * 0.5
        })
    }

    fn require_square(&self) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    fn require_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite)
        }
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "add: shape mismatch"
        );
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "sub: shape mismatch"
        );
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "mul: inner dimension mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..rhs.cols {
                    let v = out.get(r, c) + a * rhs.get(k, c);
                    out.set(r, c, v);
                }
            }
        }
        out
    }
}

/// Dense complex column vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CVector {
    data: Vec<Complex64>,
}

impl CVector {
    pub fn new(data: Vec<Complex64>) -> Self {
        Self { data }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            data: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    /// Computational basis state |index> in the given dimension.
    pub fn basis_state(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.data[index] = Complex64::new(1.0, 0.0);
        v
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn get(&self, i: usize) -> Complex64 {
        self.data[i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: Complex64) {
        self.data[i] = v;
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> CVector {
        let n = self.norm();
        assert!(n > 0.0, "cannot normalize the zero vector");
        CVector {
            data: self.data.iter().map(|z| z / n).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> CVector {
        CVector {
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// <self|other>.
    pub fn inner(&self, other: &CVector) -> Complex64 {
        assert_eq!(self.dim(), other.dim(), "inner: dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// |self><other|.
    pub fn outer(&self, other: &CVector) -> CMatrix {
        CMatrix::from_fn(self.dim(), other.dim(), |r, c| {
            self.data[r] * other.data[c].conj()
        })
    }

    /// Rank-1 projector |self><self| (callers normalize first when needed).
    pub fn projector(&self) -> CMatrix {
        self.outer(self)
    }

    pub fn tensor(&self, other: &CVector) -> CVector {
        let mut data = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.data {
            for b in &other.data {
                data.push(a * b);
            }
        }
        CVector { data }
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Eigendecomposition of a Hermitian matrix: M = V diag(w) V^dag with the
/// real eigenvalues in descending order and orthonormal columns in V.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl EigenDecomposition {
    /// V f(diag) V^dag for an arbitrary complex function of the spectrum.
    pub fn map(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let mut scaled = CMatrix::zeros(n, n);
        for c in 0..n {
            let fv = f(self.eigenvalues[c]);
            for r in 0..n {
                scaled.set(r, c, v.get(r, c) * fv);
            }
        }
        &scaled * &v.adjoint()
    }

    /// V diag(w) V^dag.
    pub fn recompose(&self) -> CMatrix {
        self.map(|w| Complex64::new(w, 0.0))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Column of V for the given eigenvalue rank.
    pub fn eigenvector(&self, k: usize) -> CVector {
        let n = self.eigenvalues.len();
        CVector::new((0..n).map(|r| self.eigenvectors.get(r, k)).collect())
    }
}

fn offdiag_norm(a: &CMatrix) -> f64 {
    let n = a.dim();
    let mut sum = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                sum += a.get(p, q).norm_sqr();
            }
        }
    }
    sum.sqrt()
}

/// Eigendecomposition of a Hermitian matrix via cyclic complex Jacobi
/// rotations. Fails if the input is not Hermitian within [`HERMITICITY_TOL`]
/// relative to max(1, ||M||_F).
pub fn hermitian_eig(m: &CMatrix) -> Result<EigenDecomposition> {
    m.require_square()?;
    m.require_finite()?;
    let n = m.dim();
    let scale = m.frobenius_norm().max(1.0);
    let herm_resid = m.hermiticity_residual();
    if herm_resid > HERMITICITY_TOL * scale {
        return Err(Error::NonHermitian {
            residual: herm_resid,
        });
    }

    let mut a = m.hermitized();
    let mut v = CMatrix::identity(n);
    let mut converged = false;
    let mut last_off = 0.0;
    for _ in 0..JACOBI_MAX_SWEEPS {
        last_off = offdiag_norm(&a);
        if last_off <= JACOBI_OFF_TOL * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let b = a.get(p, q);
                let babs = b.norm();
                if babs == 0.0 {
                    continue;
                }
                let phase = b / babs;
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let tau = (aqq - app) / (2.0 * babs);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    -tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let s_phase = phase * s;

                // columns: right-multiplication by the rotation
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, akp * c + akq * s_phase.conj());
                    a.set(k, q, akq * c - akp * s_phase);
                }
                // rows: left-multiplication by the adjoint rotation
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, apk * c + aqk * s_phase);
                    a.set(q, k, aqk * c - apk * s_phase.conj());
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, vkp * c + vkq * s_phase.conj());
                    v.set(k, q, vkq * c - vkp * s_phase);
                }
            }
        }
    }
    if !converged && offdiag_norm(&a) > 1e-12 * scale {
        return Err(Error::EigNoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
            offdiag: last_off,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap());

    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |r, c| v.get(r, order[c]));
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Hermitian PSD square root. Eigenvalues below clamp_tol in magnitude are
/// clamped to zero before the root (the square root is not Lipschitz at
/// zero, so carrying eigensolver noise through it would cost six orders of
/// precision); anything below -clamp_tol is rejected.
pub fn psd_sqrt(m: &CMatrix, clamp_tol: f64) -> Result<CMatrix> {
    let eig = hermitian_eig(m)?;
    let min = eig.min_eigenvalue();
    if min < -clamp_tol {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    let root = eig.map(|w| {
        let clamped = if w < clamp_tol { 0.0 } else { w };
        Complex64::new(clamped.sqrt(), 0.0)
    });
    Ok(root.hermitized())
}

/// Kronecker product with the row-block convention (A indexes the blocks).
pub fn tensor(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let rows = a.rows() * b.rows();
    let cols = a.cols() * b.cols();
    if rows.max(cols) > MAX_TOTAL_DIM {
        return Err(Error::DimensionOverflow {
            dim: rows.max(cols),
            max: MAX_TOTAL_DIM,
        });
    }
    let mut out = CMatrix::zeros(rows, cols);
    for ar in 0..a.rows() {
        for ac in 0..a.cols() {
            let av = a.get(ar, ac);
            if av.norm_sqr() == 0.0 {
                continue;
            }
            for br in 0..b.rows() {
                for bc in 0..b.cols() {
                    out.set(ar * b.rows() + br, ac * b.cols() + bc, av * b.get(br, bc));
                }
            }
        }
    }
    Ok(out)
}

/// U = exp(-i H dt) with hbar = 1, built from the eigendecomposition of H.
pub fn unitary_from_hamiltonian(h: &CMatrix, dt: f64) -> Result<CMatrix> {
    let eig = hermitian_eig(h)?;
    let u = eig.map(|w| Complex64::from_polar(1.0, -w * dt));
    debug_assert!(u.unitarity_residual() <= 1e-9);
    Ok(u)
}
