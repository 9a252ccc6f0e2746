//! Dense complex linear algebra on finite-dimensional Hilbert spaces.
//!
//! Everything here is a thin value layer over `nalgebra` dense matrices. The
//! target problem sizes are small (system and apparatus each at most 8
//! dimensional), so no sparse or structured storage is attempted.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QmeasError, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Eigenvalues closer than this are grouped into one spectral projector.
pub const DEGENERACY_GAP: f64 = 1e-9;

/// Numerical tolerances shared by every check in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Algebraic identities (unitarity, Hermiticity, exact zeros).
    pub tol_alg: f64,
    /// Saturation band for inequality reports.
    pub tol_rel: f64,
}

impl Tolerances {
    pub fn new(tol_alg: f64, tol_rel: f64) -> Result<Self> {
        let ok = tol_alg > 0.0 && tol_alg <= tol_rel && tol_rel < 1.0;
        if !ok {
            return Err(QmeasError::InvalidTolerances { tol_alg, tol_rel });
        }
        Ok(Self { tol_alg, tol_rel })
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_alg: 1e-10,
            tol_rel: 1e-8,
        }
    }
}

/// Square root of a radicand that may have drifted slightly negative.
///
/// Values in `[-tol, 0)` clamp to zero; anything below is reported as a fault.
pub fn sqrt_clamped(radicand: f64, tol: f64) -> Result<f64> {
    if radicand >= 0.0 {
        Ok(radicand.sqrt())
    } else if radicand >= -tol {
        Ok(0.0)
    } else {
        Err(QmeasError::NegativeRadicand(radicand))
    }
}

/// A dense square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexOperator {
    m: DMatrix<C64>,
}

impl ComplexOperator {
    /// Builds an operator from row-major entries.
    pub fn from_row_major(dim: usize, entries: &[C64]) -> Result<Self> {
        if dim == 0 {
            return Err(QmeasError::Validation("operator dimension must be positive".into()));
        }
        if entries.len() != dim * dim {
            return Err(QmeasError::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Ok(Self {
            m: DMatrix::from_row_slice(dim, dim, entries),
        })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        let entries: Vec<C64> = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| C64::new(x, 0.0)))
            .collect();
        Self::from_row_major(dim, &entries)
    }

    /// Wraps an existing matrix. Panics if it is not square.
    pub fn from_matrix(m: DMatrix<C64>) -> Self {
        assert!(m.is_square(), "operator matrix must be square");
        Self { m }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let d = DVector::from_iterator(values.len(), values.iter().map(|&v| C64::new(v, 0.0)));
        Self {
            m: DMatrix::from_diagonal(&d),
        }
    }

    /// |v⟩⟨w|
    pub fn outer(v: &DVector<C64>, w: &DVector<C64>) -> Self {
        Self { m: v * w.adjoint() }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.m[(row, col)]
    }

    pub fn row_major(&self) -> Vec<C64> {
        let d = self.dim();
        (0..d)
            .flat_map(|r| (0..d).map(move |c| (r, c)))
            .map(|(r, c)| self.m[(r, c)])
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        Self { m: self.m.adjoint() }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { m: &self.m * factor }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    /// Frobenius inner product Tr(X†Y).
    pub fn inner(&self, other: &Self) -> C64 {
        self.m.dotc(&other.m)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        let gram = self.m.adjoint() * &self.m;
        let eig = SymmetricEigen::new(gram);
        eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max).max(0.0).sqrt()
    }

    /// Largest absolute entry of `X - X†`.
    pub fn hermiticity_defect(&self) -> f64 {
        max_abs(&(&self.m - self.m.adjoint()))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Largest absolute entry of `U†U - I`.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.dim();
        max_abs(&(self.m.adjoint() * &self.m - DMatrix::<C64>::identity(d, d)))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs(&(&self.m - &other.m))
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.m * v
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Eigen-decomposition of a Hermitian operator, eigenvalues ascending.
    ///
    /// Columns of the returned matrix are the matching orthonormal eigenvectors.
    pub fn eigh(&self) -> Result<(Vec<f64>, DMatrix<C64>)> {
        let defect = self.hermiticity_defect();
        if defect > 1e-8 * (1.0 + self.frobenius_norm()) {
            return Err(QmeasError::NotHermitian(defect));
        }
        let herm = (&self.m + self.m.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(herm);
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_columns(
            &order
                .iter()
                .map(|&k| eig.eigenvectors.column(k).into_owned())
                .collect::<Vec<_>>(),
        );
        Ok((values, vectors))
    }

    /// Sorted eigenvalues of a Hermitian operator.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eigh()?.0)
    }

    /// Applies a real function to the spectrum of a Hermitian operator.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> C64) -> Result<Self> {
        let (vals, vecs) = self.eigh()?;
        let d = DVector::from_iterator(vals.len(), vals.iter().map(|&v| f(v)));
        Ok(Self {
            m: &vecs * DMatrix::from_diagonal(&d) * vecs.adjoint(),
        })
    }

    /// `exp(i·self)` for a Hermitian generator.
    pub fn exp_i(&self) -> Result<Self> {
        self.map_spectrum(|v| C64::from_polar(1.0, v))
    }
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl Add for &ComplexOperator {
    type Output = ComplexOperator;
    fn add(self, rhs: &ComplexOperator) -> ComplexOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        ComplexOperator { m: &self.m + &rhs.m }
    }
}

impl Sub for &ComplexOperator {
    type Output = ComplexOperator;
    fn sub(self, rhs: &ComplexOperator) -> ComplexOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        ComplexOperator { m: &self.m - &rhs.m }
    }
}

impl Mul for &ComplexOperator {
    type Output = ComplexOperator;
    fn mul(self, rhs: &ComplexOperator) -> ComplexOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        ComplexOperator { m: &self.m * &rhs.m }
    }
}

impl Neg for &ComplexOperator {
    type Output = ComplexOperator;
    fn neg(self) -> ComplexOperator {
        ComplexOperator { m: -&self.m }
    }
}

/// A normalized complex vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amps: DVector<C64>,
}

impl PureState {
    /// Accepts amplitudes whose norm is 1 within `1e-10`.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(QmeasError::Validation("state dimension must be positive".into()));
        }
        let v = DVector::from_vec(amps);
        let n = v.norm();
        if !n.is_finite() {
            return Err(QmeasError::NonFinite("state amplitudes"));
        }
        if (n - 1.0).abs() > 1e-10 {
            return Err(QmeasError::NotNormalized(n));
        }
        Ok(Self { amps: v })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let v = DVector::from_vec(amps);
        let n = v.norm();
        if !n.is_finite() {
            return Err(QmeasError::NonFinite("state amplitudes"));
        }
        if n == 0.0 || v.is_empty() {
            return Err(QmeasError::NotNormalized(n));
        }
        Ok(Self { amps: v / C64::new(n, 0.0) })
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index out of range");
        let mut v = DVector::zeros(dim);
        v[k] = ONE;
        Self { amps: v }
    }

    pub fn plus_z() -> Self {
        Self::basis(2, 0)
    }

    pub fn minus_z() -> Self {
        Self::basis(2, 1)
    }

    pub fn plus_x() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            amps: DVector::from_vec(vec![C64::new(h, 0.0), C64::new(h, 0.0)]),
        }
    }

    pub fn plus_y() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            amps: DVector::from_vec(vec![C64::new(h, 0.0), C64::new(0.0, h)]),
        }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    /// ⟨self|other⟩
    pub fn overlap(&self, other: &Self) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            amps: self.amps.kronecker(&other.amps),
        }
    }
}

pub fn sigma_x() -> ComplexOperator {
    ComplexOperator::from_row_major(2, &[ZERO, ONE, ONE, ZERO]).unwrap()
}

pub fn sigma_y() -> ComplexOperator {
    ComplexOperator::from_row_major(2, &[ZERO, -I, I, ZERO]).unwrap()
}

pub fn sigma_z() -> ComplexOperator {
    ComplexOperator::diagonal(&[1.0, -1.0])
}

/// cos φ σx + sin φ σy
pub fn sigma_phi(phi: f64) -> ComplexOperator {
    &sigma_x().scale_real(phi.cos()) + &sigma_y().scale_real(phi.sin())
}

/// Kronecker product X ⊗ Y.
pub fn tensor(x: &ComplexOperator, y: &ComplexOperator) -> ComplexOperator {
    ComplexOperator {
        m: x.m.kronecker(&y.m),
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(QmeasError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// ⟨s|X|s⟩
pub fn expectation(x: &ComplexOperator, s: &PureState) -> Result<C64> {
    check_dim(x.dim(), s.dim())?;
    Ok(s.amps.dotc(&(&x.m * &s.amps)))
}

/// ⟨a|X|b⟩ on raw (possibly unnormalized) vectors.
pub fn matrix_element(a: &DVector<C64>, x: &ComplexOperator, b: &DVector<C64>) -> C64 {
    a.dotc(&(&x.m * b))
}

pub fn commutator(x: &ComplexOperator, y: &ComplexOperator) -> Result<ComplexOperator> {
    check_dim(x.dim(), y.dim())?;
    Ok(&(x * y) - &(y * x))
}

pub fn anticommutator(x: &ComplexOperator, y: &ComplexOperator) -> Result<ComplexOperator> {
    check_dim(x.dim(), y.dim())?;
    Ok(&(x * y) + &(y * x))
}

/// Standard deviation of a Hermitian observable in a pure state.
///
/// Evaluated as the norm of `(X - ⟨X⟩)|s⟩`, which equals
/// `(⟨X²⟩ - ⟨X⟩²)^{1/2}` without cancellation in the radicand.
pub fn dispersion(x: &ComplexOperator, s: &PureState) -> Result<f64> {
    check_dim(x.dim(), s.dim())?;
    let defect = x.hermiticity_defect();
    if defect > 1e-10 * (1.0 + x.frobenius_norm()) {
        return Err(QmeasError::NotHermitian(defect));
    }
    Ok(centered_residual(x, &s.amps).norm())
}

pub(crate) fn centered_residual(x: &ComplexOperator, v: &DVector<C64>) -> DVector<C64> {
    let xv = &x.m * v;
    let mean = v.dotc(&xv).re;
    xv - v * C64::new(mean, 0.0)
}

/// Rebuilds ⟨s1|A|s2⟩ from the four diagonal matrix elements of the
/// polarization identity and returns the absolute deviation from the
/// direct evaluation.
pub fn polarization_check(acal: &ComplexOperator, s1: &PureState, s2: &PureState) -> Result<f64> {
    check_dim(acal.dim(), s1.dim())?;
    check_dim(acal.dim(), s2.dim())?;
    let (a, b) = (&s1.amps, &s2.amps);
    Ok((polarization_reconstruct(acal, a, b) - matrix_element(a, acal, b)).norm())
}

/// ¼{⟨a+b|A|a+b⟩ − ⟨a−b|A|a−b⟩ − i⟨a+ib|A|a+ib⟩ + i⟨a−ib|A|a−ib⟩}
pub fn polarization_reconstruct(acal: &ComplexOperator, a: &DVector<C64>, b: &DVector<C64>) -> C64 {
    let diag = |v: DVector<C64>| matrix_element(&v, acal, &v);
    let ib = b * I;
    let sum = diag(a + b) - diag(a - b) - I * diag(a + &ib) + I * diag(a - &ib);
    sum * 0.25
}

/// One eigenspace of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct SpectralProjector {
    pub eigenvalue: f64,
    pub projector: ComplexOperator,
}

/// Spectral decomposition with degenerate eigenvalues grouped.
pub fn projectors_of(x: &ComplexOperator) -> Result<Vec<SpectralProjector>> {
    let (vals, vecs) = x.eigh()?;
    let d = x.dim();
    let mut out: Vec<SpectralProjector> = Vec::new();
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && vals[end] - vals[start] < DEGENERACY_GAP {
            end += 1;
        }
        let block = vecs.columns(start, end - start);
        let projector = ComplexOperator::from_matrix(block * block.adjoint());
        let eigenvalue = vals[start..end].iter().sum::<f64>() / (end - start) as f64;
        out.push(SpectralProjector { eigenvalue, projector });
        start = end;
    }
    Ok(out)
}
