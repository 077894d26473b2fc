//! Validated dense complex linear algebra: matrices, density states and
//! projectors.
//!
//! Every matrix handed to a constructor is checked once; after that the
//! values are immutable. Tolerances are absolute and measured in the
//! max-norm (largest entry modulus).

use std::ops::{Add, Mul, Sub};

use nalgebra::{Complex, ComplexField, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Default absolute tolerance for state and projector validation.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Dense complex matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix<T: Real> {
    inner: DMatrix<Complex<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    /// Wraps a nalgebra matrix, rejecting NaN or infinite entries.
    pub fn from_dmatrix(inner: DMatrix<Complex<T>>) -> Result<Self> {
        if inner.nrows() == 0 || inner.ncols() == 0 {
            return Err(Error::EmptyMatrix);
        }
        for c in 0..inner.ncols() {
            for r in 0..inner.nrows() {
                let z = inner[(r, c)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite { row: r, col: c });
                }
            }
        }
        Ok(Self { inner })
    }

    /// Builds a matrix from row-major rows.
    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Result<Self> {
        let nrows = rows.len();
        if nrows == 0 {
            return Err(Error::EmptyMatrix);
        }
        let ncols = rows[0].len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::RaggedRows {
                    row: i,
                    expected: ncols,
                    found: row.len(),
                });
            }
        }
        Self::from_dmatrix(DMatrix::from_fn(nrows, ncols, |r, c| rows[r][c]))
    }

    /// Builds a matrix from row-major `(re, im)` pairs.
    pub fn from_pairs(rows: &[Vec<(f64, f64)>]) -> Result<Self> {
        let rows: Vec<Vec<Complex<T>>> = rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&(re, im)| Complex::new(lit(re), lit(im)))
                    .collect()
            })
            .collect();
        Self::from_rows(&rows)
    }

    /// Real matrix from row-major rows.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<(f64, f64)>> = rows
            .iter()
            .map(|row| row.iter().map(|&x| (x, 0.0)).collect())
            .collect();
        Self::from_pairs(&rows)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            inner: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            inner: DMatrix::zeros(rows, cols),
        }
    }

    /// Real diagonal matrix.
    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        Self {
            inner: DMatrix::from_fn(n, n, |r, c| {
                if r == c {
                    Complex::new(diag[r], T::zero())
                } else {
                    Complex::new(T::zero(), T::zero())
                }
            }),
        }
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalised) ket.
    pub fn outer(ket: &[Complex<T>]) -> Self {
        let n = ket.len();
        Self {
            inner: DMatrix::from_fn(n, n, |r, c| ket[r] * ket[c].conj()),
        }
    }

    pub fn nrows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    /// Side length of a square matrix.
    pub fn dim(&self) -> Result<usize> {
        self.require_square()?;
        Ok(self.nrows())
    }

    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.inner[(row, col)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<Complex<T>> {
        &self.inner
    }

    pub fn into_dmatrix(self) -> DMatrix<Complex<T>> {
        self.inner
    }

    /// Row-major entries.
    pub fn rows(&self) -> Vec<Vec<Complex<T>>> {
        (0..self.nrows())
            .map(|r| (0..self.ncols()).map(|c| self.inner[(r, c)]).collect())
            .collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self {
            inner: self.inner.adjoint(),
        }
    }

    pub fn trace(&self) -> Result<Complex<T>> {
        self.require_square()?;
        Ok(self.inner.trace())
    }

    /// Kronecker product `self ⊗ other`.
    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            inner: self.inner.kronecker(&other.inner),
        }
    }

    pub fn scale(&self, factor: Complex<T>) -> Self {
        Self {
            inner: &self.inner * factor,
        }
    }

    pub fn scale_real(&self, factor: T) -> Self {
        self.scale(Complex::new(factor, T::zero()))
    }

    /// Checked product `self · rhs`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.ncols() != rhs.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.ncols(),
                found: rhs.nrows(),
            });
        }
        Ok(Self {
            inner: &self.inner * &rhs.inner,
        })
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.inner
            .iter()
            .fold(T::zero(), |acc, z| acc.max(z.modulus()))
    }

    /// Max-norm distance to `other`; both must have the same shape.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        debug_assert_eq!(self.inner.shape(), other.inner.shape());
        self.inner
            .iter()
            .zip(other.inner.iter())
            .fold(T::zero(), |acc, (a, b)| acc.max((a - b).modulus()))
    }

    /// `max |M - M†|`.
    pub fn hermitian_deviation(&self) -> Result<T> {
        self.require_square()?;
        Ok(self.max_abs_diff(&self.adjoint()))
    }

    /// `max |M†M - I|`.
    pub fn unitary_deviation(&self) -> Result<T> {
        let d = self.dim()?;
        Ok(Self {
            inner: self.inner.adjoint() * &self.inner,
        }
        .max_abs_diff(&Self::identity(d)))
    }

    /// Eigenvalues of the Hermitian part `½(M + M†)`, ascending.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<T>> {
        self.require_square()?;
        let half: T = lit(0.5);
        let herm = (&self.inner + self.inner.adjoint()) * Complex::new(half, T::zero());
        let mut values: Vec<T> = SymmetricEigen::new(herm)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        Ok(values)
    }

    /// Eigendecomposition of a Hermitian matrix: `(eigenvalues, eigenvectors as columns)`.
    pub(crate) fn hermitian_eigen(&self) -> (Vec<T>, DMatrix<Complex<T>>) {
        let eig = SymmetricEigen::new(self.inner.clone());
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    }

    fn require_square(&self) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::NotSquare {
                rows: self.nrows(),
                cols: self.ncols(),
            })
        }
    }
}

impl<T: Real> Add for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn add(self, rhs: Self) -> ComplexMatrix<T> {
        ComplexMatrix {
            inner: &self.inner + &rhs.inner,
        }
    }
}

impl<T: Real> Sub for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn sub(self, rhs: Self) -> ComplexMatrix<T> {
        ComplexMatrix {
            inner: &self.inner - &rhs.inner,
        }
    }
}

impl<T: Real> Mul for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn mul(self, rhs: Self) -> ComplexMatrix<T> {
        ComplexMatrix {
            inner: &self.inner * &rhs.inner,
        }
    }
}

/// Ordered product `ops[0] · ops[1] · … · ops[k-1]`.
///
/// The leftmost factor is applied last, so chains list the latest time
/// first. An empty product is the identity on `dim`.
pub fn compose<'a, T: Real + 'a>(
    ops: impl IntoIterator<Item = &'a ComplexMatrix<T>>,
    dim: usize,
) -> Result<ComplexMatrix<T>> {
    let mut acc = ComplexMatrix::identity(dim);
    for op in ops {
        if op.nrows() != acc.ncols() {
            return Err(Error::DimensionMismatch {
                expected: acc.ncols(),
                found: op.nrows(),
            });
        }
        acc = ComplexMatrix {
            inner: acc.inner * &op.inner,
        };
    }
    if acc.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: acc.ncols(),
        });
    }
    Ok(acc)
}

pub fn adjoint<T: Real>(m: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    m.adjoint()
}

pub fn trace<T: Real>(m: &ComplexMatrix<T>) -> Result<Complex<T>> {
    m.trace()
}

pub fn tensor<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    a.tensor(b)
}

/// `Tr(A B†)` without forming the product.
pub(crate) fn trace_of_product_with_adjoint<T: Real>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
) -> Complex<T> {
    a.inner
        .iter()
        .zip(b.inner.iter())
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| {
            acc + x * y.conj()
        })
}

/// Density operator: Hermitian, positive semidefinite, unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityState<T: Real> {
    matrix: ComplexMatrix<T>,
}

impl<T: Real> DensityState<T> {
    pub fn new(matrix: ComplexMatrix<T>, tol: T) -> Result<Self> {
        matrix.dim()?;
        let herm = matrix.hermitian_deviation()?;
        if herm > tol {
            return Err(Error::NotHermitian {
                deviation: herm.to_f64_lossy(),
            });
        }
        let min_eig = matrix.hermitian_eigenvalues()?[0];
        if min_eig < -tol {
            return Err(Error::NotPositive {
                min_eigenvalue: min_eig.to_f64_lossy(),
            });
        }
        let dev = (matrix.trace()? - Complex::new(T::one(), T::zero())).modulus();
        if dev > tol {
            return Err(Error::TraceNotOne {
                deviation: dev.to_f64_lossy(),
            });
        }
        Ok(Self { matrix })
    }

    /// Normalised pure state `|ψ⟩⟨ψ| / ⟨ψ|ψ⟩`.
    pub fn pure(ket: &[Complex<T>]) -> Result<Self> {
        let norm2 = ket.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
        if ket.is_empty() || norm2 <= T::zero() {
            return Err(Error::EmptyMatrix);
        }
        let m = ComplexMatrix::outer(ket).scale_real(T::one() / norm2);
        Self::new(ComplexMatrix::from_dmatrix(m.inner)?, lit(DEFAULT_TOL))
    }

    /// `I / d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        let w = T::one() / lit::<T>(dim as f64);
        Self {
            matrix: ComplexMatrix::identity(dim).scale_real(w),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_trusted(matrix: ComplexMatrix<T>) -> Self {
        Self { matrix }
    }
}

/// Orthogonal projector: Hermitian and idempotent.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector<T: Real> {
    matrix: ComplexMatrix<T>,
}

impl<T: Real> Projector<T> {
    pub fn new(matrix: ComplexMatrix<T>, tol: T) -> Result<Self> {
        matrix.dim()?;
        let herm = matrix.hermitian_deviation()?;
        if herm > tol {
            return Err(Error::NotHermitian {
                deviation: herm.to_f64_lossy(),
            });
        }
        let idem = (&matrix * &matrix).max_abs_diff(&matrix);
        if idem > tol {
            return Err(Error::NotIdempotent {
                deviation: idem.to_f64_lossy(),
            });
        }
        Ok(Self { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim),
        }
    }

    /// Rank-one projector onto the normalised ket.
    pub fn onto(ket: &[Complex<T>]) -> Result<Self> {
        let norm2 = ket.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
        if ket.is_empty() || norm2 <= T::zero() {
            return Err(Error::EmptyMatrix);
        }
        let m = ComplexMatrix::outer(ket).scale_real(T::one() / norm2);
        Self::new(ComplexMatrix::from_dmatrix(m.inner)?, lit(DEFAULT_TOL))
    }

    /// Projector onto the computational basis vectors listed in `indices`.
    pub fn basis(dim: usize, indices: &[usize]) -> Result<Self> {
        let mut diag = vec![T::zero(); dim];
        for &i in indices {
            if i >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: i + 1,
                });
            }
            diag[i] = T::one();
        }
        Ok(Self {
            matrix: ComplexMatrix::from_diagonal(&diag),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    /// Rank, read off the trace.
    pub fn rank(&self) -> usize {
        let tr = self.matrix.inner.trace().re;
        tr.round().to_usize().unwrap_or(0)
    }

    pub(crate) fn from_trusted(matrix: ComplexMatrix<T>) -> Self {
        Self { matrix }
    }
}

/// Validates `m` as a density state.
pub fn make_state<T: Real>(m: ComplexMatrix<T>, tol: T) -> Result<DensityState<T>> {
    DensityState::new(m, tol)
}

/// Validates `m` as a projector.
pub fn make_projector<T: Real>(m: ComplexMatrix<T>, tol: T) -> Result<Projector<T>> {
    Projector::new(m, tol)
}
