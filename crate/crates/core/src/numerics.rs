//! Dense complex linear algebra for tiny matrices and the entropy functionals.
//!
//! Everything in this crate lives in dimension ≤ 4 on the system side and at
//! most d⁴ on Eve's side, so plain row-major storage and a cyclic Jacobi
//! eigensolver are all that is needed.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest row/column count a [`ComplexMatrix`] may have.
pub const MAX_DIM: usize = 1024;
/// Largest dimension accepted by the Hermitian eigensolver.
pub const MAX_EIGEN_DIM: usize = 64;

/// Tolerance for the Hermitian check on eigensolver input.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Weights in `[-WEIGHT_DUST, 0)` are clamped to zero.
pub const WEIGHT_DUST: f64 = 1e-12;
/// Eigenvalues below this are a positivity violation in a density matrix.
pub const POSITIVITY_TOL: f64 = 1e-8;

const JACOBI_OFF_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(
            (1..=MAX_DIM).contains(&rows) && (1..=MAX_DIM).contains(&cols),
            "matrix shape {rows}x{cols} outside 1..={MAX_DIM}"
        );
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c64(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), rows * cols);
        Self::from_fn(rows, cols, |i, j| c64(values[i * cols + j], 0.0))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { c64(values[i], 0.0) } else { c64(0.0, 0.0) })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<Complex64>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        assert!(columns.iter().all(|c| c.len() == rows), "ragged columns");
        Self::from_fn(rows, cols, |i, j| columns[j][i])
    }

    /// Outer product |u⟩⟨v|.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// max |M[i][j] − conj(M[j][i])|; infinite for non-square input.
    pub fn max_asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_asymmetry() <= tol
    }

    fn frobenius_off_diagonal(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    s += self[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    }

    fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// ⟨u|v⟩, conjugate-linear in the first argument.
pub fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// A list of non-negative weights, optionally required to sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbDist {
    weights: Vec<f64>,
}

impl ProbDist {
    /// Accepts sub-normalized weights; numeric dust in `[-1e-12, 0)` is clamped.
    pub fn new(weights: impl IntoIterator<Item = f64>) -> Result<Self> {
        let weights = weights
            .into_iter()
            .enumerate()
            .map(|(index, w)| {
                if w.is_nan() || w < -WEIGHT_DUST {
                    Err(Error::NegativeWeight { index, value: w })
                } else {
                    Ok(w.max(0.0))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { weights })
    }

    /// Like [`ProbDist::new`], and the weights must sum to 1 within 1e-9.
    pub fn normalized(weights: impl IntoIterator<Item = f64>) -> Result<Self> {
        let dist = Self::new(weights)?;
        let total = dist.total();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Degenerate(format!(
                "distribution sums to {total}, expected 1"
            )));
        }
        Ok(dist)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// −Σ w log₂ w in bits, with 0·log 0 = 0.
pub fn shannon_entropy(dist: &ProbDist) -> f64 {
    dist.weights
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| -w * w.log2())
        .sum()
}

/// Shannon entropy of a raw weight list.
pub fn entropy_of(weights: impl IntoIterator<Item = f64>) -> Result<f64> {
    Ok(shannon_entropy(&ProbDist::new(weights)?))
}

/// Binary entropy h(x) = −x log₂ x − (1−x) log₂(1−x); `x` must lie in [0, 1].
pub fn binary_entropy(x: f64) -> f64 {
    debug_assert!((-WEIGHT_DUST..=1.0 + WEIGHT_DUST).contains(&x));
    let x = x.clamp(0.0, 1.0);
    let term = |w: f64| if w > 0.0 { -w * w.log2() } else { 0.0 };
    term(x) + term(1.0 - x)
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Real eigenvalues, descending.
    pub values: Vec<f64>,
    /// Unitary whose columns are the matching eigenvectors.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// ‖M − QΛQ†‖_max.
    pub fn reconstruction_residual(&self, m: &ComplexMatrix) -> f64 {
        let lambda = ComplexMatrix::diagonal(&self.values);
        let rebuilt = &(&self.vectors * &lambda) * &self.vectors.adjoint();
        rebuilt.max_abs_diff(m)
    }
}

fn check_hermitian(m: &ComplexMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if m.rows() > MAX_EIGEN_DIM {
        return Err(Error::DimensionMismatch(format!(
            "eigensolver supports n <= {MAX_EIGEN_DIM}, got {}",
            m.rows()
        )));
    }
    let asymmetry = m.max_asymmetry();
    if asymmetry > HERMITIAN_TOL {
        return Err(Error::NotHermitian { asymmetry });
    }
    Ok(())
}

/// Cyclic Jacobi diagonalization of a Hermitian matrix.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<HermitianEigen> {
    check_hermitian(m)?;
    let n = m.rows();
    let mut a = m.clone();
    // Symmetrize the stored values so round-off asymmetry does not leak into the rotations.
    for i in 0..n {
        a[(i, i)] = c64(a[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius().max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        if a.frobenius_off_diagonal() <= JACOBI_OFF_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let g = apq.norm();
                if g == 0.0 {
                    continue;
                }
                let phase = apq / g;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * g);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // U acts on the (p, q) plane: U_pp = c, U_pq = s, U_qp = -s·conj(φ), U_qq = c·conj(φ).
                let upp = c64(c, 0.0);
                let upq = c64(s, 0.0);
                let uqp = -phase.conj() * s;
                let uqq = phase.conj() * c;

                // A ← A U
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * upp + akq * uqp;
                    a[(k, q)] = akp * upq + akq * uqq;
                }
                // A ← U† A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = upp.conj() * apk + uqp.conj() * aqk;
                    a[(q, k)] = upq.conj() * apk + uqq.conj() * aqk;
                }
                a[(p, q)] = c64(0.0, 0.0);
                a[(q, p)] = c64(0.0, 0.0);
                a[(p, p)] = c64(a[(p, p)].re, 0.0);
                a[(q, q)] = c64(a[(q, q)].re, 0.0);
                // V ← V U
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * upp + vkq * uqp;
                    v[(k, q)] = vkp * upq + vkq * uqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// Eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_eigen(m)?.values)
}

/// S(ρ) in bits.
pub fn von_neumann_entropy(rho: &ComplexMatrix) -> Result<f64> {
    let values = hermitian_eigenvalues(rho)?;
    let trace: f64 = values.iter().sum();
    if (trace - 1.0).abs() > 1e-9 {
        return Err(Error::BadTrace { trace });
    }
    if let Some(&min) = values.iter().min_by(|a, b| a.total_cmp(b)) {
        if min < -POSITIVITY_TOL {
            return Err(Error::NotPositive { eigenvalue: min });
        }
    }
    Ok(shannon_entropy(&ProbDist::new(values.into_iter().map(|v| v.max(0.0)))?))
}

/// Von Neumann entropy of `rho / tr(rho)`; used for unnormalized Gram blocks.
pub fn normalized_entropy(rho: &ComplexMatrix) -> Result<f64> {
    let trace = rho.trace().re;
    if trace <= 0.0 {
        return Err(Error::Degenerate("zero-trace operator".into()));
    }
    von_neumann_entropy(&rho.scale(1.0 / trace))
}
