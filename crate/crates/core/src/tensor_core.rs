//! Dense complex kernels underneath TEBD: truncated SVD and exponentials of
//! Hermitian bond terms.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::linalg::{SymmetricEigen, SVD};
use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Dense complex matrix. Storage order is nalgebra's; indexing is `(row, col)`.
pub type ComplexMatrix = DMatrix<C64>;

/// Tolerance used when rejecting matrices that should be Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

const SVD_EPS: f64 = f64::EPSILON;

/// Truncated singular value decomposition `m ≈ u · diag(s) · v_dag`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: ComplexMatrix,
    /// Kept singular values, descending.
    pub s: Vec<f64>,
    pub v_dag: ComplexMatrix,
    /// Discarded squared weight relative to the total squared weight.
    pub truncation_weight: f64,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// `u · diag(s) · v_dag`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut us = self.u.clone();
        for (j, &sj) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(sj);
        }
        &us * &self.v_dag
    }
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_row_iterator(rows, cols, entries.iter().map(|&x| c(x, 0.0)))
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn pauli_x() -> ComplexMatrix {
    real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

pub fn pauli_z() -> ComplexMatrix {
    real_matrix(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

/// Kronecker product `a ⊗ b`; the row index of `a` is the most significant.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `max |m - m†|` elementwise.
pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `max |g† g - I|` elementwise.
pub fn unitarity_deviation(g: &ComplexMatrix) -> f64 {
    if !g.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(&(g.adjoint() * g), &identity(g.nrows()))
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Truncated SVD of `m`.
///
/// Singular values whose share of the total squared weight falls below
/// `cutoff` are dropped, then at most `max_rank` are kept; at least one value
/// always survives.
pub fn svd_truncate(m: &ComplexMatrix, max_rank: usize, cutoff: f64) -> Result<SvdResult> {
    if max_rank == 0 {
        return Err(Error::invalid("max_rank must be at least 1"));
    }
    if !(cutoff >= 0.0 && cutoff.is_finite()) {
        return Err(Error::invalid(format!("cutoff must be finite and non-negative, got {cutoff}")));
    }
    if !is_finite(m) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    if m.nrows() == 0 || m.ncols() == 0 || m.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
        return Err(Error::invalid("cannot decompose a zero matrix"));
    }

    let full_rank = m.nrows().min(m.ncols());
    let max_iter = 1000 + 100 * full_rank;
    let svd = SVD::try_new(m.clone(), true, true, SVD_EPS, max_iter)
        .ok_or_else(|| Error::Numeric(format!("SVD of {}x{} matrix did not converge", m.nrows(), m.ncols())))?;
    let u_full = svd.u.expect("u requested");
    let v_full = svd.v_t.expect("v_t requested");
    let s_full: Vec<f64> = svd.singular_values.iter().copied().collect();

    let total: f64 = s_full.iter().map(|s| s * s).sum();
    let mut keep = s_full.iter().take_while(|&&s| s * s / total >= cutoff).count();
    keep = keep.clamp(1, full_rank).min(max_rank);

    let discarded: f64 = s_full[keep..].iter().map(|s| s * s).sum();
    let truncation_weight = (discarded / total).clamp(0.0, 1.0);

    Ok(SvdResult {
        u: u_full.columns(0, keep).into_owned(),
        s: s_full[..keep].to_vec(),
        v_dag: v_full.rows(0, keep).into_owned(),
        truncation_weight,
    })
}

/// Eigen-decomposition of a Hermitian matrix: real eigenvalues and the unitary
/// whose columns are the eigenvectors.
pub fn hermitian_eigen(h: &ComplexMatrix) -> Result<(DVector<f64>, ComplexMatrix)> {
    if !is_finite(h) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let dev = hermitian_deviation(h);
    if dev > HERMITIAN_TOL {
        return Err(Error::invalid(format!("matrix is not Hermitian (deviation {dev:e})")));
    }
    let n = h.nrows();
    let eig = SymmetricEigen::try_new(h.clone(), f64::EPSILON, 1000 + 100 * n)
        .ok_or_else(|| Error::Numeric(format!("eigensolver did not converge for {n}x{n} matrix")))?;
    Ok((eig.eigenvalues, eig.eigenvectors))
}

/// `exp(-i · dt · h)` for Hermitian `h`, built from its eigen-decomposition.
///
/// `dt` is `delta / 2` when `half_step` is set and `delta` otherwise.
pub fn gate_from_bond_term(h_bond: &ComplexMatrix, delta: f64, half_step: bool) -> Result<ComplexMatrix> {
    if !delta.is_finite() {
        return Err(Error::invalid(format!("time step must be finite, got {delta}")));
    }
    let dt = if half_step { 0.5 * delta } else { delta };
    let (evals, evecs) = hermitian_eigen(h_bond)?;
    let mut scaled = evecs.clone();
    for (j, &lambda) in evals.iter().enumerate() {
        let phase = -dt * lambda;
        scaled.column_mut(j).scale_mut_complex(c(libm::cos(phase), libm::sin(phase)));
    }
    Ok(scaled * evecs.adjoint())
}

trait ScaleComplex {
    fn scale_mut_complex(&mut self, z: C64);
}

impl<S> ScaleComplex for nalgebra::Matrix<C64, nalgebra::Dyn, nalgebra::U1, S>
where
    S: nalgebra::StorageMut<C64, nalgebra::Dyn, nalgebra::U1>,
{
    fn scale_mut_complex(&mut self, z: C64) {
        for x in self.iter_mut() {
            *x *= z;
        }
    }
}
