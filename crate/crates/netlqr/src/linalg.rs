//! Small dense linear-algebra helpers shared by several modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Maximum absolute asymmetry `max_ij |m_ij - m_ji|`.
pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// `(M + M^T) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Spectral (2-)norm of a symmetric matrix: its largest absolute eigenvalue.
pub fn sym_spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0f64, |a, &l| a.max(l.abs()))
}

/// Symmetric square root of a PSD matrix via eigendecomposition.
///
/// Eigenvalues in `(-clamp, 0)` are clamped to zero; anything more negative is
/// an error.
pub fn sqrt_psd(m: &DMatrix<f64>, clamp: f64) -> Result<DMatrix<f64>> {
    let eig = symmetrize(m).symmetric_eigen();
    let scale = 1.0 + eig.eigenvalues.amax();
    let mut roots = DVector::zeros(eig.eigenvalues.len());
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l < -clamp * scale {
            return Err(Error::DimensionMismatch(format!(
                "matrix square root of a non-PSD matrix (eigenvalue {l:.3e})"
            )));
        }
        roots[k] = l.max(0.0).sqrt();
    }
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&roots) * v.transpose())
}

/// Kronecker product `A (x) B`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = DMatrix::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[(i, j)];
            if aij != 0.0 {
                out.view_mut((i * rb, j * cb), (rb, cb)).copy_from(&(b * aij));
            }
        }
    }
    out
}

/// Column-stacking vectorization of a `d x n` matrix.
pub fn vec_of(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_of`]: reshape a `d*n` vector into a `d x n` matrix.
pub fn unvec(v: &DVector<f64>, d: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(d, n, v.as_slice())
}

/// Minimum eigenvalue of a symmetric matrix.
pub fn sym_min_eig(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &l| a.min(l))
}
