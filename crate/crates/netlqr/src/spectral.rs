//! Spectral factorization of the coupling matrix and distinct-eigenvalue
//! grouping.
//!
//! `M = sum_l lambda^l v^l (v^l)^T` over the retained (nonzero) eigenvalues.
//! Eigendirections with equal eigenvalues share one Riccati equation, so the
//! grouping determines how many solves downstream synthesis performs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::tol::Tolerances;

/// Rank-`L` eigendecomposition of a symmetric coupling matrix.
#[derive(Debug, Clone)]
pub struct SpectralData {
    n: usize,
    /// Retained nonzero eigenvalues, sorted ascending.
    eigenvalues: Vec<f64>,
    /// Unit eigenvectors, aligned with `eigenvalues`; the first component of
    /// magnitude above a fixed threshold is made positive.
    eigenvectors: Vec<DVector<f64>>,
    /// Partition of `0..L` into classes of (numerically) equal eigenvalues.
    groups: Vec<Vec<usize>>,
    /// `group_of[l]` is the group index of eigenvalue `l`.
    group_of: Vec<usize>,
    tol: Tolerances,
}

impl SpectralData {
    /// Network size `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Rank `L`: number of retained nonzero eigenvalues.
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `L_dist`: number of distinct nonzero eigenvalues.
    pub fn n_distinct(&self) -> usize {
        self.groups.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvector(&self, l: usize) -> &DVector<f64> {
        &self.eigenvectors[l]
    }

    pub fn eigenvectors(&self) -> &[DVector<f64>] {
        &self.eigenvectors
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group_of(&self, l: usize) -> usize {
        self.group_of[l]
    }

    /// Representative eigenvalue of group `g` (mean of its members).
    pub fn group_eigenvalue(&self, g: usize) -> f64 {
        let members = &self.groups[g];
        members.iter().map(|&l| self.eigenvalues[l]).sum::<f64>() / members.len() as f64
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// `sum_l lambda^l v^l (v^l)^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (l, v) in self.eigenvectors.iter().enumerate() {
            m += (v * v.transpose()) * self.eigenvalues[l];
        }
        m
    }
}

/// Compute the retained spectral data of a symmetric matrix.
///
/// Eigenvalues with `|lambda| <= rank_tol * ||M||_2` are dropped; the rest are
/// sorted ascending and clustered into groups by single-linkage with gap
/// `group_tol`.
pub fn spectral_decompose(m: &DMatrix<f64>, tol: &Tolerances) -> Result<SpectralData> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "coupling matrix must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    let asym = linalg::max_asymmetry(m);
    let scale = 1.0 + m.norm();
    if asym > tol.sym_tol * scale {
        return Err(Error::AsymmetricInput {
            max_asym: asym,
            tol: tol.sym_tol * scale,
        });
    }

    let eig = linalg::symmetrize(m).symmetric_eigen();
    let norm2 = eig.eigenvalues.amax();
    let cutoff = tol.rank_tol * norm2;

    let mut pairs: Vec<(f64, DVector<f64>)> = Vec::new();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() > cutoff {
            pairs.push((lambda, eig.eigenvectors.column(k).into_owned()));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut eigenvalues = Vec::with_capacity(pairs.len());
    let mut eigenvectors = Vec::with_capacity(pairs.len());
    for (lambda, mut v) in pairs {
        fix_sign(&mut v);
        eigenvalues.push(lambda);
        eigenvectors.push(v);
    }

    // single-linkage grouping on the sorted eigenvalue list
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of = vec![0usize; eigenvalues.len()];
    for l in 0..eigenvalues.len() {
        let start_new = match groups.last() {
            Some(g) => {
                let prev = eigenvalues[*g.last().expect("nonempty group")];
                eigenvalues[l] - prev > tol.group_tol
            }
            None => true,
        };
        if start_new {
            groups.push(vec![l]);
        } else {
            groups.last_mut().expect("just checked").push(l);
        }
        group_of[l] = groups.len() - 1;
    }

    Ok(SpectralData {
        n,
        eigenvalues,
        eigenvectors,
        groups,
        group_of,
        tol: tol.clone(),
    })
}

/// Flip the vector so its first component of magnitude above 1e-10 is
/// positive. Gains depend only on eigenvalues, but a deterministic basis keeps
/// outputs reproducible.
fn fix_sign(v: &mut DVector<f64>) {
    for &x in v.iter() {
        if x.abs() > 1e-10 {
            if x < 0.0 {
                *v = -&*v;
            }
            return;
        }
    }
}
