//! Numerical tolerances used across the crate.
//!
//! The underlying theory assumes exact arithmetic; every floating-point
//! decision (rank, grouping, symmetry, definiteness) is made against one of
//! these thresholds. All of them can be overridden per run.

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    /// Relative eigenvalue cutoff: `lambda` is retained iff
    /// `|lambda| > rank_tol * ||M||_2`.
    pub rank_tol: f64,
    /// Absolute gap for clustering eigenvalues into distinct groups.
    pub group_tol: f64,
    /// Max allowed asymmetry `|m_ij - m_ji|` relative to `||M||`.
    pub sym_tol: f64,
    /// Orthonormality slack for eigenvector checks.
    pub orth_tol: f64,
    /// Slack for positive semi-definiteness checks.
    pub pd_tol: f64,
    /// Scaled residual bound accepted for algebraic Riccati solutions.
    pub are_tol: f64,
    /// Relative singular-value threshold for PBH rank decisions.
    pub pbh_tol: f64,
    /// Eigenvalues of `A` with real part >= `-pbh_margin` are tested by PBH.
    pub pbh_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_tol: 1e-9,
            group_tol: 1e-8,
            sym_tol: 1e-10,
            orth_tol: 1e-8,
            pd_tol: 1e-8,
            are_tol: 1e-9,
            pbh_tol: 1e-8,
            pbh_margin: 1e-10,
        }
    }
}
