//! Optimal consensus as a special case of the decomposed framework.
//!
//! Single-integrator nodes `x_i_dot = u_i` on a connected graph with
//! Laplacian coupling in the state cost (`G = M^2`) and identity coupling in
//! the control cost reduce to the protocol
//! `u_i = -R^-1 Pi sum_j w_ij (x_i - x_j)` where `Pi` solves
//! `Pi R^-1 Pi = Q`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{build_coupling, CouplingKind, GraphSpec};
use crate::linalg;
use crate::model::SystemModel;
use crate::spectral::{spectral_decompose, SpectralData};
use crate::tol::Tolerances;

/// A consensus problem instance: connected weighted graph plus the positive
/// definite cost matrices.
#[derive(Debug, Clone)]
pub struct ConsensusSetup {
    pub graph: GraphSpec,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    laplacian: DMatrix<f64>,
    spec: SpectralData,
}

impl ConsensusSetup {
    /// Validate connectivity (Laplacian zero eigenvalue is simple) and
    /// positive definiteness of `Q` and `R`.
    pub fn new(
        graph: GraphSpec,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        tol: &Tolerances,
    ) -> Result<Self> {
        let laplacian = build_coupling(&graph, &CouplingKind::Laplacian, tol)?;
        let spec = spectral_decompose(&laplacian, tol)?;
        if spec.rank() != graph.n() - 1 {
            return Err(Error::AssumptionViolation(format!(
                "graph is not connected: Laplacian rank {} < {}",
                spec.rank(),
                graph.n() - 1
            )));
        }
        for (name, m) in [("Q", &q), ("R", &r)] {
            let scale = 1.0 + m.norm();
            if linalg::max_asymmetry(m) > tol.sym_tol * scale
                || linalg::sym_min_eig(m) <= tol.pd_tol * scale
            {
                return Err(Error::AssumptionViolation(format!(
                    "{name} must be symmetric positive definite"
                )));
            }
        }
        if q.shape() != r.shape() {
            return Err(Error::DimensionMismatch(format!(
                "Q is {}x{}, R is {}x{}",
                q.nrows(),
                q.ncols(),
                r.nrows(),
                r.ncols()
            )));
        }
        Ok(Self {
            graph,
            q,
            r,
            laplacian,
            spec,
        })
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    pub fn spectral_data(&self) -> &SpectralData {
        &self.spec
    }

    /// The framework's model for this instance:
    /// `A = 0, B = I, D = E = 0, Q_T = 0`.
    pub fn system_model(&self) -> SystemModel {
        let d = self.q.nrows();
        SystemModel::deterministic(
            DMatrix::zeros(d, d),
            DMatrix::identity(d, d),
            DMatrix::zeros(d, d),
            DMatrix::zeros(d, d),
            self.q.clone(),
            DMatrix::zeros(d, d),
            self.r.clone(),
        )
        .expect("consensus model dimensions are consistent by construction")
    }
}

/// The protocol gain matrix `Pi` with its defining residual.
#[derive(Debug, Clone)]
pub struct ConsensusGain {
    pub pi: DMatrix<f64>,
    /// `R^-1 Pi`, the matrix applied to the neighborhood disagreement.
    pub protocol_gain: DMatrix<f64>,
}

/// Solve `Pi R^-1 Pi = Q` for the symmetric PSD `Pi`:
/// `Pi = R^1/2 (R^-1/2 Q R^-1/2)^1/2 R^1/2`.
pub fn solve_pi(q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<ConsensusGain> {
    if q.shape() != r.shape() || q.nrows() != q.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "Q is {}x{}, R is {}x{}",
            q.nrows(),
            q.ncols(),
            r.nrows(),
            r.ncols()
        )));
    }
    let r_eig = linalg::symmetrize(r).symmetric_eigen();
    if r_eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(Error::NotPositiveDefiniteR);
    }
    let v = &r_eig.eigenvectors;
    let r_half = v * DMatrix::from_diagonal(&r_eig.eigenvalues.map(f64::sqrt)) * v.transpose();
    let r_half_inv =
        v * DMatrix::from_diagonal(&r_eig.eigenvalues.map(|l| 1.0 / l.sqrt())) * v.transpose();
    let inner = linalg::sqrt_psd(&(&r_half_inv * q * &r_half_inv), 1e-12)?;
    let pi = linalg::symmetrize(&(&r_half * inner * &r_half));
    let chol = r.clone().cholesky().ok_or(Error::NotPositiveDefiniteR)?;
    let protocol_gain = chol.solve(&pi);
    Ok(ConsensusGain { pi, protocol_gain })
}

/// The consensus protocol `u_i = -R^-1 Pi sum_j w_ij (x_i - x_j)`.
///
/// In matrix form `sum_j w_ij (x_i - x_j)` is the `i`-th column of `x L`, so
/// the whole field is `u = -(R^-1 Pi) x L`.
pub fn consensus_control(
    setup: &ConsensusSetup,
    gain: &ConsensusGain,
    x: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if x.ncols() != setup.graph.n() || x.nrows() != setup.q.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "state is {}x{}, expected {}x{}",
            x.nrows(),
            x.ncols(),
            setup.q.nrows(),
            setup.graph.n()
        )));
    }
    Ok(-(&gain.protocol_gain * (x * &setup.laplacian)))
}

/// Maximum pairwise disagreement `max_ij |x_i - x_j|`.
pub fn disagreement(x: &DMatrix<f64>) -> f64 {
    let n = x.ncols();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((x.column(i) - x.column(j)).norm());
        }
    }
    worst
}
