//! Graph specifications and symmetric coupling matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::tol::Tolerances;

/// An undirected weighted graph given as an edge list.
///
/// Node indices are 1-based, matching the usual notation for networks of
/// subsystems. Self-loops are permitted. Repeated edges accumulate.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl GraphSpec {
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        assert!(n > 0, "node count must be positive");
        for &(i, j, _) in &edges {
            if i == 0 || j == 0 || i > n || j > n {
                return Err(Error::IndexOutOfRange { i, j, n });
            }
        }
        Ok(Self { n, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Weighted adjacency matrix `W` induced by the edge list.
    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(self.n, self.n);
        for &(i, j, weight) in &self.edges {
            let (i, j) = (i - 1, j - 1);
            w[(i, j)] += weight;
            if i != j {
                w[(j, i)] += weight;
            }
        }
        w
    }

    /// The 4-node cycle 1-2-3-4-1 with alternating edge weights `a` and `b`:
    /// edges (1,2,a), (2,3,a), (3,4,b), (4,1,b).
    pub fn four_cycle(a: f64, b: f64) -> Self {
        Self::new(4, vec![(1, 2, a), (2, 3, a), (3, 4, b), (4, 1, b)]).expect("static edges")
    }

    /// Complete graph on `n` nodes, self-loops included, every weight `1/n`.
    /// Its adjacency matrix is the mean-field coupling `(1/n) * ones`.
    pub fn complete_mean_field(n: usize) -> Self {
        let w = 1.0 / n as f64;
        let mut edges = Vec::new();
        for i in 1..=n {
            for j in i..=n {
                edges.push((i, j, w));
            }
        }
        Self::new(n, edges).expect("static edges")
    }
}

/// Which symmetric coupling matrix to derive from the graph.
#[derive(Debug, Clone, PartialEq)]
pub enum CouplingKind {
    Adjacency,
    Laplacian,
    Custom(DMatrix<f64>),
}

/// Build the coupling matrix `M` for a graph.
///
/// `Adjacency` returns `W`, `Laplacian` returns `diag(W 1) - W`, and `Custom`
/// returns the given matrix after a symmetry check.
pub fn build_coupling(
    graph: &GraphSpec,
    kind: &CouplingKind,
    tol: &Tolerances,
) -> Result<DMatrix<f64>> {
    match kind {
        CouplingKind::Adjacency => Ok(graph.adjacency()),
        CouplingKind::Laplacian => {
            let w = graph.adjacency();
            let degrees = &w * DMatrix::from_element(graph.n(), 1, 1.0);
            let mut m = -w;
            for i in 0..graph.n() {
                m[(i, i)] += degrees[(i, 0)];
            }
            Ok(m)
        }
        CouplingKind::Custom(m) => {
            if m.nrows() != graph.n() || m.ncols() != graph.n() {
                return Err(Error::DimensionMismatch(format!(
                    "custom coupling is {}x{} but the graph has {} nodes",
                    m.nrows(),
                    m.ncols(),
                    graph.n()
                )));
            }
            let asym = linalg::max_asymmetry(m);
            let scale = 1.0 + m.norm();
            if asym > tol.sym_tol * scale {
                return Err(Error::AsymmetricCustomMatrix {
                    max_asym: asym,
                    tol: tol.sym_tol * scale,
                });
            }
            Ok(linalg::symmetrize(m))
        }
    }
}

/// Expand a coupling matrix to a network of `c` copies per node:
/// `M (x) K_c` with `K_c = (1/c) * ones(c, c)`.
///
/// The nonzero eigenvalues of the result equal those of `M`, so the
/// decomposed Riccati equations are unchanged while the network grows.
pub fn kronecker_expand(m: &DMatrix<f64>, c: usize) -> DMatrix<f64> {
    assert!(c >= 1, "expansion factor must be at least 1");
    let k_c = DMatrix::from_element(c, c, 1.0 / c as f64);
    linalg::kron(m, &k_c)
}
