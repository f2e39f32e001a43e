//! Optimal control of network-coupled subsystems via spectral decomposition.
//!
//! A network of `n` identical linear subsystems is coupled through a symmetric
//! matrix `M` (adjacency, Laplacian, or custom) both in the dynamics and in a
//! quadratic cost whose weights are polynomials of `M`. Projecting the global
//! state onto the eigendirections of `M` splits the problem into decoupled
//! low-dimensional LQR problems: one per distinct nonzero eigenvalue plus one
//! auxiliary problem, instead of a single `n*d_x`-dimensional one.
//!
//! The crate provides the decomposition itself ([`decomposition`]), Riccati
//! solvers ([`riccati`]), gain synthesis and the three information structures
//! ([`controller`]), deterministic and stochastic closed-loop simulation with a
//! centralized brute-force oracle ([`simulator`]), and the optimal consensus
//! protocol that falls out of the framework ([`consensus`]).

pub mod assumptions;
pub mod consensus;
pub mod controller;
pub mod decomposition;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod riccati;
pub mod rng;
pub mod simulator;
pub mod spectral;
pub mod tol;
pub mod weights;

pub use error::{Error, Result};
pub use graph::{build_coupling, kronecker_expand, CouplingKind, GraphSpec};
pub use model::SystemModel;
pub use spectral::{spectral_decompose, SpectralData};
pub use tol::Tolerances;
pub use weights::{effective_weights, CostCoupling, EffectiveWeights, SpectralFn};
