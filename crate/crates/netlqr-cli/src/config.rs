//! TOML experiment configuration and its conversion into library types.

use nalgebra::DMatrix;
use serde::Deserialize;

use netlqr::{CostCoupling, CouplingKind, GraphSpec, SpectralFn, SystemModel, Tolerances};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Default run mode; the subcommand always takes precedence.
    pub mode: Option<String>,
    pub graph: GraphConfig,
    #[serde(default)]
    pub coupling: CouplingConfig,
    #[serde(default)]
    pub cost: CostConfig,
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub horizon: HorizonConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub consensus: Option<ConsensusConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphConfig {
    /// The 4-node cycle with alternating edge weights.
    Fig3 { a: f64, b: f64 },
    /// The 4-node cycle expanded by a complete graph on `c` nodes.
    Kron { a: f64, b: f64, c: usize },
    /// Complete graph with every weight `1/n` (mean-field coupling).
    Complete { n: usize },
    /// Explicit weighted edge list over nodes `1..=n`.
    Edges {
        n: usize,
        edges: Vec<(usize, usize, f64)>,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    #[serde(default)]
    pub kind: CouplingKindConfig,
}

#[derive(Debug, Default, Deserialize, Clone, Copy, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum CouplingKindConfig {
    #[default]
    Adjacency,
    Laplacian,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    /// Polynomial coefficients of `G` in `M`, lowest degree first.
    pub q_poly: Option<Vec<f64>>,
    /// Polynomial coefficients of `H` in `M`, lowest degree first.
    pub r_poly: Option<Vec<f64>>,
    /// Named spectral function for `G` (`exp` or `inverse`, with `gamma`).
    pub f_g: Option<SpectralFnConfig>,
    pub f_h: Option<SpectralFnConfig>,
}

#[derive(Debug, Deserialize, Clone, Copy)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectralFnConfig {
    Exp { gamma: f64 },
    Inverse { gamma: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    pub e: Vec<Vec<f64>>,
    pub f: Option<Vec<Vec<f64>>>,
    pub q: Vec<Vec<f64>>,
    pub q_t: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonConfig {
    #[serde(default)]
    pub kind: HorizonKind,
    /// Horizon of the finite-horizon problem.
    pub t: Option<f64>,
    /// Simulation length; defaults to `t` (finite) or 10 (infinite).
    pub t_sim: Option<f64>,
}

impl Default for HorizonConfig {
    fn default() -> Self {
        Self {
            kind: HorizonKind::Finite,
            t: None,
            t_sim: None,
        }
    }
}

#[derive(Debug, Default, Deserialize, Clone, Copy, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum HorizonKind {
    #[default]
    Finite,
    Infinite,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Riccati synthesis grid step.
    pub step: Option<f64>,
    /// Simulation step; defaults to `step`.
    pub dt: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    pub n_paths: Option<usize>,
    /// Explicit initial state, `d_x` rows of `n` entries; drawn from the
    /// seed when absent.
    pub x0: Option<Vec<Vec<f64>>>,
    pub rank_tol: Option<f64>,
    pub group_tol: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step: None,
            dt: None,
            seed: 0,
            n_paths: None,
            x0: None,
            rank_tol: None,
            group_tol: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsensusConfig {
    pub q: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
}

pub fn parse_config(path: &std::path::Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::validation(format!("invalid config {}: {e}", path.display())))
}

pub fn to_dmatrix(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>, CliError> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(CliError::validation(format!("matrix {name} is empty")));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(CliError::validation(format!(
            "matrix {name} has ragged rows"
        )));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), cols, &flat))
}

impl ExperimentConfig {
    pub fn tolerances(&self) -> Tolerances {
        let mut tol = Tolerances::default();
        if let Some(v) = self.solver.rank_tol {
            tol.rank_tol = v;
        }
        if let Some(v) = self.solver.group_tol {
            tol.group_tol = v;
        }
        tol
    }

    pub fn graph_spec(&self) -> Result<GraphSpec, CliError> {
        match &self.graph {
            GraphConfig::Fig3 { a, b } => Ok(GraphSpec::four_cycle(*a, *b)),
            GraphConfig::Kron { a, b, c } => {
                if *c == 0 {
                    return Err(CliError::validation("graph.c must be positive".into()));
                }
                let base = [(1usize, 2usize, *a), (2, 3, *a), (3, 4, *b), (4, 1, *b)];
                let mut edges = Vec::new();
                for (i, j, w) in base {
                    for k in 0..*c {
                        for l in 0..*c {
                            edges.push(((i - 1) * c + k + 1, (j - 1) * c + l + 1, w / *c as f64));
                        }
                    }
                }
                Ok(GraphSpec::new(4 * c, edges)?)
            }
            GraphConfig::Complete { n } => Ok(GraphSpec::complete_mean_field(*n)),
            GraphConfig::Edges { n, edges } => Ok(GraphSpec::new(*n, edges.clone())?),
        }
    }

    pub fn coupling_kind(&self) -> CouplingKind {
        match self.coupling.kind {
            CouplingKindConfig::Adjacency => CouplingKind::Adjacency,
            CouplingKindConfig::Laplacian => CouplingKind::Laplacian,
        }
    }

    pub fn cost_coupling(&self) -> Result<CostCoupling, CliError> {
        let spectral = |c: &SpectralFnConfig| match c {
            SpectralFnConfig::Exp { gamma } => SpectralFn::Exp { gamma: *gamma },
            SpectralFnConfig::Inverse { gamma } => SpectralFn::Inverse { gamma: *gamma },
        };
        match (
            &self.cost.q_poly,
            &self.cost.r_poly,
            &self.cost.f_g,
            &self.cost.f_h,
        ) {
            (None, None, None, None) => Ok(CostCoupling::identity()),
            (q, r, None, None) => Ok(CostCoupling::Polynomial {
                q: q.clone().unwrap_or_else(|| vec![1.0]),
                r: r.clone().unwrap_or_else(|| vec![1.0]),
            }),
            (None, None, Some(f_g), Some(f_h)) => Ok(CostCoupling::SpectralFunction {
                f_g: spectral(f_g),
                f_h: spectral(f_h),
            }),
            _ => Err(CliError::validation(
                "cost must use either q_poly/r_poly or f_g/f_h, not a mix".into(),
            )),
        }
    }

    pub fn system_model(&self) -> Result<SystemModel, CliError> {
        let m = self
            .model
            .as_ref()
            .ok_or_else(|| CliError::validation("missing [model] section".into()))?;
        let a = to_dmatrix("model.a", &m.a)?;
        let d_x = a.nrows();
        let f = match &m.f {
            Some(rows) => to_dmatrix("model.f", rows)?,
            None => DMatrix::zeros(d_x, d_x),
        };
        Ok(SystemModel::new(
            a,
            to_dmatrix("model.b", &m.b)?,
            to_dmatrix("model.d", &m.d)?,
            to_dmatrix("model.e", &m.e)?,
            f,
            to_dmatrix("model.q", &m.q)?,
            to_dmatrix("model.q_t", &m.q_t)?,
            to_dmatrix("model.r", &m.r)?,
        )?)
    }

    /// Synthesis horizon for the finite setup.
    pub fn horizon_t(&self) -> Result<f64, CliError> {
        match self.horizon.kind {
            HorizonKind::Finite => self
                .horizon
                .t
                .filter(|t| *t > 0.0)
                .ok_or_else(|| CliError::validation("missing positive horizon.t".into())),
            HorizonKind::Infinite => Err(CliError::validation(
                "horizon.t is only meaningful for the finite setup".into(),
            )),
        }
    }

    pub fn t_sim(&self) -> f64 {
        self.horizon
            .t_sim
            .or(match self.horizon.kind {
                HorizonKind::Finite => self.horizon.t,
                HorizonKind::Infinite => Some(10.0),
            })
            .unwrap_or(10.0)
    }

    pub fn step(&self) -> f64 {
        self.solver.step.unwrap_or(1e-3)
    }

    pub fn dt(&self) -> f64 {
        self.solver.dt.or(self.solver.step).unwrap_or(1e-3)
    }

    /// Initial state: explicit matrix or standard normal entries drawn from
    /// the seed.
    pub fn initial_state(&self, d_x: usize, n: usize, seed: u64) -> Result<DMatrix<f64>, CliError> {
        match &self.solver.x0 {
            Some(rows) => {
                let x0 = to_dmatrix("solver.x0", rows)?;
                if x0.nrows() != d_x || x0.ncols() != n {
                    return Err(CliError::validation(format!(
                        "solver.x0 is {}x{}, expected {d_x}x{n}",
                        x0.nrows(),
                        x0.ncols()
                    )));
                }
                Ok(x0)
            }
            None => Ok(DMatrix::from_fn(d_x, n, |c, i| {
                netlqr::rng::gaussian(seed, u64::MAX, i as u64, 0, c as u64)
            })),
        }
    }
}
