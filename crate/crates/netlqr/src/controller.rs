//! Gain synthesis for the decomposed optimal controller, the closed-loop and
//! open-loop control laws, and the three information structures.
//!
//! Synthesis solves one Riccati equation per distinct nonzero eigenvalue of
//! the coupling matrix plus one auxiliary equation; eigendirections that share
//! an eigenvalue share a gain.

use nalgebra::{DMatrix, DVector};

use crate::assumptions::validate_assumptions;
use crate::decomposition::{decompose, DecomposedField};
use crate::error::{Error, Result};
use crate::model::SystemModel;
use crate::riccati::{
    gain_from_solution, interp_samples, solve_are, solve_riccati_ode, LQRData,
};
use crate::spectral::SpectralData;
use crate::tol::Tolerances;
use crate::weights::EffectiveWeights;

/// Time-varying (finite-horizon) or stationary gains for every component.
#[derive(Debug, Clone)]
pub enum GainScheduleKind {
    Finite {
        /// Shared synthesis grid `t_0 = 0 < .. < t_N = T`.
        times: Vec<f64>,
        /// Auxiliary gain samples, one per grid point.
        k_aux: Vec<DMatrix<f64>>,
        /// Per distinct group, gain samples on the same grid.
        k_group: Vec<Vec<DMatrix<f64>>>,
        /// Riccati samples backing the gains; kept for value computations.
        p_aux: Vec<DMatrix<f64>>,
        p_group: Vec<Vec<DMatrix<f64>>>,
    },
    Infinite {
        k_aux: DMatrix<f64>,
        k_group: Vec<DMatrix<f64>>,
        p_aux: DMatrix<f64>,
        p_group: Vec<DMatrix<f64>>,
    },
}

#[derive(Debug, Clone)]
pub struct GainSchedule {
    /// Map from eigen index `l` to its distinct-eigenvalue group.
    pub group_of: Vec<usize>,
    /// Representative eigenvalue per group.
    pub group_eigenvalues: Vec<f64>,
    pub kind: GainScheduleKind,
}

impl GainSchedule {
    pub fn n_groups(&self) -> usize {
        self.group_eigenvalues.len()
    }

    /// Horizon `T` for finite schedules, `None` for stationary ones.
    pub fn horizon(&self) -> Option<f64> {
        match &self.kind {
            GainScheduleKind::Finite { times, .. } => times.last().copied(),
            GainScheduleKind::Infinite { .. } => None,
        }
    }

    /// Auxiliary gain at time `t` (linear interpolation on the grid).
    pub fn k_aux_at(&self, t: f64) -> Result<DMatrix<f64>> {
        match &self.kind {
            GainScheduleKind::Finite { times, k_aux, .. } => interp_samples(times, k_aux, t),
            GainScheduleKind::Infinite { k_aux, .. } => Ok(k_aux.clone()),
        }
    }

    /// Group-`g` gain at time `t`.
    pub fn k_group_at(&self, g: usize, t: f64) -> Result<DMatrix<f64>> {
        match &self.kind {
            GainScheduleKind::Finite { times, k_group, .. } => {
                interp_samples(times, &k_group[g], t)
            }
            GainScheduleKind::Infinite { k_group, .. } => Ok(k_group[g].clone()),
        }
    }

    /// Auxiliary Riccati solution at time `t` (finite schedules only).
    pub fn p_aux_at(&self, t: f64) -> Result<DMatrix<f64>> {
        match &self.kind {
            GainScheduleKind::Finite { times, p_aux, .. } => interp_samples(times, p_aux, t),
            GainScheduleKind::Infinite { p_aux, .. } => Ok(p_aux.clone()),
        }
    }

    /// Group-`g` Riccati solution at time `t`.
    pub fn p_group_at(&self, g: usize, t: f64) -> Result<DMatrix<f64>> {
        match &self.kind {
            GainScheduleKind::Finite { times, p_group, .. } => {
                interp_samples(times, &p_group[g], t)
            }
            GainScheduleKind::Infinite { p_group, .. } => Ok(p_group[g].clone()),
        }
    }
}

/// Effective LQR data of one component: the auxiliary system for
/// `lambda = 0, (q0, r0)`, an eigen group for `(lambda^g, q^g, r^g)`.
fn component_data(model: &SystemModel, lambda: f64, q_w: f64, r_w: f64) -> Result<LQRData> {
    LQRData::new(
        &model.a + &model.d * lambda,
        &model.b + &model.e * lambda,
        &model.q * q_w,
        &model.r * r_w,
        &model.q_t * q_w,
    )
}

/// Synthesize the finite-horizon gains: `L_dist + 1` Riccati ODE solves on a
/// shared grid, then `K^g(t) = (r^g R)^-1 (B + lambda^g E)^T P^g(t)` and
/// `K_breve(t) = (r0 R)^-1 B^T P_breve(t)`.
pub fn synthesize_finite(
    model: &SystemModel,
    spec: &SpectralData,
    weights: &EffectiveWeights,
    horizon: f64,
    step: f64,
    tol: &Tolerances,
) -> Result<GainSchedule> {
    let report = validate_assumptions(model, spec, weights, false, tol)?;
    if !report.finite_ok() {
        return Err(Error::AssumptionViolation(format!(
            "A1: {:?}; A2: {:?}",
            report.a1.details, report.a2.details
        )));
    }

    let aux_data = component_data(model, 0.0, weights.q0, weights.r0)?;
    let aux_sol = solve_riccati_ode(&aux_data, horizon, step, tol)?;
    let times = aux_sol.times.clone();
    let k_aux = aux_sol
        .p
        .iter()
        .map(|p| gain_from_solution(p, &model.b, &model.r, weights.r0))
        .collect::<Result<Vec<_>>>()?;

    let mut k_group = Vec::with_capacity(spec.n_distinct());
    let mut p_group = Vec::with_capacity(spec.n_distinct());
    for g in 0..spec.n_distinct() {
        let lambda = spec.group_eigenvalue(g);
        let data = component_data(model, lambda, weights.q[g], weights.r[g])?;
        let sol = solve_riccati_ode(&data, horizon, step, tol)?;
        let b_eff = &model.b + &model.e * lambda;
        let gains = sol
            .p
            .iter()
            .map(|p| gain_from_solution(p, &b_eff, &model.r, weights.r[g]))
            .collect::<Result<Vec<_>>>()?;
        k_group.push(gains);
        p_group.push(sol.p);
    }

    Ok(GainSchedule {
        group_of: (0..spec.rank()).map(|l| spec.group_of(l)).collect(),
        group_eigenvalues: (0..spec.n_distinct())
            .map(|g| spec.group_eigenvalue(g))
            .collect(),
        kind: GainScheduleKind::Finite {
            times,
            k_aux,
            k_group,
            p_aux: aux_sol.p,
            p_group,
        },
    })
}

/// Synthesize the stationary gains from the algebraic Riccati equations.
///
/// Components whose effective state weight vanishes (within `pd_tol`) carry no
/// state cost at all; their stabilizing solution is `P = 0` with zero gain and
/// no solve is performed.
pub fn synthesize_infinite(
    model: &SystemModel,
    spec: &SpectralData,
    weights: &EffectiveWeights,
    tol: &Tolerances,
) -> Result<GainSchedule> {
    let report = validate_assumptions(model, spec, weights, true, tol)?;
    if !report.infinite_ok() {
        return Err(Error::AssumptionViolation(format!(
            "A1: {:?}; A2: {:?}; A3: {:?}; A4: {:?}",
            report.a1.details, report.a2.details, report.a3.details, report.a4.details
        )));
    }

    let d_x = model.d_x();
    let d_u = model.d_u();
    let solve_component = |lambda: f64, q_w: f64, r_w: f64| -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        if q_w <= tol.pd_tol {
            return Ok((DMatrix::zeros(d_x, d_x), DMatrix::zeros(d_u, d_x)));
        }
        let data = component_data(model, lambda, q_w, r_w)?;
        let are = solve_are(&data, tol)?;
        let b_eff = &model.b + &model.e * lambda;
        let k = gain_from_solution(&are.p, &b_eff, &model.r, r_w)?;
        Ok((are.p, k))
    };

    let (p_aux, k_aux) = solve_component(0.0, weights.q0, weights.r0)?;
    let mut k_group = Vec::with_capacity(spec.n_distinct());
    let mut p_group = Vec::with_capacity(spec.n_distinct());
    for g in 0..spec.n_distinct() {
        let (p, k) = solve_component(spec.group_eigenvalue(g), weights.q[g], weights.r[g])?;
        p_group.push(p);
        k_group.push(k);
    }

    Ok(GainSchedule {
        group_of: (0..spec.rank()).map(|l| spec.group_of(l)).collect(),
        group_eigenvalues: (0..spec.n_distinct())
            .map(|g| spec.group_eigenvalue(g))
            .collect(),
        kind: GainScheduleKind::Infinite {
            k_aux,
            k_group,
            p_aux,
            p_group,
        },
    })
}

/// `u(t) = -K_breve(t) x_breve(t) - sum_l K^{g(l)}(t) x^l(t)` from the live
/// global state.
pub fn control_closed_loop(
    gains: &GainSchedule,
    spec: &SpectralData,
    x: &DMatrix<f64>,
    t: f64,
) -> Result<DMatrix<f64>> {
    let dx = decompose(x, spec)?;
    control_from_components(gains, &dx, t)
}

/// Apply the gains to an already-decomposed state.
pub fn control_from_components(
    gains: &GainSchedule,
    dx: &DecomposedField,
    t: f64,
) -> Result<DMatrix<f64>> {
    let k_aux = gains.k_aux_at(t)?;
    let mut u = -(&k_aux * &dx.auxiliary);
    for (l, part) in dx.eigen.iter().enumerate() {
        let k = gains.k_group_at(gains.group_of[l], t)?;
        u -= k * part;
    }
    Ok(u)
}

/// Transition matrices `Phi(t, 0)` of each component's closed loop.
#[derive(Debug, Clone)]
pub struct TransitionMatrices {
    pub times: Vec<f64>,
    pub phi_aux: Vec<DMatrix<f64>>,
    /// `phi_group[g]` on the shared grid.
    pub phi_group: Vec<Vec<DMatrix<f64>>>,
}

impl TransitionMatrices {
    pub fn phi_aux_at(&self, t: f64) -> Result<DMatrix<f64>> {
        interp_samples(&self.times, &self.phi_aux, t)
    }

    pub fn phi_group_at(&self, g: usize, t: f64) -> Result<DMatrix<f64>> {
        interp_samples(&self.times, &self.phi_group[g], t)
    }
}

/// Integrate `Phi_dot = A_cl(t) Phi`, `Phi(0) = I` with RK4 for the auxiliary
/// closed loop `A - B K_breve(t)` and each group's
/// `A + lambda^g D - (B + lambda^g E) K^g(t)`.
pub fn compute_transitions(
    gains: &GainSchedule,
    model: &SystemModel,
    horizon: f64,
    step: f64,
) -> Result<TransitionMatrices> {
    assert!(horizon > 0.0 && step > 0.0);
    let n_steps = (horizon / step).ceil().max(1.0) as usize;
    let h = horizon / n_steps as f64;
    let d_x = model.d_x();

    let integrate = |a_cl: &dyn Fn(f64) -> Result<DMatrix<f64>>| -> Result<Vec<DMatrix<f64>>> {
        let mut phi = DMatrix::identity(d_x, d_x);
        let mut samples = Vec::with_capacity(n_steps + 1);
        samples.push(phi.clone());
        for k in 0..n_steps {
            let t = k as f64 * h;
            let a0 = a_cl(t)?;
            let a_half = a_cl(t + h / 2.0)?;
            let a1 = a_cl(t + h)?;
            let k1 = &a0 * &phi;
            let k2 = &a_half * (&phi + &k1 * (h / 2.0));
            let k3 = &a_half * (&phi + &k2 * (h / 2.0));
            let k4 = &a1 * (&phi + &k3 * h);
            phi += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            if !phi.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFiniteBlowup { t });
            }
            samples.push(phi.clone());
        }
        Ok(samples)
    };

    let phi_aux = integrate(&|t| Ok(&model.a - &model.b * gains.k_aux_at(t)?))?;
    let mut phi_group = Vec::with_capacity(gains.n_groups());
    for g in 0..gains.n_groups() {
        let lambda = gains.group_eigenvalues[g];
        let a_eff = &model.a + &model.d * lambda;
        let b_eff = &model.b + &model.e * lambda;
        phi_group.push(integrate(&|t| Ok(&a_eff - &b_eff * gains.k_group_at(g, t)?))?);
    }

    Ok(TransitionMatrices {
        times: (0..=n_steps).map(|k| k as f64 * h).collect(),
        phi_aux,
        phi_group,
    })
}

/// Open-loop control from the initial decomposition:
/// `u(t) = -K_breve(t) Phi_breve(t,0) x_breve(0)
///         - sum_l K^{g(l)}(t) Phi^{g(l)}(t,0) x^l(0)`.
pub fn control_open_loop(
    transitions: &TransitionMatrices,
    gains: &GainSchedule,
    init: &DecomposedField,
    t: f64,
) -> Result<DMatrix<f64>> {
    let k_aux = gains.k_aux_at(t)?;
    let phi_aux = transitions.phi_aux_at(t)?;
    let mut u = -(&k_aux * phi_aux * &init.auxiliary);
    for (l, part) in init.eigen.iter().enumerate() {
        let g = gains.group_of[l];
        let k = gains.k_group_at(g, t)?;
        let phi = transitions.phi_group_at(g, t)?;
        u -= k * phi * part;
    }
    Ok(u)
}

/// Which initial-condition data each node receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InformationStructure {
    /// Every node knows the full initial state and all eigendirections.
    Is1,
    /// Every node knows its own initial state and local eigenstates.
    Is2,
    /// Every node knows the eigen aggregates `x(0) v^l`, its own entries of
    /// each eigenvector, and its own initial state.
    Is3,
}

/// Per-node data packet for one information structure.
#[derive(Debug, Clone, Default)]
pub struct NodePacket {
    /// IS1: the full initial state.
    pub full_state: Option<DMatrix<f64>>,
    /// IS2/IS3: this node's initial state `x_i(0)`.
    pub local_state: Option<DVector<f64>>,
    /// IS2: this node's eigenstates `x_i^l(0)`.
    pub local_eigen: Option<Vec<DVector<f64>>>,
    /// IS3: the aggregates `x(0) v^l`.
    pub aggregates: Option<Vec<DVector<f64>>>,
    /// IS3: this node's eigenvector entries `v_i^l`.
    pub eigenvector_entries: Option<Vec<f64>>,
}

/// Build the per-node packets of one information structure.
pub fn prepare_information(
    structure: InformationStructure,
    x0: &DMatrix<f64>,
    spec: &SpectralData,
) -> Result<Vec<NodePacket>> {
    if x0.ncols() != spec.n() {
        return Err(Error::DimensionMismatch(format!(
            "initial state has {} columns, network has {} nodes",
            x0.ncols(),
            spec.n()
        )));
    }
    let n = spec.n();
    let mut packets = vec![NodePacket::default(); n];
    match structure {
        InformationStructure::Is1 => {
            for p in &mut packets {
                p.full_state = Some(x0.clone());
            }
        }
        InformationStructure::Is2 => {
            let dx = decompose(x0, spec)?;
            for (i, p) in packets.iter_mut().enumerate() {
                p.local_state = Some(x0.column(i).into_owned());
                p.local_eigen = Some(
                    dx.eigen
                        .iter()
                        .map(|part| part.column(i).into_owned())
                        .collect(),
                );
            }
        }
        InformationStructure::Is3 => {
            let aggregates: Vec<DVector<f64>> = (0..spec.rank())
                .map(|l| x0 * spec.eigenvector(l))
                .collect();
            for (i, p) in packets.iter_mut().enumerate() {
                p.local_state = Some(x0.column(i).into_owned());
                p.aggregates = Some(aggregates.clone());
                p.eigenvector_entries =
                    Some((0..spec.rank()).map(|l| spec.eigenvector(l)[i]).collect());
            }
        }
    }
    Ok(packets)
}

/// Reassemble the global initial decomposition from per-node packets.
///
/// Every structure carries enough data that the result is identical (up to
/// rounding) to `decompose(x0, spec)`.
pub fn initial_components(
    packets: &[NodePacket],
    structure: InformationStructure,
    spec: &SpectralData,
) -> Result<DecomposedField> {
    let n = spec.n();
    if packets.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} packets for {} nodes",
            packets.len(),
            n
        )));
    }
    match structure {
        InformationStructure::Is1 => {
            let x0 = packets[0]
                .full_state
                .as_ref()
                .ok_or_else(|| Error::MissingInformation("IS1 packet lacks full state".into()))?;
            decompose(x0, spec)
        }
        InformationStructure::Is2 => {
            let d_x = packets[0]
                .local_state
                .as_ref()
                .ok_or_else(|| Error::MissingInformation("IS2 packet lacks local state".into()))?
                .len();
            let mut eigen = vec![DMatrix::zeros(d_x, n); spec.rank()];
            let mut auxiliary = DMatrix::zeros(d_x, n);
            for (i, p) in packets.iter().enumerate() {
                let xi = p.local_state.as_ref().ok_or_else(|| {
                    Error::MissingInformation("IS2 packet lacks local state".into())
                })?;
                let parts = p.local_eigen.as_ref().ok_or_else(|| {
                    Error::MissingInformation("IS2 packet lacks local eigenstates".into())
                })?;
                if parts.len() != spec.rank() {
                    return Err(Error::MissingInformation(format!(
                        "IS2 packet carries {} eigenstates, expected {}",
                        parts.len(),
                        spec.rank()
                    )));
                }
                let mut aux_i = xi.clone();
                for (l, part) in parts.iter().enumerate() {
                    eigen[l].set_column(i, part);
                    aux_i -= part;
                }
                auxiliary.set_column(i, &aux_i);
            }
            Ok(DecomposedField { eigen, auxiliary })
        }
        InformationStructure::Is3 => {
            let d_x = packets[0]
                .local_state
                .as_ref()
                .ok_or_else(|| Error::MissingInformation("IS3 packet lacks local state".into()))?
                .len();
            let mut eigen = vec![DMatrix::zeros(d_x, n); spec.rank()];
            let mut auxiliary = DMatrix::zeros(d_x, n);
            for (i, p) in packets.iter().enumerate() {
                let xi = p.local_state.as_ref().ok_or_else(|| {
                    Error::MissingInformation("IS3 packet lacks local state".into())
                })?;
                let aggregates = p.aggregates.as_ref().ok_or_else(|| {
                    Error::MissingInformation("IS3 packet lacks aggregates".into())
                })?;
                let entries = p.eigenvector_entries.as_ref().ok_or_else(|| {
                    Error::MissingInformation("IS3 packet lacks eigenvector entries".into())
                })?;
                if aggregates.len() != spec.rank() || entries.len() != spec.rank() {
                    return Err(Error::MissingInformation(
                        "IS3 packet eigen data does not match the decomposition rank".into(),
                    ));
                }
                let mut aux_i = xi.clone();
                for l in 0..spec.rank() {
                    let part = &aggregates[l] * entries[l];
                    eigen[l].set_column(i, &part);
                    aux_i -= &part;
                }
                auxiliary.set_column(i, &aux_i);
            }
            Ok(DecomposedField { eigen, auxiliary })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_coupling, kronecker_expand, CouplingKind, GraphSpec};
    use crate::spectral::spectral_decompose;
    use crate::weights::{effective_weights, CostCoupling};
    use nalgebra::dmatrix;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    fn splitmix(state: &mut u64) -> f64 {
        *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (*state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    /// Example-1 style scalar model on the 20-node expanded graph.
    fn example1() -> (SystemModel, SpectralData, EffectiveWeights) {
        let model = SystemModel::deterministic(
            dmatrix![2.0],
            dmatrix![1.0],
            dmatrix![3.0],
            dmatrix![0.5],
            dmatrix![5.0],
            dmatrix![6.0],
            dmatrix![2.0],
        )
        .unwrap();
        let g = GraphSpec::four_cycle(2.0, 1.0);
        let m4 = build_coupling(&g, &CouplingKind::Adjacency, &tols()).unwrap();
        let m20 = kronecker_expand(&m4, 5);
        let spec = spectral_decompose(&m20, &tols()).unwrap();
        let coupling = CostCoupling::Polynomial {
            q: vec![1.0, -2.0, 1.0],
            r: vec![1.0],
        };
        let w = effective_weights(&spec, &coupling).unwrap();
        (model, spec, w)
    }

    #[test]
    fn example1_three_riccati_solves_with_scaled_terminals() {
        let (model, spec, w) = example1();
        assert_eq!(spec.n_distinct(), 2);
        let gains = synthesize_finite(&model, &spec, &w, 2.0, 1e-3, &tols()).unwrap();
        let rho = 10.0f64.sqrt();
        match &gains.kind {
            GainScheduleKind::Finite {
                p_aux, p_group, ..
            } => {
                assert_eq!(p_group.len(), 2);
                assert!((p_aux.last().unwrap()[(0, 0)] - 6.0).abs() < 1e-12);
                // ascending eigenvalues: group 0 is -rho, group 1 is +rho
                assert!(
                    (p_group[0].last().unwrap()[(0, 0)] - (1.0 + rho).powi(2) * 6.0).abs() < 1e-10
                );
                assert!(
                    (p_group[1].last().unwrap()[(0, 0)] - (1.0 - rho).powi(2) * 6.0).abs() < 1e-10
                );
            }
            _ => panic!("expected finite schedule"),
        }
    }

    #[test]
    fn zero_coupling_reduces_to_single_lqr() {
        let model = SystemModel::deterministic(
            dmatrix![0.5],
            dmatrix![1.0],
            dmatrix![0.0],
            dmatrix![0.0],
            dmatrix![1.0],
            dmatrix![1.0],
            dmatrix![1.0],
        )
        .unwrap();
        let m = DMatrix::zeros(3, 3);
        let spec = spectral_decompose(&m, &tols()).unwrap();
        let w = effective_weights(&spec, &CostCoupling::identity()).unwrap();
        let gains = synthesize_finite(&model, &spec, &w, 1.0, 1e-3, &tols()).unwrap();
        assert_eq!(gains.n_groups(), 0);
        // control is plain per-node state feedback
        let x = DMatrix::from_row_slice(1, 3, &[1.0, -2.0, 0.5]);
        let u = control_closed_loop(&gains, &spec, &x, 0.0).unwrap();
        let k = gains.k_aux_at(0.0).unwrap()[(0, 0)];
        for i in 0..3 {
            assert!((u[(0, i)] + k * x[(0, i)]).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_example_auxiliary_is_zero() {
        // A=0.1, B=1, D=E=0, Q=1, Q_T=0, R=0.1, G = L^2: q0 = 0 so the
        // auxiliary Riccati solution vanishes identically
        let model = SystemModel::deterministic(
            dmatrix![0.1],
            dmatrix![1.0],
            dmatrix![0.0],
            dmatrix![0.0],
            dmatrix![1.0],
            dmatrix![0.0],
            dmatrix![0.1],
        )
        .unwrap();
        let m20 = expanded_laplacian();
        let spec = spectral_decompose(&m20, &tols()).unwrap();
        assert_eq!(spec.n_distinct(), 5);
        let coupling = CostCoupling::Polynomial {
            q: vec![0.0, 0.0, 1.0],
            r: vec![1.0],
        };
        let w = effective_weights(&spec, &coupling).unwrap();
        let gains = synthesize_finite(&model, &spec, &w, 2.0, 1e-3, &tols()).unwrap();
        match &gains.kind {
            GainScheduleKind::Finite { p_aux, p_group, .. } => {
                assert_eq!(p_group.len(), 5);
                for p in p_aux {
                    assert_eq!(p[(0, 0)], 0.0);
                }
            }
            _ => panic!("expected finite schedule"),
        }
    }

    /// Laplacian of the 20-node expansion of the 4-node graph.
    fn expanded_laplacian() -> DMatrix<f64> {
        let g = GraphSpec::four_cycle(2.0, 1.0);
        let adj4 = build_coupling(&g, &CouplingKind::Adjacency, &tols()).unwrap();
        let adj20 = kronecker_expand(&adj4, 5);
        let ones = DMatrix::from_element(20, 1, 1.0);
        let deg = &adj20 * ones;
        let mut lap = -adj20;
        for i in 0..20 {
            lap[(i, i)] += deg[(i, 0)];
        }
        lap
    }

    #[test]
    fn infinite_horizon_scalar_identity() {
        // A=0, B=1, Q=R=1, G=H=I: P=1 everywhere, K=1
        let model = SystemModel::deterministic(
            dmatrix![0.0],
            dmatrix![1.0],
            dmatrix![0.0],
            dmatrix![0.0],
            dmatrix![1.0],
            dmatrix![0.0],
            dmatrix![1.0],
        )
        .unwrap();
        let g = GraphSpec::four_cycle(1.0, 1.0);
        let m = build_coupling(&g, &CouplingKind::Adjacency, &tols()).unwrap();
        let spec = spectral_decompose(&m, &tols()).unwrap();
        let w = effective_weights(&spec, &CostCoupling::identity()).unwrap();
        let gains = synthesize_infinite(&model, &spec, &w, &tols()).unwrap();
        match &gains.kind {
            GainScheduleKind::Infinite { k_aux, k_group, .. } => {
                assert!((k_aux[(0, 0)] - 1.0).abs() < 1e-9);
                for k in k_group {
                    assert!((k[(0, 0)] - 1.0).abs() < 1e-9);
                }
            }
            _ => panic!("expected stationary schedule"),
        }
    }

    #[test]
    fn unstabilizable_subsystem_rejected() {
        // A = 1 unstable, B = 0: A3 fails
        let model = SystemModel::deterministic(
            dmatrix![1.0],
            dmatrix![0.0],
            dmatrix![0.0],
            dmatrix![0.0],
            dmatrix![1.0],
            dmatrix![0.0],
            dmatrix![1.0],
        )
        .unwrap();
        let m = DMatrix::zeros(2, 2);
        let spec = spectral_decompose(&m, &tols()).unwrap();
        let w = effective_weights(&spec, &CostCoupling::identity()).unwrap();
        assert!(matches!(
            synthesize_infinite(&model, &spec, &w, &tols()),
            Err(Error::AssumptionViolation(_))
        ));
    }

    #[test]
    fn closed_loop_zero_state_zero_control() {
        let (model, spec, w) = example1();
        let gains = synthesize_finite(&model, &spec, &w, 2.0, 1e-2, &tols()).unwrap();
        let x = DMatrix::zeros(1, 20);
        let u = control_closed_loop(&gains, &spec, &x, 0.5).unwrap();
        assert_eq!(u, DMatrix::zeros(1, 20));
    }

    #[test]
    fn remark_form_of_control_law_agrees() {
        // u_i = -Kb x_i - sum_l (K^l - Kb) x_i^l equals the component form
        let (model, spec, w) = example1();
        let gains = synthesize_finite(&model, &spec, &w, 2.0, 1e-2, &tols()).unwrap();
        let mut state = 3u64;
        let x = DMatrix::from_fn(1, 20, |_, _| splitmix(&mut state));
        let t = 0.7;
        let u = control_closed_loop(&gains, &spec, &x, t).unwrap();
        let dx = decompose(&x, &spec).unwrap();
        let k_aux = gains.k_aux_at(t).unwrap();
        let mut u_alt = -(&k_aux * &x);
        for (l, part) in dx.eigen.iter().enumerate() {
            let k = gains.k_group_at(gains.group_of[l], t).unwrap();
            u_alt -= (k - &k_aux) * part;
        }
        assert!((u - u_alt).norm() < 1e-12 * (1.0 + x.norm()));
    }

    #[test]
    fn out_of_range_time_rejected() {
        let (model, spec, w) = example1();
        let gains = synthesize_finite(&model, &spec, &w, 2.0, 1e-2, &tols()).unwrap();
        let x = DMatrix::zeros(1, 20);
        assert!(matches!(
            control_closed_loop(&gains, &spec, &x, 3.0),
            Err(Error::TimeOutOfRange { .. })
        ));
    }

    #[test]
    fn transition_identity_for_zero_dynamics() {
        let model = SystemModel::deterministic(
            dmatrix![0.0],
            dmatrix![1.0],
            dmatrix![0.0],
            dmatrix![0.0],
            dmatrix![0.0],
            dmatrix![0.0],
            dmatrix![1.0],
        )
        .unwrap();
        let m = DMatrix::zeros(2, 2);
        let spec = spectral_decompose(&m, &tols()).unwrap();
        let w = effective_weights(&spec, &CostCoupling::identity()).unwrap();
        // q0 = 1 but Q = 0 gives K = 0; closed loop is A = 0
        let gains = synthesize_finite(&model, &spec, &w, 1.0, 1e-2, &tols()).unwrap();
        let trans = compute_transitions(&gains, &model, 1.0, 1e-2).unwrap();
        for phi in &trans.phi_aux {
            assert!((phi[(0, 0)] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn transition_matches_matrix_exponential_for_constant_gain() {
        // stationary-gain finite schedule: Phi(t) = exp((A - BK) t)
        let model = SystemModel::deterministic(
            dmatrix![0.3],
            dmatrix![1.0],
            dmatrix![0.0],
            dmatrix![0.0],
            dmatrix![1.0],
            dmatrix![1.2],
            dmatrix![1.0],
        )
        .unwrap();
        let m = DMatrix::zeros(1, 1);
        let spec = spectral_decompose(&m, &tols()).unwrap();
        let w = effective_weights(&spec, &CostCoupling::identity()).unwrap();
        let gains = synthesize_finite(&model, &spec, &w, 1.0, 1e-3, &tols()).unwrap();
        let trans = compute_transitions(&gains, &model, 1.0, 1e-3).unwrap();
        // oracle: scalar ODE x' = (a - k(t)) x integrated with fine RK4
        let mut x = 1.0f64;
        let h = 1e-4;
        let a = 0.3;
        let kf = |t: f64| gains.k_aux_at(t).unwrap()[(0, 0)];
        for step in 0..10_000 {
            let t = step as f64 * h;
            let f = |tt: f64, xx: f64| (a - kf(tt)) * xx;
            let k1 = f(t, x);
            let k2 = f(t + h / 2.0, x + h / 2.0 * k1);
            let k3 = f(t + h / 2.0, x + h / 2.0 * k2);
            let k4 = f(t + h, x + h * k3);
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        let phi_end = trans.phi_aux.last().unwrap()[(0, 0)];
        assert!(
            (phi_end - x).abs() < 1e-8 * (1.0 + x.abs()),
            "phi {phi_end} vs oracle {x}"
        );
    }

    #[test]
    fn open_loop_zero_initial_state() {
        let (model, spec, w) = example1();
        let gains = synthesize_finite(&model, &spec, &w, 2.0, 1e-2, &tols()).unwrap();
        let trans = compute_transitions(&gains, &model, 2.0, 1e-2).unwrap();
        let init = decompose(&DMatrix::zeros(1, 20), &spec).unwrap();
        let u = control_open_loop(&trans, &gains, &init, 1.0).unwrap();
        assert_eq!(u, DMatrix::zeros(1, 20));
    }

    #[test]
    fn information_structures_equivalent() {
        let (_, spec, _) = example1();
        let mut state = 17u64;
        let x0 = DMatrix::from_fn(1, 20, |_, _| splitmix(&mut state));
        let reference = decompose(&x0, &spec).unwrap();
        for structure in [
            InformationStructure::Is1,
            InformationStructure::Is2,
            InformationStructure::Is3,
        ] {
            let packets = prepare_information(structure, &x0, &spec).unwrap();
            let rebuilt = initial_components(&packets, structure, &spec).unwrap();
            assert!(
                (rebuilt.auxiliary - &reference.auxiliary).norm() < 1e-10,
                "{structure:?} auxiliary mismatch"
            );
            for l in 0..spec.rank() {
                assert!(
                    (&rebuilt.eigen[l] - &reference.eigen[l]).norm() < 1e-10,
                    "{structure:?} eigen {l} mismatch"
                );
            }
        }
    }

    #[test]
    fn missing_information_reported() {
        let (_, spec, _) = example1();
        let packets = vec![NodePacket::default(); spec.n()];
        assert!(matches!(
            initial_components(&packets, InformationStructure::Is2, &spec),
            Err(Error::MissingInformation(_))
        ));
    }

    #[test]
    fn single_node_trivial_packet() {
        let m = DMatrix::zeros(1, 1);
        let spec = spectral_decompose(&m, &tols()).unwrap();
        let x0 = DMatrix::from_element(2, 1, 3.0);
        let packets = prepare_information(InformationStructure::Is2, &x0, &spec).unwrap();
        assert_eq!(packets.len(), 1);
        let rebuilt = initial_components(&packets, InformationStructure::Is2, &spec).unwrap();
        assert_eq!(rebuilt.auxiliary, x0);
        assert!(rebuilt.eigen.is_empty());
    }
}
