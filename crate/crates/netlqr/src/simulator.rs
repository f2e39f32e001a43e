//! Closed-loop network simulation (deterministic and stochastic), cost
//! evaluation, noise decomposition, the analytic stochastic value, and the
//! centralized brute-force oracle.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::controller::{
    control_from_components, control_open_loop, GainSchedule, GainScheduleKind,
    TransitionMatrices,
};
use crate::decomposition::{decompose, instantaneous_cost, DecomposedField};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::SystemModel;
use crate::riccati::{gain_from_solution, solve_riccati_ode, LQRData};
use crate::rng;
use crate::spectral::SpectralData;
use crate::tol::Tolerances;
use crate::weights::EffectiveWeights;

/// Time-sampled global states and controls.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `x(t_k)`, each `d_x x n`.
    pub states: Vec<DMatrix<f64>>,
    /// `u(t_k)`, each `d_u x n`.
    pub controls: Vec<DMatrix<f64>>,
}

impl Trajectory {
    pub fn n(&self) -> usize {
        self.states[0].ncols()
    }

    pub fn final_state(&self) -> &DMatrix<f64> {
        self.states.last().expect("nonempty trajectory")
    }
}

/// Per-node cost contributions of each decomposed component.
#[derive(Debug, Clone)]
pub struct CostBreakdown {
    /// `J_breve_i` per node.
    pub aux: Vec<f64>,
    /// `J^l_i`: `eigen[l][i]`.
    pub eigen: Vec<Vec<f64>>,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.aux.iter().sum::<f64>()
            + self.eigen.iter().flat_map(|v| v.iter()).sum::<f64>()
    }
}

#[derive(Debug, Clone)]
pub struct CostReport {
    /// Trapezoidal integral of the running cost.
    pub running: f64,
    /// Terminal cost `<x(T), Q_T x(T)>_G`.
    pub terminal: f64,
    pub total: f64,
    pub breakdown: Option<CostBreakdown>,
}

/// How controls are produced during simulation.
pub enum ControlLaw<'a> {
    /// Live state feedback through the decomposed gains.
    Closed {
        gains: &'a GainSchedule,
        spec: &'a SpectralData,
    },
    /// Pure open loop from the initial decomposition and transition matrices.
    Open {
        gains: &'a GainSchedule,
        transitions: &'a TransitionMatrices,
        init: DecomposedField,
    },
    /// Eigen terms open loop, auxiliary term from the live local state:
    /// `x_breve_i(t) = x_i(t) - sum_l Phi^l(t,0) x_i^l(0)`.
    Mixed {
        gains: &'a GainSchedule,
        transitions: &'a TransitionMatrices,
        init: DecomposedField,
    },
}

impl ControlLaw<'_> {
    /// Control field at time `t` given the current state.
    pub fn control(&self, x: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
        match self {
            ControlLaw::Closed { gains, spec } => {
                let dx = decompose(x, spec)?;
                control_from_components(gains, &dx, t)
            }
            ControlLaw::Open {
                gains,
                transitions,
                init,
            } => control_open_loop(transitions, gains, init, t),
            ControlLaw::Mixed {
                gains,
                transitions,
                init,
            } => {
                let k_aux = gains.k_aux_at(t)?;
                // open-loop eigen states, live auxiliary remainder
                let mut aux = x.clone();
                let mut u = DMatrix::zeros(k_aux.nrows(), x.ncols());
                for (l, part0) in init.eigen.iter().enumerate() {
                    let g = gains.group_of[l];
                    let phi = transitions.phi_group_at(g, t)?;
                    let part = phi * part0;
                    let k = gains.k_group_at(g, t)?;
                    u -= k * &part;
                    aux -= &part;
                }
                u -= k_aux * aux;
                Ok(u)
            }
        }
    }

    fn gains(&self) -> &GainSchedule {
        match self {
            ControlLaw::Closed { gains, .. }
            | ControlLaw::Open { gains, .. }
            | ControlLaw::Mixed { gains, .. } => gains,
        }
    }
}

/// Check that the simulation grid refines the gain grid by an integer factor
/// and stays inside the synthesis horizon.
fn check_grid(law: &ControlLaw, horizon: f64, dt: f64) -> Result<()> {
    if let GainScheduleKind::Finite { times, .. } = &law.gains().kind {
        let t_gain = *times.last().expect("nonempty gain grid");
        if horizon > t_gain + 1e-9 * (1.0 + t_gain) {
            return Err(Error::GridMismatch(format!(
                "simulation horizon {horizon} exceeds the gain horizon {t_gain}"
            )));
        }
        let gain_step = times[1] - times[0];
        let ratio = gain_step / dt;
        if (ratio - ratio.round()).abs() > 1e-6 || ratio < 1.0 - 1e-9 {
            return Err(Error::GridMismatch(format!(
                "dt = {dt} does not refine the gain step {gain_step}"
            )));
        }
    }
    Ok(())
}

/// `x_dot = A x + B u + D x M + E u M`.
fn dynamics_rhs(
    model: &SystemModel,
    m: &DMatrix<f64>,
    x: &DMatrix<f64>,
    u: &DMatrix<f64>,
) -> DMatrix<f64> {
    &model.a * x + &model.b * u + &model.d * (x * m) + &model.e * (u * m)
}

/// RK4 simulation of the coupled network under the given control law.
pub fn simulate_deterministic(
    model: &SystemModel,
    m: &DMatrix<f64>,
    law: &ControlLaw,
    x0: &DMatrix<f64>,
    horizon: f64,
    dt: f64,
) -> Result<Trajectory> {
    assert!(horizon > 0.0 && dt > 0.0);
    check_grid(law, horizon, dt)?;
    let n_steps = (horizon / dt).round().max(1.0) as usize;
    let h = horizon / n_steps as f64;

    let mut x = x0.clone();
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut controls = Vec::with_capacity(n_steps + 1);
    states.push(x.clone());
    controls.push(law.control(&x, 0.0)?);

    for k in 0..n_steps {
        let t = k as f64 * h;
        let u0 = law.control(&x, t)?;
        let k1 = dynamics_rhs(model, m, &x, &u0);

        let x2 = &x + &k1 * (h / 2.0);
        let u_half = law.control(&x2, t + h / 2.0)?;
        let k2 = dynamics_rhs(model, m, &x2, &u_half);

        let x3 = &x + &k2 * (h / 2.0);
        let u_half2 = law.control(&x3, t + h / 2.0)?;
        let k3 = dynamics_rhs(model, m, &x3, &u_half2);

        let x4 = &x + &k3 * h;
        let u1 = law.control(&x4, t + h)?;
        let k4 = dynamics_rhs(model, m, &x4, &u1);

        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteBlowup { t });
        }
        let t_next = (k + 1) as f64 * h;
        controls.push(law.control(&x, t_next)?);
        states.push(x.clone());
    }

    Ok(Trajectory {
        times: (0..=n_steps).map(|k| k as f64 * h).collect(),
        states,
        controls,
    })
}

/// One path's Brownian increments.
#[derive(Debug, Clone)]
pub struct NoisePath {
    pub times: Vec<f64>,
    /// Increment over `[t_k, t_k + dt)`, each `d_w x n`.
    pub increments: Vec<DMatrix<f64>>,
    pub seed: u64,
    pub path_index: u64,
}

/// Draw the increments of one path: independent `N(0, dt)` per scalar
/// component, keyed by `(seed, path, node, step, component)`.
pub fn draw_noise_path(
    seed: u64,
    path_index: u64,
    d_w: usize,
    n: usize,
    horizon: f64,
    dt: f64,
) -> NoisePath {
    let n_steps = (horizon / dt).round().max(1.0) as usize;
    let h = horizon / n_steps as f64;
    let scale = h.sqrt();
    let increments = (0..n_steps)
        .map(|k| {
            DMatrix::from_fn(d_w, n, |c, i| {
                scale * rng::gaussian(seed, path_index, i as u64, k as u64, c as u64)
            })
        })
        .collect();
    NoisePath {
        times: (0..n_steps).map(|k| k as f64 * h).collect(),
        increments,
        seed,
        path_index,
    }
}

/// Eigen/auxiliary split of every increment of a noise path.
pub fn decompose_noise(path: &NoisePath, spec: &SpectralData) -> Result<Vec<DecomposedField>> {
    path.increments
        .iter()
        .map(|dw| decompose(dw, spec))
        .collect()
}

/// Monte Carlo ensemble statistics plus one retained sample path.
#[derive(Debug, Clone)]
pub struct StochasticEnsemble {
    /// Total cost of each path, indexed by path number.
    pub path_costs: Vec<f64>,
    pub mean: f64,
    /// Standard error of the mean.
    pub std_error: f64,
    /// Trajectory of path 0.
    pub sample: Trajectory,
}

/// Euler-Maruyama simulation of `n_paths` independent paths.
///
/// Deterministic models (`F = 0`) are stepped with the same RK4 scheme as
/// [`simulate_deterministic`], so every path reproduces the deterministic
/// trajectory exactly. Paths run in parallel; the reduction order is fixed by
/// path index, so results are reproducible for a given `(seed, n_paths, dt)`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_stochastic(
    model: &SystemModel,
    m: &DMatrix<f64>,
    g: &DMatrix<f64>,
    h_mat: &DMatrix<f64>,
    law: &ControlLaw,
    x0: &DMatrix<f64>,
    horizon: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
) -> Result<StochasticEnsemble> {
    assert!(n_paths >= 1);
    check_grid(law, horizon, dt)?;
    if model.is_deterministic() {
        let traj = simulate_deterministic(model, m, law, x0, horizon, dt)?;
        let report = evaluate_cost(&traj, g, h_mat, &model.q, &model.r, &model.q_t)?;
        return Ok(StochasticEnsemble {
            path_costs: vec![report.total; n_paths],
            mean: report.total,
            std_error: 0.0,
            sample: traj,
        });
    }

    let run_path = |path: u64| -> Result<(f64, Option<Trajectory>)> {
        let noise = draw_noise_path(seed, path, model.d_w(), x0.ncols(), horizon, dt);
        let traj = euler_maruyama(model, m, law, x0, horizon, dt, &noise)?;
        let report = evaluate_cost(&traj, g, h_mat, &model.q, &model.r, &model.q_t)?;
        let keep = if path == 0 { Some(traj) } else { None };
        Ok((report.total, keep))
    };

    let results: Vec<Result<(f64, Option<Trajectory>)>> = (0..n_paths as u64)
        .into_par_iter()
        .map(run_path)
        .collect();

    let mut path_costs = Vec::with_capacity(n_paths);
    let mut sample = None;
    for r in results {
        let (cost, traj) = r?;
        path_costs.push(cost);
        if let Some(t) = traj {
            sample = Some(t);
        }
    }
    let mean = path_costs.iter().sum::<f64>() / n_paths as f64;
    let var = if n_paths > 1 {
        path_costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n_paths - 1) as f64
    } else {
        0.0
    };
    let std_error = (var / n_paths as f64).sqrt();

    Ok(StochasticEnsemble {
        path_costs,
        mean,
        std_error,
        sample: sample.expect("path 0 retained"),
    })
}

/// One Euler-Maruyama path driven by explicit increments.
pub fn euler_maruyama(
    model: &SystemModel,
    m: &DMatrix<f64>,
    law: &ControlLaw,
    x0: &DMatrix<f64>,
    horizon: f64,
    dt: f64,
    noise: &NoisePath,
) -> Result<Trajectory> {
    let n_steps = noise.increments.len();
    let h = horizon / n_steps as f64;
    if (h - dt).abs() > 1e-9 * (1.0 + dt) {
        return Err(Error::GridMismatch(format!(
            "noise path step {h} does not match dt = {dt}"
        )));
    }
    let mut x = x0.clone();
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut controls = Vec::with_capacity(n_steps + 1);
    states.push(x.clone());
    controls.push(law.control(&x, 0.0)?);
    for k in 0..n_steps {
        let t = k as f64 * h;
        let u = law.control(&x, t)?;
        x += dynamics_rhs(model, m, &x, &u) * h + &model.f * &noise.increments[k];
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteBlowup { t });
        }
        controls.push(law.control(&x, (k + 1) as f64 * h)?);
        states.push(x.clone());
    }
    Ok(Trajectory {
        times: (0..=n_steps).map(|k| k as f64 * h).collect(),
        states,
        controls,
    })
}

/// Trapezoidal running cost plus terminal cost of a trajectory.
pub fn evaluate_cost(
    traj: &Trajectory,
    g: &DMatrix<f64>,
    h_mat: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    q_t: &DMatrix<f64>,
) -> Result<CostReport> {
    let n_samples = traj.times.len();
    let mut running = 0.0;
    let mut prev = instantaneous_cost(&traj.states[0], &traj.controls[0], g, h_mat, q, r)?;
    for k in 1..n_samples {
        let cur = instantaneous_cost(&traj.states[k], &traj.controls[k], g, h_mat, q, r)?;
        running += 0.5 * (prev + cur) * (traj.times[k] - traj.times[k - 1]);
        prev = cur;
    }
    let x_t = traj.final_state();
    let terminal = crate::decomposition::weighted_inner(x_t, &(q_t * x_t), g)?;
    Ok(CostReport {
        running,
        terminal,
        total: running + terminal,
        breakdown: None,
    })
}

/// Cost of a trajectory with the per-node, per-component breakdown of the
/// decomposed form `J = sum_i [J_breve_i + sum_l J^l_i]`.
pub fn evaluate_cost_decomposed(
    traj: &Trajectory,
    spec: &SpectralData,
    weights: &EffectiveWeights,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    q_t: &DMatrix<f64>,
) -> Result<CostReport> {
    if weights.q.len() != spec.n_distinct() {
        return Err(Error::MismatchedSpectralData(format!(
            "weights carry {} groups, spectral data has {}",
            weights.q.len(),
            spec.n_distinct()
        )));
    }
    let n = traj.n();
    let rank = spec.rank();
    let mut aux = vec![0.0f64; n];
    let mut eigen = vec![vec![0.0f64; n]; rank];

    // per-node instantaneous contributions at one sample
    let contributions = |x: &DMatrix<f64>, u: &DMatrix<f64>, w_q: &DMatrix<f64>, w_r: &DMatrix<f64>|
     -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let dx = decompose(x, spec)?;
        let du = decompose(u, spec)?;
        let mut c_aux = vec![0.0f64; n];
        let mut c_eig = vec![vec![0.0f64; n]; rank];
        for i in 0..n {
            let xi = dx.auxiliary.column(i);
            let ui = du.auxiliary.column(i);
            c_aux[i] = weights.q0 * (xi.transpose() * w_q * xi)[(0, 0)]
                + weights.r0 * (ui.transpose() * w_r * ui)[(0, 0)];
            for l in 0..rank {
                let gidx = spec.group_of(l);
                let xl = dx.eigen[l].column(i);
                let ul = du.eigen[l].column(i);
                c_eig[l][i] = weights.q[gidx] * (xl.transpose() * w_q * xl)[(0, 0)]
                    + weights.r[gidx] * (ul.transpose() * w_r * ul)[(0, 0)];
            }
        }
        Ok((c_aux, c_eig))
    };

    let n_samples = traj.times.len();
    let mut prev = contributions(&traj.states[0], &traj.controls[0], q, r)?;
    for k in 1..n_samples {
        let cur = contributions(&traj.states[k], &traj.controls[k], q, r)?;
        let w = 0.5 * (traj.times[k] - traj.times[k - 1]);
        for i in 0..n {
            aux[i] += w * (prev.0[i] + cur.0[i]);
            for l in 0..rank {
                eigen[l][i] += w * (prev.1[l][i] + cur.1[l][i]);
            }
        }
        prev = cur;
    }
    let running = aux.iter().sum::<f64>()
        + eigen.iter().flat_map(|v| v.iter()).sum::<f64>();

    // terminal term: decomposed quadratic in Q_T with zero control weight
    let x_t = traj.final_state();
    let dx_t = decompose(x_t, spec)?;
    let mut terminal = 0.0;
    for i in 0..n {
        let xi = dx_t.auxiliary.column(i);
        let c = weights.q0 * (xi.transpose() * q_t * xi)[(0, 0)];
        aux[i] += c;
        terminal += c;
        for l in 0..rank {
            let gidx = spec.group_of(l);
            let xl = dx_t.eigen[l].column(i);
            let c = weights.q[gidx] * (xl.transpose() * q_t * xl)[(0, 0)];
            eigen[l][i] += c;
            terminal += c;
        }
    }
    Ok(CostReport {
        running,
        terminal,
        total: running + terminal,
        breakdown: Some(CostBreakdown { aux, eigen }),
    })
}

/// Analytic optimal value of the stochastic problem.
#[derive(Debug, Clone)]
pub struct StochasticValue {
    pub total: f64,
    /// `V_breve_i` per node.
    pub aux: Vec<f64>,
    /// `V^l_i`: `eigen[l][i]`.
    pub eigen: Vec<Vec<f64>>,
}

/// Evaluate the closed-form optimal value
/// `V_breve_i = x_breve_i(0)^T P_breve(0) x_breve_i(0)
///            + [1 - sum_l (v_i^l)^2] int_0^T tr(P_breve(t) F F^T) dt`,
/// `V^l_i = x^l_i(0)^T P^l(0) x^l_i(0)
///        + (v_i^l)^2 int_0^T tr(P^l(t) F F^T) dt`,
/// with trapezoidal trace integrals on the Riccati grid.
pub fn stochastic_value(
    model: &SystemModel,
    gains: &GainSchedule,
    spec: &SpectralData,
    x0: &DMatrix<f64>,
) -> Result<StochasticValue> {
    let (times, p_aux, p_group) = match &gains.kind {
        GainScheduleKind::Finite {
            times,
            p_aux,
            p_group,
            ..
        } => (times, p_aux, p_group),
        GainScheduleKind::Infinite { .. } => return Err(Error::MissingRiccatiSamples),
    };
    let ff_t = &model.f * model.f.transpose();
    let trace_integral = |samples: &[DMatrix<f64>]| -> f64 {
        let mut acc = 0.0;
        let mut prev = (&samples[0] * &ff_t).trace();
        for k in 1..samples.len() {
            let cur = (&samples[k] * &ff_t).trace();
            acc += 0.5 * (prev + cur) * (times[k] - times[k - 1]);
            prev = cur;
        }
        acc
    };
    let trace_aux = trace_integral(p_aux);
    let trace_group: Vec<f64> = p_group.iter().map(|s| trace_integral(s)).collect();

    let dx0 = decompose(x0, spec)?;
    let n = spec.n();
    let rank = spec.rank();
    let p_aux0 = &p_aux[0];
    let mut aux = vec![0.0f64; n];
    let mut eigen = vec![vec![0.0f64; n]; rank];
    for i in 0..n {
        let sum_v2: f64 = (0..rank).map(|l| spec.eigenvector(l)[i].powi(2)).sum();
        let xi = dx0.auxiliary.column(i);
        aux[i] = (xi.transpose() * p_aux0 * xi)[(0, 0)] + (1.0 - sum_v2) * trace_aux;
        for l in 0..rank {
            let g = spec.group_of(l);
            let xl = dx0.eigen[l].column(i);
            let v_il = spec.eigenvector(l)[i];
            eigen[l][i] =
                (xl.transpose() * &p_group[g][0] * xl)[(0, 0)] + v_il * v_il * trace_group[g];
        }
    }
    let total = aux.iter().sum::<f64>() + eigen.iter().flat_map(|v| v.iter()).sum::<f64>();
    Ok(StochasticValue { total, aux, eigen })
}

/// Centralized brute-force LQR on the `n d_x`-dimensional vectorized system.
///
/// Builds `A_big = I (x) A + M (x) D`, `B_big = I (x) B + M (x) E`,
/// `Q_big = G (x) Q`, `R_big = H (x) R`, `QT_big = G (x) Q_T`, solves the full
/// Riccati ODE with the same integrator settings as the decomposed path, and
/// simulates the optimal centralized closed loop.
#[allow(clippy::too_many_arguments)]
pub fn centralized_oracle(
    model: &SystemModel,
    m: &DMatrix<f64>,
    g: &DMatrix<f64>,
    h_mat: &DMatrix<f64>,
    x0: &DMatrix<f64>,
    horizon: f64,
    synth_step: f64,
    dt: f64,
    tol: &Tolerances,
) -> Result<(CostReport, Trajectory)> {
    let n = m.nrows();
    let d_x = model.d_x();
    let size = n * d_x;
    const LIMIT: usize = 400;
    if size > LIMIT {
        return Err(Error::TooLarge { size, limit: LIMIT });
    }

    let eye = DMatrix::identity(n, n);
    let a_big = linalg::kron(&eye, &model.a) + linalg::kron(m, &model.d);
    let b_big = linalg::kron(&eye, &model.b) + linalg::kron(m, &model.e);
    let q_big = linalg::kron(g, &model.q);
    let r_big = linalg::kron(h_mat, &model.r);
    let qt_big = linalg::kron(g, &model.q_t);

    let data = LQRData::new(
        a_big.clone(),
        b_big.clone(),
        linalg::symmetrize(&q_big),
        linalg::symmetrize(&r_big),
        linalg::symmetrize(&qt_big),
    )?;
    let riccati = solve_riccati_ode(&data, horizon, synth_step, tol)?;
    let k_samples = riccati
        .p
        .iter()
        .map(|p| gain_from_solution(p, &b_big, &data.r, 1.0))
        .collect::<Result<Vec<_>>>()?;

    // simulate the vectorized closed loop with the same RK4/interp scheme
    let n_steps = (horizon / dt).round().max(1.0) as usize;
    let h = horizon / n_steps as f64;
    let k_at = |t: f64| crate::riccati::interp_samples(&riccati.times, &k_samples, t);
    let mut xv = linalg::vec_of(x0);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut controls = Vec::with_capacity(n_steps + 1);
    let control_of = |t: f64, xv: &nalgebra::DVector<f64>| -> Result<nalgebra::DVector<f64>> {
        Ok(-(k_at(t)? * xv))
    };
    states.push(linalg::unvec(&xv, d_x, n));
    controls.push(linalg::unvec(&control_of(0.0, &xv)?, model.d_u(), n));
    for k in 0..n_steps {
        let t = k as f64 * h;
        let f = |tt: f64, x: &nalgebra::DVector<f64>| -> Result<nalgebra::DVector<f64>> {
            let u = control_of(tt, x)?;
            Ok(&a_big * x + &b_big * u)
        };
        let k1 = f(t, &xv)?;
        let k2 = f(t + h / 2.0, &(&xv + &k1 * (h / 2.0)))?;
        let k3 = f(t + h / 2.0, &(&xv + &k2 * (h / 2.0)))?;
        let k4 = f(t + h, &(&xv + &k3 * h))?;
        xv += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if !xv.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteBlowup { t });
        }
        let t_next = (k + 1) as f64 * h;
        states.push(linalg::unvec(&xv, d_x, n));
        controls.push(linalg::unvec(&control_of(t_next, &xv)?, model.d_u(), n));
    }
    let traj = Trajectory {
        times: (0..=n_steps).map(|k| k as f64 * h).collect(),
        states,
        controls,
    };
    let report = evaluate_cost(&traj, g, h_mat, &model.q, &model.r, &model.q_t)?;
    Ok((report, traj))
}
