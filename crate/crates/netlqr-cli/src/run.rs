//! Subcommand pipelines: build the instance from config, run, emit files.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::Serialize;

use netlqr::consensus::{disagreement, solve_pi, ConsensusSetup};
use netlqr::controller::{synthesize_finite, synthesize_infinite, GainSchedule, GainScheduleKind};
use netlqr::decomposition::decompose;
use netlqr::riccati::{solve_riccati_ode, LQRData};
use netlqr::simulator::{
    centralized_oracle, evaluate_cost, evaluate_cost_decomposed, simulate_deterministic,
    simulate_stochastic, stochastic_value, ControlLaw, Trajectory,
};
use netlqr::{
    build_coupling, effective_weights, spectral_decompose, CostCoupling, EffectiveWeights,
    SpectralData, SystemModel, Tolerances,
};

use crate::config::{parse_config, ExperimentConfig, HorizonKind};
use crate::output::{gains_csv, spectrum_csv, svg_chart, trajectory_csv, OutputDir};
use crate::{CliError, RunArgs};

pub struct Instance {
    pub cfg: ExperimentConfig,
    pub tol: Tolerances,
    pub m: DMatrix<f64>,
    pub spec: SpectralData,
}

fn prepare(args: &RunArgs) -> Result<Instance, CliError> {
    let mut cfg = parse_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.solver.seed = seed;
    }
    if let Some(paths) = args.paths {
        cfg.solver.n_paths = Some(paths);
    }
    if let Some(mode) = &cfg.mode {
        const MODES: [&str; 6] = [
            "decompose", "synthesize", "simulate", "verify", "consensus", "bench",
        ];
        if !MODES.contains(&mode.as_str()) {
            return Err(CliError::validation(format!("unknown mode \"{mode}\"")));
        }
    }
    let tol = cfg.tolerances();
    let graph = cfg.graph_spec()?;
    let m = build_coupling(&graph, &cfg.coupling_kind(), &tol)?;
    let spec = spectral_decompose(&m, &tol)?;
    Ok(Instance { cfg, tol, m, spec })
}

struct ModelInstance {
    model: SystemModel,
    weights: EffectiveWeights,
    g_mat: DMatrix<f64>,
    h_mat: DMatrix<f64>,
}

fn model_instance(inst: &Instance) -> Result<ModelInstance, CliError> {
    let model = inst.cfg.system_model()?;
    let coupling = inst.cfg.cost_coupling()?;
    let weights = effective_weights(&inst.spec, &coupling)?;
    let g_mat = coupling.g_matrix(&inst.m)?;
    let h_mat = coupling.h_matrix(&inst.m)?;
    Ok(ModelInstance {
        model,
        weights,
        g_mat,
        h_mat,
    })
}

fn synthesize(inst: &Instance, mi: &ModelInstance) -> Result<(GainSchedule, f64), CliError> {
    let t0 = Instant::now();
    let gains = match inst.cfg.horizon.kind {
        HorizonKind::Finite => synthesize_finite(
            &mi.model,
            &inst.spec,
            &mi.weights,
            inst.cfg.horizon_t()?,
            inst.cfg.step(),
            &inst.tol,
        )?,
        HorizonKind::Infinite => {
            synthesize_infinite(&mi.model, &inst.spec, &mi.weights, &inst.tol)?
        }
    };
    Ok((gains, t0.elapsed().as_secs_f64()))
}

#[derive(Serialize)]
struct SpectralSummary {
    n: usize,
    rank: usize,
    n_distinct: usize,
    eigenvalues: Vec<f64>,
}

impl SpectralSummary {
    fn new(spec: &SpectralData) -> Self {
        Self {
            n: spec.n(),
            rank: spec.rank(),
            n_distinct: spec.n_distinct(),
            eigenvalues: spec.eigenvalues().to_vec(),
        }
    }
}

#[derive(Serialize)]
struct GainSummary {
    horizon: String,
    riccati_solves: usize,
    synthesis_seconds: f64,
}

#[derive(Serialize, Default)]
struct CostSummary {
    #[serde(skip_serializing_if = "Option::is_none")]
    running: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    terminal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    total: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    monte_carlo_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    monte_carlo_std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    analytic_value: Option<f64>,
}

#[derive(Serialize)]
struct VerifySummary {
    cost_gap: f64,
    max_control_gap: f64,
    tolerance: f64,
    passed: bool,
    decomposed_seconds: f64,
    centralized_seconds: f64,
    centralized_dim: usize,
}

#[derive(Serialize)]
struct ConsensusSummary {
    pi_defect: f64,
    initial_disagreement: f64,
    final_disagreement: f64,
    average_drift_per_unit_time: f64,
}

#[derive(Serialize)]
struct BenchSummary {
    decomposed_seconds: f64,
    centralized_seconds: f64,
    decomposed_solves: usize,
    centralized_dim: usize,
}

#[derive(Serialize)]
struct Summary {
    mode: String,
    seed: u64,
    spectral: SpectralSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    gains: Option<GainSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cost: Option<CostSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verify: Option<VerifySummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    consensus: Option<ConsensusSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bench: Option<BenchSummary>,
}

impl Summary {
    fn new(mode: &str, inst: &Instance) -> Self {
        Self {
            mode: mode.to_string(),
            seed: inst.cfg.solver.seed,
            spectral: SpectralSummary::new(&inst.spec),
            gains: None,
            cost: None,
            verify: None,
            consensus: None,
            bench: None,
        }
    }

    fn write(&self, out: &mut OutputDir) -> Result<(), CliError> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| CliError::validation(format!("summary serialization failed: {e}")))?;
        out.write("summary.toml", &text)
    }
}

fn stride_for(n_samples: usize) -> usize {
    (n_samples / 200).max(1)
}

fn emit_trajectory(
    out: &mut OutputDir,
    traj: &Trajectory,
    spec: &SpectralData,
    svg: bool,
) -> Result<(), CliError> {
    let stride = stride_for(traj.times.len());
    out.write("trajectory.csv", &trajectory_csv(traj, spec, stride)?)?;
    if svg {
        let mut state_series = Vec::new();
        let mut control_series = Vec::new();
        let n = traj.states[0].ncols();
        let add = |series: &mut Vec<(String, Vec<(f64, f64)>)>, kind: &str| {
            for i in 0..n {
                series.push((format!("{kind} node {i}"), Vec::new()));
            }
        };
        for l in 0..spec.rank() {
            add(&mut state_series, &format!("eigen{l}"));
            add(&mut control_series, &format!("eigen{l}"));
        }
        add(&mut state_series, "auxiliary");
        add(&mut control_series, "auxiliary");
        for (k, &t) in traj.times.iter().enumerate() {
            if k % stride != 0 {
                continue;
            }
            let dx = decompose(&traj.states[k], spec)?;
            let du = decompose(&traj.controls[k], spec)?;
            for (slot, part) in dx.eigen.iter().chain([&dx.auxiliary]).enumerate() {
                for i in 0..n {
                    state_series[slot * n + i].1.push((t, part[(0, i)]));
                }
            }
            for (slot, part) in du.eigen.iter().chain([&du.auxiliary]).enumerate() {
                for i in 0..n {
                    control_series[slot * n + i].1.push((t, part[(0, i)]));
                }
            }
        }
        out.write(
            "states.svg",
            &svg_chart("decomposed states (first component)", &state_series),
        )?;
        out.write(
            "controls.svg",
            &svg_chart("decomposed controls (first component)", &control_series),
        )?;
    }
    Ok(())
}

pub fn run_decompose(args: &RunArgs) -> Result<(), CliError> {
    let inst = prepare(args)?;
    let mut out = OutputDir::new(&args.out)?;
    out.write("spectrum.csv", &spectrum_csv(&inst.spec))?;

    let d_x = match inst.cfg.system_model() {
        Ok(model) => model.d_x(),
        Err(_) => 1,
    };
    let x0 = inst
        .cfg
        .initial_state(d_x, inst.spec.n(), inst.cfg.solver.seed)?;
    let snapshot = Trajectory {
        times: vec![0.0],
        states: vec![x0.clone()],
        controls: vec![DMatrix::zeros(d_x, inst.spec.n())],
    };
    out.write(
        "components.csv",
        &trajectory_csv(&snapshot, &inst.spec, 1)?,
    )?;
    Summary::new("decompose", &inst).write(&mut out)?;
    out.finish()
}

pub fn run_synthesize(args: &RunArgs) -> Result<(), CliError> {
    let inst = prepare(args)?;
    let mi = model_instance(&inst)?;
    let (gains, secs) = synthesize(&inst, &mi)?;

    let mut out = OutputDir::new(&args.out)?;
    out.write("spectrum.csv", &spectrum_csv(&inst.spec))?;
    match &gains.kind {
        GainScheduleKind::Finite {
            times,
            k_aux,
            k_group,
            ..
        } => {
            let stride = stride_for(times.len());
            let idx: Vec<usize> = (0..times.len())
                .filter(|k| k % stride == 0 || *k == times.len() - 1)
                .collect();
            let t_thin: Vec<f64> = idx.iter().map(|&k| times[k]).collect();
            let ka: Vec<DMatrix<f64>> = idx.iter().map(|&k| k_aux[k].clone()).collect();
            let kg: Vec<Vec<DMatrix<f64>>> = k_group
                .iter()
                .map(|g| idx.iter().map(|&k| g[k].clone()).collect())
                .collect();
            out.write("gains.csv", &gains_csv(&t_thin, &ka, &kg))?;
        }
        GainScheduleKind::Infinite { k_aux, k_group, .. } => {
            let kg: Vec<Vec<DMatrix<f64>>> = k_group.iter().map(|k| vec![k.clone()]).collect();
            out.write("gains.csv", &gains_csv(&[0.0], &[k_aux.clone()], &kg))?;
        }
    }
    let mut summary = Summary::new("synthesize", &inst);
    summary.gains = Some(GainSummary {
        horizon: format!("{:?}", inst.cfg.horizon.kind),
        riccati_solves: inst.spec.n_distinct() + 1,
        synthesis_seconds: secs,
    });
    summary.write(&mut out)?;
    out.finish()
}

pub fn run_simulate(args: &RunArgs) -> Result<(), CliError> {
    let inst = prepare(args)?;
    let mi = model_instance(&inst)?;
    let (gains, secs) = synthesize(&inst, &mi)?;
    let x0 = inst
        .cfg
        .initial_state(mi.model.d_x(), inst.spec.n(), inst.cfg.solver.seed)?;
    let law = ControlLaw::Closed {
        gains: &gains,
        spec: &inst.spec,
    };
    let horizon = inst.cfg.t_sim();
    let dt = inst.cfg.dt();

    let mut cost = CostSummary::default();
    let traj;
    if mi.model.is_deterministic() {
        traj = simulate_deterministic(&mi.model, &inst.m, &law, &x0, horizon, dt)?;
        let report = evaluate_cost_decomposed(
            &traj,
            &inst.spec,
            &mi.weights,
            &mi.model.q,
            &mi.model.r,
            &mi.model.q_t,
        )?;
        cost.running = Some(report.running);
        cost.terminal = Some(report.terminal);
        cost.total = Some(report.total);
    } else {
        let n_paths = inst.cfg.solver.n_paths.unwrap_or(1000);
        let ensemble = simulate_stochastic(
            &mi.model,
            &inst.m,
            &mi.g_mat,
            &mi.h_mat,
            &law,
            &x0,
            horizon,
            dt,
            n_paths,
            inst.cfg.solver.seed,
        )?;
        cost.monte_carlo_mean = Some(ensemble.mean);
        cost.monte_carlo_std_error = Some(ensemble.std_error);
        if matches!(gains.kind, GainScheduleKind::Finite { .. }) {
            cost.analytic_value =
                Some(stochastic_value(&mi.model, &gains, &inst.spec, &x0)?.total);
        }
        traj = ensemble.sample;
    }

    let mut out = OutputDir::new(&args.out)?;
    out.write("spectrum.csv", &spectrum_csv(&inst.spec))?;
    emit_trajectory(&mut out, &traj, &inst.spec, args.svg)?;
    let mut summary = Summary::new("simulate", &inst);
    summary.gains = Some(GainSummary {
        horizon: format!("{:?}", inst.cfg.horizon.kind),
        riccati_solves: inst.spec.n_distinct() + 1,
        synthesis_seconds: secs,
    });
    summary.cost = Some(cost);
    summary.write(&mut out)?;
    out.finish()
}

pub fn run_verify(args: &RunArgs) -> Result<(), CliError> {
    let inst = prepare(args)?;
    if inst.cfg.horizon.kind != HorizonKind::Finite {
        return Err(CliError::validation(
            "verify requires the finite-horizon setup".into(),
        ));
    }
    let mi = model_instance(&inst)?;
    let (gains, dec_secs) = synthesize(&inst, &mi)?;
    let x0 = inst
        .cfg
        .initial_state(mi.model.d_x(), inst.spec.n(), inst.cfg.solver.seed)?;
    let law = ControlLaw::Closed {
        gains: &gains,
        spec: &inst.spec,
    };
    let horizon = inst.cfg.horizon_t()?;
    let dt = inst.cfg.dt();
    let det_model = deterministic_copy(&mi.model)?;
    let traj = simulate_deterministic(&det_model, &inst.m, &law, &x0, horizon, dt)?;
    let report = evaluate_cost(
        &traj,
        &mi.g_mat,
        &mi.h_mat,
        &det_model.q,
        &det_model.r,
        &det_model.q_t,
    )?;

    let t0 = Instant::now();
    let (oracle_cost, oracle_traj) = centralized_oracle(
        &det_model,
        &inst.m,
        &mi.g_mat,
        &mi.h_mat,
        &x0,
        horizon,
        inst.cfg.step(),
        dt,
        &inst.tol,
    )?;
    let cen_secs = t0.elapsed().as_secs_f64();

    let cost_gap =
        (report.total - oracle_cost.total).abs() / (1.0 + oracle_cost.total.abs());
    let scale = oracle_traj
        .controls
        .iter()
        .fold(0.0f64, |a, u| a.max(u.norm()));
    let max_control_gap = traj
        .controls
        .iter()
        .zip(&oracle_traj.controls)
        .fold(0.0f64, |a, (u, v)| a.max((u - v).norm() / (1.0 + scale)));
    let tolerance = args.tol.unwrap_or(1e-5);
    let passed = cost_gap <= tolerance && max_control_gap <= tolerance;

    let mut out = OutputDir::new(&args.out)?;
    out.write("spectrum.csv", &spectrum_csv(&inst.spec))?;
    emit_trajectory(&mut out, &traj, &inst.spec, args.svg)?;
    let mut summary = Summary::new("verify", &inst);
    summary.gains = Some(GainSummary {
        horizon: "Finite".into(),
        riccati_solves: inst.spec.n_distinct() + 1,
        synthesis_seconds: dec_secs,
    });
    summary.cost = Some(CostSummary {
        running: Some(report.running),
        terminal: Some(report.terminal),
        total: Some(report.total),
        ..Default::default()
    });
    summary.verify = Some(VerifySummary {
        cost_gap,
        max_control_gap,
        tolerance,
        passed,
        decomposed_seconds: dec_secs,
        centralized_seconds: cen_secs,
        centralized_dim: inst.spec.n() * det_model.d_x(),
    });
    summary.write(&mut out)?;
    out.finish()?;
    if !passed {
        return Err(CliError::gap(format!(
            "verification gap {cost_gap:.3e} exceeds tolerance {tolerance:.3e}"
        )));
    }
    Ok(())
}

/// The same model with the noise input removed.
fn deterministic_copy(model: &SystemModel) -> Result<SystemModel, CliError> {
    Ok(SystemModel::deterministic(
        model.a.clone(),
        model.b.clone(),
        model.d.clone(),
        model.e.clone(),
        model.q.clone(),
        model.q_t.clone(),
        model.r.clone(),
    )?)
}

pub fn run_consensus(args: &RunArgs) -> Result<(), CliError> {
    let inst = prepare(args)?;
    let cc = inst
        .cfg
        .consensus
        .as_ref()
        .ok_or_else(|| CliError::validation("missing [consensus] section".into()))?;
    let q = crate::config::to_dmatrix("consensus.q", &cc.q)?;
    let r = crate::config::to_dmatrix("consensus.r", &cc.r)?;
    let graph = inst.cfg.graph_spec()?;
    let setup = ConsensusSetup::new(graph, q.clone(), r.clone(), &inst.tol)?;
    let gain = solve_pi(&q, &r)?;

    let model = setup.system_model();
    let coupling = CostCoupling::Polynomial {
        q: vec![0.0, 0.0, 1.0],
        r: vec![1.0],
    };
    let spec = setup.spectral_data();
    let weights = effective_weights(spec, &coupling)?;
    let gains = synthesize_infinite(&model, spec, &weights, &inst.tol)?;

    let x0 = inst
        .cfg
        .initial_state(model.d_x(), spec.n(), inst.cfg.solver.seed)?;
    let law = ControlLaw::Closed { gains: &gains, spec };
    let horizon = inst.cfg.t_sim();
    let traj = simulate_deterministic(&model, setup.laplacian(), &law, &x0, horizon, inst.cfg.dt())?;

    let d0 = disagreement(&x0);
    let d_final = disagreement(traj.final_state());
    let n = spec.n() as f64;
    let drift = (traj.final_state().column_sum() / n - x0.column_sum() / n).norm() / horizon;

    let mut out = OutputDir::new(&args.out)?;
    out.write("spectrum.csv", &spectrum_csv(spec))?;
    let stride = stride_for(traj.times.len());
    let mut dis = String::from("time,disagreement\n");
    for (k, &t) in traj.times.iter().enumerate() {
        if k % stride == 0 || k == traj.times.len() - 1 {
            use std::fmt::Write as _;
            writeln!(dis, "{t:.9},{:.12e}", disagreement(&traj.states[k])).unwrap();
        }
    }
    out.write("disagreement.csv", &dis)?;
    emit_trajectory(&mut out, &traj, spec, args.svg)?;

    let mut summary = Summary::new("consensus", &inst);
    summary.consensus = Some(ConsensusSummary {
        pi_defect: (&gain.pi * &gain.protocol_gain - &q).norm(),
        initial_disagreement: d0,
        final_disagreement: d_final,
        average_drift_per_unit_time: drift,
    });
    summary.write(&mut out)?;
    out.finish()
}

pub fn run_bench(args: &RunArgs) -> Result<(), CliError> {
    let inst = prepare(args)?;
    if inst.cfg.horizon.kind != HorizonKind::Finite {
        return Err(CliError::validation(
            "bench requires the finite-horizon setup".into(),
        ));
    }
    let mi = model_instance(&inst)?;
    let (_, dec_secs) = synthesize(&inst, &mi)?;

    let n = inst.spec.n();
    let d_x = mi.model.d_x();
    if n * d_x > 400 {
        return Err(CliError::validation(format!(
            "centralized benchmark dimension {} exceeds 400",
            n * d_x
        )));
    }
    let eye = DMatrix::<f64>::identity(n, n);
    let big = LQRData::new(
        eye.kronecker(&mi.model.a) + inst.m.kronecker(&mi.model.d),
        eye.kronecker(&mi.model.b) + inst.m.kronecker(&mi.model.e),
        mi.g_mat.kronecker(&mi.model.q),
        mi.h_mat.kronecker(&mi.model.r),
        mi.g_mat.kronecker(&mi.model.q_t),
    )?;
    let t0 = Instant::now();
    solve_riccati_ode(&big, inst.cfg.horizon_t()?, inst.cfg.step(), &inst.tol)?;
    let cen_secs = t0.elapsed().as_secs_f64();

    let mut out = OutputDir::new(&args.out)?;
    let mut summary = Summary::new("bench", &inst);
    summary.bench = Some(BenchSummary {
        decomposed_seconds: dec_secs,
        centralized_seconds: cen_secs,
        decomposed_solves: inst.spec.n_distinct() + 1,
        centralized_dim: n * d_x,
    });
    summary.write(&mut out)?;
    out.finish()
}
