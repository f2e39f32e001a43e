//! Model assumption checks (A1-A4) and PBH rank tests.
//!
//! Finite-horizon synthesis needs only A1-A2; the infinite-horizon checks
//! A3-A4 (stabilizability/detectability of every eigen-subsystem) are run on
//! request.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::SystemModel;
use crate::spectral::SpectralData;
use crate::tol::Tolerances;
use crate::weights::EffectiveWeights;

/// Outcome of one assumption, with per-check diagnostics on failure.
#[derive(Debug, Clone)]
pub struct AssumptionCheck {
    pub ok: bool,
    pub details: Vec<String>,
}

impl AssumptionCheck {
    fn pass() -> Self {
        Self {
            ok: true,
            details: Vec::new(),
        }
    }

    fn fail(details: Vec<String>) -> Self {
        Self { ok: false, details }
    }

    fn skipped() -> Self {
        Self {
            ok: true,
            details: vec!["not checked (finite-horizon synthesis)".into()],
        }
    }
}

#[derive(Debug, Clone)]
pub struct AssumptionReport {
    pub a1: AssumptionCheck,
    pub a2: AssumptionCheck,
    pub a3: AssumptionCheck,
    pub a4: AssumptionCheck,
    /// Whether A3/A4 were actually evaluated.
    pub infinite_checked: bool,
}

impl AssumptionReport {
    pub fn finite_ok(&self) -> bool {
        self.a1.ok && self.a2.ok
    }

    pub fn infinite_ok(&self) -> bool {
        self.finite_ok() && self.infinite_checked && self.a3.ok && self.a4.ok
    }
}

/// Check A1-A2 and, when `check_infinite` is set, A3-A4.
pub fn validate_assumptions(
    model: &SystemModel,
    spec: &SpectralData,
    weights: &EffectiveWeights,
    check_infinite: bool,
    tol: &Tolerances,
) -> Result<AssumptionReport> {
    if weights.q.len() != spec.n_distinct() || weights.r.len() != spec.n_distinct() {
        return Err(Error::MismatchedSpectralData(format!(
            "weights carry {} groups, spectral data has {}",
            weights.q.len(),
            spec.n_distinct()
        )));
    }

    let a1 = check_a1(model, tol);
    let a2 = check_a2(weights, tol);
    let (a3, a4) = if check_infinite {
        (check_a3(model, weights, tol)?, check_a4(model, spec, weights, tol)?)
    } else {
        (AssumptionCheck::skipped(), AssumptionCheck::skipped())
    };

    Ok(AssumptionReport {
        a1,
        a2,
        a3,
        a4,
        infinite_checked: check_infinite,
    })
}

fn check_a1(model: &SystemModel, tol: &Tolerances) -> AssumptionCheck {
    let mut details = Vec::new();
    for (name, m, strict) in [
        ("Q", &model.q, false),
        ("Q_T", &model.q_t, false),
        ("R", &model.r, true),
    ] {
        let asym = linalg::max_asymmetry(m);
        let scale = 1.0 + m.norm();
        if asym > tol.sym_tol * scale {
            details.push(format!("{name} is not symmetric (asymmetry {asym:.3e})"));
            continue;
        }
        let min_eig = linalg::sym_min_eig(m);
        if strict {
            if min_eig <= tol.pd_tol * scale {
                details.push(format!(
                    "{name} is not positive definite (min eigenvalue {min_eig:.3e})"
                ));
            }
        } else if min_eig < -tol.pd_tol * scale {
            details.push(format!(
                "{name} is not positive semi-definite (min eigenvalue {min_eig:.3e})"
            ));
        }
    }
    if details.is_empty() {
        AssumptionCheck::pass()
    } else {
        AssumptionCheck::fail(details)
    }
}

fn check_a2(weights: &EffectiveWeights, tol: &Tolerances) -> AssumptionCheck {
    let mut details = Vec::new();
    if weights.q0 < -tol.pd_tol {
        details.push(format!("q0 = {} is negative", weights.q0));
    }
    if weights.r0 <= tol.pd_tol {
        details.push(format!("r0 = {} is not strictly positive", weights.r0));
    }
    for (g, &q) in weights.q.iter().enumerate() {
        if q < -tol.pd_tol {
            details.push(format!("q^{g} = {q} is negative (margin {})", -q));
        }
    }
    for (g, &r) in weights.r.iter().enumerate() {
        if r <= tol.pd_tol {
            details.push(format!("r^{g} = {r} is not strictly positive"));
        }
    }
    if details.is_empty() {
        AssumptionCheck::pass()
    } else {
        AssumptionCheck::fail(details)
    }
}

fn check_a3(
    model: &SystemModel,
    weights: &EffectiveWeights,
    tol: &Tolerances,
) -> Result<AssumptionCheck> {
    let mut details = Vec::new();
    if !is_stabilizable(&model.a, &model.b, tol) {
        details.push("(A, B) is not stabilizable".into());
    }
    // A zero state weight makes the component cost independent of the state;
    // the Riccati solution is P = 0 and detectability is moot.
    if weights.q0 > tol.pd_tol {
        let c = linalg::sqrt_psd(&model.q, 1e-12)? * weights.q0.sqrt();
        if !is_detectable(&model.a, &c, tol) {
            details.push("(q0^1/2 Q^1/2, A) is not detectable".into());
        }
    }
    Ok(if details.is_empty() {
        AssumptionCheck::pass()
    } else {
        AssumptionCheck::fail(details)
    })
}

fn check_a4(
    model: &SystemModel,
    spec: &SpectralData,
    weights: &EffectiveWeights,
    tol: &Tolerances,
) -> Result<AssumptionCheck> {
    let mut details = Vec::new();
    let q_half = linalg::sqrt_psd(&model.q, 1e-12)?;
    for g in 0..spec.n_distinct() {
        let lambda = spec.group_eigenvalue(g);
        let a = &model.a + &model.d * lambda;
        let b = &model.b + &model.e * lambda;
        if !is_stabilizable(&a, &b, tol) {
            details.push(format!(
                "(A + lambda D, B + lambda E) not stabilizable at lambda = {lambda:.6}"
            ));
        }
        if weights.q[g] > tol.pd_tol {
            let c = &q_half * weights.q[g].sqrt();
            if !is_detectable(&a, &c, tol) {
                details.push(format!(
                    "(A + lambda D, q^l^1/2 Q^1/2) not detectable at lambda = {lambda:.6}"
                ));
            }
        }
    }
    Ok(if details.is_empty() {
        AssumptionCheck::pass()
    } else {
        AssumptionCheck::fail(details)
    })
}

/// PBH test: `(A, B)` is stabilizable iff `[A - sI, B]` has full row rank at
/// every eigenvalue `s` of `A` with nonnegative real part.
pub fn is_stabilizable(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: &Tolerances) -> bool {
    let d = a.nrows();
    let eigs = a.clone().complex_eigenvalues();
    for s in eigs.iter() {
        if s.re < -tol.pbh_margin {
            continue;
        }
        let mut pencil = DMatrix::<Complex<f64>>::zeros(d, d + b.ncols());
        for i in 0..d {
            for j in 0..d {
                pencil[(i, j)] = Complex::new(a[(i, j)], 0.0);
            }
            pencil[(i, i)] -= s;
            for j in 0..b.ncols() {
                pencil[(i, d + j)] = Complex::new(b[(i, j)], 0.0);
            }
        }
        let sv = pencil.singular_values();
        let largest = sv[0];
        let smallest = sv[sv.len() - 1];
        if smallest <= tol.pbh_tol * largest {
            return false;
        }
    }
    true
}

/// `(A, C)` is detectable iff `(A^T, C^T)` is stabilizable.
pub fn is_detectable(a: &DMatrix<f64>, c: &DMatrix<f64>, tol: &Tolerances) -> bool {
    is_stabilizable(&a.transpose(), &c.transpose(), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_coupling, CouplingKind, GraphSpec};
    use crate::spectral::spectral_decompose;
    use crate::weights::{effective_weights, CostCoupling};
    use nalgebra::dmatrix;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn scalar_example_satisfies_a1() {
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
        let m = build_coupling(&g, &CouplingKind::Adjacency, &tols()).unwrap();
        let spec = spectral_decompose(&m, &tols()).unwrap();
        let coupling = CostCoupling::Polynomial {
            q: vec![1.0, -2.0, 1.0],
            r: vec![1.0],
        };
        let w = effective_weights(&spec, &coupling).unwrap();
        let report = validate_assumptions(&model, &spec, &w, false, &tols()).unwrap();
        assert!(report.a1.ok);
        assert!(report.a2.ok);
        assert!(report.finite_ok());
    }

    #[test]
    fn zero_r_fails_a1() {
        let model = SystemModel::deterministic(
            dmatrix![0.0],
            dmatrix![1.0],
            dmatrix![0.0],
            dmatrix![0.0],
            dmatrix![1.0],
            dmatrix![0.0],
            dmatrix![0.0],
        )
        .unwrap();
        let m = DMatrix::zeros(1, 1);
        let spec = spectral_decompose(&m, &tols()).unwrap();
        let w = effective_weights(&spec, &CostCoupling::identity()).unwrap();
        let report = validate_assumptions(&model, &spec, &w, false, &tols()).unwrap();
        assert!(!report.a1.ok);
    }

    #[test]
    fn consensus_setup_satisfies_a3_a4() {
        // A = 0, B = 1, Laplacian coupling, G = M^2: q^l = lambda^2 > 0
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
        let g = GraphSpec::four_cycle(2.0, 1.0);
        let m = build_coupling(&g, &CouplingKind::Laplacian, &tols()).unwrap();
        let spec = spectral_decompose(&m, &tols()).unwrap();
        let coupling = CostCoupling::Polynomial {
            q: vec![0.0, 0.0, 1.0],
            r: vec![1.0],
        };
        let w = effective_weights(&spec, &coupling).unwrap();
        let report = validate_assumptions(&model, &spec, &w, true, &tols()).unwrap();
        assert!(report.a3.ok, "{:?}", report.a3.details);
        assert!(report.a4.ok, "{:?}", report.a4.details);
    }

    #[test]
    fn unstable_uncontrollable_pair_fails_pbh() {
        let a = dmatrix![1.0];
        let b = dmatrix![0.0];
        assert!(!is_stabilizable(&a, &b, &tols()));
        // a stable uncontrollable mode is fine
        let a = dmatrix![-1.0];
        assert!(is_stabilizable(&a, &b, &tols()));
    }
}
