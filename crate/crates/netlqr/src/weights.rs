//! Cost couplings `G`, `H` and the scalar effective weights they induce.
//!
//! Because `G` and `H` are polynomials (or analytic functions) of `M`, they
//! share its eigenvectors; the whole cost coupling collapses to one scalar
//! pair `(q^l, r^l)` per eigenvalue plus the constant terms `(q_0, r_0)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::SpectralData;

/// Named analytic spectral functions with closed-form scalar evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralFn {
    /// `s -> exp(gamma * s)`
    Exp { gamma: f64 },
    /// `s -> 1 / (1 - gamma * s)`, valid while `rho(M) < 1/gamma`
    Inverse { gamma: f64 },
}

impl SpectralFn {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            SpectralFn::Exp { gamma } => (gamma * s).exp(),
            SpectralFn::Inverse { gamma } => 1.0 / (1.0 - gamma * s),
        }
    }
}

/// How the cost weight matrices `G` and `H` are built from `M`.
#[derive(Debug, Clone, PartialEq)]
pub enum CostCoupling {
    /// `G = sum_k q_k M^k`, `H = sum_k r_k M^k`.
    Polynomial { q: Vec<f64>, r: Vec<f64> },
    /// `G = f_G(M)`, `H = f_H(M)` for named analytic functions.
    SpectralFunction { f_g: SpectralFn, f_h: SpectralFn },
}

impl CostCoupling {
    /// Identity coupling `G = H = I`.
    pub fn identity() -> Self {
        CostCoupling::Polynomial {
            q: vec![1.0],
            r: vec![1.0],
        }
    }

    /// Materialize `G` as an `n x n` matrix.
    pub fn g_matrix(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self {
            CostCoupling::Polynomial { q, .. } => Ok(matrix_polynomial(m, q)),
            CostCoupling::SpectralFunction { f_g, .. } => matrix_function(m, f_g),
        }
    }

    /// Materialize `H` as an `n x n` matrix.
    pub fn h_matrix(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self {
            CostCoupling::Polynomial { r, .. } => Ok(matrix_polynomial(m, r)),
            CostCoupling::SpectralFunction { f_h, .. } => matrix_function(m, f_h),
        }
    }

    fn check_radius(&self, rho: f64) -> Result<()> {
        for f in self.spectral_fns() {
            if let SpectralFn::Inverse { gamma } = f {
                let limit = 1.0 / gamma.abs();
                if rho >= limit {
                    return Err(Error::SpectralRadiusViolation { rho, limit });
                }
            }
        }
        Ok(())
    }

    fn spectral_fns(&self) -> Vec<SpectralFn> {
        match self {
            CostCoupling::Polynomial { .. } => vec![],
            CostCoupling::SpectralFunction { f_g, f_h } => vec![*f_g, *f_h],
        }
    }
}

/// Scalar cost weights per distinct eigenvalue group, plus constant terms.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveWeights {
    pub q0: f64,
    pub r0: f64,
    /// `q[g]` for distinct group `g`.
    pub q: Vec<f64>,
    /// `r[g]` for distinct group `g`.
    pub r: Vec<f64>,
}

/// Evaluate the effective weights `(q0, r0, {q^g, r^g})` for a decomposition.
///
/// Polynomials are evaluated by Horner's rule at the group-representative
/// eigenvalues; spectral functions are evaluated directly, with the inverse
/// mode guarded by its radius-of-convergence condition.
pub fn effective_weights(spec: &SpectralData, coupling: &CostCoupling) -> Result<EffectiveWeights> {
    let rho = spec
        .eigenvalues()
        .iter()
        .fold(0.0f64, |a, &l| a.max(l.abs()));
    coupling.check_radius(rho)?;

    let eval_q = |s: f64| -> f64 {
        match coupling {
            CostCoupling::Polynomial { q, .. } => horner(q, s),
            CostCoupling::SpectralFunction { f_g, .. } => f_g.eval(s),
        }
    };
    let eval_r = |s: f64| -> f64 {
        match coupling {
            CostCoupling::Polynomial { r, .. } => horner(r, s),
            CostCoupling::SpectralFunction { f_h, .. } => f_h.eval(s),
        }
    };

    let mut q = Vec::with_capacity(spec.n_distinct());
    let mut r = Vec::with_capacity(spec.n_distinct());
    for g in 0..spec.n_distinct() {
        let lambda = spec.group_eigenvalue(g);
        q.push(eval_q(lambda));
        r.push(eval_r(lambda));
    }
    Ok(EffectiveWeights {
        q0: eval_q(0.0),
        r0: eval_r(0.0),
        q,
        r,
    })
}

/// Horner evaluation of `sum_k c_k s^k`. Empty coefficient lists evaluate to 0.
pub fn horner(coeffs: &[f64], s: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
}

fn matrix_polynomial(m: &DMatrix<f64>, coeffs: &[f64]) -> DMatrix<f64> {
    let n = m.nrows();
    let mut acc = DMatrix::zeros(n, n);
    for &c in coeffs.iter().rev() {
        acc = &acc * m;
        for i in 0..n {
            acc[(i, i)] += c;
        }
    }
    acc
}

fn matrix_function(m: &DMatrix<f64>, f: &SpectralFn) -> Result<DMatrix<f64>> {
    let eig = linalg::symmetrize(m).symmetric_eigen();
    if let SpectralFn::Inverse { gamma } = f {
        let rho = eig.eigenvalues.amax();
        let limit = 1.0 / gamma.abs();
        if rho >= limit {
            return Err(Error::SpectralRadiusViolation { rho, limit });
        }
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| f.eval(l)));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_coupling, CouplingKind, GraphSpec};
    use crate::spectral::spectral_decompose;
    use crate::tol::Tolerances;

    fn fig3_spec() -> SpectralData {
        let g = GraphSpec::four_cycle(2.0, 1.0);
        let m = build_coupling(&g, &CouplingKind::Adjacency, &Tolerances::default()).unwrap();
        spectral_decompose(&m, &Tolerances::default()).unwrap()
    }

    #[test]
    fn one_minus_m_squared_weights() {
        // G = I - 2M + M^2, H = I  =>  q^l = (1 - lambda)^2, r^l = 1
        let spec = fig3_spec();
        let coupling = CostCoupling::Polynomial {
            q: vec![1.0, -2.0, 1.0],
            r: vec![1.0],
        };
        let w = effective_weights(&spec, &coupling).unwrap();
        let rho = (10.0f64).sqrt();
        assert!((w.q[0] - (1.0 + rho).powi(2)).abs() < 1e-12);
        assert!((w.q[1] - (1.0 - rho).powi(2)).abs() < 1e-12);
        assert_eq!(w.r, vec![1.0, 1.0]);
        assert_eq!(w.q0, 1.0);
        assert_eq!(w.r0, 1.0);
    }

    #[test]
    fn consensus_weights() {
        // G = M^2, H = I  =>  q^l = lambda^2, r^l = 1, q0 = 0
        let spec = fig3_spec();
        let coupling = CostCoupling::Polynomial {
            q: vec![0.0, 0.0, 1.0],
            r: vec![1.0],
        };
        let w = effective_weights(&spec, &coupling).unwrap();
        for g in 0..spec.n_distinct() {
            let l = spec.group_eigenvalue(g);
            assert!((w.q[g] - l * l).abs() < 1e-12);
        }
        assert_eq!(w.q0, 0.0);
        assert_eq!(w.r0, 1.0);
    }

    #[test]
    fn constant_polynomials() {
        let spec = fig3_spec();
        let coupling = CostCoupling::Polynomial {
            q: vec![3.5],
            r: vec![0.7],
        };
        let w = effective_weights(&spec, &coupling).unwrap();
        assert_eq!(w.q, vec![3.5, 3.5]);
        assert_eq!(w.r, vec![0.7, 0.7]);
    }

    #[test]
    fn horner_matches_power_sum() {
        let mut state = 0x12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..50 {
            let deg = 1 + (next().abs() * 6.0) as usize;
            let coeffs: Vec<f64> = (0..=deg).map(|_| next()).collect();
            let s = next() * 3.0;
            let direct: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c * s.powi(k as i32))
                .sum();
            let h = horner(&coeffs, s);
            assert!((h - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn inverse_radius_violation() {
        let spec = fig3_spec(); // rho = sqrt(10) ~ 3.16
        let coupling = CostCoupling::SpectralFunction {
            f_g: SpectralFn::Inverse { gamma: 1.0 },
            f_h: SpectralFn::Exp { gamma: 1.0 },
        };
        assert!(matches!(
            effective_weights(&spec, &coupling),
            Err(Error::SpectralRadiusViolation { .. })
        ));
    }

    #[test]
    fn g_matrix_matches_effective_weights_on_eigenvectors() {
        let spec = fig3_spec();
        let g = GraphSpec::four_cycle(2.0, 1.0);
        let m = build_coupling(&g, &CouplingKind::Adjacency, &Tolerances::default()).unwrap();
        let coupling = CostCoupling::Polynomial {
            q: vec![1.0, -2.0, 1.0],
            r: vec![1.0],
        };
        let w = effective_weights(&spec, &coupling).unwrap();
        let gm = coupling.g_matrix(&m).unwrap();
        for l in 0..spec.rank() {
            let v = spec.eigenvector(l);
            let gv = &gm * v;
            let expect = v * w.q[spec.group_of(l)];
            assert!((gv - expect).norm() < 1e-10);
        }
    }
}
