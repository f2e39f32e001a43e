//! Eigen/auxiliary decomposition of global fields, the weighted inner
//! product, and the cost decomposition.
//!
//! Global quantities are `d x n` matrices whose columns are per-node vectors,
//! so each identity below is a one-line matrix expression: the eigenstate is
//! `x^l = x v^l (v^l)^T` and the auxiliary remainder is
//! `x_breve = x - sum_l x^l`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spectral::SpectralData;

/// Eigen components plus auxiliary remainder of one global field.
#[derive(Debug, Clone)]
pub struct DecomposedField {
    /// `x^l`, one `d x n` matrix per retained eigenvalue.
    pub eigen: Vec<DMatrix<f64>>,
    /// `x_breve = x - sum_l x^l`.
    pub auxiliary: DMatrix<f64>,
}

impl DecomposedField {
    /// `x_breve + sum_l x^l`.
    pub fn recompose(&self) -> DMatrix<f64> {
        let mut out = self.auxiliary.clone();
        for part in &self.eigen {
            out += part;
        }
        out
    }
}

/// `x v v^T` for a unit vector `v`.
pub fn project_eigen(x: &DMatrix<f64>, v: &DVector<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "field has {} columns, eigenvector has {} entries",
            x.ncols(),
            v.len()
        )));
    }
    let z = x * v; // d-vector
    Ok(z * v.transpose())
}

/// Split a global field into its eigen components and auxiliary remainder.
pub fn decompose(x: &DMatrix<f64>, spec: &SpectralData) -> Result<DecomposedField> {
    if x.ncols() != spec.n() {
        return Err(Error::DimensionMismatch(format!(
            "field has {} columns, network has {} nodes",
            x.ncols(),
            spec.n()
        )));
    }
    let mut eigen = Vec::with_capacity(spec.rank());
    let mut auxiliary = x.clone();
    for l in 0..spec.rank() {
        let part = project_eigen(x, spec.eigenvector(l))?;
        auxiliary -= &part;
        eigen.push(part);
    }
    Ok(DecomposedField { eigen, auxiliary })
}

/// `<x, y>_P = sum_ij p_ij x_i^T y_j`.
pub fn weighted_inner(x: &DMatrix<f64>, y: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<f64> {
    let n = p.nrows();
    if p.ncols() != n || x.ncols() != n || y.ncols() != n || x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "weighted inner product: x {}x{}, y {}x{}, P {}x{}",
            x.nrows(),
            x.ncols(),
            y.nrows(),
            y.ncols(),
            p.nrows(),
            p.ncols()
        )));
    }
    // sum_ij p_ij x_i^T y_j = sum over entries of (x P) .* y for symmetric P;
    // written with an explicit transpose so asymmetric P is handled too
    let xp = x * p;
    Ok(xp.iter().zip(y.iter()).map(|(a, b)| a * b).sum())
}

/// `c(x, u) = <x, Qx>_G + <u, Ru>_H`.
pub fn instantaneous_cost(
    x: &DMatrix<f64>,
    u: &DMatrix<f64>,
    g: &DMatrix<f64>,
    h: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<f64> {
    Ok(weighted_inner(x, &(q * x), g)? + weighted_inner(u, &(r * u), h)?)
}

/// The same cost evaluated on decomposed fields:
/// `sum_i [q0 xb_i^T Q xb_i + sum_l q^l (x^l_i)^T Q x^l_i]` plus the control
/// analog with `r0`, `r^l`, `R`.
pub fn decomposed_cost(
    dx: &DecomposedField,
    du: &DecomposedField,
    spec: &SpectralData,
    weights: &crate::weights::EffectiveWeights,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<f64> {
    if dx.eigen.len() != spec.rank() || du.eigen.len() != spec.rank() {
        return Err(Error::MismatchedSpectralData(format!(
            "fields carry {}/{} eigen parts, spectral data has rank {}",
            dx.eigen.len(),
            du.eigen.len(),
            spec.rank()
        )));
    }
    if weights.q.len() != spec.n_distinct() {
        return Err(Error::MismatchedSpectralData(format!(
            "weights carry {} groups, spectral data has {}",
            weights.q.len(),
            spec.n_distinct()
        )));
    }
    let quad = |f: &DMatrix<f64>, w: &DMatrix<f64>| -> f64 {
        let wf = w * f;
        f.iter().zip(wf.iter()).map(|(a, b)| a * b).sum()
    };
    let mut total = weights.q0 * quad(&dx.auxiliary, q) + weights.r0 * quad(&du.auxiliary, r);
    for l in 0..spec.rank() {
        let g = spec.group_of(l);
        total += weights.q[g] * quad(&dx.eigen[l], q) + weights.r[g] * quad(&du.eigen[l], r);
    }
    Ok(total)
}

/// Residuals of the nine decomposition identities, each scaled relative to
/// `1 +` the magnitude of the larger side.
#[derive(Debug, Clone)]
pub struct PropertyReport {
    /// Relative residual per property, indexed P1..P9.
    pub residuals: [f64; 9],
    pub tolerance: f64,
}

impl PropertyReport {
    pub fn all_pass(&self) -> bool {
        self.residuals.iter().all(|&r| r <= self.tolerance)
    }

    pub fn failures(&self) -> Vec<usize> {
        self.residuals
            .iter()
            .enumerate()
            .filter(|(_, &r)| r > self.tolerance)
            .map(|(k, _)| k + 1)
            .collect()
    }
}

fn rel(residual: f64, lhs: f64, rhs: f64) -> f64 {
    residual / (1.0 + lhs.abs().max(rhs.abs()))
}

fn rel_mat(diff: &DMatrix<f64>, lhs: &DMatrix<f64>, rhs: &DMatrix<f64>) -> f64 {
    diff.norm() / (1.0 + lhs.norm().max(rhs.norm()))
}

/// Evaluate the identities P1-P9 on concrete state and control fields.
///
/// P1/P2: `x^l M^k = (lambda^l)^k x^l`. P3: `x^l G = q^l x^l` with
/// `q^l = (v^l)^T G v^l`. P4/P5: `xb M^k = 0`. P6: `xb G = q0 xb` with `q0`
/// read off along a null-space direction of `M` (taken as 0 residual when `M`
/// has full rank). P7: `x G = q0 xb + sum_l q^l x^l`. P8: cross terms
/// `sum_i (x^l_i)^T Q x^l'_i` vanish for `l != l'`. P9:
/// `sum_i x_i^T Q x^l_i = sum_i (x^l_i)^T Q x^l_i`. Control analogs use `H`,
/// `R`, `r^l`, `r0` throughout.
pub fn check_properties(
    x: &DMatrix<f64>,
    u: &DMatrix<f64>,
    spec: &SpectralData,
    g: &DMatrix<f64>,
    h: &DMatrix<f64>,
    m: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    tolerance: f64,
) -> Result<PropertyReport> {
    let dx = decompose(x, spec)?;
    let du = decompose(u, spec)?;
    let rank = spec.rank();

    // scalar weights implied by G and H on each eigendirection
    let q_l: Vec<f64> = (0..rank)
        .map(|l| (spec.eigenvector(l).transpose() * g * spec.eigenvector(l))[(0, 0)])
        .collect();
    let r_l: Vec<f64> = (0..rank)
        .map(|l| (spec.eigenvector(l).transpose() * h * spec.eigenvector(l))[(0, 0)])
        .collect();
    // constant terms read off along a unit direction orthogonal to every
    // eigenvector (the null space of M); absent when M has full rank
    let null_dir = null_space_direction(spec);
    let (q0, r0) = match &null_dir {
        Some(w) => (
            (w.transpose() * g * w)[(0, 0)],
            (w.transpose() * h * w)[(0, 0)],
        ),
        None => (0.0, 0.0),
    };

    let mut residuals = [0.0f64; 9];
    let mut record = |idx: usize, value: f64| {
        residuals[idx] = residuals[idx].max(value);
    };

    for (field, parts, weights, gh, c0) in
        [(x, &dx, &q_l, g, q0), (u, &du, &r_l, h, r0)]
    {
        for l in 0..rank {
            let lambda = spec.eigenvalues()[l];
            let part = &parts.eigen[l];
            // P1
            let lhs = part * m;
            let rhs = part * lambda;
            record(0, rel_mat(&(&lhs - &rhs), &lhs, &rhs));
            // P2 with k = 3
            let lhs = part * m * m * m;
            let rhs = part * lambda.powi(3);
            record(1, rel_mat(&(&lhs - &rhs), &lhs, &rhs));
            // P3
            let lhs = part * gh;
            let rhs = part * weights[l];
            record(2, rel_mat(&(&lhs - &rhs), &lhs, &rhs));
        }
        // P4, P5
        let aux = &parts.auxiliary;
        let lhs = aux * m;
        record(3, lhs.norm() / (1.0 + field.norm() * m.norm()));
        let lhs = aux * m * m * m;
        record(4, lhs.norm() / (1.0 + field.norm() * m.norm().powi(3)));
        // P6 (meaningful only when a null direction exists)
        if null_dir.is_some() {
            let lhs = aux * gh;
            let rhs = aux * c0;
            record(5, rel_mat(&(&lhs - &rhs), &lhs, &rhs));
        }
        // P7
        let lhs = field * gh;
        let mut rhs = aux * c0;
        for l in 0..rank {
            rhs += &parts.eigen[l] * weights[l];
        }
        record(6, rel_mat(&(&lhs - &rhs), &lhs, &rhs));
    }

    // P8 and P9 in the Q (state) and R (control) quadratic forms
    for (parts, field, w) in [(&dx, x, q), (&du, u, r)] {
        for l in 0..rank {
            let wl = w * &parts.eigen[l];
            for lp in 0..rank {
                let cross: f64 = parts.eigen[lp]
                    .iter()
                    .zip(wl.iter())
                    .map(|(a, b)| a * b)
                    .sum();
                if l != lp {
                    let scale: f64 = 1.0 + parts.eigen[l].norm() * parts.eigen[lp].norm() * w.norm();
                    record(7, cross.abs() / scale);
                }
            }
            let lhs: f64 = field.iter().zip(wl.iter()).map(|(a, b)| a * b).sum();
            let rhs: f64 = parts.eigen[l].iter().zip(wl.iter()).map(|(a, b)| a * b).sum();
            record(8, rel((lhs - rhs).abs(), lhs, rhs));
        }
    }

    Ok(PropertyReport {
        residuals,
        tolerance,
    })
}

/// A unit vector orthogonal to every retained eigenvector, or `None` when the
/// retained eigenvectors already span the space.
fn null_space_direction(spec: &SpectralData) -> Option<DVector<f64>> {
    let n = spec.n();
    if spec.rank() >= n {
        return None;
    }
    // Gram-Schmidt of the standard basis against the eigenvectors
    for k in 0..n {
        let mut w = DVector::zeros(n);
        w[k] = 1.0;
        for l in 0..spec.rank() {
            let v = spec.eigenvector(l);
            let proj = v.dot(&w);
            w -= v * proj;
        }
        let norm = w.norm();
        if norm > 1e-6 {
            return Some(w / norm);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_coupling, CouplingKind, GraphSpec};
    use crate::spectral::spectral_decompose;
    use crate::tol::Tolerances;
    use crate::weights::{effective_weights, CostCoupling};

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    fn splitmix(state: &mut u64) -> f64 {
        *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (*state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    fn random_matrix(rows: usize, cols: usize, state: &mut u64) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| splitmix(state))
    }

    #[test]
    fn mean_field_projection_reproduces_common_column() {
        let n = 4;
        let v = DVector::from_element(n, 0.5);
        let col = DVector::from_vec(vec![1.0, -2.0]);
        let x = DMatrix::from_fn(2, n, |i, _| col[i]);
        let x1 = project_eigen(&x, &v).unwrap();
        assert!((x1 - &x).norm() < 1e-12);
    }

    #[test]
    fn fig3_first_column_of_eigenstate() {
        let g = GraphSpec::four_cycle(2.0, 1.0);
        let m = build_coupling(&g, &CouplingKind::Adjacency, &tols()).unwrap();
        let spec = spectral_decompose(&m, &tols()).unwrap();
        let mut state = 99u64;
        let x = random_matrix(2, 4, &mut state);
        // eigenvalue -sqrt(10) comes first in ascending order
        let x1 = project_eigen(&x, spec.eigenvector(0)).unwrap();
        let theta = 2.0f64.atan();
        let s = theta.sin() / 8.0f64.sqrt();
        let c = theta.cos() / 8.0f64.sqrt();
        let expected =
            x.column(0) * 0.25 - x.column(1) * s + x.column(2) * 0.25 - x.column(3) * c;
        assert!((x1.column(0) - expected).norm() < 1e-10);
    }

    #[test]
    fn zero_field_projects_to_zero() {
        let x = DMatrix::zeros(3, 4);
        let v = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(project_eigen(&x, &v).unwrap(), DMatrix::zeros(3, 4));
    }

    #[test]
    fn projection_idempotent() {
        let mut state = 7u64;
        let x = random_matrix(3, 5, &mut state);
        let mut v = random_matrix(5, 1, &mut state).column(0).into_owned();
        v /= v.norm();
        let once = project_eigen(&x, &v).unwrap();
        let twice = project_eigen(&once, &v).unwrap();
        assert!((&once - twice).norm() < 1e-12 * (1.0 + once.norm()));
    }

    #[test]
    fn decompose_reconstructs() {
        let g = GraphSpec::four_cycle(2.0, 1.0);
        let m = build_coupling(&g, &CouplingKind::Adjacency, &tols()).unwrap();
        let spec = spectral_decompose(&m, &tols()).unwrap();
        let mut state = 11u64;
        let x = random_matrix(2, 4, &mut state);
        let dx = decompose(&x, &spec).unwrap();
        assert!((dx.recompose() - &x).norm() <= 1e-12 * (1.0 + x.norm()));
        // cross-orthogonality x^l v^l' = 0
        for l in 0..spec.rank() {
            for lp in 0..spec.rank() {
                if l != lp {
                    let z = &dx.eigen[l] * spec.eigenvector(lp);
                    assert!(z.norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn zero_coupling_everything_auxiliary() {
        let m = DMatrix::zeros(3, 3);
        let spec = spectral_decompose(&m, &tols()).unwrap();
        let mut state = 5u64;
        let x = random_matrix(2, 3, &mut state);
        let dx = decompose(&x, &spec).unwrap();
        assert!(dx.eigen.is_empty());
        assert_eq!(dx.auxiliary, x);
    }

    #[test]
    fn mean_field_eigenstate_is_average() {
        let n = 4;
        let m = DMatrix::from_element(n, n, 1.0 / n as f64);
        let spec = spectral_decompose(&m, &tols()).unwrap();
        let mut state = 13u64;
        let x = random_matrix(3, n, &mut state);
        let dx = decompose(&x, &spec).unwrap();
        let mean = x.column_sum() / n as f64;
        for i in 0..n {
            assert!((dx.eigen[0].column(i) - &mean).norm() < 1e-12);
        }
    }

    #[test]
    fn weighted_inner_matches_double_sum() {
        let mut state = 17u64;
        let x = random_matrix(2, 4, &mut state);
        let y = random_matrix(2, 4, &mut state);
        let p = random_matrix(4, 4, &mut state);
        let direct: f64 = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .map(|(i, j)| p[(i, j)] * x.column(i).dot(&y.column(j)))
            .sum();
        let fast = weighted_inner(&x, &y, &p).unwrap();
        assert!((fast - direct).abs() < 1e-12 * (1.0 + direct.abs()));
        // identity weight reduces to sum of columnwise dots
        let id = DMatrix::identity(4, 4);
        let diag: f64 = (0..4).map(|i| x.column(i).dot(&y.column(i))).sum();
        assert!((weighted_inner(&x, &y, &id).unwrap() - diag).abs() < 1e-12);
    }

    #[test]
    fn weighted_inner_single_column() {
        let x = DMatrix::from_column_slice(2, 1, &[3.0, 4.0]);
        let p = DMatrix::from_element(1, 1, 2.0);
        assert!((weighted_inner(&x, &x, &p).unwrap() - 50.0).abs() < 1e-12);
    }

    #[test]
    fn mean_field_deviation_cost() {
        // G = (I - M)^2 with mean-field M: state cost is sum_i |x_i - xbar|_Q^2
        let n = 4;
        let m = DMatrix::from_element(n, n, 1.0 / n as f64);
        let coupling = CostCoupling::Polynomial {
            q: vec![1.0, -2.0, 1.0],
            r: vec![1.0],
        };
        let g = coupling.g_matrix(&m).unwrap();
        let mut state = 23u64;
        let x = random_matrix(2, n, &mut state);
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let mean = x.column_sum() / n as f64;
        let direct: f64 = (0..n)
            .map(|i| {
                let d = x.column(i) - &mean;
                (d.transpose() * &q * d)[(0, 0)]
            })
            .sum();
        let via_inner = weighted_inner(&x, &(&q * &x), &g).unwrap();
        assert!((via_inner - direct).abs() < 1e-10 * (1.0 + direct.abs()));
    }

    #[test]
    fn decomposed_cost_matches_instantaneous() {
        let g = GraphSpec::four_cycle(2.0, 1.0);
        let m = build_coupling(&g, &CouplingKind::Adjacency, &tols()).unwrap();
        let spec = spectral_decompose(&m, &tols()).unwrap();
        let coupling = CostCoupling::Polynomial {
            q: vec![1.0, -0.4, 0.3],
            r: vec![1.0, 0.2],
        };
        let w = effective_weights(&spec, &coupling).unwrap();
        let gm = coupling.g_matrix(&m).unwrap();
        let hm = coupling.h_matrix(&m).unwrap();
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let r = DMatrix::from_element(1, 1, 0.7);
        let mut state = 31u64;
        for _ in 0..20 {
            let x = random_matrix(2, 4, &mut state);
            let u = random_matrix(1, 4, &mut state);
            let direct = instantaneous_cost(&x, &u, &gm, &hm, &q, &r).unwrap();
            let dx = decompose(&x, &spec).unwrap();
            let du = decompose(&u, &spec).unwrap();
            let dec = decomposed_cost(&dx, &du, &spec, &w, &q, &r).unwrap();
            assert!(
                (direct - dec).abs() <= 1e-9 * (1.0 + direct.abs()),
                "direct {direct} vs decomposed {dec}"
            );
        }
    }

    #[test]
    fn consensus_cost_equals_local_error_norms() {
        // G = M^2 (Laplacian M): state cost = sum_i e_i^T Q e_i with
        // e_i = sum_j w_ij (x_i - x_j)
        let gsp = GraphSpec::four_cycle(2.0, 1.0);
        let wadj = gsp.adjacency();
        let m = build_coupling(&gsp, &CouplingKind::Laplacian, &tols()).unwrap();
        let spec = spectral_decompose(&m, &tols()).unwrap();
        let coupling = CostCoupling::Polynomial {
            q: vec![0.0, 0.0, 1.0],
            r: vec![1.0],
        };
        let w = effective_weights(&spec, &coupling).unwrap();
        let q = DMatrix::from_row_slice(2, 2, &[1.5, 0.2, 0.2, 0.9]);
        let r = DMatrix::from_element(1, 1, 1.0);
        let mut state = 41u64;
        let x = random_matrix(2, 4, &mut state);
        let u = DMatrix::zeros(1, 4);
        let dx = decompose(&x, &spec).unwrap();
        let du = decompose(&u, &spec).unwrap();
        let dec = decomposed_cost(&dx, &du, &spec, &w, &q, &r).unwrap();
        let direct: f64 = (0..4)
            .map(|i| {
                let mut e = DVector::zeros(2);
                for j in 0..4 {
                    e += (x.column(i) - x.column(j)) * wadj[(i, j)];
                }
                (e.transpose() * &q * &e)[(0, 0)]
            })
            .sum();
        assert!((dec - direct).abs() < 1e-9 * (1.0 + direct.abs()));
    }

    #[test]
    fn zero_eigen_and_zero_q0_gives_zero_state_cost() {
        let gsp = GraphSpec::four_cycle(2.0, 1.0);
        let m = build_coupling(&gsp, &CouplingKind::Laplacian, &tols()).unwrap();
        let spec = spectral_decompose(&m, &tols()).unwrap();
        let coupling = CostCoupling::Polynomial {
            q: vec![0.0, 0.0, 1.0],
            r: vec![1.0],
        };
        let w = effective_weights(&spec, &coupling).unwrap();
        // a field living entirely in the null space of M: identical columns
        let x = DMatrix::from_fn(2, 4, |i, _| (i + 1) as f64);
        let u = DMatrix::zeros(1, 4);
        let dx = decompose(&x, &spec).unwrap();
        for part in &dx.eigen {
            assert!(part.norm() < 1e-10);
        }
        let du = decompose(&u, &spec).unwrap();
        let q = DMatrix::identity(2, 2);
        let r = DMatrix::identity(1, 1);
        let dec = decomposed_cost(&dx, &du, &spec, &w, &q, &r).unwrap();
        assert!(dec.abs() < 1e-12);
    }

    #[test]
    fn properties_hold_on_random_instances() {
        let mut state = 0xabcdefu64;
        for trial in 0..100 {
            let n = 2 + (splitmix(&mut state).abs() * 7.0) as usize; // 2..=8
            let d_x = 1 + (splitmix(&mut state).abs() * 3.0) as usize; // 1..=3
            let d_u = 1 + (splitmix(&mut state).abs() * 2.0) as usize;
            let raw = random_matrix(n, n, &mut state);
            let m = (&raw + raw.transpose()) * 0.5;
            let spec = spectral_decompose(&m, &tols()).unwrap();
            // random degree <= 3 polynomials with positive constant terms
            let deg = 1 + (splitmix(&mut state).abs() * 3.0) as usize;
            let qc: Vec<f64> = (0..=deg).map(|_| splitmix(&mut state)).collect();
            let rc: Vec<f64> = (0..=deg).map(|_| splitmix(&mut state)).collect();
            let coupling = CostCoupling::Polynomial { q: qc, r: rc };
            let gm = coupling.g_matrix(&m).unwrap();
            let hm = coupling.h_matrix(&m).unwrap();
            let x = random_matrix(d_x, n, &mut state);
            let u = random_matrix(d_u, n, &mut state);
            let q = {
                let raw = random_matrix(d_x, d_x, &mut state);
                &raw * raw.transpose()
            };
            let r = {
                let raw = random_matrix(d_u, d_u, &mut state);
                &raw * raw.transpose()
            };
            let report = check_properties(&x, &u, &spec, &gm, &hm, &m, &q, &r, 1e-9).unwrap();
            assert!(
                report.all_pass(),
                "trial {trial}: failing properties {:?}, residuals {:?}",
                report.failures(),
                report.residuals
            );
        }
    }

    #[test]
    fn auxiliary_annihilated_by_m() {
        let gsp = GraphSpec::four_cycle(2.0, 1.0);
        let m = build_coupling(&gsp, &CouplingKind::Adjacency, &tols()).unwrap();
        let spec = spectral_decompose(&m, &tols()).unwrap();
        let mut state = 55u64;
        let x = random_matrix(2, 4, &mut state);
        let dx = decompose(&x, &spec).unwrap();
        let prod = &dx.auxiliary * &m;
        assert!(prod.norm() <= 1e-10 * x.norm() * m.norm());
    }
}
