//! Backward Riccati differential equations and continuous-time algebraic
//! Riccati equations for the decoupled subsystems and the centralized oracle.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg;
use crate::tol::Tolerances;

/// Data of one linear-quadratic subproblem.
///
/// For an eigen-subsystem this is `A + lambda D`, `B + lambda E`, `q^l Q`,
/// `r^l R`, `q^l Q_T`; for the auxiliary system the same with `lambda = 0`
/// and the constant-term weights.
#[derive(Debug, Clone)]
pub struct LQRData {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub q_t: DMatrix<f64>,
}

impl LQRData {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        q_t: DMatrix<f64>,
    ) -> Result<Self> {
        let d = a.nrows();
        let m = b.ncols();
        if a.ncols() != d || b.nrows() != d || q.shape() != (d, d) || q_t.shape() != (d, d) {
            return Err(Error::DimensionMismatch(
                "LQR data matrices have inconsistent shapes".into(),
            ));
        }
        if r.shape() != (m, m) {
            return Err(Error::DimensionMismatch(format!(
                "R is {}x{}, expected {m}x{m}",
                r.nrows(),
                r.ncols()
            )));
        }
        Ok(Self { a, b, q, r, q_t })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// `B R^-1 B^T`.
    fn control_grammian(&self) -> Result<DMatrix<f64>> {
        let chol = self.r.clone().cholesky().ok_or(Error::SingularR)?;
        let rinv_bt = chol.solve(&self.b.transpose());
        Ok(&self.b * rinv_bt)
    }
}

/// Time-sampled solution of a backward Riccati differential equation.
///
/// Samples are indexed by the forward time grid `t_0 = 0 < ... < t_N = T`;
/// `p[N]` equals the terminal condition exactly.
#[derive(Debug, Clone)]
pub struct RiccatiOdeSolution {
    pub times: Vec<f64>,
    pub p: Vec<DMatrix<f64>>,
    pub step: f64,
}

impl RiccatiOdeSolution {
    /// Linear interpolation of `P(t)` between grid samples.
    pub fn p_at(&self, t: f64) -> Result<DMatrix<f64>> {
        interp_samples(&self.times, &self.p, t)
    }
}

/// Linear interpolation in a uniformly gridded sample list.
pub(crate) fn interp_samples(
    times: &[f64],
    samples: &[DMatrix<f64>],
    t: f64,
) -> Result<DMatrix<f64>> {
    let t_max = *times.last().expect("nonempty grid");
    let slack = 1e-9 * (1.0 + t_max);
    if t < -slack || t > t_max + slack {
        return Err(Error::TimeOutOfRange { t, t_max });
    }
    let t = t.clamp(0.0, t_max);
    let h = times[1] - times[0];
    let k = ((t / h).floor() as usize).min(samples.len() - 2);
    let w = (t - times[k]) / h;
    Ok(&samples[k] * (1.0 - w) + &samples[k + 1] * w)
}

/// Integrate `-dP/dt = A^T P + P A - P B R^-1 B^T P + Q` backward from
/// `P(T) = Q_T` with classical fixed-step RK4 on the time-reversed equation.
///
/// The step is adjusted down so it divides `T` exactly. Every accepted sample
/// is symmetrized and checked finite and PSD.
pub fn solve_riccati_ode(
    data: &LQRData,
    horizon: f64,
    step: f64,
    tol: &Tolerances,
) -> Result<RiccatiOdeSolution> {
    assert!(horizon > 0.0, "horizon must be positive");
    assert!(step > 0.0, "step must be positive");
    let n_steps = (horizon / step).ceil().max(1.0) as usize;
    let h = horizon / n_steps as f64;
    let s = data.control_grammian()?;

    // ds with s = T - t: dP/ds = A^T P + P A - P S P + Q
    let deriv = |p: &DMatrix<f64>| -> DMatrix<f64> {
        let at_p = data.a.transpose() * p;
        &at_p + at_p.transpose() - p * &s * p + &data.q
    };

    let mut p = linalg::symmetrize(&data.q_t);
    let mut samples = vec![DMatrix::zeros(0, 0); n_steps + 1];
    samples[n_steps] = data.q_t.clone();

    for k in (0..n_steps).rev() {
        let k1 = deriv(&p);
        let k2 = deriv(&(&p + &k1 * (h / 2.0)));
        let k3 = deriv(&(&p + &k2 * (h / 2.0)));
        let k4 = deriv(&(&p + &k3 * h));
        p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        p = linalg::symmetrize(&p);

        let t = k as f64 * h;
        if !p.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFiniteBlowup { t });
        }
        let scale = 1.0 + p.norm();
        if linalg::sym_min_eig(&p) < -tol.pd_tol * scale {
            return Err(Error::StepTooLarge(format!(
                "Riccati sample at t = {t} lost positive semi-definiteness"
            )));
        }
        samples[k] = p.clone();
    }

    let times = (0..=n_steps).map(|k| k as f64 * h).collect();
    Ok(RiccatiOdeSolution {
        times,
        p: samples,
        step: h,
    })
}

/// Stabilizing solution of an algebraic Riccati equation.
#[derive(Debug, Clone)]
pub struct AreSolution {
    pub p: DMatrix<f64>,
    /// Frobenius norm of the equation residual at `p`.
    pub residual: f64,
    /// Eigenvalues of the closed loop `A - B R^-1 B^T P`.
    pub closed_loop_eigs: Vec<Complex<f64>>,
}

/// Solve `0 = A^T P + P A - P B R^-1 B^T P + Q` for the stabilizing PSD `P`.
///
/// Primary path: ordered Schur form of the `2d x 2d` Hamiltonian matrix
/// (stable invariant subspace `[U1; U2]`, `P = U2 U1^-1`), followed by Newton
/// refinement through Lyapunov corrections. Falls back to a Kleinman-Newton
/// iteration seeded from a finite-horizon solve when `U1` is ill-conditioned.
pub fn solve_are(data: &LQRData, tol: &Tolerances) -> Result<AreSolution> {
    let d = data.dim();
    let s = data.control_grammian()?;

    let p0 = match hamiltonian_schur_solution(data, &s) {
        Ok(p) => p,
        Err(Error::NoConvergence(_)) | Err(Error::DimensionMismatch(_)) => {
            kleinman_newton_from_scratch(data, &s, tol)?
        }
        Err(e) => return Err(e),
    };

    let p = newton_refine(data, &s, p0)?;

    let residual = are_residual(data, &s, &p).norm();
    let res_scale = 1.0 + p.norm_squared();
    if residual > tol.are_tol * res_scale {
        return Err(Error::NoConvergence(format!(
            "ARE residual {residual:.3e} exceeds {:.3e}",
            tol.are_tol * res_scale
        )));
    }
    let a_cl = &data.a - &s * &p;
    let closed_loop_eigs: Vec<Complex<f64>> =
        a_cl.complex_eigenvalues().iter().copied().collect();
    let h_scale = 1.0 + data.a.norm() + s.norm() + data.q.norm();
    if closed_loop_eigs.iter().any(|e| e.re >= tol.pbh_margin * h_scale) {
        return Err(Error::NotStabilizable(format!(
            "closed loop has a non-negative eigenvalue (d = {d})"
        )));
    }
    let p_scale = 1.0 + p.norm();
    if linalg::sym_min_eig(&p) < -tol.pd_tol * p_scale {
        return Err(Error::NoConvergence(
            "ARE solution is not positive semi-definite".into(),
        ));
    }

    Ok(AreSolution {
        p,
        residual,
        closed_loop_eigs,
    })
}

/// `A^T P + P A - P S P + Q`.
fn are_residual(data: &LQRData, s: &DMatrix<f64>, p: &DMatrix<f64>) -> DMatrix<f64> {
    let at_p = data.a.transpose() * p;
    &at_p + at_p.transpose() - p * s * p + &data.q
}

fn hamiltonian_schur_solution(data: &LQRData, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = data.dim();
    let mut ham = DMatrix::<Complex<f64>>::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            ham[(i, j)] = Complex::new(data.a[(i, j)], 0.0);
            ham[(i, d + j)] = Complex::new(-s[(i, j)], 0.0);
            ham[(d + i, j)] = Complex::new(-data.q[(i, j)], 0.0);
            ham[(d + i, d + j)] = Complex::new(-data.a[(j, i)], 0.0);
        }
    }
    let scale = 1.0 + ham.norm();

    let schur = ham
        .try_schur(1e-14, 10_000)
        .ok_or_else(|| Error::NoConvergence("Schur iteration did not converge".into()))?;
    let (mut q, mut t) = schur.unpack();

    let n_stable = (0..2 * d).filter(|&k| t[(k, k)].re < 0.0).count();
    if n_stable != d {
        return Err(Error::NotStabilizable(format!(
            "Hamiltonian has {n_stable} stable eigenvalues, expected {d} \
             (imaginary-axis eigenvalue or detectability failure)"
        )));
    }
    if (0..2 * d).any(|k| t[(k, k)].re.abs() < 1e-12 * scale) {
        return Err(Error::NotStabilizable(
            "Hamiltonian eigenvalue on the imaginary axis".into(),
        ));
    }

    order_stable_first(&mut t, &mut q);

    let u1 = q.view((0, 0), (d, d)).into_owned();
    let u2 = q.view((d, 0), (d, d)).into_owned();
    let sv = u1.clone().singular_values();
    let cond = sv[0] / sv[sv.len() - 1].max(f64::MIN_POSITIVE);
    if cond > 1e12 {
        return Err(Error::NoConvergence(format!(
            "stable-subspace basis ill-conditioned (cond ~ {cond:.1e})"
        )));
    }
    // P = U2 U1^-1, i.e. solve U1^T P^T = U2^T
    let lu = u1.transpose().lu();
    let pt = lu
        .solve(&u2.transpose())
        .ok_or_else(|| Error::NoConvergence("singular U1 in Schur solve".into()))?;
    let p_complex = pt.transpose();
    let p_real = p_complex.map(|z| z.re);
    let imag_norm = p_complex.map(|z| z.im).norm();
    if imag_norm > 1e-6 * (1.0 + p_real.norm()) {
        return Err(Error::NoConvergence(format!(
            "Schur ARE solution has large imaginary part ({imag_norm:.3e})"
        )));
    }
    Ok(linalg::symmetrize(&p_real))
}

/// Reorder a complex Schur form so eigenvalues with negative real part come
/// first, updating `q` accordingly. Uses adjacent swaps by 2x2 unitary
/// similarity, the triangular analogue of LAPACK's `ztrexc`.
fn order_stable_first(t: &mut DMatrix<Complex<f64>>, q: &mut DMatrix<Complex<f64>>) {
    let m = t.nrows();
    let mut target = 0;
    for j in 0..m {
        if t[(j, j)].re < 0.0 {
            for k in (target..j).rev() {
                swap_adjacent(t, q, k);
            }
            target += 1;
        }
    }
}

/// Swap the diagonal entries at positions `k`, `k+1` of an upper-triangular
/// Schur form by a unitary similarity.
fn swap_adjacent(t: &mut DMatrix<Complex<f64>>, q: &mut DMatrix<Complex<f64>>, k: usize) {
    let a = t[(k, k)];
    let b = t[(k, k + 1)];
    let c = t[(k + 1, k + 1)];
    // eigenvector of [[a, b], [0, c]] for eigenvalue c
    let x1 = b;
    let x2 = c - a;
    let norm = (x1.norm_sqr() + x2.norm_sqr()).sqrt();
    if norm == 0.0 {
        return; // equal eigenvalues, nothing to do
    }
    let u1 = x1 / norm;
    let u2 = x2 / norm;
    // G = [[u1, -conj(u2)], [u2, conj(u1)]]; first column is the eigenvector
    let m = t.nrows();
    // rows k, k+1: T <- G^H T
    for col in 0..m {
        let r1 = t[(k, col)];
        let r2 = t[(k + 1, col)];
        t[(k, col)] = u1.conj() * r1 + u2.conj() * r2;
        t[(k + 1, col)] = -u2 * r1 + u1 * r2;
    }
    // columns k, k+1: T <- T G
    for row in 0..m {
        let c1 = t[(row, k)];
        let c2 = t[(row, k + 1)];
        t[(row, k)] = c1 * u1 + c2 * u2;
        t[(row, k + 1)] = -c1 * u2.conj() + c2 * u1.conj();
    }
    // accumulate into Q
    for row in 0..m {
        let c1 = q[(row, k)];
        let c2 = q[(row, k + 1)];
        q[(row, k)] = c1 * u1 + c2 * u2;
        q[(row, k + 1)] = -c1 * u2.conj() + c2 * u1.conj();
    }
    t[(k + 1, k)] = Complex::new(0.0, 0.0);
}

/// Solve the Lyapunov equation `A^T X + X A + C = 0` by Kronecker
/// vectorization; intended for the small matrices this crate works with.
fn lyapunov_solve(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = a.nrows();
    let eye = DMatrix::identity(d, d);
    let at = a.transpose();
    let coeff = linalg::kron(&eye, &at) + linalg::kron(&at, &eye);
    let rhs = -linalg::vec_of(c);
    let x = coeff
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NoConvergence("singular Lyapunov operator".into()))?;
    Ok(linalg::symmetrize(&linalg::unvec(&x, d, d)))
}

/// Newton (defect-correction) refinement of an approximate stabilizing ARE
/// solution. Quadratically convergent; a few steps take the Schur solution to
/// machine-level residuals.
fn newton_refine(data: &LQRData, s: &DMatrix<f64>, mut p: DMatrix<f64>) -> Result<DMatrix<f64>> {
    for _ in 0..20 {
        let res = are_residual(data, s, &p);
        if res.norm() <= 1e-13 * (1.0 + p.norm_squared()) {
            break;
        }
        let a_cl = &data.a - s * &p;
        let delta = lyapunov_solve(&a_cl, &res)?;
        let p_next = linalg::symmetrize(&(&p + &delta));
        if !p_next.iter().all(|x| x.is_finite()) {
            return Err(Error::NoConvergence("Newton refinement diverged".into()));
        }
        let stalled = delta.norm() <= f64::EPSILON * (1.0 + p.norm());
        p = p_next;
        if stalled {
            break;
        }
    }
    Ok(p)
}

/// Kleinman-Newton from a stabilizing gain found by integrating the Riccati
/// ODE over a doubling horizon. Used only when the Schur path fails.
fn kleinman_newton_from_scratch(
    data: &LQRData,
    s: &DMatrix<f64>,
    tol: &Tolerances,
) -> Result<DMatrix<f64>> {
    let d = data.dim();
    // regularized finite-horizon solve to find a stabilizing seed
    let mut seed_data = data.clone();
    seed_data.q_t = DMatrix::identity(d, d);
    for i in 0..d {
        seed_data.q[(i, i)] += 1e-6 * (1.0 + data.q.norm());
    }
    let mut horizon = 1.0;
    let mut p_seed = None;
    for _ in 0..12 {
        // a blow-up of the seed solve means no stabilizing seed exists
        let Ok(sol) = solve_riccati_ode(&seed_data, horizon, horizon / 400.0, tol) else {
            break;
        };
        let p = sol.p[0].clone();
        let a_cl = &data.a - s * &p;
        if a_cl.complex_eigenvalues().iter().all(|e| e.re < 0.0) {
            p_seed = Some(p);
            break;
        }
        horizon *= 2.0;
    }
    let mut p = p_seed.ok_or_else(|| {
        Error::NotStabilizable("no stabilizing seed found for Kleinman-Newton".into())
    })?;

    for _ in 0..100 {
        let a_cl = &data.a - s * &p;
        // A_cl^T X + X A_cl + Q + P S P = 0
        let c = &data.q + &p * s * &p;
        let p_next = lyapunov_solve(&a_cl, &c)?;
        let diff = (&p_next - &p).norm();
        p = p_next;
        if diff <= 1e-13 * (1.0 + p.norm()) {
            return Ok(p);
        }
    }
    Err(Error::NoConvergence(
        "Kleinman-Newton iteration budget exhausted".into(),
    ))
}

/// Gain `K = (r_scale R)^-1 B^T P`.
///
/// `R` is passed unscaled with the scalar weight separate, mirroring how the
/// decomposed gains `K^l = (r^l R)^-1 (B + lambda^l E)^T P^l` are written.
pub fn gain_from_solution(
    p: &DMatrix<f64>,
    b: &DMatrix<f64>,
    r: &DMatrix<f64>,
    r_scale: f64,
) -> Result<DMatrix<f64>> {
    if r_scale <= 0.0 {
        return Err(Error::SingularR);
    }
    if b.nrows() != p.nrows() || r.nrows() != b.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "gain dimensions: P {}x{}, B {}x{}, R {}x{}",
            p.nrows(),
            p.ncols(),
            b.nrows(),
            b.ncols(),
            r.nrows(),
            r.ncols()
        )));
    }
    let chol = (r * r_scale).cholesky().ok_or(Error::SingularR)?;
    Ok(chol.solve(&(b.transpose() * p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    fn scalar_data(a: f64, b: f64, q: f64, r: f64, q_t: f64) -> LQRData {
        LQRData::new(
            dmatrix![a],
            dmatrix![b],
            dmatrix![q],
            dmatrix![r],
            dmatrix![q_t],
        )
        .unwrap()
    }

    #[test]
    fn scalar_ode_matches_tanh() {
        // A=0, B=1, Q=1, R=1, Q_T=0, T=2: P(t) = tanh(T - t)
        let data = scalar_data(0.0, 1.0, 1.0, 1.0, 0.0);
        let sol = solve_riccati_ode(&data, 2.0, 2.0 / 2000.0, &tols()).unwrap();
        assert!((sol.p[0][(0, 0)] - 2.0f64.tanh()).abs() < 1e-6);
        for (k, &t) in sol.times.iter().enumerate() {
            assert!((sol.p[k][(0, 0)] - (2.0 - t).tanh()).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_cost_gives_zero_solution() {
        let data = scalar_data(0.3, 1.0, 0.0, 1.0, 0.0);
        let sol = solve_riccati_ode(&data, 2.0, 1e-3, &tols()).unwrap();
        for p in &sol.p {
            assert_eq!(p[(0, 0)], 0.0);
        }
    }

    #[test]
    fn auxiliary_equation_of_laplacian_example_is_zero() {
        // -dP/dt = 0.2 P - 10 P^2 + 0, P(T) = 0  =>  P = 0
        let data = scalar_data(0.1, 1.0, 0.0, 0.1, 0.0);
        let sol = solve_riccati_ode(&data, 2.0, 1e-3, &tols()).unwrap();
        for p in &sol.p {
            assert_eq!(p[(0, 0)], 0.0);
        }
    }

    #[test]
    fn terminal_condition_exact() {
        let data = scalar_data(1.0, 1.0, 2.0, 1.0, 6.0);
        let sol = solve_riccati_ode(&data, 1.0, 1e-3, &tols()).unwrap();
        assert_eq!(sol.p.last().unwrap()[(0, 0)], 6.0);
    }

    #[test]
    fn rk4_convergence_order() {
        // halving the step should reduce the error at t=0 by >= 12x
        let cases = [
            scalar_data(0.7, 1.0, 2.0, 0.5, 1.0),
            LQRData::new(
                dmatrix![0.0, 1.0; -1.0, -0.4],
                dmatrix![0.0; 1.0],
                dmatrix![1.0, 0.0; 0.0, 2.0],
                dmatrix![0.5],
                dmatrix![1.0, 0.0; 0.0, 1.0],
            )
            .unwrap(),
        ];
        for data in cases {
            let horizon = 1.0;
            let coarse = 1.0 / 50.0;
            let reference = solve_riccati_ode(&data, horizon, coarse / 100.0, &tols()).unwrap();
            let p_ref = &reference.p[0];
            let e1 = (&solve_riccati_ode(&data, horizon, coarse, &tols()).unwrap().p[0] - p_ref)
                .norm();
            let e2 = (&solve_riccati_ode(&data, horizon, coarse / 2.0, &tols())
                .unwrap()
                .p[0]
                - p_ref)
                .norm();
            assert!(
                e1 / e2 >= 12.0,
                "convergence ratio {} below 4th-order expectation",
                e1 / e2
            );
        }
    }

    #[test]
    fn scalar_are() {
        // 0 = -P^2 + 1, stabilizing P = 1
        let data = scalar_data(0.0, 1.0, 1.0, 1.0, 0.0);
        let sol = solve_are(&data, &tols()).unwrap();
        assert!((sol.p[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(sol.residual < 1e-12);
        assert!(sol.closed_loop_eigs.iter().all(|e| e.re < 0.0));
    }

    #[test]
    fn consensus_eigen_are() {
        // 0 = -P^2/R + lambda^2 Q with Q=1, R=0.1, lambda=2: P = 2 sqrt(0.1)
        let data = scalar_data(0.0, 1.0, 4.0, 0.1, 0.0);
        let sol = solve_are(&data, &tols()).unwrap();
        assert!((sol.p[(0, 0)] - 2.0 * 0.1f64.sqrt()).abs() < 1e-12);
        assert!(sol.residual < 1e-12);
    }

    #[test]
    fn unstabilizable_rejected() {
        let data = scalar_data(1.0, 0.0, 1.0, 1.0, 0.0);
        assert!(matches!(
            solve_are(&data, &tols()),
            Err(Error::NotStabilizable(_)) | Err(Error::SingularR)
        ));
    }

    #[test]
    fn are_matrix_case_residual() {
        let data = LQRData::new(
            dmatrix![0.2, 1.0; 0.0, -0.5],
            dmatrix![0.0; 1.0],
            dmatrix![2.0, 0.3; 0.3, 1.0],
            dmatrix![0.7],
            dmatrix![0.0, 0.0; 0.0, 0.0],
        )
        .unwrap();
        let sol = solve_are(&data, &tols()).unwrap();
        assert!(sol.residual <= 1e-9 * (1.0 + sol.p.norm_squared()));
        assert!(sol.closed_loop_eigs.iter().all(|e| e.re < 0.0));
        assert!(linalg::sym_min_eig(&sol.p) >= -1e-10);
    }

    #[test]
    fn ode_approaches_are_for_long_horizon() {
        let data = LQRData::new(
            dmatrix![0.1, 0.8; -0.3, 0.2],
            dmatrix![1.0; 0.5],
            dmatrix![1.0, 0.0; 0.0, 1.0],
            dmatrix![1.0],
            dmatrix![0.0, 0.0; 0.0, 0.0],
        )
        .unwrap();
        let are = solve_are(&data, &tols()).unwrap();
        let ode = solve_riccati_ode(&data, 40.0, 40.0 / 8000.0, &tols()).unwrap();
        assert!((&ode.p[0] - &are.p).norm() < 1e-6);
    }

    #[test]
    fn gain_scaling_identity() {
        // gain from (P; R, r) equals the gain computed with R_bar = r R directly
        let b = dmatrix![0.3; 1.0];
        let r = dmatrix![2.0];
        let p = dmatrix![1.5, 0.2; 0.2, 0.8];
        let k1 = gain_from_solution(&p, &b, &r, 3.0).unwrap();
        let k2 = gain_from_solution(&p, &b, &(&r * 3.0), 1.0).unwrap();
        assert!((k1 - k2).norm() < 1e-14);
    }

    #[test]
    fn trivial_gains() {
        let k = gain_from_solution(&dmatrix![1.0], &dmatrix![1.0], &dmatrix![1.0], 1.0).unwrap();
        assert_eq!(k[(0, 0)], 1.0);
        let k = gain_from_solution(&dmatrix![0.0], &dmatrix![1.0], &dmatrix![1.0], 1.0).unwrap();
        assert_eq!(k[(0, 0)], 0.0);
    }

    #[test]
    fn example1_eigen_gain_shape() {
        // B = 1, E = 0.5, lambda = -sqrt(10), R = 2, r^l = 1:
        // K = (1/2) (1 - 0.5 sqrt(10)) P
        let rho = 10.0f64.sqrt();
        let b_eff = dmatrix![1.0 - 0.5 * rho];
        let p = dmatrix![0.37];
        let k = gain_from_solution(&p, &b_eff, &dmatrix![2.0], 1.0).unwrap();
        assert!((k[(0, 0)] - 0.5 * (1.0 - 0.5 * rho) * 0.37).abs() < 1e-14);
    }

    #[test]
    fn singular_r_reported() {
        assert!(matches!(
            gain_from_solution(&dmatrix![1.0], &dmatrix![1.0], &dmatrix![0.0], 1.0),
            Err(Error::SingularR)
        ));
    }
}
