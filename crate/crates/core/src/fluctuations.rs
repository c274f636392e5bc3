//! Linearized quadrature fluctuations around the mean field.
//!
//! Quadrature ordering is (δX_p, δY_p, δx_m, δp_m, δX_q, δY_q) for plasmon,
//! cantilever and emitter. The emitter is bosonized in the weak-excitation
//! limit so the whole state is Gaussian. Vacuum variance is 1/2:
//! V_ij = ⟨{δu_i, δu_j}⟩/2.
//!
//! The drift is the Jacobian of [`mean_field_rhs`] in a gauge where ᾱ is real
//! and positive; the same rotation is applied to the emitter so the
//! plasmon–emitter coupling keeps its form. The steady covariance solves
//! A V + V Aᵀ + D = 0.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix6, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

use crate::meanfield::{mean_field_rhs, to_quadratures, MeanFieldState, QuadratureState};
use crate::params::SystemParams;

pub type Mat6 = Matrix6<f64>;

/// Spectral abscissa must be below this for a stable drift.
pub const STABILITY_MARGIN: f64 = -1e-12;
/// Kronecker systems beyond this 1-norm condition number are flagged.
pub const ILL_CONDITIONED: f64 = 1e14;
/// Relative Lyapunov residual accepted for a returned covariance.
pub const RESIDUAL_BOUND: f64 = 1e-10;
/// Longer RK4 runs are evaluated by powering the one-step map.
pub const DIRECT_STEP_LIMIT: u64 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FluctuationError {
    #[error("mean-field state is not converged")]
    Unconverged,
    #[error("drift matrix is unstable (spectral abscissa {abscissa:e})")]
    Unstable { abscissa: f64 },
    #[error("Lyapunov residual {residual:e} exceeds {bound:e}")]
    Residual { residual: f64, bound: f64 },
    #[error("Kronecker system is singular")]
    Singular,
    #[error("step too large: dt * |A| = {0} (must be < 0.1)")]
    StepTooLarge(f64),
    #[error("invalid integration horizon t = {0}, dt = {1}")]
    BadHorizon(f64, f64),
    #[error("covariance blew up before t = {0}")]
    BlowUp(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftMatrix {
    pub a: Mat6,
    /// Phase of ᾱ rotated out of plasmon and emitter quadratures: lab-frame
    /// quadratures are R(φ) times the ones used here.
    pub gauge_phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionMatrix {
    pub d: Mat6,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix {
    pub v: Mat6,
}

/// Symplectic form ⊕ [[0, 1], [−1, 0]] over three modes.
pub fn symplectic_form() -> Mat6 {
    let mut o = Mat6::zeros();
    for k in 0..3 {
        o[(2 * k, 2 * k + 1)] = 1.0;
        o[(2 * k + 1, 2 * k)] = -1.0;
    }
    o
}

impl CovarianceMatrix {
    /// Smallest eigenvalue of the Hermitian matrix V + iΩ/2; negative
    /// values mean the state violates the uncertainty principle.
    pub fn physicality_margin(&self) -> f64 {
        let o = symplectic_form();
        let h = Matrix6::<Complex64>::from_fn(|i, j| Complex64::new(self.v[(i, j)], 0.5 * o[(i, j)]));
        SymmetricEigen::new(h).eigenvalues.min()
    }

    pub fn block(&self, mode: usize) -> Matrix2<f64> {
        self.v.fixed_view::<2, 2>(2 * mode, 2 * mode).into_owned()
    }
}

/// Rotation taking gauge quadratures to lab quadratures.
fn gauge_rotation(phase: f64) -> Mat6 {
    let (s, c) = phase.sin_cos();
    let mut r = Mat6::identity();
    for k in [0, 4] {
        r[(k, k)] = c;
        r[(k, k + 1)] = -s;
        r[(k + 1, k)] = s;
        r[(k + 1, k + 1)] = c;
    }
    r
}

/// Analytic Jacobian of [`mean_field_rhs`] at `u`, lab frame.
pub fn mean_field_jacobian(p: &SystemParams, u: &QuadratureState) -> Mat6 {
    let (pl, em, me) = (&p.plasmon, &p.emitter, &p.mech);
    let [xp, yp, xm, _, _, _] = *u;
    let g = me.g_single;
    let dp = pl.omega_p - p.drive.omega + g * xm;
    let dq = em.omega_qe - p.drive.omega;
    let f = em.f_coupling;
    let fy = f * em.inversion_y;
    #[rustfmt::skip]
    let a = Mat6::new(
        -pl.gamma_p, dp,          g * yp,      0.0,         0.0,          f,
        -dp,         -pl.gamma_p, -g * xp,     0.0,         -f,           0.0,
        0.0,         0.0,         -me.gamma_m, me.omega_m,  0.0,          0.0,
        -g * xp,     -g * yp,     -me.omega_m, -me.gamma_m, 0.0,          0.0,
        0.0,         -fy,         0.0,         0.0,         -em.gamma_qe, dq,
        fy,          0.0,         0.0,         0.0,         -dq,          -em.gamma_qe,
    );
    a
}

/// Mean-field vector field expressed in gauge coordinates v = Rᵀu.
pub fn gauge_rhs(p: &SystemParams, phase: f64, v: &QuadratureState) -> QuadratureState {
    let r = gauge_rotation(phase);
    let lab = r * nalgebra::Vector6::from_column_slice(v);
    let f = mean_field_rhs(p, &lab.into());
    let back = r.transpose() * nalgebra::Vector6::from_column_slice(&f);
    back.into()
}

/// Mean-field state in gauge coordinates (ᾱ real, Y_p = 0).
pub fn gauge_state(s: &MeanFieldState) -> (f64, QuadratureState) {
    let phase = if s.alpha.norm() > 0.0 { s.alpha.arg() } else { 0.0 };
    let u = nalgebra::Vector6::from_column_slice(&to_quadratures(s));
    let v = gauge_rotation(phase).transpose() * u;
    (phase, v.into())
}

/// Linearized drift at the mean-field state; G = |ᾱ| g enters real.
pub fn drift_matrix(p: &SystemParams, s: &MeanFieldState) -> Result<DriftMatrix, FluctuationError> {
    if !s.converged {
        return Err(FluctuationError::Unconverged);
    }
    let phase = if s.alpha.norm() > 0.0 { s.alpha.arg() } else { 0.0 };
    let r = gauge_rotation(phase);
    let j = mean_field_jacobian(p, &to_quadratures(s));
    Ok(DriftMatrix {
        a: r.transpose() * j * r,
        gauge_phase: phase,
    })
}

/// Input noise: vacuum for plasmon and emitter, thermal for the cantilever.
pub fn diffusion_matrix(p: &SystemParams) -> DiffusionMatrix {
    let th = p.mech.gamma_m * (2.0 * p.mech.n_bar + 1.0);
    let gp = p.plasmon.gamma_p;
    let gq = p.emitter.gamma_qe;
    DiffusionMatrix {
        d: Mat6::from_diagonal(&nalgebra::Vector6::new(gp, gp, th, th, gq, gq)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stability {
    pub stable: bool,
    /// Largest real part of the drift eigenvalues.
    pub abscissa: f64,
}

pub fn is_stable(a: &DriftMatrix) -> Stability {
    let abscissa =
        a.a.complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
    Stability {
        stable: abscissa < STABILITY_MARGIN,
        abscissa,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovSolution {
    pub cov: CovarianceMatrix,
    /// ‖A V + V Aᵀ + D‖_F.
    pub residual: f64,
    /// 1-norm condition number of the Kronecker-sum system.
    pub condition: f64,
    pub ill_conditioned: bool,
}

fn lyapunov_residual(a: &Mat6, v: &Mat6, d: &Mat6) -> Mat6 {
    a * v + v * a.transpose() + d
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Steady covariance from the vectorized Lyapunov equation
/// (I ⊗ A + A ⊗ I) vec V = −vec D.
pub fn solve_lyapunov(a: &DriftMatrix, d: &DiffusionMatrix) -> Result<LyapunovSolution, FluctuationError> {
    let stab = is_stable(a);
    if !stab.stable {
        return Err(FluctuationError::Unstable {
            abscissa: stab.abscissa,
        });
    }
    let n = 6;
    let am = &a.a;
    // column-major vec: V_ij -> i + n j
    let k = DMatrix::from_fn(n * n, n * n, |row, col| {
        let (i, j) = (row % n, row / n);
        let (p, q) = (col % n, col / n);
        let mut v = 0.0;
        if q == j {
            v += am[(i, p)];
        }
        if p == i {
            v += am[(j, q)];
        }
        v
    });
    let rhs = -DVector::from_column_slice(d.d.as_slice());
    let lu = k.clone().full_piv_lu();
    let mut x = lu.solve(&rhs).ok_or(FluctuationError::Singular)?;
    // two rounds of refinement recover digits lost to the stiff spectrum
    for _ in 0..2 {
        let r = &rhs - &k * &x;
        if let Some(dx) = lu.solve(&r) {
            x += dx;
        }
    }
    let condition = lu
        .try_inverse()
        .map(|inv| one_norm(&k) * one_norm(&inv))
        .unwrap_or(f64::INFINITY);

    let v = Mat6::from_column_slice(x.as_slice());
    let v = 0.5 * (v + v.transpose());
    let residual = lyapunov_residual(am, &v, &d.d).norm();
    let bound = RESIDUAL_BOUND * d.d.norm();
    if !(residual <= bound) {
        return Err(FluctuationError::Residual { residual, bound });
    }
    Ok(LyapunovSolution {
        cov: CovarianceMatrix { v },
        residual,
        condition,
        ill_conditioned: condition > ILL_CONDITIONED,
    })
}

/// One RK4 increment of dV/dt = A V + V Aᵀ + D.
fn rk4_increment(a: &Mat6, d: &Mat6, v: &Mat6, h: f64) -> Mat6 {
    let f = |m: &Mat6| lyapunov_residual(a, m, d);
    let k1 = f(v);
    let k2 = f(&(v + k1 * (h / 2.0)));
    let k3 = f(&(v + k2 * (h / 2.0)));
    let k4 = f(&(v + k3 * h));
    (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Affine map u ↦ u + N u + c on vec V, stored as (N, c) so that slow decay
/// rates (N ~ γ_m dt ~ 1e-11) are not rounded against the identity.
struct AffineStep {
    n: DMatrix<f64>,
    c: DVector<f64>,
}

impl AffineStep {
    fn identity() -> Self {
        Self {
            n: DMatrix::zeros(36, 36),
            c: DVector::zeros(36),
        }
    }

    fn from_rk4(a: &Mat6, d: &Mat6, h: f64) -> Self {
        let zero = Mat6::zeros();
        let mut n = DMatrix::zeros(36, 36);
        for col in 0..36 {
            let mut e = Mat6::zeros();
            e[col] = 1.0;
            let inc = rk4_increment(a, &zero, &e, h);
            n.column_mut(col).copy_from_slice(inc.as_slice());
        }
        let c = DVector::from_column_slice(rk4_increment(a, d, &zero, h).as_slice());
        Self { n, c }
    }

    /// `self` applied after `first`.
    fn after(&self, first: &AffineStep) -> Self {
        Self {
            n: &self.n + &first.n + &self.n * &first.n,
            c: &self.c + &first.c + &self.n * &first.c,
        }
    }

    fn is_finite(&self) -> bool {
        self.n.iter().chain(self.c.iter()).all(|x| x.is_finite())
    }
}

/// Integrates dV/dt = A V + V Aᵀ + D with classical RK4 from `v0`.
///
/// Up to [`DIRECT_STEP_LIMIT`] steps the matrix is stepped and re-symmetrized
/// explicitly. Longer horizons raise the (linear, affine) one-step map to the
/// step count by repeated squaring, which is the same RK4 trajectory up to
/// rounding.
pub fn integrate_covariance(
    a: &DriftMatrix,
    d: &DiffusionMatrix,
    v0: &CovarianceMatrix,
    t_final: f64,
    dt: f64,
) -> Result<CovarianceMatrix, FluctuationError> {
    if !(dt > 0.0 && t_final >= 0.0 && t_final.is_finite()) {
        return Err(FluctuationError::BadHorizon(t_final, dt));
    }
    let product = dt * a.a.norm();
    if !(product < 0.1) {
        return Err(FluctuationError::StepTooLarge(product));
    }
    let steps = (t_final / dt).ceil().max(1.0) as u64;
    let h = t_final / steps as f64;

    if steps <= DIRECT_STEP_LIMIT {
        let mut v = v0.v;
        for k in 0..steps {
            v += rk4_increment(&a.a, &d.d, &v, h);
            v = 0.5 * (v + v.transpose());
            if !v.iter().all(|x| x.is_finite()) {
                return Err(FluctuationError::BlowUp(h * (k + 1) as f64));
            }
        }
        return Ok(CovarianceMatrix { v });
    }

    let mut base = AffineStep::from_rk4(&a.a, &d.d, h);
    let mut total = AffineStep::identity();
    let mut remaining = steps;
    let mut covered = 1u64;
    while remaining > 0 {
        if remaining & 1 == 1 {
            total = base.after(&total);
        }
        remaining >>= 1;
        if remaining > 0 {
            base = base.after(&base);
            covered = covered.saturating_mul(2);
        }
        if !(total.is_finite() && base.is_finite()) {
            return Err(FluctuationError::BlowUp(h * covered as f64));
        }
    }
    let u0 = DVector::from_column_slice(v0.v.as_slice());
    let u = &u0 + &total.n * &u0 + &total.c;
    let v = Mat6::from_column_slice(u.as_slice());
    let v = 0.5 * (v + v.transpose());
    if !v.iter().all(|x| x.is_finite()) {
        return Err(FluctuationError::BlowUp(t_final));
    }
    Ok(CovarianceMatrix { v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fano::plasmon_amplitude;
    use crate::meanfield::steady_state;
    use crate::params::default_params;
    use approx::assert_relative_eq;

    fn drift_of(p: &SystemParams) -> DriftMatrix {
        drift_matrix(p, &steady_state(p).unwrap()).unwrap()
    }

    fn fd_jacobian(p: &SystemParams, s: &MeanFieldState, h: f64) -> Mat6 {
        let (phase, v0) = gauge_state(s);
        let mut j = Mat6::zeros();
        for col in 0..6 {
            let (mut vp, mut vm) = (v0, v0);
            vp[col] += h;
            vm[col] -= h;
            let (fp, fm) = (gauge_rhs(p, phase, &vp), gauge_rhs(p, phase, &vm));
            for row in 0..6 {
                j[(row, col)] = (fp[row] - fm[row]) / (2.0 * h);
            }
        }
        j
    }

    #[test]
    fn decoupled_blocks() {
        let mut p = default_params();
        p.mech.g_single = 0.0;
        p.emitter.f_coupling = 0.0;
        p.drive.omega = 0.97;
        let a = drift_of(&p).a;
        for i in 0..6 {
            for j in 0..6 {
                if i / 2 != j / 2 {
                    assert_eq!(a[(i, j)], 0.0, "({i},{j})");
                }
            }
        }
        let ev = a.fixed_view::<2, 2>(0, 0).into_owned().complex_eigenvalues();
        for z in ev.iter() {
            assert_relative_eq!(z.re, -0.1, max_relative = 1e-12);
            assert_relative_eq!(z.im.abs(), 0.03, max_relative = 1e-9);
        }
    }

    #[test]
    fn coupling_is_real_in_gauge() {
        let mut p = default_params();
        p.emitter.omega_qe = 1.002;
        let s = steady_state(&p).unwrap();
        let a = drift_matrix(&p, &s).unwrap().a;
        let g = std::f64::consts::SQRT_2 * s.alpha.norm() * p.mech.g_single;
        assert_relative_eq!(a[(1, 2)], -g, max_relative = 1e-12);
        assert_relative_eq!(a[(3, 0)], -g, max_relative = 1e-12);
        assert!(a[(0, 2)].abs() <= 1e-12 * g);
        assert!(a[(3, 1)].abs() <= 1e-12 * g);
    }

    #[test]
    fn matches_finite_differences_at_defaults() {
        let mut p = default_params();
        p.emitter.omega_qe = 1.0015;
        let s = steady_state(&p).unwrap();
        let a = drift_matrix(&p, &s).unwrap().a;
        let fd = fd_jacobian(&p, &s, 1e-6);
        let rel = (a - fd).abs().max() / a.abs().max();
        assert!(rel <= 1e-6, "relative error {rel:e}");
    }

    #[test]
    fn fano_block_reproduces_linear_response() {
        let mut p = default_params();
        p.mech.g_single = 0.0;
        for w in [0.98, 0.999_99, 1.0, 1.000_03, 1.01] {
            p.drive.omega = w;
            let d = drift_of(&p);
            let a4 = nalgebra::Matrix4::from_fn(|i, j| {
                let m = |k: usize| if k < 2 { k } else { k + 2 };
                d.a[(m(i), m(j))]
            });
            // constant drive in lab quadratures, rotated into the gauge
            let (s, c) = d.gauge_phase.sin_cos();
            let b_lab = -std::f64::consts::SQRT_2 * p.plasmon.eps_drive;
            let b = nalgebra::Vector4::new(s * b_lab, c * b_lab, 0.0, 0.0);
            let u = -a4.try_inverse().unwrap() * b;
            let alpha_gauge = Complex64::new(u[0], u[1]) / std::f64::consts::SQRT_2;
            let alpha = alpha_gauge * Complex64::from_polar(1.0, d.gauge_phase);
            let want = Complex64::new(0.0, -1.0) * plasmon_amplitude(w, &p).unwrap();
            assert!(
                (alpha - want).norm() <= 1e-10 * want.norm().max(1e-3),
                "{alpha} vs {want}"
            );
        }
    }

    #[test]
    fn diffusion_entries() {
        let mut p = default_params();
        let d = diffusion_matrix(&p).d;
        let gm = p.mech.gamma_m;
        assert_eq!(d.diagonal(), nalgebra::Vector6::new(0.1, 0.1, gm, gm, 1e-5, 1e-5));
        p.mech.n_bar = 10.0;
        let d = diffusion_matrix(&p).d;
        assert_relative_eq!(d[(2, 2)], 21.0 * gm, max_relative = 1e-15);
        assert_eq!(d, d.transpose());
        assert!(d.diagonal().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn stability_examples() {
        let neg = DriftMatrix {
            a: -Mat6::identity(),
            gauge_phase: 0.0,
        };
        let s = is_stable(&neg);
        assert!(s.stable);
        assert_relative_eq!(s.abscissa, -1.0, max_relative = 1e-14);

        let mut m = -Mat6::identity();
        m[(5, 5)] = 0.0;
        assert!(!is_stable(&DriftMatrix { a: m, gauge_phase: 0.0 }).stable);

        let st = is_stable(&drift_of(&default_params()));
        assert!(st.stable, "{st:?}");
    }

    #[test]
    fn isotropic_decay_gives_vacuum() {
        let g = 0.3;
        let a = DriftMatrix {
            a: -Mat6::identity() * (g / 2.0),
            gauge_phase: 0.0,
        };
        let d = DiffusionMatrix {
            d: Mat6::identity() * (g / 2.0),
        };
        let v = solve_lyapunov(&a, &d).unwrap().cov.v;
        assert!((v - Mat6::identity() * 0.5).abs().max() <= 1e-15);
    }

    #[test]
    fn thermal_mechanics_when_decoupled() {
        let mut p = default_params();
        p.mech.g_single = 0.0;
        p.emitter.f_coupling = 0.0;
        p.mech.n_bar = 5.0;
        let sol = solve_lyapunov(&drift_of(&p), &diffusion_matrix(&p)).unwrap();
        let m = sol.cov.block(1);
        assert!((m - Matrix2::identity() * 5.5).abs().max() <= 1e-12, "{m}");
    }

    #[test]
    fn unstable_drift_is_rejected() {
        let mut m = -Mat6::identity();
        m[(0, 0)] = 0.1;
        let a = DriftMatrix { a: m, gauge_phase: 0.0 };
        assert!(matches!(
            solve_lyapunov(&a, &diffusion_matrix(&default_params())),
            Err(FluctuationError::Unstable { .. })
        ));
    }

    #[test]
    fn default_covariance_matches_ode() {
        let mut p = default_params();
        p.emitter.omega_qe = 1.0 + 0.007 / 2.035;
        let a = drift_of(&p);
        let d = diffusion_matrix(&p);
        let sol = solve_lyapunov(&a, &d).unwrap();
        assert!(sol.cov.physicality_margin() >= -1e-10);
        let v0 = CovarianceMatrix {
            v: Mat6::identity() * 0.5,
        };
        let dt = 0.09 / a.a.norm();
        let t = 50.0 / p.mech.gamma_m;
        let v = integrate_covariance(&a, &d, &v0, t, dt).unwrap().v;
        let diff = (v - sol.cov.v).abs().max();
        assert!(diff <= 1e-6, "max diff {diff:e}");
    }

    #[test]
    fn stationary_start_stays_put() {
        let mut p = default_params();
        p.mech.omega_m = 0.02;
        p.mech.gamma_m = 2e-3;
        p.mech.g_single = 0.5;
        p.emitter.omega_qe = 1.003;
        let a = drift_of(&p);
        let d = diffusion_matrix(&p);
        let vss = solve_lyapunov(&a, &d).unwrap().cov;
        let dt = 0.05 / a.a.norm();
        let v = integrate_covariance(&a, &d, &vss, 200.0, dt).unwrap();
        assert!((v.v - vss.v).abs().max() <= 1e-10);
    }

    #[test]
    fn homogeneous_flow_decays() {
        let mut p = default_params();
        p.mech.omega_m = 0.02;
        p.mech.gamma_m = 2e-3;
        p.emitter.gamma_qe = 1e-3;
        let a = drift_of(&p);
        let zero = DiffusionMatrix { d: Mat6::zeros() };
        let vss = solve_lyapunov(&a, &diffusion_matrix(&p)).unwrap().cov;
        let dt = 0.05 / a.a.norm();
        let t = 30.0 / p.mech.gamma_m;
        let v = integrate_covariance(&a, &zero, &vss, t, dt).unwrap();
        assert!(v.v.abs().max() < 1e-10 * vss.v.abs().max());
    }

    #[test]
    fn integrator_preconditions() {
        let a = DriftMatrix {
            a: -Mat6::identity(),
            gauge_phase: 0.0,
        };
        let d = DiffusionMatrix { d: Mat6::identity() };
        let v0 = CovarianceMatrix { v: Mat6::identity() };
        assert!(matches!(
            integrate_covariance(&a, &d, &v0, 1.0, 0.5),
            Err(FluctuationError::StepTooLarge(_))
        ));
        let up = DriftMatrix {
            a: Mat6::identity() * 5.0,
            gauge_phase: 0.0,
        };
        assert!(matches!(
            integrate_covariance(&up, &d, &v0, 1e4, 0.003),
            Err(FluctuationError::BlowUp(_))
        ));
    }

    #[test]
    fn powered_map_equals_stepping() {
        // same horizon, just over and under the direct-stepping limit
        let mut p = default_params();
        p.mech.omega_m = 0.02;
        p.mech.gamma_m = 2e-3;
        p.emitter.gamma_qe = 1e-3;
        let a = drift_of(&p);
        let d = diffusion_matrix(&p);
        let v0 = CovarianceMatrix {
            v: Mat6::identity() * 0.5,
        };
        let dt = 400.0 / (DIRECT_STEP_LIMIT as f64);
        let direct = integrate_covariance(&a, &d, &v0, 400.0, dt).unwrap();
        let powered = integrate_covariance(&a, &d, &v0, 400.0 + dt, dt).unwrap();
        let one_more = integrate_covariance(&a, &d, &direct, dt, dt).unwrap();
        assert!((powered.v - one_more.v).abs().max() <= 1e-11);
    }
}
