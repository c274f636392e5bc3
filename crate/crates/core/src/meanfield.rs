//! Classical steady state of the driven plasmon–emitter–cantilever system.
//!
//! Plasmon and emitter are taken in the frame rotating at the drive
//! frequency; the cantilever stays in the lab frame. With Δ_p = Ω_p − ω and
//! Δ_q = Ω_QE − ω the stationary equations are
//!
//! ```text
//! 0 = −[i(Δ_p + g x̄) + γ_p] ᾱ − i ε_p − i f σ̄
//! 0 = −[i Δ_q + γ_QE] σ̄ + i f y ᾱ
//! 0 = ω_m x̄ + g |ᾱ|²
//! ```
//!
//! For fixed x̄ the first two are linear, so the solver iterates on the scalar
//! x̄ only.

use num_complex::Complex64;
use thiserror::Error;

use crate::fano::{response_denominator, ComplexAmplitude};
use crate::params::SystemParams;

pub const MAX_ITERATIONS: usize = 100_000;
pub const DAMPING: f64 = 0.5;
pub const TOLERANCE: f64 = 1e-12;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeanFieldError {
    #[error(
        "mean field did not converge after {iterations} iterations (bistable or divergent); \
         last displacements {last:?}"
    )]
    NoConvergence { iterations: usize, last: [f64; 3] },
    #[error("degenerate linear response at displacement {0}")]
    Degenerate(f64),
    #[error("mean-field state is not converged")]
    Unconverged,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldState {
    /// Plasmon amplitude ᾱ.
    pub alpha: ComplexAmplitude,
    /// Emitter coherence σ̄.
    pub sigma: ComplexAmplitude,
    /// Mechanical displacement in units of the quadrature x̂ = (a + a†)/√2.
    pub x_m: f64,
    /// Damped complex amplitude ā_m = −i g|ᾱ|² / (√2 (iω_m + γ_m)).
    pub mech_amplitude: Complex64,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
}

/// Plasmon and emitter amplitudes for a frozen cantilever displacement.
fn linear_response(p: &SystemParams, x: f64) -> Result<(Complex64, Complex64), MeanFieldError> {
    let shift = p.mech.g_single * x;
    let den = response_denominator(p.drive.omega, p, shift);
    if den.norm() < 1e-300 || !den.is_finite() {
        return Err(MeanFieldError::Degenerate(x));
    }
    let em = &p.emitter;
    let alpha = -I * p.plasmon.eps_drive / den;
    let sigma = I * em.f_coupling * em.inversion_y * alpha / Complex64::new(em.gamma_qe, em.omega_qe - p.drive.omega);
    Ok((alpha, sigma))
}

/// Residuals of the three stationary equations.
pub fn stationary_residual(p: &SystemParams, alpha: Complex64, sigma: Complex64, x: f64) -> f64 {
    let (pl, em, me) = (&p.plasmon, &p.emitter, &p.mech);
    let w = p.drive.omega;
    let r1 = -Complex64::new(pl.gamma_p, pl.omega_p - w + me.g_single * x) * alpha
        - I * pl.eps_drive
        - I * em.f_coupling * sigma;
    let r2 = -Complex64::new(em.gamma_qe, em.omega_qe - w) * sigma + I * em.f_coupling * em.inversion_y * alpha;
    let r3 = me.omega_m * x + me.g_single * alpha.norm_sqr();
    (r1.norm_sqr() + r2.norm_sqr() + r3 * r3).sqrt()
}

/// Self-consistent mean field by damped fixed-point iteration on x̄.
pub fn steady_state(p: &SystemParams) -> Result<MeanFieldState, MeanFieldError> {
    let me = &p.mech;
    let mut x = 0.0;
    let mut history = [f64::NAN; 3];
    for it in 1..=MAX_ITERATIONS {
        let (alpha, _) = linear_response(p, x)?;
        let target = -me.g_single * alpha.norm_sqr() / me.omega_m;
        let next = (1.0 - DAMPING) * x + DAMPING * target;
        history = [history[1], history[2], next];
        if !next.is_finite() {
            break;
        }
        let done = (next - x).abs() < TOLERANCE * next.abs().max(1.0);
        x = next;
        if done {
            let (alpha, sigma) = linear_response(p, x)?;
            let force = me.g_single * alpha.norm_sqr();
            let mech_amplitude = -I * force / (std::f64::consts::SQRT_2 * Complex64::new(me.gamma_m, me.omega_m));
            return Ok(MeanFieldState {
                alpha,
                sigma,
                x_m: x,
                mech_amplitude,
                converged: true,
                iterations: it,
                residual: stationary_residual(p, alpha, sigma, x),
            });
        }
    }
    Err(MeanFieldError::NoConvergence {
        iterations: MAX_ITERATIONS,
        last: history,
    })
}

/// Cantilever displacement in zero-point units and in femtometers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Displacement {
    pub zpf: f64,
    pub fm: f64,
}

/// Negative values point toward the gap (radiation pressure).
pub fn displacement_zpf(s: &MeanFieldState, p: &SystemParams) -> Result<Displacement, MeanFieldError> {
    if !s.converged {
        return Err(MeanFieldError::Unconverged);
    }
    Ok(Displacement {
        zpf: s.x_m,
        fm: s.x_m * p.mech.x_zpf,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveCoupling {
    /// G = ᾱ g.
    pub g_eff: Complex64,
}

pub fn effective_coupling(s: &MeanFieldState, p: &SystemParams) -> EffectiveCoupling {
    EffectiveCoupling {
        g_eff: s.alpha * p.mech.g_single,
    }
}

/// Quadrature state (X_p, Y_p, x_m, p_m, X_q, Y_q), with α = (X_p + iY_p)/√2
/// and σ = (X_q + iY_q)/√2.
pub type QuadratureState = [f64; 6];

pub fn to_quadratures(s: &MeanFieldState) -> QuadratureState {
    let r2 = std::f64::consts::SQRT_2;
    [
        r2 * s.alpha.re,
        r2 * s.alpha.im,
        s.x_m,
        r2 * s.mech_amplitude.im,
        r2 * s.sigma.re,
        r2 * s.sigma.im,
    ]
}

/// Time derivative of the nonlinear mean-field equations in quadratures.
///
/// The cantilever has amplitude damping γ_m on both quadratures, so its exact
/// fixed point is x̄ ω_m²/(ω_m² + γ_m²) of the static balance used by
/// [`steady_state`]; the two differ at relative order Q⁻².
pub fn mean_field_rhs(p: &SystemParams, u: &QuadratureState) -> QuadratureState {
    let (pl, em, me) = (&p.plasmon, &p.emitter, &p.mech);
    let [xp, yp, xm, pm, xq, yq] = *u;
    let dp = pl.omega_p - p.drive.omega + me.g_single * xm;
    let dq = em.omega_qe - p.drive.omega;
    let f = em.f_coupling;
    let fy = f * em.inversion_y;
    let drive = std::f64::consts::SQRT_2 * pl.eps_drive;
    [
        -pl.gamma_p * xp + dp * yp + f * yq,
        -dp * xp - pl.gamma_p * yp - f * xq - drive,
        me.omega_m * pm - me.gamma_m * xm,
        -me.omega_m * xm - me.gamma_m * pm - 0.5 * me.g_single * (xp * xp + yp * yp),
        -em.gamma_qe * xq + dq * yq - fy * yp,
        -dq * xq - em.gamma_qe * yq + fy * xp,
    ]
}
