//! Single-mode squeezing and the entanglement potential of Gaussian states.
//!
//! Quadrature ordering within a mode is (x, p), two-mode ordering is
//! (x₁, p₁, x₂, p₂), and vacuum variance is 1/2. Logarithms are natural.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

use crate::fluctuations::CovarianceMatrix;

/// Slack on symplectic-eigenvalue checks; within it values are clipped.
pub const PHYSICALITY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussianError {
    #[error("mode index {0} out of range (0 = plasmon, 1 = mechanics, 2 = emitter)")]
    ModeIndex(usize),
    #[error("unphysical covariance: smallest symplectic eigenvalue {0} < 1/2")]
    Unphysical(f64),
    #[error("invalid single-mode covariance: {0}")]
    InvalidMode(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Plasmon = 0,
    Mechanics = 1,
    Emitter = 2,
}

impl Mode {
    pub fn from_index(i: usize) -> Result<Self, GaussianError> {
        match i {
            0 => Ok(Mode::Plasmon),
            1 => Ok(Mode::Mechanics),
            2 => Ok(Mode::Emitter),
            _ => Err(GaussianError::ModeIndex(i)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleModeCM(pub Matrix2<f64>);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeCM(pub Matrix4<f64>);

impl SingleModeCM {
    /// Symmetric, positive definite, det ≥ 1/4 within tolerance.
    pub fn check(&self) -> Result<(), GaussianError> {
        let m = &self.0;
        if !m.iter().all(|x| x.is_finite()) {
            return Err(GaussianError::InvalidMode("non-finite entry"));
        }
        if (m[(0, 1)] - m[(1, 0)]).abs() > 1e-12 * m.abs().max().max(1.0) {
            return Err(GaussianError::InvalidMode("not symmetric"));
        }
        if m[(0, 0)] <= 0.0 || m[(1, 1)] <= 0.0 {
            return Err(GaussianError::InvalidMode("not positive definite"));
        }
        if m.determinant() < 0.25 - PHYSICALITY_TOL {
            return Err(GaussianError::InvalidMode("violates the uncertainty relation"));
        }
        Ok(())
    }
}

pub fn reduced_mode(v: &CovarianceMatrix, mode_index: usize) -> Result<SingleModeCM, GaussianError> {
    let mode = Mode::from_index(mode_index)?;
    Ok(SingleModeCM(v.block(mode as usize)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureMinimum {
    pub variance: f64,
    /// Phase-space angle of the squeezed quadrature, in [0, π).
    pub angle: f64,
}

pub fn min_quadrature_variance(m: &SingleModeCM) -> QuadratureMinimum {
    let (a, b, c) = (m.0[(0, 0)], 0.5 * (m.0[(0, 1)] + m.0[(1, 0)]), m.0[(1, 1)]);
    let mean = 0.5 * (a + c);
    let half_gap = (0.5 * (a - c)).hypot(b);
    // 0.5·atan2 gives the major axis; the minor one is a quarter turn away
    let major = 0.5 * (2.0 * b).atan2(a - c);
    let angle = (major + std::f64::consts::FRAC_PI_2).rem_euclid(std::f64::consts::PI);
    QuadratureMinimum {
        variance: mean - half_gap,
        angle,
    }
}

/// Mixes the mode with vacuum on a balanced beam splitter.
pub fn split_on_beamsplitter(m: &SingleModeCM) -> TwoModeCM {
    let c = std::f64::consts::FRAC_1_SQRT_2;
    #[rustfmt::skip]
    let s = Matrix4::new(
        c,   0.0, c,   0.0,
        0.0, c,   0.0, c,
        -c,  0.0, c,   0.0,
        0.0, -c,  0.0, c,
    );
    let mut input = Matrix4::zeros();
    input.fixed_view_mut::<2, 2>(0, 0).copy_from(&m.0);
    input[(2, 2)] = 0.5;
    input[(3, 3)] = 0.5;
    TwoModeCM(s * input * s.transpose())
}

struct Invariants {
    det_a: f64,
    det_b: f64,
    det_c: f64,
    det: f64,
}

fn invariants(t: &TwoModeCM) -> Invariants {
    let v = &t.0;
    Invariants {
        det_a: v.fixed_view::<2, 2>(0, 0).determinant(),
        det_b: v.fixed_view::<2, 2>(2, 2).determinant(),
        det_c: v.fixed_view::<2, 2>(0, 2).determinant(),
        det: v.determinant(),
    }
}

/// ν₋ from the invariants; written as 2det/(Δ + √disc) to avoid
/// cancellation when ν₋ is far below ν₊.
fn smaller_symplectic(delta: f64, det: f64) -> f64 {
    let disc = (delta * delta - 4.0 * det).max(0.0);
    let denom = delta + disc.sqrt();
    if denom > 0.0 {
        (2.0 * det / denom).max(0.0).sqrt()
    } else {
        0.0
    }
}

/// Smaller symplectic eigenvalue of the state itself.
pub fn min_symplectic_eigenvalue(t: &TwoModeCM) -> f64 {
    let k = invariants(t);
    smaller_symplectic(k.det_a + k.det_b + 2.0 * k.det_c, k.det)
}

/// Smallest eigenvalue of the Hermitian matrix V + iΩ/2. Unlike ν₋ it has
/// no square-root sensitivity at pure states, so it is used for the check.
pub fn physicality_margin(t: &TwoModeCM) -> f64 {
    let o = |i: usize, j: usize| match (i, j) {
        (0, 1) | (2, 3) => 0.5,
        (1, 0) | (3, 2) => -0.5,
        _ => 0.0,
    };
    let h = Matrix4::<Complex64>::from_fn(|i, j| Complex64::new(t.0[(i, j)], o(i, j)));
    SymmetricEigen::new(h).eigenvalues.min()
}

pub fn log_negativity(t: &TwoModeCM) -> Result<f64, GaussianError> {
    let margin = physicality_margin(t);
    if !(margin >= -PHYSICALITY_TOL) {
        return Err(GaussianError::Unphysical(min_symplectic_eigenvalue(t)));
    }
    let k = invariants(t);
    let nu_pt = smaller_symplectic(k.det_a + k.det_b - 2.0 * k.det_c, k.det);
    let x = 2.0 * nu_pt;
    if x >= 1.0 - PHYSICALITY_TOL {
        Ok(0.0)
    } else {
        Ok(-x.ln())
    }
}

pub fn entanglement_potential(m: &SingleModeCM) -> Result<f64, GaussianError> {
    m.check()?;
    log_negativity(&split_on_beamsplitter(m))
}

pub fn nats_to_bits(x: f64) -> f64 {
    x / std::f64::consts::LN_2
}
