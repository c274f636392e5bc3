//! Steady-state plasmon response with a narrow emitter: the Fano lineshape,
//! its transparency dip and the intensity enhancement relative to the bare
//! plasmon.
//!
//! The emitter enters through the coupled-mode amplitude
//!
//! ```text
//!            ε_p
//! α_p = ───────────────────────────────────────────────
//!       [i(Ω_p − ω) + γ_p] − y|f|² / [i(Ω_QE − ω) + γ_QE]
//! ```
//!
//! This is a point-interaction model: it has no retardation, so the dip sits
//! at ω_f ≈ Ω_QE.

use num_complex::Complex64;
use thiserror::Error;

use crate::params::SystemParams;

/// Complex mean-field amplitude in scaled field units.
pub type ComplexAmplitude = Complex64;

/// Points used by the dense pre-scan of [`find_transparency`].
pub const TRANSPARENCY_SCAN_POINTS: usize = 10_000;
/// Final bracket width of the golden-section refinement.
pub const TRANSPARENCY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FanoError {
    #[error("degenerate parameters: response denominator {0:e} vanishes at omega = {1}")]
    Degenerate(f64, f64),
    #[error("frequency grid must have at least 2 points, got {0}")]
    GridTooShort(usize),
    #[error("frequency grid must be strictly increasing (index {0})")]
    GridNotIncreasing(usize),
    #[error("no transparency without plasmon-emitter coupling (f = 0)")]
    NoTransparency,
    #[error("intensity minimum lies on the bracket edge at omega = {0}; widen the bracket")]
    BracketTooSmall(f64),
    #[error("invalid bracket [{0}, {1}]")]
    BadBracket(f64, f64),
}

/// Denominator of the Fano amplitude, with an optional shift of the plasmon
/// resonance (used by the mean-field solver for the radiation-pressure shift).
pub(crate) fn response_denominator(omega: f64, p: &SystemParams, plasmon_shift: f64) -> Complex64 {
    let pl = &p.plasmon;
    let em = &p.emitter;
    let bare = Complex64::new(pl.gamma_p, pl.omega_p + plasmon_shift - omega);
    let emitter = Complex64::new(em.gamma_qe, em.omega_qe - omega);
    bare - em.inversion_y * em.f_coupling * em.f_coupling / emitter
}

/// Plasmon amplitude α_p at drive frequency `omega`.
pub fn plasmon_amplitude(omega: f64, p: &SystemParams) -> Result<ComplexAmplitude, FanoError> {
    let den = response_denominator(omega, p, 0.0);
    if den.norm() < 1e-300 || !den.is_finite() {
        return Err(FanoError::Degenerate(den.norm(), omega));
    }
    Ok(Complex64::new(p.plasmon.eps_drive, 0.0) / den)
}

/// `p` with the emitter decoupled.
fn bare(p: &SystemParams) -> SystemParams {
    let mut q = *p;
    q.emitter.f_coupling = 0.0;
    q
}

/// |α_p|² relative to the same plasmon without the emitter.
pub fn enhancement_ratio(omega: f64, p: &SystemParams) -> Result<f64, FanoError> {
    let with = plasmon_amplitude(omega, p)?.norm_sqr();
    let without = plasmon_amplitude(omega, &bare(p))?.norm_sqr();
    Ok(with / without)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub omegas: Vec<f64>,
    pub amplitudes: Vec<ComplexAmplitude>,
    pub intensities: Vec<f64>,
}

impl Spectrum {
    /// Index of the smallest intensity.
    pub fn argmin(&self) -> usize {
        self.intensities
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<(), FanoError> {
    if grid.len() < 2 {
        return Err(FanoError::GridTooShort(grid.len()));
    }
    for (i, w) in grid.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(FanoError::GridNotIncreasing(i + 1));
        }
    }
    Ok(())
}

pub fn spectrum(omega_grid: &[f64], p: &SystemParams) -> Result<Spectrum, FanoError> {
    check_grid(omega_grid)?;
    let amplitudes = omega_grid
        .iter()
        .map(|&w| plasmon_amplitude(w, p))
        .collect::<Result<Vec<_>, _>>()?;
    let intensities = amplitudes.iter().map(|a| a.norm_sqr()).collect();
    Ok(Spectrum {
        omegas: omega_grid.to_vec(),
        amplitudes,
        intensities,
    })
}

pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![start],
        _ => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { stop } else { start + step * i as f64 })
                .collect()
        }
    }
}

/// Drive frequency of minimal plasmon intensity inside `bracket`.
///
/// The dip is ~γ_QE wide, four orders below γ_p, so a coarse optimizer would
/// step over it: a dense scan seeds a golden-section search.
pub fn find_transparency(p: &SystemParams, bracket: (f64, f64)) -> Result<f64, FanoError> {
    let (lo, hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(FanoError::BadBracket(lo, hi));
    }
    if p.emitter.f_coupling == 0.0 {
        return Err(FanoError::NoTransparency);
    }
    let intensity = |w: f64| plasmon_amplitude(w, p).map(|a| a.norm_sqr());

    let grid = linspace(lo, hi, TRANSPARENCY_SCAN_POINTS);
    let mut best = (0, f64::INFINITY);
    for (i, &w) in grid.iter().enumerate() {
        let v = intensity(w)?;
        if v < best.1 {
            best = (i, v);
        }
    }
    let i = best.0;
    if i == 0 || i == grid.len() - 1 {
        return Err(FanoError::BracketTooSmall(grid[i]));
    }

    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (grid[i - 1], grid[i + 1]);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (intensity(c)?, intensity(d)?);
    while b - a > TRANSPARENCY_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = intensity(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = intensity(d)?;
        }
        if c >= d {
            // bracket collapsed to a few ulps
            break;
        }
    }
    Ok(0.5 * (a + b))
}
