//! Coupled-mode model of a plasmonic gap cavity with a quantum-emitter layer
//! and a cantilever mirror: Fano spectra, radiation-pressure mean field,
//! Gaussian fluctuations and the mechanical entanglement potential, plus the
//! sweep machinery behind the `plasmomech` binary.

// `!(a < b)` is used on purpose so NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod fano;
pub mod fluctuations;
pub mod gaussian;
pub mod meanfield;
pub mod output;
pub mod params;
pub mod sweep;

pub use config::{load_config, parse_config, Config, ConfigError};
pub use error::Error;
pub use fano::{enhancement_ratio, find_transparency, plasmon_amplitude, spectrum, FanoError, Spectrum};
pub use fluctuations::{
    diffusion_matrix, drift_matrix, integrate_covariance, is_stable, solve_lyapunov, CovarianceMatrix, DiffusionMatrix,
    DriftMatrix, FluctuationError,
};
pub use gaussian::{
    entanglement_potential, log_negativity, min_quadrature_variance, reduced_mode, split_on_beamsplitter,
    GaussianError, SingleModeCM, TwoModeCM,
};
pub use meanfield::{displacement_zpf, effective_coupling, steady_state, MeanFieldError, MeanFieldState};
pub use params::{default_params, validate, voltage_to_resonance, SystemParams, ValidationError, VoltageMap};
pub use sweep::{run_spectrum, run_sweep, run_voltage_sweep, SweepResult, SweepSpec};
