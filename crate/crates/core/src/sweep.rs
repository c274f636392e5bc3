//! Frequency and voltage sweeps through the full pipeline.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::Config;
use crate::fano::{linspace, plasmon_amplitude};
use crate::fluctuations::{diffusion_matrix, drift_matrix, is_stable, solve_lyapunov};
use crate::gaussian::{entanglement_potential, min_quadrature_variance, reduced_mode, Mode};
use crate::meanfield::{displacement_zpf, effective_coupling, steady_state};
use crate::params::{validate, voltage_to_resonance, SystemParams};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Extra spectrum points placed around the emitter resonance.
pub const REFINE_POINTS: usize = 200;
/// Half-width of the refinement window in units of γ_QE.
pub const REFINE_HALF_WIDTH: f64 = 50.0;
pub const DEFAULT_POINTS: usize = 500;
/// Default drive-wavelength window in nm (ω from about 0.85 to 1.15).
pub const DEFAULT_SPECTRUM_NM: (f64, f64) = (530.0, 720.0);
/// Default voltage window: Ω_QE from 2.035 eV to 2.042 eV at 20 meV/V.
pub const DEFAULT_VOLTAGE: (f64, f64) = (0.0, 0.35);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    /// Drive wavelength in nm.
    DriveWavelength,
    /// Gate voltage in V.
    Voltage,
    /// Emitter resonance in eV.
    EmitterResonance,
}

impl Control {
    pub fn name(self) -> &'static str {
        match self {
            Control::DriveWavelength => "drive_wavelength",
            Control::Voltage => "voltage",
            Control::EmitterResonance => "emitter_resonance",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Control::DriveWavelength => "nm",
            Control::Voltage => "V",
            Control::EmitterResonance => "eV",
        }
    }
}

impl FromStr for Control {
    type Err = SweepError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "drive_wavelength" => Ok(Control::DriveWavelength),
            "voltage" => Ok(Control::Voltage),
            "emitter_resonance" => Ok(Control::EmitterResonance),
            _ => Err(SweepError::Spec(format!("unknown control `{s}`"))),
        }
    }
}

/// Sweep outputs in canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Output {
    Intensity,
    DisplacementZpf,
    DisplacementFm,
    MinVariance,
    Ep,
    GEff,
    Stable,
}

impl Output {
    pub const ALL: [Output; 7] = [
        Output::Intensity,
        Output::DisplacementZpf,
        Output::DisplacementFm,
        Output::MinVariance,
        Output::Ep,
        Output::GEff,
        Output::Stable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Output::Intensity => "intensity",
            Output::DisplacementZpf => "displacement_zpf",
            Output::DisplacementFm => "displacement_fm",
            Output::MinVariance => "min_variance",
            Output::Ep => "ep",
            Output::GEff => "g_eff",
            Output::Stable => "stable",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Output::Intensity => "|α_p|²",
            Output::DisplacementZpf => "x_ZPF",
            Output::DisplacementFm => "fm",
            Output::MinVariance => "vacuum = 1/2",
            Output::Ep => "nats",
            Output::GEff => "scaled",
            Output::Stable => "flag",
        }
    }

    /// Outputs that need a stable linearization.
    pub fn needs_covariance(self) -> bool {
        matches!(self, Output::MinVariance | Output::Ep)
    }
}

impl FromStr for Output {
    type Err = SweepError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Output::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| SweepError::Spec(format!("unknown output `{s}`")))
    }
}

/// Parses a comma-separated output list into canonical order.
pub fn parse_outputs(list: &str) -> Result<Vec<Output>, SweepError> {
    let mut out = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(Output::from_str)
        .collect::<Result<Vec<_>, _>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep: {0}")]
    Spec(String),
    #[error(
        "all {0} sweep points are unstable or unconverged; \
         reduce mech.g_single or plasmon.eps_drive"
    )]
    AllUnstable(usize),
    #[error("invalid point: {0}")]
    Point(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub control: Control,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    /// Requested outputs; `stable` is always reported.
    pub outputs: Vec<Output>,
    /// Spectrum only: add points around the emitter resonance.
    pub refine: bool,
    /// Worker threads; 0 uses the global pool, 1 runs serially.
    pub jobs: usize,
}

impl SweepSpec {
    pub fn spectrum() -> Self {
        Self {
            control: Control::DriveWavelength,
            start: DEFAULT_SPECTRUM_NM.0,
            stop: DEFAULT_SPECTRUM_NM.1,
            points: DEFAULT_POINTS,
            outputs: vec![Output::Intensity],
            refine: true,
            jobs: 0,
        }
    }

    pub fn voltage() -> Self {
        Self {
            control: Control::Voltage,
            start: DEFAULT_VOLTAGE.0,
            stop: DEFAULT_VOLTAGE.1,
            points: DEFAULT_POINTS,
            outputs: Output::ALL.to_vec(),
            refine: false,
            jobs: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(SweepError::Spec("start and stop must be finite".into()));
        }
        if !(self.start < self.stop) {
            return Err(SweepError::Spec(format!(
                "start ({}) must be below stop ({})",
                self.start, self.stop
            )));
        }
        if self.points < 2 {
            return Err(SweepError::Spec(format!(
                "points must be at least 2, got {}",
                self.points
            )));
        }
        if self.outputs.is_empty() {
            return Err(SweepError::Spec("no outputs requested".into()));
        }
        if self.control == Control::DriveWavelength && self.start <= 0.0 {
            return Err(SweepError::Spec("wavelengths must be positive".into()));
        }
        Ok(())
    }

    /// Columns after `control`: requested outputs plus `stable`, canonical order.
    pub fn columns(&self) -> Vec<Output> {
        let mut cols = self.outputs.clone();
        cols.push(Output::Stable);
        cols.sort();
        cols.dedup();
        cols
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub control: f64,
    /// One entry per non-`stable` column; `None` marks an empty cell.
    pub values: Vec<Option<f64>>,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Meta {
    pub config: Config,
    pub version: &'static str,
    pub control: Control,
    pub warnings: Vec<String>,
}

impl Meta {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# plasmomech {}\n# control = {} [{}]\n",
            self.version,
            self.control.name(),
            self.control.unit()
        );
        for w in &self.warnings {
            out.push_str(&format!("# warning: {w}\n"));
        }
        out.push_str(&self.config.to_text());
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub columns: Vec<Output>,
    pub rows: Vec<Row>,
    pub meta: Meta,
}

impl SweepResult {
    /// Values of one column, `None` for empty cells. `stable` maps to 0/1.
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        if name == "control" || name == self.meta.control.name() {
            return Some(self.rows.iter().map(|r| Some(r.control)).collect());
        }
        let out = Output::from_str(name).ok()?;
        if out == Output::Stable {
            return self.columns.contains(&out).then(|| {
                self.rows
                    .iter()
                    .map(|r| Some(if r.stable { 1.0 } else { 0.0 }))
                    .collect()
            });
        }
        let idx = self
            .columns
            .iter()
            .filter(|c| **c != Output::Stable)
            .position(|c| *c == out)?;
        Some(self.rows.iter().map(|r| r.values[idx]).collect())
    }
}

/// Everything the pipeline can report at one parameter point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointReport {
    pub intensity: Option<f64>,
    pub displacement_zpf: Option<f64>,
    pub displacement_fm: Option<f64>,
    pub min_variance: Option<f64>,
    pub squeezing_angle: Option<f64>,
    pub ep: Option<f64>,
    pub g_eff: Option<f64>,
    pub stable: bool,
    pub abscissa: Option<f64>,
    pub warnings: Vec<String>,
}

impl PointReport {
    pub fn get(&self, o: Output) -> Option<f64> {
        match o {
            Output::Intensity => self.intensity,
            Output::DisplacementZpf => self.displacement_zpf,
            Output::DisplacementFm => self.displacement_fm,
            Output::MinVariance => self.min_variance,
            Output::Ep => self.ep,
            Output::GEff => self.g_eff,
            Output::Stable => Some(if self.stable { 1.0 } else { 0.0 }),
        }
    }
}

/// Runs Fano amplitude, mean field, linearization and Gaussian measures.
///
/// Only the Fano intensity survives at unstable or unconverged points; every
/// other cell is left empty.
pub fn evaluate_point(p: &SystemParams, with_covariance: bool) -> PointReport {
    let mut r = PointReport {
        intensity: plasmon_amplitude(p.drive.omega, p).ok().map(|a| a.norm_sqr()),
        ..Default::default()
    };
    let Ok(state) = steady_state(p) else {
        r.warnings.push("mean field did not converge".into());
        return r;
    };
    let Ok(drift) = drift_matrix(p, &state) else {
        return r;
    };
    let stab = is_stable(&drift);
    r.abscissa = Some(stab.abscissa);
    if !stab.stable {
        return r;
    }
    r.stable = true;
    if let Ok(d) = displacement_zpf(&state, p) {
        r.displacement_zpf = Some(d.zpf);
        r.displacement_fm = Some(d.fm);
    }
    r.g_eff = Some(effective_coupling(&state, p).g_eff.norm());
    if !with_covariance {
        return r;
    }
    match solve_lyapunov(&drift, &diffusion_matrix(p)) {
        Ok(sol) => {
            if sol.ill_conditioned {
                r.warnings
                    .push(format!("ill-conditioned Lyapunov system (cond {:.2e})", sol.condition));
            }
            // the mechanics block of a physical 6-mode state is always valid
            if let Ok(m) = reduced_mode(&sol.cov, Mode::Mechanics as usize) {
                let q = min_quadrature_variance(&m);
                r.min_variance = Some(q.variance);
                r.squeezing_angle = Some(q.angle);
                match entanglement_potential(&m) {
                    Ok(ep) => r.ep = Some(ep),
                    Err(e) => r.warnings.push(e.to_string()),
                }
            }
        }
        Err(e) => r.warnings.push(e.to_string()),
    }
    r
}

fn run_points(points: Vec<(f64, SystemParams)>, spec: &SweepSpec, config: &Config) -> Result<SweepResult, SweepError> {
    let columns = spec.columns();
    let with_cov = columns.iter().any(|c| c.needs_covariance());
    let eval = |(x, p): &(f64, SystemParams)| (*x, evaluate_point(p, with_cov));
    let reports: Vec<(f64, PointReport)> = match spec.jobs {
        1 => points.iter().map(eval).collect(),
        0 => points.par_iter().map(eval).collect(),
        n => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SweepError::Spec(format!("cannot start {n} workers: {e}")))?
            .install(|| points.par_iter().map(eval).collect()),
    };

    let mut warnings: Vec<String> = Vec::new();
    let mut rows = Vec::with_capacity(reports.len());
    for (x, rep) in reports {
        for w in &rep.warnings {
            warnings.push(format!("{} = {x:e}: {w}", spec.control.name()));
        }
        rows.push(Row {
            control: x,
            values: columns
                .iter()
                .filter(|c| **c != Output::Stable)
                .map(|c| rep.get(*c))
                .collect(),
            stable: rep.stable,
        });
    }
    Ok(SweepResult {
        columns,
        rows,
        meta: Meta {
            config: *config,
            version: VERSION,
            control: spec.control,
            warnings,
        },
    })
}

/// Drive-wavelength grid, optionally refined around the emitter resonance.
fn spectrum_grid(p: &SystemParams, spec: &SweepSpec) -> Vec<f64> {
    let mut grid = linspace(spec.start, spec.stop, spec.points);
    if spec.refine {
        let half = REFINE_HALF_WIDTH * p.emitter.gamma_qe;
        let w0 = p.emitter.omega_qe;
        grid.extend(
            linspace(w0 - half, w0 + half, REFINE_POINTS)
                .into_iter()
                .filter(|w| *w > 0.0)
                .map(|w| p.scale.scaled_to_nm(w))
                .filter(|nm| *nm > spec.start && *nm < spec.stop),
        );
        grid.sort_by(f64::total_cmp);
        grid.dedup();
    }
    grid
}

pub fn run_spectrum(config: &Config, spec: &SweepSpec) -> Result<SweepResult, SweepError> {
    if spec.control != Control::DriveWavelength {
        return Err(SweepError::Spec(format!(
            "spectrum needs control drive_wavelength, got {}",
            spec.control.name()
        )));
    }
    spec.validate()?;
    let base = config.params;
    let points = spectrum_grid(&base, spec)
        .into_iter()
        .map(|nm| {
            let mut p = base;
            p.drive.omega = base.scale.nm_to_scaled(nm);
            (nm, p)
        })
        .collect();
    run_points(points, spec, config)
}

/// Voltage or emitter-resonance sweep at fixed drive frequency.
pub fn run_voltage_sweep(config: &Config, spec: &SweepSpec) -> Result<SweepResult, SweepError> {
    spec.validate()?;
    let base = config.params;
    let mut points = Vec::with_capacity(spec.points);
    for x in linspace(spec.start, spec.stop, spec.points) {
        let ev = match spec.control {
            Control::Voltage => {
                voltage_to_resonance(x, &config.voltage).map_err(|e| SweepError::Point(e.to_string()))?
            }
            Control::EmitterResonance => x,
            Control::DriveWavelength => {
                return Err(SweepError::Spec(
                    "voltage sweep cannot control the drive wavelength".into(),
                ))
            }
        };
        let mut p = base;
        p.emitter.omega_qe = base.scale.ev_to_scaled(ev);
        let p = validate(p).map_err(|e| SweepError::Point(format!("{} = {x}: {e}", spec.control.name())))?;
        points.push((x, p));
    }
    let result = run_points(points, spec, config)?;
    if result.rows.iter().all(|r| !r.stable) {
        return Err(SweepError::AllUnstable(result.rows.len()));
    }
    Ok(result)
}

/// Dispatches on the control variable.
pub fn run_sweep(config: &Config, spec: &SweepSpec) -> Result<SweepResult, SweepError> {
    match spec.control {
        Control::DriveWavelength => run_spectrum(config, spec),
        Control::Voltage | Control::EmitterResonance => run_voltage_sweep(config, spec),
    }
}

impl fmt::Display for PointReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.10e}"));
        writeln!(f, "intensity         {}", show(self.intensity))?;
        writeln!(f, "displacement_zpf  {}", show(self.displacement_zpf))?;
        writeln!(f, "displacement_fm   {}", show(self.displacement_fm))?;
        writeln!(f, "g_eff             {}", show(self.g_eff))?;
        writeln!(f, "min_variance      {}", show(self.min_variance))?;
        writeln!(f, "squeezing_angle   {}", show(self.squeezing_angle))?;
        writeln!(f, "ep                {}", show(self.ep))?;
        writeln!(f, "spectral_abscissa {}", show(self.abscissa))?;
        write!(f, "stable            {}", self.stable)
    }
}
