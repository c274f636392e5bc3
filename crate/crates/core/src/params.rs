//! Physical parameters of the plasmon / emitter / cantilever / drive system.
//!
//! Everything inside [`SystemParams`] is expressed in scaled units: rates and
//! frequencies are divided by an optical reference frequency set by
//! [`Scale::reference_ev`]. Conversions from and to eV, Hz and nm happen at the
//! boundary through [`Scale`].

use std::fmt;

/// Planck constant in eV·s (exact SI definition).
pub const PLANCK_EV_S: f64 = 6.626_070_15e-34 / 1.602_176_634e-19;
/// Speed of light in nm/s.
pub const SPEED_OF_LIGHT_NM_S: f64 = 299_792_458.0e9;
/// h·c in eV·nm.
pub const HC_EV_NM: f64 = PLANCK_EV_S * SPEED_OF_LIGHT_NM_S;

/// Zero-voltage emitter resonance used by the default voltage map (eV).
pub const DEFAULT_EMITTER_EV: f64 = 2.035;
/// Emitter tuning per volt (eV/V).
pub const DEFAULT_KAPPA_EV_PER_V: f64 = 0.020;
/// Cantilever frequency of the reference device (Hz).
pub const DEFAULT_MECH_HZ: f64 = 10.0e6;
/// Mechanical quality factor used to derive the default damping.
pub const DEFAULT_MECH_Q: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlasmonMode {
    pub omega_p: f64,
    pub gamma_p: f64,
    pub eps_drive: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumEmitter {
    /// Level spacing, also the bare transition frequency of the emitter.
    pub omega_qe: f64,
    pub gamma_qe: f64,
    pub f_coupling: f64,
    /// Population inversion, -1 is the ground state.
    pub inversion_y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechanicalMode {
    pub omega_m: f64,
    pub gamma_m: f64,
    pub n_bar: f64,
    /// Single-plasmon radiation-pressure coupling.
    pub g_single: f64,
    /// Zero-point fluctuation length in femtometers; reporting only.
    pub x_zpf: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drive {
    pub omega: f64,
}

/// Optical reference used to scale all frequencies to O(1) numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scale {
    /// Photon energy (eV) that maps to 1 in scaled units.
    pub reference_ev: f64,
}

impl Default for Scale {
    fn default() -> Self {
        Self {
            reference_ev: DEFAULT_EMITTER_EV,
        }
    }
}

impl Scale {
    pub fn ev_to_scaled(&self, ev: f64) -> f64 {
        ev / self.reference_ev
    }

    pub fn scaled_to_ev(&self, w: f64) -> f64 {
        w * self.reference_ev
    }

    /// Ordinary frequency (Hz) to scaled units.
    pub fn hz_to_scaled(&self, hz: f64) -> f64 {
        hz * PLANCK_EV_S / self.reference_ev
    }

    pub fn scaled_to_hz(&self, w: f64) -> f64 {
        w * self.reference_ev / PLANCK_EV_S
    }

    /// Vacuum wavelength (nm) to scaled frequency, λ = c/ω.
    pub fn nm_to_scaled(&self, nm: f64) -> f64 {
        HC_EV_NM / nm / self.reference_ev
    }

    pub fn scaled_to_nm(&self, w: f64) -> f64 {
        HC_EV_NM / (w * self.reference_ev)
    }
}

/// Linear map from applied voltage to emitter resonance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoltageMap {
    /// Resonance shift per volt (same energy unit as `omega_qe_0`).
    pub kappa_v: f64,
    /// Resonance at zero volts.
    pub omega_qe_0: f64,
}

impl Default for VoltageMap {
    fn default() -> Self {
        Self {
            kappa_v: DEFAULT_KAPPA_EV_PER_V,
            omega_qe_0: DEFAULT_EMITTER_EV,
        }
    }
}

impl VoltageMap {
    pub fn validate(&self) -> Result<(), ValidationError> {
        let mut report = ValidationError::default();
        report.check_finite("voltage.kappa_v", self.kappa_v);
        report.check_finite("voltage.omega_qe_0", self.omega_qe_0);
        report.into_result()
    }
}

/// Emitter resonance at voltage `v`: `omega_qe_0 + kappa_v * v`.
pub fn voltage_to_resonance(v: f64, map: &VoltageMap) -> Result<f64, ValidationError> {
    if !v.is_finite() {
        return Err(ValidationError::single("voltage", "must be finite"));
    }
    map.validate()?;
    Ok(map.omega_qe_0 + map.kappa_v * v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub plasmon: PlasmonMode,
    pub emitter: QuantumEmitter,
    pub mech: MechanicalMode,
    pub drive: Drive,
    pub scale: Scale,
}

impl Default for SystemParams {
    fn default() -> Self {
        default_params()
    }
}

/// Optical-scaled regime of the reference device: ω = Ω_p = Ω_QE = 1,
/// γ_p = 0.1, γ_QE = 1e-5, f = 0.1, y = -1, and a 10 MHz cantilever with
/// Q = 1000 at zero temperature. g·ε_p = 0.17 puts the far end of the
/// default voltage sweep just past the onset of mechanical squeezing.
pub fn default_params() -> SystemParams {
    let scale = Scale::default();
    let omega_m = scale.hz_to_scaled(DEFAULT_MECH_HZ);
    SystemParams {
        plasmon: PlasmonMode {
            omega_p: 1.0,
            gamma_p: 0.1,
            eps_drive: 0.01,
        },
        emitter: QuantumEmitter {
            omega_qe: 1.0,
            gamma_qe: 1e-5,
            f_coupling: 0.1,
            inversion_y: -1.0,
        },
        mech: MechanicalMode {
            omega_m,
            gamma_m: omega_m / DEFAULT_MECH_Q,
            n_bar: 0.0,
            g_single: 17.0,
            x_zpf: 30.0,
        },
        drive: Drive { omega: 1.0 },
        scale,
    }
}

/// One broken invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

/// Every invariant violation found in a parameter record.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

impl ValidationError {
    fn single(field: &'static str, message: &str) -> Self {
        Self {
            violations: vec![Violation {
                field,
                message: message.to_string(),
            }],
        }
    }

    pub fn names(&self, field: &str) -> bool {
        self.violations.iter().any(|v| v.field == field)
    }

    fn push(&mut self, field: &'static str, message: String) {
        self.violations.push(Violation { field, message });
    }

    fn check_finite(&mut self, field: &'static str, value: f64) -> bool {
        if value.is_finite() {
            true
        } else {
            self.push(field, format!("must be finite, got {value}"));
            false
        }
    }

    fn check_positive(&mut self, field: &'static str, value: f64) {
        if self.check_finite(field, value) && value <= 0.0 {
            self.push(field, format!("must be > 0, got {value}"));
        }
    }

    fn check_non_negative(&mut self, field: &'static str, value: f64) {
        if self.check_finite(field, value) && value < 0.0 {
            self.push(field, format!("must be >= 0, got {value}"));
        }
    }

    fn into_result(self) -> Result<(), ValidationError> {
        if self.violations.is_empty() {
            Ok(())
        } else {
            Err(self)
        }
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid parameters:")?;
        for v in &self.violations {
            write!(f, " {}: {};", v.field, v.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationError {}

/// Returns the params unchanged when every invariant holds, otherwise a
/// report naming each violated field.
pub fn validate(p: SystemParams) -> Result<SystemParams, ValidationError> {
    let mut r = ValidationError::default();
    r.check_positive("plasmon.omega_p", p.plasmon.omega_p);
    r.check_positive("plasmon.gamma_p", p.plasmon.gamma_p);
    r.check_non_negative("plasmon.eps_drive", p.plasmon.eps_drive);

    r.check_positive("emitter.omega_qe", p.emitter.omega_qe);
    r.check_positive("emitter.gamma_qe", p.emitter.gamma_qe);
    r.check_non_negative("emitter.f_coupling", p.emitter.f_coupling);
    let y = p.emitter.inversion_y;
    if r.check_finite("emitter.inversion_y", y) && !(-1.0..=1.0).contains(&y) {
        r.push("emitter.inversion_y", format!("must lie in [-1, 1], got {y}"));
    }

    r.check_positive("mech.omega_m", p.mech.omega_m);
    r.check_positive("mech.gamma_m", p.mech.gamma_m);
    r.check_non_negative("mech.n_bar", p.mech.n_bar);
    r.check_non_negative("mech.g_single", p.mech.g_single);
    r.check_positive("mech.x_zpf", p.mech.x_zpf);

    r.check_positive("drive.omega", p.drive.omega);
    r.check_positive("units.reference_ev", p.scale.reference_ev);

    r.into_result().map(|()| p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn defaults_follow_optical_scaling() {
        let p = default_params();
        assert_eq!(p.plasmon.gamma_p, 0.1);
        assert_eq!(p.emitter.f_coupling, 0.1);
        assert_eq!(p.emitter.gamma_qe, 1e-5);
        assert_eq!(p.plasmon.omega_p, 1.0);
        assert_eq!(p.drive.omega, 1.0);
        assert_eq!(p.emitter.inversion_y, -1.0);
        assert!(validate(p).is_ok());
    }

    #[test]
    fn default_mechanics_is_ten_megahertz() {
        let p = default_params();
        assert_relative_eq!(p.scale.scaled_to_hz(p.mech.omega_m), 1e7, max_relative = 1e-12);
        // 10 MHz against a ~4.9e14 Hz optical carrier
        assert!(p.mech.omega_m > 2.0e-8 && p.mech.omega_m < 2.1e-8);
        assert_relative_eq!(p.mech.omega_m / p.mech.gamma_m, 1000.0, max_relative = 1e-12);
    }

    #[test]
    fn voltage_map_examples() {
        let map = VoltageMap::default();
        assert_relative_eq!(voltage_to_resonance(1.0, &map).unwrap(), 2.055, max_relative = 1e-14);
        assert_eq!(voltage_to_resonance(0.0, &map).unwrap(), 2.035);
        assert_relative_eq!(voltage_to_resonance(0.35, &map).unwrap(), 2.042, max_relative = 1e-14);
        assert!(voltage_to_resonance(f64::NAN, &map).is_err());
        assert!(voltage_to_resonance(f64::INFINITY, &map).is_err());
    }

    #[test]
    fn negative_damping_is_named() {
        let mut p = default_params();
        p.plasmon.gamma_p = -0.1;
        let err = validate(p).unwrap_err();
        assert!(err.names("plasmon.gamma_p"));
        assert_eq!(err.violations.len(), 1);
    }

    #[test]
    fn inversion_out_of_range_is_named() {
        let mut p = default_params();
        p.emitter.inversion_y = 2.0;
        let err = validate(p).unwrap_err();
        assert!(err.names("emitter.inversion_y"));
    }

    #[test]
    fn every_violation_is_reported() {
        let mut p = default_params();
        p.plasmon.gamma_p = 0.0;
        p.emitter.gamma_qe = f64::NAN;
        p.mech.n_bar = -1.0;
        p.drive.omega = -1.0;
        let err = validate(p).unwrap_err();
        for f in ["plasmon.gamma_p", "emitter.gamma_qe", "mech.n_bar", "drive.omega"] {
            assert!(err.names(f), "missing {f} in {err}");
        }
        assert_eq!(err.violations.len(), 4);
    }

    proptest! {
        #[test]
        fn voltage_map_is_affine(a in -10.0..10.0f64, b in -10.0..10.0f64, k in -0.1..0.1f64) {
            let map = VoltageMap { kappa_v: k, omega_qe_0: 2.035 };
            let d = voltage_to_resonance(a + b, &map).unwrap() - voltage_to_resonance(a, &map).unwrap();
            prop_assert!((d - k * b).abs() <= 1e-14 * (1.0 + (k * b).abs() + 2.1 * 4.0));
        }

        #[test]
        fn validate_is_idempotent(gp in -1.0..1.0f64, y in -3.0..3.0f64, n in -1.0..5.0f64) {
            let mut p = default_params();
            p.plasmon.gamma_p = gp;
            p.emitter.inversion_y = y;
            p.mech.n_bar = n;
            let first = validate(p);
            let second = validate(p);
            prop_assert_eq!(&first, &second);
            if let Ok(q) = first {
                prop_assert_eq!(q, p);
                prop_assert_eq!(validate(q), Ok(p));
            }
        }

        #[test]
        fn unit_round_trips(x in 1e-3..1e3f64, r in 0.5..5.0f64) {
            let s = Scale { reference_ev: r };
            let ev = x;
            prop_assert!((s.scaled_to_ev(s.ev_to_scaled(ev)) - ev).abs() <= 1e-12 * ev);
            let hz = x * 1e12;
            prop_assert!((s.scaled_to_hz(s.hz_to_scaled(hz)) - hz).abs() <= 1e-12 * hz);
            let nm = x * 100.0;
            prop_assert!((s.scaled_to_nm(s.nm_to_scaled(nm)) - nm).abs() <= 1e-12 * nm);
        }
    }
}
