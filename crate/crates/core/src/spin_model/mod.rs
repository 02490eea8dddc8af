//! Electron sensor, nuclear spins and the per-nucleus frame quantities.
//!
//! All frequencies are stored as angular frequencies (rad/s). Conversion to
//! Hz/kHz/MHz happens only at file and CLI boundaries.

mod bath_file;
mod lattice;

use std::collections::HashSet;
use std::f64::consts::PI;

use nalgebra::Vector3;
use thiserror::Error;

pub use bath_file::{read_bath, read_bath_str, write_bath, write_bath_string, BathFileError};
pub use lattice::{
    diamond_sites_in_shell, generate_c13_bath, point_dipole_hyperfine, DIAMOND_LATTICE_CONSTANT,
    HBAR, MU0_OVER_4PI,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinModelError {
    #[error("nuclear resonance vector vanishes for nucleus {0}; frame axes undefined")]
    ZeroFrequency(String),
    #[error("shell [{min_nm} nm, {max_nm} nm] holds {available} lattice sites, {requested} requested")]
    InsufficientSites {
        min_nm: f64,
        max_nm: f64,
        available: usize,
        requested: usize,
    },
    #[error("invalid bath: {0}")]
    InvalidBath(String),
}

/// Fixed constants of the NV electron and the nuclear species used here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Zero-field splitting, rad/s.
    pub zero_field_splitting: f64,
    /// Electron gyromagnetic ratio, rad/(s T). Negative.
    pub gamma_e: f64,
    pub gamma_c13: f64,
    pub gamma_h: f64,
}

impl PhysicalConstants {
    pub const NV: PhysicalConstants = PhysicalConstants {
        zero_field_splitting: 2.0 * PI * 2.87e9,
        gamma_e: -2.0 * PI * 28.024e9,
        gamma_c13: 2.0 * PI * 10.708e6,
        gamma_h: 2.0 * PI * 42.577e6,
    };

    /// Electron |0> <-> |1> transition frequency at field `b_field` (rad/s).
    pub fn electron_transition(&self, b_field: f64) -> f64 {
        self.zero_field_splitting - self.gamma_e * b_field
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::NV
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NuclearSpin {
    pub label: String,
    /// Gyromagnetic ratio, rad/(s T).
    pub gyro: f64,
    /// Hyperfine vector A_j, rad/s.
    pub hyperfine: Vector3<f64>,
}

impl NuclearSpin {
    pub fn new(label: impl Into<String>, gyro: f64, hyperfine: Vector3<f64>) -> Self {
        Self {
            label: label.into(),
            gyro,
            hyperfine,
        }
    }

    /// Hydrogen nucleus with hyperfine vector given in kHz (non-angular).
    pub fn proton_khz(label: impl Into<String>, a_khz: [f64; 3]) -> Self {
        let k = 2.0 * PI * 1e3;
        Self::new(
            label,
            PhysicalConstants::NV.gamma_h,
            Vector3::new(a_khz[0] * k, a_khz[1] * k, a_khz[2] * k),
        )
    }

    pub fn larmor(&self, b_field: f64) -> f64 {
        self.gyro * b_field
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinBath {
    pub constants: PhysicalConstants,
    /// Static field along the NV axis, tesla.
    pub b_field: f64,
    pub nuclei: Vec<NuclearSpin>,
}

impl SpinBath {
    pub fn new(b_field: f64, nuclei: Vec<NuclearSpin>) -> Result<Self, SpinModelError> {
        Self::with_constants(PhysicalConstants::NV, b_field, nuclei)
    }

    pub fn with_constants(
        constants: PhysicalConstants,
        b_field: f64,
        nuclei: Vec<NuclearSpin>,
    ) -> Result<Self, SpinModelError> {
        if !(b_field > 0.0 && b_field.is_finite()) {
            return Err(SpinModelError::InvalidBath(format!(
                "field must be positive, got {b_field} T"
            )));
        }
        let mut seen = HashSet::new();
        for n in &nuclei {
            if !seen.insert(n.label.as_str()) {
                return Err(SpinModelError::InvalidBath(format!(
                    "duplicate nucleus label {}",
                    n.label
                )));
            }
            if !n.hyperfine.iter().all(|a| a.is_finite()) {
                return Err(SpinModelError::InvalidBath(format!(
                    "non-finite hyperfine vector for {}",
                    n.label
                )));
            }
            if !(n.gyro > 0.0) {
                return Err(SpinModelError::InvalidBath(format!(
                    "gyromagnetic ratio of {} must be positive",
                    n.label
                )));
            }
        }
        Ok(Self {
            constants,
            b_field,
            nuclei,
        })
    }

    /// The five-proton cluster used for the high-field selectivity demonstration.
    pub fn five_proton_cluster(b_field: f64) -> Self {
        let nuclei = vec![
            NuclearSpin::proton_khz("H1", [-1.84, -3.19, -11.02]),
            NuclearSpin::proton_khz("H2", [2.38, 5.04, -8.78]),
            NuclearSpin::proton_khz("H3", [8.09, 2.66, -1.02]),
            NuclearSpin::proton_khz("H4", [4.26, 2.46, 3.48]),
            NuclearSpin::proton_khz("H5", [4.07, 1.00, -7.09]),
        ];
        Self::new(b_field, nuclei).expect("fixture bath is valid")
    }

    pub fn nucleus(&self, label: &str) -> Option<&NuclearSpin> {
        self.nuclei.iter().find(|n| n.label == label)
    }

    pub fn larmor_frequency(&self, nucleus: &NuclearSpin) -> f64 {
        nucleus.larmor(self.b_field)
    }

    pub fn hyperfine_components(
        &self,
        nucleus: &NuclearSpin,
    ) -> Result<FrameComponents, SpinModelError> {
        FrameComponents::compute(self.larmor_frequency(nucleus), nucleus)
    }

    /// Keeps only the named nuclei, preserving bath order.
    pub fn subset(&self, labels: &[String]) -> Result<SpinBath, SpinModelError> {
        let mut nuclei = Vec::with_capacity(labels.len());
        for l in labels {
            let n = self
                .nucleus(l)
                .ok_or_else(|| SpinModelError::InvalidBath(format!("unknown nucleus {l}")))?;
            nuclei.push(n.clone());
        }
        nuclei.sort_by_key(|n| self.nuclei.iter().position(|m| m.label == n.label));
        Ok(SpinBath {
            constants: self.constants,
            b_field: self.b_field,
            nuclei,
        })
    }

    pub fn with_field(&self, b_field: f64) -> Result<SpinBath, SpinModelError> {
        SpinBath::with_constants(self.constants, b_field, self.nuclei.clone())
    }
}

/// Quantities of one nucleus expressed in its own precession frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameComponents {
    /// |omega_L z - A/2|, rad/s.
    pub omega: f64,
    pub ax: f64,
    pub ay: f64,
    /// Projection of A on the precession axis (signed), rad/s.
    pub az: f64,
    pub x_axis: Vector3<f64>,
    pub y_axis: Vector3<f64>,
    pub omega_axis: Vector3<f64>,
}

impl FrameComponents {
    pub fn compute(larmor: f64, nucleus: &NuclearSpin) -> Result<Self, SpinModelError> {
        let a = nucleus.hyperfine;
        let omega_vec = Vector3::new(0.0, 0.0, larmor) - a * 0.5;
        let omega = omega_vec.norm();
        if !(omega > 0.0) {
            return Err(SpinModelError::ZeroFrequency(nucleus.label.clone()));
        }
        let w = omega_vec / omega;
        let az = a.dot(&w);
        let ax_vec = a - w * az;
        let ay_vec = w.cross(&a);
        let ax = ax_vec.norm();
        let ay = ay_vec.norm();

        // Below this the transverse direction is numerical noise.
        let degenerate = ax <= 1e-14 * a.norm().max(f64::MIN_POSITIVE);
        let x_axis = if !degenerate {
            ax_vec / ax
        } else {
            let zc = Vector3::z().cross(&w);
            if zc.norm() > 1e-12 {
                zc.normalize()
            } else {
                Vector3::x()
            }
        };
        // Re-orthogonalize against w to keep the triple orthonormal at 1e-12.
        let x_axis = (x_axis - w * x_axis.dot(&w)).normalize();
        let y_axis = w.cross(&x_axis);
        let (ax, ay) = if degenerate { (0.0, 0.0) } else { (ax, ay) };

        Ok(Self {
            omega,
            ax,
            ay,
            az,
            x_axis,
            y_axis,
            omega_axis: w,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn khz(x: f64) -> f64 {
        2.0 * PI * 1e3 * x
    }

    #[test]
    fn larmor_values() {
        let bath = SpinBath::five_proton_cluster(1.0);
        let h = &bath.nuclei[0];
        assert!((bath.larmor_frequency(h) - 2.0 * PI * 42.577e6).abs() < 1e-6);
        let c = NuclearSpin::new("C", PhysicalConstants::NV.gamma_c13, Vector3::zeros());
        assert!((c.larmor(1.0) - 2.0 * PI * 10.708e6).abs() < 1e-6);
        assert_eq!(c.larmor(0.0), 0.0);
    }

    #[test]
    fn longitudinal_coupling_has_no_transverse_part() {
        let wl = 2.0 * PI * 1e6;
        let n = NuclearSpin::new("n", 1.0, Vector3::new(0.0, 0.0, khz(20.0)));
        let f = FrameComponents::compute(wl, &n).unwrap();
        assert_eq!(f.ax, 0.0);
        assert_eq!(f.ay, 0.0);
        assert!((f.omega - (wl - khz(10.0))).abs() < 1e-6);
        assert!(f.x_axis.dot(&f.omega_axis).abs() < 1e-12);
        assert!((f.x_axis.cross(&f.y_axis) - f.omega_axis).norm() < 1e-12);
    }

    #[test]
    fn purely_transverse_coupling() {
        let wl = 2.0 * PI * 2e5;
        let a = khz(30.0);
        let n = NuclearSpin::new("n", 1.0, Vector3::new(a, 0.0, 0.0));
        let f = FrameComponents::compute(wl, &n).unwrap();
        let expect = (wl * wl + a * a / 4.0).sqrt();
        assert!((f.omega - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn first_cluster_proton_frame() {
        let bath = SpinBath::five_proton_cluster(1.0);
        let f = bath.hyperfine_components(&bath.nuclei[0]).unwrap();
        let expect_omega = 2.0 * PI * (42.577e6 + 5.51e3);
        assert!((f.omega - expect_omega).abs() < 2.0 * PI * 1.0);
        // sqrt(1.84^2 + 3.19^2) = 3.6826 kHz
        assert!((f.ax / (2.0 * PI * 1e3) - 3.6826).abs() < 1e-3);
        assert!((f.ax - f.ay).abs() < 1e-12 * f.ax.max(1.0) * 1e3);
    }

    #[test]
    fn zero_frequency_is_reported() {
        let wl = khz(10.0);
        let n = NuclearSpin::new("n", 1.0, Vector3::new(0.0, 0.0, 2.0 * wl));
        assert!(matches!(
            FrameComponents::compute(wl, &n),
            Err(SpinModelError::ZeroFrequency(_))
        ));
    }

    #[test]
    fn bath_validation() {
        let n = NuclearSpin::proton_khz("a", [1.0, 0.0, 0.0]);
        assert!(SpinBath::new(0.0, vec![n.clone()]).is_err());
        assert!(SpinBath::new(1.0, vec![n.clone(), n.clone()]).is_err());
        let bad = NuclearSpin::new("b", 1.0, Vector3::new(f64::NAN, 0.0, 0.0));
        assert!(SpinBath::new(1.0, vec![bad]).is_err());
    }

    #[test]
    fn subset_keeps_bath_order() {
        let bath = SpinBath::five_proton_cluster(1.0);
        let s = bath.subset(&["H4".into(), "H2".into()]).unwrap();
        let labels: Vec<_> = s.nuclei.iter().map(|n| n.label.as_str()).collect();
        assert_eq!(labels, ["H2", "H4"]);
        assert!(bath.subset(&["nope".into()]).is_err());
    }
}
