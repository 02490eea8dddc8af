//! Microwave energy delivered per pulse and the energy-equivalent constant
//! Rabi frequency.
//!
//! Energies are per unit area and reported in normalized units with
//! `c / (mu0 gamma_e^2)` factored out, i.e. in rad^2/s. Multiply by
//! [`si_factor`] for J/m^2.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::interp::{cumulative_integral, derivative_at_nodes};
use crate::pulse_shape::{ModulationWaveform, PulseError, WindowProfile};
use crate::quadrature::{linear_times_cos, linear_times_sin};
use crate::spin_model::PhysicalConstants;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const MU0: f64 = 1.256_637_062_12e-6;

/// `c / (mu0 gamma_e^2)`: normalized energy to J/m^2.
pub fn si_factor(constants: &PhysicalConstants) -> f64 {
    SPEED_OF_LIGHT / (MU0 * constants.gamma_e * constants.gamma_e)
}

/// Default carrier: the |0> <-> |1> transition at field `b_field`.
pub fn default_carrier(constants: &PhysicalConstants, b_field: f64) -> f64 {
    constants.electron_transition(b_field)
}

/// `int_0^t_pi 2 Omega^2 cos^2(w t - phi) dt` for constant `Omega`:
/// `Omega^2 [t_pi + (sin(2 w t_pi - 2 phi) + sin(2 phi)) / (2 w)]`.
/// An infinite carrier drops the ripple.
pub fn energy_top_hat(rabi: f64, t_pi: f64, carrier: f64, phase: f64) -> f64 {
    let ripple = if carrier.is_infinite() {
        0.0
    } else {
        ((2.0 * carrier * t_pi - 2.0 * phase).sin() + (2.0 * phase).sin()) / (2.0 * carrier)
    };
    rabi * rabi * (t_pi + ripple)
}

/// Constant Rabi frequency whose pi pulse carries energy `energy`
/// (ripple neglected): `E / pi`.
pub fn equivalent_rabi(energy: f64) -> f64 {
    energy / PI
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedEnergy {
    /// Normalized energy of one pulse.
    pub energy: f64,
    /// Energy of the `Omega dOmega/dt` term, normalized.
    pub cross_term: f64,
    /// `|cross_term| / energy`.
    pub cross_term_fraction: f64,
}

fn window_energy(p: &WindowProfile, carrier: f64, phase: f64) -> ExtendedEnergy {
    let x: Vec<f64> = p.times.iter().map(|t| t - p.times[0]).collect();
    let sq: Vec<f64> = p.rabi.iter().map(|w| w * w).collect();
    let plain = *cumulative_integral(&x, &sq).last().unwrap_or(&0.0);
    let (ripple, cross) = if carrier.is_infinite() {
        (0.0, 0.0)
    } else {
        let ripple = linear_times_cos(&x, &sq, 2.0 * carrier, -2.0 * phase);
        // (2/w) Omega Omega' cos sin = (Omega^2)' sin(2(w t - phi)) / (2 w)
        let dsq = derivative_at_nodes(&x, &sq);
        let cross = linear_times_sin(&x, &dsq, 2.0 * carrier, -2.0 * phase) / (2.0 * carrier);
        (ripple, cross)
    };
    let energy = plain + ripple;
    ExtendedEnergy {
        energy,
        cross_term: cross,
        cross_term_fraction: if energy > 0.0 { cross.abs() / energy } else { 0.0 },
    }
}

/// Energy of the first pulse of a waveform with Rabi samples, with time
/// measured from the pulse start. The `Omega dOmega/dt` term is evaluated
/// and reported but not added to `energy`.
pub fn energy_extended(wave: &ModulationWaveform, carrier: f64, phase: f64) -> Result<ExtendedEnergy, PulseError> {
    if wave.rabi.is_none() {
        return Err(PulseError::InvalidSpec("waveform has no Rabi samples".into()));
    }
    Ok(match wave.profiles.first() {
        Some(p) => window_energy(p, carrier, phase),
        None => ExtendedEnergy {
            energy: 0.0,
            cross_term: 0.0,
            cross_term_fraction: 0.0,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub family: String,
    pub t_pi: f64,
    pub energy: f64,
    /// J/m^2
    pub energy_si: f64,
    pub equivalent_rabi: f64,
    pub carrier: f64,
    pub phase: f64,
    pub cross_term_fraction: f64,
}

impl EnergyReport {
    pub fn new(family: &str, t_pi: f64, e: ExtendedEnergy, carrier: f64, phase: f64, constants: &PhysicalConstants) -> Self {
        Self {
            family: family.to_string(),
            t_pi,
            energy: e.energy,
            energy_si: e.energy * si_factor(constants),
            equivalent_rabi: equivalent_rabi(e.energy),
            carrier,
            phase,
            cross_term_fraction: e.cross_term_fraction,
        }
    }

    /// Key-value text.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "family = {}", self.family);
        let _ = writeln!(s, "t_pi_ns = {}", self.t_pi * 1e9);
        let _ = writeln!(s, "energy_normalized = {:.12e}", self.energy);
        let _ = writeln!(s, "energy_J_per_m2 = {:.12e}", self.energy_si);
        let _ = writeln!(s, "equivalent_rabi_MHz = {:.9}", self.equivalent_rabi / (2.0 * PI) * 1e-6);
        let _ = writeln!(s, "carrier_GHz = {:.9}", self.carrier / (2.0 * PI) * 1e-9);
        let _ = writeln!(s, "phase_rad = {}", self.phase);
        let _ = writeln!(s, "cross_term_fraction = {:.6e}", self.cross_term_fraction);
        s
    }
}
