//! Closed-form Fourier coefficients of the modulation function at harmonic l.

use std::f64::consts::PI;

use super::PulseError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterCoefficient {
    pub harmonic: u32,
    pub value: f64,
}

/// sin(pi l / 2) evaluated exactly for integer l.
pub fn half_turn_sign(l: u32) -> f64 {
    match l % 4 {
        1 => 1.0,
        3 => -1.0,
        _ => 0.0,
    }
}

/// Largest magnitude any coefficient of the family can reach at harmonic l.
pub fn envelope(l: u32) -> f64 {
    4.0 / (PI * l as f64)
}

/// Ideal instantaneous pi pulses: 4/(pi l) sin(pi l/2).
pub fn f_instantaneous(l: u32) -> FilterCoefficient {
    assert!(l >= 1, "harmonic index starts at 1");
    FilterCoefficient {
        harmonic: l,
        value: envelope(l) * half_turn_sign(l),
    }
}

/// Constant-amplitude (top-hat) pulses of length `t_pi` in a period `period`.
///
/// The expression has a removable singularity at `t_pi = T/(2l)`; it is
/// evaluated through `sin(pi v/2) / v` with `v = 1 - 2 l t_pi / T`, which is
/// well conditioned on both sides, and replaced by the limit `sin(pi l/2)/l`
/// inside `|1 - (2 l t_pi/T)^2| < 1e-9`.
pub fn f_top_hat(l: u32, t_pi: f64, period: f64) -> FilterCoefficient {
    assert!(l >= 1, "harmonic index starts at 1");
    let lf = l as f64;
    let s = half_turn_sign(l);
    let u = 2.0 * lf * t_pi / period;
    let value = if (1.0 - u * u).abs() < 1e-9 {
        s / lf
    } else {
        // cos(pi u/2) = sin(pi v/2), 1 - u^2 = v (2 - v)
        let v = 1.0 - u;
        4.0 * s * (0.5 * PI * v).sin() / (PI * lf * v * (2.0 - v))
    };
    FilterCoefficient { harmonic: l, value }
}

/// Modulated extended pulses whose intrapulse contribution is cancelled:
/// 4/(pi l) cos(pi t_pi / (T/l)) sin(pi l/2).
pub fn f_modulated(l: u32, t_pi: f64, period: f64) -> Result<FilterCoefficient, PulseError> {
    if l == 0 || l % 2 == 0 {
        return Err(PulseError::EvenHarmonic(l));
    }
    let x = t_pi * l as f64 / period;
    Ok(FilterCoefficient {
        harmonic: l,
        value: envelope(l) * (PI * x).cos() * half_turn_sign(l),
    })
}

/// Pulse length giving `f_modulated(l, t_pi, T) = target`. `branch` is the
/// integer part of `t_pi / (T/l)`: larger branches mean longer, weaker pulses.
pub fn t_pi_for_target(l: u32, period: f64, target: f64, branch: u32) -> Result<f64, PulseError> {
    if l == 0 || l % 2 == 0 {
        return Err(PulseError::EvenHarmonic(l));
    }
    let bound = envelope(l);
    if !(target.abs() <= bound) {
        return Err(PulseError::OutOfRange { target, bound });
    }
    // cos(pi x) = c with x in [branch, branch + 1)
    let c = (target / bound * half_turn_sign(l)).clamp(-1.0, 1.0);
    let parity = if branch % 2 == 0 { 1.0 } else { -1.0 };
    let x = branch as f64 + (parity * c).acos() / PI;
    let t_pi = x * period / l as f64;
    if t_pi >= 0.5 * period {
        return Err(PulseError::NoRoom {
            t_pi,
            half_period: 0.5 * period,
        });
    }
    Ok(t_pi)
}
