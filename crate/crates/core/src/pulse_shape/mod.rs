//! Extended pi pulses: modulation functions, Rabi waveforms and their
//! Fourier (filter) coefficients.
//!
//! One modulation period `T` holds two pulses centered at `T/4` and `3T/4`,
//! separated by flat regions: `F = +1` on `[0, t_m)`, `-1` between the
//! pulses and `+1` again after the second one, with `T = 4 t_m + 2 t_pi`.

mod coefficients;
mod spec;
mod waveform;

use thiserror::Error;

pub use coefficients::{
    envelope, f_instantaneous, f_modulated, f_top_hat, half_turn_sign, t_pi_for_target,
    FilterCoefficient,
};
pub use spec::{intrapulse_residual, solve_a1, ExtendedPulseSpec};
pub use waveform::{
    fourier_numeric, rabi_from_modulation, synthesize_modulation, synthesize_shape,
    ModulationWaveform, PulseShape, PulseWindow, WindowProfile,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PulseError {
    #[error("harmonic {0} is even; the modulated coefficient vanishes identically")]
    EvenHarmonic(u32),
    #[error("target coefficient {target} exceeds the attainable bound {bound}")]
    OutOfRange { target: f64, bound: f64 },
    #[error("requested branch needs t_pi = {t_pi:e} s, not below T/2 = {half_period:e} s")]
    NoRoom { t_pi: f64, half_period: f64 },
    #[error("modulation cannot cancel the ramp: denominator integral {denominator:e} is degenerate")]
    DegenerateDenominator { denominator: f64 },
    #[error("modulation leaves [-1, 1]: max |F| = 1 + {overshoot:e} at t = {time:e} s")]
    BoundViolation { overshoot: f64, time: f64 },
    #[error("modulation misses +-1 at a window edge by {gap:e} (t = {time:e} s); widen the window or narrow the envelope")]
    EdgeMismatch { gap: f64, time: f64 },
    #[error("|F| reaches 1 inside a pulse window at t = {time:e} s; arccos is not differentiable there")]
    EdgeSingularity { time: f64 },
    #[error("pulse amplitude a1 has not been solved")]
    NotSolved,
    #[error("need at least {required} samples per period, got {got}")]
    InsufficientSamples { required: usize, got: usize },
    #[error("invalid pulse parameters: {0}")]
    InvalidSpec(String),
}
