use std::f64::consts::PI;

use super::{half_turn_sign, PulseError};
use crate::quadrature::integrate_adaptive;

const A1_REL_TOL: f64 = 1e-10;

/// Parameters of one modulated pi pulse (and its mirrored partner).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedPulseSpec {
    /// Odd harmonic the pulse is tuned for.
    pub harmonic: u32,
    /// Modulation period T, seconds.
    pub period: f64,
    /// Pulse duration, seconds.
    pub t_pi: f64,
    /// Gaussian width c of the modulation envelope, seconds.
    pub width: f64,
    /// Amplitude of the Gaussian-weighted harmonic; `None` until solved.
    pub a1: Option<f64>,
    /// Highest modulation harmonic q; only q = 1 is supported.
    pub q_max: u32,
}

impl ExtendedPulseSpec {
    pub fn new(harmonic: u32, period: f64, t_pi: f64, width: f64) -> Result<Self, PulseError> {
        if harmonic == 0 || harmonic % 2 == 0 {
            return Err(PulseError::EvenHarmonic(harmonic));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(PulseError::InvalidSpec(format!("period must be positive, got {period}")));
        }
        if !(t_pi > 0.0 && t_pi < 0.5 * period) {
            return Err(PulseError::InvalidSpec(format!(
                "need 0 < t_pi < T/2, got t_pi = {t_pi:e} s with T = {period:e} s"
            )));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(PulseError::InvalidSpec(format!("Gaussian width must be positive, got {width}")));
        }
        Ok(Self {
            harmonic,
            period,
            t_pi,
            width,
            a1: None,
            q_max: 1,
        })
    }

    /// Spec with `t_pi = ratio * T/l` and `c = width_ratio * t_pi`.
    pub fn from_ratios(
        harmonic: u32,
        period: f64,
        t_pi_over_unit: f64,
        width_over_t_pi: f64,
    ) -> Result<Self, PulseError> {
        let t_pi = t_pi_over_unit * period / harmonic as f64;
        Self::new(harmonic, period, t_pi, width_over_t_pi * t_pi)
    }

    pub fn solved(mut self) -> Result<Self, PulseError> {
        self.a1 = Some(solve_a1(&self)?);
        Ok(self)
    }

    /// Start of the first pulse, `t_m = (T - 2 t_pi)/4`.
    pub fn t_m(&self) -> f64 {
        0.25 * (self.period - 2.0 * self.t_pi)
    }

    /// Center of the first pulse (= T/4).
    pub fn t_p(&self) -> f64 {
        self.t_m() + 0.5 * self.t_pi
    }

    pub fn omega_m(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// `2 pi l t_pi / T`: harmonic phase accumulated over one pulse.
    fn kappa(&self) -> f64 {
        2.0 * PI * self.harmonic as f64 * self.t_pi / self.period
    }

    fn reduced_width(&self) -> f64 {
        self.width / self.t_pi
    }

    /// F inside the first pulse window at `t` (absolute time within the period).
    pub fn first_pulse_value(&self, t: f64) -> f64 {
        let u = t - self.t_p();
        let ramp = (PI * (t - self.t_m()) / self.t_pi).cos();
        let a1 = self.a1.unwrap_or(0.0);
        if a1 == 0.0 {
            return ramp;
        }
        let g = (-(u * u) / (2.0 * self.width * self.width)).exp();
        ramp + a1 * g * (self.harmonic as f64 * self.omega_m() * u).sin()
    }

    /// `arccos F` inside the first pulse window, from `1 -+ F` written
    /// without cancellation so it stays accurate where `|F|` is near 1.
    pub fn first_pulse_theta(&self, t: f64) -> f64 {
        let half = 0.5 * PI * (t - self.t_m()) / self.t_pi;
        let u = t - self.t_p();
        let a1 = self.a1.unwrap_or(0.0);
        let bump = if a1 == 0.0 {
            0.0
        } else {
            a1 * (-(u * u) / (2.0 * self.width * self.width)).exp() * (self.harmonic as f64 * self.omega_m() * u).sin()
        };
        let below = (2.0 * half.sin().powi(2) - bump).max(0.0);
        let above = (2.0 * half.cos().powi(2) + bump).max(0.0);
        2.0 * below.sqrt().atan2(above.sqrt())
    }

    /// Value of F anywhere in the period (no sampling involved).
    pub fn value(&self, t: f64) -> f64 {
        let t = t.rem_euclid(self.period);
        let half = 0.5 * self.period;
        let (t1, sign) = if t < half { (t, 1.0) } else { (t - half, -1.0) };
        let tm = self.t_m();
        let v = if t1 < tm {
            1.0
        } else if t1 <= tm + self.t_pi {
            self.first_pulse_value(t1)
        } else {
            -1.0
        };
        sign * v
    }
}

/// Solves for `a1` so that the first pulse carries no component at the
/// target harmonic:
///
/// `a1 = -int cos(pi(s-t_m)/t_pi) cos(l w s) ds / int g(s) sin(l w (s-t_p)) cos(l w s) ds`
///
/// Both integrals run over the pulse window and are evaluated in the reduced
/// variable `x = (s - t_p)/t_pi`, using `t_p = T/4` so that
/// `cos(l w s) = cos(kappa x + l pi/2)`.
pub fn solve_a1(spec: &ExtendedPulseSpec) -> Result<f64, PulseError> {
    let kappa = spec.kappa();
    let chat = spec.reduced_width();
    let phase = (spec.harmonic % 4) as f64 * 0.5 * PI;

    let numerator = integrate_adaptive(
        |x| -(PI * x).sin() * (kappa * x + phase).cos(),
        -0.5,
        0.5,
        A1_REL_TOL,
        1e-16,
    );
    let denominator = integrate_adaptive(
        |x| (-(x * x) / (2.0 * chat * chat)).exp() * (kappa * x).sin() * (kappa * x + phase).cos(),
        -0.5,
        0.5,
        A1_REL_TOL,
        1e-16,
    );
    // Reduced integrals carry a common factor t_pi; the threshold
    // |D| < 1e-14 t_pi becomes |D_reduced| < 1e-14.
    if denominator.value.abs() < 1e-14 {
        return Err(PulseError::DegenerateDenominator {
            denominator: denominator.value * spec.t_pi,
        });
    }
    Ok(-numerator.value / denominator.value)
}

/// `int F(s) cos(l w_M s) ds` over the first pulse window, in seconds,
/// computed directly in absolute time.
pub fn intrapulse_residual(spec: &ExtendedPulseSpec) -> f64 {
    let w = spec.harmonic as f64 * spec.omega_m();
    let tm = spec.t_m();
    let r = integrate_adaptive(
        |s| spec.first_pulse_value(s) * (w * s).cos(),
        tm,
        tm + spec.t_pi,
        1e-12,
        1e-22 * spec.t_pi,
    );
    r.value
}

impl ExtendedPulseSpec {
    /// Sign of F at the start of window `k` (0 or 1).
    pub fn window_sign(k: usize) -> f64 {
        if k % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Analytic filter coefficient for this spec at its own harmonic.
    pub fn filter_coefficient(&self) -> f64 {
        super::envelope(self.harmonic)
            * (PI * self.t_pi * self.harmonic as f64 / self.period).cos()
            * half_turn_sign(self.harmonic)
    }
}
