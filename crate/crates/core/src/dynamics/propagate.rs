//! Pulse, period and block propagators.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::operators::{
    apply_electron, apply_free, drive_rotation, expm_hermitian, identity, rephase, SystemModel, C,
};
use crate::pulse_shape::WindowProfile;

/// How the frozen Hamiltonian of one intrapulse step is exponentiated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stepper {
    /// Full Hermitian eigendecomposition per step.
    Eigen,
    /// Symmetric split into conditional precession and electron drive, both
    /// exponentiated in closed form.
    Split,
    /// Eigen for dimension up to 8, split above.
    Auto,
}

impl Stepper {
    pub fn resolve(self, dim: usize) -> Stepper {
        match self {
            Stepper::Auto if dim <= 8 => Stepper::Eigen,
            Stepper::Auto => Stepper::Split,
            s => s,
        }
    }
}

/// Drive of one pulse, relative to its start.
#[derive(Debug, Clone, PartialEq)]
pub enum PulseDrive {
    /// `(dt, Omega)` piecewise-constant steps.
    Shaped(Vec<(f64, f64)>),
    Instantaneous,
}

impl PulseDrive {
    pub fn duration(&self) -> f64 {
        match self {
            PulseDrive::Shaped(s) => s.iter().map(|(dt, _)| dt).sum(),
            PulseDrive::Instantaneous => 0.0,
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            PulseDrive::Shaped(s) => s.iter().map(|(dt, w)| dt * w).sum(),
            PulseDrive::Instantaneous => PI,
        }
    }

    pub fn steps(&self) -> usize {
        match self {
            PulseDrive::Shaped(s) => s.len(),
            PulseDrive::Instantaneous => 0,
        }
    }
}

/// Piecewise-constant steps over one window. Each node interval is cut into
/// at least `substeps` pieces no longer than `max_step`; the step Rabi
/// frequency is the rotation-angle increment over the step divided by its
/// length, so the steps add up to the exact pulse area.
pub fn drive_steps(profile: &WindowProfile, substeps: usize, max_step: Option<f64>) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for k in 0..profile.times.len() - 1 {
        let (t0, t1) = (profile.times[k], profile.times[k + 1]);
        let dt = t1 - t0;
        let mut m = substeps.max(1);
        if let Some(h) = max_step {
            m = m.max((dt / h).ceil() as usize);
        }
        let mut prev_t = t0;
        let mut prev_theta = profile.theta[k];
        for i in 1..=m {
            let (t, theta) = if i == m {
                (t1, profile.theta[k + 1])
            } else {
                let t = t0 + dt * i as f64 / m as f64;
                (t, profile.theta_at(t))
            };
            let h = t - prev_t;
            out.push((h, (theta - prev_theta) / h));
            prev_t = t;
            prev_theta = theta;
        }
    }
    out
}

/// Propagator of one pulse with drive phase 0 and Rabi frequencies scaled by `1 + eps`.
pub fn pulse_propagator(model: &SystemModel, drive: &PulseDrive, eps: f64, stepper: Stepper) -> DMatrix<C> {
    let d = model.dim();
    let scale = 1.0 + eps;
    let steps = match drive {
        PulseDrive::Instantaneous => {
            let mut u = identity(d);
            apply_electron(&mut u, &drive_rotation(PI * scale, 0.0));
            return u;
        }
        PulseDrive::Shaped(s) => s,
    };
    match stepper.resolve(d) {
        Stepper::Eigen | Stepper::Auto => {
            let h0 = model.hamiltonian(0.0, 0.0);
            let drive_op = model.hamiltonian(1.0, 0.0) - &h0;
            let mut u = identity(d);
            for &(dt, w) in steps {
                let h = &h0 + &drive_op * C::new(w * scale, 0.0);
                u = expm_hermitian(&h, dt) * u;
            }
            u
        }
        Stepper::Split => {
            let mut u = identity(d);
            let mut pending = 0.0;
            for &(dt, w) in steps {
                apply_free(&mut u, &model.free_gates(pending + 0.5 * dt));
                apply_electron(&mut u, &drive_rotation(w * scale * dt, 0.0));
                pending = 0.5 * dt;
            }
            apply_free(&mut u, &model.free_gates(pending));
            u
        }
    }
}

/// Left-multiplies `u` by free evolution over `tau`.
pub fn apply_free_evolution(model: &SystemModel, u: &mut DMatrix<C>, tau: f64) {
    if tau != 0.0 {
        apply_free(u, &model.free_gates(tau));
    }
}

/// Propagator over `4T`: eight pulses centred at `T/4 + k T/2` with the
/// given phases, all sharing the phase-0 pulse propagator `pulse0`.
pub fn block_propagator(model: &SystemModel, pulse0: &DMatrix<C>, period: f64, t_pi: f64, phases: &[f64; 8]) -> DMatrix<C> {
    let t_m = 0.25 * (period - 2.0 * t_pi);
    let mut cache: Vec<(f64, DMatrix<C>)> = Vec::new();
    let mut u = identity(model.dim());
    apply_free_evolution(model, &mut u, t_m);
    for (k, &phi) in phases.iter().enumerate() {
        let p = match cache.iter().find(|(f, _)| *f == phi) {
            Some((_, p)) => p.clone(),
            None => {
                let p = rephase(pulse0, phi);
                cache.push((phi, p.clone()));
                p
            }
        };
        u = p * u;
        let gap = if k == 7 { t_m } else { 2.0 * t_m };
        apply_free_evolution(model, &mut u, gap);
    }
    u
}

/// Propagator over `4T` where pulse `k` has its own propagator.
pub fn block_from_pulses(model: &SystemModel, pulses: &[DMatrix<C>], period: f64, t_pi: f64) -> DMatrix<C> {
    let t_m = 0.25 * (period - 2.0 * t_pi);
    let mut u = identity(model.dim());
    apply_free_evolution(model, &mut u, t_m);
    for (k, p) in pulses.iter().enumerate() {
        u = p * u;
        let gap = if k + 1 == pulses.len() { t_m } else { 2.0 * t_m };
        apply_free_evolution(model, &mut u, gap);
    }
    u
}

pub fn identity_of(model: &SystemModel) -> DMatrix<C> {
    identity(model.dim())
}

pub fn matrix_power(u: &DMatrix<C>, mut n: usize) -> DMatrix<C> {
    let mut result = identity(u.nrows());
    let mut base = u.clone();
    let mut first = true;
    while n > 0 {
        if n & 1 == 1 {
            result = if first { base.clone() } else { &base * &result };
            first = false;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    result
}

/// `<sigma_x>` after `U` acting on `|+><+| (x) 1/2^N`.
pub fn sigma_x_after(u: &DMatrix<C>) -> f64 {
    let half = u.nrows() / 2;
    let mut acc = 0.0;
    for k in 0..half {
        for i in 0..half {
            let w0 = u[(i, k)] + u[(i, k + half)];
            let w1 = u[(i + half, k)] + u[(i + half, k + half)];
            acc += (w0 * w1.conj()).re;
        }
    }
    acc / half as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::operators::unitarity_error;
    use crate::pulse_shape::{rabi_from_modulation, synthesize_modulation, ExtendedPulseSpec};
    use crate::spin_model::SpinBath;

    fn diff(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
        (a - b).iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    fn dark_drive(n: usize, substeps: usize) -> PulseDrive {
        let t = 13.0 / 42.577e6;
        let spec = ExtendedPulseSpec::from_ratios(13, t, 6.0, 0.07).unwrap().solved().unwrap();
        let w = rabi_from_modulation(synthesize_modulation(&spec, n).unwrap()).unwrap();
        PulseDrive::Shaped(drive_steps(&w.profiles[0], substeps, None))
    }

    #[test]
    fn steps_carry_exact_area() {
        let d = dark_drive(2600, 1);
        assert!((d.area() - PI).abs() < 1e-12);
        let d2 = dark_drive(2600, 3);
        assert!((d2.area() - PI).abs() < 1e-12);
        assert!(d2.steps() >= 3 * d.steps() - 3);
        assert!((d.duration() - d2.duration()).abs() < 1e-20);
    }

    #[test]
    fn split_agrees_with_eigen() {
        let bath = SpinBath::five_proton_cluster(1.0).subset(&["H1".into(), "H3".into()]).unwrap();
        let model = SystemModel::new(&bath);
        let drive = dark_drive(2600, 1);
        let a = pulse_propagator(&model, &drive, 0.01, Stepper::Eigen);
        let b = pulse_propagator(&model, &drive, 0.01, Stepper::Split);
        assert!(unitarity_error(&a) < 1e-10);
        assert!(unitarity_error(&b) < 1e-12);
        assert!(diff(&a, &b) < 1e-6, "{}", diff(&a, &b));
    }

    #[test]
    fn ideal_pulse_flips_electron() {
        let bath = SpinBath::five_proton_cluster(1.0).subset(&["H1".into()]).unwrap();
        let model = SystemModel::new(&bath);
        let u = pulse_propagator(&model, &PulseDrive::Instantaneous, 0.0, Stepper::Split);
        // |0> -> -i |1>
        assert!((u[(2, 0)] - C::new(0.0, -1.0)).norm() < 1e-15);
        assert!(u[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn power_by_squaring() {
        let bath = SpinBath::five_proton_cluster(1.0).subset(&["H2".into()]).unwrap();
        let model = SystemModel::new(&bath);
        let p = pulse_propagator(&model, &PulseDrive::Instantaneous, 0.0, Stepper::Split);
        let b = block_propagator(&model, &p, 305e-9, 0.0, &crate::sequence::XY8_PHASES);
        let mut naive = identity(4);
        for _ in 0..13 {
            naive = &b * naive;
        }
        assert!(diff(&matrix_power(&b, 13), &naive) < 1e-12);
        assert!(diff(&matrix_power(&b, 0), &identity(4)) == 0.0);
    }

    #[test]
    fn sigma_x_of_identity_is_one() {
        assert!((sigma_x_after(&identity(8)) - 1.0).abs() < 1e-15);
        let mut flip = identity(4);
        apply_electron(&mut flip, &drive_rotation(PI, 0.5 * PI));
        // Y pi pulse maps |+> to -|+> up to phase: <sigma_x> = -1
        assert!((sigma_x_after(&flip) + 1.0).abs() < 1e-15);
    }
}
