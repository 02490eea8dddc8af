//! Propagation of the electron and nuclear spins under the rotating-frame
//! Hamiltonian with a scheduled drive, and the resulting coherence spectra.

mod operators;
mod propagate;
mod spectrum;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

pub use operators::{
    apply_electron, apply_free, drive_rotation, expm_hermitian, precession, rephase, unitarity_error,
    Mat2, SystemModel, C,
};
pub use propagate::{
    block_from_pulses, block_propagator, drive_steps, matrix_power, pulse_propagator, sigma_x_after,
    PulseDrive, Stepper,
};
pub use spectrum::{product_vs_exact_report, scan, Annotation, DeviationReport, Dip, PulseFamily, ScanSpec, SpectrumResult};

use crate::pulse_shape::{rabi_from_modulation, synthesize_shape, PulseError, PulseShape};
use crate::sequence::{PulseSchedule, SequenceError};
use crate::spin_model::{SpinBath, SpinModelError};

/// Largest bath handled in exact mode.
pub const MAX_EXACT_NUCLEI: usize = 12;
/// Fewest integration steps accepted inside one pulse window.
pub const MIN_PULSE_STEPS: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("pulse window resolved by only {steps} steps, need at least {required}")]
    StepTooLarge { steps: usize, required: usize },
    #[error("exact mode supports at most {max} nuclei, got {got}")]
    TooManyNuclei { got: usize, max: usize },
    #[error("state dimension {got} does not match the bath ({expected})")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("scan grid is empty")]
    EmptyGrid,
    #[error("scan grid must be sorted ascending and positive")]
    UnsortedGrid,
    #[error("non-finite signal at w_M = {omega_m:e} rad/s")]
    NonFinite { omega_m: f64 },
    #[error(transparent)]
    Pulse(#[from] PulseError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Spin(#[from] SpinModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Full electron + cluster Hilbert space.
    Exact,
    /// Product of electron + single-nucleus signals.
    ProductRule,
}

/// Per-pulse Gaussian amplitude noise on top of the static error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiNoise {
    pub sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub mode: Mode,
    pub stepper: Stepper,
    /// Upper bound on the intrapulse step, seconds. `None` uses the
    /// waveform sample spacing.
    pub max_step: Option<f64>,
    /// Integration steps per waveform sample interval.
    pub substeps: usize,
    /// Samples per modulation period; `None` picks `200 l` for modulated
    /// pulses and 4096 otherwise.
    pub samples_per_period: Option<usize>,
    /// Static relative Rabi amplitude error.
    pub rabi_error: f64,
    pub rabi_noise: Option<RabiNoise>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Exact,
            stepper: Stepper::Auto,
            max_step: None,
            substeps: 1,
            samples_per_period: None,
            rabi_error: 0.0,
            rabi_noise: None,
        }
    }
}

impl SimulationConfig {
    pub fn samples_for(&self, shape: &PulseShape) -> usize {
        self.samples_per_period.unwrap_or(match shape {
            PulseShape::Modulated(s) => 200 * s.harmonic as usize,
            _ => 4096,
        })
    }
}

/// `<sigma_x> = cos(f_l A^x t / 4)`.
pub fn ideal_signal(f_l: f64, ax: f64, t: f64) -> f64 {
    (f_l * ax * t / 4.0).cos()
}

/// Density matrix over electron (x) nuclei, electron slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    pub n_nuclei: usize,
    pub rho: DMatrix<C>,
}

impl QuantumState {
    /// `|+><+| (x) 1/2^N`.
    pub fn initial(n_nuclei: usize) -> Self {
        let half = 1usize << n_nuclei;
        let d = 2 * half;
        let v = C::new(0.5 / half as f64, 0.0);
        let mut rho = DMatrix::from_element(d, d, C::new(0.0, 0.0));
        for k in 0..half {
            rho[(k, k)] = v;
            rho[(k + half, k + half)] = v;
            rho[(k, k + half)] = v;
            rho[(k + half, k)] = v;
        }
        Self { n_nuclei, rho }
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace(&self) -> C {
        self.rho.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.rho + self.rho.adjoint()) * C::new(0.5, 0.0);
        h.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn expect_sigma_x(&self) -> f64 {
        let half = self.dim() / 2;
        (0..half).map(|k| 2.0 * self.rho[(k + half, k)].re).sum()
    }

    pub fn expect_sigma_z(&self) -> f64 {
        let half = self.dim() / 2;
        (0..half)
            .map(|k| self.rho[(k + half, k + half)].re - self.rho[(k, k)].re)
            .sum()
    }

    pub fn transformed(&self, u: &DMatrix<C>) -> Self {
        Self {
            n_nuclei: self.n_nuclei,
            rho: u * &self.rho * u.adjoint(),
        }
    }
}

/// Drive of one pulse for `shape`, or `None`-like instantaneous marker.
pub fn pulse_drive(shape: &PulseShape, config: &SimulationConfig) -> Result<PulseDrive, DynamicsError> {
    if let PulseShape::Instantaneous { .. } = shape {
        return Ok(PulseDrive::Instantaneous);
    }
    let wave = rabi_from_modulation(synthesize_shape(shape, config.samples_for(shape))?)?;
    let steps = drive_steps(&wave.profiles[0], config.substeps, config.max_step);
    if steps.len() < MIN_PULSE_STEPS {
        return Err(DynamicsError::StepTooLarge {
            steps: steps.len(),
            required: MIN_PULSE_STEPS,
        });
    }
    Ok(PulseDrive::Shaped(steps))
}

fn check_exact(model: &SystemModel) -> Result<(), DynamicsError> {
    if model.n_nuclei > MAX_EXACT_NUCLEI {
        return Err(DynamicsError::TooManyNuclei {
            got: model.n_nuclei,
            max: MAX_EXACT_NUCLEI,
        });
    }
    Ok(())
}

fn noise_factors(noise: &RabiNoise, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    (0..count)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            noise.sigma * z
        })
        .collect()
}

/// Propagator of the whole schedule on `model`.
fn schedule_propagator(
    model: &SystemModel,
    schedule: &PulseSchedule,
    drive: &PulseDrive,
    config: &SimulationConfig,
) -> DMatrix<C> {
    let t_pi = drive.duration();
    match &config.rabi_noise {
        None => {
            let p0 = pulse_propagator(model, drive, config.rabi_error, config.stepper);
            let block = block_propagator(model, &p0, schedule.period, t_pi, &schedule.block_phases);
            matrix_power(&block, schedule.repetitions)
        }
        Some(noise) => {
            let extra = noise_factors(noise, schedule.pulses.len());
            let mut u = propagate::identity_of(model);
            for (b, chunk) in schedule.pulses.chunks(8).enumerate() {
                let pulses: Vec<_> = chunk
                    .iter()
                    .enumerate()
                    .map(|(k, p)| {
                        let eps = config.rabi_error + extra[8 * b + k];
                        rephase(&pulse_propagator(model, drive, eps, config.stepper), p.phase)
                    })
                    .collect();
                u = block_from_pulses(model, &pulses, schedule.period, t_pi) * u;
            }
            u
        }
    }
}

/// Evolves `state` through the full schedule (exact cluster dynamics).
pub fn evolve(
    state: &QuantumState,
    schedule: &PulseSchedule,
    bath: &SpinBath,
    config: &SimulationConfig,
) -> Result<QuantumState, DynamicsError> {
    let model = SystemModel::new(bath);
    check_exact(&model)?;
    if state.dim() != model.dim() {
        return Err(DynamicsError::DimensionMismatch {
            got: state.dim(),
            expected: model.dim(),
        });
    }
    if schedule.repetitions == 0 {
        return Ok(state.clone());
    }
    let drive = pulse_drive(&schedule.shape, config)?;
    Ok(state.transformed(&schedule_propagator(&model, schedule, &drive, config)))
}

/// `<sigma_x>` at the end of every XY-8 block, honouring the configured mode.
pub fn evolve_trace(schedule: &PulseSchedule, bath: &SpinBath, config: &SimulationConfig) -> Result<Vec<(f64, f64)>, DynamicsError> {
    let model = SystemModel::new(bath);
    let drive = pulse_drive(&schedule.shape, config)?;
    let models: Vec<SystemModel> = match config.mode {
        Mode::Exact => {
            check_exact(&model)?;
            vec![model]
        }
        Mode::ProductRule => (0..model.n_nuclei).map(|j| model.single(j)).collect(),
    };
    let mut trace = vec![1.0; schedule.repetitions];
    let one_block = PulseSchedule {
        repetitions: 1,
        pulses: schedule.pulses.iter().take(8).copied().collect(),
        ..schedule.clone()
    };
    for m in &models {
        if config.rabi_noise.is_some() {
            // per-pulse noise breaks block periodicity
            let mut u = propagate::identity_of(m);
            let noise = config.rabi_noise.unwrap();
            let extra = noise_factors(&noise, schedule.pulses.len());
            let t_pi = drive.duration();
            for (b, chunk) in schedule.pulses.chunks(8).enumerate() {
                let pulses: Vec<_> = chunk
                    .iter()
                    .enumerate()
                    .map(|(k, p)| {
                        let eps = config.rabi_error + extra[8 * b + k];
                        rephase(&pulse_propagator(m, &drive, eps, config.stepper), p.phase)
                    })
                    .collect();
                u = block_from_pulses(m, &pulses, schedule.period, t_pi) * u;
                trace[b] *= sigma_x_after(&u);
            }
        } else {
            let block = schedule_propagator(m, &one_block, &drive, config);
            let mut u = propagate::identity_of(m);
            for v in trace.iter_mut() {
                u = &block * u;
                *v *= sigma_x_after(&u);
            }
        }
    }
    Ok(trace
        .into_iter()
        .enumerate()
        .map(|(b, v)| (4.0 * schedule.period * (b + 1) as f64, v))
        .collect())
}

/// Final `<sigma_x>` of a schedule, honouring the configured mode.
pub fn signal(schedule: &PulseSchedule, bath: &SpinBath, config: &SimulationConfig) -> Result<f64, DynamicsError> {
    let drive = pulse_drive(&schedule.shape, config)?;
    signal_with_drive(&SystemModel::new(bath), schedule, &drive, config)
}

pub(crate) fn signal_with_drive(
    model: &SystemModel,
    schedule: &PulseSchedule,
    drive: &PulseDrive,
    config: &SimulationConfig,
) -> Result<f64, DynamicsError> {
    if schedule.repetitions == 0 {
        return Ok(1.0);
    }
    match config.mode {
        Mode::Exact => {
            check_exact(model)?;
            Ok(sigma_x_after(&schedule_propagator(model, schedule, drive, config)))
        }
        Mode::ProductRule => Ok((0..model.n_nuclei)
            .map(|j| sigma_x_after(&schedule_propagator(&model.single(j), schedule, drive, config)))
            .product()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse_shape::{f_instantaneous, ExtendedPulseSpec};
    use crate::sequence::{build_xy8, resonance_period};
    use crate::spin_model::NuclearSpin;
    use std::f64::consts::PI;

    fn single_h3() -> SpinBath {
        SpinBath::five_proton_cluster(1.0).subset(&["H3".into()]).unwrap()
    }

    #[test]
    fn ideal_signal_values() {
        assert_eq!(ideal_signal(0.1, 1e4, 0.0), 1.0);
        assert!((ideal_signal(1.0, 4.0 * PI, 1.0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn closed_form_oracle_on_resonance() {
        let bath = single_h3();
        let frame = bath.hyperfine_components(&bath.nuclei[0]).unwrap();
        let t = resonance_period(13, frame.omega);
        let shape = PulseShape::instantaneous(t).unwrap();
        let schedule = build_xy8(t, 0.0, 400, &shape).unwrap();
        let trace = evolve_trace(&schedule, &bath, &SimulationConfig::default()).unwrap();
        let f = f_instantaneous(13).value;
        let worst = trace
            .iter()
            .map(|(time, v)| (v - ideal_signal(f, frame.ax, *time)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.02, "{worst}");
        let (_, last) = trace.last().unwrap();
        assert!(*last < 0.9);
    }

    #[test]
    fn off_resonance_stays_coherent() {
        let bath = single_h3();
        let frame = bath.hyperfine_components(&bath.nuclei[0]).unwrap();
        let f = f_instantaneous(13).value;
        // detuned by 50 coupling strengths
        let w = frame.omega + 50.0 * f * frame.ax / 4.0;
        let t = resonance_period(13, w);
        let schedule = build_xy8(t, 0.0, 400, &PulseShape::instantaneous(t).unwrap()).unwrap();
        let s = signal(&schedule, &bath, &SimulationConfig::default()).unwrap();
        assert!((1.0 - s).abs() < 0.05, "{s}");
    }

    #[test]
    fn evolve_preserves_state_properties() {
        let bath = SpinBath::five_proton_cluster(1.0).subset(&["H1".into(), "H2".into()]).unwrap();
        let t = resonance_period(13, 2.0 * PI * 42.577e6);
        let spec = ExtendedPulseSpec::from_ratios(13, t, 6.0, 0.07).unwrap().solved().unwrap();
        let shape = PulseShape::Modulated(spec);
        let schedule = build_xy8(t, spec.t_pi, 400, &shape).unwrap();
        let cfg = SimulationConfig {
            rabi_error: 0.01,
            ..Default::default()
        };
        let out = evolve(&QuantumState::initial(2), &schedule, &bath, &cfg).unwrap();
        assert!((out.trace() - C::new(1.0, 0.0)).norm() < 1e-8);
        assert!(out.hermiticity_error() < 1e-8);
        assert!(out.min_eigenvalue() > -1e-8);
        let direct = signal(&schedule, &bath, &cfg).unwrap();
        assert!((out.expect_sigma_x() - direct).abs() < 1e-10);
    }

    #[test]
    fn empty_schedule_leaves_state() {
        let bath = single_h3();
        let t = 300e-9;
        let mut schedule = build_xy8(t, 0.0, 1, &PulseShape::instantaneous(t).unwrap()).unwrap();
        schedule.repetitions = 0;
        schedule.pulses.clear();
        schedule.total_time = 0.0;
        let s0 = QuantumState::initial(1);
        assert_eq!(evolve(&s0, &schedule, &bath, &SimulationConfig::default()).unwrap(), s0);
        assert!(matches!(
            evolve(&QuantumState::initial(2), &schedule, &bath, &SimulationConfig::default()),
            Err(DynamicsError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn free_evolution_conserves_sigma_z() {
        let bath = SpinBath::five_proton_cluster(1.0);
        let model = SystemModel::new(&bath);
        let mut u = propagate::identity_of(&model);
        propagate::apply_free_evolution(&model, &mut u, 3.7e-6);
        let mut rho = QuantumState::initial(5);
        // tilt toward |1>
        rho.rho[(40, 40)] += C::new(0.01, 0.0);
        rho.rho[(8, 8)] -= C::new(0.01, 0.0);
        let before = rho.expect_sigma_z();
        assert!((rho.transformed(&u).expect_sigma_z() - before).abs() < 1e-14);
    }

    #[test]
    fn too_few_pulse_steps() {
        let t = 300e-9;
        let shape = PulseShape::top_hat(t, 0.005 * t).unwrap();
        let cfg = SimulationConfig {
            samples_per_period: Some(4000),
            ..Default::default()
        };
        assert!(matches!(pulse_drive(&shape, &cfg), Err(DynamicsError::StepTooLarge { .. })));
        let fine = SimulationConfig {
            max_step: Some(0.005 * t / 60.0),
            ..cfg
        };
        assert!(pulse_drive(&shape, &fine).unwrap().steps() >= MIN_PULSE_STEPS);
    }

    #[test]
    fn exact_mode_size_limit() {
        let nuclei = (0..13)
            .map(|i| NuclearSpin::proton_khz(format!("H{i}"), [1.0, 0.0, i as f64]))
            .collect();
        let bath = SpinBath::new(1.0, nuclei).unwrap();
        let t = 300e-9;
        let schedule = build_xy8(t, 0.0, 1, &PulseShape::instantaneous(t).unwrap()).unwrap();
        assert!(matches!(
            signal(&schedule, &bath, &SimulationConfig::default()),
            Err(DynamicsError::TooManyNuclei { .. })
        ));
        let product = SimulationConfig {
            mode: Mode::ProductRule,
            ..Default::default()
        };
        assert!(signal(&schedule, &bath, &product).unwrap().abs() <= 1.0);
    }

    #[test]
    fn per_pulse_noise_is_seeded() {
        let bath = single_h3();
        let t = 300e-9;
        let schedule = build_xy8(t, 0.0, 20, &PulseShape::instantaneous(t).unwrap()).unwrap();
        let cfg = SimulationConfig {
            rabi_noise: Some(RabiNoise { sigma: 0.02, seed: 5 }),
            ..Default::default()
        };
        let a = signal(&schedule, &bath, &cfg).unwrap();
        let b = signal(&schedule, &bath, &cfg).unwrap();
        assert_eq!(a, b);
        let trace = evolve_trace(&schedule, &bath, &cfg).unwrap();
        assert!((trace.last().unwrap().1 - a).abs() < 1e-12);
    }
}
