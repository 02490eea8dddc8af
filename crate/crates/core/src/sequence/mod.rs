//! XY-8 schedules, resonance periods and rotating-wave validity margins.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use thiserror::Error;

use crate::pulse_shape::{FilterCoefficient, PulseShape};
use crate::spin_model::{SpinBath, SpinModelError};

/// XYXYYXYX.
pub const XY8_PHASES: [f64; 8] = [0.0, FRAC_PI_2, 0.0, FRAC_PI_2, FRAC_PI_2, 0.0, FRAC_PI_2, 0.0];
pub const ALL_X_PHASES: [f64; 8] = [0.0; 8];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SequenceError {
    #[error("pulses overlap: t_pi = {t_pi:e} s is not below T/2 = {half_period:e} s")]
    Overlap { t_pi: f64, half_period: f64 },
    #[error("need at least one repetition")]
    NoRepetitions,
    #[error("pulse shape has period {shape:e} s and t_pi {shape_t_pi:e} s, schedule asks for {period:e} s and {t_pi:e} s")]
    ShapeMismatch {
        shape: f64,
        shape_t_pi: f64,
        period: f64,
        t_pi: f64,
    },
    #[error("unknown nucleus {0}")]
    UnknownNucleus(String),
    #[error("no filter coefficient supplied for harmonic {0}")]
    MissingCoefficient(u32),
    #[error(transparent)]
    Spin(#[from] SpinModelError),
}

/// `T = 2 pi l / omega_k`, so that `l w_M = omega_k`.
pub fn resonance_period(l: u32, omega_k: f64) -> f64 {
    2.0 * PI * l as f64 / omega_k
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduledPulse {
    pub index: usize,
    pub center: f64,
    pub t_pi: f64,
    pub phase: f64,
}

impl ScheduledPulse {
    pub fn start(&self) -> f64 {
        self.center - 0.5 * self.t_pi
    }

    pub fn end(&self) -> f64 {
        self.center + 0.5 * self.t_pi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    pub period: f64,
    pub shape: PulseShape,
    pub block_phases: [f64; 8],
    pub repetitions: usize,
    pub pulses: Vec<ScheduledPulse>,
    pub total_time: f64,
}

pub fn build_xy8(period: f64, t_pi: f64, reps: usize, shape: &PulseShape) -> Result<PulseSchedule, SequenceError> {
    build_with_phases(period, t_pi, reps, shape, XY8_PHASES)
}

/// Same layout as XY-8 with an arbitrary 8-pulse phase pattern.
pub fn build_with_phases(
    period: f64,
    t_pi: f64,
    reps: usize,
    shape: &PulseShape,
    phases: [f64; 8],
) -> Result<PulseSchedule, SequenceError> {
    if t_pi >= 0.5 * period {
        return Err(SequenceError::Overlap {
            t_pi,
            half_period: 0.5 * period,
        });
    }
    if reps == 0 {
        return Err(SequenceError::NoRepetitions);
    }
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * period;
    if !close(shape.period(), period) || !close(shape.t_pi(), t_pi) {
        return Err(SequenceError::ShapeMismatch {
            shape: shape.period(),
            shape_t_pi: shape.t_pi(),
            period,
            t_pi,
        });
    }
    let pulses = (0..8 * reps)
        .map(|k| ScheduledPulse {
            index: k,
            center: 0.25 * period + 0.5 * period * k as f64,
            t_pi,
            phase: phases[k % 8],
        })
        .collect();
    Ok(PulseSchedule {
        period,
        shape: *shape,
        block_phases: phases,
        repetitions: reps,
        pulses,
        total_time: 4.0 * period * reps as f64,
    })
}

impl PulseSchedule {
    pub fn omega_m(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// Modulation function of the whole sequence.
    pub fn modulation_at(&self, t: f64) -> f64 {
        self.shape.value(t)
    }

    /// Tabular export: index, center (ns), t_pi (ns), phase (rad).
    pub fn export_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# period_ns={} repetitions={} total_time_ns={} family={}",
            self.period * 1e9,
            self.repetitions,
            self.total_time * 1e9,
            self.shape.family()
        );
        let _ = writeln!(out, "index\tcenter_ns\tt_pi_ns\tphase_rad");
        for p in &self.pulses {
            let _ = writeln!(out, "{}\t{:.6}\t{:.6}\t{:.15}", p.index, p.center * 1e9, p.t_pi * 1e9, p.phase);
        }
        out
    }
}

/// What the scan is tuned to: a nucleus of the bath or a bare frequency.
#[derive(Debug, Clone, PartialEq)]
pub enum RwaTarget {
    Nucleus(String),
    Frequency(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwaOptions {
    /// Entries with ratio below this are flagged.
    pub threshold: f64,
    /// Scan window in w_M, rad/s. Defaults to the target position when `None`.
    pub window: Option<(f64, f64)>,
}

impl Default for RwaOptions {
    fn default() -> Self {
        Self {
            threshold: 10.0,
            window: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginKind {
    /// Another nucleus at the addressed harmonic.
    Spectator,
    /// Any nucleus at a harmonic other than the addressed one.
    Detuned,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginEntry {
    pub nucleus: String,
    pub harmonic: u32,
    pub kind: MarginKind,
    /// rad/s
    pub detuning: f64,
    /// |f_n| A^x / 4, rad/s
    pub coupling: f64,
    pub ratio: f64,
    pub flagged: bool,
}

/// A nucleus whose harmonic-n resonance `omega_j / n` falls inside the
/// scan window of the addressed harmonic.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapFlag {
    pub nucleus: String,
    pub harmonic: u32,
    /// w_M at which it resonates, rad/s.
    pub omega_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RwaReport {
    pub harmonic: u32,
    pub target_frequency: f64,
    pub omega_m: f64,
    pub window: (f64, f64),
    pub threshold: f64,
    pub entries: Vec<MarginEntry>,
    pub overlaps: Vec<OverlapFlag>,
}

impl RwaReport {
    pub fn flagged(&self) -> impl Iterator<Item = &MarginEntry> {
        self.entries.iter().filter(|e| e.flagged)
    }

    pub fn has_overlap(&self) -> bool {
        !self.overlaps.is_empty()
    }

    /// Overlaps coming from one particular harmonic.
    pub fn overlaps_with(&self, n: u32) -> usize {
        self.overlaps.iter().filter(|o| o.harmonic == n).count()
    }

    /// Columns: nucleus, n, detuning_Hz, coupling_Hz, ratio, flag.
    pub fn export_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# harmonic={} target_MHz={} omega_M_over_2pi_kHz={} window_kHz=[{}, {}] threshold={}",
            self.harmonic,
            self.target_frequency / (2.0 * PI) * 1e-6,
            self.omega_m / (2.0 * PI) * 1e-3,
            self.window.0 / (2.0 * PI) * 1e-3,
            self.window.1 / (2.0 * PI) * 1e-3,
            self.threshold
        );
        let _ = writeln!(out, "nucleus\tn\tdetuning_Hz\tcoupling_Hz\tratio\tflag");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{}\t{}\t{:.6}\t{:.6}\t{:.6e}\t{}",
                e.nucleus,
                e.harmonic,
                e.detuning / (2.0 * PI),
                e.coupling / (2.0 * PI),
                e.ratio,
                u8::from(e.flagged)
            );
        }
        let _ = writeln!(out, "# overlaps {}", self.overlaps.len());
        for o in &self.overlaps {
            let _ = writeln!(
                out,
                "# overlap nucleus={} n={} omega_M_over_2pi_kHz={:.6}",
                o.nucleus,
                o.harmonic,
                o.omega_m / (2.0 * PI) * 1e-3
            );
        }
        out
    }
}

fn margin(detuning: f64, coupling: f64) -> f64 {
    if coupling == 0.0 {
        f64::INFINITY
    } else {
        detuning / coupling
    }
}

/// Margins of the rotating-wave conditions for addressing `target` at
/// harmonic `l`:
///
/// * spectators: `|w_j - w_k| / (|f_l| A_j^x / 4)`
/// * other harmonics: `|w_j - n w_M| / (|f_n| A_j^x / 4)` for `n != l`
///
/// `coeffs` must hold every harmonic `1..=n_max`.
pub fn rwa_margins(
    bath: &SpinBath,
    target: &RwaTarget,
    l: u32,
    coeffs: &[FilterCoefficient],
    n_max: u32,
    options: RwaOptions,
) -> Result<RwaReport, SequenceError> {
    let coeff = |n: u32| {
        coeffs
            .iter()
            .find(|c| c.harmonic == n)
            .map(|c| c.value.abs())
            .ok_or(SequenceError::MissingCoefficient(n))
    };
    let (target_label, omega_k) = match target {
        RwaTarget::Nucleus(label) => {
            let n = bath
                .nucleus(label)
                .ok_or_else(|| SequenceError::UnknownNucleus(label.clone()))?;
            (Some(label.as_str()), bath.hyperfine_components(n)?.omega)
        }
        RwaTarget::Frequency(w) => (None, *w),
    };
    let omega_m = omega_k / l as f64;
    let window = options.window.unwrap_or((omega_m, omega_m));
    let f_l = coeff(l)?;

    let mut entries = Vec::new();
    let mut overlaps = Vec::new();
    for nucleus in &bath.nuclei {
        let frame = bath.hyperfine_components(nucleus)?;
        let is_target = target_label == Some(nucleus.label.as_str());
        if !is_target {
            let detuning = (frame.omega - omega_k).abs();
            let coupling = f_l * frame.ax / 4.0;
            let ratio = margin(detuning, coupling);
            entries.push(MarginEntry {
                nucleus: nucleus.label.clone(),
                harmonic: l,
                kind: MarginKind::Spectator,
                detuning,
                coupling,
                ratio,
                flagged: ratio < options.threshold,
            });
        }
        for n in (1..=n_max).filter(|&n| n != l) {
            let f_n = coeff(n)?;
            let detuning = (frame.omega - n as f64 * omega_m).abs();
            let coupling = f_n * frame.ax / 4.0;
            let ratio = margin(detuning, coupling);
            entries.push(MarginEntry {
                nucleus: nucleus.label.clone(),
                harmonic: n,
                kind: MarginKind::Detuned,
                detuning,
                coupling,
                ratio,
                flagged: ratio < options.threshold,
            });
            let position = frame.omega / n as f64;
            if f_n > 0.0 && position >= window.0 && position <= window.1 {
                overlaps.push(OverlapFlag {
                    nucleus: nucleus.label.clone(),
                    harmonic: n,
                    omega_m: position,
                });
            }
        }
    }
    Ok(RwaReport {
        harmonic: l,
        target_frequency: omega_k,
        omega_m,
        window,
        threshold: options.threshold,
        entries,
        overlaps,
    })
}
