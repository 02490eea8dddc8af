use std::f64::consts::PI;
use std::fmt::Write as _;

use super::{ExtendedPulseSpec, FilterCoefficient, PulseError};
use crate::interp::{cumulative_integral, derivative_at_nodes, lagrange_derivative, lagrange_value, stencil};

/// Overshoot of |F| above 1 that is clamped silently (Gaussian tails at the
/// window edges sit around 1e-12).
const BOUND_TOL: f64 = 1e-9;
const EDGE_TOL: f64 = 5e-15;
const REFINE_TOL: f64 = 1e-8;
const MAX_REFINE: usize = 48;

/// The three pulse families sharing the same period layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseShape {
    Modulated(ExtendedPulseSpec),
    /// Constant Rabi frequency `pi / t_pi`.
    TopHat { period: f64, t_pi: f64 },
    /// Ideal zero-length pulses.
    Instantaneous { period: f64 },
}

impl PulseShape {
    pub fn top_hat(period: f64, t_pi: f64) -> Result<Self, PulseError> {
        if !(period > 0.0 && t_pi > 0.0 && t_pi < 0.5 * period) {
            return Err(PulseError::InvalidSpec(format!(
                "need 0 < t_pi < T/2, got t_pi = {t_pi:e} s with T = {period:e} s"
            )));
        }
        Ok(PulseShape::TopHat { period, t_pi })
    }

    pub fn instantaneous(period: f64) -> Result<Self, PulseError> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(PulseError::InvalidSpec(format!("period must be positive, got {period}")));
        }
        Ok(PulseShape::Instantaneous { period })
    }

    pub fn period(&self) -> f64 {
        match self {
            PulseShape::Modulated(s) => s.period,
            PulseShape::TopHat { period, .. } | PulseShape::Instantaneous { period } => *period,
        }
    }

    pub fn t_pi(&self) -> f64 {
        match self {
            PulseShape::Modulated(s) => s.t_pi,
            PulseShape::TopHat { t_pi, .. } => *t_pi,
            PulseShape::Instantaneous { .. } => 0.0,
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            PulseShape::Modulated(_) => "modulated",
            PulseShape::TopHat { .. } => "top-hat",
            PulseShape::Instantaneous { .. } => "instantaneous",
        }
    }

    /// Same family rebuilt for a new period, keeping `t_pi * l / T` and
    /// `c / t_pi` fixed.
    pub fn rescaled(&self, period: f64) -> Result<Self, PulseError> {
        let r = period / self.period();
        match self {
            PulseShape::Modulated(s) => {
                let mut spec = ExtendedPulseSpec::new(s.harmonic, period, s.t_pi * r, s.width * r)?;
                // a1 depends only on the ratios, so it carries over
                spec.a1 = s.a1;
                Ok(PulseShape::Modulated(spec))
            }
            PulseShape::TopHat { t_pi, .. } => PulseShape::top_hat(period, t_pi * r),
            PulseShape::Instantaneous { .. } => PulseShape::instantaneous(period),
        }
    }

    pub fn windows(&self) -> [PulseWindow; 2] {
        let t = self.period();
        let tp = self.t_pi();
        let tm = 0.25 * (t - 2.0 * tp);
        [
            PulseWindow {
                start: tm,
                end: tm + tp,
                sign: 1.0,
            },
            PulseWindow {
                start: 3.0 * tm + tp,
                end: 3.0 * tm + 2.0 * tp,
                sign: -1.0,
            },
        ]
    }

    /// `arccos(sign F)` at `t` inside `win`.
    pub fn window_theta(&self, win: &PulseWindow, t: f64) -> f64 {
        let offset = win.start - 0.25 * (self.period() - 2.0 * self.t_pi());
        match self {
            PulseShape::Modulated(s) => s.first_pulse_theta(t - offset),
            PulseShape::TopHat { .. } => PI * (t - win.start) / self.t_pi(),
            PulseShape::Instantaneous { .. } => (win.sign * self.value(t)).clamp(-1.0, 1.0).acos(),
        }
    }

    /// F(t), evaluated in closed form.
    pub fn value(&self, t: f64) -> f64 {
        match self {
            PulseShape::Modulated(s) => s.value(t),
            PulseShape::TopHat { period, t_pi } => {
                let mut s = ExtendedPulseSpec::new(1, *period, *t_pi, *t_pi).expect("validated top-hat");
                s.a1 = Some(0.0);
                s.value(t)
            }
            PulseShape::Instantaneous { period } => {
                let x = t.rem_euclid(*period) / period;
                if (0.25..0.75).contains(&x) {
                    -1.0
                } else {
                    1.0
                }
            }
        }
    }
}

/// One intrapulse interval; `sign` is F at its start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseWindow {
    pub start: f64,
    pub end: f64,
    pub sign: f64,
}

impl PulseWindow {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }
}

/// Rotation angle and Rabi frequency on the nodes of one window: the exact
/// edges, the grid samples strictly inside, and midpoints added where the
/// angle bends too sharply for the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowProfile {
    pub window: PulseWindow,
    pub times: Vec<f64>,
    /// arccos(sign * F), running from 0 to pi.
    pub theta: Vec<f64>,
    /// Signed Rabi frequency, rad/s.
    pub rabi: Vec<f64>,
    /// Integral of the Rabi frequency over the window.
    pub area: f64,
    pub sign_change: bool,
    /// sup |cos(int Omega) - sign * F| over the nodes.
    pub round_trip_error: f64,
}

impl WindowProfile {
    fn nearest(&self, t: f64) -> usize {
        match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => i,
            Err(i) => {
                if i == 0 {
                    0
                } else if i >= self.times.len() {
                    self.times.len() - 1
                } else if t - self.times[i - 1] < self.times[i] - t {
                    i - 1
                } else {
                    i
                }
            }
        }
    }

    /// Rabi frequency at an arbitrary time inside the window.
    pub fn rabi_at(&self, t: f64) -> f64 {
        let r = stencil(self.nearest(t), self.times.len(), 5);
        lagrange_derivative(t, &self.times[r.clone()], &self.theta[r])
    }

    /// Rotation angle at an arbitrary time inside the window.
    pub fn theta_at(&self, t: f64) -> f64 {
        let r = stencil(self.nearest(t), self.times.len(), 5);
        lagrange_value(t, &self.times[r.clone()], &self.theta[r])
    }

    pub fn peak_rabi(&self) -> f64 {
        self.rabi.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `(dt, Omega)` steps between consecutive nodes, with Omega chosen so
    /// each step rotates by exactly the node-to-node angle.
    pub fn drive_steps(&self) -> Vec<(f64, f64)> {
        self.times
            .windows(2)
            .zip(self.theta.windows(2))
            .map(|(t, th)| {
                let dt = t[1] - t[0];
                (dt, (th[1] - th[0]) / dt)
            })
            .collect()
    }
}

/// F(t) sampled on `n + 1` uniform points over one period.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationWaveform {
    pub shape: PulseShape,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub rabi: Option<Vec<f64>>,
    pub windows: Vec<PulseWindow>,
    pub profiles: Vec<WindowProfile>,
}

impl ModulationWaveform {
    pub fn period(&self) -> f64 {
        self.shape.period()
    }

    pub fn spacing(&self) -> f64 {
        self.period() / (self.times.len() - 1) as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Tabular export: time (ns), F, Omega/2pi (MHz), in_pulse flag.
    pub fn export_table(&self) -> String {
        let mut out = String::new();
        match &self.shape {
            PulseShape::Modulated(s) => {
                let _ = writeln!(
                    out,
                    "# family modulated l={} T_ns={} t_pi_ns={} c_ns={} a1={} q_max={}",
                    s.harmonic,
                    s.period * 1e9,
                    s.t_pi * 1e9,
                    s.width * 1e9,
                    s.a1.unwrap_or(f64::NAN),
                    s.q_max
                );
            }
            PulseShape::TopHat { period, t_pi } => {
                let _ = writeln!(out, "# family top-hat T_ns={} t_pi_ns={}", period * 1e9, t_pi * 1e9);
            }
            PulseShape::Instantaneous { period } => {
                let _ = writeln!(out, "# family instantaneous T_ns={}", period * 1e9);
            }
        }
        let _ = writeln!(out, "time_ns\tF\trabi_over_2pi_MHz\tin_pulse");
        for (i, (&t, &f)) in self.times.iter().zip(&self.values).enumerate() {
            let w = self.rabi.as_ref().map_or(0.0, |r| r[i]) / (2.0 * PI) * 1e-6;
            let inside = self.windows.iter().any(|win| win.duration() > 0.0 && win.contains(t));
            let _ = writeln!(out, "{:.6}\t{:.12}\t{:.9}\t{}", t * 1e9, f, w, u8::from(inside));
        }
        out
    }
}

fn check_samples(required: usize, got: usize) -> Result<(), PulseError> {
    if got < required {
        return Err(PulseError::InsufficientSamples { required, got });
    }
    Ok(())
}

fn sample(shape: PulseShape, n: usize) -> Result<ModulationWaveform, PulseError> {
    let period = shape.period();
    let h = period / n as f64;
    let times: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let mut values = Vec::with_capacity(n + 1);
    for &t in &times {
        let v = shape.value(t);
        let over = v.abs() - 1.0;
        if over > BOUND_TOL {
            return Err(PulseError::BoundViolation { overshoot: over, time: t });
        }
        values.push(v.clamp(-1.0, 1.0));
    }
    let windows = shape.windows().into_iter().filter(|w| w.duration() > 0.0).collect();
    Ok(ModulationWaveform {
        shape,
        times,
        values,
        rabi: None,
        windows,
        profiles: Vec::new(),
    })
}

/// Samples a solved modulated pulse over one period with
/// `samples_per_period` intervals (at least `200 l`).
pub fn synthesize_modulation(
    spec: &ExtendedPulseSpec,
    samples_per_period: usize,
) -> Result<ModulationWaveform, PulseError> {
    if spec.a1.is_none() {
        return Err(PulseError::NotSolved);
    }
    check_samples(200 * spec.harmonic as usize, samples_per_period)?;
    // falling short of +-1 at an edge makes theta jump by sqrt(2 gap)
    for (time, edge) in [(spec.t_m(), 1.0), (spec.t_m() + spec.t_pi, -1.0)] {
        let gap = 1.0 - edge * spec.first_pulse_value(time);
        if gap > EDGE_TOL || -gap > BOUND_TOL {
            return Err(PulseError::EdgeMismatch { gap: gap.abs(), time });
        }
    }
    sample(PulseShape::Modulated(*spec), samples_per_period)
}

/// Samples any pulse family. Top-hat and instantaneous shapes need at
/// least 2 intervals; the harmonic requirement applies only to modulated pulses.
pub fn synthesize_shape(shape: &PulseShape, samples_per_period: usize) -> Result<ModulationWaveform, PulseError> {
    match shape {
        PulseShape::Modulated(spec) => synthesize_modulation(spec, samples_per_period),
        _ => {
            check_samples(2, samples_per_period)?;
            sample(*shape, samples_per_period)
        }
    }
}

/// Nodes of one window: exact edges plus grid samples further than `h/4`
/// from either edge.
fn window_nodes(wave: &ModulationWaveform, win: &PulseWindow) -> (Vec<f64>, Vec<f64>) {
    let guard = 0.25 * wave.spacing();
    let mut ts = vec![win.start];
    let mut fs = vec![win.sign];
    for (&t, &f) in wave.times.iter().zip(&wave.values) {
        if t > win.start + guard && t < win.end - guard {
            ts.push(t);
            fs.push(f);
        }
    }
    ts.push(win.end);
    fs.push(-win.sign);
    (ts, fs)
}

/// Bisects node intervals until the cubic through neighbouring nodes
/// reproduces the exact angle at every midpoint within `REFINE_TOL`.
fn refine(wave: &ModulationWaveform, win: &PulseWindow, ts: &mut Vec<f64>, th: &mut Vec<f64>) {
    if ts.len() < 4 {
        return;
    }
    let floor = 1e-12 * win.duration();
    for _ in 0..MAX_REFINE {
        let mut nt = Vec::with_capacity(2 * ts.len());
        let mut nth = Vec::with_capacity(2 * ts.len());
        for i in 0..ts.len() - 1 {
            nt.push(ts[i]);
            nth.push(th[i]);
            let (a, b) = (ts[i], ts[i + 1]);
            if b - a <= floor {
                continue;
            }
            let m = 0.5 * (a + b);
            let start = i.saturating_sub(1).min(ts.len() - 4);
            let guess = lagrange_value(m, &ts[start..start + 4], &th[start..start + 4]);
            let exact = wave.shape.window_theta(win, m);
            if (guess - exact).abs() > REFINE_TOL {
                nt.push(m);
                nth.push(exact);
            }
        }
        nt.push(*ts.last().unwrap());
        nth.push(*th.last().unwrap());
        let done = nt.len() == ts.len();
        *ts = nt;
        *th = nth;
        if done {
            break;
        }
    }
}

fn profile(wave: &ModulationWaveform, win: &PulseWindow) -> Result<WindowProfile, PulseError> {
    let (mut ts, fs) = window_nodes(wave, win);
    let edge_zone = 0.01 * win.duration();
    let last = ts.len() - 1;
    let mut theta = Vec::with_capacity(ts.len());
    for (k, (&t, &f)) in ts.iter().zip(&fs).enumerate() {
        let u = win.sign * f;
        if k == 0 || k == last {
            theta.push(u.clamp(-1.0, 1.0).acos());
            continue;
        }
        if u.abs() >= 1.0 && t - win.start > edge_zone && win.end - t > edge_zone {
            return Err(PulseError::EdgeSingularity { time: t });
        }
        theta.push(wave.shape.window_theta(win, t));
    }
    refine(wave, win, &mut ts, &mut theta);
    let rabi = derivative_at_nodes(&ts, &theta);
    let integral = cumulative_integral(&ts, &rabi);
    let area = *integral.last().unwrap_or(&0.0);
    let round_trip_error = integral
        .iter()
        .zip(&ts)
        .map(|(th, &t)| (th.cos() - win.sign * wave.shape.value(t).clamp(-1.0, 1.0)).abs())
        .fold(0.0, f64::max);
    let sign_change = rabi.iter().any(|&w| w < 0.0) && rabi.iter().any(|&w| w > 0.0);
    Ok(WindowProfile {
        window: *win,
        times: ts,
        theta,
        rabi,
        area,
        sign_change,
        round_trip_error,
    })
}

/// Fills the Rabi samples: `Omega = d/dt arccos(sign * F)` inside each
/// window (fourth-order differences on the window nodes), zero elsewhere.
pub fn rabi_from_modulation(mut wave: ModulationWaveform) -> Result<ModulationWaveform, PulseError> {
    let mut profiles = Vec::with_capacity(wave.windows.len());
    for win in &wave.windows {
        profiles.push(profile(&wave, win)?);
    }
    let rabi = wave
        .times
        .iter()
        .map(|&t| {
            profiles
                .iter()
                .find(|p| p.window.contains(t))
                .map_or(0.0, |p| p.rabi_at(t))
        })
        .collect();
    wave.rabi = Some(rabi);
    wave.profiles = profiles;
    Ok(wave)
}

/// `f_n = 2/T int_0^T F(s) cos(n w_M s) ds`, integrated piecewise over the
/// smooth segments between window edges (so jumps of instantaneous pulses
/// land on segment boundaries). Each segment uses the grid samples plus the
/// exact edge values.
pub fn fourier_numeric(wave: &ModulationWaveform, n: u32) -> FilterCoefficient {
    let period = wave.period();
    let w = n as f64 * 2.0 * PI / period;
    let mut cuts = vec![0.0];
    for win in wave.shape.windows() {
        cuts.push(win.start);
        cuts.push(win.end);
    }
    cuts.push(period);
    let guard = 0.25 * wave.spacing();
    let mut total = 0.0;
    for seg in cuts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        if b - a <= 0.0 {
            continue;
        }
        let mid = 0.5 * (a + b);
        // limit of F from inside the segment; always +-1 at segment edges
        let edge = |t: f64| wave.shape.value(t + (mid - t) * 1e-9).signum();
        let mut ts = vec![a];
        let mut ys = vec![edge(a) * (w * a).cos()];
        for (&t, &f) in wave.times.iter().zip(&wave.values) {
            if t > a + guard && t < b - guard {
                ts.push(t);
                ys.push(f * (w * t).cos());
            }
        }
        ts.push(b);
        ys.push(edge(b) * (w * b).cos());
        total += *cumulative_integral(&ts, &ys).last().unwrap();
    }
    FilterCoefficient {
        harmonic: n,
        value: 2.0 / period * total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse_shape::{f_instantaneous, f_modulated, f_top_hat, intrapulse_residual};

    const T: f64 = 305.32e-9;

    fn reference_pulse(ratio: f64) -> ExtendedPulseSpec {
        ExtendedPulseSpec::from_ratios(13, T, ratio, 0.07).unwrap().solved().unwrap()
    }

    #[test]
    fn flat_values_and_sampling_requirement() {
        let spec = reference_pulse(6.0);
        let w = synthesize_modulation(&spec, 2600).unwrap();
        assert_eq!(w.values[0], 1.0);
        assert_eq!(w.values[1300], -1.0);
        assert!(w.max_abs() <= 1.0);
        assert!(matches!(
            synthesize_modulation(&spec, 2599),
            Err(PulseError::InsufficientSamples { .. })
        ));
        let unsolved = ExtendedPulseSpec::from_ratios(13, T, 6.0, 0.07).unwrap();
        assert!(matches!(synthesize_modulation(&unsolved, 2600), Err(PulseError::NotSolved)));
    }

    #[test]
    fn dark_waveform_coefficient() {
        let spec = reference_pulse(6.0);
        let w = synthesize_modulation(&spec, 5200).unwrap();
        let f = fourier_numeric(&w, 13).value;
        assert!((f - 0.097_94).abs() < 1e-5, "{f}");
        assert!((f - f_modulated(13, spec.t_pi, T).unwrap().value).abs() < 1e-6);
        assert!(fourier_numeric(&w, 12).value.abs() < 1e-6);
        assert!(fourier_numeric(&w, 26).value.abs() < 1e-6);
    }

    #[test]
    fn square_wave_and_top_hat_coefficients() {
        let w = synthesize_shape(&PulseShape::instantaneous(T).unwrap(), 2600).unwrap();
        assert!((fourier_numeric(&w, 13).value - f_instantaneous(13).value).abs() < 1e-6);
        for ratio in [0.5, 1.0, 3.3] {
            let shape = PulseShape::top_hat(T, ratio * T / 13.0).unwrap();
            let w = synthesize_shape(&shape, 2600).unwrap();
            let expect = f_top_hat(13, ratio * T / 13.0, T).value;
            assert!((fourier_numeric(&w, 13).value - expect).abs() < 1e-6, "ratio {ratio}");
        }
    }

    #[test]
    fn rabi_of_plain_ramp_is_constant() {
        let t_pi = 2.0 * T / 13.0;
        let shape = PulseShape::top_hat(T, t_pi).unwrap();
        let w = rabi_from_modulation(synthesize_shape(&shape, 2600).unwrap()).unwrap();
        for p in &w.profiles {
            assert!((p.area - PI).abs() < 1e-9);
            for &r in &p.rabi {
                assert!((r - PI / t_pi).abs() < 1e-6 * PI / t_pi);
            }
            assert!(!p.sign_change);
        }
        let rabi = w.rabi.as_ref().unwrap();
        assert_eq!(rabi[0], 0.0);
        let steps = w.profiles[0].drive_steps();
        let area: f64 = steps.iter().map(|(dt, om)| dt * om).sum();
        assert!((area - PI).abs() < 1e-12);
    }

    #[test]
    fn reference_pulse_validity() {
        for ratio in [6.0, 6.391_826_552_030_607] {
            let spec = reference_pulse(ratio);
            assert!(intrapulse_residual(&spec).abs() <= 1e-10 * spec.t_pi);
            let w = rabi_from_modulation(synthesize_modulation(&spec, 2600).unwrap()).unwrap();
            assert_eq!(w.profiles.len(), 2);
            for p in &w.profiles {
                assert!((p.area - PI).abs() < 1e-6, "area {}", p.area);
                assert!(p.round_trip_error < 1e-5, "rt {}", p.round_trip_error);
            }
            // both windows carry the same rotation profile
            let (a, b) = (&w.profiles[0], &w.profiles[1]);
            assert_eq!(a.theta.len(), b.theta.len());
        }
        let w = rabi_from_modulation(synthesize_modulation(&reference_pulse(6.0), 2600).unwrap()).unwrap();
        assert!(w.profiles[0].sign_change);
        let peak = w.profiles[0].peak_rabi() / (2.0 * PI * 1e6);
        assert!(peak > 20.0 && peak < 40.0, "{peak}");
    }

    #[test]
    fn edge_gap_and_sharp_tips() {
        // short pulse: the envelope is still open at the edges
        let spec = reference_pulse(0.5);
        assert!(matches!(synthesize_modulation(&spec, 2600), Err(PulseError::EdgeMismatch { .. })));
        // F hugs +-1 near the edges, where plain arccos loses half the digits
        let spec = ExtendedPulseSpec::from_ratios(5, 1e-6, 1.4273, 0.0514).unwrap().solved().unwrap();
        let w = rabi_from_modulation(synthesize_modulation(&spec, 1000).unwrap()).unwrap();
        let p = &w.profiles[0];
        assert!(p.sign_change);
        assert!((p.area - PI).abs() < 1e-6, "area {}", p.area);
        assert!(p.round_trip_error < 1e-5, "rt {}", p.round_trip_error);
        assert!(p.times.len() > 251);
    }

    #[test]
    fn rescaling_keeps_ratios() {
        let spec = reference_pulse(6.0);
        let s = PulseShape::Modulated(spec).rescaled(1.01 * T).unwrap();
        let w = synthesize_shape(&s, 2600).unwrap();
        assert!((fourier_numeric(&w, 13).value - 0.097_94).abs() < 1e-5);
    }

    #[test]
    fn export_has_header_and_rows() {
        let w = rabi_from_modulation(synthesize_modulation(&reference_pulse(6.0), 2600).unwrap()).unwrap();
        let text = w.export_table();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# family modulated l=13"));
        assert_eq!(lines.len(), 2 + 2601);
        assert!(lines[2].ends_with("\t0"));
    }
}
