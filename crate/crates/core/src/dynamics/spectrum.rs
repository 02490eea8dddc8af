//! Coherence spectra over a grid of modulation frequencies.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;

use super::{pulse_drive, signal_with_drive, DynamicsError, Mode, SimulationConfig, SystemModel};
use crate::dynamics::ideal_signal;
use crate::pulse_shape::{f_instantaneous, f_modulated, f_top_hat, ExtendedPulseSpec, PulseShape};
use crate::sequence::build_with_phases;
use crate::spin_model::SpinBath;

/// Pulse family of a scan, with lengths fixed in units of `T/l` so the
/// addressed coefficient stays constant across the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseFamily {
    /// `t_pi = t_pi_units T/l`, Gaussian width `c = width * t_pi`.
    Modulated { t_pi_units: f64, width: f64 },
    TopHat { t_pi_units: f64 },
    Instantaneous,
}

impl PulseFamily {
    pub fn label(&self) -> &'static str {
        match self {
            PulseFamily::Modulated { .. } => "modulated",
            PulseFamily::TopHat { .. } => "top-hat",
            PulseFamily::Instantaneous => "instantaneous",
        }
    }

    /// Addressed filter coefficient at harmonic `l`.
    pub fn coefficient(&self, l: u32) -> Result<f64, DynamicsError> {
        // every quantity is scale free; evaluate at T = l
        let t = l as f64;
        Ok(match self {
            PulseFamily::Modulated { t_pi_units, .. } => f_modulated(l, *t_pi_units, t)?.value,
            PulseFamily::TopHat { t_pi_units } => f_top_hat(l, *t_pi_units, t).value,
            PulseFamily::Instantaneous => f_instantaneous(l).value,
        })
    }

    /// Builds the pulse shape for period `period`; `a1` is reused when given.
    pub fn shape(&self, l: u32, period: f64, a1: Option<f64>) -> Result<PulseShape, DynamicsError> {
        let unit = period / l as f64;
        Ok(match self {
            PulseFamily::Modulated { t_pi_units, width } => {
                let mut spec = ExtendedPulseSpec::from_ratios(l, period, *t_pi_units, *width)?;
                spec = match a1 {
                    Some(a) => ExtendedPulseSpec { a1: Some(a), ..spec },
                    None => spec.solved()?,
                };
                PulseShape::Modulated(spec)
            }
            PulseFamily::TopHat { t_pi_units } => PulseShape::top_hat(period, t_pi_units * unit)?,
            PulseFamily::Instantaneous => PulseShape::instantaneous(period)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub harmonic: u32,
    /// Modulation angular frequencies w_M, rad/s, ascending.
    pub grid: Vec<f64>,
    pub family: PulseFamily,
    pub repetitions: usize,
    pub phases: [f64; 8],
}

impl ScanSpec {
    /// `points` evenly spaced w_M values between `lo` and `hi` (rad/s).
    pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
        if points == 1 {
            return vec![0.5 * (lo + hi)];
        }
        (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect()
    }
}

/// Predicted resonance of one nucleus.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub label: String,
    /// w_j / l, rad/s.
    pub omega_m: f64,
    /// Ideal single-nucleus signal at the resonance.
    pub predicted_signal: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dip {
    pub index: usize,
    pub omega_m: f64,
    pub signal: f64,
    pub prominence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub harmonic: u32,
    pub family: PulseFamily,
    pub repetitions: usize,
    pub coefficient: f64,
    pub omega_m: Vec<f64>,
    pub signal: Vec<f64>,
    pub annotations: Vec<Annotation>,
}

impl SpectrumResult {
    pub fn min_signal(&self) -> f64 {
        self.signal.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `1 - min <sigma_x>`.
    pub fn max_contrast(&self) -> f64 {
        1.0 - self.min_signal()
    }

    /// Local minima whose prominence (depth below the lower of the two
    /// bounding maxima) is at least `min_prominence`.
    pub fn dips(&self, min_prominence: f64) -> Vec<Dip> {
        let s = &self.signal;
        let n = s.len();
        let mut out = Vec::new();
        for i in 0..n {
            let left_ok = i == 0 || s[i] < s[i - 1];
            let right_ok = i + 1 == n || s[i] <= s[i + 1];
            if !(left_ok && right_ok) || n < 3 || i == 0 || i + 1 == n {
                continue;
            }
            let mut left_max = s[i];
            for &v in s[..i].iter().rev() {
                if v < s[i] {
                    break;
                }
                left_max = left_max.max(v);
            }
            let mut right_max = s[i];
            for &v in &s[i + 1..] {
                if v < s[i] {
                    break;
                }
                right_max = right_max.max(v);
            }
            let prominence = left_max.min(right_max) - s[i];
            if prominence >= min_prominence {
                out.push(Dip {
                    index: i,
                    omega_m: self.omega_m[i],
                    signal: s[i],
                    prominence,
                });
            }
        }
        out
    }

    /// Columns omega_M_over_2pi_MHz and signal, then one row per predicted
    /// resonance.
    pub fn export_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# harmonic={} family={} repetitions={} f_l={}",
            self.harmonic,
            self.family.label(),
            self.repetitions,
            self.coefficient
        );
        let _ = writeln!(out, "omega_M_over_2pi_MHz\tsignal");
        for (w, s) in self.omega_m.iter().zip(&self.signal) {
            let _ = writeln!(out, "{:.12}\t{:.12}", w / (2.0 * PI) * 1e-6, s);
        }
        let _ = writeln!(out, "# resonance\tlabel\tomega_M_over_2pi_MHz\tpredicted_signal");
        for a in &self.annotations {
            let _ = writeln!(
                out,
                "resonance\t{}\t{:.12}\t{:.9}",
                a.label,
                a.omega_m / (2.0 * PI) * 1e-6,
                a.predicted_signal
            );
        }
        out
    }
}

fn check_grid(grid: &[f64]) -> Result<(), DynamicsError> {
    if grid.is_empty() {
        return Err(DynamicsError::EmptyGrid);
    }
    if grid.iter().any(|w| !(*w > 0.0)) || grid.windows(2).any(|p| p[1] < p[0]) {
        return Err(DynamicsError::UnsortedGrid);
    }
    Ok(())
}

/// Simulated `<sigma_x>` at the end of the sequence for every w_M in the
/// grid. Grid points run in parallel on the current rayon pool; results
/// stay in grid order.
pub fn scan(bath: &SpinBath, spec: &ScanSpec, config: &SimulationConfig) -> Result<SpectrumResult, DynamicsError> {
    check_grid(&spec.grid)?;
    let l = spec.harmonic;
    let model = SystemModel::new(bath);
    if config.mode == Mode::Exact && model.n_nuclei > super::MAX_EXACT_NUCLEI {
        return Err(DynamicsError::TooManyNuclei {
            got: model.n_nuclei,
            max: super::MAX_EXACT_NUCLEI,
        });
    }
    // a1 depends only on the ratios, solve it once
    let a1 = match spec.family.shape(l, 2.0 * PI / spec.grid[0], None)? {
        PulseShape::Modulated(s) => s.a1,
        _ => None,
    };
    let signal = spec
        .grid
        .par_iter()
        .map(|&w| {
            let period = 2.0 * PI / w;
            let shape = spec.family.shape(l, period, a1)?;
            let schedule = build_with_phases(period, shape.t_pi(), spec.repetitions, &shape, spec.phases)?;
            let drive = pulse_drive(&shape, config)?;
            let v = if model.n_nuclei == 0 {
                1.0
            } else {
                signal_with_drive(&model, &schedule, &drive, config)?
            };
            if !v.is_finite() {
                return Err(DynamicsError::NonFinite { omega_m: w });
            }
            Ok(v)
        })
        .collect::<Result<Vec<f64>, DynamicsError>>()?;

    let coefficient = spec.family.coefficient(l)?;
    let mut annotations = Vec::with_capacity(bath.nuclei.len());
    for n in &bath.nuclei {
        let frame = bath.hyperfine_components(n)?;
        let t_f = 4.0 * spec.repetitions as f64 * 2.0 * PI * l as f64 / frame.omega;
        annotations.push(Annotation {
            label: n.label.clone(),
            omega_m: frame.omega / l as f64,
            predicted_signal: ideal_signal(coefficient, frame.ax, t_f),
        });
    }
    Ok(SpectrumResult {
        harmonic: l,
        family: spec.family,
        repetitions: spec.repetitions,
        coefficient,
        omega_m: spec.grid.clone(),
        signal,
        annotations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationReport {
    pub max: f64,
    pub mean: f64,
}

/// Compares exact and product-rule spectra of a small cluster.
pub fn product_vs_exact_report(
    bath: &SpinBath,
    spec: &ScanSpec,
    config: &SimulationConfig,
) -> Result<DeviationReport, DynamicsError> {
    if bath.nuclei.len() > 4 {
        return Err(DynamicsError::TooManyNuclei {
            got: bath.nuclei.len(),
            max: 4,
        });
    }
    let exact = scan(bath, spec, &SimulationConfig { mode: Mode::Exact, ..*config })?;
    let product = scan(bath, spec, &SimulationConfig { mode: Mode::ProductRule, ..*config })?;
    let diffs: Vec<f64> = exact
        .signal
        .iter()
        .zip(&product.signal)
        .map(|(a, b)| (a - b).abs())
        .collect();
    Ok(DeviationReport {
        max: diffs.iter().copied().fold(0.0, f64::max),
        mean: diffs.iter().sum::<f64>() / diffs.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::XY8_PHASES;
    use crate::spin_model::NuclearSpin;

    fn khz(v: f64) -> f64 {
        2.0 * PI * 1e3 * v
    }

    fn result(signal: Vec<f64>) -> SpectrumResult {
        SpectrumResult {
            harmonic: 1,
            family: PulseFamily::Instantaneous,
            repetitions: 1,
            coefficient: 1.0,
            omega_m: (0..signal.len()).map(|i| i as f64).collect(),
            signal,
            annotations: vec![],
        }
    }

    #[test]
    fn dip_prominence() {
        let r = result(vec![1.0, 0.9, 0.5, 0.8, 0.7, 0.75, 1.0, 0.95, 1.0]);
        let d = r.dips(0.0);
        assert_eq!(d.iter().map(|d| d.index).collect::<Vec<_>>(), vec![2, 4, 7]);
        assert!((d[0].prominence - 0.5).abs() < 1e-15);
        assert!((d[1].prominence - 0.1).abs() < 1e-12);
        assert!((d[2].prominence - 0.05).abs() < 1e-12);
        assert_eq!(r.dips(0.2).len(), 1);
        assert!((r.max_contrast() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn grid_validation_and_empty_bath() {
        let bath = SpinBath::new(1.0, vec![]).unwrap();
        let mut spec = ScanSpec {
            harmonic: 13,
            grid: vec![],
            family: PulseFamily::Instantaneous,
            repetitions: 10,
            phases: XY8_PHASES,
        };
        assert!(matches!(scan(&bath, &spec, &SimulationConfig::default()), Err(DynamicsError::EmptyGrid)));
        spec.grid = vec![2.0, 1.0];
        assert!(matches!(scan(&bath, &spec, &SimulationConfig::default()), Err(DynamicsError::UnsortedGrid)));
        spec.grid = ScanSpec::linear_grid(2.0 * PI * 3.2e6, 2.0 * PI * 3.3e6, 5);
        let r = scan(&bath, &spec, &SimulationConfig::default()).unwrap();
        assert!(r.signal.iter().all(|&s| s == 1.0));
        spec.grid = vec![2.0 * PI * 3.27e6];
        assert_eq!(scan(&bath, &spec, &SimulationConfig::default()).unwrap().signal.len(), 1);
    }

    #[test]
    fn single_nucleus_product_equals_exact() {
        let bath = SpinBath::new(1.0, vec![NuclearSpin::proton_khz("H", [4.0, 1.0, -7.0])]).unwrap();
        let w = bath.hyperfine_components(&bath.nuclei[0]).unwrap().omega / 13.0;
        let spec = ScanSpec {
            harmonic: 13,
            grid: ScanSpec::linear_grid(w - khz(0.2), w + khz(0.2), 7),
            family: PulseFamily::Instantaneous,
            repetitions: 50,
            phases: XY8_PHASES,
        };
        let r = product_vs_exact_report(&bath, &spec, &SimulationConfig::default()).unwrap();
        assert!(r.max < 1e-12, "{}", r.max);
    }

    #[test]
    fn far_detuned_pair_factorizes() {
        let bath = SpinBath::new(
            1.0,
            vec![
                NuclearSpin::proton_khz("a", [4.0, 1.0, -7.0]),
                NuclearSpin::proton_khz("b", [3.0, 0.0, 60.0]),
            ],
        )
        .unwrap();
        let w = bath.hyperfine_components(&bath.nuclei[0]).unwrap().omega / 13.0;
        let spec = ScanSpec {
            harmonic: 13,
            grid: ScanSpec::linear_grid(w - khz(0.1), w + khz(0.1), 5),
            family: PulseFamily::Instantaneous,
            repetitions: 200,
            phases: XY8_PHASES,
        };
        let r = product_vs_exact_report(&bath, &spec, &SimulationConfig::default()).unwrap();
        assert!(r.max < 1e-2, "{r:?}");
    }
}
