//! Command-line front end: `design`, `scan`, `check`, `energy`, `bath`.
//!
//! Every output file starts with a `#` header that repeats the effective
//! configuration on lines prefixed `#! `. Stripping that prefix gives a
//! config file that reproduces the run.

pub mod config;

use std::ffi::OsString;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::dynamics::{scan, DynamicsError, PulseFamily, RabiNoise, ScanSpec, SimulationConfig};
use crate::energy::{default_carrier, energy_extended, energy_top_hat, EnergyReport, ExtendedEnergy};
use crate::pulse_shape::{
    f_instantaneous, f_modulated, f_top_hat, fourier_numeric, rabi_from_modulation, synthesize_shape,
    t_pi_for_target, PulseError, PulseShape,
};
use crate::sequence::{
    build_with_phases, resonance_period, rwa_margins, RwaOptions, RwaTarget, SequenceError, ALL_X_PHASES,
    XY8_PHASES,
};
use crate::spin_model::{generate_c13_bath, read_bath, write_bath_string, BathFileError, PhysicalConstants, SpinBath, SpinModelError};

pub use config::{ConfigError, RunConfig};
use config::{BathSource, FamilyKind, PhaseSet, PulseLength, TargetSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "extpulse", version, about = "Extended pi pulse design and NV spectrum simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// INI run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for scans; defaults to the number of cores.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Overrides `[run] seed`.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Leave the timestamp line out of output headers.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Synthesize the pulse waveform and sweep the filter coefficients over t_pi.
    Design,
    /// Simulate the coherence spectrum over the scan window.
    Scan,
    /// Rotating-wave margins and harmonic overlaps for the target.
    Check,
    /// Microwave energy and equivalent Rabi frequency of one pulse.
    Energy,
    /// Write the configured bath to a bath file.
    Bath,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Design => "design",
            Command::Scan => "scan",
            Command::Check => "check",
            Command::Energy => "energy",
            Command::Bath => "bath",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numerical,
    Io,
}

#[derive(Debug, Error)]
#[error("{message}")]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Config => EXIT_CONFIG,
            ErrorKind::Numerical => EXIT_NUMERICAL,
            ErrorKind::Io => EXIT_IO,
        }
    }

    fn config(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Config,
            message: message.into(),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::config(format!("config: {e}"))
    }
}

fn pulse_kind(e: &PulseError) -> ErrorKind {
    match e {
        PulseError::EvenHarmonic(_)
        | PulseError::OutOfRange { .. }
        | PulseError::NoRoom { .. }
        | PulseError::InvalidSpec(_)
        | PulseError::InsufficientSamples { .. } => ErrorKind::Config,
        PulseError::DegenerateDenominator { .. }
        | PulseError::BoundViolation { .. }
        | PulseError::EdgeMismatch { .. }
        | PulseError::EdgeSingularity { .. }
        | PulseError::NotSolved => ErrorKind::Numerical,
    }
}

fn spin_kind(e: &SpinModelError) -> ErrorKind {
    match e {
        SpinModelError::ZeroFrequency(_) => ErrorKind::Numerical,
        _ => ErrorKind::Config,
    }
}

fn sequence_kind(e: &SequenceError) -> ErrorKind {
    match e {
        SequenceError::Spin(s) => spin_kind(s),
        _ => ErrorKind::Config,
    }
}

impl From<PulseError> for CliError {
    fn from(e: PulseError) -> Self {
        Self {
            kind: pulse_kind(&e),
            message: e.to_string(),
        }
    }
}

impl From<SequenceError> for CliError {
    fn from(e: SequenceError) -> Self {
        Self {
            kind: sequence_kind(&e),
            message: e.to_string(),
        }
    }
}

impl From<SpinModelError> for CliError {
    fn from(e: SpinModelError) -> Self {
        Self {
            kind: spin_kind(&e),
            message: e.to_string(),
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        let kind = match &e {
            DynamicsError::Pulse(p) => pulse_kind(p),
            DynamicsError::Sequence(s) => sequence_kind(s),
            DynamicsError::Spin(s) => spin_kind(s),
            DynamicsError::NonFinite { .. } | DynamicsError::DimensionMismatch { .. } => ErrorKind::Numerical,
            DynamicsError::StepTooLarge { .. }
            | DynamicsError::TooManyNuclei { .. }
            | DynamicsError::EmptyGrid
            | DynamicsError::UnsortedGrid => ErrorKind::Config,
        };
        Self {
            kind,
            message: e.to_string(),
        }
    }
}

impl From<BathFileError> for CliError {
    fn from(e: BathFileError) -> Self {
        Self::config(format!("bath file: {e}"))
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError {
        kind: ErrorKind::Io,
        message: format!("{}: {e}", path.display()),
    }
}

/// Everything a command needs: the effective config and where to write.
pub struct Run {
    pub config: RunConfig,
    pub out: PathBuf,
    pub timestamp: bool,
}

const MHZ: f64 = 2.0 * PI * 1e6;

impl Run {
    fn header(&self, command: &str) -> String {
        let mut h = format!("# extpulse {command} {}\n", env!("CARGO_PKG_VERSION"));
        if self.timestamp {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            let _ = writeln!(h, "# generated_unix = {secs}");
        }
        for line in self.config.to_ini().lines() {
            let _ = writeln!(h, "#! {line}");
        }
        h
    }

    fn write(&self, name: &str, command: &str, body: &str) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(&self.out).map_err(|e| io_error(&self.out, e))?;
        let path = self.out.join(name);
        let text = format!("{}{body}", self.header(command));
        std::fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        Ok(path)
    }

    fn bath(&self) -> Result<Option<SpinBath>, CliError> {
        let sys = &self.config.system;
        let bath = match &sys.bath {
            BathSource::None => return Ok(None),
            BathSource::File(p) => read_bath(p)?,
            BathSource::FiveProton => SpinBath::five_proton_cluster(1.0),
            BathSource::C13 {
                count,
                min_distance,
                max_distance,
            } => generate_c13_bath(self.config.seed, *count, min_distance * 1e-9, max_distance * 1e-9, 1.0)?,
        };
        Ok(Some(match sys.b_field {
            Some(b) => bath.with_field(b)?,
            None => bath,
        }))
    }

    fn require_bath(&self) -> Result<SpinBath, CliError> {
        self.bath()?
            .ok_or_else(|| CliError::config("config: system: this command needs a bath (bath or generator)"))
    }

    fn b_field(&self, bath: Option<&SpinBath>) -> Option<f64> {
        self.config.system.b_field.or(bath.map(|b| b.b_field))
    }

    /// Target nuclear frequency, rad/s.
    fn target_omega(&self, bath: Option<&SpinBath>) -> Result<Option<f64>, CliError> {
        let Some(target) = &self.config.sequence.target else {
            return Ok(None);
        };
        let bath = || bath.ok_or_else(|| CliError::config("config: sequence.target: needs a bath"));
        Ok(Some(match target {
            TargetSpec::Frequency(f) => f * MHZ,
            TargetSpec::Nucleus(label) => {
                let b = bath()?;
                let n = b
                    .nucleus(label)
                    .ok_or_else(|| CliError::config(format!("config: sequence.target: no nucleus {label} in the bath")))?;
                b.hyperfine_components(n)?.omega
            }
            TargetSpec::Larmor => {
                let b = bath()?;
                let n = b
                    .nuclei
                    .first()
                    .ok_or_else(|| CliError::config("config: sequence.target_frequency: bath is empty"))?;
                b.larmor_frequency(n)
            }
        }))
    }

    /// Scan window in w_M, rad/s.
    fn window(&self, target: Option<f64>) -> Option<(f64, f64)> {
        let (a, b) = self.config.sequence.scan?;
        let l = self.config.sequence.harmonic as f64;
        let center = target.map(|w| w / l).unwrap_or(0.0);
        Some((center + a * MHZ, center + b * MHZ))
    }

    /// Reference period: set by the target, else by the middle of the scan window.
    fn period(&self, target: Option<f64>) -> Result<f64, CliError> {
        let l = self.config.sequence.harmonic;
        if let Some(w) = target {
            return Ok(resonance_period(l, w));
        }
        match self.window(None) {
            Some((a, b)) => Ok(4.0 * PI / (a + b)),
            None => Err(CliError::config(
                "config: sequence: need target, target_frequency or an absolute scan window to fix the period",
            )),
        }
    }

    fn family(&self, period: f64) -> Result<PulseFamily, CliError> {
        let p = &self.config.pulse;
        let l = self.config.sequence.harmonic;
        Ok(match (p.family, p.length) {
            (FamilyKind::Instantaneous, _) => PulseFamily::Instantaneous,
            (FamilyKind::Modulated, PulseLength::Units(u)) => PulseFamily::Modulated {
                t_pi_units: u,
                width: p.width,
            },
            (FamilyKind::Modulated, PulseLength::Target { coefficient, branch }) => PulseFamily::Modulated {
                // scale free: with T = l the unit T/l is 1
                t_pi_units: t_pi_for_target(l, l as f64, coefficient, branch)?,
                width: p.width,
            },
            (FamilyKind::TopHat, PulseLength::Units(u)) => PulseFamily::TopHat { t_pi_units: u },
            (FamilyKind::TopHat, PulseLength::Rabi(r)) => PulseFamily::TopHat {
                t_pi_units: 0.5 / (r * 1e6) / (period / l as f64),
            },
            (f, len) => return Err(CliError::config(format!("config: pulse: {f:?} with {len:?}"))),
        })
    }

    fn simulation(&self) -> SimulationConfig {
        let s = &self.config.simulation;
        let p = &self.config.pulse;
        SimulationConfig {
            mode: s.mode,
            stepper: s.stepper,
            max_step: s.max_step.map(|h| h * 1e-9),
            substeps: s.substeps,
            samples_per_period: s.samples_per_period,
            rabi_error: p.rabi_error,
            rabi_noise: (p.rabi_noise > 0.0).then_some(RabiNoise {
                sigma: p.rabi_noise,
                seed: self.config.seed,
            }),
        }
    }

    fn phases(&self) -> [f64; 8] {
        match self.config.sequence.phases {
            PhaseSet::Xy8 => XY8_PHASES,
            PhaseSet::AllX => ALL_X_PHASES,
        }
    }

    fn shape(&self) -> Result<(PulseShape, f64), CliError> {
        let bath = self.bath()?;
        let target = self.target_omega(bath.as_ref())?;
        let period = self.period(target)?;
        let family = self.family(period)?;
        Ok((family.shape(self.config.sequence.harmonic, period, None)?, period))
    }

    pub fn design(&self) -> Result<Vec<PathBuf>, CliError> {
        let l = self.config.sequence.harmonic;
        let (shape, period) = self.shape()?;
        let samples = self.simulation().samples_for(&shape);
        let wave = rabi_from_modulation(synthesize_shape(&shape, samples)?)?;
        let schedule = build_with_phases(period, shape.t_pi(), self.config.sequence.repetitions, &shape, self.phases())?;

        let mut report = String::new();
        let _ = writeln!(report, "# pulse family={} harmonic={l}", shape.family());
        let _ = writeln!(report, "# period_ns = {}", period * 1e9);
        let _ = writeln!(report, "# t_pi_ns = {}", shape.t_pi() * 1e9);
        let _ = writeln!(report, "# t_pi_over_T_l = {}", shape.t_pi() * l as f64 / period);
        if let PulseShape::Modulated(spec) = &shape {
            let _ = writeln!(report, "# a1 = {}", spec.a1.unwrap_or(f64::NAN));
            let _ = writeln!(report, "# f_l_modulated = {}", spec.filter_coefficient());
        }
        let _ = writeln!(report, "# f_l_numeric = {}", fourier_numeric(&wave, l).value);
        if let Some(p) = wave.profiles.first() {
            let _ = writeln!(report, "# pulse_area = {}", p.area);
            let _ = writeln!(report, "# peak_rabi_MHz = {}", p.peak_rabi() / MHZ);
            let _ = writeln!(report, "# arccos_round_trip_error = {:e}", p.round_trip_error);
        }
        let _ = writeln!(report, "t_pi_over_T_l\tf_modulated\tf_top_hat\tf_instantaneous\tfeasible");
        let d = &self.config.design;
        let inst = f_instantaneous(l).value;
        for i in 0..d.sweep_points {
            let x = if d.sweep_points == 1 {
                d.sweep_from
            } else {
                d.sweep_from + (d.sweep_to - d.sweep_from) * i as f64 / (d.sweep_points - 1) as f64
            };
            let lf = l as f64;
            let fm = f_modulated(l, x, lf).map(|c| c.value).unwrap_or(f64::NAN);
            let ft = f_top_hat(l, x, lf).value;
            let feasible = u8::from(x < 0.5 * lf);
            let _ = writeln!(report, "{x:.9}\t{fm:.12}\t{ft:.12}\t{inst:.12}\t{feasible}");
        }

        let o = &self.config.output;
        Ok(vec![
            self.write(&o.waveform, "design", &wave.export_table())?,
            self.write(&o.coefficients, "design", &report)?,
            self.write(&o.schedule, "design", &schedule.export_table())?,
        ])
    }

    pub fn scan(&self) -> Result<Vec<PathBuf>, CliError> {
        let bath = self.require_bath()?;
        let target = self.target_omega(Some(&bath))?;
        let (lo, hi) = self
            .window(target)
            .ok_or_else(|| CliError::config("config: sequence: scan needs scan_from and scan_to"))?;
        if lo <= 0.0 {
            return Err(CliError::config("config: sequence.scan_from: window reaches w_M <= 0"));
        }
        let period = self.period(target)?;
        let spec = ScanSpec {
            harmonic: self.config.sequence.harmonic,
            grid: ScanSpec::linear_grid(lo, hi, self.config.sequence.points),
            family: self.family(period)?,
            repetitions: self.config.sequence.repetitions,
            phases: self.phases(),
        };
        let result = scan(&bath, &spec, &self.simulation())?;
        let mut body = result.export_table();
        let _ = writeln!(body, "# dip\tomega_M_over_2pi_MHz\tsignal\tprominence");
        for d in result.dips(0.0) {
            let _ = writeln!(body, "dip\t{:.12}\t{:.12}\t{:.12}", d.omega_m / MHZ, d.signal, d.prominence);
        }
        let _ = writeln!(body, "# max_contrast = {:.12}", result.max_contrast());
        Ok(vec![self.write(&self.config.output.spectrum, "scan", &body)?])
    }

    pub fn check(&self) -> Result<Vec<PathBuf>, CliError> {
        let bath = self.require_bath()?;
        let l = self.config.sequence.harmonic;
        let target = match &self.config.sequence.target {
            Some(TargetSpec::Nucleus(label)) => RwaTarget::Nucleus(label.clone()),
            Some(_) => RwaTarget::Frequency(self.target_omega(Some(&bath))?.unwrap_or_default()),
            None => return Err(CliError::config("config: sequence: check needs target or target_frequency")),
        };
        let omega = self.target_omega(Some(&bath))?;
        let (shape, _) = self.shape()?;
        let n_max = self.config.check.n_max.unwrap_or(3 * l);
        let coeffs: Vec<_> = match &shape {
            PulseShape::Instantaneous { .. } => (1..=n_max).map(f_instantaneous).collect(),
            _ => {
                let samples = self.simulation().samples_for(&shape).max(100 * n_max as usize);
                let wave = synthesize_shape(&shape, samples)?;
                (1..=n_max).map(|n| fourier_numeric(&wave, n)).collect()
            }
        };
        let options = RwaOptions {
            threshold: self.config.check.threshold,
            window: self.window(omega),
        };
        let report = rwa_margins(&bath, &target, l, &coeffs, n_max, options)?;
        let mut body = report.export_table();
        let _ = writeln!(body, "# flagged = {}", report.flagged().count());
        let _ = writeln!(body, "# overlap = {}", u8::from(report.has_overlap()));
        Ok(vec![self.write(&self.config.output.rwa, "check", &body)?])
    }

    pub fn energy(&self) -> Result<Vec<PathBuf>, CliError> {
        let bath = self.bath()?;
        let (shape, _) = self.shape()?;
        let constants = bath.as_ref().map(|b| b.constants).unwrap_or(PhysicalConstants::NV);
        let carrier = match self.config.energy.carrier {
            Some(c) => c * MHZ,
            None => default_carrier(&constants, self.b_field(bath.as_ref()).unwrap_or(0.0)),
        };
        let phase = self.config.energy.phase;
        let e = match &shape {
            PulseShape::Instantaneous { .. } => {
                return Err(CliError::config("config: pulse.family: instantaneous pulses carry no finite energy"))
            }
            PulseShape::TopHat { t_pi, .. } => ExtendedEnergy {
                energy: energy_top_hat(PI / t_pi, *t_pi, carrier, phase),
                cross_term: 0.0,
                cross_term_fraction: 0.0,
            },
            PulseShape::Modulated(_) => {
                let samples = self.simulation().samples_for(&shape);
                let wave = rabi_from_modulation(synthesize_shape(&shape, samples)?)?;
                energy_extended(&wave, carrier, phase)?
            }
        };
        let report = EnergyReport::new(shape.family(), shape.t_pi(), e, carrier, phase, &constants);
        Ok(vec![self.write(&self.config.output.energy, "energy", &report.to_text())?])
    }

    pub fn write_bath(&self) -> Result<Vec<PathBuf>, CliError> {
        let bath = self.require_bath()?;
        Ok(vec![self.write(&self.config.output.bath, "bath", &write_bath_string(&bath))?])
    }

    pub fn execute(&self, command: Command) -> Result<Vec<PathBuf>, CliError> {
        match command {
            Command::Design => self.design(),
            Command::Scan => self.scan(),
            Command::Check => self.check(),
            Command::Energy => self.energy(),
            Command::Bath => self.write_bath(),
        }
    }
}

/// Recovers the effective config echoed into an output header.
pub fn config_from_header(text: &str) -> String {
    text.lines()
        .filter_map(|l| l.strip_prefix("#! "))
        .fold(String::new(), |mut s, l| {
            s.push_str(l);
            s.push('\n');
            s
        })
}

fn run_cli(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let run = Run {
        config,
        out: cli.out.clone(),
        timestamp: !cli.no_timestamp,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::config("--threads must be at least 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError {
        kind: ErrorKind::Io,
        message: format!("thread pool: {e}"),
    })?;
    pool.install(|| run.execute(cli.command))
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run_cli(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{} wrote {}", cli.command.name(), p.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
