//! INI-style run configuration.
//!
//! ```text
//! [run]
//! seed = 7
//!
//! [system]
//! b_field = 1 T
//! bath = five_h.bath
//!
//! [sequence]
//! harmonic = 13
//! target = H2
//! repetitions = 1200
//! scan_from = -0.35 kHz
//! scan_to = 0.65 kHz
//! points = 201
//!
//! [pulse]
//! family = modulated
//! target_coefficient = 0.0326
//! branch = 6
//! width = 0.07
//! rabi_error = 0.01
//! ```
//!
//! Frequencies are MHz unless suffixed (`Hz`, `kHz`, `MHz`, `GHz`), times are
//! ns unless suffixed (`ps`, `ns`, `us`, `ms`, `s`), lengths are nm, and the
//! field needs an explicit `T`, `mT` or `G`. Relative paths resolve against
//! the directory of the config file.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dynamics::{Mode, Stepper};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{}{field}: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

fn err<T>(line: Option<usize>, field: &str, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        line,
        field: field.to_string(),
        message: message.into(),
    })
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Ini {
    sections: Vec<(String, Vec<Entry>)>,
}

const SECTIONS: [&str; 9] = [
    "run", "system", "sequence", "pulse", "simulation", "design", "check", "energy", "output",
];

fn parse_ini(text: &str) -> Result<Ini, ConfigError> {
    let mut ini = Ini::default();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return err(Some(n), "section", format!("malformed header `{line}`"));
            };
            let name = name.trim().to_ascii_lowercase();
            if !SECTIONS.contains(&name.as_str()) {
                return err(Some(n), "section", format!("unknown section [{name}]"));
            }
            if ini.sections.iter().any(|(s, _)| *s == name) {
                return err(Some(n), "section", format!("section [{name}] appears twice"));
            }
            ini.sections.push((name, Vec::new()));
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return err(Some(n), "syntax", format!("expected `key = value`, got `{line}`"));
        };
        let Some((section, entries)) = ini.sections.last_mut() else {
            return err(Some(n), key.trim(), "key outside any section");
        };
        let key = key.trim().to_ascii_lowercase();
        if !seen.insert(format!("{section}.{key}")) {
            return err(Some(n), &format!("{section}.{key}"), "given twice");
        }
        entries.push(Entry {
            key,
            value: value.trim().to_string(),
            line: n,
        });
    }
    Ok(ini)
}

/// Tracks which keys of a section were read so leftovers can be rejected.
struct Section<'a> {
    name: &'a str,
    entries: &'a [Entry],
    used: HashSet<&'a str>,
}

impl<'a> Section<'a> {
    fn of(ini: &'a Ini, name: &'a str) -> Self {
        let entries = ini
            .sections
            .iter()
            .find(|(s, _)| s == name)
            .map(|(_, e)| e.as_slice())
            .unwrap_or(&[]);
        Self {
            name,
            entries,
            used: HashSet::new(),
        }
    }

    fn field(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn get(&mut self, key: &'a str) -> Option<&'a Entry> {
        let e = self.entries.iter().find(|e| e.key == key)?;
        self.used.insert(key);
        Some(e)
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.entries.iter().find(|e| e.key == key).map(|e| e.line)
    }

    fn parse<T>(&mut self, key: &'a str, f: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(e) => match f(&e.value) {
                Ok(v) => Ok(Some(v)),
                Err(m) => err(Some(e.line), &self.field(key), m),
            },
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        for e in self.entries {
            if !self.used.contains(e.key.as_str()) {
                return err(Some(e.line), &self.field(&e.key), "unknown key");
            }
        }
        Ok(())
    }
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn integer<T: std::str::FromStr>(s: &str) -> Result<T, String> {
    s.trim().parse().map_err(|_| format!("`{s}` is not a non-negative integer"))
}

/// Splits a trailing unit from `s`; `units` pairs a suffix with its factor.
fn with_unit(s: &str, units: &[(&str, f64)], default: Option<f64>) -> Result<f64, String> {
    let s = s.trim();
    for (suffix, factor) in units {
        if let Some(num) = s.strip_suffix(suffix) {
            if num.ends_with(|c: char| c.is_ascii_digit() || c == '.' || c.is_whitespace()) {
                return Ok(number(num)? * factor);
            }
        }
    }
    match default {
        Some(f) => Ok(number(s)? * f),
        None => Err(format!(
            "`{s}` needs a unit suffix ({})",
            units.iter().map(|u| u.0).collect::<Vec<_>>().join(", ")
        )),
    }
}

/// Tesla.
pub fn parse_field(s: &str) -> Result<f64, String> {
    with_unit(s, &[("mT", 1e-3), ("T", 1.0), ("G", 1e-4)], None)
}

/// MHz.
pub fn parse_frequency(s: &str) -> Result<f64, String> {
    with_unit(s, &[("GHz", 1e3), ("MHz", 1.0), ("kHz", 1e-3), ("Hz", 1e-6)], Some(1.0))
}

/// ns.
pub fn parse_time(s: &str) -> Result<f64, String> {
    with_unit(
        s,
        &[("ps", 1e-3), ("ns", 1.0), ("us", 1e3), ("µs", 1e3), ("ms", 1e6), ("s", 1e9)],
        Some(1.0),
    )
}

/// nm.
pub fn parse_length(s: &str) -> Result<f64, String> {
    with_unit(s, &[("nm", 1.0)], Some(1.0))
}

fn positive(v: f64) -> Result<f64, String> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BathSource {
    None,
    File(PathBuf),
    /// The bundled five-proton cluster.
    FiveProton,
    C13 {
        count: usize,
        min_distance: f64,
        max_distance: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetSpec {
    Nucleus(String),
    /// Non-angular, MHz.
    Frequency(f64),
    /// Bare Larmor frequency of the bath species.
    Larmor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseSet {
    Xy8,
    AllX,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Modulated,
    TopHat,
    Instantaneous,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseLength {
    /// t_pi in units of T/l.
    Units(f64),
    /// Modulated pulses: addressed coefficient and branch.
    Target { coefficient: f64, branch: u32 },
    /// Top-hat pulses: constant Rabi frequency, MHz.
    Rabi(f64),
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Tesla; overrides the value stored in a bath file.
    pub b_field: Option<f64>,
    pub bath: BathSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceConfig {
    pub harmonic: u32,
    pub target: Option<TargetSpec>,
    pub repetitions: usize,
    pub phases: PhaseSet,
    /// w_M / 2pi in MHz; offsets from target/l when a target is set.
    pub scan: Option<(f64, f64)>,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseConfig {
    pub family: FamilyKind,
    pub length: PulseLength,
    /// Gaussian width in units of t_pi.
    pub width: f64,
    pub rabi_error: f64,
    /// Per-pulse Gaussian Rabi noise, relative.
    pub rabi_noise: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSection {
    pub mode: Mode,
    pub stepper: Stepper,
    pub substeps: usize,
    pub samples_per_period: Option<usize>,
    /// ns
    pub max_step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignConfig {
    /// Sweep of t_pi in units of T/l.
    pub sweep_from: f64,
    pub sweep_to: f64,
    pub sweep_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckConfig {
    pub n_max: Option<u32>,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyConfig {
    /// MHz; defaults to the electron transition at the configured field.
    pub carrier: Option<f64>,
    /// rad
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub waveform: String,
    pub coefficients: String,
    pub schedule: String,
    pub spectrum: String,
    pub rwa: String,
    pub energy: String,
    pub bath: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub system: SystemConfig,
    pub sequence: SequenceConfig,
    pub pulse: PulseConfig,
    pub simulation: SimulationSection,
    pub design: DesignConfig,
    pub check: CheckConfig,
    pub energy: EnergyConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::parse("", Path::new(".")).expect("empty config is valid")
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: None,
            field: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let ini = parse_ini(text)?;

        let mut s = Section::of(&ini, "run");
        let seed = s.parse("seed", integer::<u64>)?.unwrap_or(0);
        s.finish()?;

        let mut s = Section::of(&ini, "system");
        let b_field = s.parse("b_field", |v| parse_field(v).and_then(positive))?;
        let bath_file = s.parse("bath", |v| Ok(v.to_string()))?;
        let generator = s.parse("generator", |v| Ok(v.to_ascii_lowercase()))?;
        let bath = match (bath_file, generator.as_deref()) {
            (Some(_), Some(_)) => return err(s.line("generator"), "system.generator", "give either bath or generator, not both"),
            (Some(p), None) => {
                let path = base_dir.join(&p);
                if !path.is_file() {
                    return err(s.line("bath"), "system.bath", format!("file {} does not exist", path.display()));
                }
                BathSource::File(path.canonicalize().unwrap_or(path))
            }
            (None, Some("five_h")) => BathSource::FiveProton,
            (None, Some("c13")) => {
                let count = s.parse("count", integer::<usize>)?.unwrap_or(150);
                let min_distance = s.parse("min_distance", |v| parse_length(v).and_then(positive))?.unwrap_or(0.5);
                let max_distance = s.parse("max_distance", |v| parse_length(v).and_then(positive))?.unwrap_or(2.5);
                if count == 0 {
                    return err(s.line("count"), "system.count", "need at least one nucleus");
                }
                if max_distance <= min_distance {
                    return err(s.line("max_distance"), "system.max_distance", "must exceed min_distance");
                }
                BathSource::C13 {
                    count,
                    min_distance,
                    max_distance,
                }
            }
            (None, Some(other)) => {
                return err(s.line("generator"), "system.generator", format!("unknown generator `{other}` (five_h, c13)"))
            }
            (None, None) => BathSource::None,
        };
        if !matches!(bath, BathSource::File(_)) && bath != BathSource::None && b_field.is_none() {
            return err(s.line("generator"), "system.b_field", "generated baths need b_field");
        }
        s.finish()?;
        let system = SystemConfig { b_field, bath };

        let mut s = Section::of(&ini, "sequence");
        let harmonic = s.parse("harmonic", integer::<u32>)?.unwrap_or(13);
        if harmonic == 0 {
            return err(s.line("harmonic"), "sequence.harmonic", "harmonic starts at 1");
        }
        let target_label = s.parse("target", |v| Ok(v.to_string()))?;
        let target_freq = s.parse("target_frequency", |v| {
            if v.eq_ignore_ascii_case("larmor") {
                Ok(TargetSpec::Larmor)
            } else {
                parse_frequency(v).and_then(positive).map(TargetSpec::Frequency)
            }
        })?;
        let target = match (target_label, target_freq) {
            (Some(_), Some(_)) => {
                return err(s.line("target_frequency"), "sequence.target_frequency", "give either target or target_frequency, not both")
            }
            (Some(l), None) => Some(TargetSpec::Nucleus(l)),
            (None, t) => t,
        };
        if matches!(target, Some(TargetSpec::Nucleus(_)) | Some(TargetSpec::Larmor)) && system.bath == BathSource::None {
            return err(s.line("target").or(s.line("target_frequency")), "sequence.target", "needs a bath");
        }
        let repetitions = s.parse("repetitions", integer::<usize>)?.unwrap_or(400);
        if repetitions == 0 {
            return err(s.line("repetitions"), "sequence.repetitions", "need at least one repetition");
        }
        let phases = s
            .parse("phases", |v| match v.to_ascii_lowercase().as_str() {
                "xy8" => Ok(PhaseSet::Xy8),
                "all-x" => Ok(PhaseSet::AllX),
                o => Err(format!("unknown phase pattern `{o}` (xy8, all-x)")),
            })?
            .unwrap_or(PhaseSet::Xy8);
        let from = s.parse("scan_from", parse_frequency)?;
        let to = s.parse("scan_to", parse_frequency)?;
        let scan = match (from, to) {
            (Some(a), Some(b)) if b >= a => Some((a, b)),
            (Some(_), Some(_)) => return err(s.line("scan_to"), "sequence.scan_to", "must not be below scan_from"),
            (None, None) => None,
            _ => return err(s.line("scan_from").or(s.line("scan_to")), "sequence.scan_from", "scan_from and scan_to go together"),
        };
        if let (Some((a, _)), None) = (scan, &target) {
            if a <= 0.0 {
                return err(s.line("scan_from"), "sequence.scan_from", "absolute scan window must be positive");
            }
        }
        let points = s.parse("points", integer::<usize>)?.unwrap_or(101);
        if points == 0 {
            return err(s.line("points"), "sequence.points", "need at least one grid point");
        }
        s.finish()?;
        let sequence = SequenceConfig {
            harmonic,
            target,
            repetitions,
            phases,
            scan,
            points,
        };

        let mut s = Section::of(&ini, "pulse");
        let family = s
            .parse("family", |v| match v.to_ascii_lowercase().as_str() {
                "modulated" => Ok(FamilyKind::Modulated),
                "top-hat" => Ok(FamilyKind::TopHat),
                "instantaneous" => Ok(FamilyKind::Instantaneous),
                o => Err(format!("unknown family `{o}` (modulated, top-hat, instantaneous)")),
            })?
            .unwrap_or(FamilyKind::Modulated);
        let units = s.parse("t_pi", |v| number(v).and_then(positive))?;
        let coefficient = s.parse("target_coefficient", number)?;
        let branch = s.parse("branch", integer::<u32>)?;
        let rabi = s.parse("rabi", |v| parse_frequency(v).and_then(positive))?;
        let length_line = s.line("t_pi").or(s.line("target_coefficient")).or(s.line("rabi"));
        let length = match (family, units, coefficient, rabi) {
            (FamilyKind::Instantaneous, None, None, None) => PulseLength::None,
            (FamilyKind::Instantaneous, ..) => {
                return err(length_line, "pulse.t_pi", "instantaneous pulses take no length")
            }
            (FamilyKind::Modulated, Some(u), None, None) => PulseLength::Units(u),
            (FamilyKind::Modulated, None, Some(c), None) => PulseLength::Target {
                coefficient: c,
                branch: branch.unwrap_or(0),
            },
            (FamilyKind::TopHat, Some(u), None, None) => PulseLength::Units(u),
            (FamilyKind::TopHat, None, None, Some(r)) => PulseLength::Rabi(r),
            (FamilyKind::Modulated, None, None, None) => PulseLength::Units(6.0),
            (FamilyKind::TopHat, None, None, None) => {
                return err(None, "pulse.t_pi", "top-hat pulses need t_pi or rabi")
            }
            (FamilyKind::TopHat, _, Some(_), _) => {
                return err(s.line("target_coefficient"), "pulse.target_coefficient", "only modulated pulses take a target coefficient")
            }
            (FamilyKind::Modulated, _, _, Some(_)) => {
                return err(s.line("rabi"), "pulse.rabi", "modulated pulses take t_pi or target_coefficient")
            }
            _ => return err(length_line, "pulse.t_pi", "give exactly one of t_pi, target_coefficient, rabi"),
        };
        if branch.is_some() && !matches!(length, PulseLength::Target { .. }) {
            return err(s.line("branch"), "pulse.branch", "branch only applies with target_coefficient");
        }
        let width = s.parse("width", |v| number(v).and_then(positive))?.unwrap_or(0.07);
        let rabi_error = s.parse("rabi_error", number)?.unwrap_or(0.0);
        if rabi_error <= -1.0 {
            return err(s.line("rabi_error"), "pulse.rabi_error", "must exceed -1");
        }
        let rabi_noise = s.parse("rabi_noise", number)?.unwrap_or(0.0);
        if rabi_noise < 0.0 {
            return err(s.line("rabi_noise"), "pulse.rabi_noise", "must be non-negative");
        }
        s.finish()?;
        let pulse = PulseConfig {
            family,
            length,
            width,
            rabi_error,
            rabi_noise,
        };

        let mut s = Section::of(&ini, "simulation");
        let mode = s
            .parse("mode", |v| match v.to_ascii_lowercase().as_str() {
                "exact" => Ok(Mode::Exact),
                "product" => Ok(Mode::ProductRule),
                o => Err(format!("unknown mode `{o}` (exact, product)")),
            })?
            .unwrap_or(Mode::Exact);
        let stepper = s
            .parse("stepper", |v| match v.to_ascii_lowercase().as_str() {
                "auto" => Ok(Stepper::Auto),
                "eigen" => Ok(Stepper::Eigen),
                "split" => Ok(Stepper::Split),
                o => Err(format!("unknown stepper `{o}` (auto, eigen, split)")),
            })?
            .unwrap_or(Stepper::Auto);
        let substeps = s.parse("substeps", integer::<usize>)?.unwrap_or(1);
        if substeps == 0 {
            return err(s.line("substeps"), "simulation.substeps", "must be at least 1");
        }
        let samples_per_period = s.parse("samples_per_period", integer::<usize>)?;
        let max_step = s.parse("max_step", |v| parse_time(v).and_then(positive))?;
        s.finish()?;
        let simulation = SimulationSection {
            mode,
            stepper,
            substeps,
            samples_per_period,
            max_step,
        };

        let mut s = Section::of(&ini, "design");
        let sweep_from = s.parse("sweep_from", number)?.unwrap_or(0.0);
        let sweep_to = s.parse("sweep_to", number)?.unwrap_or(8.0);
        let sweep_points = s.parse("sweep_points", integer::<usize>)?.unwrap_or(161);
        if sweep_from < 0.0 || sweep_to < sweep_from {
            return err(s.line("sweep_to"), "design.sweep_to", "need 0 <= sweep_from <= sweep_to");
        }
        if sweep_points == 0 {
            return err(s.line("sweep_points"), "design.sweep_points", "need at least one point");
        }
        s.finish()?;
        let design = DesignConfig {
            sweep_from,
            sweep_to,
            sweep_points,
        };

        let mut s = Section::of(&ini, "check");
        let n_max = s.parse("n_max", integer::<u32>)?;
        if n_max == Some(0) {
            return err(s.line("n_max"), "check.n_max", "must be at least 1");
        }
        let threshold = s.parse("threshold", |v| number(v).and_then(positive))?.unwrap_or(10.0);
        s.finish()?;
        let check = CheckConfig { n_max, threshold };

        let mut s = Section::of(&ini, "energy");
        let carrier = s.parse("carrier", |v| parse_frequency(v).and_then(positive))?;
        let phase = s.parse("phase", number)?.unwrap_or(0.0);
        s.finish()?;
        let energy = EnergyConfig { carrier, phase };

        let mut s = Section::of(&ini, "output");
        let mut name = |key: &'static str, default: &str| -> Result<String, ConfigError> {
            let v = s.parse(key, |v| Ok(v.to_string()))?.unwrap_or_else(|| default.to_string());
            if v.is_empty() || v.contains('/') || v.contains('\\') {
                return err(s.line(key), &format!("output.{key}"), "must be a plain file name");
            }
            Ok(v)
        };
        let output = OutputConfig {
            waveform: name("waveform", "waveform.tsv")?,
            coefficients: name("coefficients", "coefficients.tsv")?,
            schedule: name("schedule", "schedule.tsv")?,
            spectrum: name("spectrum", "spectrum.tsv")?,
            rwa: name("rwa", "rwa.tsv")?,
            energy: name("energy", "energy.txt")?,
            bath: name("bath", "bath.txt")?,
        };
        s.finish()?;

        Ok(RunConfig {
            seed,
            system,
            sequence,
            pulse,
            simulation,
            design,
            check,
            energy,
            output,
        })
    }

    /// Effective configuration with every default filled in. Parsing the
    /// text back gives an identical `RunConfig`.
    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[run]\nseed = {}", self.seed);

        let _ = writeln!(s, "[system]");
        if let Some(b) = self.system.b_field {
            let _ = writeln!(s, "b_field = {b} T");
        }
        match &self.system.bath {
            BathSource::None => {}
            BathSource::File(p) => {
                let _ = writeln!(s, "bath = {}", p.display());
            }
            BathSource::FiveProton => {
                let _ = writeln!(s, "generator = five_h");
            }
            BathSource::C13 {
                count,
                min_distance,
                max_distance,
            } => {
                let _ = writeln!(
                    s,
                    "generator = c13\ncount = {count}\nmin_distance = {min_distance} nm\nmax_distance = {max_distance} nm"
                );
            }
        }

        let q = &self.sequence;
        let _ = writeln!(s, "[sequence]\nharmonic = {}", q.harmonic);
        match &q.target {
            Some(TargetSpec::Nucleus(l)) => {
                let _ = writeln!(s, "target = {l}");
            }
            Some(TargetSpec::Frequency(f)) => {
                let _ = writeln!(s, "target_frequency = {f} MHz");
            }
            Some(TargetSpec::Larmor) => {
                let _ = writeln!(s, "target_frequency = larmor");
            }
            None => {}
        }
        let _ = writeln!(
            s,
            "repetitions = {}\nphases = {}",
            q.repetitions,
            match q.phases {
                PhaseSet::Xy8 => "xy8",
                PhaseSet::AllX => "all-x",
            }
        );
        if let Some((a, b)) = q.scan {
            let _ = writeln!(s, "scan_from = {a} MHz\nscan_to = {b} MHz");
        }
        let _ = writeln!(s, "points = {}", q.points);

        let p = &self.pulse;
        let _ = writeln!(
            s,
            "[pulse]\nfamily = {}",
            match p.family {
                FamilyKind::Modulated => "modulated",
                FamilyKind::TopHat => "top-hat",
                FamilyKind::Instantaneous => "instantaneous",
            }
        );
        match p.length {
            PulseLength::Units(u) => {
                let _ = writeln!(s, "t_pi = {u}");
            }
            PulseLength::Target { coefficient, branch } => {
                let _ = writeln!(s, "target_coefficient = {coefficient}\nbranch = {branch}");
            }
            PulseLength::Rabi(r) => {
                let _ = writeln!(s, "rabi = {r} MHz");
            }
            PulseLength::None => {}
        }
        let _ = writeln!(
            s,
            "width = {}\nrabi_error = {}\nrabi_noise = {}",
            p.width, p.rabi_error, p.rabi_noise
        );

        let m = &self.simulation;
        let _ = writeln!(
            s,
            "[simulation]\nmode = {}\nstepper = {}\nsubsteps = {}",
            match m.mode {
                Mode::Exact => "exact",
                Mode::ProductRule => "product",
            },
            match m.stepper {
                Stepper::Auto => "auto",
                Stepper::Eigen => "eigen",
                Stepper::Split => "split",
            },
            m.substeps
        );
        if let Some(n) = m.samples_per_period {
            let _ = writeln!(s, "samples_per_period = {n}");
        }
        if let Some(h) = m.max_step {
            let _ = writeln!(s, "max_step = {h} ns");
        }

        let d = &self.design;
        let _ = writeln!(
            s,
            "[design]\nsweep_from = {}\nsweep_to = {}\nsweep_points = {}",
            d.sweep_from, d.sweep_to, d.sweep_points
        );
        let _ = writeln!(s, "[check]");
        if let Some(n) = self.check.n_max {
            let _ = writeln!(s, "n_max = {n}");
        }
        let _ = writeln!(s, "threshold = {}", self.check.threshold);
        let _ = writeln!(s, "[energy]");
        if let Some(c) = self.energy.carrier {
            let _ = writeln!(s, "carrier = {c} MHz");
        }
        let _ = writeln!(s, "phase = {}", self.energy.phase);
        let o = &self.output;
        let _ = writeln!(
            s,
            "[output]\nwaveform = {}\ncoefficients = {}\nschedule = {}\nspectrum = {}\nrwa = {}\nenergy = {}\nbath = {}",
            o.waveform, o.coefficients, o.schedule, o.spectrum, o.rwa, o.energy, o.bath
        );
        s
    }
}
