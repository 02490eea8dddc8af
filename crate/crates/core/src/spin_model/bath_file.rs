//! Plain-text bath files.
//!
//! ```text
//! # any comment
//! b_field_tesla 1
//! label gyro_mhz_per_t ax_khz ay_khz az_khz
//! H1 42.577 -1.84 -3.19 -11.02
//! ```
//!
//! Values are non-angular (MHz/T, kHz). Numbers are written with the shortest
//! decimal form that parses back to the identical `f64`, never more than 17
//! significant digits.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;
use thiserror::Error;

use super::{NuclearSpin, PhysicalConstants, SpinBath, SpinModelError};

const COLUMNS: &str = "label gyro_mhz_per_t ax_khz ay_khz az_khz";
const KHZ: f64 = 2.0 * PI * 1e3;
const MHZ: f64 = 2.0 * PI * 1e6;

#[derive(Debug, Error)]
pub enum BathFileError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Bath(#[from] SpinModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_err(line: usize, msg: impl Into<String>) -> BathFileError {
    BathFileError::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn write_bath_string(bath: &SpinBath) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "b_field_tesla {}", bath.b_field);
    let _ = writeln!(s, "{COLUMNS}");
    for n in &bath.nuclei {
        let _ = writeln!(
            s,
            "{} {} {} {} {}",
            n.label,
            to_file_units(n.gyro, MHZ),
            to_file_units(n.hyperfine.x, KHZ),
            to_file_units(n.hyperfine.y, KHZ),
            to_file_units(n.hyperfine.z, KHZ)
        );
    }
    s
}

/// Converts an angular value to file units, preferring a representative that
/// maps back to exactly `value` when read. Any bath that was read from a file
/// therefore survives write/read unchanged.
fn to_file_units(value: f64, scale: f64) -> f64 {
    let guess = value / scale;
    let mut candidates = vec![guess];
    let (mut up, mut down) = (guess, guess);
    for _ in 0..4 {
        up = up.next_up();
        down = down.next_down();
        candidates.push(up);
        candidates.push(down);
    }
    candidates
        .into_iter()
        .filter(|k| k * scale == value)
        .min_by_key(|k| k.to_string().len())
        .unwrap_or(guess)
}

pub fn write_bath(path: &Path, bath: &SpinBath) -> Result<(), BathFileError> {
    std::fs::write(path, write_bath_string(bath))?;
    Ok(())
}

pub fn read_bath(path: &Path) -> Result<SpinBath, BathFileError> {
    read_bath_str(&std::fs::read_to_string(path)?)
}

pub fn read_bath_str(text: &str) -> Result<SpinBath, BathFileError> {
    let mut b_field = None;
    let mut header_seen = false;
    let mut nuclei = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields[0] == "b_field_tesla" {
            if fields.len() != 2 {
                return Err(parse_err(line_no, "expected `b_field_tesla <value>`"));
            }
            b_field = Some(parse_num(fields[1], line_no)?);
            continue;
        }
        if fields[0] == "label" {
            if fields.join(" ") != COLUMNS {
                return Err(parse_err(line_no, format!("column header must be `{COLUMNS}`")));
            }
            header_seen = true;
            continue;
        }
        if !header_seen {
            return Err(parse_err(line_no, "nucleus row before column header"));
        }
        if fields.len() != 5 {
            return Err(parse_err(
                line_no,
                format!("expected 5 columns, found {}", fields.len()),
            ));
        }
        let gyro = parse_num(fields[1], line_no)? * MHZ;
        let a = Vector3::new(
            parse_num(fields[2], line_no)?,
            parse_num(fields[3], line_no)?,
            parse_num(fields[4], line_no)?,
        ) * KHZ;
        nuclei.push(NuclearSpin::new(fields[0], gyro, a));
    }
    let b_field = b_field.ok_or_else(|| parse_err(0, "missing b_field_tesla line"))?;
    Ok(SpinBath::with_constants(
        PhysicalConstants::NV,
        b_field,
        nuclei,
    )?)
}

fn parse_num(s: &str, line: usize) -> Result<f64, BathFileError> {
    let v: f64 = s
        .parse()
        .map_err(|_| parse_err(line, format!("not a number: `{s}`")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value `{s}`")));
    }
    Ok(v)
}
