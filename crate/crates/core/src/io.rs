//! File formats and number formatting.
//!
//! JSON is the lossless interchange format: every float is written with 17
//! significant digits. CSV output is for plotting and uses 12.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{validation, Result};
use crate::hardy::AtomTerm;
use crate::martingale::{validate_stopping_time, Martingale, StoppingTime};
use crate::space::{Exponent, FilteredSpace, RandomVariable};

pub const JSON_DIGITS: usize = 17;
pub const CSV_DIGITS: usize = 12;

/// Formats a finite float with `digits` significant digits, positional when
/// the decimal exponent is in `-5..21`, trailing zeros trimmed.
pub fn format_sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{:.*e}", digits.saturating_sub(1), x);
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mant) = match mant.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mant),
    };
    let digits_str: String = mant.chars().filter(|c| *c != '.').collect();
    if !(-5..21).contains(&exp) {
        let mut frac = digits_str[1..].trim_end_matches('0').to_string();
        if frac.is_empty() {
            frac.push('0');
        }
        return format!("{sign}{}.{frac}e{exp}", &digits_str[..1]);
    }
    let (int_part, frac_part) = if exp >= 0 {
        let e = exp as usize + 1;
        if e >= digits_str.len() {
            (format!("{digits_str}{}", "0".repeat(e - digits_str.len())), String::new())
        } else {
            (digits_str[..e].to_string(), digits_str[e..].to_string())
        }
    } else {
        ("0".to_string(), format!("{}{digits_str}", "0".repeat((-exp - 1) as usize)))
    };
    let frac = frac_part.trim_end_matches('0');
    let frac = if frac.is_empty() { "0" } else { frac };
    format!("{sign}{int_part}.{frac}")
}

/// Pretty JSON with 17-significant-digit floats.
struct SigFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

macro_rules! forward {
    ($($name:ident ( $($arg:ident : $ty:ty),* );)*) => {
        $(
            fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.inner.$name(w $(, $arg)*)
            }
        )*
    };
}

impl Formatter for SigFormatter<'_> {
    forward! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }

    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_sig(value, JSON_DIGITS).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

/// Serializes to pretty JSON (17 significant digits, trailing newline).
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFormatter { inner: PrettyFormatter::new() });
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn from_json_str<T: DeserializeOwned>(s: &str) -> Result<T> {
    Ok(serde_json::from_str(s)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    from_json_str(&fs::read_to_string(path)?)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json_string(value)?)?;
    Ok(())
}

/// Writes rows of floats as CSV with a header, 12 significant digits.
pub fn write_csv<W: Write>(w: W, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(header)?;
    for row in rows {
        wr.write_record(row.iter().map(|v| format_sig(*v, CSV_DIGITS)))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn csv_string(header: &[&str], rows: &[Vec<f64>]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, header, rows)?;
    Ok(String::from_utf8(buf).expect("ASCII output"))
}

/// `{ "values": [...] }`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValuesFile {
    pub values: Vec<f64>,
}

impl ValuesFile {
    pub fn exponent(self) -> Result<Exponent> {
        Exponent::new(self.values)
    }

    pub fn function(self) -> RandomVariable {
        RandomVariable::new(self.values)
    }
}

impl From<&Exponent> for ValuesFile {
    fn from(p: &Exponent) -> Self {
        ValuesFile { values: p.values().to_vec() }
    }
}

/// `{ "terminal": [...] }` or `{ "levels": [[...], ...] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MartingaleFile {
    Terminal { terminal: Vec<f64> },
    Levels { levels: Vec<Vec<f64>> },
}

impl MartingaleFile {
    pub fn into_martingale(self, space: &FilteredSpace) -> Result<Martingale> {
        match self {
            MartingaleFile::Terminal { terminal } => Martingale::from_terminal(space, &RandomVariable::new(terminal)),
            MartingaleFile::Levels { levels } => {
                Martingale::new(space, levels.into_iter().map(RandomVariable::new).collect())
            }
        }
    }
}

impl From<&Martingale> for MartingaleFile {
    fn from(f: &Martingale) -> Self {
        MartingaleFile::Levels { levels: f.levels().iter().map(|l| l.values().to_vec()).collect() }
    }
}

/// `{ "stop_level": [0, 2, "inf", ...] }`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingTimeFile {
    pub stop_level: StoppingTime,
}

impl StoppingTimeFile {
    pub fn validate(self, space: &FilteredSpace) -> Result<StoppingTime> {
        validate_stopping_time(space, self.stop_level.values().to_vec())
    }
}

/// Decomposition file: a list of `{ k, mu, tau, atom_terminal }`.
pub type DecompositionFile = Vec<AtomTerm>;

/// Reads a nonempty leaf subset given as `{ "values": [leaf, ...] }` or a bare list.
pub fn parse_leaf_set(s: &str, space: &FilteredSpace) -> Result<Vec<usize>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum SetFile {
        Bare(Vec<usize>),
        Wrapped { leaves: Vec<usize> },
    }
    let leaves = match from_json_str::<SetFile>(s)? {
        SetFile::Bare(v) | SetFile::Wrapped { leaves: v } => v,
    };
    if let Some(l) = leaves.iter().find(|&&l| l >= space.num_leaves()) {
        return validation(format!("leaf {l} out of range"));
    }
    Ok(leaves)
}
