use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::CliError;

/// Fixed-point decimal with 12 significant digits.
pub fn num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x == 0.0 {
            "0".into()
        } else {
            format!("{x}")
        };
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (11 - exponent).clamp(0, 40) as usize;
    format!("{x:.decimals$}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// `--out` target, or stdout when absent.
pub fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match out {
        Some(p) => {
            let f = fs::File::create(p).map_err(|source| CliError::Io { path: p.to_path_buf(), source })?;
            Ok(Box::new(io::BufWriter::new(f)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

pub fn csv_writer(out: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>, CliError> {
    Ok(csv::Writer::from_writer(sink(out)?))
}

/// `<prefix>.<suffix>`, keeping any directory part of the prefix.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}
