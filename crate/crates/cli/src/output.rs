//! CSV and JSON writers. Every CSV opens with a provenance comment line and
//! a header; floats are written with 17 significant digits.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Lossless decimal form of an `f64`.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn comment_line(hash: &str) -> String {
    format!("# invcircle {VERSION} config={hash}")
}

pub struct CsvWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path, hash: &str, header: &[&str]) -> Result<Self, CliError> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut w = Self {
            path: path.to_owned(),
            out: BufWriter::new(file),
        };
        w.line(&comment_line(hash))?;
        w.line(&header.join(","))?;
        Ok(w)
    }

    /// Opens for appending, writing the preamble only if the file is new or
    /// empty.
    pub fn append(path: &Path, hash: &str, header: &[&str]) -> Result<Self, CliError> {
        let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| CliError::io(path, e))?;
        let mut w = Self {
            path: path.to_owned(),
            out: BufWriter::new(file),
        };
        if fresh {
            w.line(&comment_line(hash))?;
            w.line(&header.join(","))?;
            w.flush()?;
        }
        Ok(w)
    }

    fn line(&mut self, s: &str) -> Result<(), CliError> {
        writeln!(self.out, "{s}").map_err(|e| CliError::io(&self.path, e))
    }

    pub fn row(&mut self, fields: &[String]) -> Result<(), CliError> {
        self.line(&fields.join(","))
    }

    pub fn flush(&mut self) -> Result<(), CliError> {
        self.out.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

/// Data rows of a CSV written by [`CsvWriter`], split into fields, and the
/// config hash of its comment line.
pub fn read_rows(path: &Path) -> Result<(Option<String>, Vec<Vec<String>>), CliError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((None, Vec::new())),
        Err(e) => return Err(CliError::io(path, e)),
    };
    let mut hash = None;
    let mut rows = Vec::new();
    let mut header_seen = false;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if let Some(rest) = line.strip_prefix('#') {
            hash = rest.split("config=").nth(1).map(|h| h.trim().to_string());
        } else if !header_seen {
            header_seen = true;
        } else if !line.trim().is_empty() {
            rows.push(line.split(',').map(str::to_string).collect());
        }
    }
    Ok((hash, rows))
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [
            0.1,
            1.0 / 3.0,
            -2.5e-300,
            6.02e23,
            f64::MIN_POSITIVE,
            0.618_033_988_749_894_9,
        ] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn append_keeps_one_preamble() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        for v in [1.0, 2.0] {
            let mut w = CsvWriter::append(&path, "abc", &["a", "b"]).unwrap();
            w.row(&[float(v), float(-v)]).unwrap();
            w.flush().unwrap();
        }
        let (hash, rows) = read_rows(&path).unwrap();
        assert_eq!(hash.as_deref(), Some("abc"));
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1][0].parse::<f64>().unwrap(), 2.0);
    }
}
