//! Files written by runs: CSV tables and JSON reports, each opened by a
//! versioned header, plus SHA-256 digests for the manifest.
//!
//! Numbers are written in Rust's shortest round-trip form, so identical runs
//! produce identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

/// Version stamped into every CSV header line and JSON envelope.
pub const FORMAT_VERSION: u32 = 1;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Shortest round-trip text of `v`, switching to exponent form for very
/// small or large magnitudes.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// A CSV table whose first line is `# <kind> v<FORMAT_VERSION>`.
pub struct Table {
    kind: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(kind: &str, header: &[&str]) -> Self {
        Table { kind: kind.to_string(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| num(v)).collect());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut file = BufWriter::new(File::create(path)?);
        writeln!(file, "# {} v{}", self.kind, FORMAT_VERSION)?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads a table written by [`Table::write`], skipping the header line.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    format: &'a str,
    version: u32,
    data: &'a T,
}

/// Writes `{"format": kind, "version": …, "data": value}` as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, kind: &str, value: &T) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut file, &Envelope { format: kind, version: FORMAT_VERSION, data: value })?;
    writeln!(file)?;
    file.flush()?;
    Ok(())
}

/// Per-step diagnostics: mass, kinetic and Helmholtz energy, `‖Z‖`, density range.
pub fn run_log(traj: &Trajectory) -> Table {
    let mut t = Table::new(
        "run-log",
        &["step", "t", "dt", "mass", "kinetic", "helmholtz", "z_norm", "min_rho", "max_rho", "max_div"],
    );
    for s in &traj.steps {
        let mut row = vec![s.step.to_string()];
        row.extend(
            [s.t, s.dt, s.mass, s.kinetic, s.helmholtz, s.z_norm, s.min_rho, s.max_rho, s.max_div]
                .iter()
                .map(|&v| num(v)),
        );
        t.push(row);
    }
    t
}

/// Density and velocity of every cell at the stored levels.
pub fn trajectory_table(traj: &Trajectory) -> Table {
    let mut t = Table::new("trajectory", &["level", "t", "cell", "x", "y", "rho", "u", "v"]);
    let d = traj.domain();
    for level in traj.stored_indices() {
        let s = &traj.states[level];
        for c in 0..d.n_cells() {
            let x = d.center(c);
            let mut row = vec![level.to_string(), num(s.t), c.to_string()];
            row.extend([x[0], x[1], s.rho[c], s.u[c][0], s.u[c][1]].iter().map(|&v| num(v)));
            t.push(row);
        }
    }
    t
}

/// Lower-case hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_the_empty_string() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn tables_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = Table::new("demo", &["a", "b"]);
        t.push_numbers(&[0.1, 1e-300]);
        t.push(vec!["x".into(), "y,z".into()]);
        t.write(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# demo v1\na,b\n0.1,1e-300\n"));
        let (h, rows) = read_table(&path).unwrap();
        assert_eq!(h, ["a", "b"]);
        assert_eq!(rows[1], ["x", "y,z"]);
        assert_eq!(rows[0][0].parse::<f64>().unwrap(), 0.1);
    }
}
