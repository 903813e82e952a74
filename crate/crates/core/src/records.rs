//! The run-level CSV schema shared by single runs, campaigns and the analysis
//! reader: `gamma,beta,mu,epsilon,epi_interval,seed,step,psi,rho_a,rho_i`.

use std::cmp::Ordering;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RUN_COLUMNS: [&str; 10] = [
    "gamma",
    "beta",
    "mu",
    "epsilon",
    "epi_interval",
    "seed",
    "step",
    "psi",
    "rho_a",
    "rho_i",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub gamma: f64,
    pub beta: f64,
    pub mu: f64,
    pub epsilon: f64,
    pub epi_interval: u64,
    pub seed: u64,
    pub step: u64,
    /// Empty in the CSV when undefined.
    pub psi: Option<f64>,
    pub rho_a: f64,
    pub rho_i: f64,
}

impl RunRow {
    /// Canonical order: parameter tuple, then seed, then step.
    pub fn canonical_cmp(&self, other: &RunRow) -> Ordering {
        self.gamma
            .total_cmp(&other.gamma)
            .then(self.beta.total_cmp(&other.beta))
            .then(self.mu.total_cmp(&other.mu))
            .then(self.epsilon.total_cmp(&other.epsilon))
            .then(self.epi_interval.cmp(&other.epi_interval))
            .then(self.seed.cmp(&other.seed))
            .then(self.step.cmp(&other.step))
    }

    /// Identity of the run a row belongs to within a campaign.
    pub fn run_key(&self) -> RunKey {
        RunKey {
            gamma: self.gamma.to_bits(),
            beta: self.beta.to_bits(),
            mu: self.mu.to_bits(),
            epsilon: self.epsilon.to_bits(),
            epi_interval: self.epi_interval,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RunKey {
    gamma: u64,
    beta: u64,
    mu: u64,
    epsilon: u64,
    epi_interval: u64,
    seed: u64,
}

pub fn sort_canonical(rows: &mut [RunRow]) {
    rows.sort_by(RunRow::canonical_cmp);
}

pub fn write_rows<W: Write>(out: W, rows: &[RunRow], header: bool) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    if header {
        w.write_record(RUN_COLUMNS)?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()
}

pub fn save_rows(path: &Path, rows: &[RunRow]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_rows(file, rows, true).map_err(|e| Error::io(path, e))
}

/// Reads rows, checking that every schema column is present. Extra columns and
/// `#` comment lines are ignored.
pub fn read_rows<R: Read>(input: R, origin: &Path) -> Result<Vec<RunRow>> {
    let schema = |reason: String| Error::Schema {
        path: origin.to_path_buf(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let headers = reader.headers().map_err(|e| schema(e.to_string()))?.clone();
    let missing: Vec<&str> = RUN_COLUMNS
        .iter()
        .copied()
        .filter(|c| !headers.iter().any(|h| h == *c))
        .collect();
    if !missing.is_empty() {
        return Err(schema(format!("missing columns: {}", missing.join(", "))));
    }
    reader
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| schema(format!("row {}: {e}", i + 1))))
        .collect()
}

pub fn load_rows(path: &Path) -> Result<Vec<RunRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_rows(file, path)
}
