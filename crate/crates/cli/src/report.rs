use std::fs::OpenOptions;
use std::io::{self, Write};
use std::path::Path;

use muc_core::{ConstraintNetwork, MucResult};

pub const HEADER: [&str; 12] = [
    "instance",
    "|C|",
    "|X|",
    "prep_size",
    "method",
    "seed",
    "time_ms",
    "muc_size",
    "mac_calls",
    "by_rotation",
    "by_ls",
    "status",
];

/// One row of the stats CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct StatsRecord {
    pub instance: String,
    pub constraints: usize,
    pub variables: usize,
    pub prep_size: usize,
    pub method: String,
    pub seed: u64,
    pub time_ms: f64,
    pub muc_size: usize,
    pub mac_calls: usize,
    pub by_rotation: usize,
    pub by_ls: usize,
    pub status: String,
}

impl StatsRecord {
    pub fn from_result(instance: &str, method: &str, seed: u64, r: &MucResult) -> Self {
        Self {
            instance: instance.to_string(),
            constraints: r.stats.num_constraints,
            variables: r.stats.num_variables,
            prep_size: r.stats.prep_size,
            method: method.to_string(),
            seed,
            time_ms: r.stats.elapsed.as_secs_f64() * 1000.0,
            muc_size: r.muc.len(),
            mac_calls: r.stats.mac_calls,
            by_rotation: r.by_rotation(),
            by_ls: r.by_ls(),
            status: r.status.code().to_string(),
        }
    }

    /// Row for an instance that could not be processed.
    pub fn failed(
        instance: &str,
        net: &ConstraintNetwork,
        method: &str,
        seed: u64,
        status: &str,
    ) -> Self {
        Self {
            instance: instance.to_string(),
            constraints: net.num_constraints(),
            variables: net.num_variables(),
            prep_size: 0,
            method: method.to_string(),
            seed,
            time_ms: 0.0,
            muc_size: 0,
            mac_calls: 0,
            by_rotation: 0,
            by_ls: 0,
            status: status.to_string(),
        }
    }

    pub fn fields(&self) -> [String; 12] {
        [
            self.instance.clone(),
            self.constraints.to_string(),
            self.variables.to_string(),
            self.prep_size.to_string(),
            self.method.clone(),
            self.seed.to_string(),
            format!("{:.3}", self.time_ms),
            self.muc_size.to_string(),
            self.mac_calls.to_string(),
            self.by_rotation.to_string(),
            self.by_ls.to_string(),
            self.status.clone(),
        ]
    }
}

pub fn write_csv<W: Write>(out: W, header: bool, rows: &[StatsRecord]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if header {
        w.write_record(HEADER)?;
    }
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.flush()
}

/// Appends rows to `path`, writing the header first if the file is new or
/// empty.
pub fn append_csv(path: &Path, rows: &[StatsRecord]) -> io::Result<()> {
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let empty = file.metadata()?.len() == 0;
    write_csv(file, empty, rows)
}
