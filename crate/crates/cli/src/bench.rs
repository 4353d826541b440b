use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use muc_core::extractor::ExtractError;
use muc_core::format::parse_network;
use muc_core::oracle::{self, OracleError};
use muc_core::{extract_muc, ConstraintNetwork, ExtractParams, Method, MucStatus};
use rayon::prelude::*;

use crate::report::StatsRecord;

pub struct BenchConfig {
    pub methods: Vec<Method>,
    pub seeds: u64,
    pub timeout: Option<Duration>,
    pub template: ExtractParams,
    pub verify: bool,
    pub jobs: Option<usize>,
}

pub struct Instance {
    pub name: String,
    pub net: ConstraintNetwork,
}

/// Network files of `dir`, sorted by file name.
pub fn load_dir(dir: &Path) -> Result<Vec<Instance>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot read directory {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p)
                .with_context(|| format!("cannot read {}", p.display()))?;
            let net = parse_network(&text).with_context(|| format!("{}", p.display()))?;
            let name = p
                .file_stem()
                .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
            Ok(Instance { name, net })
        })
        .collect()
}

/// One row per (instance, method, seed), in that order.
pub fn run(instances: &[Instance], config: &BenchConfig) -> Result<Vec<StatsRecord>> {
    let tasks: Vec<(&Instance, Method, u64)> = instances
        .iter()
        .flat_map(|i| {
            config
                .methods
                .iter()
                .flat_map(move |&m| (0..config.seeds).map(move |s| (i, m, s)))
        })
        .collect();
    let work = || {
        tasks
            .par_iter()
            .map(|&(inst, method, seed)| run_one(inst, method, seed, config))
            .collect()
    };
    let rows = match config.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()?
            .install(work),
        None => work(),
    };
    Ok(rows)
}

fn run_one(inst: &Instance, method: Method, seed: u64, config: &BenchConfig) -> StatsRecord {
    let params = ExtractParams {
        method,
        seed,
        timeout: config.timeout,
        ..config.template.clone()
    };
    match extract_muc(&inst.net, &params) {
        Ok(r) => {
            let mut row = StatsRecord::from_result(&inst.name, method.name(), seed, &r);
            if config.verify && r.status == MucStatus::Complete {
                row.status = match oracle::is_muc(&inst.net, &r.muc) {
                    Ok(true) => "OK".into(),
                    Ok(false) => "INVALID".into(),
                    Err(OracleError::BoundExceeded { .. })
                    | Err(OracleError::TooManyConstraints { .. }) => "UNVERIFIED".into(),
                };
            }
            row
        }
        Err(ExtractError::Satisfiable(_)) => {
            StatsRecord::failed(&inst.name, &inst.net, method.name(), seed, "SAT")
        }
        Err(ExtractError::Preprocessing(_)) => {
            StatsRecord::failed(&inst.name, &inst.net, method.name(), seed, "ERROR")
        }
    }
}

/// Per-method aggregates: runs completed within the timeout and the mean
/// fraction of the core found by a booster.
pub fn summary(rows: &[StatsRecord]) -> String {
    struct Acc {
        runs: usize,
        solved: usize,
        booster: f64,
        times: Vec<f64>,
    }
    let mut by_method: BTreeMap<&str, Acc> = BTreeMap::new();
    for r in rows {
        let acc = by_method.entry(&r.method).or_insert(Acc {
            runs: 0,
            solved: 0,
            booster: 0.0,
            times: Vec::new(),
        });
        acc.runs += 1;
        if r.status == "OK" {
            acc.solved += 1;
            acc.times.push(r.time_ms);
            if r.muc_size > 0 {
                acc.booster += (r.by_rotation + r.by_ls) as f64 / r.muc_size as f64;
            }
        }
    }
    let mut out = String::from("method,solved,runs,mean_booster_fraction,time_ms_sorted\n");
    for (method, mut acc) in by_method {
        acc.times.sort_by(f64::total_cmp);
        let mean = if acc.solved > 0 {
            acc.booster / acc.solved as f64
        } else {
            0.0
        };
        let times: Vec<String> = acc.times.iter().map(|t| format!("{t:.3}")).collect();
        out.push_str(&format!(
            "{method},{},{},{mean:.3},{}\n",
            acc.solved,
            acc.runs,
            times.join(" ")
        ));
    }
    out
}
