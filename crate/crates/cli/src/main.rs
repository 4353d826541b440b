mod bench;
mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use muc_core::extractor::ExtractError;
use muc_core::format::{parse_network, to_json};
use muc_core::lstc::{EscapeStrategy, LstcParams};
use muc_core::oracle::{self, Gadget, GenParams, DEFAULT_BOUND};
use muc_core::solver::{solve, Outcome, SolverConfig};
use muc_core::{extract_muc, ConstraintNetwork, ConstraintSet, ExtractParams, Method, MucStatus};

use crate::bench::BenchConfig;
use crate::report::{append_csv, write_csv, StatsRecord};

const SUCCESS: u8 = 0;
const FAILURE: u8 = 1;
const USAGE: u8 = 2;
const TIMEOUT: u8 = 3;

/// Extract minimal unsatisfiable cores from constraint networks.
#[derive(Parser)]
#[command(name = "muc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide satisfiability and print a solution if one exists.
    Solve {
        file: PathBuf,
        #[arg(long, value_name = "SECS")]
        timeout: Option<f64>,
    },
    /// Extract one minimal unsatisfiable core.
    Muc {
        file: PathBuf,
        #[arg(long, default_value = "dc-lstc")]
        method: Method,
        #[command(flatten)]
        extract: ExtractArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Append a row to this stats CSV.
        #[arg(long, value_name = "OUT")]
        stats: Option<PathBuf>,
    },
    /// Check that the named constraints form a minimal unsatisfiable core.
    Verify {
        file: PathBuf,
        /// Comma-separated constraint names.
        #[arg(long, value_delimiter = ',', required = true)]
        muc: Vec<String>,
    },
    /// List every minimal unsatisfiable core (small networks only).
    Enumerate { file: PathBuf },
    /// Write a random binary network.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        vars: usize,
        #[arg(long, default_value_t = 3)]
        dom: usize,
        #[arg(long, default_value_t = 0.3)]
        density: f64,
        /// Plant an unsatisfiable gadget.
        #[arg(long)]
        unsat: bool,
        #[arg(long, value_enum, default_value_t = GadgetArg::Any)]
        gadget: GadgetArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run every method on every network file of a directory.
    Bench {
        dir: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "dc,dc-mr,dc-lstc")]
        methods: Vec<Method>,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Seeds 0..K per instance and method.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[command(flatten)]
        extract: ExtractArgs,
        /// Certify each complete result with the exhaustive checker.
        #[arg(long)]
        verify: bool,
        /// Write per-method aggregates to this file.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(clap::Args, Clone)]
struct ExtractArgs {
    /// Initial local search iterations.
    #[arg(long, default_value_t = 10_000)]
    nbit: u64,
    /// Iterations granted per new transition constraint.
    #[arg(long, default_value_t = 10_000)]
    bonus: u64,
    #[arg(long, default_value_t = 0.3)]
    noise: f64,
    #[arg(long, value_enum, default_value_t = EscapeArg::RandomWalk)]
    escape: EscapeArg,
    /// Per-run time limit.
    #[arg(long, value_name = "SECS")]
    timeout: Option<f64>,
    /// Node limit of each solver call.
    #[arg(long)]
    node_limit: Option<u64>,
    /// Rank cuts with weights updated by every solver call.
    #[arg(long)]
    share_weights: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum EscapeArg {
    RandomWalk,
    Rnovelty,
}

#[derive(Clone, Copy, ValueEnum)]
enum GadgetArg {
    Any,
    Cycle,
    Clique,
}

/// Bad input from the user; exits with the usage code.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn seconds(s: Option<f64>) -> Result<Option<Duration>> {
    s.map(|s| Duration::try_from_secs_f64(s).map_err(|_| usage(format!("invalid timeout {s}"))))
        .transpose()
}

impl ExtractArgs {
    fn params(&self, method: Method, seed: u64) -> Result<ExtractParams> {
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(usage("--noise must lie in [0,1]"));
        }
        Ok(ExtractParams {
            method,
            lstc: LstcParams {
                initial_iterations: self.nbit,
                bonus: self.bonus,
                seed,
                noise: self.noise,
                escape: match self.escape {
                    EscapeArg::RandomWalk => EscapeStrategy::RandomWalk,
                    EscapeArg::Rnovelty => EscapeStrategy::RNovelty,
                },
                ..LstcParams::default()
            },
            node_limit: self.node_limit,
            timeout: seconds(self.timeout)?,
            seed,
            share_weights: self.share_weights,
        })
    }
}

fn load(path: &Path) -> Result<ConstraintNetwork> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    parse_network(&text).map_err(|e| usage(format!("{}:{e}", path.display())))
}

fn instance_name(path: &Path) -> String {
    path.file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned())
}

fn names(net: &ConstraintNetwork, set: &ConstraintSet) -> String {
    if set.is_empty() {
        "(none)".to_string()
    } else {
        net.names(set).join(",")
    }
}

fn cmd_solve(file: &Path, timeout: Option<f64>) -> Result<u8> {
    let net = load(file)?;
    let config = SolverConfig {
        deadline: seconds(timeout)?.map(|t| Instant::now() + t),
        ..Default::default()
    };
    let r = solve(&net, &net.all_constraints(), &config);
    match r.outcome {
        Outcome::Sat(a) => {
            println!("SAT");
            println!("{}", a.display(&net));
            Ok(SUCCESS)
        }
        Outcome::Unsat => {
            println!("UNSAT");
            Ok(SUCCESS)
        }
        Outcome::BudgetExhausted => {
            println!("UNKNOWN (timeout)");
            Ok(TIMEOUT)
        }
    }
}

fn cmd_muc(
    file: &Path,
    method: Method,
    args: &ExtractArgs,
    seed: u64,
    stats: Option<&Path>,
) -> Result<u8> {
    let net = load(file)?;
    let params = args.params(method, seed)?;
    let r = match extract_muc(&net, &params) {
        Ok(r) => r,
        Err(ExtractError::Satisfiable(a)) => {
            eprintln!(
                "error: {} is satisfiable, so it has no unsatisfiable core; a solution is {}",
                file.display(),
                a.display(&net)
            );
            return Ok(FAILURE);
        }
        Err(e) => return Err(e.into()),
    };
    let row = StatsRecord::from_result(&instance_name(file), method.name(), seed, &r);
    let mut out = std::io::stdout().lock();
    match r.status {
        MucStatus::Complete => {
            writeln!(out, "status: OK")?;
            writeln!(out, "muc: {}", names(&net, &r.muc))?;
        }
        MucStatus::TimedOut => {
            writeln!(out, "status: TO")?;
            writeln!(
                out,
                "partial (unverified, possibly incomplete): {}",
                names(&net, &r.muc)
            )?;
            writeln!(out, "remaining candidates: {}", r.remaining.len())?;
        }
    }
    writeln!(
        out,
        "size: {}  mac_calls: {}  by_dichotomy: {}  by_rotation: {}  by_ls: {}  prep_size: {}  time_ms: {:.3}",
        r.muc.len(),
        r.stats.mac_calls,
        r.by_dichotomy(),
        r.by_rotation(),
        r.by_ls(),
        r.stats.prep_size,
        row.time_ms
    )?;
    if let Some(path) = stats {
        append_csv(path, &[row]).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(match r.status {
        MucStatus::Complete => SUCCESS,
        MucStatus::TimedOut => TIMEOUT,
    })
}

fn cmd_verify(file: &Path, muc: &[String]) -> Result<u8> {
    let net = load(file)?;
    let set = net.constraint_set(muc).map_err(|e| usage(e.to_string()))?;
    if let Some(a) = oracle::brute_sat(&net, &set, DEFAULT_BOUND)? {
        println!("not a MUC: satisfiable, e.g. by {}", a.display(&net));
        return Ok(FAILURE);
    }
    for c in set.iter() {
        let mut rest = set.clone();
        rest.remove(c);
        if oracle::brute_sat(&net, &rest, DEFAULT_BOUND)?.is_none() {
            println!(
                "not a MUC: still unsatisfiable without {}",
                net.constraint(c).name
            );
            return Ok(FAILURE);
        }
    }
    println!("MUC: {}", names(&net, &set));
    Ok(SUCCESS)
}

fn cmd_enumerate(file: &Path) -> Result<u8> {
    let net = load(file)?;
    let mucs = oracle::all_mucs(&net, &net.all_constraints())?;
    for m in &mucs {
        println!("{{{}}}", names(&net, m));
    }
    println!("{} MUC(s)", mucs.len());
    Ok(SUCCESS)
}

fn cmd_gen(params: GenParams, output: Option<&Path>) -> Result<u8> {
    if params.vars == 0 || params.domain == 0 {
        return Err(usage("--vars and --dom must be positive"));
    }
    if !(0.0..=1.0).contains(&params.density) {
        return Err(usage("--density must lie in [0,1]"));
    }
    if params.ensure_unsat && params.vars < 2 {
        return Err(usage("--unsat needs at least two variables"));
    }
    if params.gadget == Gadget::Clique && params.domain >= params.vars {
        return Err(usage("a clique gadget needs more variables than values"));
    }
    let text = to_json(&oracle::generate(&params));
    match output {
        Some(p) => {
            std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))?
        }
        None => print!("{text}"),
    }
    Ok(SUCCESS)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Solve { file, timeout } => cmd_solve(&file, timeout),
        Command::Muc {
            file,
            method,
            extract,
            seed,
            stats,
        } => cmd_muc(&file, method, &extract, seed, stats.as_deref()),
        Command::Verify { file, muc } => cmd_verify(&file, &muc),
        Command::Enumerate { file } => cmd_enumerate(&file),
        Command::Gen {
            seed,
            vars,
            dom,
            density,
            unsat,
            gadget,
            output,
        } => cmd_gen(
            GenParams {
                seed,
                vars,
                domain: dom,
                density,
                ensure_unsat: unsat,
                gadget: match gadget {
                    GadgetArg::Any => Gadget::Any,
                    GadgetArg::Cycle => Gadget::LessCycle,
                    GadgetArg::Clique => Gadget::Clique,
                },
            },
            output.as_deref(),
        ),
        Command::Bench {
            dir,
            methods,
            csv,
            seeds,
            extract,
            verify,
            summary,
            jobs,
        } => {
            if !dir.is_dir() {
                return Err(usage(format!("{} is not a directory", dir.display())));
            }
            if jobs == Some(0) {
                bail!("--jobs must be positive");
            }
            let config = BenchConfig {
                methods,
                seeds,
                timeout: seconds(extract.timeout)?,
                template: extract.params(Method::DcLstc, 0)?,
                verify,
                jobs,
            };
            let instances = bench::load_dir(&dir).map_err(|e| usage(format!("{e:#}")))?;
            let rows = bench::run(&instances, &config)?;
            match &csv {
                Some(p) => {
                    let f = std::fs::File::create(p)
                        .with_context(|| format!("cannot write {}", p.display()))?;
                    write_csv(f, true, &rows)?;
                }
                None => write_csv(std::io::stdout().lock(), true, &rows)?,
            }
            let agg = bench::summary(&rows);
            match &summary {
                Some(p) => std::fs::write(p, &agg)
                    .with_context(|| format!("cannot write {}", p.display()))?,
                None => eprint!("{agg}"),
            }
            let invalid = rows
                .iter()
                .any(|r| r.status == "INVALID" || r.status == "ERROR");
            Ok(if invalid { FAILURE } else { SUCCESS })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.is::<UsageError>() { USAGE } else { FAILURE })
        }
    }
}
