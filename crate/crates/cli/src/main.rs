// `!(x > y)` guards also reject NaN, which `x <= y` would let through
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

mod commands;
mod config;
mod error;
mod table;

use config::{Engine, FileConfig, Format};
use error::{config_err, CliError};
use table::Table;

/// Default output directory when `--out` is absent.
const OUT_DIR_ENV: &str = "TELEAMP_OUT_DIR";

#[derive(Parser)]
#[command(name = "teleamp", version, about = "Coherent-state tele-amplification: protocol runs, success scans, qubit maps, key rates")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug, Default)]
pub struct GlobalArgs {
    /// TOML configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (default: stdout, or $TELEAMP_OUT_DIR/<command>.<format>)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true, value_enum)]
    pub engine: Option<Engine>,
    /// Worker threads (0 = all cores)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Named parameter set for the subcommand
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Add per-row wall time (makes output nondeterministic)
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Binary tele-amplification runs (single setting or the parameter table)
    Teleamp(commands::teleamp::TeleampArgs),
    /// Success probabilities of the relays and of measure-resend over α
    SuccessScan(commands::success::SuccessArgs),
    /// Cat-qubit teleportation fidelity over the Bloch sphere
    QubitMap(commands::qubit::QubitArgs),
    /// Key-rate distance scan with or without the relay
    Qkd(commands::qkd::QkdArgs),
    /// Unambiguous discrimination of lossy PSK states
    Usd(commands::usd::UsdArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Teleamp(_) => "teleamp",
            Command::SuccessScan(_) => "success-scan",
            Command::QubitMap(_) => "qubit-map",
            Command::Qkd(_) => "qkd",
            Command::Usd(_) => "usd",
        }
    }
}

/// Settings shared by every subcommand after merging flags and file.
pub struct Context {
    pub engine: Option<Engine>,
    pub preset: Option<String>,
    pub timing: bool,
    pool: rayon::ThreadPool,
}

impl Context {
    /// Maps `f` over `items` on the worker pool, keeping input order.
    pub fn map<T: Sync, R: Send>(&self, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
        use rayon::prelude::*;
        self.pool.install(|| items.par_iter().map(f).collect())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.global.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let g = &cli.global;
    let format = g.format.or(file.format).unwrap_or(Format::Csv);
    let jobs = g.jobs.or(file.jobs).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| config_err(format!("jobs: {e}")))?;
    let ctx = Context {
        engine: g.engine.or(file.engine),
        preset: g.preset.clone(),
        timing: g.timing || file.timing.unwrap_or(false),
        pool,
    };
    let (table, config): (Table, Value) = match &cli.command {
        Command::Teleamp(a) => commands::teleamp::run(a, &file.teleamp, &ctx)?,
        Command::SuccessScan(a) => commands::success::run(a, &file.success_scan, &ctx)?,
        Command::QubitMap(a) => commands::qubit::run(a, &file.qubit_map, &ctx)?,
        Command::Qkd(a) => commands::qkd::run(a, &file.qkd, &ctx)?,
        Command::Usd(a) => commands::usd::run(a, &file.usd, &ctx)?,
    };
    let config = serde_json::json!({ "command": cli.command.name(), "parameters": config });

    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let out = g
        .out
        .clone()
        .or(file.out.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(|d| PathBuf::from(d).join(format!("{}.{ext}", cli.command.name()))));
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let f = std::io::BufWriter::new(std::fs::File::create(&path)?);
            emit(&table, config, format, f)?;
        }
        None => emit(&table, config, format, std::io::stdout().lock())?,
    }
    if format == Format::Csv {
        let mut err = std::io::stderr().lock();
        for (k, v) in &table.summary {
            writeln!(err, "# {k} = {}", v.csv())?;
        }
    }
    Ok(())
}

fn emit(table: &Table, config: Value, format: Format, w: impl Write) -> Result<(), CliError> {
    match format {
        Format::Csv => table.write_csv(w),
        Format::Json => table.write_json(w, config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
