//! `gk`: runs the verification suites and writes machine-readable reports.
//!
//! Exit codes: 0 when every case passes, 1 when a case fails or output
//! cannot be written, 2 on invalid flags.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gk_core::hopf::GridRow;
use gk_core::report::SuiteReport;
use gk_core::{suite, Error};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Parser, Serialize)]
#[command(name = "gk", version, about = "Generalized Kahler verification suites")]
struct Cli {
    /// Run seed; every random sample derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Report path; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Tolerance applied to every upper-bounded case instead of its pinned value.
    #[arg(long, global = true, env = "GK_DEFAULT_TOL")]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Pointwise battery: axioms, Manin triples, gauge cycle, Hitchin identity, reconstruction.
    Point {
        #[arg(long, default_value_t = 100)]
        seeds: usize,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    /// GK verification on SU(2)xR, Cartan constant and dressing laws.
    Group {
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 1e-3, allow_negative_numbers = true)]
        h: f64,
    },
    /// Annulus moduli: multiplicativity, real structure, interchange, bisections.
    Moduli {
        #[arg(long, default_value_t = 50)]
        seeds: usize,
    },
    /// Hopf-surface potential; also writes the grid CSV.
    Hopf {
        #[arg(long, default_value_t = 10)]
        grid: usize,
        /// Grid CSV path; defaults to `<out>.grid.csv`, or `gk_hopf_grid.csv`
        /// without `--out`.
        #[arg(long)]
        grid_out: Option<PathBuf>,
    },
    /// Commuting-type deformation of flat C x C by a Gaussian potential.
    Deform {
        #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
        t: f64,
        #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
        eps: f64,
    },
}

const USAGE: u8 = 2;
const FAILURE: u8 = 1;

/// SHA-256 of the canonical JSON of the flags that determine the report body.
fn config_digest(cli: &Cli) -> String {
    #[derive(Serialize)]
    struct Config<'a> {
        seed: u64,
        tol: Option<f64>,
        command: &'a Command,
    }
    let json = serde_json::to_string(&Config {
        seed: cli.seed,
        tol: cli.tol,
        command: &cli.command,
    })
    .expect("config serializes");
    Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn run(cli: &Cli) -> gk_core::Result<(SuiteReport, Option<Vec<GridRow>>)> {
    let (seed, tol) = (cli.seed, cli.tol);
    match &cli.command {
        Command::Point { seeds, n } => suite::run_point(seed, *seeds, *n, tol).map(|r| (r, None)),
        Command::Group { samples, h } => suite::run_group(seed, *samples, *h, tol).map(|r| (r, None)),
        Command::Moduli { seeds } => suite::run_moduli(seed, *seeds, tol).map(|r| (r, None)),
        Command::Hopf { grid, .. } => suite::run_hopf(seed, *grid, tol).map(|(r, rows)| (r, Some(rows))),
        Command::Deform { t, eps } => suite::run_deform(seed, *t, *eps, tol).map(|r| (r, None)),
    }
}

#[derive(Serialize)]
struct CaseRow<'a> {
    suite: &'a str,
    seed: u64,
    config_digest: &'a str,
    id: &'a str,
    residual: f64,
    tolerance: f64,
    bound: gk_core::report::Bound,
    pass: bool,
    wall_time_s: f64,
}

fn write_report(report: &SuiteReport, format: Format, sink: &mut dyn Write) -> io::Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *sink, report)?;
            writeln!(sink)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(sink);
            for c in &report.cases {
                w.serialize(CaseRow {
                    suite: &report.suite,
                    seed: report.seed,
                    config_digest: &report.config_digest,
                    id: &c.id,
                    residual: c.residual,
                    tolerance: c.tolerance,
                    bound: c.bound,
                    pass: c.pass,
                    wall_time_s: c.wall_time_s,
                })?;
            }
            w.flush()
        }
    }
}

fn write_grid(rows: &[GridRow], path: &Path) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()
}

fn grid_path(cli: &Cli, explicit: &Option<PathBuf>) -> PathBuf {
    match (explicit, &cli.out) {
        (Some(p), _) => p.clone(),
        (None, Some(out)) => {
            let mut name = out.as_os_str().to_owned();
            name.push(".grid.csv");
            PathBuf::from(name)
        }
        (None, None) => PathBuf::from("gk_hopf_grid.csv"),
    }
}

fn emit(cli: &Cli, report: &SuiteReport, rows: Option<&[GridRow]>) -> io::Result<()> {
    match &cli.out {
        Some(path) => write_report(report, cli.format, &mut File::create(path)?)?,
        None => write_report(report, cli.format, &mut io::stdout().lock())?,
    }
    if let (Some(rows), Command::Hopf { grid_out, .. }) = (rows, &cli.command) {
        write_grid(rows, &grid_path(cli, grid_out))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    let (mut report, rows) = match run(&cli) {
        Ok(v) => v,
        Err(Error::InvalidArgument(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(USAGE);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(FAILURE);
        }
    };
    report.config_digest = config_digest(&cli);
    if let Err(e) = emit(&cli, &report, rows.as_deref()) {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(FAILURE);
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        eprintln!("{} of {} cases failed:", report.failures.len(), report.cases.len());
        for id in &report.failures {
            eprintln!("  {id}");
        }
        ExitCode::from(FAILURE)
    }
}
