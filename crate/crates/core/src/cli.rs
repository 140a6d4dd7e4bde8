//! Command-line front end. Exit codes: 0 success, 1 invariant or
//! verification failure, 2 usage or configuration error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{build_grid, run_sweep, GridMode};
use crate::error::{Error, Result};
use crate::protocols::{run, run_pair, ProtocolConfig, ProtocolKind, Schedule, ScheduleTarget};
use crate::report::{write_pair_csv, write_runs_csv, write_sweep_csv, ReportDocument};
use crate::verify::{run_suite, Injection, VerifyOptions, DEFAULT_SEED};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "qcost",
    version,
    about = "Channel Cost and Gram-matrix simulator for two-way quantum protocols"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one protocol for one value of Bob's bit.
    Run(RunArgs),
    /// Run both bits with identical Alice operations and compare them.
    Pair(ProtocolArgs),
    /// SLAZ cost sweep over a grid of (M, N), written as CSV.
    Sweep(SweepArgs),
    /// Run the seeded invariant suite and print its manifest.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Grid {
    Zip,
    Cross,
}

#[derive(Debug, Args)]
pub struct ProtocolArgs {
    #[arg(long, value_parser = parse_protocol)]
    pub protocol: ProtocolKind,
    /// Inner rounds N.
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Outer rounds M (slaz).
    #[arg(long, default_value_t = 1)]
    pub outer: usize,
    /// JSON array of per-round Costs (oneway: sums to 1, simple: sums to 1/2).
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Record Alice's state at every round boundary.
    #[arg(long)]
    pub trace: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub lambda: u8,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub outer_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub rounds_list: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Grid::Zip)]
    pub grid: Grid,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Deliberate fault for testing the suite itself.
    #[arg(long, value_parser = parse_injection)]
    pub inject: Option<Injection>,
}

fn parse_protocol(s: &str) -> std::result::Result<ProtocolKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_injection(s: &str) -> std::result::Result<Injection, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Reads a schedule file; the required sum comes from the protocol.
pub fn load_schedule(path: &Path, kind: ProtocolKind) -> Result<Schedule> {
    let target = match kind {
        ProtocolKind::OneWay => ScheduleTarget::OneWay,
        ProtocolKind::Simple => ScheduleTarget::TwoWay,
        other => return Err(Error::InvalidConfig(format!("{other} does not take a schedule"))),
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("cannot read schedule {}: {e}", path.display())))?;
    let eps: Vec<f64> = serde_json::from_str(&text).map_err(|e| {
        Error::InvalidSchedule(format!(
            "{} must be a JSON array of positive numbers: {e}",
            path.display()
        ))
    })?;
    Schedule::new(eps, target)
}

impl ProtocolArgs {
    pub fn to_config(&self) -> Result<ProtocolConfig> {
        let mut cfg = ProtocolConfig::new(self.protocol);
        cfg.outer = self.outer;
        cfg.rounds = self.rounds.unwrap_or(1);
        if let Some(path) = &self.schedule {
            let s = load_schedule(path, self.protocol)?;
            if let Some(n) = self.rounds {
                if n != s.len() {
                    return Err(Error::InvalidConfig(format!(
                        "--rounds {n} disagrees with the {} entries of the schedule",
                        s.len()
                    )));
                }
            }
            cfg = cfg.with_schedule(s);
        }
        Ok(cfg.with_trace(self.trace))
    }
}

/// Parses `args` (program name first), executes, and returns the exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_usage() {
                EXIT_USAGE
            } else {
                EXIT_FAILURE
            }
        }
    }
}

fn warn(err: &mut dyn Write, warnings: &[String]) {
    for w in warnings {
        let _ = writeln!(err, "warning: {w}");
    }
}

pub fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Run(args) => {
            let cfg = args.protocol.to_config()?;
            let outcome = run(&cfg, args.lambda)?;
            let doc = ReportDocument::for_run(&cfg, &outcome)?;
            warn(err, &doc.warnings);
            match args.protocol.format {
                Format::Json => writeln!(out, "{}", doc.to_json()?)?,
                Format::Csv => write_runs_csv(&doc, &mut *out)?,
            }
        }
        Command::Pair(args) => {
            let cfg = args.to_config()?;
            let pair = run_pair(&cfg)?;
            warn(err, &pair.warnings);
            match args.format {
                Format::Json => writeln!(out, "{}", ReportDocument::for_pair(&cfg, &pair)?.to_json()?)?,
                Format::Csv => write_pair_csv(&cfg, &pair, &mut *out)?,
            }
        }
        Command::Sweep(args) => {
            let mode = match args.grid {
                Grid::Zip => GridMode::Zip,
                Grid::Cross => GridMode::Cross,
            };
            let grid = build_grid(&args.outer_list, &args.rounds_list, mode)?;
            let file =
                File::create(&args.out).map_err(|e| Error::Io(format!("cannot write {}: {e}", args.out.display())))?;
            let records = run_sweep(&grid)?;
            write_sweep_csv(&records, BufWriter::new(file))?;
            let _ = writeln!(err, "wrote {} rows to {}", records.len(), args.out.display());
        }
        Command::Verify(args) => {
            let manifest = run_suite(&VerifyOptions {
                seed: args.seed,
                inject: args.inject,
                ..Default::default()
            });
            writeln!(out, "{}", manifest.to_json()?)?;
            if !manifest.passed {
                for c in manifest.failed() {
                    let _ = writeln!(err, "FAILED {}", c.name);
                }
                return Ok(EXIT_FAILURE);
            }
        }
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with(std::iter::once("qcost").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn run_simple_one_round() {
        let (code, out, _) = call(&["run", "--protocol", "simple", "--lambda", "1", "--rounds", "1"]);
        assert_eq!(code, 0);
        let doc = ReportDocument::from_json(&out).unwrap();
        assert!((doc.runs[0].costs.q - 1.0).abs() < 1e-12);
        let a = doc.runs[0].amplitudes("A").unwrap();
        assert!((a[0].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((a[1].re + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(call(&["run", "--protocol", "simple", "--lambda", "2"]).0, 2);
        assert_eq!(call(&["run", "--protocol", "bb84", "--lambda", "0"]).0, 2);
        assert_eq!(
            call(&["run", "--protocol", "simple", "--lambda", "0", "--rounds", "0"]).0,
            2
        );
        assert_eq!(call(&["pair", "--protocol", "simple", "--lambda", "0"]).0, 2);
        assert_eq!(
            call(&["sweep", "--outer-list", "", "--rounds-list", "4", "--out", "x.csv"]).0,
            2
        );
        assert_eq!(
            call(&["sweep", "--outer-list", "4,x", "--rounds-list", "4", "--out", "x.csv"]).0,
            2
        );
        assert_eq!(
            call(&["sweep", "--outer-list", "4,8", "--rounds-list", "4", "--out", "x.csv"]).0,
            2
        );
        assert_eq!(
            call(&[
                "sweep",
                "--outer-list",
                "4",
                "--rounds-list",
                "16",
                "--out",
                "/nonexistent/dir/s.csv"
            ])
            .0,
            2
        );
        assert_eq!(call(&["verify", "--inject", "nothing"]).0, 2);
        assert_eq!(call(&[]).0, 2);
    }

    #[test]
    fn help_and_version_exit_0() {
        assert_eq!(call(&["--help"]).0, 0);
        assert_eq!(call(&["--version"]).0, 0);
    }

    #[test]
    fn schedule_is_checked_against_the_protocol() {
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("bad.json");
        std::fs::write(&bad, "[0.3, 0.3]").unwrap();
        let (code, _, err) = call(&[
            "run",
            "--protocol",
            "simple",
            "--lambda",
            "0",
            "--schedule",
            bad.to_str().unwrap(),
        ]);
        assert_eq!(code, 2);
        assert!(err.contains("expected 0.5"), "{err}");
        let (code, out, _) = call(&[
            "run",
            "--protocol",
            "oneway",
            "--lambda",
            "0",
            "--schedule",
            bad.to_str().unwrap(),
        ]);
        assert_eq!(code, 2, "{out}");
        let good = dir.path().join("good.json");
        std::fs::write(&good, "[0.2, 0.3]").unwrap();
        let (code, out, _) = call(&[
            "run",
            "--protocol",
            "simple",
            "--lambda",
            "0",
            "--schedule",
            good.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        assert_eq!(ReportDocument::from_json(&out).unwrap().config.rounds, 2);
        let junk = dir.path().join("junk.json");
        std::fs::write(&junk, "{\"eps\": 1}").unwrap();
        assert_eq!(
            call(&[
                "run",
                "--protocol",
                "simple",
                "--lambda",
                "0",
                "--schedule",
                junk.to_str().unwrap()
            ])
            .0,
            2
        );
        let p = good.to_str().unwrap();
        assert_eq!(
            call(&[
                "run",
                "--protocol",
                "simple",
                "--lambda",
                "0",
                "--rounds",
                "3",
                "--schedule",
                p
            ])
            .0,
            2
        );
        assert_eq!(
            call(&["run", "--protocol", "slaz", "--lambda", "0", "--schedule", p]).0,
            2
        );
    }

    #[test]
    fn csv_formats() {
        let (code, out, _) = call(&["run", "--protocol", "polarization", "--lambda", "0", "--format", "csv"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().next().unwrap(), "protocol,M,N,lambda,K,Khat,Q,transits");
        let (code, out, _) = call(&["pair", "--protocol", "polarization", "--format", "csv"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 3);
    }
}
