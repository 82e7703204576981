use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use misdc_core::exec::{self, Execution};
use misdc_core::harness::{self, Format, Mode, StudyConfig};
use misdc_core::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    OrderStudy,
    RegionScan,
    LimitCheck,
    SingleRun,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::OrderStudy => Mode::OrderStudy,
            ModeArg::RegionScan => Mode::RegionScan,
            ModeArg::LimitCheck => Mode::LimitCheck,
            ModeArg::SingleRun => Mode::SingleRun,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// MISDC convergence studies, stability region scans and limit checks.
#[derive(Debug, Parser)]
#[command(name = "misdc-kit", version)]
struct Cli {
    mode: ModeArg,
    /// Flat `key = value` study file.
    #[arg(long)]
    config: PathBuf,
    /// Output path; overrides `out` in the config. Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `format` in the config.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

fn thread_cap() -> Result<Option<usize>, Error> {
    match std::env::var("MISDC_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!(
                "MISDC_THREADS must be a positive integer, got '{v}'"
            ))),
        },
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<Option<String>, Error> {
    let mode: Mode = cli.mode.into();
    let config = StudyConfig::from_file(&cli.config)?;
    if let Some(m) = config.mode {
        if m != mode {
            return Err(Error::Config(format!(
                "config declares mode {m} but {mode} was requested"
            )));
        }
    }
    let format = match cli.format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Json) => Format::Json,
        None => config.format,
    };
    if let Some(n) = thread_cap()? {
        exec::limit_threads(n);
    }

    let out = cli.out.or_else(|| config.out.clone());
    let writer: Box<dyn Write> = match &out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let outcome = harness::run_study(mode, &config, format, Execution::default(), writer)?;
    Ok(outcome.solver_failure)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(failure)) => {
            eprintln!("misdc-kit: solve failed, report is partial: {failure}");
            ExitCode::from(EXIT_SOLVER)
        }
        Err(e) if e.is_broken_pipe() => ExitCode::SUCCESS,
        Err(e) if e.is_solver_failure() => {
            eprintln!("misdc-kit: {e}");
            ExitCode::from(EXIT_SOLVER)
        }
        Err(e) => {
            eprintln!("misdc-kit: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
