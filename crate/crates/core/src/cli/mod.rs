//! The `monotest` command line.
//!
//! Exit status is 0 on success, 1 on a usage error and 2 when a computation
//! fails. Failures print one line to standard error:
//! `error: kind=<kind> message=<text>`.

mod commands;
mod svg;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::exact::{self, Rational};
use crate::population::{Design, TypeCounts};

pub use svg::histogram_svg;

/// Version of the JSON documents written by every command.
pub const SCHEMA_VERSION: u32 = 1;

/// Header of power-scan CSV output.
pub const CSV_HEADER: &str = "n_at,n_nt,n_d,n_c,power,wap,size";

#[derive(Debug, Parser)]
#[command(name = "monotest", version, about = "Design-based tests of treatment-effect monotonicity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}


#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact outcome pmf of a type vector.
    Pmf(RunArgs),
    /// Outcome support of a type vector.
    Support(RunArgs),
    /// Round-trip a type vector through the moments of its pmf.
    Identify(RunArgs),
    /// Most powerful level-alpha test against one alternative.
    MpTest(RunArgs),
    /// MP power and WAP for every alternative.
    PowerScan(RunArgs),
    /// WAP of the MP test around its own alternative, with the upper bound.
    Wap(RunArgs),
    /// Upper bound on WAP of any level-alpha test.
    WapBound(RunArgs),
    /// Unbiased test for equal arms.
    Unbiased(RunArgs),
    /// Upper bounds on the power of unbiased tests at one alternative.
    UnbiasedBound(RunArgs),
    /// Never-updating prior, its posteriors, and the parity lattice.
    BayesDemo(RunArgs),
    /// Cross-check the exact pmf against enumeration and Monte Carlo.
    OracleVerify(RunArgs),
}

impl Command {
    fn parts(&self) -> (&'static str, &RunArgs) {
        match self {
            Command::Pmf(a) => ("pmf", a),
            Command::Support(a) => ("support", a),
            Command::Identify(a) => ("identify", a),
            Command::MpTest(a) => ("mp-test", a),
            Command::PowerScan(a) => ("power-scan", a),
            Command::Wap(a) => ("wap", a),
            Command::WapBound(a) => ("wap-bound", a),
            Command::Unbiased(a) => ("unbiased", a),
            Command::UnbiasedBound(a) => ("unbiased-bound", a),
            Command::BayesDemo(a) => ("bayes-demo", a),
            Command::OracleVerify(a) => ("oracle-verify", a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
    Svg,
}

/// Flags shared by every subcommand; each command reads the ones it needs.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Population size.
    #[arg(long)]
    pub n: Option<u32>,
    /// Number of treated units (default: n/2 rounded down).
    #[arg(long)]
    pub n1: Option<u32>,
    /// Test level.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Type counts as at,nt,d,c.
    #[arg(long)]
    pub theta: Option<TypeCounts>,
    /// Prior null probability for bayes-demo, as p/q or a decimal.
    #[arg(long, value_parser = parse_rational)]
    pub c: Option<Rational>,
    /// Violation share for wap-bound, as p/q or a decimal.
    #[arg(long, value_parser = parse_rational)]
    pub v: Option<Rational>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Monte Carlo draws.
    #[arg(long, default_value_t = 1_000_000)]
    pub reps: u64,
    /// Write the result here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Also solve the MP LP in exact rational arithmetic.
    #[arg(long)]
    pub exact_lp: bool,
    /// Largest number of assignments to enumerate.
    #[arg(long, default_value_t = crate::oracle::DEFAULT_CAP)]
    pub cap: u64,
    /// Worker threads for parallel work.
    #[arg(long, env = "MONOTEST_THREADS")]
    pub threads: Option<usize>,
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    exact::parse(s).map_err(|e| e.to_string())
}

/// Validated command and flags.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: &'static str,
    pub args: RunArgs,
}

pub(crate) enum Failure {
    Usage(String),
    Compute(Error),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

pub(crate) type CliResult<T> = std::result::Result<T, Failure>;

macro_rules! usage {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err($crate::cli::Failure::Usage(format!($($arg)*)));
        }
    };
}
pub(crate) use usage;

impl RunConfig {
    pub(crate) fn n(&self) -> CliResult<u32> {
        self.args
            .n
            .ok_or_else(|| Failure::Usage(format!("{} needs --n", self.command)))
    }

    pub(crate) fn design(&self) -> CliResult<Design> {
        let n = self.n()?;
        let n1 = self.args.n1.unwrap_or(n / 2);
        Design::new(n, n1).map_err(|e| Failure::Usage(e.to_string()))
    }

    pub(crate) fn theta(&self, design: Design) -> CliResult<TypeCounts> {
        let theta = self
            .args
            .theta
            .ok_or_else(|| Failure::Usage(format!("{} needs --theta at,nt,d,c", self.command)))?;
        design
            .check_theta(&theta)
            .map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(theta)
    }

    pub(crate) fn alternative(&self, design: Design) -> CliResult<TypeCounts> {
        let theta = self.theta(design)?;
        usage!(!theta.is_null(), "--theta {theta} must violate monotonicity (n_d > 0 and n_c > 0)");
        Ok(theta)
    }

    pub(crate) fn alpha(&self) -> CliResult<f64> {
        let a = self.args.alpha;
        usage!(a > 0.0 && a < 1.0, "--alpha must lie in (0, 1), got {a}");
        Ok(a)
    }
}

/// Parses `args` (including the program name), runs the command, and
/// returns the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let text = e.to_string();
            let first = text
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ")
                .to_string();
            let _ = writeln!(stderr, "error: kind=usage message={first}");
            return 1;
        }
    };
    let (command, args) = cli.command.parts();
    let config = RunConfig {
        command,
        args: args.clone(),
    };
    match execute(&config, stdout) {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(stderr, "error: kind=usage message={}", one_line(&m));
            1
        }
        Err(Failure::Compute(e)) => {
            let _ = writeln!(stderr, "error: kind={} message={}", e.kind(), one_line(&e.to_string()));
            2
        }
        Err(Failure::Io(e)) => {
            let _ = writeln!(stderr, "error: kind=io message={}", one_line(&e.to_string()));
            2
        }
    }
}

/// Creates the output file on first write, so a command rejected before it
/// produces output leaves no file behind.
struct LazyFile<'a> {
    path: &'a PathBuf,
    file: Option<BufWriter<File>>,
}

impl Write for LazyFile<'_> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        if self.file.is_none() {
            self.file = Some(BufWriter::new(File::create(self.path)?));
        }
        self.file.as_mut().expect("opened above").write(buf)
    }

    fn flush(&mut self) -> io::Result<()> {
        match &mut self.file {
            Some(f) => f.flush(),
            None => Ok(()),
        }
    }
}

fn one_line(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

fn execute(config: &RunConfig, stdout: &mut dyn Write) -> CliResult<()> {
    if let Some(t) = config.args.threads {
        usage!(t >= 1, "--threads must be at least 1");
        // a pool may already exist when the CLI is driven in-process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match &config.args.output {
        Some(path) => {
            let mut w = LazyFile { path, file: None };
            commands::dispatch(config, &mut w)?;
            w.flush()?;
        }
        None => {
            let mut w = BufWriter::new(stdout);
            commands::dispatch(config, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}
