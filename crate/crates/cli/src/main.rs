use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use halfline::kernels::{Convention, EquationKind, KernelKind, KernelSpec, PotentialParams};
use halfline::verify::{Suite, VerifyConfig};
use halfline::Error;

mod commands;
mod grid;

use grid::Axis;

const THREADS_ENV: &str = "HALFLINE_THREADS";

/// Propagators of the heat and Schrödinger equations on the half-line with
/// potential k/x^2 + omega^2 x^2.
///
/// Thread count comes from HALFLINE_THREADS (default: available parallelism).
/// Output is byte-identical for any thread count.
#[derive(Parser, Debug)]
#[command(name = "halfline", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Deliberately corrupt a component (testing only).
    #[arg(long, global = true, hide = true, value_enum)]
    inject_fault: Option<Fault>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Fault {
    Bessel,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate a kernel over a (t, x) grid.
    ///
    /// CSV columns: t,x,log_magnitude,magnitude,phase,flag. The flag is
    /// "caustic" on rows where the Schrödinger kernel focuses; those rows carry
    /// inf in log_magnitude and magnitude and NaN in phase.
    Eval(EvalArgs),
    /// Run a verification suite and write a JSON report.
    ///
    /// Exit status 0 if every check passes, 1 if any fails, 2 on a bad configuration.
    Verify(VerifyArgs),
    /// Compare the closed form with an independent oracle.
    ///
    /// CSV columns: t,x,closed_re,closed_im,oracle_re,oracle_im,relative_diff.
    /// The max/median summary goes to stderr (CSV) or the "summary" key (JSON).
    Compare(CompareArgs),
}

#[derive(Args, Debug, Clone, Copy)]
struct ParamArgs {
    /// Inverse-square strength, k >= -1/4.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    k: f64,
    /// Oscillator frequency, omega >= 0 (0 selects the free kernel).
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    omega: f64,
    /// Source point, xi > 0.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    xi: f64,
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum KindArg {
    Heat,
    Schrodinger,
}

impl KindArg {
    fn equation(self) -> EquationKind {
        match self {
            KindArg::Heat => EquationKind::Heat,
            KindArg::Schrodinger => EquationKind::Schrodinger,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ConventionArg {
    /// u_t = (1/2) u_xx - ... (time scale 1)
    Half,
    /// u_t = u_xx - ... (time scale 2)
    Unit,
}

#[derive(Args, Debug)]
struct KernelArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Time convention (default: the kernel's standard one).
    #[arg(long, value_enum)]
    convention: Option<ConventionArg>,
    #[command(flatten)]
    params: ParamArgs,
}

impl KernelArgs {
    fn spec(&self) -> Result<KernelSpec, Error> {
        let p = PotentialParams::new(self.params.k, self.params.omega)?;
        let kind = KernelKind::for_equation(self.kind.equation(), p.omega());
        let convention = match self.convention {
            Some(ConventionArg::Half) => Convention::HalfFactor,
            Some(ConventionArg::Unit) => Convention::UnitFactor,
            None => kind.standard_convention(),
        };
        KernelSpec::new(kind, convention, p, self.params.xi)
    }
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    /// Times: a value `T` or an inclusive range `START:END:COUNT`.
    #[arg(long, allow_hyphen_values = true)]
    t: Axis,
    /// Positions: a value `X` or an inclusive range `START:END:COUNT`.
    #[arg(long, allow_hyphen_values = true)]
    x: Axis,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: Suite,
    #[command(flatten)]
    params: ParamArgs,
    /// Replace the tolerance of every upper-bounded check.
    #[arg(long)]
    tol: Option<f64>,
    /// Report format (default json).
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum OracleArg {
    /// Eigenfunction expansion (heat kernels with omega > 0).
    Spectral,
    /// Crank-Nicolson evolution of the kernel from t0 to t0 + span.
    Cn,
    /// The closed form against itself.
    #[value(name = "self")]
    SelfCheck,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long, value_enum)]
    oracle: OracleArg,
    /// Times (ignored by the cn oracle, which compares at t0 + span).
    #[arg(long, default_value = "0.2:1:5", allow_hyphen_values = true)]
    t: Axis,
    #[arg(long, default_value = "0.3:3:10", allow_hyphen_values = true)]
    x: Axis,
    /// Pass threshold: max relative difference (spectral, self) or L2
    /// relative error (cn). Defaults 1e-9, 0 and 5e-3.
    #[arg(long)]
    tol: Option<f64>,
    /// Spectral terms (default: enough for a tail bound below 1e-12 relative, at most 4096).
    #[arg(long)]
    terms: Option<usize>,
    #[arg(long, default_value_t = 1e-3)]
    t0: f64,
    #[arg(long, default_value_t = 0.3)]
    span: f64,
    /// Grid spacing for cn.
    #[arg(long, default_value_t = 20.0 / 4096.0)]
    h: f64,
    #[arg(long, default_value_t = 1e-4)]
    dt: f64,
    /// Right boundary for cn.
    #[arg(long, default_value_t = 20.0)]
    x_max: f64,
    #[command(flatten)]
    output: OutputArgs,
}

/// How a command ended; maps onto the exit-code contract.
pub enum Failure {
    Config(String),
    Checks(String),
    Io(io::Error),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Config(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Config(e.to_string()))
}

pub fn open_output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    if let Some(Fault::Bessel) = cli.inject_fault {
        halfline::specfun::fault::set_broken_bessel(true);
    }
    match cli.command {
        Command::Eval(a) => {
            let spec = a.kernel.spec().map_err(|e| Failure::Config(e.to_string()))?;
            commands::eval(spec, &a.t, &a.x, &a.output)
        }
        Command::Verify(a) => {
            let cfg = VerifyConfig { k: a.params.k, omega: a.params.omega, xi: a.params.xi, tol: a.tol };
            cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
            commands::verify(a.suite, &cfg, a.format, &a.out)
        }
        Command::Compare(a) => {
            let spec = a.kernel.spec().map_err(|e| Failure::Config(e.to_string()))?;
            commands::compare(spec, &a)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks(msg)) => {
            eprintln!("halfline: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("halfline: invalid configuration: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("halfline: {e}");
            ExitCode::from(1)
        }
    }
}
