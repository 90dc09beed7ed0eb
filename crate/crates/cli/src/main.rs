mod commands;
mod report;

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bubble_reduce_core::integrals::Variant;
use bubble_reduce_core::profiles::MIN_DIMENSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Multipoint,
    Tower,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Multipoint => Variant::Multipoint,
            VariantArg::Tower => Variant::Tower,
        }
    }
}

/// Reduced-energy reports for sign-changing blow-up on the unit ball.
#[derive(Debug, Parser)]
#[command(name = "bubble-reduce", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long = "N", global = true, default_value_t = 7)]
    pub n: usize,
    #[arg(long, global = true, default_value_t = 1.0)]
    pub mu0: f64,
    /// Exponent of the `ε^α` term (recorded in the meta block).
    #[arg(long, global = true, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = VariantArg::Multipoint)]
    pub variant: VariantArg,
    /// Number of table or scan points.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Quadrature relative tolerance.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expansion constants a₁..a₄, b₁..b₄, C₁.
    Constants,
    /// Robin function, Green function to the origin, φ and the γ/τ table.
    Green,
    /// Axis family: φ, ν, ν' and the Hessian along t.
    Thm11,
    /// Polygon family with k equal bubbles (k in 2..=4).
    Thm12,
    /// γ₂ and ι₂ across (0, 1).
    Remark36,
    /// ι₂ and the sufficient-condition margin on the square's window.
    Prop37,
    /// Alternating square: windows, ι₃ roots and determinant signs.
    Thm13,
    /// Tower critical scales, reduced value and gᵢ Hessians at ζ = 0.
    Tower,
    /// Direct energy of the single-atom tower and its expansion fit.
    Energy {
        /// Comma-separated ε values.
        #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 3e-3, 1e-3])]
        eps: Vec<f64>,
    },
    /// Acceptance suite as a pass/fail report.
    VerifyAll {
        /// Comma-separated criterion ids (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
    },
}

pub enum Failure {
    Config(String),
    Compute(String),
}

impl From<bubble_reduce_core::Error> for Failure {
    fn from(e: bubble_reduce_core::Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

impl Cli {
    fn validate(&self) -> Result<(), Failure> {
        let bad = |m: String| Err(Failure::Config(m));
        if self.n < MIN_DIMENSION {
            return bad(format!("--N must be at least {MIN_DIMENSION}"));
        }
        if !(self.mu0 > 0.0 && self.mu0.is_finite()) {
            return bad("--mu0 must be positive".into());
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad("--tol must lie in (0, 1)".into());
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("--alpha must be positive".into());
        }
        if matches!(self.grid, Some(g) if g < 2) {
            return bad("--grid must be at least 2".into());
        }
        Ok(())
    }
}

fn set_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("BUBBLE_REDUCE_THREADS") {
        let n: usize = v.parse().map_err(|_| Failure::Config(format!("BUBBLE_REDUCE_THREADS={v} is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(e.to_string()))?;
    }
    Ok(())
}

fn emit(cli: &Cli, report: &report::Report) -> io::Result<()> {
    let mut sink: Box<dyn Write> = match &cli.out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    match cli.format {
        Format::Csv => {
            report.write_csv(&mut sink).map_err(io::Error::other)?;
            // keep stdout parseable when the table goes there
            let lines = report.summary_lines();
            if cli.out.is_some() {
                let mut o = io::stdout().lock();
                for l in lines {
                    writeln!(o, "{l}")?;
                }
            } else {
                let mut e = io::stderr().lock();
                for l in lines {
                    writeln!(e, "{l}")?;
                }
            }
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut sink, &report.to_json()).map_err(io::Error::other)?;
            writeln!(sink)?;
        }
    }
    sink.flush()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli.validate().and_then(|_| set_threads()).and_then(|_| commands::dispatch(&cli));
    match result {
        Ok((report, all_passed)) => {
            if let Err(e) = emit(&cli, &report).or_else(|e| if e.kind() == io::ErrorKind::BrokenPipe { Ok(()) } else { Err(e) }) {
                eprintln!("error: cannot write report: {e}");
                return ExitCode::from(1);
            }
            if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
