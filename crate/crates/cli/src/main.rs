//! `krylovlab`: run the experiment catalog, solve Matrix Market systems,
//! evaluate CG bounds and build systems with prescribed convergence.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Parser, Debug)]
#[command(name = "krylovlab", version, about = "Krylov subspace methods laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the experiment catalog, one entry per line.
    List {
        /// Also print every parameter with its default.
        #[arg(long)]
        params: bool,
    },
    /// Run catalog entries and write their series as CSV (and SVG).
    Run(RunArgs),
    /// Solve `A x = b` for a Matrix Market matrix and print a trace summary.
    Solve(SolveArgs),
    /// Condition-number bound, min-max bound and worst-case value for a spectrum.
    Bounds(BoundsArgs),
    /// Build a system on which CG or GMRES follows a prescribed curve.
    Construct(ConstructArgs),
    /// Header, size and estimated condition number of a Matrix Market file.
    MmInfo(MmInfoArgs),
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("which").required(true).args(["name", "all", "config"]))]
pub struct RunArgs {
    /// Catalog entry to run.
    #[arg(long)]
    pub name: Option<String>,
    /// Run the whole catalog; each entry writes into `<out>/<name>/`.
    #[arg(long)]
    pub all: bool,
    /// JSON batch file: `{"seed": S, "runs": [{"name": ..., "seed": ..., "set": {key: value}}]}`.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Parameter override with a dotted key, e.g. `--set rho.left=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_assignment)]
    pub overrides: Vec<(String, String)>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Also render one SVG per series group.
    #[arg(long)]
    pub svg: bool,
    /// Matrix Market directory (default: $KRYLOVLAB_DATA, then `data`).
    #[arg(long, value_name = "DIR")]
    pub data: Option<PathBuf>,
    /// Rerun exact-arithmetic CG arms natively with full reorthogonalization
    /// and require agreement.
    #[arg(long)]
    pub cross_check: bool,
    /// Entries run concurrently in batch mode.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: u16,
}

fn parse_assignment(s: &str) -> Result<(String, String), String> {
    krylovlab::experiments::ParamSet::parse_assignment(s).map_err(|_| "expected KEY=VALUE".to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Cg,
    Gmres,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    Native,
    Extended,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PrecondKind {
    None,
    /// Diagonal of A.
    Jacobi,
    /// Incomplete Cholesky with drop tolerance `--drop-tol`.
    Ichol,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long, value_name = "FILE")]
    pub matrix: PathBuf,
    #[arg(long, value_enum)]
    pub method: Method,
    #[arg(long, value_enum, default_value_t = Precision::Native)]
    pub precision: Precision,
    #[arg(long, value_enum, default_value_t = PrecondKind::None)]
    pub precond: PrecondKind,
    #[arg(long, default_value_t = 1e-2)]
    pub drop_tol: f64,
    /// Relative residual at which to stop.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Iteration cap (default: the matrix order for GMRES, 10x for CG).
    #[arg(long)]
    pub maxit: Option<usize>,
    /// Right-hand side (`.mtx` array or a list of numbers); default ones/sqrt(N).
    #[arg(long, value_name = "FILE")]
    pub rhs: Option<PathBuf>,
    /// Print the per-iteration residual table.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    /// Eigenvalues, whitespace or comma separated.
    #[arg(long, value_name = "FILE")]
    pub spectrum: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct ConstructArgs {
    #[arg(long, value_enum)]
    pub kind: Method,
    /// Prescribed norms: two columns for CG, one for GMRES, or JSON.
    #[arg(long, value_name = "FILE")]
    pub curve: PathBuf,
    /// GMRES eigenvalues, `re` or `re im` per line (default 1, 2, ..., N).
    #[arg(long, value_name = "FILE")]
    pub eigs: Option<PathBuf>,
    /// Output prefix: writes `<prefix>_matrix.mtx`, `<prefix>_rhs.mtx`, `<prefix>_solution.mtx`.
    #[arg(long, default_value = "constructed")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct MmInfoArgs {
    pub file: PathBuf,
    /// Largest order for which the condition number is computed.
    #[arg(long, default_value_t = 2000)]
    pub max_order: usize,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}:{line}: {message}", path.display())]
    Input { path: PathBuf, line: usize, message: String },
    #[error("{0}")]
    Failed(String),
    #[error(transparent)]
    Experiment(#[from] krylovlab::experiments::ExperimentError),
    #[error(transparent)]
    Io(#[from] krylovlab::io::IoError),
    #[error(transparent)]
    Krylov(#[from] krylovlab::krylov::KrylovError),
    #[error(transparent)]
    Construction(#[from] krylovlab::constructions::ConstructionError),
    #[error(transparent)]
    Analysis(#[from] krylovlab::analysis::AnalysisError),
    #[error(transparent)]
    Problem(#[from] krylovlab::problems::ProblemError),
    #[error(transparent)]
    Linalg(#[from] krylovlab::linalg::LinalgError),
    #[error("writing to standard output: {0}")]
    Stdout(#[from] std::io::Error),
}

fn main() -> ExitCode {
    // Usage errors exit with 2, expected failures with 1.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let mut out = std::io::stdout().lock();
    let res = match cli.command {
        Command::List { params } => commands::list(&mut out, params),
        Command::Run(a) => commands::run(&mut out, &a),
        Command::Solve(a) => commands::solve(&mut out, &a),
        Command::Bounds(a) => commands::bounds(&mut out, &a),
        Command::Construct(a) => commands::construct(&mut out, &a),
        Command::MmInfo(a) => commands::mm_info(&mut out, &a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        // A closed pipe (`krylovlab list | head`) is not a failure.
        Err(CliError::Stdout(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
