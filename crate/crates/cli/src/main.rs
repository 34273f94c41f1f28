use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sgve_cli::{
    cmd_bench, cmd_curve, cmd_growth, cmd_solve, cmd_zsweep, configure_threads, open_out, parse_list, CliError,
    CurveGrid, Horizon, Suite,
};

/// Values of zero-sum stochastic games and growth rates of order-preserving maps.
///
/// Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
/// SGVE_THREADS caps the worker threads (0 = one per core).
#[derive(Debug, Parser)]
#[command(name = "sgve", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct SolveHorizon {
    /// Discount weight in (0, 1].
    #[arg(long)]
    lambda: Option<f64>,
    /// Number of stages.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct CurveGridArgs {
    /// Comma-separated discount weights.
    #[arg(long)]
    lambda_grid: Option<String>,
    /// Comma-separated stage counts.
    #[arg(long)]
    n_grid: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Discounted or n-stage values of a game file or `bench:exshap` / `bench:mckinsey`.
    Solve {
        file: String,
        /// Grid points per action coordinate.
        #[arg(long, default_value_t = 21)]
        resolution: usize,
        #[command(flatten)]
        horizon: SolveHorizon,
        /// Matrix-game duality gap and fixed-point accuracy.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// CSV of values along a grid of discount weights or stage counts.
    Curve {
        file: String,
        #[arg(long, default_value_t = 21)]
        resolution: usize,
        #[command(flatten)]
        grid: CurveGridArgs,
        /// Output path, `-` for stdout.
        #[arg(long, default_value = "-")]
        out: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Checks against closed forms and oracles; nonzero exit on any failure.
    Bench {
        /// mckinsey, exshap, properties, pf or all.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Geometric growth rate of a map file.
    Growth {
        file: String,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        /// Comma-separated positive starting vector (default all ones).
        #[arg(long)]
        e: Option<String>,
    },
    /// CSV of McKinsey grid values against the closed form along a z-grid.
    Zsweep {
        /// Comma-separated values in (0, 1].
        #[arg(long, default_value = "0.1,0.25,0.5,0.75,1")]
        z: String,
        #[arg(long, default_value_t = 201)]
        resolution: usize,
        #[arg(long, default_value = "-")]
        out: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Solve {
            file,
            resolution,
            horizon,
            tol,
        } => {
            let horizon = match (horizon.lambda, horizon.n) {
                (Some(l), _) => Horizon::Discounted(l),
                (_, Some(n)) => Horizon::Stages(n),
                _ => unreachable!("clap enforces one of --lambda / --n"),
            };
            cmd_solve(&mut out, &file, resolution, horizon, tol)
        }
        Command::Curve {
            file,
            resolution,
            grid,
            out: path,
            tol,
        } => {
            let grid = match (grid.lambda_grid, grid.n_grid) {
                (Some(l), _) => CurveGrid::Lambda(parse_list(&l, "--lambda-grid")?),
                (_, Some(n)) => CurveGrid::Stages(parse_list(&n, "--n-grid")?),
                _ => unreachable!("clap enforces one of the grids"),
            };
            // validate inputs before touching the output path
            let sink = open_out(&path)?;
            cmd_curve(sink, &file, resolution, &grid, tol)
        }
        Command::Bench { suite, tol } => {
            let suite = Suite::parse(&suite)?;
            if cmd_bench(&mut out, suite, tol)? {
                Ok(())
            } else {
                Err(CliError::Numerical("some checks failed".into()))
            }
        }
        Command::Growth { file, n, e } => {
            let e = e.map(|s| parse_list::<f64>(&s, "--e")).transpose()?;
            cmd_growth(&mut out, &file, n, e.as_deref())
        }
        Command::Zsweep {
            z,
            resolution,
            out: path,
            tol,
        } => {
            let zs = parse_list::<f64>(&z, "--z")?;
            cmd_zsweep(open_out(&path)?, &zs, resolution, tol)
        }
    }?;
    out.flush().map_err(|e| CliError::Input(format!("write failed: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let threads = std::env::var("SGVE_THREADS").ok();
    let result = configure_threads(threads.as_deref()).and_then(|_| run(cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
