//! Command implementations behind the `sgve` binary. Each command writes to a
//! caller-supplied sink so output can be captured and compared byte for byte.

use std::io::Write;

use thiserror::Error;

use sgve::pf::{growth_report, PfError};
use sgve::values::value_iteration_series;
use sgve::{discounted_value, parametric, Operator, ValueError};

pub mod files;
pub mod suites;

pub use files::{load_game, load_map, GameFile, LoadedGame, MapFile};
pub use suites::{run_criterion, run_suite, Check, CriterionReport, Suite};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: schema, expressions, flags, paths.
    #[error("{0}")]
    Input(String),
    /// A solver or check failed on valid input.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<sgve::Error> for CliError {
    fn from(e: sgve::Error) -> Self {
        use sgve::Error as E;
        match e {
            E::Expr(_) | E::Game(_) => CliError::Input(e.to_string()),
            E::Pf(PfError::NotConverged { .. }) => CliError::Numerical(e.to_string()),
            E::Pf(_) | E::Parametric(parametric::ParametricError::ZOutOfRange(_)) => CliError::Input(e.to_string()),
            E::Shapley(sgve::ShapleyError::Form { .. }) => CliError::Input(e.to_string()),
            E::Value(
                ValueError::ZeroStages
                | ValueError::BadDiscount(_)
                | ValueError::BadAccuracy(_)
                | ValueError::TooFewPoints { .. }
                | ValueError::BadStart { .. }
                | ValueError::DimensionMismatch { .. },
            ) => CliError::Input(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<PfError> for CliError {
    fn from(e: PfError) -> Self {
        sgve::Error::from(e).into()
    }
}

fn io(e: std::io::Error) -> CliError {
    CliError::Input(format!("write failed: {e}"))
}

/// Fixed 10-decimal rendering with trailing zeros removed, and no `-0`.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Parses a comma-separated list.
pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Input(format!("{what}: cannot parse `{}`", s.trim())))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Discounted(f64),
    Stages(usize),
}

/// Per-state values of a game, with the solver gaps of the last operator
/// evaluation and the fixed-point residual or stage count.
pub fn cmd_solve(
    out: &mut impl Write,
    path: &str,
    resolution: usize,
    horizon: Horizon,
    tol: f64,
) -> Result<(), CliError> {
    let game = files::load_game(path)?;
    let op = game.operator(resolution, tol)?;
    let (values, gaps, tail) = match horizon {
        Horizon::Discounted(lambda) => {
            let d = discounted_value(&op, lambda, tol.max(1e-12))?;
            let point = d.values.scaled((1.0 - lambda) / lambda);
            let (_, gaps) = op.apply_detailed(&point)?;
            (
                d.values.0,
                gaps,
                vec![
                    format!("iterations: {}", d.iterations),
                    format!("residual: {:.3e}", d.residual),
                ],
            )
        }
        Horizon::Stages(n) => {
            if n == 0 {
                return Err(CliError::Input("--n must be at least 1".into()));
            }
            let mut f = vec![0.0; op.dim()];
            let mut gaps = vec![0.0; op.dim()];
            for _ in 0..n {
                let (next, g) = op.apply_detailed(&f)?;
                f = next.0;
                gaps = g;
            }
            let v = f.iter().map(|x| x / n as f64).collect();
            (v, gaps, vec![format!("stages: {n}")])
        }
    };
    let mode = match horizon {
        Horizon::Discounted(l) => format!("discounted, lambda = {}", fmt_num(l)),
        Horizon::Stages(n) => format!("{n}-stage average"),
    };
    writeln!(out, "game: {}", game.name).map_err(io)?;
    writeln!(out, "mode: {mode}").map_err(io)?;
    writeln!(out, "resolution: {resolution}").map_err(io)?;
    for (k, (v, g)) in values.iter().zip(&gaps).enumerate() {
        writeln!(out, "state {}: {} (gap {g:.3e})", k + 1, fmt_num(*v)).map_err(io)?;
    }
    for line in tail {
        writeln!(out, "{line}").map_err(io)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurveGrid {
    Lambda(Vec<f64>),
    Stages(Vec<usize>),
}

/// CSV of values along a λ-grid (with residuals) or an n-grid (with stage
/// counts).
pub fn cmd_curve(
    out: impl Write,
    path: &str,
    resolution: usize,
    grid: &CurveGrid,
    tol: f64,
) -> Result<(), CliError> {
    let game = files::load_game(path)?;
    let op = game.operator(resolution, tol)?;
    let d = op.dim();
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| CliError::Input(format!("write failed: {e}"));
    let state_cols = (1..=d).map(|k| format!("v{k}"));
    match grid {
        CurveGrid::Lambda(lambdas) => {
            if lambdas.is_empty() {
                return Err(CliError::Input("empty lambda grid".into()));
            }
            let rows = sgve::par::try_map_indexed(lambdas.len(), |j| discounted_value(&op, lambdas[j], tol.max(1e-12)))?;
            w.write_record(std::iter::once("lambda".to_string()).chain(state_cols).chain(["residual".into()]))
                .map_err(csv_err)?;
            for r in rows {
                let mut rec = vec![fmt_num(r.lambda)];
                rec.extend(r.values.iter().map(|v| fmt_num(*v)));
                rec.push(format!("{:.3e}", r.residual));
                w.write_record(rec).map_err(csv_err)?;
            }
        }
        CurveGrid::Stages(ns) => {
            if ns.is_empty() {
                return Err(CliError::Input("empty n grid".into()));
            }
            let rows = value_iteration_series(&op, ns)?;
            w.write_record(std::iter::once("n".to_string()).chain(state_cols).chain(["iterations".into()]))
                .map_err(csv_err)?;
            for (n, v) in ns.iter().zip(rows) {
                let mut rec = vec![n.to_string()];
                rec.extend(v.iter().map(|x| fmt_num(*x)));
                rec.push(n.to_string());
                w.write_record(rec).map_err(csv_err)?;
            }
        }
    }
    w.flush().map_err(io)
}

/// Runs the suite, prints one row per check and one verdict per criterion.
/// Returns whether everything passed.
pub fn cmd_bench(out: &mut impl Write, suite: Suite, tol: f64) -> Result<bool, CliError> {
    if !(tol > 0.0) {
        return Err(CliError::Input(format!("tolerance must be positive, got {tol}")));
    }
    let reports = suites::run_suite(suite, tol);
    for r in &reports {
        writeln!(out, "criterion {}: {}", r.id, r.title).map_err(io)?;
        for c in &r.checks {
            writeln!(
                out,
                "  {:<4}  {:<48}  measured {:<16}  expected {}",
                if c.pass { "ok" } else { "FAIL" },
                c.case,
                c.measured,
                c.expected
            )
            .map_err(io)?;
        }
    }
    writeln!(out).map_err(io)?;
    for r in &reports {
        writeln!(out, "{}", r.summary()).map_err(io)?;
    }
    Ok(reports.iter().all(CriterionReport::pass))
}

/// Growth rate of a map from `n` steps, with the Cauchy difference to `2n`.
pub fn cmd_growth(out: &mut impl Write, path: &str, n: usize, e: Option<&[f64]>) -> Result<(), CliError> {
    let map = files::load_map(path)?;
    let ones = vec![1.0; map.dim()];
    let e = e.unwrap_or(&ones);
    let rep = growth_report(&map, e, n)?;
    let rate: Vec<String> = rep.rate.iter().map(|x| fmt_num(*x)).collect();
    writeln!(out, "{}", rate.join(" ")).map_err(io)?;
    writeln!(out, "cauchy difference (n = {n} vs {}): {:.3e}", 2 * n, rep.cauchy).map_err(io)?;
    Ok(())
}

/// CSV of McKinsey grid values against the closed form along a z-grid.
pub fn cmd_zsweep(out: impl Write, zs: &[f64], resolution: usize, tol: f64) -> Result<(), CliError> {
    if zs.is_empty() {
        return Err(CliError::Input("empty z grid".into()));
    }
    let rows = sgve::par::try_map_indexed(zs.len(), |k| -> Result<(f64, f64), sgve::Error> {
        let oracle = parametric::mckinsey_value(zs[k])?;
        Ok((parametric::mckinsey_grid_value(zs[k], resolution, tol)?, oracle))
    })?;
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| CliError::Input(format!("write failed: {e}"));
    w.write_record(["z", "grid_value", "oracle_value", "error"]).map_err(csv_err)?;
    for (z, (v, o)) in zs.iter().zip(rows) {
        w.write_record([fmt_num(*z), fmt_num(v), fmt_num(o), format!("{:.3e}", (v - o).abs())])
            .map_err(csv_err)?;
    }
    w.flush().map_err(io)
}

/// Output sink for `--out`: a file, or stdout for `-`.
pub fn open_out(path: &str) -> Result<Box<dyn Write>, CliError> {
    if path == "-" {
        return Ok(Box::new(std::io::stdout()));
    }
    std::fs::File::create(path)
        .map(|f| Box::new(std::io::BufWriter::new(f)) as Box<dyn Write>)
        .map_err(|e| CliError::Input(format!("{path}: {e}")))
}

/// Configures the global worker pool from `SGVE_THREADS` (`0` or unset
/// means one thread per core).
pub fn configure_threads(value: Option<&str>) -> Result<usize, CliError> {
    let n = match value {
        None => 0,
        Some(s) => s
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Input(format!("SGVE_THREADS must be a nonnegative integer, got `{s}`")))?,
    };
    #[cfg(feature = "parallel")]
    {
        // a second initialization only happens in tests; the first one wins
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        Ok(rayon::current_num_threads())
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        Ok(1)
    }
}
