//! Value algorithms built on a Shapley-type operator: n-stage values,
//! discounted fixed points, vanishing-discount extrapolation, rate fitting,
//! operator perturbation bounds and Monte-Carlo evaluation of stationary
//! profiles.

use std::ops::Deref;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fit;
use crate::game::DiscretizedGame;
use crate::par;
use crate::shapley::{sup_dist, Operator};
use crate::Error;

/// Iteration cap for the discounted fixed point.
pub const MAX_FIXED_POINT_ITERATIONS: usize = 1_000_000;
/// Increments below this are treated as zero by the curve fits.
pub const FLAT_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValueError {
    #[error("stage count must be at least 1")]
    ZeroStages,
    #[error("discount factor {0} is outside (0, 1]")]
    BadDiscount(f64),
    #[error("accuracy {0} must be positive")]
    BadAccuracy(f64),
    #[error("fixed point not reached after {iterations} iterations (last step {last_step:e})")]
    Budget { iterations: usize, last_step: f64 },
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("only {usable} points differ from the limit by more than 1e-12; the series has converged")]
    Converged { usable: usize },
    #[error("invalid strategy for state {state}: {reason}")]
    InvalidStrategy { state: usize, reason: String },
    #[error("start state {start} out of range for {states} states")]
    BadStart { start: usize, states: usize },
    #[error("operators act on different dimensions ({0} and {1})")]
    DimensionMismatch(usize, usize),
    #[error("degenerate fit: {0}")]
    Degenerate(String),
}

/// Element of `R^d` indexed by states.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueVector(pub Vec<f64>);

impl ValueVector {
    pub fn zeros(d: usize) -> Self {
        ValueVector(vec![0.0; d])
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn sup_dist(&self, other: &[f64]) -> f64 {
        sup_dist(&self.0, other)
    }

    pub fn scaled(&self, s: f64) -> ValueVector {
        ValueVector(self.0.iter().map(|x| x * s).collect())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ValueVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ValueVector {
    fn from(v: Vec<f64>) -> Self {
        ValueVector(v)
    }
}

/// `v_n = Ψⁿ(0)/n`.
pub fn value_iteration<O: Operator + ?Sized>(op: &O, n: usize) -> Result<ValueVector, Error> {
    Ok(value_iteration_series(op, &[n])?.remove(0))
}

/// `v_n` for every requested `n`, from a single pass of iterates.
pub fn value_iteration_series<O: Operator + ?Sized>(
    op: &O,
    stages: &[usize],
) -> Result<Vec<ValueVector>, Error> {
    if stages.iter().any(|&n| n == 0) {
        return Err(ValueError::ZeroStages.into());
    }
    let last = stages.iter().copied().max().unwrap_or(0);
    let mut iterate = ValueVector::zeros(op.dim());
    let mut at = vec![None; stages.len()];
    for k in 1..=last {
        iterate = op.apply(&iterate)?;
        for (slot, &n) in at.iter_mut().zip(stages) {
            if n == k {
                *slot = Some(iterate.scaled(1.0 / n as f64));
            }
        }
    }
    Ok(at.into_iter().map(|v| v.expect("every stage visited")).collect())
}

/// Discounted value with its a-posteriori certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscountedValue {
    pub lambda: f64,
    pub values: ValueVector,
    pub iterations: usize,
    /// `‖v − λΨ(((1−λ)/λ)v)‖∞` at the returned point.
    pub residual: f64,
}

/// Solves `v = λΨ(((1−λ)/λ)v)` to accuracy `eps`.
///
/// The map is a `(1−λ)`-contraction, so once a step is at most
/// `eps·λ/(1−λ)` the new iterate is within `eps` of the fixed point (plus
/// solver slack). With `λ = 1` the answer is `Ψ(0)`.
pub fn discounted_value<O: Operator + ?Sized>(
    op: &O,
    lambda: f64,
    eps: f64,
) -> Result<DiscountedValue, Error> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(ValueError::BadDiscount(lambda).into());
    }
    if !(eps > 0.0) {
        return Err(ValueError::BadAccuracy(eps).into());
    }
    let d = op.dim();
    if lambda == 1.0 {
        let values = op.apply(&vec![0.0; d])?;
        return Ok(DiscountedValue {
            lambda,
            values,
            iterations: 1,
            residual: 0.0,
        });
    }
    let ratio = (1.0 - lambda) / lambda;
    let step = |f: &[f64]| -> Result<ValueVector, Error> {
        let arg: Vec<f64> = f.iter().map(|x| ratio * x).collect();
        Ok(op.apply(&arg)?.scaled(lambda))
    };
    let stop = eps * lambda / (1.0 - lambda);
    let mut f = ValueVector::zeros(d);
    let mut last_step = f64::INFINITY;
    for it in 1..=MAX_FIXED_POINT_ITERATIONS {
        let next = step(&f)?;
        last_step = next.sup_dist(&f);
        f = next;
        if last_step <= stop {
            let residual = step(&f)?.sup_dist(&f);
            return Ok(DiscountedValue {
                lambda,
                values: f,
                iterations: it,
                residual,
            });
        }
    }
    Err(ValueError::Budget {
        iterations: MAX_FIXED_POINT_ITERATIONS,
        last_step,
    }
    .into())
}

/// Geometric grid `start·ratio^j`, `j = 0..len`.
pub fn geometric_grid(start: f64, ratio: f64, len: usize) -> Vec<f64> {
    (0..len).map(|j| start * ratio.powi(j as i32)).collect()
}

/// Default vanishing-discount grid: `0.5·0.7^j` for 12 points.
pub fn default_lambda_grid() -> Vec<f64> {
    geometric_grid(0.5, 0.7, 12)
}

/// Fit of `v_λ ≈ limit + c·λ^α + c'·λ^{α+1}` as `λ → 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerLawFit {
    pub limit: Vec<f64>,
    /// Leading coefficient on the coordinate with the largest variation.
    pub coefficient: f64,
    pub exponent: f64,
    /// Leading coefficient of every coordinate at the common exponent.
    pub coefficients: Vec<f64>,
    /// Coefficient of the `λ^{α+1}` correction on the driving coordinate.
    pub correction: f64,
    /// Largest log-space deviation of the fitted increments on the driving coordinate.
    pub residual: f64,
    /// Coordinate that determined the exponent.
    pub driver: usize,
}

const MIN_EXPONENT: f64 = 0.05;
const MAX_EXPONENT: f64 = 4.0;

/// Fits the vanishing-discount expansion to sampled discounted values.
///
/// The exponent is chosen on the coordinate with the largest spread by
/// minimizing the least-squares error of the model `a + c·λ^α + c'·λ^{α+1}`
/// over `α ∈ [0.05, 4]` (scan, then golden-section refinement). The
/// `λ^{α+1}` term absorbs the next order of the expansion so the leading
/// coefficient is not biased by the curvature of the sampled range. Curves
/// whose increments all stay below 1e-12 return `c = 0`, `α = 0` and the
/// smallest-λ value as limit.
pub fn fit_vanishing_discount(lambdas: &[f64], values: &[Vec<f64>]) -> Result<PowerLawFit, ValueError> {
    const NEED: usize = 4;
    if lambdas.len() < NEED || values.len() != lambdas.len() {
        return Err(ValueError::TooFewPoints {
            need: NEED,
            got: lambdas.len().min(values.len()),
        });
    }
    if lambdas.iter().any(|&l| !(l > 0.0 && l <= 1.0)) {
        return Err(ValueError::Degenerate("λ values must lie in (0, 1]".into()));
    }
    let d = values[0].len();
    if values.iter().any(|v| v.len() != d) {
        return Err(ValueError::Degenerate("value vectors of unequal length".into()));
    }
    let smallest = (0..lambdas.len())
        .min_by(|&a, &b| lambdas[a].total_cmp(&lambdas[b]))
        .expect("non-empty");
    let base = &values[smallest];
    let spread = |k: usize| values.iter().map(|v| (v[k] - base[k]).abs()).fold(0.0, f64::max);
    let (driver, widest) = (0..d)
        .map(|k| (k, spread(k)))
        .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    if widest < FLAT_THRESHOLD {
        return Ok(PowerLawFit {
            limit: base.clone(),
            coefficient: 0.0,
            exponent: 0.0,
            coefficients: vec![0.0; d],
            correction: 0.0,
            residual: 0.0,
            driver,
        });
    }

    let column = |k: usize| -> Vec<f64> { values.iter().map(|v| v[k]).collect() };
    let design = |alpha: f64| -> Vec<Vec<f64>> {
        vec![
            vec![1.0; lambdas.len()],
            lambdas.iter().map(|l| l.powf(alpha)).collect(),
            lambdas.iter().map(|l| l.powf(alpha + 1.0)).collect(),
        ]
    };
    let y = column(driver);
    let sse = |alpha: f64| -> f64 {
        let cols = design(alpha);
        match fit::lstsq(&cols, &y) {
            Some(c) => (0..y.len())
                .map(|i| {
                    let r = y[i] - (c[0] + c[1] * cols[1][i] + c[2] * cols[2][i]);
                    r * r
                })
                .sum(),
            None => f64::INFINITY,
        }
    };

    let steps = 395;
    let h = (MAX_EXPONENT - MIN_EXPONENT) / steps as f64;
    let (mut best_alpha, mut best) = (MIN_EXPONENT, f64::INFINITY);
    for s in 0..=steps {
        let a = MIN_EXPONENT + h * s as f64;
        let e = sse(a);
        if e < best {
            best = e;
            best_alpha = a;
        }
    }
    let alpha = golden_min(
        &sse,
        (best_alpha - h).max(MIN_EXPONENT),
        (best_alpha + h).min(MAX_EXPONENT),
    );
    let alpha = if sse(alpha) <= best { alpha } else { best_alpha };

    let cols = design(alpha);
    let mut limit = Vec::with_capacity(d);
    let mut coefficients = Vec::with_capacity(d);
    let mut correction = 0.0;
    for k in 0..d {
        let c = fit::lstsq(&cols, &column(k))
            .ok_or_else(|| ValueError::Degenerate("singular design at the fitted exponent".into()))?;
        limit.push(c[0]);
        coefficients.push(c[1]);
        if k == driver {
            correction = c[2];
        }
    }
    let (a0, c1) = (limit[driver], coefficients[driver]);
    let residual = (0..y.len())
        .filter_map(|i| {
            let obs = (y[i] - a0).abs();
            let model = (c1 * cols[1][i] + correction * cols[2][i]).abs();
            (obs > FLAT_THRESHOLD && model > FLAT_THRESHOLD).then(|| (obs.ln() - model.ln()).abs())
        })
        .fold(0.0, f64::max);
    Ok(PowerLawFit {
        limit,
        coefficient: c1,
        exponent: alpha,
        coefficients,
        correction,
        residual,
        driver,
    })
}

fn golden_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Discounted values on `lambdas` (evaluated in parallel) and their fit.
pub fn vanishing_discount<O: Operator + ?Sized>(
    op: &O,
    lambdas: &[f64],
    eps: f64,
) -> Result<(PowerLawFit, Vec<DiscountedValue>), Error> {
    if lambdas.len() < 4 {
        return Err(ValueError::TooFewPoints {
            need: 4,
            got: lambdas.len(),
        }
        .into());
    }
    let curve = par::try_map_indexed(lambdas.len(), |j| discounted_value(op, lambdas[j], eps))?;
    let values: Vec<Vec<f64>> = curve.iter().map(|v| v.values.0.clone()).collect();
    let fit = fit_vanishing_discount(lambdas, &values)?;
    Ok((fit, curve))
}

/// Empirical convergence exponent `θ` in `‖v_n − v∞‖ ≈ C/n^θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub theta: f64,
    pub constant: f64,
    /// Largest absolute log-space residual of the regression.
    pub residual: f64,
    pub points: usize,
}

/// Regresses `log‖v_n − v∞‖∞` on `log n`; points within 1e-12 of the limit
/// are dropped.
pub fn rate_fit(series: &[(usize, Vec<f64>)], limit: &[f64]) -> Result<RateFit, ValueError> {
    const NEED: usize = 4;
    if series.len() < NEED {
        return Err(ValueError::TooFewPoints {
            need: NEED,
            got: series.len(),
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = series
        .iter()
        .filter(|(n, _)| *n > 0)
        .filter_map(|(n, v)| {
            let e = sup_dist(v, limit);
            (e > FLAT_THRESHOLD).then(|| ((*n as f64).ln(), e.ln()))
        })
        .unzip();
    if xs.len() < NEED {
        return Err(ValueError::Converged { usable: xs.len() });
    }
    let (a, b) = fit::line(&xs, &ys)
        .ok_or_else(|| ValueError::Degenerate("all sample sizes are equal".into()))?;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - a - b * x).abs())
        .fold(0.0, f64::max);
    Ok(RateFit {
        theta: -b,
        constant: a.exp(),
        residual,
        points: xs.len(),
    })
}

/// Lower estimate of `sup_{‖f‖∞ ≤ radius} ‖op1(f) − op2(f)‖∞` from the
/// points `0`, `±radius·1` and `samples` uniform draws (ChaCha8 seeded with
/// `seed`).
pub fn operator_distance<A, B>(
    op1: &A,
    op2: &B,
    samples: usize,
    radius: f64,
    seed: u64,
) -> Result<f64, Error>
where
    A: Operator + ?Sized,
    B: Operator + ?Sized,
{
    let d = op1.dim();
    if op2.dim() != d {
        return Err(ValueError::DimensionMismatch(d, op2.dim()).into());
    }
    let mut points = vec![vec![0.0; d], vec![radius; d], vec![-radius; d]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        points.push((0..d).map(|_| rng.gen_range(-radius..=radius)).collect());
    }
    distance_on(op1, op2, &points)
}

fn distance_on<A, B>(op1: &A, op2: &B, points: &[Vec<f64>]) -> Result<f64, Error>
where
    A: Operator + ?Sized,
    B: Operator + ?Sized,
{
    let dists = par::map_slice(points, |f| -> Result<f64, Error> {
        Ok(op1.apply(f)?.sup_dist(&op2.apply(f)?))
    });
    dists.into_iter().try_fold(0.0, |m, d| Ok(f64::max(m, d?)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    /// `‖op1ⁿ(0) − op2ⁿ(0)‖∞`.
    pub deviation: f64,
    /// Estimated operator distance used in the bound.
    pub distance: f64,
    /// `n·distance + 2n·tol`.
    pub bound: f64,
    pub pass: bool,
}

/// Checks `‖op1ⁿ(0) − op2ⁿ(0)‖ ≤ n·‖op1 − op2‖ + 2n·tol`.
///
/// The distance is estimated on sampled points of the ball reached by the
/// iterates and on the trajectory of `op1` itself, which are the points the
/// induction bound actually uses.
pub fn iterate_deviation_check<A, B>(op1: &A, op2: &B, n: usize) -> Result<DeviationReport, Error>
where
    A: Operator + ?Sized,
    B: Operator + ?Sized,
{
    if n == 0 {
        return Err(ValueError::ZeroStages.into());
    }
    let d = op1.dim();
    if op2.dim() != d {
        return Err(ValueError::DimensionMismatch(d, op2.dim()).into());
    }
    let mut traj = vec![ValueVector::zeros(d)];
    let mut other = ValueVector::zeros(d);
    for _ in 0..n {
        let next = op1.apply(traj.last().expect("non-empty"))?;
        traj.push(next);
        other = op2.apply(&other)?;
    }
    let deviation = traj[n].sup_dist(&other);

    let mut distance: f64 = 0.0;
    let from_traj = par::map_indexed(n, |k| -> Result<f64, Error> {
        Ok(traj[k + 1].sup_dist(&op2.apply(&traj[k])?))
    });
    for d in from_traj {
        distance = distance.max(d?);
    }
    let radius = traj.iter().map(ValueVector::sup_norm).fold(1.0, f64::max);
    distance = distance.max(operator_distance(op1, op2, 32, radius, 0)?);

    let tol = op1.slack().max(op2.slack());
    let bound = n as f64 * distance + 2.0 * n as f64 * tol;
    Ok(DeviationReport {
        deviation,
        distance,
        bound,
        pass: deviation <= bound,
    })
}

/// Stationary mixed strategies: per state, a distribution over that state's
/// row (resp. column) grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryProfile {
    pub row: Vec<Vec<f64>>,
    pub col: Vec<Vec<f64>>,
}

impl StationaryProfile {
    /// Both players put all mass on the given grid indices.
    pub fn pure(game: &DiscretizedGame, rows: &[usize], cols: &[usize]) -> Self {
        let unit = |len: usize, at: usize| {
            let mut v = vec![0.0; len];
            v[at] = 1.0;
            v
        };
        StationaryProfile {
            row: (0..game.states()).map(|k| unit(game.payoff(k).rows(), rows[k])).collect(),
            col: (0..game.states()).map(|k| unit(game.payoff(k).cols(), cols[k])).collect(),
        }
    }

    /// Uniform over every grid.
    pub fn uniform(game: &DiscretizedGame) -> Self {
        let flat = |len: usize| vec![1.0 / len as f64; len];
        StationaryProfile {
            row: (0..game.states()).map(|k| flat(game.payoff(k).rows())).collect(),
            col: (0..game.states()).map(|k| flat(game.payoff(k).cols())).collect(),
        }
    }

    fn validate(&self, game: &DiscretizedGame) -> Result<(), ValueError> {
        if self.row.len() != game.states() || self.col.len() != game.states() {
            return Err(ValueError::InvalidStrategy {
                state: self.row.len().min(self.col.len()),
                reason: "one distribution per state is required".into(),
            });
        }
        for k in 0..game.states() {
            for (p, len) in [(&self.row[k], game.payoff(k).rows()), (&self.col[k], game.payoff(k).cols())] {
                let bad = |reason: String| ValueError::InvalidStrategy { state: k, reason };
                if p.len() != len {
                    return Err(bad(format!("{} weights for {len} grid points", p.len())));
                }
                if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                    return Err(bad("negative or non-finite weight".into()));
                }
                let s: f64 = p.iter().sum();
                if (s - 1.0).abs() > 1e-9 {
                    return Err(bad(format!("weights sum to {s}")));
                }
            }
        }
        Ok(())
    }
}

/// Monte-Carlo estimate of `γ_n` with its 95% normal half-width.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationEstimate {
    pub mean: f64,
    /// `1.96·stderr`; infinite with a single trial.
    pub halfwidth: f64,
    pub trials: usize,
}

/// Simulates `trials` independent `n`-stage plays of a stationary profile
/// from `start` and averages the mean stage payoff.
///
/// Trial `t` draws from ChaCha8 seeded with `seed` on stream `t`; every
/// random choice takes one `f64` in `[0, 1)` and inverts the cumulative
/// distribution (row action, column action, next state, in that order).
pub fn simulate(
    game: &DiscretizedGame,
    profile: &StationaryProfile,
    n: usize,
    start: usize,
    seed: u64,
    trials: usize,
) -> Result<SimulationEstimate, ValueError> {
    if n == 0 {
        return Err(ValueError::ZeroStages);
    }
    if trials == 0 {
        return Err(ValueError::TooFewPoints { need: 1, got: 0 });
    }
    if start >= game.states() {
        return Err(ValueError::BadStart {
            start,
            states: game.states(),
        });
    }
    profile.validate(game)?;

    let results = par::map_indexed(trials, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let mut state = start;
        let mut total = 0.0;
        for _ in 0..n {
            let i = sample(&profile.row[state], rng.gen());
            let j = sample(&profile.col[state], rng.gen());
            total += game.payoff(state).get(i, j);
            state = sample(game.transition(state, i, j), rng.gen());
        }
        total / n as f64
    });

    // Welford, in trial order
    let (mut mean, mut m2) = (0.0, 0.0);
    for (k, x) in results.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (x - mean);
    }
    let halfwidth = if trials > 1 {
        1.96 * (m2 / (trials - 1) as f64 / trials as f64).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(SimulationEstimate {
        mean,
        halfwidth,
        trials,
    })
}

/// Inverse-CDF draw; never returns an index of zero weight.
fn sample(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Exact `γ_n` of a stationary profile by propagating the state distribution
/// of the induced Markov chain.
pub fn stationary_payoff(
    game: &DiscretizedGame,
    profile: &StationaryProfile,
    n: usize,
    start: usize,
) -> Result<f64, ValueError> {
    if n == 0 {
        return Err(ValueError::ZeroStages);
    }
    let d = game.states();
    if start >= d {
        return Err(ValueError::BadStart { start, states: d });
    }
    profile.validate(game)?;
    let mut reward = vec![0.0; d];
    let mut chain = vec![vec![0.0; d]; d];
    for k in 0..d {
        let (p, q) = (&profile.row[k], &profile.col[k]);
        for (i, &pi) in p.iter().enumerate() {
            for (j, &qj) in q.iter().enumerate() {
                let w = pi * qj;
                if w == 0.0 {
                    continue;
                }
                reward[k] += w * game.payoff(k).get(i, j);
                for (c, &r) in chain[k].iter_mut().zip(game.transition(k, i, j)) {
                    *c += w * r;
                }
            }
        }
    }
    let mut dist = vec![0.0; d];
    dist[start] = 1.0;
    let mut total = 0.0;
    for _ in 0..n {
        total += dist.iter().zip(&reward).map(|(a, b)| a * b).sum::<f64>();
        let mut next = vec![0.0; d];
        for (k, &w) in dist.iter().enumerate() {
            for (nx, &c) in next.iter_mut().zip(&chain[k]) {
                *nx += w * c;
            }
        }
        dist = next;
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{constant_game, exshap_discounted, exshap_game};
    use crate::game::{random_game, StateData};
    use crate::matrix_game::Matrix;
    use crate::shapley::ShapleyOperator;

    const TOL: f64 = 1e-9;

    /// Operator whose discounted values are injected directly.
    struct Diagonal(Vec<f64>);
    impl Operator for Diagonal {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn apply(&self, f: &[f64]) -> Result<ValueVector, Error> {
            Ok(ValueVector(f.iter().zip(&self.0).map(|(x, c)| x + c).collect()))
        }
    }

    #[test]
    fn constant_game_values() {
        let op = ShapleyOperator::general(constant_game(3, 0.75, 3).unwrap(), TOL).unwrap();
        assert_eq!(value_iteration(&op, 7).unwrap().0, vec![0.75; 3]);
        let v = discounted_value(&op, 0.3, 1e-10).unwrap();
        assert!(v.values.sup_dist(&[0.75; 3]) < 1e-10);
        assert_eq!(discounted_value(&op, 1.0, 1e-10).unwrap().values.0, vec![0.75; 3]);
    }

    #[test]
    fn single_state_mdp_takes_the_better_action() {
        let states = vec![StateData {
            grid_x: vec![vec![0.0], vec![1.0]],
            grid_y: vec![vec![0.0]],
            payoff: Matrix::from_fn(2, 1, |i, _| (i + 1) as f64),
            transition: vec![1.0, 1.0],
        }];
        let op = ShapleyOperator::general(DiscretizedGame::from_states(states, vec![None]).unwrap(), TOL).unwrap();
        for n in [1, 2, 10, 33] {
            assert_eq!(value_iteration(&op, n).unwrap().0, vec![2.0]);
        }
    }

    #[test]
    fn exshap_one_stage_and_discounted() {
        let op = ShapleyOperator::general(exshap_game(101).unwrap(), TOL).unwrap();
        let v1 = value_iteration(&op, 1).unwrap();
        assert_eq!(v1[0], 0.0);
        assert!((v1[1] - 0.5).abs() < 1e-12);
        let v = discounted_value(&op, 0.5, 1e-10).unwrap();
        assert_eq!(v.values[0], 0.0);
        assert!((v.values[1] - exshap_discounted(0.5)).abs() < 1e-2, "{:?}", v.values);
        assert!(v.residual <= 1e-10 + 2.0 * TOL);
    }

    #[test]
    fn discounted_value_bound_and_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let op = ShapleyOperator::general(random_game(&mut rng, 3, 4), TOL).unwrap();
        let psi0 = op.apply(&[0.0; 3]).unwrap().sup_norm();
        for lambda in [0.05, 0.3, 0.9] {
            let v = discounted_value(&op, lambda, 1e-9).unwrap();
            assert!(v.values.sup_norm() <= psi0 + 1e-9 + 2.0 * TOL);
            assert!(v.residual <= 1e-9 + 2.0 * TOL);
        }
        assert!(matches!(discounted_value(&op, 0.0, 1e-9), Err(Error::Value(ValueError::BadDiscount(_)))));
        assert!(matches!(discounted_value(&op, 1.5, 1e-9), Err(Error::Value(ValueError::BadDiscount(_)))));
        assert!(matches!(discounted_value(&op, 0.5, 0.0), Err(Error::Value(ValueError::BadAccuracy(_)))));
        assert!(matches!(value_iteration(&op, 0), Err(Error::Value(ValueError::ZeroStages))));
    }

    #[test]
    fn iterates_from_any_start_share_the_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let op = ShapleyOperator::general(random_game(&mut rng, 3, 4), TOL).unwrap();
        let f = vec![2.0, -1.5, 0.5];
        let (mut a, mut b) = (f.clone(), vec![0.0; 3]);
        for n in 1..=20 {
            a = op.apply(&a).unwrap().0;
            b = op.apply(&b).unwrap().0;
            let gap = sup_dist(&a, &b) / n as f64;
            assert!(gap <= 2.0 / n as f64 + 2.0 * TOL);
        }
    }

    #[test]
    fn synthetic_power_law() {
        let lambdas = default_lambda_grid();
        let values: Vec<Vec<f64>> = lambdas.iter().map(|l| vec![1.0 + 2.0 * l.sqrt(), 3.0]).collect();
        let fit = fit_vanishing_discount(&lambdas, &values).unwrap();
        assert!((fit.coefficient - 2.0).abs() < 1e-4, "{fit:?}");
        assert!((fit.exponent - 0.5).abs() < 1e-4);
        assert!((fit.limit[0] - 1.0).abs() < 1e-5);
        assert!((fit.limit[1] - 3.0).abs() < 1e-9);
        assert_eq!(fit.driver, 0);
    }

    #[test]
    fn flat_curve_convention() {
        let lambdas = default_lambda_grid();
        let values = vec![vec![0.25, -1.0]; lambdas.len()];
        let fit = fit_vanishing_discount(&lambdas, &values).unwrap();
        assert_eq!((fit.coefficient, fit.exponent), (0.0, 0.0));
        assert_eq!(fit.limit, vec![0.25, -1.0]);
        assert!(matches!(
            fit_vanishing_discount(&lambdas[..3], &values[..3]),
            Err(ValueError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn exshap_closed_form_curve_fits() {
        let lambdas = default_lambda_grid();
        let values: Vec<Vec<f64>> = lambdas.iter().map(|&l| vec![0.0, exshap_discounted(l)]).collect();
        let fit = fit_vanishing_discount(&lambdas, &values).unwrap();
        let c = 0.5f64.exp() - 1.0;
        assert!((fit.exponent - 1.0).abs() < 0.05, "{fit:?}");
        assert!((fit.coefficient - c).abs() < 0.05 * c);
        assert!(fit.limit[1].abs() < 1e-3);
    }

    #[test]
    fn constant_game_vanishing_discount() {
        let op = ShapleyOperator::general(constant_game(2, 1.5, 2).unwrap(), TOL).unwrap();
        let (fit, curve) = vanishing_discount(&op, &default_lambda_grid(), 1e-12).unwrap();
        assert_eq!(curve.len(), 12);
        assert_eq!((fit.coefficient, fit.exponent), (0.0, 0.0));
        assert!(fit.limit.iter().all(|v| (v - 1.5).abs() < 1e-10), "{fit:?}");
    }

    #[test]
    fn synthetic_rates() {
        let ns = [16usize, 64, 256, 1024, 4096];
        for theta in [0.5, 1.0] {
            let series: Vec<_> = ns.iter().map(|&n| (n, vec![3.0 / (n as f64).powf(theta)])).collect();
            let r = rate_fit(&series, &[0.0]).unwrap();
            assert!((r.theta - theta).abs() < 1e-12);
            assert!((r.constant - 3.0).abs() < 1e-9);
        }
        let flat: Vec<_> = ns.iter().map(|&n| (n, vec![1.0])).collect();
        assert_eq!(rate_fit(&flat, &[1.0]), Err(ValueError::Converged { usable: 0 }));
    }

    #[test]
    fn operator_distance_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let game = random_game(&mut rng, 3, 4);
        let op = ShapleyOperator::general(game.clone(), TOL).unwrap();
        assert!(operator_distance(&op, &op, 16, 5.0, 1).unwrap() <= 2.0 * TOL);
        let eps = 0.01;
        let shifted = op.with_game(game.map_payoff(|_, _, _, g| g + eps)).unwrap();
        let dist = operator_distance(&op, &shifted, 16, 5.0, 1).unwrap();
        assert!((dist - eps).abs() <= 2.0 * TOL, "{dist}");
        let r = iterate_deviation_check(&op, &shifted, 10).unwrap();
        assert!(r.pass);
        assert!((r.deviation - 10.0 * eps).abs() <= 20.0 * TOL);
        let same = iterate_deviation_check(&op, &op, 25).unwrap();
        assert!(same.pass && same.deviation <= 50.0 * TOL);
    }

    #[test]
    fn exshap_vs_payoff_free_variant() {
        let game = exshap_game(21).unwrap();
        let op = ShapleyOperator::general(game.clone(), TOL).unwrap();
        let zeroed = op.with_game(game.map_payoff(|_, _, _, _| 0.0)).unwrap();
        let one_shot = op.apply(&[0.0, 0.0]).unwrap().sup_norm();
        assert!(operator_distance(&op, &zeroed, 8, 1.0, 3).unwrap() >= one_shot - 2.0 * TOL);
    }

    #[test]
    fn diagonal_operator_is_usable() {
        let op = Diagonal(vec![1.0, -2.0]);
        assert_eq!(value_iteration(&op, 5).unwrap().0, vec![1.0, -2.0]);
        let v = discounted_value(&op, 0.2, 1e-12).unwrap();
        assert!(v.values.sup_dist(&[1.0, -2.0]) < 1e-11);
    }

    #[test]
    fn simulation_constant_game_is_exact() {
        let g = constant_game(2, 0.5, 3).unwrap();
        let est = simulate(&g, &StationaryProfile::uniform(&g), 25, 0, 42, 64).unwrap();
        assert_eq!(est.mean, 0.5);
        assert_eq!(est.halfwidth, 0.0);
    }

    #[test]
    fn simulation_exshap_hand_rollout() {
        let g = exshap_game(11).unwrap();
        // x = 1 (index 10), y = 0 (index 0) in the live state
        let profile = StationaryProfile::pure(&g, &[0, 10], &[0, 0]);
        for n in [1, 5, 40] {
            let est = simulate(&g, &profile, n, 1, 7, 20).unwrap();
            assert_eq!(est.mean, 1.0 / n as f64);
            assert_eq!(stationary_payoff(&g, &profile, n, 1).unwrap(), 1.0 / n as f64);
        }
    }

    #[test]
    fn simulation_matches_exact_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let g = random_game(&mut rng, 3, 4);
        let profile = StationaryProfile::uniform(&g);
        let exact = stationary_payoff(&g, &profile, 30, 2).unwrap();
        let mut hits = 0;
        for seed in 0..40 {
            let est = simulate(&g, &profile, 30, 2, seed, 400).unwrap();
            if (est.mean - exact).abs() <= est.halfwidth {
                hits += 1;
            }
        }
        assert!(hits >= 34, "{hits}/40 intervals cover the exact value");
    }

    #[test]
    fn simulation_is_deterministic_and_validates() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = random_game(&mut rng, 2, 3);
        let p = StationaryProfile::uniform(&g);
        assert_eq!(simulate(&g, &p, 10, 0, 5, 50).unwrap(), simulate(&g, &p, 10, 0, 5, 50).unwrap());
        let mut bad = p.clone();
        bad.row[0][0] += 0.1;
        assert!(matches!(simulate(&g, &bad, 10, 0, 5, 50), Err(ValueError::InvalidStrategy { state: 0, .. })));
        assert!(matches!(simulate(&g, &p, 10, 9, 5, 50), Err(ValueError::BadStart { .. })));
        assert_eq!(simulate(&g, &p, 10, 0, 5, 1).unwrap().halfwidth, f64::INFINITY);
    }
}
