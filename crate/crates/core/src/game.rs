//! Stochastic games: symbolic specifications over action boxes and their
//! finite-grid discretizations.

use rand::Rng;
use thiserror::Error;

use crate::expr::{self, Expr, ExprError, VarSet};
use crate::matrix_game::Matrix;
use crate::par;

/// Negative transition entries down to this are clamped to zero.
pub const CLAMP_TOL: f64 = 1e-12;
/// Row sums further than this from one reject the game instead of being renormalized.
pub const ROW_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("invalid game: {0}")]
    Invalid(String),
    #[error("expression `{what}`: {source}")]
    Parse { what: String, source: ExprError },
    #[error("{what} at state {state}, action point {point:?}: {source}")]
    Eval {
        what: String,
        state: usize,
        point: Vec<f64>,
        source: ExprError,
    },
    #[error("transition from state {state} at action pair ({i}, {j}) has entry {value} < 0")]
    NegativeTransition {
        state: usize,
        i: usize,
        j: usize,
        value: f64,
    },
    #[error("transition row of state {state} at action pair ({i}, {j}) sums to {sum}")]
    RowSum {
        state: usize,
        i: usize,
        j: usize,
        sum: f64,
    },
}

/// Which player controls a state (perfect information, MDP) or its transition
/// (switching control).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Controller {
    Player1,
    Player2,
}

/// Axis-aligned box of actions, one `(lo, hi)` pair per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionBox {
    bounds: Vec<(f64, f64)>,
}

impl ActionBox {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self, GameError> {
        if bounds.is_empty() {
            return Err(GameError::Invalid("action box needs at least one coordinate".into()));
        }
        for &(lo, hi) in &bounds {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(GameError::Invalid(format!("bad action interval [{lo}, {hi}]")));
            }
        }
        Ok(ActionBox { bounds })
    }

    pub fn unit(dim: usize) -> Self {
        ActionBox {
            bounds: vec![(0.0, 1.0); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// Tensor grid with `resolution[c]` uniformly spaced points on coordinate
    /// `c`, endpoints included. Points are listed with the last coordinate
    /// varying fastest.
    pub fn grid(&self, resolution: &[usize]) -> Result<Vec<Vec<f64>>, GameError> {
        if resolution.len() != self.dim() {
            return Err(GameError::Invalid(format!(
                "{} grid sizes for a {}-dimensional box",
                resolution.len(),
                self.dim()
            )));
        }
        let axes: Vec<Vec<f64>> = self
            .bounds
            .iter()
            .zip(resolution)
            .map(|(&(lo, hi), &n)| uniform_mesh(lo, hi, n))
            .collect::<Result<_, _>>()?;
        let mut points = vec![Vec::new()];
        for axis in &axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        Ok(points)
    }
}

/// `n ≥ 2` equally spaced points from `lo` to `hi`, both included exactly.
pub fn uniform_mesh(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, GameError> {
    if n < 2 {
        return Err(GameError::Invalid(format!("grid resolution {n} < 2")));
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
        .collect())
}

/// Variables available to payoff and transition expressions: `x1..xp`,
/// `y1..yq` (with `x`, `y` as aliases in dimension one), then `extra`.
pub fn action_vars(p: usize, q: usize, extra: &[&str]) -> VarSet {
    let mut vars = VarSet::default();
    for (prefix, dim) in [("x", p), ("y", q)] {
        for c in 1..=dim {
            let slot = vars.push(format!("{prefix}{c}"));
            if dim == 1 {
                vars.alias(prefix, slot);
            }
        }
    }
    for name in extra {
        vars.push(*name);
    }
    vars
}

/// Symbolic stochastic game over action boxes.
#[derive(Debug, Clone)]
pub struct GameSpec {
    x_box: ActionBox,
    y_box: ActionBox,
    payoff: Vec<Expr>,
    transition: Vec<Vec<Expr>>,
    controller: Vec<Option<Controller>>,
}

impl GameSpec {
    /// Parses payoff expressions (one per state) and transition expressions
    /// (`transition[k][k2]` is the probability of moving from `k` to `k2`).
    pub fn parse(
        x_box: ActionBox,
        y_box: ActionBox,
        payoff: &[&str],
        transition: &[Vec<&str>],
        controller: Option<Vec<Option<Controller>>>,
    ) -> Result<Self, GameError> {
        let d = payoff.len();
        if d == 0 {
            return Err(GameError::Invalid("a game needs at least one state".into()));
        }
        if transition.len() != d || transition.iter().any(|r| r.len() != d) {
            return Err(GameError::Invalid(format!("transition must be {d}x{d}")));
        }
        let controller = controller.unwrap_or_else(|| vec![None; d]);
        if controller.len() != d {
            return Err(GameError::Invalid(format!(
                "{} controller tags for {d} states",
                controller.len()
            )));
        }
        let vars = action_vars(x_box.dim(), y_box.dim(), &[]);
        let parse = |s: &str| {
            expr::parse(s, &vars).map_err(|source| GameError::Parse {
                what: s.to_string(),
                source,
            })
        };
        let payoff = payoff.iter().map(|s| parse(s)).collect::<Result<_, _>>()?;
        let transition = transition
            .iter()
            .map(|row| row.iter().map(|s| parse(s)).collect::<Result<_, _>>())
            .collect::<Result<_, _>>()?;
        Ok(GameSpec {
            x_box,
            y_box,
            payoff,
            transition,
            controller,
        })
    }

    pub fn states(&self) -> usize {
        self.payoff.len()
    }

    pub fn x_box(&self) -> &ActionBox {
        &self.x_box
    }

    pub fn y_box(&self) -> &ActionBox {
        &self.y_box
    }

    pub fn controller(&self) -> &[Option<Controller>] {
        &self.controller
    }

    /// Evaluates the expressions on tensor grids of the given sizes.
    pub fn discretize(
        &self,
        x_resolution: &[usize],
        y_resolution: &[usize],
    ) -> Result<DiscretizedGame, GameError> {
        let xs = self.x_box.grid(x_resolution)?;
        let ys = self.y_box.grid(y_resolution)?;
        let d = self.states();
        let per_state = par::try_map_indexed(d, |k| {
            let mut pay = Vec::with_capacity(xs.len() * ys.len());
            let mut rho = Vec::with_capacity(xs.len() * ys.len() * d);
            let mut point = Vec::with_capacity(self.x_box.dim() + self.y_box.dim());
            for x in &xs {
                for y in &ys {
                    point.clear();
                    point.extend_from_slice(x);
                    point.extend_from_slice(y);
                    let eval = |what: &str, e: &Expr| {
                        let v = e.eval(&point).map_err(|source| GameError::Eval {
                            what: what.to_string(),
                            state: k,
                            point: point.clone(),
                            source,
                        })?;
                        if v.is_finite() {
                            Ok(v)
                        } else {
                            Err(GameError::Eval {
                                what: what.to_string(),
                                state: k,
                                point: point.clone(),
                                source: ExprError::Domain(format!("non-finite value {v}")),
                            })
                        }
                    };
                    pay.push(eval("payoff", &self.payoff[k])?);
                    for e in &self.transition[k] {
                        rho.push(eval("transition", e)?);
                    }
                }
            }
            Ok::<_, GameError>(StateData {
                grid_x: xs.clone(),
                grid_y: ys.clone(),
                payoff: Matrix::from_fn(xs.len(), ys.len(), |i, j| pay[i * ys.len() + j]),
                transition: rho,
            })
        })?;
        DiscretizedGame::from_states(per_state, self.controller.clone())
    }

    /// Same resolution on every coordinate of both boxes.
    pub fn discretize_uniform(&self, resolution: usize) -> Result<DiscretizedGame, GameError> {
        self.discretize(
            &vec![resolution; self.x_box.dim()],
            &vec![resolution; self.y_box.dim()],
        )
    }
}

/// Action grids and tensors of one state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateData {
    pub grid_x: Vec<Vec<f64>>,
    pub grid_y: Vec<Vec<f64>>,
    /// `payoff[(i, j)]` for row point `i`, column point `j`.
    pub payoff: Matrix,
    /// Flat `[i][j][k']` transition tensor.
    pub transition: Vec<f64>,
}

/// Finite stochastic game: per-state action grids, payoff matrices and
/// transition tensors. Transition rows are exact probability vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedGame {
    states: Vec<StateData>,
    controller: Vec<Option<Controller>>,
}

impl DiscretizedGame {
    /// Validates and normalizes per-state data. Entries in `[-1e-12, 0)` are
    /// clamped, rows within `1e-6` of one are renormalized, anything else is
    /// rejected.
    pub fn from_states(
        mut states: Vec<StateData>,
        controller: Vec<Option<Controller>>,
    ) -> Result<Self, GameError> {
        let d = states.len();
        if d == 0 {
            return Err(GameError::Invalid("a game needs at least one state".into()));
        }
        if controller.len() != d {
            return Err(GameError::Invalid(format!(
                "{} controller tags for {d} states",
                controller.len()
            )));
        }
        for (k, s) in states.iter_mut().enumerate() {
            let (m, n) = (s.payoff.rows(), s.payoff.cols());
            if m == 0 || n == 0 || s.grid_x.len() != m || s.grid_y.len() != n {
                return Err(GameError::Invalid(format!(
                    "state {k}: grids ({}, {}) do not match payoff {m}x{n}",
                    s.grid_x.len(),
                    s.grid_y.len()
                )));
            }
            if s.transition.len() != m * n * d {
                return Err(GameError::Invalid(format!(
                    "state {k}: transition tensor has {} entries, expected {}",
                    s.transition.len(),
                    m * n * d
                )));
            }
            for i in 0..m {
                for j in 0..n {
                    if !s.payoff.get(i, j).is_finite() {
                        return Err(GameError::Invalid(format!(
                            "state {k}: non-finite payoff at ({i}, {j})"
                        )));
                    }
                    let row = &mut s.transition[(i * n + j) * d..(i * n + j + 1) * d];
                    normalize_row(row).map_err(|e| match e {
                        RowProblem::Negative(value) => GameError::NegativeTransition {
                            state: k,
                            i,
                            j,
                            value,
                        },
                        RowProblem::Sum(sum) => GameError::RowSum { state: k, i, j, sum },
                    })?;
                }
            }
        }
        Ok(DiscretizedGame { states, controller })
    }

    pub fn states(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, k: usize) -> &StateData {
        &self.states[k]
    }

    pub fn payoff(&self, k: usize) -> &Matrix {
        &self.states[k].payoff
    }

    /// Distribution of the next state from `k` under the action pair `(i, j)`.
    #[inline]
    pub fn transition(&self, k: usize, i: usize, j: usize) -> &[f64] {
        let d = self.states.len();
        let n = self.states[k].payoff.cols();
        &self.states[k].transition[(i * n + j) * d..(i * n + j + 1) * d]
    }

    pub fn controller(&self) -> &[Option<Controller>] {
        &self.controller
    }

    pub fn with_controller(mut self, controller: Vec<Option<Controller>>) -> Result<Self, GameError> {
        if controller.len() != self.states() {
            return Err(GameError::Invalid("controller tag count".into()));
        }
        self.controller = controller;
        Ok(self)
    }

    /// Copy with the payoff of every state transformed pointwise.
    pub fn map_payoff(&self, f: impl Fn(usize, usize, usize, f64) -> f64) -> Self {
        let mut out = self.clone();
        for (k, s) in out.states.iter_mut().enumerate() {
            s.payoff = Matrix::from_fn(s.payoff.rows(), s.payoff.cols(), |i, j| {
                f(k, i, j, self.states[k].payoff.get(i, j))
            });
        }
        out
    }

    /// Continuation matrix `g[k][i][j] + Σ ρ[k][i][j][k'] f[k']` of state `k`.
    pub fn continuation_matrix(&self, k: usize, f: &[f64]) -> Matrix {
        let s = &self.states[k];
        Matrix::from_fn(s.payoff.rows(), s.payoff.cols(), |i, j| {
            s.payoff.get(i, j) + dot(self.transition(k, i, j), f)
        })
    }

    /// Largest absolute payoff over all states.
    pub fn payoff_bound(&self) -> f64 {
        self.states
            .iter()
            .flat_map(|s| (0..s.payoff.rows()).flat_map(move |i| s.payoff.row(i).iter()))
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

enum RowProblem {
    Negative(f64),
    Sum(f64),
}

fn normalize_row(row: &mut [f64]) -> Result<(), RowProblem> {
    for x in row.iter_mut() {
        if !x.is_finite() || *x < -CLAMP_TOL {
            return Err(RowProblem::Negative(*x));
        }
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(RowProblem::Sum(sum));
    }
    if sum != 1.0 {
        row.iter_mut().for_each(|x| *x /= sum);
        // put the rounding residue on the largest entry
        let big = (0..row.len())
            .max_by(|&a, &b| row[a].total_cmp(&row[b]))
            .unwrap_or(0);
        let rest: f64 = row
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != big)
            .map(|(_, x)| x)
            .sum();
        row[big] = (1.0 - rest).max(0.0);
    }
    Ok(())
}

/// Finite game with random payoffs in `[-1, 1]` and random dense transitions;
/// each state gets between 1 and `max_actions` actions per player.
pub fn random_game<R: Rng>(rng: &mut R, d: usize, max_actions: usize) -> DiscretizedGame {
    let states = (0..d)
        .map(|_| {
            let m = rng.gen_range(1..=max_actions);
            let n = rng.gen_range(1..=max_actions);
            let payoff = Matrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
            let mut transition = Vec::with_capacity(m * n * d);
            for _ in 0..m * n {
                let w: Vec<f64> = (0..d).map(|_| -rng.gen_range(f64::EPSILON..1.0).ln()).collect();
                let s: f64 = w.iter().sum();
                transition.extend(w.iter().map(|x| x / s));
            }
            StateData {
                grid_x: (0..m).map(|i| vec![i as f64]).collect(),
                grid_y: (0..n).map(|j| vec![j as f64]).collect(),
                payoff,
                transition,
            }
        })
        .collect();
    DiscretizedGame::from_states(states, vec![None; d]).expect("random game is valid")
}
