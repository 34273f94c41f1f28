//! The Shapley operator of a discretized game.
//!
//! Component `k` of `Ψ(f)` is the value of the one-shot matrix game with
//! entries `g[k][i][j] + Σ ρ[k][i][j][k'] f[k']`. The MDP, perfect
//! information and switching control classes replace the mixed value by the
//! pure max/min forms those classes admit.


use crate::game::{dot, Controller, DiscretizedGame};
use crate::matrix_game::{solve_matrix_game, MatrixGameError};
use crate::par;
use crate::values::ValueVector;
use crate::Error;

/// Payoff or transition differences below this count as "no influence" when
/// checking that a game belongs to a subclass.
const DUMMY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ShapleyError {
    #[error("expected a vector of length {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite argument entry {0}")]
    NonFinite(usize),
    #[error("matrix game of state {state}: {source}")]
    Solver {
        state: usize,
        source: MatrixGameError,
    },
    #[error("game does not fit the {form:?} form: {reason}")]
    Form { form: OperatorForm, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorForm {
    General,
    Mdp,
    PerfectInfo,
    Switching,
}

/// Self-map of `R^d` that value algorithms iterate.
///
/// `slack` is the absolute accuracy of one evaluation: identities that hold
/// exactly for the true operator hold up to twice this for computed values.
pub trait Operator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, f: &[f64]) -> Result<ValueVector, Error>;
    fn slack(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct ShapleyOperator {
    game: DiscretizedGame,
    form: OperatorForm,
    tol: f64,
}

impl ShapleyOperator {
    /// Checks that the game's controller tags and data admit `form`.
    ///
    /// MDP: every state tagged with the same player, or none tagged (then
    /// player 1 acts). Perfect information: every state tagged. Switching:
    /// every state tagged with the player who controls its transitions.
    pub fn new(game: DiscretizedGame, form: OperatorForm, tol: f64) -> Result<Self, Error> {
        if !(tol > 0.0) {
            return Err(MatrixGameError::BadTolerance(tol).into());
        }
        let fail = |reason: String| -> Error { ShapleyError::Form { form, reason }.into() };
        let tags = game.controller();
        match form {
            OperatorForm::General => {}
            OperatorForm::Mdp => {
                let first = tags[0];
                if tags.iter().any(|t| *t != first) {
                    return Err(fail("MDP states must share one controller".into()));
                }
            }
            OperatorForm::PerfectInfo | OperatorForm::Switching => {
                if let Some(k) = tags.iter().position(Option::is_none) {
                    return Err(fail(format!("state {k} has no controller tag")));
                }
            }
        }
        if form != OperatorForm::General {
            for k in 0..game.states() {
                let who = tags[k].unwrap_or(Controller::Player1);
                let payoff_too = form != OperatorForm::Switching;
                if let Some(reason) = dummy_violation(&game, k, who, payoff_too) {
                    return Err(fail(reason));
                }
            }
        }
        Ok(ShapleyOperator { game, form, tol })
    }

    pub fn general(game: DiscretizedGame, tol: f64) -> Result<Self, Error> {
        Self::new(game, OperatorForm::General, tol)
    }

    pub fn game(&self) -> &DiscretizedGame {
        &self.game
    }

    pub fn form(&self) -> OperatorForm {
        self.form
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Same form and tolerance over another game with the same state count.
    pub fn with_game(&self, game: DiscretizedGame) -> Result<Self, Error> {
        if game.states() != self.game.states() {
            return Err(ShapleyError::Dimension {
                expected: self.game.states(),
                got: game.states(),
            }
            .into());
        }
        Self::new(game, self.form, self.tol)
    }

    /// `Ψ(f)` together with the duality gap certified for each component.
    pub fn apply_detailed(&self, f: &[f64]) -> Result<(ValueVector, Vec<f64>), Error> {
        let d = self.game.states();
        if f.len() != d {
            return Err(ShapleyError::Dimension {
                expected: d,
                got: f.len(),
            }
            .into());
        }
        if let Some(k) = f.iter().position(|x| !x.is_finite()) {
            return Err(ShapleyError::NonFinite(k).into());
        }
        let per_state = par::try_map_indexed(d, |k| self.component(k, f))?;
        let (values, gaps) = per_state.into_iter().unzip();
        Ok((ValueVector(values), gaps))
    }

    fn component(&self, k: usize, f: &[f64]) -> Result<(f64, f64), Error> {
        let g = &self.game;
        let who = g.controller()[k].unwrap_or(Controller::Player1);
        let payoff = g.payoff(k);
        let (m, n) = (payoff.rows(), payoff.cols());
        let cont = |i: usize, j: usize| payoff.get(i, j) + dot(g.transition(k, i, j), f);
        let pure = match (self.form, who) {
            (OperatorForm::General, _) => None,
            (OperatorForm::Mdp | OperatorForm::PerfectInfo, Controller::Player1) => {
                Some(argmax((0..m).map(|i| cont(i, 0))))
            }
            (OperatorForm::Mdp | OperatorForm::PerfectInfo, Controller::Player2) => {
                Some(argmin((0..n).map(|j| cont(0, j))))
            }
            (OperatorForm::Switching, Controller::Player1) => Some(argmax((0..m).map(|i| {
                let worst = payoff.row(i).iter().copied().fold(f64::INFINITY, f64::min);
                worst + dot(g.transition(k, i, 0), f)
            }))),
            (OperatorForm::Switching, Controller::Player2) => Some(argmin((0..n).map(|j| {
                let best = (0..m).map(|i| payoff.get(i, j)).fold(f64::NEG_INFINITY, f64::max);
                best + dot(g.transition(k, 0, j), f)
            }))),
        };
        if let Some((_, v)) = pure {
            return Ok((v, 0.0));
        }
        let a = g.continuation_matrix(k, f);
        let sol = solve_matrix_game(&a, self.tol).map_err(|source| ShapleyError::Solver {
            state: k,
            source,
        })?;
        Ok((sol.value, sol.duality_gap))
    }
}

impl Operator for ShapleyOperator {
    fn dim(&self) -> usize {
        self.game.states()
    }

    fn apply(&self, f: &[f64]) -> Result<ValueVector, Error> {
        self.apply_detailed(f).map(|(v, _)| v)
    }

    fn slack(&self) -> f64 {
        self.tol
    }
}

/// First index attaining the maximum.
fn argmax(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// First index attaining the minimum.
fn argmin(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let (i, v) = argmax(values.map(|v| -v));
    (i, -v)
}

/// Reports how the non-controlling player's action influences state `k`.
fn dummy_violation(
    game: &DiscretizedGame,
    k: usize,
    controller: Controller,
    payoff_too: bool,
) -> Option<String> {
    let p = game.payoff(k);
    let (m, n) = (p.rows(), p.cols());
    for i in 0..m {
        for j in 0..n {
            let (ri, rj) = match controller {
                Controller::Player1 => (i, 0),
                Controller::Player2 => (0, j),
            };
            if payoff_too && (p.get(i, j) - p.get(ri, rj)).abs() > DUMMY_TOL {
                return Some(format!(
                    "payoff of state {k} depends on the other player's action at ({i}, {j})"
                ));
            }
            let t = game.transition(k, i, j);
            let r = game.transition(k, ri, rj);
            if t.iter().zip(r).any(|(a, b)| (a - b).abs() > DUMMY_TOL) {
                return Some(format!(
                    "transition of state {k} depends on the other player's action at ({i}, {j})"
                ));
            }
        }
    }
    None
}

/// Largest observed violations of the defining properties of a Shapley
/// operator, before any slack is subtracted.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PropertyReport {
    /// `max (Ψ(lo) − Ψ(hi))⁺` over ordered pairs `lo ≤ hi`.
    pub monotonicity: f64,
    /// `max |Ψ(f + c·1) − Ψ(f) − c|`.
    pub homogeneity: f64,
    /// `max (‖Ψf − Ψg‖ − ‖f − g‖)⁺`.
    pub nonexpansiveness: f64,
    pub evaluations: usize,
}

impl PropertyReport {
    pub fn within(&self, slack: f64) -> bool {
        self.monotonicity <= slack && self.homogeneity <= slack && self.nonexpansiveness <= slack
    }

    pub fn worst(&self) -> f64 {
        self.monotonicity.max(self.homogeneity).max(self.nonexpansiveness)
    }
}

/// Measures monotonicity, additive homogeneity and sup-norm nonexpansiveness
/// on the sample pairs. For monotonicity each pair is replaced by its
/// componentwise min and max; homogeneity is tested at every shift on the
/// first vector of each pair.
pub fn check_properties<O: Operator + ?Sized>(
    op: &O,
    pairs: &[(Vec<f64>, Vec<f64>)],
    shifts: &[f64],
) -> Result<PropertyReport, Error> {
    let reports = par::map_slice(pairs, |(f, g)| -> Result<PropertyReport, Error> {
        let mut r = PropertyReport::default();
        let pf = op.apply(f)?;
        let pg = op.apply(g)?;
        r.nonexpansiveness = (pf.sup_dist(&pg) - sup_dist(f, g)).max(0.0);

        let lo: Vec<f64> = f.iter().zip(g).map(|(a, b)| a.min(*b)).collect();
        let hi: Vec<f64> = f.iter().zip(g).map(|(a, b)| a.max(*b)).collect();
        let (plo, phi) = (op.apply(&lo)?, op.apply(&hi)?);
        r.monotonicity = plo
            .iter()
            .zip(phi.iter())
            .map(|(a, b)| a - b)
            .fold(0.0, f64::max);

        for &c in shifts {
            let moved: Vec<f64> = f.iter().map(|x| x + c).collect();
            let pm = op.apply(&moved)?;
            let dev = pm
                .iter()
                .zip(pf.iter())
                .map(|(a, b)| (a - b - c).abs())
                .fold(0.0, f64::max);
            r.homogeneity = r.homogeneity.max(dev);
        }
        r.evaluations = 4 + shifts.len();
        Ok(r)
    });
    let mut total = PropertyReport::default();
    for r in reports {
        let r = r?;
        total.monotonicity = total.monotonicity.max(r.monotonicity);
        total.homogeneity = total.homogeneity.max(r.homogeneity);
        total.nonexpansiveness = total.nonexpansiveness.max(r.nonexpansiveness);
        total.evaluations += r.evaluations;
    }
    Ok(total)
}

pub(crate) fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
