//! Finite-state zero-sum stochastic games on compact action boxes: Shapley
//! operators, n-stage and discounted values, vanishing-discount limits,
//! parametric one-shot values, and growth rates of order-preserving maps.
//!
//! Parallel evaluation uses rayon behind the default `parallel` feature;
//! without it every routine runs sequentially with identical results.

use thiserror::Error;

pub mod catalog;
pub mod expr;
pub mod fit;
pub mod game;
pub mod matrix_game;
pub mod oracle;
pub mod par;
pub mod parametric;
pub mod pf;
pub mod shapley;
pub mod values;

pub use expr::{parse, Expr, ExprError, VarSet};
pub use game::{ActionBox, Controller, DiscretizedGame, GameError, GameSpec, StateData};
pub use matrix_game::{matrix_game_bruteforce, solve_matrix_game, Matrix, MatrixGameError, MatrixGameSolution};
pub use oracle::OracleError;
pub use parametric::{
    convex_value, mckinsey_grid_value, mckinsey_value, separable_value, ConvexGameSpec, ParametricError,
    SeparableSpec,
};
pub use pf::{growth_rate, log_glasses_apply, risk_sensitive_apply, MonotoneMap, PfError};
pub use shapley::{check_properties, Operator, OperatorForm, PropertyReport, ShapleyError, ShapleyOperator};
pub use values::{
    discounted_value, iterate_deviation_check, rate_fit, vanishing_discount, value_iteration, DiscountedValue,
    PowerLawFit, RateFit, ValueError, ValueVector,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    MatrixGame(#[from] MatrixGameError),
    #[error(transparent)]
    Shapley(#[from] ShapleyError),
    #[error(transparent)]
    Value(#[from] ValueError),
    #[error(transparent)]
    Parametric(#[from] ParametricError),
    #[error(transparent)]
    Pf(#[from] PfError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}
