//! One-shot parametric games `g(x, y, z)`: separable payoffs, payoffs convex
//! in the minimizer's action, and the McKinsey game with its closed-form value.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::MCKINSEY_PAYOFF;
use crate::expr::{self, Expr, ExprError, VarSet};
use crate::game::{action_vars, ActionBox};
use crate::matrix_game::{for_each_subset, solve_matrix_game, Matrix};
use crate::par;
use crate::Error;

/// Number of supports `convex_value` may enumerate: all 3-subsets of a
/// 64-point grid.
pub const SUPPORT_BUDGET: usize = 41_664;
/// Segments sampled by the convexity spot check.
pub const CONVEXITY_SAMPLES: usize = 256;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParametricError {
    #[error("expression `{what}`: {source}")]
    Expr { what: String, source: ExprError },
    #[error("parameter z = {0} is outside (0, 1]")]
    ZOutOfRange(f64),
    #[error("separable spec: {0}")]
    Shape(String),
    #[error("payoff is not declared convex in y")]
    NotDeclaredConvex,
    #[error("convexity spot check failed at x = {x:?}, y = {y1:?} / {y2:?}: midpoint exceeds chord by {excess:e}")]
    ConvexityViolation {
        x: Vec<f64>,
        y1: Vec<f64>,
        y2: Vec<f64>,
        excess: f64,
    },
    #[error("{subsets} candidate supports exceed the enumeration budget of {budget}")]
    SupportBudget { subsets: usize, budget: usize },
    #[error("minimizer action dimension {0} is above the supported 2")]
    TooManyDimensions(usize),
}

fn vars_with_z(prefix: &str, dim: usize) -> VarSet {
    let mut v = VarSet::default();
    for c in 1..=dim {
        let slot = v.push(format!("{prefix}{c}"));
        if dim == 1 {
            v.alias(prefix, slot);
        }
    }
    v.push("z");
    v
}

fn parse_all(texts: &[&str], vars: &VarSet) -> Result<Vec<Expr>, ParametricError> {
    texts
        .iter()
        .map(|s| {
            expr::parse(s, vars).map_err(|source| ParametricError::Expr {
                what: s.to_string(),
                source,
            })
        })
        .collect()
}

fn eval_at(e: &Expr, values: &[f64]) -> Result<f64, ParametricError> {
    let v = e.eval(values).map_err(|source| ParametricError::Expr {
        what: e.to_string(),
        source,
    })?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ParametricError::Expr {
            what: e.to_string(),
            source: ExprError::Domain(format!("non-finite value at {values:?}")),
        })
    }
}

fn with_z(point: &[f64], z: f64) -> Vec<f64> {
    let mut v = point.to_vec();
    v.push(z);
    v
}

/// Separable payoff `g(x, y, z) = Σ_{u,v} m_uv(z)·a_u(x, z)·b_v(y, z)`.
#[derive(Debug, Clone)]
pub struct SeparableSpec {
    x_box: ActionBox,
    y_box: ActionBox,
    a: Vec<Expr>,
    b: Vec<Expr>,
    m: Vec<Vec<Expr>>,
}

impl SeparableSpec {
    /// `a` over `x…, z`; `b` over `y…, z`; `m` (`|a| × |b|`) over `z`.
    pub fn parse(
        x_box: ActionBox,
        y_box: ActionBox,
        a: &[&str],
        b: &[&str],
        m: &[Vec<&str>],
    ) -> Result<Self, ParametricError> {
        if a.is_empty() || b.is_empty() {
            return Err(ParametricError::Shape("both bases need at least one function".into()));
        }
        if m.len() != a.len() || m.iter().any(|r| r.len() != b.len()) {
            return Err(ParametricError::Shape(format!(
                "coefficient matrix must be {}x{}",
                a.len(),
                b.len()
            )));
        }
        let a = parse_all(a, &vars_with_z("x", x_box.dim()))?;
        let b = parse_all(b, &vars_with_z("y", y_box.dim()))?;
        let zv = VarSet::new(["z"]);
        let m = m
            .iter()
            .map(|row| parse_all(row, &zv))
            .collect::<Result<_, _>>()?;
        Ok(SeparableSpec { x_box, y_box, a, b, m })
    }

    /// Same game seen from the other side: bases exchanged and `M ↦ −Mᵀ`.
    pub fn swapped(&self) -> Self {
        let neg = |e: &Expr| Expr::Unary(expr::UnaryOp::Neg, e.clone().into());
        SeparableSpec {
            x_box: self.y_box.clone(),
            y_box: self.x_box.clone(),
            a: self.b.clone(),
            b: self.a.clone(),
            m: (0..self.b.len())
                .map(|v| (0..self.a.len()).map(|u| neg(&self.m[u][v])).collect())
                .collect(),
        }
    }

    /// Payoff matrix on the grids, accumulated basis by basis.
    pub fn matrix(&self, z: f64, resolution: usize) -> Result<Matrix, Error> {
        let xs = self.x_box.grid(&vec![resolution; self.x_box.dim()])?;
        let ys = self.y_box.grid(&vec![resolution; self.y_box.dim()])?;
        let basis = |fs: &[Expr], pts: &[Vec<f64>]| -> Result<Vec<Vec<f64>>, ParametricError> {
            fs.iter()
                .map(|f| pts.iter().map(|p| eval_at(f, &with_z(p, z))).collect())
                .collect()
        };
        let av = basis(&self.a, &xs)?;
        let bv = basis(&self.b, &ys)?;
        let mut coef = vec![vec![0.0; self.b.len()]; self.a.len()];
        for (u, row) in self.m.iter().enumerate() {
            for (v, e) in row.iter().enumerate() {
                coef[u][v] = eval_at(e, &[z])?;
            }
        }
        Ok(Matrix::from_fn(xs.len(), ys.len(), |i, j| {
            let mut s = 0.0;
            for (u, cu) in coef.iter().enumerate() {
                for (v, c) in cu.iter().enumerate() {
                    s += c * av[u][i] * bv[v][j];
                }
            }
            s
        }))
    }
}

/// Mixed value of a separable game on the grids.
///
/// By linearity of the integral the mixed extension is a bilinear game over
/// the moment polytopes of the bases; on a grid those polytopes are convex
/// hulls of the grid images, so the value is that of the vertex matrix game.
pub fn separable_value(spec: &SeparableSpec, z: f64, resolution: usize, tol: f64) -> Result<f64, Error> {
    let g = spec.matrix(z, resolution)?;
    Ok(solve_matrix_game(&g, tol)?.value)
}

/// Payoff convex in the minimizer's action on a convex box.
#[derive(Debug, Clone)]
pub struct ConvexGameSpec {
    x_box: ActionBox,
    y_box: ActionBox,
    payoff: Expr,
    convex: bool,
}

impl ConvexGameSpec {
    /// `payoff` over `x…, y…, z`. `convex_in_y` is trusted and spot-checked.
    pub fn parse(
        x_box: ActionBox,
        y_box: ActionBox,
        payoff: &str,
        convex_in_y: bool,
    ) -> Result<Self, ParametricError> {
        let vars = action_vars(x_box.dim(), y_box.dim(), &["z"]);
        let payoff = parse_all(&[payoff], &vars)?.remove(0);
        Ok(ConvexGameSpec {
            x_box,
            y_box,
            payoff,
            convex: convex_in_y,
        })
    }

    fn eval(&self, x: &[f64], y: &[f64], z: f64) -> Result<f64, ParametricError> {
        let mut p = Vec::with_capacity(x.len() + y.len() + 1);
        p.extend_from_slice(x);
        p.extend_from_slice(y);
        p.push(z);
        eval_at(&self.payoff, &p)
    }

    /// Midpoint convexity on random segments of the y box.
    pub fn spot_check(&self, z: f64, seed: u64) -> Result<(), ParametricError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |b: &ActionBox| -> Vec<f64> {
            b.bounds().iter().map(|&(lo, hi)| if lo == hi { lo } else { rng.gen_range(lo..=hi) }).collect()
        };
        for _ in 0..CONVEXITY_SAMPLES {
            let x = draw(&self.x_box);
            let y1 = draw(&self.y_box);
            let y2 = draw(&self.y_box);
            let mid: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| 0.5 * (a + b)).collect();
            let chord = 0.5 * (self.eval(&x, &y1, z)? + self.eval(&x, &y2, z)?);
            let excess = self.eval(&x, &mid, z)? - chord;
            if excess > 1e-9 {
                return Err(ParametricError::ConvexityViolation { x, y1, y2, excess });
            }
        }
        Ok(())
    }

    pub fn matrix(&self, z: f64, resolution: usize) -> Result<Matrix, Error> {
        let xs = self.x_box.grid(&vec![resolution; self.x_box.dim()])?;
        let ys = self.y_box.grid(&vec![resolution; self.y_box.dim()])?;
        let rows = par::try_map_indexed(xs.len(), |i| {
            ys.iter().map(|y| self.eval(&xs[i], y, z)).collect::<Result<Vec<_>, _>>()
        })?;
        Ok(Matrix::from_rows(&rows)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexValue {
    pub value: f64,
    /// Row grid indices of the best support.
    pub support: Vec<usize>,
    pub supports_checked: usize,
}

/// Value of a game convex in `y` as a maximum over supports of at most
/// `q + 1` maximizer grid points (`q = dim Y`), each support's weights being
/// optimal in the restricted matrix game.
pub fn convex_value(spec: &ConvexGameSpec, z: f64, resolution: usize, tol: f64) -> Result<ConvexValue, Error> {
    if !spec.convex {
        return Err(ParametricError::NotDeclaredConvex.into());
    }
    let q = spec.y_box.dim();
    if q > 2 {
        return Err(ParametricError::TooManyDimensions(q).into());
    }
    spec.spot_check(z, 0)?;
    let g = spec.matrix(z, resolution)?;
    let k = (q + 1).min(g.rows());
    let subsets = binomial(g.rows(), k);
    if subsets > SUPPORT_BUDGET {
        return Err(ParametricError::SupportBudget {
            subsets,
            budget: SUPPORT_BUDGET,
        }
        .into());
    }
    let mut supports = Vec::with_capacity(subsets);
    for_each_subset(g.rows(), k, |s| supports.push(s.to_vec()));
    let values = par::map_slice(&supports, |s| {
        solve_matrix_game(&g.select_rows(s), tol).map(|sol| sol.value)
    });
    let mut best = (f64::NEG_INFINITY, 0);
    for (idx, v) in values.into_iter().enumerate() {
        let v = v?;
        if v > best.0 {
            best = (v, idx);
        }
    }
    Ok(ConvexValue {
        value: best.0,
        support: supports.swap_remove(best.1),
        supports_checked: subsets,
    })
}

/// Mixed value of the full grid matrix of a convex game (reference route).
pub fn convex_grid_value(spec: &ConvexGameSpec, z: f64, resolution: usize, tol: f64) -> Result<f64, Error> {
    Ok(solve_matrix_game(&spec.matrix(z, resolution)?, tol)?.value)
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// `V(z) = z / (2 ln(1 + z))`, the value of the McKinsey game on `(0, 1]`.
pub fn mckinsey_value(z: f64) -> Result<f64, ParametricError> {
    if !(z > 0.0 && z <= 1.0) {
        return Err(ParametricError::ZOutOfRange(z));
    }
    Ok(z / (2.0 * z.ln_1p()))
}

/// Grid payoff matrix of the McKinsey game at `z`.
pub fn mckinsey_matrix(z: f64, resolution: usize) -> Result<Matrix, Error> {
    if !(z > 0.0 && z <= 1.0) {
        return Err(ParametricError::ZOutOfRange(z).into());
    }
    let vars = VarSet::new(["x", "y", "z"]);
    let payoff = expr::parse(MCKINSEY_PAYOFF, &vars).expect("built-in payoff parses");
    let grid = ActionBox::unit(1).grid(&[resolution])?;
    let rows = par::try_map_indexed(grid.len(), |i| {
        grid.iter()
            .map(|y| eval_at(&payoff, &[grid[i][0], y[0], z]))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(Matrix::from_rows(&rows)?)
}

/// Mixed value of the McKinsey game on a `resolution × resolution` grid.
pub fn mckinsey_grid_value(z: f64, resolution: usize, tol: f64) -> Result<f64, Error> {
    Ok(solve_matrix_game(&mckinsey_matrix(z, resolution)?, tol)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_game::matrix_game_bruteforce;

    const TOL: f64 = 1e-9;

    fn unit_sep(a: &[&str], b: &[&str], m: &[Vec<&str>]) -> SeparableSpec {
        SeparableSpec::parse(ActionBox::unit(1), ActionBox::unit(1), a, b, m).unwrap()
    }

    #[test]
    fn product_game_value_is_zero() {
        let s = unit_sep(&["x"], &["y"], &[vec!["1"]]);
        assert_eq!(separable_value(&s, 0.5, 6, TOL).unwrap(), 0.0);
        let g = s.matrix(0.5, 6).unwrap();
        assert_eq!(matrix_game_bruteforce(&g).unwrap(), 0.0);
    }

    #[test]
    fn centered_product_has_saddle_at_half() {
        let s = unit_sep(&["x-0.5"], &["y-0.5"], &[vec!["1"]]);
        assert!(separable_value(&s, 1.0, 21, TOL).unwrap().abs() < 2.0 * TOL);
    }

    #[test]
    fn representation_identity() {
        let direct = unit_sep(&["x"], &["y"], &[vec!["1"]]);
        let basis = unit_sep(&["1", "x"], &["1", "y"], &[vec!["0", "0"], vec!["0", "1"]]);
        assert_eq!(direct.matrix(0.3, 9).unwrap(), basis.matrix(0.3, 9).unwrap());
    }

    #[test]
    fn reparameterized_basis_keeps_the_value() {
        // (x + 1)(y − z) + z·x·y written two ways
        let a = unit_sep(&["x + 1", "x"], &["y - z", "y"], &[vec!["1", "0"], vec!["0", "z"]]);
        let b = unit_sep(
            &["1", "x"],
            &["1", "y"],
            &[vec!["-z", "1"], vec!["-z", "1 + z"]],
        );
        for z in [0.2, 0.7] {
            let va = separable_value(&a, z, 15, TOL).unwrap();
            let vb = separable_value(&b, z, 15, TOL).unwrap();
            assert!((va - vb).abs() <= 2.0 * TOL);
        }
    }

    #[test]
    fn player_swap_antisymmetry() {
        let s = unit_sep(&["x", "x^2"], &["1", "y", "exp(y*z)"], &[
            vec!["1", "-2", "z"],
            vec!["0.5", "1", "-1"],
        ]);
        let v = separable_value(&s, 0.4, 12, TOL).unwrap();
        let w = separable_value(&s.swapped(), 0.4, 12, TOL).unwrap();
        assert!((v + w).abs() <= 2.0 * TOL, "{v} vs {w}");
    }

    #[test]
    fn separable_shape_errors() {
        assert!(SeparableSpec::parse(ActionBox::unit(1), ActionBox::unit(1), &["x"], &["y"], &[vec!["1", "2"]]).is_err());
        assert!(matches!(
            SeparableSpec::parse(ActionBox::unit(1), ActionBox::unit(1), &["y"], &["y"], &[vec!["1"]]),
            Err(ParametricError::Expr { .. })
        ));
    }

    #[test]
    fn squared_distance_game() {
        let s = ConvexGameSpec::parse(ActionBox::unit(1), ActionBox::unit(1), "(y-x)^2", true).unwrap();
        let cv = convex_value(&s, 0.5, 21, TOL).unwrap();
        assert!((cv.value - 0.25).abs() < 1e-12, "{cv:?}");
        assert_eq!(cv.support, vec![0, 20]);
        assert!((convex_grid_value(&s, 0.5, 21, TOL).unwrap() - 0.25).abs() < 2.0 * TOL);
    }

    #[test]
    fn dummy_maximizer() {
        let s = ConvexGameSpec::parse(ActionBox::unit(1), ActionBox::unit(1), "(y - 0.3)^2 + z", true).unwrap();
        let cv = convex_value(&s, 0.5, 11, TOL).unwrap();
        let grid_min = (0..11).map(|j| (j as f64 / 10.0 - 0.3).powi(2) + 0.5).fold(f64::INFINITY, f64::min);
        assert!((cv.value - grid_min).abs() <= 2.0 * TOL);
    }

    #[test]
    fn linear_in_y_matches_separable() {
        let c = ConvexGameSpec::parse(ActionBox::unit(1), ActionBox::unit(1), "x*y - x^2*z + y/3", true).unwrap();
        let s = unit_sep(&["x", "x^2", "1"], &["y", "1"], &[
            vec!["1", "0"],
            vec!["0", "-z"],
            vec!["1/3", "0"],
        ]);
        let a = convex_value(&c, 0.8, 17, TOL).unwrap().value;
        let b = separable_value(&s, 0.8, 17, TOL).unwrap();
        assert!((a - b).abs() <= 2.0 * TOL, "{a} vs {b}");
    }

    #[test]
    fn two_dimensional_minimizer() {
        let c = ConvexGameSpec::parse(
            ActionBox::unit(1),
            ActionBox::unit(2),
            "(y1 - x)^2 + (y2 - x)^2",
            true,
        )
        .unwrap();
        let a = convex_value(&c, 0.5, 9, TOL).unwrap();
        let b = convex_grid_value(&c, 0.5, 9, TOL).unwrap();
        assert!((a.value - b).abs() <= 2.0 * TOL);
    }

    #[test]
    fn convexity_is_enforced() {
        let c = ConvexGameSpec::parse(ActionBox::unit(1), ActionBox::unit(1), "-(y-x)^2", true).unwrap();
        assert!(matches!(
            convex_value(&c, 0.5, 5, TOL),
            Err(Error::Parametric(ParametricError::ConvexityViolation { .. }))
        ));
        let c = ConvexGameSpec::parse(ActionBox::unit(1), ActionBox::unit(1), "(y-x)^2", false).unwrap();
        assert!(matches!(
            convex_value(&c, 0.5, 5, TOL),
            Err(Error::Parametric(ParametricError::NotDeclaredConvex))
        ));
        let c = ConvexGameSpec::parse(ActionBox::unit(1), ActionBox::unit(2), "(y1-x)^2 + y2^2", true).unwrap();
        assert!(matches!(
            convex_value(&c, 0.5, 80, TOL),
            Err(Error::Parametric(ParametricError::SupportBudget { .. }))
        ));
    }

    #[test]
    fn mckinsey_closed_form() {
        assert!((mckinsey_value(1.0).unwrap() - 0.721_347_520_444_481_7).abs() < 1e-15);
        assert!((mckinsey_value(0.5).unwrap() - 0.616_575_865_594_107_9).abs() < 1e-14);
        assert!((mckinsey_value(1e-9).unwrap() - 0.5).abs() < 1e-9);
        assert!(mckinsey_value(0.0).is_err());
        assert!(mckinsey_value(1.5).is_err());
    }

    #[test]
    fn mckinsey_grid_is_sandwiched() {
        for z in [0.1, 0.6, 1.0] {
            let a = mckinsey_matrix(z, 31).unwrap();
            let v = solve_matrix_game(&a, TOL).unwrap().value;
            assert!(a.pure_maximin().0 <= v + TOL && v <= a.pure_minimax().0 + TOL);
        }
    }
}
