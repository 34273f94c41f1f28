//! Benchmark games with closed-form values.

use crate::game::{ActionBox, DiscretizedGame, GameError, GameSpec, StateData};
use crate::matrix_game::Matrix;

/// Payoff of the one-shot parametric game on `[0,1]²` whose value is
/// `z / (2 ln(1+z))`, over variables `x`, `y`, `z`.
pub const MCKINSEY_PAYOFF: &str = "(1+x)*(1+y*z)/(2*(1+x*y)^2)";

/// Probability of staying in the non-absorbing state of the two-state game.
pub const EXSHAP_STAY: &str = "(1+x)*y/(2*(1+x*y)^2)";
pub const EXSHAP_PAYOFF: &str = "(1+x)/(2*(1+x*y)^2)";

/// Two-state game on `[0,1]²`: state 1 absorbing with payoff 0; state 2 pays
/// `(1+x)/(2(1+xy)²)` and stays with probability `(1+x)y/(2(1+xy)²)`.
///
/// Its Shapley operator is `Ψ(f) = (f₁, f₁ + V(f₂ − f₁))` with `V` the value
/// of the [`MCKINSEY_PAYOFF`] game.
pub fn exshap_spec() -> GameSpec {
    let leave = format!("1-{EXSHAP_STAY}");
    GameSpec::parse(
        ActionBox::unit(1),
        ActionBox::unit(1),
        &["0", EXSHAP_PAYOFF],
        &[vec!["1", "0"], vec![leave.as_str(), EXSHAP_STAY]],
        None,
    )
    .expect("built-in game parses")
}

pub fn exshap_game(resolution: usize) -> Result<DiscretizedGame, GameError> {
    exshap_spec().discretize_uniform(resolution)
}

/// Exact discounted value of the second state of [`exshap_spec`]:
/// `λ(e^{(1−λ)/2} − 1)/(1 − λ)` for `λ ∈ (0, 1)`, and `½` at `λ = 1`.
pub fn exshap_discounted(lambda: f64) -> f64 {
    if lambda >= 1.0 {
        return 0.5;
    }
    let t = 0.5 * (1.0 - lambda);
    // e^t − 1 via exp_m1 keeps precision for λ near 1
    lambda * t.exp_m1() / (1.0 - lambda)
}

/// Single-state McKinsey game at a fixed parameter `z`; its one-shot value is
/// the parametric value `V(z)`.
pub fn mckinsey_spec(z: f64) -> GameSpec {
    let payoff = MCKINSEY_PAYOFF.replace('z', &format!("({z:?})"));
    GameSpec::parse(ActionBox::unit(1), ActionBox::unit(1), &[&payoff], &[vec!["1"]], None)
        .expect("built-in game parses")
}

/// `d` states with payoff `c` everywhere, `actions` actions per player and
/// uniform transitions.
pub fn constant_game(d: usize, c: f64, actions: usize) -> Result<DiscretizedGame, GameError> {
    let states = (0..d)
        .map(|_| StateData {
            grid_x: (0..actions).map(|i| vec![i as f64]).collect(),
            grid_y: (0..actions).map(|j| vec![j as f64]).collect(),
            payoff: Matrix::from_fn(actions, actions, |_, _| c),
            transition: vec![1.0 / d as f64; actions * actions * d],
        })
        .collect();
    DiscretizedGame::from_states(states, vec![None; d])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        assert!((exshap_discounted(0.5) - 0.284_025_416_687_741_4).abs() < 1e-15);
        // small-λ slope is e^{1/2} − 1
        let l = 1e-7;
        assert!((exshap_discounted(l) / l - (0.5f64.exp() - 1.0)).abs() < 1e-6);
        assert!((exshap_discounted(1.0 - 1e-12) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn closed_form_is_increasing() {
        let mut prev = 0.0;
        for i in 1..=100 {
            let v = exshap_discounted(i as f64 / 100.0);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn mckinsey_game_at_origin() {
        let g = mckinsey_spec(1.0).discretize_uniform(2).unwrap();
        assert_eq!(g.payoff(0).get(0, 0), 0.5);
    }
}
