//! Independent reference computations used to check the solvers.

use thiserror::Error;

pub use crate::matrix_game::matrix_game_bruteforce;
pub use crate::values::stationary_payoff;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("matrix must be square, nonnegative and nonempty")]
    BadMatrix,
    #[error("power iteration did not bracket the root within {0} iterations")]
    NoConvergence(usize),
    #[error("distribution must be nonnegative with positive mass, and match h in length")]
    BadDistribution,
    #[error("grid needs at least one point per edge")]
    EmptyGrid,
}

/// Perron root of a nonnegative irreducible matrix by power iteration,
/// stopped once the Collatz–Wielandt bounds `min (Av)_i/v_i ≤ ρ ≤ max (Av)_i/v_i`
/// are within `tol`.
pub fn perron_root(a: &[Vec<f64>], tol: f64, max_iter: usize) -> Result<f64, OracleError> {
    let d = a.len();
    if d == 0 || a.iter().any(|r| r.len() != d || r.iter().any(|x| !(*x >= 0.0))) {
        return Err(OracleError::BadMatrix);
    }
    let mut v = vec![1.0; d];
    for _ in 0..max_iter {
        let w: Vec<f64> = a.iter().map(|r| r.iter().zip(&v).map(|(x, y)| x * y).sum()).collect();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (wi, vi) in w.iter().zip(&v) {
            let q = wi / vi;
            lo = lo.min(q);
            hi = hi.max(q);
        }
        if hi - lo <= tol * hi.max(1.0) {
            return Ok(0.5 * (lo + hi));
        }
        // lazy power step keeps periodic matrices converging
        let norm = w.iter().sum::<f64>();
        v = v.iter().zip(&w).map(|(x, y)| 0.5 * (x + y / norm * d as f64)).collect();
        if v.iter().any(|x| !(*x > 0.0)) {
            return Err(OracleError::BadMatrix);
        }
    }
    Err(OracleError::NoConvergence(max_iter))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KlGrid {
    /// `max_q −KL(q‖p) + ⟨q, h⟩` over the grid.
    pub value: f64,
    pub argmax: Vec<f64>,
    /// `KL(q̂‖q*)` for the grid rounding `q̂` of the Gibbs optimum
    /// `q* ∝ p e^h`; bounds the gap to the continuous maximum.
    pub slack: f64,
}

fn dual_objective(q: &[f64], p: &[f64], h: &[f64]) -> f64 {
    let mut s = 0.0;
    for ((qi, pi), hi) in q.iter().zip(p).zip(h) {
        if *qi > 0.0 {
            if *pi == 0.0 {
                return f64::NEG_INFINITY;
            }
            s += qi * (hi + pi.ln() - qi.ln());
        }
    }
    s
}

/// Compositions of `n` into `d` nonnegative parts, in lexicographic order.
fn for_each_composition(n: usize, d: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(rest: usize, slot: usize, buf: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if slot + 1 == buf.len() {
            buf[slot] = rest;
            f(buf);
            return;
        }
        for k in 0..=rest {
            buf[slot] = k;
            rec(rest - k, slot + 1, buf, f);
        }
    }
    let mut buf = vec![0; d];
    rec(n, 0, &mut buf, f);
}

/// Maximum of the relative-entropy dual over the simplex grid with `n`
/// points per edge (denominator `n`).
pub fn kl_dual_grid(p: &[f64], h: &[f64], n: usize) -> Result<KlGrid, OracleError> {
    let d = p.len();
    let mass: f64 = p.iter().sum();
    if d == 0 || h.len() != d || p.iter().any(|x| !(*x >= 0.0)) || !(mass > 0.0) {
        return Err(OracleError::BadDistribution);
    }
    if n == 0 {
        return Err(OracleError::EmptyGrid);
    }
    let p: Vec<f64> = p.iter().map(|x| x / mass).collect();
    let shift = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_mass = mass.ln();

    let mut best = (f64::NEG_INFINITY, vec![0.0; d]);
    let mut q = vec![0.0; d];
    for_each_composition(n, d, &mut |k| {
        for (qi, ki) in q.iter_mut().zip(k) {
            *qi = *ki as f64 / n as f64;
        }
        let v = dual_objective(&q, &p, h);
        if v > best.0 {
            best = (v, q.clone());
        }
    });

    let gibbs: Vec<f64> = {
        let w: Vec<f64> = p.iter().zip(h).map(|(pi, hi)| pi * (hi - shift).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    };
    let rounded = round_to_grid(&gibbs, n);
    let slack: f64 = rounded
        .iter()
        .zip(&gibbs)
        .filter(|(r, _)| **r > 0.0)
        .map(|(r, g)| r * (r / g).ln())
        .sum();
    Ok(KlGrid {
        value: best.0 + log_mass,
        argmax: best.1,
        slack: slack.max(0.0),
    })
}

/// Largest-remainder rounding of a distribution to denominator `n`.
fn round_to_grid(q: &[f64], n: usize) -> Vec<f64> {
    let scaled: Vec<f64> = q.iter().map(|x| x * n as f64).collect();
    let mut k: Vec<usize> = scaled.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..q.len()).collect();
    order.sort_by(|&a, &b| (scaled[b] - scaled[b].floor()).total_cmp(&(scaled[a] - scaled[a].floor())));
    let missing = n.saturating_sub(k.iter().sum());
    for &i in order.iter().take(missing) {
        k[i] += 1;
    }
    k.into_iter().map(|x| x as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perron_of_known_matrices() {
        let r = perron_root(&[vec![2.0, 1.0], vec![1.0, 2.0]], 1e-13, 10_000).unwrap();
        assert!((r - 3.0).abs() < 1e-12);
        let r = perron_root(&[vec![0.0, 1.0], vec![4.0, 0.0]], 1e-13, 10_000).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
        assert!(perron_root(&[vec![1.0, -1.0], vec![0.0, 1.0]], 1e-9, 10).is_err());
    }

    #[test]
    fn compositions_are_counted() {
        let mut count = 0;
        for_each_composition(50, 3, &mut |k| {
            assert_eq!(k.iter().sum::<usize>(), 50);
            count += 1;
        });
        assert_eq!(count, 51 * 52 / 2);
    }

    #[test]
    fn dual_grid_hits_gibbs_point() {
        // q* = (1/2, 1/4, 1/4) lies on the grid with n = 4
        let p = [1.0 / 3.0; 3];
        let h = [2f64.ln(), 0.0, 0.0];
        let g = kl_dual_grid(&p, &h, 4).unwrap();
        let lse = ((2.0 + 1.0 + 1.0) / 3.0f64).ln();
        assert!((g.value - lse).abs() < 1e-14);
        assert!(g.slack < 1e-15);
        assert_eq!(g.argmax, vec![0.5, 0.25, 0.25]);
    }

    #[test]
    fn unnormalized_weights() {
        let g = kl_dual_grid(&[2.0, 2.0], &[0.0, 0.0], 2).unwrap();
        assert!((g.value - 4f64.ln()).abs() < 1e-14);
        assert!(kl_dual_grid(&[0.0, 0.0], &[0.0, 0.0], 2).is_err());
    }

    #[test]
    fn rounding_sums_to_one() {
        let r = round_to_grid(&[0.333, 0.333, 0.334], 10);
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
