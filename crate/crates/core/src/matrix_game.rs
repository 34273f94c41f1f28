//! One-shot zero-sum matrix games: a dense simplex solver that returns a
//! duality-gap certificate, and an exhaustive support-enumeration oracle.
//!
//! The row player maximizes, the column player minimizes.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixGameError {
    #[error("matrix is empty")]
    Empty,
    #[error("ragged matrix: row {row} has {len} entries, expected {expected}")]
    Ragged {
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("solver stopped after {pivots} pivots with duality gap {gap:e} > {tol:e}")]
    GapNotReached { pivots: usize, gap: f64, tol: f64 },
    #[error("support enumeration is limited to {max}x{max} matrices, got {rows}x{cols}")]
    TooLarge { rows: usize, cols: usize, max: usize },
    #[error("support enumeration found no equilibrium")]
    NoEquilibrium,
}

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MatrixGameError> {
        let expected = rows.first().map(Vec::len).unwrap_or(0);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != expected {
                return Err(MatrixGameError::Ragged {
                    row,
                    len: r.len(),
                    expected,
                });
            }
        }
        Ok(Matrix {
            rows: rows.len(),
            cols: expected,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Submatrix on the given row indices.
    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        Matrix::from_fn(rows.len(), self.cols, |i, j| self.get(rows[i], j))
    }

    fn validate(&self) -> Result<(), MatrixGameError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(MatrixGameError::Empty);
        }
        if let Some(k) = self.data.iter().position(|x| !x.is_finite()) {
            return Err(MatrixGameError::NonFinite {
                row: k / self.cols,
                col: k % self.cols,
            });
        }
        Ok(())
    }

    /// Smallest payoff the row strategy guarantees: `min_j (pᵀA)_j`.
    pub fn row_guarantee(&self, p: &[f64]) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| p[i] * self.get(i, j)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest payoff the column strategy concedes: `max_i (Aq)_i`.
    pub fn col_guarantee(&self, q: &[f64]) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(q).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Pure-strategy maximin `max_i min_j A_ij` with its row.
    pub fn pure_maximin(&self) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for i in 0..self.rows {
            let m = self.row(i).iter().copied().fold(f64::INFINITY, f64::min);
            if m > best.0 {
                best = (m, i);
            }
        }
        best
    }

    /// Pure-strategy minimax `min_j max_i A_ij` with its column.
    pub fn pure_minimax(&self) -> (f64, usize) {
        let mut col_max = vec![f64::NEG_INFINITY; self.cols];
        for i in 0..self.rows {
            for (m, &a) in col_max.iter_mut().zip(self.row(i)) {
                *m = m.max(a);
            }
        }
        let mut best = (f64::INFINITY, 0);
        for (j, &m) in col_max.iter().enumerate() {
            if m < best.0 {
                best = (m, j);
            }
        }
        best
    }
}

/// Value and optimal mixed strategies of a matrix game, with the certificate
/// `min_j (pᵀA)_j ≥ value − gap` and `max_i (Aq)_i ≤ value + gap`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGameSolution {
    pub value: f64,
    pub row_strategy: Vec<f64>,
    pub col_strategy: Vec<f64>,
    pub duality_gap: f64,
}

impl MatrixGameSolution {
    /// Rebuilds value and gap from a strategy pair.
    pub fn certify(a: &Matrix, row_strategy: Vec<f64>, col_strategy: Vec<f64>) -> Self {
        let lo = a.row_guarantee(&row_strategy);
        let hi = a.col_guarantee(&col_strategy);
        MatrixGameSolution {
            value: 0.5 * (lo + hi),
            duality_gap: (hi - lo).max(0.0),
            row_strategy,
            col_strategy,
        }
    }

    /// Checks the certificate inequalities against `a` with extra slack.
    pub fn is_certificate_for(&self, a: &Matrix, slack: f64) -> bool {
        let sums_ok = |s: &[f64]| {
            s.iter().all(|&x| x >= 0.0) && (s.iter().sum::<f64>() - 1.0).abs() <= 1e-12
        };
        sums_ok(&self.row_strategy)
            && sums_ok(&self.col_strategy)
            && a.row_guarantee(&self.row_strategy) >= self.value - self.duality_gap - slack
            && a.col_guarantee(&self.col_strategy) <= self.value + self.duality_gap + slack
    }
}

fn unit(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    for x in v.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        for x in v.iter_mut() {
            *x /= s;
        }
    } else {
        let n = v.len() as f64;
        v.iter_mut().for_each(|x| *x = 1.0 / n);
    }
    v
}

/// Solves the mixed extension of `a` to duality gap `tol`.
///
/// Saddle points are detected up front. Otherwise the matrix is shifted to be
/// positive and the column player's LP `max 1ᵀw s.t. Bw ≤ 1, w ≥ 0` is solved
/// with a dense tableau simplex; the row strategy is read off the reduced
/// costs of the slack columns.
pub fn solve_matrix_game(a: &Matrix, tol: f64) -> Result<MatrixGameSolution, MatrixGameError> {
    if !(tol > 0.0) {
        return Err(MatrixGameError::BadTolerance(tol));
    }
    a.validate()?;
    let (m, n) = (a.rows, a.cols);

    let (maximin, row) = a.pure_maximin();
    let (minimax, col) = a.pure_minimax();
    if maximin == minimax {
        return Ok(MatrixGameSolution {
            value: maximin,
            row_strategy: unit(m, row),
            col_strategy: unit(n, col),
            duality_gap: 0.0,
        });
    }

    let lo = a.data.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = a.data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = (hi - lo).max(f64::MIN_POSITIVE);
    // B = (A - lo) / scale + 1, entries in [1, 2]
    let b = a.map(|x| (x - lo) / scale + 1.0);
    let width = n + m + 1;
    let mut tab = vec![0.0; m * width];
    for i in 0..m {
        let r = &mut tab[i * width..(i + 1) * width];
        r[..n].copy_from_slice(b.row(i));
        r[n + i] = 1.0;
        r[width - 1] = 1.0;
    }
    let mut obj = vec![0.0; width];
    obj[..n].iter_mut().for_each(|c| *c = -1.0);
    let mut basis: Vec<usize> = (n..n + m).collect();

    const EPS: f64 = 1e-11;
    const REFRESH_EVERY: usize = 64;
    const FINAL_REFRESHES: usize = 32;
    const FEAS_TOL: f64 = 1e-11;
    const PIVOT_TOL: f64 = 1e-9;
    let budget = 50 * (m + n) + 1000;
    let mut pivots = 0;
    let mut since_refresh = 0;
    let mut final_refreshes = 0;
    let mut degenerate_run = 0;
    let mut bland = false;
    loop {
        if since_refresh >= REFRESH_EVERY {
            refactor(&b, &basis, &mut tab, &mut obj);
            since_refresh = 0;
        }
        let entering = if bland {
            (0..width - 1).find(|&j| obj[j] < -EPS)
        } else {
            let mut best = None;
            let mut most = -EPS;
            for (j, &c) in obj[..width - 1].iter().enumerate() {
                if c < most {
                    most = c;
                    best = Some(j);
                }
            }
            best
        };
        if pivots >= budget {
            break;
        }
        let Some(e) = entering else {
            // primal infeasibility uncovered by a refresh: dual simplex step
            let (r, rhs) = (0..m)
                .map(|i| (i, tab[i * width + width - 1]))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .expect("m > 0");
            if rhs < -FEAS_TOL {
                let e = (0..width - 1)
                    .filter(|&j| tab[r * width + j] < -PIVOT_TOL)
                    .min_by(|&x, &y| {
                        (obj[x] / -tab[r * width + x]).total_cmp(&(obj[y] / -tab[r * width + y]))
                    });
                let Some(e) = e else { break };
                pivot(&mut tab, &mut obj, width, r, e);
                basis[r] = e;
                pivots += 1;
                since_refresh += 1;
                continue;
            }
            if since_refresh == 0 {
                break;
            }
            // confirm optimality on a freshly inverted basis
            refactor(&b, &basis, &mut tab, &mut obj);
            since_refresh = 0;
            final_refreshes += 1;
            if final_refreshes >= FINAL_REFRESHES {
                break;
            }
            continue;
        };

        // Harris two-pass ratio test: bound the step with a small feasibility
        // allowance, then take the largest pivot among the rows within it.
        let mut bound = f64::INFINITY;
        for i in 0..m {
            let coef = tab[i * width + e];
            if coef > PIVOT_TOL {
                bound = bound.min((tab[i * width + width - 1].max(0.0) + FEAS_TOL) / coef);
            }
        }
        let mut leave: Option<(usize, f64)> = None;
        let mut largest = 0.0;
        for i in 0..m {
            let coef = tab[i * width + e];
            if coef > PIVOT_TOL {
                let ratio = tab[i * width + width - 1].max(0.0) / coef;
                if ratio <= bound && (coef > largest || (coef == largest && leave.is_some_and(|(r, _)| basis[i] < basis[r]))) {
                    largest = coef;
                    leave = Some((i, ratio));
                }
            }
        }
        // B > 0 keeps the feasible region bounded, so some row always qualifies.
        let Some((r, ratio)) = leave else { break };
        if ratio <= 1e-15 {
            degenerate_run += 1;
            if degenerate_run > m + n {
                bland = true;
            }
        } else {
            degenerate_run = 0;
        }

        pivot(&mut tab, &mut obj, width, r, e);
        basis[r] = e;
        pivots += 1;
        since_refresh += 1;
    }

    let mut w = vec![0.0; n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            w[b] = tab[i * width + width - 1];
        }
    }
    let u: Vec<f64> = obj[n..n + m].to_vec();
    let sol = MatrixGameSolution::certify(a, normalize(u), normalize(w));
    if sol.duality_gap > tol {
        return Err(MatrixGameError::GapNotReached {
            pivots,
            gap: sol.duality_gap,
            tol,
        });
    }
    Ok(sol)
}

/// Rebuilds the tableau `B_β⁻¹ [B | I | 1]` and the reduced costs from the
/// original data, discarding the roundoff accumulated by pivoting.
fn refactor(b: &Matrix, basis: &[usize], tab: &mut [f64], obj: &mut [f64]) {
    let (m, n) = (b.rows, b.cols);
    let width = n + m + 1;
    let column = |j: usize, i: usize| -> f64 {
        if j < n {
            b.get(i, j)
        } else if j - n == i {
            1.0
        } else {
            0.0
        }
    };
    // Gauss-Jordan on [B_β | I] with partial pivoting gives B_β⁻¹.
    let w2 = 2 * m;
    let mut aug = vec![0.0; m * w2];
    for i in 0..m {
        for (k, &j) in basis.iter().enumerate() {
            aug[i * w2 + k] = column(j, i);
        }
        aug[i * w2 + m + i] = 1.0;
    }
    for c in 0..m {
        let p = (c..m)
            .max_by(|&x, &y| aug[x * w2 + c].abs().total_cmp(&aug[y * w2 + c].abs()))
            .unwrap_or(c);
        if aug[p * w2 + c] == 0.0 {
            return;
        }
        if p != c {
            for k in 0..w2 {
                aug.swap(p * w2 + k, c * w2 + k);
            }
        }
        let piv = aug[c * w2 + c];
        for k in 0..w2 {
            aug[c * w2 + k] /= piv;
        }
        let prow: Vec<f64> = aug[c * w2..(c + 1) * w2].to_vec();
        for i in 0..m {
            if i != c {
                let f = aug[i * w2 + c];
                if f != 0.0 {
                    for k in 0..w2 {
                        aug[i * w2 + k] -= f * prow[k];
                    }
                }
            }
        }
    }
    let inv = |i: usize, k: usize| aug[i * w2 + m + k];
    for i in 0..m {
        let row = &mut tab[i * width..(i + 1) * width];
        for j in 0..n {
            row[j] = (0..m).map(|k| inv(i, k) * b.get(k, j)).sum();
        }
        for k in 0..m {
            row[n + k] = inv(i, k);
        }
        row[basis[i]] = 1.0;
    }
    // x_β = B_β⁻¹ 1 and π = c_βᵀ B_β⁻¹ (c = −1 on structural columns), each
    // with one step of iterative refinement
    let mut x: Vec<f64> = (0..m).map(|i| (0..m).map(|k| inv(i, k)).sum()).collect();
    let cb: Vec<f64> = basis.iter().map(|&j| if j < n { -1.0 } else { 0.0 }).collect();
    let mut pi: Vec<f64> = (0..m).map(|k| (0..m).map(|i| cb[i] * inv(i, k)).sum()).collect();
    let res_x: Vec<f64> = (0..m)
        .map(|r| 1.0 - (0..m).map(|i| column(basis[i], r) * x[i]).sum::<f64>())
        .collect();
    let res_pi: Vec<f64> = (0..m)
        .map(|i| cb[i] - (0..m).map(|r| pi[r] * column(basis[i], r)).sum::<f64>())
        .collect();
    for i in 0..m {
        x[i] += (0..m).map(|k| inv(i, k) * res_x[k]).sum::<f64>();
    }
    for k in 0..m {
        pi[k] += (0..m).map(|i| res_pi[i] * inv(i, k)).sum::<f64>();
    }
    for i in 0..m {
        tab[i * width + width - 1] = x[i];
    }
    for j in 0..n {
        obj[j] = -1.0 - (0..m).map(|k| pi[k] * b.get(k, j)).sum::<f64>();
    }
    for k in 0..m {
        obj[n + k] = -pi[k];
    }
    for &j in basis {
        obj[j] = 0.0;
    }
}

fn pivot(tab: &mut [f64], obj: &mut [f64], width: usize, r: usize, e: usize) {
    let piv = tab[r * width + e];
    {
        let row = &mut tab[r * width..(r + 1) * width];
        for x in row.iter_mut() {
            *x /= piv;
        }
        row[e] = 1.0;
    }
    let (before, rest) = tab.split_at_mut(r * width);
    let (prow, after) = rest.split_at_mut(width);
    let eliminate = |row: &mut [f64]| {
        let f = row[e];
        if f != 0.0 {
            for (x, &p) in row.iter_mut().zip(prow.iter()) {
                *x -= f * p;
            }
            row[e] = 0.0;
        }
    };
    before.chunks_exact_mut(width).for_each(eliminate);
    after.chunks_exact_mut(width).for_each(eliminate);
    eliminate(obj);
}

pub const BRUTEFORCE_MAX: usize = 6;

/// Exact mixed value by enumerating equal-size support pairs.
///
/// Every matrix game has an extreme optimal pair supported on a nonsingular
/// square submatrix of a positive shift of `a`, so it suffices to solve the
/// equalizing systems on each such submatrix and keep the first pair that
/// satisfies all optimality inequalities. Test oracle; limited to 6×6.
pub fn matrix_game_bruteforce(a: &Matrix) -> Result<f64, MatrixGameError> {
    a.validate()?;
    let (m, n) = (a.rows, a.cols);
    if m > BRUTEFORCE_MAX || n > BRUTEFORCE_MAX {
        return Err(MatrixGameError::TooLarge {
            rows: m,
            cols: n,
            max: BRUTEFORCE_MAX,
        });
    }
    let lo = a.data.iter().copied().fold(f64::INFINITY, f64::min);
    let b = a.map(|x| x - lo + 1.0);
    let feas = 1e-9 * (1.0 + b.data.iter().fold(0.0f64, |s, x| s.max(x.abs())));

    for k in 1..=m.min(n) {
        for rows in subsets(m, k) {
            for cols in subsets(n, k) {
                let Some((q, v)) = equalize(&b, &rows, &cols, false) else {
                    continue;
                };
                let Some((p, v2)) = equalize(&b, &rows, &cols, true) else {
                    continue;
                };
                if q.iter().chain(&p).any(|&x| x < -feas) || (v - v2).abs() > feas {
                    continue;
                }
                let mut full_p = vec![0.0; m];
                let mut full_q = vec![0.0; n];
                rows.iter().zip(&p).for_each(|(&i, &x)| full_p[i] = x);
                cols.iter().zip(&q).for_each(|(&j, &x)| full_q[j] = x);
                if b.row_guarantee(&full_p) >= v - feas && b.col_guarantee(&full_q) <= v + feas {
                    return Ok(v + lo - 1.0);
                }
            }
        }
    }
    Err(MatrixGameError::NoEquilibrium)
}

/// Solves `B_IJ s = v·1, Σs = 1` (or the transposed system for the row
/// player) for the strategy `s` on the support and the value `v`.
fn equalize(b: &Matrix, rows: &[usize], cols: &[usize], transpose: bool) -> Option<(Vec<f64>, f64)> {
    let k = rows.len();
    let mut sys = vec![vec![0.0; k + 2]; k + 1];
    for r in 0..k {
        for c in 0..k {
            sys[r][c] = if transpose {
                b.get(rows[c], cols[r])
            } else {
                b.get(rows[r], cols[c])
            };
        }
        sys[r][k] = -1.0;
    }
    for c in 0..k {
        sys[k][c] = 1.0;
    }
    sys[k][k + 1] = 1.0;
    let x = gauss_solve(sys)?;
    Some((x[..k].to_vec(), x[k]))
}

fn gauss_solve(mut aug: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = aug.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| aug[i][col].abs().total_cmp(&aug[j][col].abs()))?;
        if aug[p][col].abs() < 1e-12 {
            return None;
        }
        aug.swap(col, p);
        for r in 0..n {
            if r != col {
                let f = aug[r][col] / aug[col][col];
                if f != 0.0 {
                    for c in col..=n {
                        aug[r][c] -= f * aug[col][c];
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| aug[i][n] / aug[i][i]).collect())
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Calls `f` on every `k`-subset of `0..n` in lexicographic order.
pub(crate) fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    for s in subsets(n, k) {
        f(&s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-9;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn matching_pennies() {
        let a = m(&[&[1.0, -1.0], &[-1.0, 1.0]]);
        let s = solve_matrix_game(&a, TOL).unwrap();
        assert!(s.value.abs() < TOL);
        for p in s.row_strategy.iter().chain(&s.col_strategy) {
            assert!((p - 0.5).abs() < 1e-12);
        }
        assert!(s.is_certificate_for(&a, 0.0));
    }

    #[test]
    fn one_by_one() {
        let a = m(&[&[-2.5]]);
        let s = solve_matrix_game(&a, TOL).unwrap();
        assert_eq!(s.value, -2.5);
        assert_eq!(s.row_strategy, vec![1.0]);
        assert_eq!(s.col_strategy, vec![1.0]);
    }

    #[test]
    fn two_by_two_equalizer() {
        // p·3 = 2 − p·... : row (1/2, 1/2), value 3/2
        let a = m(&[&[3.0, 1.0], &[0.0, 2.0]]);
        let s = solve_matrix_game(&a, TOL).unwrap();
        assert!((s.value - 1.5).abs() < TOL);
        assert!((s.row_strategy[0] - 0.5).abs() < 1e-9);
        assert!((matrix_game_bruteforce(&a).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn saddle_point_is_found_by_bruteforce() {
        let a = m(&[&[4.0, 2.0, 3.0], &[1.0, 0.0, 5.0]]);
        assert_eq!(matrix_game_bruteforce(&a).unwrap(), 2.0);
        assert_eq!(solve_matrix_game(&a, TOL).unwrap().value, 2.0);
    }

    #[test]
    fn degenerate_games() {
        let zero = Matrix::from_fn(4, 5, |_, _| 0.0);
        assert_eq!(matrix_game_bruteforce(&zero).unwrap(), 0.0);
        assert_eq!(solve_matrix_game(&zero, TOL).unwrap().value, 0.0);
        // rock-paper-scissors
        let rps = m(&[&[0.0, -1.0, 1.0], &[1.0, 0.0, -1.0], &[-1.0, 1.0, 0.0]]);
        assert!(solve_matrix_game(&rps, TOL).unwrap().value.abs() < TOL);
        assert!(matrix_game_bruteforce(&rps).unwrap().abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert_eq!(
            solve_matrix_game(&Matrix::from_fn(0, 0, |_, _| 0.0), TOL),
            Err(MatrixGameError::Empty)
        );
        assert!(matches!(
            solve_matrix_game(&m(&[&[1.0, f64::NAN]]), TOL),
            Err(MatrixGameError::NonFinite { row: 0, col: 1 })
        ));
        assert!(matches!(
            solve_matrix_game(&m(&[&[1.0]]), 0.0),
            Err(MatrixGameError::BadTolerance(_))
        ));
        assert!(matches!(
            matrix_game_bruteforce(&Matrix::from_fn(7, 2, |i, j| (i + j) as f64)),
            Err(MatrixGameError::TooLarge { .. })
        ));
        assert!(Matrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn random_three_by_three_agrees_with_bruteforce() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let a = Matrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
            let s = solve_matrix_game(&a, TOL).unwrap();
            let v = matrix_game_bruteforce(&a).unwrap();
            assert!((s.value - v).abs() <= 2.0 * TOL, "{} vs {}", s.value, v);
        }
    }

    #[test]
    fn large_random_game_certifies() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = Matrix::from_fn(120, 90, |_, _| rng.gen_range(-3.0..3.0));
        let s = solve_matrix_game(&a, TOL).unwrap();
        assert!(s.duality_gap <= TOL);
        assert!(s.is_certificate_for(&a, 0.0));
    }

    fn arb_matrix() -> impl Strategy<Value = Matrix> {
        (1usize..=6, 1usize..=6).prop_flat_map(|(r, c)| {
            prop::collection::vec(-5.0f64..5.0, r * c)
                .prop_map(move |d| Matrix::from_fn(r, c, |i, j| d[i * c + j]))
        })
    }

    proptest! {
        #[test]
        fn agrees_with_bruteforce(a in arb_matrix()) {
            let s = solve_matrix_game(&a, TOL).unwrap();
            prop_assert!(s.is_certificate_for(&a, 0.0));
            let v = matrix_game_bruteforce(&a).unwrap();
            prop_assert!((s.value - v).abs() <= 2.0 * TOL);
        }

        #[test]
        fn player_swap_antisymmetry(a in arb_matrix()) {
            let s = solve_matrix_game(&a, TOL).unwrap();
            let swapped = solve_matrix_game(&a.transpose().map(|x| -x), TOL).unwrap();
            prop_assert!((s.value + swapped.value).abs() <= 2.0 * TOL);
        }

        #[test]
        fn translation_shifts_value(a in arb_matrix(), c in -10.0f64..10.0) {
            let s = solve_matrix_game(&a, TOL).unwrap();
            let shifted = a.map(|x| x + c);
            let t = solve_matrix_game(&shifted, TOL).unwrap();
            prop_assert!((t.value - s.value - c).abs() <= 2.0 * TOL);
            let moved = MatrixGameSolution { value: s.value + c, ..s.clone() };
            prop_assert!(moved.is_certificate_for(&shifted, 1e-12));
        }

        #[test]
        fn value_is_monotone(a in arb_matrix(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = Matrix::from_fn(a.rows(), a.cols(), |i, j| a.get(i, j) + rng.gen_range(0.0..1.0));
            let va = solve_matrix_game(&a, TOL).unwrap().value;
            let vb = solve_matrix_game(&b, TOL).unwrap().value;
            prop_assert!(va <= vb + 2.0 * TOL);
        }
    }
}
