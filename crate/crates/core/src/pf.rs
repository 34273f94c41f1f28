//! Order-preserving maps on the interior of the positive cone, their
//! log-glasses conjugates `Ψ = log ∘ T ∘ exp` and geometric growth rates.


use crate::expr::{self, Expr, ExprError, VarSet};
use crate::par;
use crate::shapley::Operator;
use crate::values::ValueVector;
use crate::Error;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PfError {
    #[error("map has dimension {expected}, vector has {got}")]
    Dimension { expected: usize, got: usize },
    #[error("map must have at least one coordinate")]
    Empty,
    #[error("coordinate {0} has no weight vectors")]
    EmptySet(usize),
    #[error("coordinate {coord}: weight vector {index} is invalid ({reason})")]
    BadWeight {
        coord: usize,
        index: usize,
        reason: String,
    },
    #[error("coordinate {coord}: map produced {value}, which is not a positive number")]
    NonPositive { coord: usize, value: f64 },
    #[error("expression `{what}`: {source}")]
    Expr { what: String, source: ExprError },
    #[error("starting vector must be strictly positive and finite")]
    BadStart,
    #[error("number of iterations must be at least 1")]
    ZeroSteps,
    #[error("all weights are zero")]
    ZeroWeights,
    #[error("growth rate not settled by n = {n}: Cauchy difference {difference:e}")]
    NotConverged { n: usize, difference: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapKind {
    /// `T_i(f) = min_{p ∈ M_i} ⟨p, f⟩`.
    MinLinear(Vec<Vec<Vec<f64>>>),
    /// `T_i(f) = max_{p ∈ M_i} ⟨p, f⟩`.
    MaxLinear(Vec<Vec<Vec<f64>>>),
    /// `T_i(f)` given as an expression in `f1 … fd`.
    Explicit(Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneMap {
    d: usize,
    kind: MapKind,
}

fn check_sets(sets: &[Vec<Vec<f64>>]) -> Result<usize, PfError> {
    let d = sets.len();
    if d == 0 {
        return Err(PfError::Empty);
    }
    for (i, set) in sets.iter().enumerate() {
        if set.is_empty() {
            return Err(PfError::EmptySet(i));
        }
        for (k, p) in set.iter().enumerate() {
            let bad = |reason: &str| PfError::BadWeight {
                coord: i,
                index: k,
                reason: reason.into(),
            };
            if p.len() != d {
                return Err(bad(&format!("length {} instead of {d}", p.len())));
            }
            if p.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(bad("entries must be finite and nonnegative"));
            }
            if !p.iter().any(|&w| w > 0.0) {
                return Err(bad("no strictly positive entry"));
            }
        }
    }
    Ok(d)
}

impl MonotoneMap {
    pub fn min_linear(sets: Vec<Vec<Vec<f64>>>) -> Result<Self, PfError> {
        let d = check_sets(&sets)?;
        Ok(MonotoneMap {
            d,
            kind: MapKind::MinLinear(sets),
        })
    }

    pub fn max_linear(sets: Vec<Vec<Vec<f64>>>) -> Result<Self, PfError> {
        let d = check_sets(&sets)?;
        Ok(MonotoneMap {
            d,
            kind: MapKind::MaxLinear(sets),
        })
    }

    /// `f ↦ A f` as a min-linear map with singleton sets.
    pub fn linear(rows: &[Vec<f64>]) -> Result<Self, PfError> {
        Self::min_linear(rows.iter().map(|r| vec![r.clone()]).collect())
    }

    /// Coordinates as expressions over `f1 … fd` (plain `f` when `d = 1`).
    pub fn explicit(coords: &[&str]) -> Result<Self, PfError> {
        let d = coords.len();
        if d == 0 {
            return Err(PfError::Empty);
        }
        let mut vars = VarSet::default();
        for i in 1..=d {
            let slot = vars.push(format!("f{i}"));
            if d == 1 {
                vars.alias("f", slot);
            }
        }
        let exprs = coords
            .iter()
            .map(|s| {
                expr::parse(s, &vars).map_err(|source| PfError::Expr {
                    what: s.to_string(),
                    source,
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(MonotoneMap {
            d,
            kind: MapKind::Explicit(exprs),
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    /// True for the min- and max-linear kinds, which are positively homogeneous.
    pub fn is_homogeneous(&self) -> bool {
        !matches!(self.kind, MapKind::Explicit(_))
    }

    fn check_dim(&self, v: &[f64]) -> Result<(), PfError> {
        if v.len() != self.d {
            return Err(PfError::Dimension {
                expected: self.d,
                got: v.len(),
            });
        }
        Ok(())
    }

    fn coordinate(&self, i: usize, f: &[f64]) -> Result<f64, PfError> {
        let dot = |p: &Vec<f64>| p.iter().zip(f).map(|(a, b)| a * b).sum::<f64>();
        let v = match &self.kind {
            MapKind::MinLinear(sets) => sets[i].iter().map(dot).fold(f64::INFINITY, f64::min),
            MapKind::MaxLinear(sets) => sets[i].iter().map(dot).fold(f64::NEG_INFINITY, f64::max),
            MapKind::Explicit(exprs) => exprs[i].eval(f).map_err(|source| PfError::Expr {
                what: exprs[i].to_string(),
                source,
            })?,
        };
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(PfError::NonPositive { coord: i, value: v })
        }
    }

    /// `T(f)`; every output coordinate must be a positive finite number.
    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>, PfError> {
        self.check_dim(f)?;
        (0..self.d).map(|i| self.coordinate(i, f)).collect()
    }
}

/// `log T(exp h)`. For the linear kinds every weight vector is evaluated as
/// a log-sum-exp shifted by the largest `h_j` on its support, so coordinates
/// far below the others neither underflow nor overflow.
pub fn log_glasses_apply(t: &MonotoneMap, h: &[f64]) -> Result<Vec<f64>, PfError> {
    t.check_dim(h)?;
    let lse_fold = |sets: &[Vec<Vec<f64>>], init: f64, pick: fn(f64, f64) -> f64| {
        (0..t.d)
            .map(|i| {
                let v = sets[i]
                    .iter()
                    .map(|p| log_sum_exp(p, h))
                    .try_fold(init, |acc, v| v.map(|v| pick(acc, v)))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(PfError::NonPositive { coord: i, value: v.exp() })
                }
            })
            .collect()
    };
    match &t.kind {
        MapKind::MinLinear(sets) => lse_fold(sets, f64::INFINITY, f64::min),
        MapKind::MaxLinear(sets) => lse_fold(sets, f64::NEG_INFINITY, f64::max),
        MapKind::Explicit(_) => {
            let e: Vec<f64> = h.iter().map(|x| x.exp()).collect();
            Ok(t.apply(&e)?.into_iter().map(f64::ln).collect())
        }
    }
}

/// `log Σ_j p_j e^{h_j}` over the support of `p`, with max shift.
pub fn log_sum_exp(p: &[f64], h: &[f64]) -> Result<f64, PfError> {
    if p.len() != h.len() {
        return Err(PfError::Dimension {
            expected: p.len(),
            got: h.len(),
        });
    }
    let m = p
        .iter()
        .zip(h)
        .filter(|(w, _)| **w > 0.0)
        .map(|(_, x)| *x)
        .fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return Err(PfError::ZeroWeights);
    }
    let s: f64 = p
        .iter()
        .zip(h)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, x)| w * (x - m).exp())
        .sum();
    Ok(m + s.ln())
}

/// `[Ψ(h)]_i = min_{p ∈ M_i} log Σ_j p_j e^{h_j}`.
pub fn risk_sensitive_apply(sets: &[Vec<Vec<f64>>], h: &[f64]) -> Result<Vec<f64>, PfError> {
    sets.iter()
        .map(|set| {
            set.iter()
                .map(|p| log_sum_exp(p, h))
                .try_fold(f64::INFINITY, |acc, v| v.map(|v| acc.min(v)))
        })
        .collect()
}

fn log_start(t: &MonotoneMap, e: &[f64]) -> Result<Vec<f64>, PfError> {
    t.check_dim(e)?;
    if e.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(PfError::BadStart);
    }
    Ok(e.iter().map(|x| x.ln()).collect())
}

/// Runs `Ψ` from `log e` and records the iterate at each requested step
/// (ascending).
fn orbit(t: &MonotoneMap, e: &[f64], steps: &[usize]) -> Result<Vec<Vec<f64>>, PfError> {
    let mut h = log_start(t, e)?;
    let mut out = Vec::with_capacity(steps.len());
    let mut k = 0;
    for &s in steps {
        while k < s {
            h = log_glasses_apply(t, &h)?;
            k += 1;
        }
        out.push(h.clone());
    }
    Ok(out)
}

fn rate(a: &[f64], b: &[f64], steps: usize) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| ((y - x) / steps as f64).exp()).collect()
}

/// Geometric growth rate `χ(T)` from `n` steps of `Ψ`, in log space.
///
/// The estimate is `exp((Ψⁿ(h) − Ψᵐ(h)) / (n − m))` with `h = log e` and
/// `m = ⌊n/2⌋`. Dropping the first half of the orbit removes the `O(1/n)`
/// dependence on `e` that the plain average `Ψⁿ(h)/n` carries.
pub fn growth_rate(t: &MonotoneMap, e: &[f64], n: usize) -> Result<Vec<f64>, PfError> {
    if n == 0 {
        return Err(PfError::ZeroSteps);
    }
    let m = n / 2;
    let hs = orbit(t, e, &[m, n])?;
    Ok(rate(&hs[0], &hs[1], n - m))
}

/// Plain average `exp(Ψⁿ(log e)/n)`.
pub fn growth_rate_average(t: &MonotoneMap, e: &[f64], n: usize) -> Result<Vec<f64>, PfError> {
    if n == 0 {
        return Err(PfError::ZeroSteps);
    }
    let hs = orbit(t, e, &[n])?;
    Ok(hs[0].iter().map(|x| (x / n as f64).exp()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub n: usize,
    pub rate: Vec<f64>,
    pub average: Vec<f64>,
    /// `max_i |rate_{2n} − rate_n|`.
    pub cauchy: f64,
}

/// Growth rate at `n` together with the Cauchy difference to the `2n` estimate.
pub fn growth_report(t: &MonotoneMap, e: &[f64], n: usize) -> Result<GrowthReport, PfError> {
    if n == 0 {
        return Err(PfError::ZeroSteps);
    }
    let hs = orbit(t, e, &[n / 2, n, 2 * n])?;
    let r_n = rate(&hs[0], &hs[1], n - n / 2);
    let r_2n = rate(&hs[1], &hs[2], n);
    let cauchy = r_n.iter().zip(&r_2n).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let average = hs[1].iter().map(|x| (x / n as f64).exp()).collect();
    Ok(GrowthReport {
        n,
        rate: r_n,
        average,
        cauchy,
    })
}

/// Doubles `n` from `start` until the Cauchy difference is below `threshold`
/// or `2n` would exceed `cap`.
pub fn growth_rate_adaptive(
    t: &MonotoneMap,
    e: &[f64],
    start: usize,
    threshold: f64,
    cap: usize,
) -> Result<GrowthReport, PfError> {
    let mut n = start.max(1);
    loop {
        let report = growth_report(t, e, n)?;
        if report.cauchy <= threshold {
            return Ok(report);
        }
        if 4 * n > cap {
            return Err(PfError::NotConverged {
                n: 2 * n,
                difference: report.cauchy,
            });
        }
        n *= 2;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConeReport {
    /// Largest `T(f)_i − T(g)_i` over sampled `f ≤ g`.
    pub order: f64,
    /// Largest `T(λf)_i − λ T(f)_i` over samples and `λ ≥ 1`.
    pub subhomogeneity: f64,
    pub evaluations: usize,
}

impl ConeReport {
    pub fn within(&self, slack: f64) -> bool {
        self.order <= slack && self.subhomogeneity <= slack
    }
}

/// Measures order preservation and positive subhomogeneity on samples.
/// Each pair is ordered componentwise before testing; scalars below 1 are
/// skipped.
pub fn check_cone_properties(
    t: &MonotoneMap,
    samples: &[(Vec<f64>, Vec<f64>)],
    scalars: &[f64],
) -> Result<ConeReport, PfError> {
    let rows = par::try_map_indexed(samples.len(), |s| -> Result<(f64, f64, usize), PfError> {
        let (f, g) = &samples[s];
        let lo: Vec<f64> = f.iter().zip(g).map(|(a, b)| a.min(*b)).collect();
        let hi: Vec<f64> = f.iter().zip(g).map(|(a, b)| a.max(*b)).collect();
        let tl = t.apply(&lo)?;
        let th = t.apply(&hi)?;
        let order = tl.iter().zip(&th).map(|(a, b)| a - b).fold(0.0, f64::max);
        let mut sub: f64 = 0.0;
        let mut evals = 2;
        for &lam in scalars.iter().filter(|l| **l >= 1.0) {
            for (x, tx) in [(f, t.apply(f)?), (g, t.apply(g)?)] {
                let scaled: Vec<f64> = x.iter().map(|v| lam * v).collect();
                let ts = t.apply(&scaled)?;
                sub = ts.iter().zip(&tx).map(|(a, b)| a - lam * b).fold(sub, f64::max);
                evals += 2;
            }
        }
        Ok((order, sub, evals))
    })?;
    Ok(rows.into_iter().fold(ConeReport::default(), |acc, (o, s, e)| ConeReport {
        order: acc.order.max(o),
        subhomogeneity: acc.subhomogeneity.max(s),
        evaluations: acc.evaluations + e,
    }))
}

/// `Ψ = log ∘ T ∘ exp` as an [`Operator`], so the value routines apply.
#[derive(Debug, Clone)]
pub struct LogGlasses<'a>(pub &'a MonotoneMap);

impl Operator for LogGlasses<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn apply(&self, f: &[f64]) -> Result<ValueVector, Error> {
        Ok(ValueVector(log_glasses_apply(self.0, f)?))
    }
}
