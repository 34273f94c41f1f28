//! Small dense least-squares fits.

/// Least-squares coefficients for `y ≈ Σ_c coef[c]·columns[c]` via
/// Householder QR. Returns `None` when the design is rank deficient.
pub fn lstsq(columns: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let p = columns.len();
    let n = y.len();
    if p == 0 || n < p || columns.iter().any(|c| c.len() != n) {
        return None;
    }
    // column-major working copy
    let mut a: Vec<Vec<f64>> = columns.to_vec();
    let mut b = y.to_vec();
    for k in 0..p {
        let norm = a[k][k..].iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = a.iter().map(|c| c.iter().fold(0.0f64, |m, x| m.max(x.abs()))).fold(0.0, f64::max);
        if norm <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
            return None;
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let reflect = |col: &mut [f64]| {
            let s = 2.0 * v.iter().zip(col.iter()).map(|(x, y)| x * y).sum::<f64>() / vnorm2;
            for (c, x) in col.iter_mut().zip(&v) {
                *c -= s * x;
            }
        };
        for col in a.iter_mut().skip(k) {
            reflect(&mut col[k..]);
        }
        reflect(&mut b[k..]);
    }
    let mut coef = vec![0.0; p];
    for k in (0..p).rev() {
        let mut s = b[k];
        for j in k + 1..p {
            s -= a[j][k] * coef[j];
        }
        coef[k] = s / a[k][k];
    }
    Some(coef)
}

/// Ordinary least squares line `y ≈ intercept + slope·x`.
pub fn line(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let c = lstsq(&[vec![1.0; x.len()], x.to_vec()], y)?;
    Some((c[0], c[1]))
}
