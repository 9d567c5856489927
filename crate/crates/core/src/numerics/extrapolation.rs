//! Log-log fits and Richardson extrapolation over ε-sequences.

/// Least-squares line `y ≈ slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum::<f64>() / nf).sqrt();
    Some(LinearFit { slope, intercept, residual })
}

/// Fits `value ≈ C·ε^slope` over the positive samples.
pub fn power_law_fit(eps: &[f64], values: &[f64]) -> Option<LinearFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = eps
        .iter()
        .zip(values)
        .filter(|(e, v)| **e > 0.0 && **v > 0.0 && v.is_finite())
        .map(|(e, v)| (e.ln(), v.ln()))
        .unzip();
    linear_fit(&xs, &ys)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolation {
    pub limit: f64,
    /// Detected order `q` in `p(ε) ≈ L + C·ε^q`, when three usable points exist.
    pub order: Option<f64>,
    /// `|limit − last value|`.
    pub error_estimate: f64,
}

/// Richardson extrapolation with empirical order detection from the last
/// three entries of a strictly decreasing ε-sequence.
pub fn richardson(eps: &[f64], values: &[f64]) -> Extrapolation {
    let n = values.len();
    assert!(n > 0 && eps.len() == n);
    let last = values[n - 1];
    if n < 3 {
        return Extrapolation { limit: last, order: None, error_estimate: f64::NAN };
    }
    let (e1, e2, e3) = (eps[n - 3], eps[n - 2], eps[n - 1]);
    let (p1, p2, p3) = (values[n - 3], values[n - 2], values[n - 1]);
    let d12 = p1 - p2;
    let d23 = p2 - p3;
    let scale = p1.abs().max(p2.abs()).max(p3.abs()).max(1.0);
    if d23.abs() <= 1e-15 * scale {
        return Extrapolation { limit: p3, order: None, error_estimate: d23.abs() };
    }
    let ratio = d12 / d23;
    let order = if ratio > 0.0 { solve_order(e1, e2, e3, ratio) } else { None };
    match order {
        Some(q) => {
            // p2 − p3 = C(e2^q − e3^q) → L = p3 − C e3^q
            let c = d23 / (e2.powf(q) - e3.powf(q));
            let limit = p3 - c * e3.powf(q);
            Extrapolation { limit, order: Some(q), error_estimate: (limit - p3).abs() }
        }
        None => Extrapolation { limit: p3, order: None, error_estimate: d23.abs() },
    }
}

/// Solves `(e1^q − e2^q)/(e2^q − e3^q) = ratio` for `q > 0` by bisection.
fn solve_order(e1: f64, e2: f64, e3: f64, ratio: f64) -> Option<f64> {
    let g = |q: f64| (e1.powf(q) - e2.powf(q)) / (e2.powf(q) - e3.powf(q)) - ratio;
    let (mut lo, mut hi) = (1e-3, 12.0);
    if g(lo) * g(hi) > 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(lo) * g(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Empirical convergence order from successive differences
/// `|p_{k+1} − p_k| ≈ C·ε_k^q`.
pub fn successive_difference_order(eps: &[f64], values: &[f64]) -> Option<LinearFit> {
    if values.len() < 3 {
        return None;
    }
    let diffs: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    power_law_fit(&eps[..diffs.len()], &diffs)
}
