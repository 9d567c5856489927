//! Adaptive Gauss–Kronrod quadrature with forced breakpoints, plus fixed
//! Gauss–Legendre rules.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-12, max_intervals: 4000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

struct Cell {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates `f` over `[a, b]`, splitting first at every breakpoint strictly
/// inside the interval and then bisecting the worst cell until the total
/// error estimate is below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: &QuadratureOptions,
) -> Result<QuadratureResult> {
    if a == b {
        return Ok(QuadratureResult { value: 0.0, error: 0.0, intervals: 0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut edges: Vec<f64> = breakpoints.iter().copied().filter(|&p| p > lo && p < hi).collect();
    edges.push(lo);
    edges.push(hi);
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut err = 0.0;
    for w in edges.windows(2) {
        let (v, e) = gk15(&mut f, w[0], w[1]);
        total += v;
        err += e;
        heap.push(Cell { a: w[0], b: w[1], value: v, error: e });
    }
    while !(err <= opts.abs_tol.max(opts.rel_tol * total.abs())) {
        if heap.len() >= opts.max_intervals || !total.is_finite() {
            return Err(Error::Quadrature { a, b, estimate: sign * total, error: err });
        }
        let cell = heap.pop().expect("nonempty");
        let mid = 0.5 * (cell.a + cell.b);
        if mid <= cell.a || mid >= cell.b {
            return Err(Error::Quadrature { a, b, estimate: sign * total, error: err });
        }
        let (v1, e1) = gk15(&mut f, cell.a, mid);
        let (v2, e2) = gk15(&mut f, mid, cell.b);
        total += v1 + v2 - cell.value;
        err += e1 + e2 - cell.error;
        heap.push(Cell { a: cell.a, b: mid, value: v1, error: e1 });
        heap.push(Cell { a: mid, b: cell.b, value: v2, error: e2 });
    }
    // Re-sum to drop accumulated cancellation from the running updates.
    let cells = heap.into_vec();
    let value: f64 = cells.iter().map(|c| c.value).sum();
    let error: f64 = cells.iter().map(|c| c.error).sum();
    Ok(QuadratureResult { value: sign * value, error, intervals: cells.len() })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Spectral integration on one Gauss–Legendre panel.
///
/// `cumulative[i][j]` integrates the `j`-th Lagrange basis polynomial from
/// `-1` to node `i`, so `cumulative · values` approximates `∫_{-1}^{t_i} g`.
#[derive(Debug, Clone)]
pub struct PanelRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub cumulative: Vec<Vec<f64>>,
    bary: Vec<f64>,
}

impl PanelRule {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        let bary: Vec<f64> = (0..n)
            .map(|j| {
                let prod: f64 = (0..n).filter(|&k| k != j).map(|k| nodes[j] - nodes[k]).product();
                1.0 / prod
            })
            .collect();
        let mut cumulative = vec![vec![0.0; n]; n];
        for (i, row) in cumulative.iter_mut().enumerate() {
            let t = nodes[i];
            let half = 0.5 * (t + 1.0);
            for (q, w) in nodes.iter().zip(&weights) {
                let s = -1.0 + half * (q + 1.0);
                let basis = lagrange_basis(&nodes, &bary, s);
                for (j, b) in basis.iter().enumerate() {
                    row[j] += half * w * b;
                }
            }
        }
        Self { nodes, weights, cumulative, bary }
    }

    /// Barycentric interpolation of node values at `s ∈ [-1, 1]`.
    pub fn interpolate(&self, values: &[f64], s: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((x, w), v) in self.nodes.iter().zip(&self.bary).zip(values) {
            let d = s - x;
            if d == 0.0 {
                return *v;
            }
            let t = w / d;
            num += t * v;
            den += t;
        }
        num / den
    }
}

fn lagrange_basis(nodes: &[f64], bary: &[f64], s: f64) -> Vec<f64> {
    let n = nodes.len();
    if let Some(k) = nodes.iter().position(|&x| x == s) {
        let mut out = vec![0.0; n];
        out[k] = 1.0;
        return out;
    }
    let terms: Vec<f64> = nodes.iter().zip(bary).map(|(x, w)| w / (s - x)).collect();
    let den: f64 = terms.iter().sum();
    terms.into_iter().map(|t| t / den).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, &[], &QuadratureOptions::default()).unwrap();
        assert_abs_diff_eq!(r.value, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let o = QuadratureOptions::default();
        let a = integrate(f64::exp, 0.0, 1.0, &[], &o).unwrap().value;
        let b = integrate(f64::exp, 1.0, 0.0, &[], &o).unwrap().value;
        assert_abs_diff_eq!(a, std::f64::consts::E - 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(a, -b, epsilon = 1e-15);
    }

    #[test]
    fn breakpoints_resolve_narrow_support() {
        let eps = 1e-6;
        let g = |x: f64| if x.abs() < eps { 1.0 / (2.0 * eps) } else { 0.0 };
        let o = QuadratureOptions::default();
        let r = integrate(g, -1.0, 1.0, &[-eps, eps], &o).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn exhaustion_is_reported() {
        let o = QuadratureOptions { abs_tol: 1e-14, rel_tol: 0.0, max_intervals: 4 };
        let e = integrate(|x: f64| x.abs().sqrt().recip(), -1.0, 1.0, &[], &o);
        assert!(matches!(e, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn gauss_legendre_integrates_degree_2n_minus_1() {
        let (x, w) = gauss_legendre(6);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert_abs_diff_eq!(s, 2.0 / 11.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn panel_cumulative_integration() {
        let rule = PanelRule::new(12);
        let vals: Vec<f64> = rule.nodes.iter().map(|t| 3.0 * t * t).collect();
        for (i, row) in rule.cumulative.iter().enumerate() {
            let got: f64 = row.iter().zip(&vals).map(|(a, b)| a * b).sum();
            let t = rule.nodes[i];
            assert_abs_diff_eq!(got, t.powi(3) + 1.0, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(rule.interpolate(&vals, 0.3), 0.27, epsilon = 1e-13);
    }
}
