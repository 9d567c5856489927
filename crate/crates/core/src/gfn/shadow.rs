//! Weak pairings `∫ u_ε μ` against test densities and their ε → 0 limits.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use super::domain::{CompactBox, EpsSchedule, Feature};
use super::net::EpsilonNet;
use crate::error::{Error, Result};
use crate::numerics::extrapolation::{power_law_fit, richardson, successive_difference_order, Extrapolation};
use crate::numerics::quadrature::{integrate, QuadratureOptions};

/// Relative Cauchy tolerance on successive pairings.
pub const CAUCHY_TOL: f64 = 1e-3;
/// Number of trailing successive differences that must satisfy the Cauchy test.
pub const CAUCHY_TAIL: usize = 3;

/// Smooth compactly supported test density.
#[derive(Clone)]
pub struct TestDensity {
    support: CompactBox,
    label: String,
    eval: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl fmt::Debug for TestDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TestDensity({}, support={:?})", self.label, self.support)
    }
}

fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

impl TestDensity {
    /// The evaluator is forced to vanish outside `support`.
    pub fn new(support: CompactBox, label: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        let sup = support.clone();
        let eval = move |p: &[f64]| if sup.contains(p) { f(p) } else { 0.0 };
        Self { support, label: label.into(), eval: Arc::new(eval) }
    }

    /// Product of unnormalized bumps `exp(-1/(1-t²))`, `t = (x - c)/r` per axis.
    pub fn bump(center: &[f64], radius: &[f64]) -> Result<Self> {
        if center.len() != radius.len() {
            return Err(Error::DimensionMismatch { expected: center.len(), found: radius.len() });
        }
        let lower = center.iter().zip(radius).map(|(c, r)| c - r).collect();
        let upper = center.iter().zip(radius).map(|(c, r)| c + r).collect();
        let support = CompactBox::new(lower, upper)?;
        let c = center.to_vec();
        let r = radius.to_vec();
        let label = format!("bump(c={center:?}, r={radius:?})");
        Ok(Self::new(support, label, move |p| p.iter().zip(&c).zip(&r).map(|((x, c), r)| bump((x - c) / r)).product()))
    }

    /// A bump times a polynomial modulation `1 + a·x + b·x²` (1D); gives
    /// non-vanishing second derivatives at the origin.
    pub fn modulated_bump_1d(center: f64, radius: f64, a: f64, b: f64) -> Result<Self> {
        let support = CompactBox::interval(center - radius, center + radius)?;
        let label = format!("bump(c={center}, r={radius})·(1{a:+}x{b:+}x²)");
        Ok(Self::new(support, label, move |p| (1.0 + a * p[0] + b * p[0] * p[0]) * bump((p[0] - center) / radius)))
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    pub fn support(&self) -> &CompactBox {
        &self.support
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        (self.eval)(p)
    }
}

#[derive(Debug, Clone)]
pub struct ShadowOptions {
    /// Feature hyperplanes; quadrature cells are forced to break at
    /// `center` and `center ± support_radius·ε`.
    pub features: Vec<Feature>,
    pub support_radius: f64,
    pub quadrature: QuadratureOptions,
}

impl Default for ShadowOptions {
    fn default() -> Self {
        Self { features: Vec::new(), support_radius: 1.0, quadrature: QuadratureOptions::default() }
    }
}

impl ShadowOptions {
    pub fn with_features(features: Vec<Feature>) -> Self {
        Self { features, ..Self::default() }
    }

    fn breakpoints(&self, axis: usize, eps: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for f in &self.features {
            let c = match f {
                Feature::Hyperplane { axis: a, center } if *a == axis => *center,
                Feature::Point(p) if axis < p.len() => p[axis],
                _ => continue,
            };
            out.extend([c - self.support_radius * eps, c, c + self.support_radius * eps]);
        }
        out
    }
}

/// Iterated adaptive quadrature of `g` over a box.
pub fn integrate_box(
    g: &(dyn Fn(&[f64]) -> Result<f64> + Sync),
    bx: &CompactBox,
    breakpoints: &dyn Fn(usize) -> Vec<f64>,
    opts: &QuadratureOptions,
) -> Result<f64> {
    fn rec(
        g: &(dyn Fn(&[f64]) -> Result<f64> + Sync),
        bx: &CompactBox,
        breakpoints: &dyn Fn(usize) -> Vec<f64>,
        opts: &QuadratureOptions,
        prefix: &mut Vec<f64>,
    ) -> Result<f64> {
        let axis = prefix.len();
        let bps = breakpoints(axis);
        let last = axis + 1 == bx.dim();
        let mut failure: Option<Error> = None;
        let inner_opts = QuadratureOptions { abs_tol: opts.abs_tol * 0.1, ..*opts };
        let r = integrate(
            |x| {
                if failure.is_some() {
                    return 0.0;
                }
                prefix.push(x);
                let v = if last { g(prefix) } else { rec(g, bx, breakpoints, &inner_opts, prefix) };
                prefix.pop();
                v.unwrap_or_else(|e| {
                    failure = Some(e);
                    0.0
                })
            },
            bx.lower()[axis],
            bx.upper()[axis],
            &bps,
            opts,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(r?.value)
    }
    rec(g, bx, breakpoints, opts, &mut Vec::with_capacity(bx.dim()))
}

/// `∫ u_ε μ` at a single ε.
pub fn pairing(net: &EpsilonNet, density: &TestDensity, eps: f64, opts: &ShadowOptions) -> Result<f64> {
    if density.dim() != net.dim() {
        return Err(Error::DimensionMismatch { expected: net.dim(), found: density.dim() });
    }
    let g = |p: &[f64]| -> Result<f64> {
        let w = density.eval(p);
        if w == 0.0 {
            return Ok(0.0);
        }
        Ok(net.value(eps, p)? * w)
    };
    integrate_box(&g, density.support(), &|axis| opts.breakpoints(axis, eps), &opts.quadrature)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShadowVerdict {
    Converges,
    Diverges,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct DensityShadow {
    pub label: String,
    /// `(ε, ∫ u_ε μ)` for every ε where quadrature succeeded.
    pub pairings: Vec<(f64, f64)>,
    /// ε values where quadrature failed.
    pub failures: Vec<f64>,
    pub extrapolation: Extrapolation,
    /// Empirical order from successive differences.
    pub rate: Option<f64>,
    pub cauchy: bool,
    pub diverging: bool,
}

impl DensityShadow {
    pub fn limit(&self) -> f64 {
        self.extrapolation.limit
    }

    /// Fitted exponent of `|pairing − reference|` against ε.
    pub fn error_order(&self, reference: f64) -> Option<f64> {
        let (eps, errs): (Vec<f64>, Vec<f64>) = self.pairings.iter().map(|(e, p)| (*e, (p - reference).abs())).unzip();
        power_law_fit(&eps, &errs).map(|f| f.slope)
    }
}

#[derive(Debug, Clone)]
pub struct ShadowReport {
    pub net_label: String,
    pub densities: Vec<DensityShadow>,
    pub verdict: ShadowVerdict,
}

fn cauchy_tail(values: &[f64]) -> bool {
    if values.len() < CAUCHY_TAIL + 1 {
        return false;
    }
    values[values.len() - CAUCHY_TAIL - 1..]
        .windows(2)
        .all(|w| (w[1] - w[0]).abs() < CAUCHY_TOL * (1.0 + w[0].abs()))
}

fn diverging(eps: &[f64], values: &[f64]) -> bool {
    let mags: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    match power_law_fit(eps, &mags) {
        Some(fit) => fit.slope < -0.5 && mags.last() > mags.first(),
        None => false,
    }
}

/// Pairings of `net` with every density over the schedule, their
/// Richardson-extrapolated limits and empirical orders.
pub fn distributional_shadow(
    net: &EpsilonNet,
    densities: &[TestDensity],
    schedule: &EpsSchedule,
    opts: &ShadowOptions,
) -> Result<ShadowReport> {
    for d in densities {
        if d.dim() != net.dim() {
            return Err(Error::DimensionMismatch { expected: net.dim(), found: d.dim() });
        }
    }
    let per_density: Vec<DensityShadow> = densities
        .iter()
        .map(|d| {
            let raw: Vec<(f64, Result<f64>)> =
                schedule.values().par_iter().map(|&eps| (eps, pairing(net, d, eps, opts))).collect();
            let mut pairings = Vec::new();
            let mut failures = Vec::new();
            for (eps, r) in raw {
                match r {
                    Ok(v) => pairings.push((eps, v)),
                    Err(_) => failures.push(eps),
                }
            }
            let (eps, vals): (Vec<f64>, Vec<f64>) = pairings.iter().copied().unzip();
            let extrapolation = if vals.is_empty() {
                Extrapolation { limit: f64::NAN, order: None, error_estimate: f64::NAN }
            } else {
                richardson(&eps, &vals)
            };
            DensityShadow {
                label: d.label().to_string(),
                rate: successive_difference_order(&eps, &vals).map(|f| f.slope),
                cauchy: failures.is_empty() && cauchy_tail(&vals),
                diverging: diverging(&eps, &vals),
                pairings,
                failures,
                extrapolation,
            }
        })
        .collect();
    let verdict = if per_density.iter().any(|d| !d.failures.is_empty()) {
        ShadowVerdict::Inconclusive
    } else if per_density.iter().all(|d| d.cauchy) {
        ShadowVerdict::Converges
    } else if per_density.iter().any(|d| d.diverging) {
        ShadowVerdict::Diverges
    } else {
        ShadowVerdict::Inconclusive
    };
    Ok(ShadowReport { net_label: net.label().to_string(), densities: per_density, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gfn::net::{embed_smooth, SmoothField, UNBOUNDED_ORDER};
    use approx::assert_abs_diff_eq;

    #[test]
    fn embedded_field_pairing_is_constant() {
        let f = embed_smooth(&SmoothField::from_jet_fn(1, UNBOUNDED_ORDER, "cos", |x| x[0].cos()));
        let phi = TestDensity::bump(&[0.1], &[0.8]).unwrap();
        let r = distributional_shadow(&f, &[phi.clone()], &EpsSchedule::default(), &ShadowOptions::default()).unwrap();
        assert_eq!(r.verdict, ShadowVerdict::Converges);
        let expected = integrate(|x| x.cos() * phi.eval(&[x]), -0.7, 0.9, &[], &QuadratureOptions::default())
            .unwrap()
            .value;
        for (_, p) in &r.densities[0].pairings {
            assert_abs_diff_eq!(*p, expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn two_dimensional_pairing() {
        let one = EpsilonNet::constant(2, 1.0);
        let phi = TestDensity::new(CompactBox::cube(2, 1.0).unwrap(), "1", |_| 1.0);
        let v = pairing(&one, &phi, 0.5, &ShadowOptions::default()).unwrap();
        assert_abs_diff_eq!(v, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn density_vanishes_outside_support() {
        let phi = TestDensity::bump(&[0.0], &[0.5]).unwrap();
        assert_eq!(phi.eval(&[0.6]), 0.0);
        assert!(phi.eval(&[0.0]) > 0.0);
    }
}
