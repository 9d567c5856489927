//! Empirical moderateness and negligibility of ε-nets.
//!
//! A net is moderate when every derivative's sup-norm on compact sets grows
//! at most like `ε^{-N}`, negligible when its sup-norm decays like `ε^n` for
//! every `n`. Both are asymptotic statements; here they are estimated by a
//! log-log fit of sampled sup-norms over a finite ε-schedule.

use rayon::prelude::*;

use super::domain::{CompactBox, EpsSchedule, SamplingPlan};
use super::net::EpsilonNet;
use crate::error::Result;
use crate::numerics::extrapolation::power_law_fit;

/// A net is called moderate when the fitted exponent is at least this.
pub const MODERATE_SLOPE_FLOOR: f64 = -50.0;
/// Moderateness also requires a fit residual below this.
pub const MODERATE_MAX_RESIDUAL: f64 = 0.2;
/// Negligible at order `n` when the fitted exponent is at least `n − margin`.
pub const NEGLIGIBLE_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub enum GrowthOutcome {
    /// `sup ≈ exp(intercept)·ε^slope`.
    Fitted { slope: f64, intercept: f64, residual: f64 },
    /// Every sampled sup-norm was exactly zero.
    IdenticallyZero,
    /// Sup-norms vanish exactly from this ε on (e.g. support left the box).
    EventuallyZero { from_eps: f64 },
    /// Fewer than two positive samples.
    Undetermined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthEstimate {
    /// `(ε, sup-norm)` with ε strictly decreasing.
    pub samples: Vec<(f64, f64)>,
    pub outcome: GrowthOutcome,
}

impl GrowthEstimate {
    pub fn from_samples(samples: Vec<(f64, f64)>) -> Self {
        let outcome = classify(&samples);
        Self { samples, outcome }
    }

    pub fn slope(&self) -> Option<f64> {
        match self.outcome {
            GrowthOutcome::Fitted { slope, .. } => Some(slope),
            _ => None,
        }
    }

    pub fn residual(&self) -> Option<f64> {
        match self.outcome {
            GrowthOutcome::Fitted { residual, .. } => Some(residual),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.outcome, GrowthOutcome::IdenticallyZero | GrowthOutcome::EventuallyZero { .. })
    }

    pub fn is_moderate(&self) -> bool {
        match self.outcome {
            GrowthOutcome::Fitted { slope, residual, .. } => {
                slope >= MODERATE_SLOPE_FLOOR && residual < MODERATE_MAX_RESIDUAL
            }
            GrowthOutcome::IdenticallyZero | GrowthOutcome::EventuallyZero { .. } => true,
            GrowthOutcome::Undetermined => false,
        }
    }

    pub fn is_negligible_at(&self, n: f64) -> bool {
        match self.outcome {
            GrowthOutcome::Fitted { slope, .. } => slope >= n - NEGLIGIBLE_MARGIN,
            GrowthOutcome::IdenticallyZero | GrowthOutcome::EventuallyZero { .. } => true,
            GrowthOutcome::Undetermined => false,
        }
    }
}

fn classify(samples: &[(f64, f64)]) -> GrowthOutcome {
    if samples.iter().all(|(_, s)| *s == 0.0) {
        return GrowthOutcome::IdenticallyZero;
    }
    let trailing_zero = samples.iter().rev().take_while(|(_, s)| *s == 0.0).count();
    if trailing_zero > 0 {
        return GrowthOutcome::EventuallyZero { from_eps: samples[samples.len() - trailing_zero].0 };
    }
    let (eps, sups): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
    match power_law_fit(&eps, &sups) {
        Some(fit) => GrowthOutcome::Fitted { slope: fit.slope, intercept: fit.intercept, residual: fit.residual },
        None => GrowthOutcome::Undetermined,
    }
}

/// Sup over the sampling grid of `|∂^α u_ε|` at one ε.
pub fn sup_norm(net: &EpsilonNet, bx: &CompactBox, alpha: &[usize], eps: f64, plan: &SamplingPlan) -> Result<f64> {
    let grid = plan.grid(bx, eps);
    let mut sup: f64 = 0.0;
    for p in &grid {
        let v = net.evaluate(eps, p, alpha)?;
        sup = sup.max(v.abs());
    }
    Ok(sup)
}

/// Fits `sup_K |∂^α u_ε| ≈ C·ε^a` over the schedule.
pub fn estimate_growth(
    net: &EpsilonNet,
    bx: &CompactBox,
    alpha: &[usize],
    schedule: &EpsSchedule,
    plan: &SamplingPlan,
) -> Result<GrowthEstimate> {
    let samples = schedule
        .values()
        .par_iter()
        .map(|&eps| sup_norm(net, bx, alpha, eps, plan).map(|s| (eps, s)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GrowthEstimate::from_samples(samples))
}

/// Element of the ring of constants: the net of point values `u_ε(p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedNumber {
    pub samples: Vec<(f64, f64)>,
    /// Growth of `|u_ε(p)|`.
    pub growth: GrowthEstimate,
}

pub fn point_value(net: &EpsilonNet, point: &[f64], schedule: &EpsSchedule) -> Result<GeneralizedNumber> {
    let samples = schedule
        .values()
        .iter()
        .map(|&eps| net.value(eps, point).map(|v| (eps, v)))
        .collect::<Result<Vec<_>>>()?;
    let growth = GrowthEstimate::from_samples(samples.iter().map(|(e, v)| (*e, v.abs())).collect());
    Ok(GeneralizedNumber { samples, growth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gfn::net::{embed_smooth, SmoothField, UNBOUNDED_ORDER};
    use approx::assert_abs_diff_eq;

    #[test]
    fn embedded_sine_has_zero_exponent() {
        let net = embed_smooth(&SmoothField::from_jet_fn(1, UNBOUNDED_ORDER, "sin", |x| x[0].sin()));
        let bx = CompactBox::interval(-1.0, 1.0).unwrap();
        let g = estimate_growth(&net, &bx, &[0], &EpsSchedule::default(), &SamplingPlan::default()).unwrap();
        assert_abs_diff_eq!(g.slope().unwrap(), 0.0, epsilon = 1e-12);
        assert!(g.is_moderate());
        assert!(!g.is_negligible_at(1.0));
    }

    #[test]
    fn scaled_net_exponent() {
        // u_ε = ε^3 x: negligible at order 3, not 4
        let net = EpsilonNet::from_jet_fn(1, UNBOUNDED_ORDER, "ε³x", |e, x| x[0].scale(e.powi(3)));
        let bx = CompactBox::interval(0.5, 1.0).unwrap();
        let g = estimate_growth(&net, &bx, &[0], &EpsSchedule::default(), &SamplingPlan::default()).unwrap();
        assert_abs_diff_eq!(g.slope().unwrap(), 3.0, epsilon = 1e-12);
        assert!(g.is_negligible_at(3.0));
        assert!(!g.is_negligible_at(4.0));
    }

    #[test]
    fn zero_net_is_reported_as_zero() {
        let g = GrowthEstimate::from_samples(vec![(0.5, 0.0), (0.25, 0.0)]);
        assert_eq!(g.outcome, GrowthOutcome::IdenticallyZero);
        assert!(g.is_negligible_at(1e6));
        let g = GrowthEstimate::from_samples(vec![(0.5, 1.0), (0.25, 0.0), (0.125, 0.0)]);
        assert_eq!(g.outcome, GrowthOutcome::EventuallyZero { from_eps: 0.25 });
    }

    #[test]
    fn point_value_of_square() {
        let net = embed_smooth(&SmoothField::from_jet_fn(1, UNBOUNDED_ORDER, "x²", |x| &x[0] * &x[0]));
        let n = point_value(&net, &[3.0], &EpsSchedule::default()).unwrap();
        assert!(n.samples.iter().all(|(_, v)| *v == 9.0));
        assert_abs_diff_eq!(n.growth.slope().unwrap(), 0.0, epsilon = 1e-12);
    }
}
