//! The pp-wave metric in geodesic coordinates `(u, V, X, Y)` and its
//! continuous (Rosen) limit.

use std::sync::Arc;

use nalgebra::Matrix4;

use crate::error::{Error, Result};
use crate::geometry::MetricNet;
use crate::gfn::{CompactBox, EpsSchedule, Feature};
use crate::jet::Jet;
use crate::numerics::extrapolation::power_law_fit;
use crate::ppwave::ProfileFunction;

use super::transform::{GeneralizedDiffeo, Transform};

/// Largest allowed difference between the closed form and `Dtᵀ g Dt`.
pub const PULLBACK_TOL: f64 = 1e-8;
/// Largest accepted sup distance to the Rosen form at the smallest ε.
pub const ROSEN_SUP_TOL: f64 = 1e-2;

/// Independent components in `(u, V, X, Y)` order.
pub const COMPONENTS: [(usize, usize); 10] =
    [(0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)];
pub const COMPONENT_LABELS: [&str; 10] = ["uu", "uV", "uX", "uY", "VV", "VX", "VY", "XX", "XY", "YY"];

/// The metric pulled back by `t_ε` at one ε.
#[derive(Debug, Clone)]
pub struct TransformedMetric {
    transform: Arc<Transform>,
}

pub fn pushforward_metric(diffeo: &GeneralizedDiffeo, eps: f64) -> Result<TransformedMetric> {
    Ok(TransformedMetric { transform: diffeo.at(eps)? })
}

impl TransformedMetric {
    pub fn eps(&self) -> f64 {
        self.transform.eps()
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    /// `−du dV + (2Σ ẋ^i ∂_j x^i − ∂_j v) du dX^j + Σ_i (∂_j x^i dX^j)²`
    /// written as a symmetric matrix.
    pub fn closed_form(&self, q: [f64; 4]) -> Result<Matrix4<f64>> {
        let fam = self.transform.family([q[2], q[3]])?;
        let s = fam.state(q[0]);
        let d = fam.sensitivity(q[0]).expect("transform families carry sensitivities");
        let mut g = Matrix4::zeros();
        g[(0, 1)] = -0.5;
        g[(1, 0)] = -0.5;
        for j in 0..2 {
            let cross = s.xdot[0] * d.dx[0][j] + s.xdot[1] * d.dx[1][j] - 0.5 * d.dv[j];
            g[(0, 2 + j)] = cross;
            g[(2 + j, 0)] = cross;
            for k in 0..2 {
                g[(2 + j, 2 + k)] = d.dx[0][j] * d.dx[0][k] + d.dx[1][j] * d.dx[1][k];
            }
        }
        Ok(g)
    }

    /// `Dt_εᵀ g_ε(t_ε(q)) Dt_ε` with the generic metric evaluator.
    pub fn pullback(&self, q: [f64; 4]) -> Result<Matrix4<f64>> {
        let t = &self.transform;
        let p = t.forward(q)?;
        let g = t.metric().metric.values(t.eps(), &p)?;
        let g = Matrix4::from_fn(|i, j| g[(i, j)]);
        let jac = t.jacobian(q)?;
        Ok(jac.transpose() * g * jac)
    }

    /// Sup over `samples` of the componentwise closed-form/pullback difference.
    pub fn pullback_difference(&self, samples: &[[f64; 4]]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &q in samples {
            worst = worst.max((self.closed_form(q)? - self.pullback(q)?).amax());
        }
        Ok(worst)
    }

    /// Like [`Self::pullback_difference`], but errors beyond [`PULLBACK_TOL`].
    pub fn cross_check(&self, samples: &[[f64; 4]]) -> Result<f64> {
        let d = self.pullback_difference(samples)?;
        if d > PULLBACK_TOL {
            return Err(Error::CrossCheck {
                what: format!("closed-form vs pulled-back metric at ε = {}", self.eps()),
                difference: d,
                tolerance: PULLBACK_TOL,
            });
        }
        Ok(d)
    }
}

/// The transformed metric as a net over all ε (values only); transforms are
/// built on first use. Points where the geodesics cannot be solved give NaN.
pub fn transformed_metric_net(diffeo: Arc<GeneralizedDiffeo>) -> MetricNet {
    let label = format!("transformed[{}]", diffeo.metric().metric.label());
    MetricNet::from_jet_fn(4, 0, label, "Lorentzian (u,V,X,Y)", move |eps, c| {
        let q = [c[0].value(), c[1].value(), c[2].value(), c[3].value()];
        let g = pushforward_metric(&diffeo, eps).and_then(|m| m.closed_form(q));
        COMPONENTS
            .iter()
            .map(|&(i, j)| Jet::constant(4, 0, g.as_ref().map_or(f64::NAN, |g| g[(i, j)])))
            .collect()
    })
    .with_features(vec![Feature::Hyperplane { axis: 0, center: 0.0 }])
}

/// Continuous limit metric
/// `−du dV + Σ_i (Σ_j (δ_ij + ½ ∂_ij f(X, Y) u₊) dX^j)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct RosenForm {
    profile: ProfileFunction,
}

impl RosenForm {
    pub fn new(profile: ProfileFunction) -> Self {
        Self { profile }
    }

    pub fn profile(&self) -> &ProfileFunction {
        &self.profile
    }

    pub fn components(&self, u: f64, xy: [f64; 2]) -> Matrix4<f64> {
        let up = u.max(0.0);
        let h = self.profile.hessian(xy[0], xy[1]);
        let a = [[1.0 + 0.5 * h[0][0] * up, 0.5 * h[0][1] * up], [0.5 * h[1][0] * up, 1.0 + 0.5 * h[1][1] * up]];
        let mut g = Matrix4::zeros();
        g[(0, 1)] = -0.5;
        g[(1, 0)] = -0.5;
        for j in 0..2 {
            for k in 0..2 {
                g[(2 + j, 2 + k)] = a[0][j] * a[0][k] + a[1][j] * a[1][k];
            }
        }
        g
    }
}

/// Sampling for [`rosen_shadow`].
#[derive(Debug, Clone, PartialEq)]
pub struct RosenPlan {
    pub u_nodes: usize,
    pub transverse_nodes: usize,
    /// Extra `u` samples across the shock window.
    pub window_nodes: usize,
}

impl Default for RosenPlan {
    fn default() -> Self {
        Self { u_nodes: 41, transverse_nodes: 5, window_nodes: 9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RosenRow {
    pub eps: f64,
    /// Sup distance per entry of [`COMPONENT_LABELS`].
    pub component_distances: [f64; 10],
    pub sup_distance: f64,
    pub pullback_difference: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RosenVerdict {
    /// Uniform convergence to the Rosen form, with fitted order.
    Associated { rate: Option<f64> },
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RosenReport {
    pub rows: Vec<RosenRow>,
    pub rate: Option<f64>,
    /// Sup distance decreases over the last four schedule points.
    pub monotone_tail: bool,
    pub final_distance: f64,
    pub pullback_ok: bool,
    pub verdict: RosenVerdict,
}

impl RosenReport {
    pub fn passed(&self) -> bool {
        matches!(self.verdict, RosenVerdict::Associated { .. })
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Sup distance, per ε, between the transformed metric and the Rosen form
/// over `region` (a box in `(u, X, Y)`).
pub fn rosen_shadow(
    diffeo: &GeneralizedDiffeo,
    schedule: &EpsSchedule,
    region: &CompactBox,
    plan: &RosenPlan,
) -> Result<RosenReport> {
    if region.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, found: region.dim() });
    }
    let rosen = RosenForm::new(diffeo.metric().profile.clone());
    let (lo, hi) = (region.lower(), region.upper());
    let xs = linspace(lo[1], hi[1], plan.transverse_nodes);
    let ys = linspace(lo[2], hi[2], plan.transverse_nodes);
    let mut rows = Vec::with_capacity(schedule.len());
    for &eps in schedule.values() {
        let m = pushforward_metric(diffeo, eps)?;
        let r = diffeo.metric().delta.support_radius(eps);
        let mut us = linspace(lo[0], hi[0], plan.u_nodes);
        us.extend(linspace(-r, r, plan.window_nodes).into_iter().filter(|u| *u >= lo[0] && *u <= hi[0]));
        let mut dist = [0.0f64; 10];
        let mut pullback_difference: f64 = 0.0;
        for &x in &xs {
            for &y in &ys {
                for &u in &us {
                    let q = [u, 0.0, x, y];
                    let g = m.closed_form(q)?;
                    let lim = rosen.components(u, [x, y]);
                    for (k, &(i, j)) in COMPONENTS.iter().enumerate() {
                        dist[k] = dist[k].max((g[(i, j)] - lim[(i, j)]).abs());
                    }
                    pullback_difference = pullback_difference.max((g - m.pullback(q)?).amax());
                }
            }
        }
        let sup_distance = dist.iter().copied().fold(0.0, f64::max);
        rows.push(RosenRow { eps, component_distances: dist, sup_distance, pullback_difference });
    }
    let (eps, sups): (Vec<f64>, Vec<f64>) = rows.iter().map(|r| (r.eps, r.sup_distance)).unzip();
    let rate = power_law_fit(&eps, &sups).map(|f| f.slope);
    let n = sups.len();
    let monotone_tail = n >= 4 && sups[n - 4..].windows(2).all(|w| w[1] < w[0]);
    let final_distance = sups.last().copied().unwrap_or(f64::NAN);
    let pullback_ok = rows.iter().all(|r| r.pullback_difference < PULLBACK_TOL);
    let exact = sups.iter().all(|&s| s == 0.0);
    let verdict = if pullback_ok && (exact || (monotone_tail && final_distance <= ROSEN_SUP_TOL)) {
        RosenVerdict::Associated { rate }
    } else {
        RosenVerdict::Inconclusive
    };
    Ok(RosenReport { rows, rate, monotone_tail, final_distance, pullback_ok, verdict })
}
