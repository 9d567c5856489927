//! ε → 0 behaviour of the coordinate change: the pointwise limit map,
//! constancy of the new coordinates along geodesics, and the contrast
//! between the shadows of the two metric forms.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gfn::{distributional_shadow, DensityShadow, EpsSchedule, EpsilonNet, Feature, ShadowOptions, TestDensity};
use crate::jet::Jet;
use crate::numerics::extrapolation::richardson;
use crate::numerics::quadrature::{integrate, QuadratureOptions};
use crate::ppwave::geodesic::{solve_geodesic, SolveOptions};
use crate::ppwave::LimitProfile;

use super::metric::{pushforward_metric, RosenForm};
use super::transform::GeneralizedDiffeo;

/// Largest accepted distance between the extrapolated and predicted maps.
pub const MACRO_TOL: f64 = 1e-4;
/// Largest accepted variation of `(X, Y, V)` along one geodesic.
pub const CONSTANCY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct MacroPoint {
    /// `(u, V, X, Y)`.
    pub point: [f64; 4],
    /// `(ε, t_ε(point))`.
    pub values: Vec<(f64, [f64; 4])>,
    pub limit: [f64; 4],
    /// `(u, V + f H(u) + ¼|∇f|² u₊, X + ½∇f u₊)` at `(X, Y)`.
    pub predicted: [f64; 4],
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstancyRow {
    pub eps: f64,
    /// `(X, Y, V)` the geodesic was launched with.
    pub initial: [f64; 3],
    /// Sup over `u` of the recovered coordinates' distance to `initial`.
    pub variation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroReport {
    pub points: Vec<MacroPoint>,
    pub constancy: Vec<ConstancyRow>,
    pub max_deviation: f64,
    pub max_variation: f64,
    pub passed: bool,
}

/// `u` samples for the constancy check: uniform on `[−1, u_hi]` plus the
/// shock window.
fn constancy_parameters(window: (f64, f64), u_hi: f64) -> Vec<f64> {
    let mut us: Vec<f64> = (0..=40).map(|i| -1.0 + (u_hi + 1.0) * i as f64 / 40.0).collect();
    us.extend((0..=16).map(|i| window.0 + (window.1 - window.0) * i as f64 / 16.0));
    us.retain(|&u| u <= u_hi);
    us.sort_by(f64::total_cmp);
    us
}

/// Extrapolates `t_ε` at each point (off `u = 0`) and compares with the
/// discontinuous limit map; then checks that `t_ε^{-1}` is constant along
/// the geodesics launched from each `(X, Y, V)` in `geodesics`.
pub fn macroscopic_limit(
    diffeo: &GeneralizedDiffeo,
    schedule: &EpsSchedule,
    points: &[[f64; 4]],
    geodesics: &[[f64; 3]],
) -> Result<MacroReport> {
    if let Some(p) = points.iter().find(|p| p[0] == 0.0) {
        return Err(Error::InvalidArgument(format!("limit point {p:?} lies on the shock plane")));
    }
    let f = &diffeo.metric().profile;
    let transforms = schedule.values().iter().map(|&e| diffeo.at(e)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(points.len());
    for &q in points {
        let values = transforms.iter().map(|t| t.forward(q).map(|p| (t.eps(), p))).collect::<Result<Vec<_>>>()?;
        let eps: Vec<f64> = values.iter().map(|v| v.0).collect();
        let limit = [0, 1, 2, 3].map(|k| richardson(&eps, &values.iter().map(|v| v.1[k]).collect::<Vec<_>>()).limit);
        let (x, v) = LimitProfile::first_order(f, [q[2], q[3]], q[1]).eval(q[0]);
        let predicted = [q[0], v, x[0], x[1]];
        let deviation = limit.iter().zip(&predicted).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        out.push(MacroPoint { point: q, values, limit, predicted, deviation });
    }

    let mut constancy = Vec::new();
    let u_hi = diffeo.domains().omega.upper()[0];
    for t in &transforms {
        for &[x0, y0, v0] in geodesics {
            let fam = solve_geodesic(diffeo.metric(), t.eps(), [x0, y0], v0, &SolveOptions::default())?;
            let mut variation: f64 = 0.0;
            for u in constancy_parameters(fam.window(), u_hi) {
                let s = fam.state(u);
                let back = t.inverse([u, s.v, s.x[0], s.x[1]])?;
                variation = variation.max((back[2] - x0).abs()).max((back[3] - y0).abs()).max((back[1] - v0).abs());
            }
            constancy.push(ConstancyRow { eps: t.eps(), initial: [x0, y0, v0], variation });
        }
    }
    let max_deviation = out.iter().map(|p| p.deviation).fold(0.0, f64::max);
    let max_variation = constancy.iter().map(|c| c.variation).fold(0.0, f64::max);
    let passed = max_deviation < MACRO_TOL && max_variation < CONSTANCY_TOL;
    Ok(MacroReport { points: out, constancy, max_deviation, max_variation, passed })
}

#[derive(Debug, Clone)]
pub struct ComponentShadow {
    pub label: String,
    pub shadow: DensityShadow,
    pub expected: f64,
}

impl ComponentShadow {
    pub fn deviation(&self) -> f64 {
        (self.shadow.limit() - self.expected).abs()
    }
}

#[derive(Debug, Clone)]
pub struct AssociationBreakingReport {
    /// `g_uu(·, 0, x, y)` paired with φ; expected `f(x, y) φ(0)`.
    pub untransformed: ComponentShadow,
    /// Transformed components paired with φ; expected `∫ g^Rosen φ du`.
    pub transformed: Vec<ComponentShadow>,
    /// The delta part of the untransformed shadow is visible above tolerance.
    pub demonstrated: bool,
    pub passed: bool,
}

/// Transformed components compared in the association-breaking run.
const DEMO_COMPONENTS: [(usize, usize, &str); 6] =
    [(0, 0, "uu"), (0, 2, "uX"), (0, 3, "uY"), (2, 2, "XX"), (2, 3, "XY"), (3, 3, "YY")];

/// Pairs `g_uu` of the original metric and the components of the
/// transformed metric with one density in `u` at transverse position `xy`.
///
/// The original shadow is `f(x, y) δ(u)`; the transformed one is the
/// continuous Rosen form, so the shadow of the transformed metric is not the
/// transform of the shadow.
pub fn association_breaking(
    diffeo: &Arc<GeneralizedDiffeo>,
    schedule: &EpsSchedule,
    xy: [f64; 2],
    density: &TestDensity,
    tolerance: f64,
) -> Result<AssociationBreakingReport> {
    if density.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: density.dim() });
    }
    let omega = &diffeo.domains().omega;
    let (lo, hi) = (density.support().lower()[0], density.support().upper()[0]);
    if lo < omega.lower()[0] || hi > omega.upper()[0] {
        return Err(Error::InvalidArgument(format!(
            "density support [{lo}, {hi}] leaves the u-range of Ω [{}, {}]",
            omega.lower()[0],
            omega.upper()[0]
        )));
    }
    let metric = diffeo.metric().clone();
    let opts = ShadowOptions {
        support_radius: metric.delta.profile().radius(),
        ..ShadowOptions::with_features(vec![Feature::Hyperplane { axis: 0, center: 0.0 }])
    };
    let phi0 = density.eval(&[0.0]);

    let g = metric.clone();
    let guu = EpsilonNet::new(1, 0, format!("g_uu(u; {xy:?})"), move |eps, u, order| {
        let v = g.metric.values(eps, &[u[0], 0.0, xy[0], xy[1]]).map_or(f64::NAN, |m| m[(0, 0)]);
        Jet::constant(1, order, v)
    });
    let shadow = distributional_shadow(&guu, std::slice::from_ref(density), schedule, &opts)?.densities.remove(0);
    let untransformed =
        ComponentShadow { label: "g_uu".into(), shadow, expected: metric.profile.value(xy[0], xy[1]) * phi0 };

    let rosen = RosenForm::new(metric.profile.clone());
    let quad = QuadratureOptions { abs_tol: 1e-13, rel_tol: 1e-12, ..QuadratureOptions::default() };
    let mut transformed = Vec::new();
    for (i, j, name) in DEMO_COMPONENTS {
        let d = diffeo.clone();
        let net = EpsilonNet::new(1, 0, format!("g'_{name}(u; {xy:?})"), move |eps, u, order| {
            let v = pushforward_metric(&d, eps)
                .and_then(|m| m.closed_form([u[0], 0.0, xy[0], xy[1]]))
                .map_or(f64::NAN, |g| g[(i, j)]);
            Jet::constant(1, order, v)
        });
        let shadow = distributional_shadow(&net, std::slice::from_ref(density), schedule, &opts)?.densities.remove(0);
        let expected = integrate(|u| rosen.components(u, xy)[(i, j)] * density.eval(&[u]), lo, hi, &[0.0], &quad)?.value;
        transformed.push(ComponentShadow { label: format!("g'_{name}"), shadow, expected });
    }
    let demonstrated = untransformed.expected.abs() > 10.0 * tolerance;
    let passed = demonstrated
        && untransformed.deviation() < tolerance
        && transformed.iter().all(|c| c.deviation() < tolerance && c.shadow.failures.is_empty());
    Ok(AssociationBreakingReport { untransformed, transformed, demonstrated, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delta::{model_delta, MollifierProfile};
    use crate::penrose::transform::{Domains, TransformOptions};
    use crate::ppwave::{ppwave_metric, ProfileFunction};
    use approx::assert_abs_diff_eq;

    fn diffeo(f: ProfileFunction) -> GeneralizedDiffeo {
        let g = ppwave_metric(f, model_delta(MollifierProfile::bump()).unwrap());
        GeneralizedDiffeo::new(g, Domains::default(), TransformOptions::default())
    }

    #[test]
    fn flat_limit_is_identity() {
        let d = diffeo(ProfileFunction::zero());
        let r = macroscopic_limit(&d, &EpsSchedule::dyadic(3, 6).unwrap(), &[[0.5, 0.2, 0.3, -0.1]], &[[0.1, 0.0, 0.0]])
            .unwrap();
        assert!(r.passed);
        assert_eq!(r.points[0].limit, [0.5, 0.2, 0.3, -0.1]);
    }

    #[test]
    fn plane_wave_limit_map() {
        let d = diffeo(ProfileFunction::quadrupole());
        let r = macroscopic_limit(&d, &EpsSchedule::dyadic(5, 10).unwrap(), &[[0.5, 0.0, 1.0, 1.0]], &[[0.2, -0.1, 0.05]])
            .unwrap();
        let p = &r.points[0];
        assert_abs_diff_eq!(p.limit[2], 1.5, epsilon = 1e-4);
        assert_abs_diff_eq!(p.limit[3], 0.5, epsilon = 1e-4);
        assert_abs_diff_eq!(p.limit[1], 1.0, epsilon = 1e-4);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn shock_plane_points_are_rejected() {
        let d = diffeo(ProfileFunction::quadrupole());
        assert!(macroscopic_limit(&d, &EpsSchedule::dyadic(3, 4).unwrap(), &[[0.0, 0.0, 1.0, 0.0]], &[]).is_err());
    }
}
