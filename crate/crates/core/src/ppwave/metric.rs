use crate::delta::StrictDeltaNet;
use crate::geometry::{AdmissibilityCertificate, MetricNet};
use crate::gfn::{CompactBox, Feature};
use crate::jet::Jet;

use super::profile::ProfileFunction;

/// Coordinate order of the pp-wave chart.
pub const U: usize = 0;
pub const V: usize = 1;
pub const X: usize = 2;
pub const Y: usize = 3;

/// `ds² = f(x,y) ρ_ε(u) du² − du dv + dx² + dy²` in coordinates `(u, v, x, y)`.
#[derive(Debug, Clone)]
pub struct PpWaveMetric {
    pub profile: ProfileFunction,
    pub delta: StrictDeltaNet,
    pub metric: MetricNet,
}

/// Builds the regularized impulsive pp-wave. The determinant is `−¼` for
/// every ε and point, so the metric is certified with `m = 0` everywhere.
pub fn ppwave_metric(profile: ProfileFunction, delta: StrictDeltaNet) -> PpWaveMetric {
    let (f, d) = (profile.clone(), delta.clone());
    let label = format!("ppwave[{}; {}]", profile.label(), delta.profile().label());
    let metric = MetricNet::from_jet_fn(4, delta.max_order(), label, "Lorentzian (u,v,x,y)", move |eps, c| {
        let dim = c[0].dim();
        let o = c[0].order();
        let zero = || Jet::zero(dim, o);
        let guu = &f.jet(&c[X], &c[Y]) * &d.compose(eps, &c[U]);
        vec![
            guu,
            Jet::constant(dim, o, -0.5),
            zero(),
            zero(),
            zero(),
            zero(),
            zero(),
            Jet::constant(dim, o, 1.0),
            zero(),
            Jet::constant(dim, o, 1.0),
        ]
    })
    .with_features(vec![Feature::Hyperplane { axis: U, center: 0.0 }])
    .assume_certificate(AdmissibilityCertificate {
        m: 0.0,
        region: CompactBox::cube(4, 1e6).expect("valid box"),
    });
    PpWaveMetric { profile, delta, metric }
}

impl PpWaveMetric {
    /// `g_uu = f(x, y) ρ_ε(u)`.
    pub fn h(&self, eps: f64, u: f64, x: f64, y: f64) -> f64 {
        self.profile.value(x, y) * self.delta.value(eps, u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delta::{model_delta, MollifierProfile};
    use crate::geometry::{check_admissibility, inverse_metric, Admissibility};
    use crate::gfn::{EpsSchedule, SamplingPlan};
    use approx::assert_abs_diff_eq;

    fn plane_wave() -> PpWaveMetric {
        ppwave_metric(ProfileFunction::quadrupole(), model_delta(MollifierProfile::bump()).unwrap())
    }

    #[test]
    fn component_layout() {
        let g = plane_wave();
        let m = g.metric.values(0.1, &[0.0, 0.3, 1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(m[(U, U)], g.delta.value(0.1, 0.0), epsilon = 1e-15);
        assert_eq!(m[(U, V)], -0.5);
        assert_eq!(m[(V, U)], -0.5);
        assert_eq!(m[(X, X)], 1.0);
        assert_eq!(m[(Y, Y)], 1.0);
        assert_eq!(m[(V, V)], 0.0);
        assert_abs_diff_eq!(m.determinant(), -0.25, epsilon = 1e-15);
    }

    #[test]
    fn zero_profile_is_null_minkowski() {
        let g = ppwave_metric(ProfileFunction::zero(), model_delta(MollifierProfile::bump()).unwrap());
        let m = g.metric.values(0.1, &[0.01, 0.0, 0.5, 0.5]).unwrap();
        assert_eq!(m[(U, U)], 0.0);
    }

    #[test]
    fn inverse_block() {
        let g = plane_wave();
        let p = [0.02, 0.0, 0.8, -0.3];
        let inv = inverse_metric(&g.metric).unwrap().values(0.1, &p).unwrap();
        let h = g.h(0.1, p[0], p[2], p[3]);
        assert_abs_diff_eq!(inv[(U, U)], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(inv[(U, V)], -2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(inv[(V, V)], -4.0 * h, epsilon = 1e-12);
        assert_abs_diff_eq!(inv[(X, X)], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn admissibility_exponent_is_zero() {
        let g = plane_wave();
        let bx = CompactBox::new(vec![-1.0, -1.0, -1.0, -1.0], vec![1.0; 4]).unwrap();
        let r = check_admissibility(&g.metric, &bx, &EpsSchedule::dyadic(3, 6).unwrap(), &SamplingPlan::with_cells(2))
            .unwrap();
        assert_eq!(r.verdict, Admissibility::Admissible { m: 0.0 });
    }
}
