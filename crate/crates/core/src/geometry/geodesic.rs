use crate::error::{Error, Result};
use crate::gfn::Feature;
use crate::numerics::ode::{integrate, DenseSolution, OdeOptions, OdeSystem, Termination};

use super::connection::{christoffel, gamma_index, ChristoffelField};
use super::metric::MetricNet;

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicState {
    pub parameter: f64,
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl GeodesicState {
    pub fn new(parameter: f64, position: Vec<f64>, velocity: Vec<f64>) -> Result<Self> {
        if position.len() != velocity.len() {
            return Err(Error::DimensionMismatch { expected: position.len(), found: velocity.len() });
        }
        if !parameter.is_finite() || position.iter().chain(&velocity).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("geodesic state must be finite".into()));
        }
        Ok(Self { parameter, position, velocity })
    }
}

/// Integrator settings. Within `window_halfwidth·ε` of a metric feature the
/// step is capped at `window_step·ε`; outside, steps are cut so they cannot
/// cross into that window unresolved.
#[derive(Debug, Clone)]
pub struct GeodesicControls {
    pub ode: OdeOptions,
    pub window_halfwidth: f64,
    pub window_step: f64,
}

impl Default for GeodesicControls {
    fn default() -> Self {
        Self { ode: OdeOptions::default(), window_halfwidth: 2.0, window_step: 0.1 }
    }
}

struct GeodesicSystem<'a> {
    gamma: &'a ChristoffelField,
    eps: f64,
    features: &'a [Feature],
    controls: &'a GeodesicControls,
}

impl OdeSystem for GeodesicSystem<'_> {
    fn dim(&self) -> usize {
        2 * self.gamma.dim()
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let n = self.gamma.dim();
        let (x, v) = y.split_at(n);
        let g = self.gamma.values(self.eps, x)?;
        dy[..n].copy_from_slice(v);
        for k in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    acc += g[gamma_index(n, k, i, j)] * v[i] * v[j];
                }
            }
            dy[n + k] = -acc;
        }
        Ok(())
    }

    fn max_step(&self, _t: f64, y: &[f64]) -> f64 {
        let n = self.gamma.dim();
        let (x, v) = y.split_at(n);
        let width = self.controls.window_halfwidth * self.eps;
        let cap = self.controls.window_step * self.eps;
        let mut limit = f64::INFINITY;
        for f in self.features {
            let (dist, speed) = match f {
                Feature::Hyperplane { axis, center } => ((x[*axis] - center).abs(), v[*axis].abs()),
                Feature::Point(p) => {
                    let d: f64 = x.iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    (d, v.iter().map(|s| s * s).sum::<f64>().sqrt())
                }
            };
            let l = if dist <= width {
                cap
            } else if speed > 0.0 {
                ((dist - width) / speed).max(cap)
            } else {
                f64::INFINITY
            };
            limit = limit.min(l);
        }
        limit
    }
}

/// Dense geodesic of the metric at one ε.
#[derive(Debug, Clone)]
pub struct GeodesicTrajectory {
    pub eps: f64,
    pub solution: DenseSolution,
    /// `g(ẋ, ẋ)` at the start.
    pub initial_norm: f64,
    /// Largest deviation of `g(ẋ, ẋ)` from its initial value over the mesh.
    pub norm_drift: f64,
    dim: usize,
}

impl GeodesicTrajectory {
    pub fn state(&self, parameter: f64) -> GeodesicState {
        let y = self.solution.eval(parameter);
        GeodesicState { parameter, position: y[..self.dim].to_vec(), velocity: y[self.dim..].to_vec() }
    }

    pub fn completed(&self) -> bool {
        self.solution.completed()
    }

    pub fn termination(&self) -> &Termination {
        &self.solution.termination
    }

    /// Parameter range actually covered.
    pub fn range(&self) -> (f64, f64) {
        (self.solution.t_start(), self.solution.t_end())
    }

    /// `Err` describing the failure if the run stopped early.
    pub fn check(&self) -> Result<()> {
        match &self.solution.termination {
            Termination::Completed => Ok(()),
            Termination::StepUnderflow { t, h } => {
                Err(Error::Integration { t: *t, reason: format!("step size underflow (h = {h:e})") })
            }
            Termination::MaxSteps { t } => Err(Error::Integration { t: *t, reason: "step budget exhausted".into() }),
            Termination::RhsFailure { t, message } => Err(Error::Integration { t: *t, reason: message.clone() }),
        }
    }
}

fn norm(metric: &MetricNet, eps: f64, x: &[f64], v: &[f64]) -> Result<f64> {
    let g = metric.values(eps, x)?;
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += g[(i, j)] * v[i] * v[j];
        }
    }
    Ok(s)
}

/// Integrates `ẍ^k + Γ^k_ij ẋ^i ẋ^j = 0` from `initial.parameter` to `end`.
///
/// A run that stops early (step underflow near a singularity, exhausted
/// budget) is still returned, with the partial trajectory and the reason in
/// [`GeodesicTrajectory::termination`].
pub fn integrate_geodesic(
    metric: &MetricNet,
    eps: f64,
    initial: &GeodesicState,
    end: f64,
    controls: &GeodesicControls,
) -> Result<GeodesicTrajectory> {
    let n = metric.dim();
    if initial.position.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: initial.position.len() });
    }
    if !(end >= initial.parameter) {
        return Err(Error::InvalidArgument(format!("end {end} precedes start {}", initial.parameter)));
    }
    let gamma = christoffel(metric)?;
    let sys = GeodesicSystem { gamma: &gamma, eps, features: metric.features(), controls };
    let y0: Vec<f64> = initial.position.iter().chain(&initial.velocity).copied().collect();
    let solution = integrate(&sys, initial.parameter, &y0, end, &controls.ode);
    let initial_norm = norm(metric, eps, &initial.position, &initial.velocity)?;
    let mut norm_drift: f64 = 0.0;
    let mut y = vec![0.0; 2 * n];
    for t in solution.mesh() {
        solution.eval_into(t, &mut y);
        if let Ok(q) = norm(metric, eps, &y[..n], &y[n..]) {
            norm_drift = norm_drift.max((q - initial_norm).abs());
        }
    }
    Ok(GeodesicTrajectory { eps, solution, initial_norm, norm_drift, dim: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::metric::AdmissibilityCertificate;
    use crate::gfn::CompactBox;
    use crate::jet::Jet;
    use approx::assert_abs_diff_eq;

    #[test]
    fn flat_geodesics_are_straight() {
        let g = MetricNet::minkowski(3)
            .assume_certificate(AdmissibilityCertificate { m: 0.0, region: CompactBox::cube(3, 1.0).unwrap() });
        let s0 = GeodesicState::new(0.0, vec![0.1, 0.2, 0.3], vec![1.0, -0.5, 0.25]).unwrap();
        let tr = integrate_geodesic(&g, 0.1, &s0, 2.0, &GeodesicControls::default()).unwrap();
        assert!(tr.completed());
        let s = tr.state(1.5);
        for i in 0..3 {
            assert_abs_diff_eq!(s.position[i], s0.position[i] + 1.5 * s0.velocity[i], epsilon = 1e-12);
        }
        assert!(tr.norm_drift < 1e-12);
    }

    #[test]
    fn sphere_great_circle_conserves_speed() {
        let g = MetricNet::from_jet_fn(2, usize::MAX, "S²", "Riemannian", |_, x| {
            let o = x[0].order();
            let s = x[0].sin();
            vec![Jet::constant(2, o, 1.0), Jet::zero(2, o), &s * &s]
        })
        .assume_certificate(AdmissibilityCertificate { m: 0.0, region: CompactBox::cube(2, 1.0).unwrap() });
        // equator, moving along φ
        let s0 = GeodesicState::new(0.0, vec![std::f64::consts::FRAC_PI_2, 0.0], vec![0.0, 1.0]).unwrap();
        let tr = integrate_geodesic(&g, 0.5, &s0, 3.0, &GeodesicControls::default()).unwrap();
        let s = tr.state(3.0);
        assert_abs_diff_eq!(s.position[0], std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(s.position[1], 3.0, epsilon = 1e-9);
        assert!(tr.norm_drift < 1e-9);
    }
}
