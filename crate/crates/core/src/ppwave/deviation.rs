//! Jacobi fields along pp-wave geodesics, integrated with the generic
//! Christoffel and Riemann nets.

use crate::error::{Error, Result};
use crate::geometry::{gamma_index, riemann as riemann_fields, riemann_index, ChristoffelField, CurvatureFields};
use crate::numerics::ode::{integrate, DenseSolution, OdeOptions, OdeSystem};

use super::geodesic::{sample_parameters, solve_geodesic, GeodesicFamily, SolveOptions, U_END, U_START};
use super::metric::{PpWaveMetric, U, V, X, Y};

/// Step used for the two-geodesic finite-difference cross-check.
pub const FD_STEP: f64 = 1e-5;

/// Jacobi field `J(u)` and its covariant derivative `DJ/du` in `(u, v, x, y)`
/// components.
#[derive(Debug, Clone)]
pub struct JacobiTrajectory {
    pub eps: f64,
    pub solution: DenseSolution,
    /// Sup difference between `J` and a centered difference of two nearby
    /// geodesics; only available when the initial deviation stays inside the
    /// family (no `u` component, zero initial rate).
    pub fd_residual: Option<f64>,
}

impl JacobiTrajectory {
    pub fn deviation(&self, u: f64) -> [f64; 4] {
        let y = self.solution.eval(u);
        [y[0], y[1], y[2], y[3]]
    }

    pub fn rate(&self, u: f64) -> [f64; 4] {
        let y = self.solution.eval(u);
        [y[4], y[5], y[6], y[7]]
    }
}

struct Jacobi<'a> {
    base: &'a GeodesicFamily,
    gamma: &'a ChristoffelField,
    curvature: &'a CurvatureFields,
    eps: f64,
}

impl Jacobi<'_> {
    fn base_point(&self, u: f64) -> ([f64; 4], [f64; 4]) {
        let s = self.base.state(u);
        ([u, s.v, s.x[0], s.x[1]], [1.0, s.vdot, s.xdot[0], s.xdot[1]])
    }
}

impl OdeSystem for Jacobi<'_> {
    fn dim(&self) -> usize {
        8
    }

    fn rhs(&self, u: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        const N: usize = 4;
        let (p, t) = self.base_point(u);
        let g = self.gamma.values(self.eps, &p)?;
        let r: Vec<f64> = self.curvature.riemann_jets(self.eps, &p, 0)?.iter().map(|j| j.value()).collect();
        let (j, w) = y.split_at(N);
        for d in 0..N {
            let mut conn_j = 0.0;
            let mut conn_w = 0.0;
            for b in 0..N {
                for c in 0..N {
                    let gm = g[gamma_index(N, d, b, c)] * t[b];
                    conn_j += gm * j[c];
                    conn_w += gm * w[c];
                }
            }
            let mut drive = 0.0;
            for a in 0..N {
                for b in 0..N {
                    for c in 0..N {
                        drive += r[riemann_index(N, a, b, c, d)] * j[a] * t[b] * t[c];
                    }
                }
            }
            dy[d] = w[d] - conn_j;
            dy[N + d] = drive - conn_w;
        }
        Ok(())
    }

    fn max_step(&self, u: f64, _y: &[f64]) -> f64 {
        let (a, b) = self.base.window();
        let cap = 0.1 * self.eps;
        if u >= a - cap && u < b {
            cap
        } else if u < a {
            (a - u).max(cap)
        } else {
            f64::INFINITY
        }
    }
}

/// Integrates `D²J/du² = R(J, γ̇) γ̇` along `base` from `u = −1` with
/// `J(−1) = j0` and `DJ/du(−1) = rate0`.
pub fn geodesic_deviation(
    metric: &PpWaveMetric,
    eps: f64,
    base: &GeodesicFamily,
    j0: [f64; 4],
    rate0: [f64; 4],
    ode: &OdeOptions,
) -> Result<JacobiTrajectory> {
    if base.eps != eps {
        return Err(Error::InvalidArgument(format!("base geodesic was solved at ε = {}, not {eps}", base.eps)));
    }
    if j0.iter().chain(&rate0).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("initial deviation must be finite".into()));
    }
    let curvature = riemann_fields(&metric.metric)?;
    let sys = Jacobi { base, gamma: curvature.christoffel(), curvature: &curvature, eps };
    let (a, b) = base.window();
    let opts = OdeOptions { breakpoints: vec![a, 0.0, b], ..ode.clone() };
    let y0: Vec<f64> = j0.iter().chain(&rate0).copied().collect();
    let solution = integrate(&sys, U_START, &y0, U_END, &opts);
    if !solution.completed() {
        return Err(Error::Integration {
            t: solution.t_end(),
            reason: format!("Jacobi equation: {:?}", solution.termination),
        });
    }
    let mut traj = JacobiTrajectory { eps, solution, fd_residual: None };
    if j0[U] == 0.0 && rate0.iter().all(|&v| v == 0.0) {
        traj.fd_residual = Some(finite_difference_residual(metric, base, &traj, j0)?);
    }
    Ok(traj)
}

fn finite_difference_residual(
    metric: &PpWaveMetric,
    base: &GeodesicFamily,
    traj: &JacobiTrajectory,
    j0: [f64; 4],
) -> Result<f64> {
    let h = FD_STEP;
    let shifted = |sign: f64| {
        let x0 = [base.x0[0] + sign * h * j0[X], base.x0[1] + sign * h * j0[Y]];
        solve_geodesic(metric, base.eps, x0, base.v0 + sign * h * j0[V], &SolveOptions::default())
    };
    let (plus, minus) = (shifted(1.0)?, shifted(-1.0)?);
    let mut residual: f64 = 0.0;
    for u in sample_parameters(base.window()) {
        let (p, m) = (plus.state(u), minus.state(u));
        let fd = [0.0, (p.v - m.v) / (2.0 * h), (p.x[0] - m.x[0]) / (2.0 * h), (p.x[1] - m.x[1]) / (2.0 * h)];
        let j = traj.deviation(u);
        for k in 0..4 {
            residual = residual.max((j[k] - fd[k]).abs());
        }
    }
    Ok(residual)
}
