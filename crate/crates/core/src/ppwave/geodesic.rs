//! Geodesics of the regularized pp-wave with vanishing initial transverse
//! speed, parametrized by `u`.
//!
//! With `p = ẋ`, `q = ẏ` and `s = p² + q²` the geodesic equations reduce to
//!
//! ```text
//! x'' = ½ f_x ρ_ε,   y'' = ½ f_y ρ_ε,   v' = f ρ_ε + s,   s' = (f_x p + f_y q) ρ_ε
//! ```
//!
//! with `x(−1) = x₀`, `v(−1) = v₀` and zero speeds. Off the window
//! `[−ε r, ε r]` (`r` the profile radius) every geodesic is a straight line,
//! so only the window is solved numerically.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{integrate_geodesic, GeodesicControls, GeodesicState};
use crate::gfn::EpsSchedule;
use crate::numerics::extrapolation::{power_law_fit, richardson, Extrapolation};
use crate::numerics::ode::{integrate, DenseSolution, OdeOptions, OdeSystem};
use crate::numerics::quadrature::PanelRule;

use super::metric::PpWaveMetric;
use super::profile::ProfileFunction;

/// Geodesics start here.
pub const U_START: f64 = -1.0;
/// Dense output is guaranteed up to here.
pub const U_END: f64 = 1.0;
/// Largest allowed difference between the Picard solution and the generic
/// geodesic integrator.
pub const CROSS_CHECK_TOL: f64 = 1e-8;

const BASE: usize = 6;
const IX: usize = 0;
const IY: usize = 1;
const IP: usize = 2;
const IQ: usize = 3;
const IV: usize = 4;
const IS: usize = 5;

#[derive(Debug, Clone)]
pub struct PicardOptions {
    /// Weight of the new iterate in `x ← x + λ (T x − x)`.
    pub damping: f64,
    pub max_iterations: usize,
    /// Converged once the sup-norm change drops below this.
    pub tolerance: f64,
    pub panels: usize,
    pub nodes_per_panel: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self { damping: 0.5, max_iterations: 200, tolerance: 1e-12, panels: 32, nodes_per_panel: 16 }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    pub sensitivities: bool,
    /// Re-solve with the generic geodesic integrator and compare.
    pub cross_validate: bool,
    /// Skip the fixed-point solver and integrate the reduced ODE directly.
    pub force_ode: bool,
    pub picard: PicardOptions,
    pub ode: OdeOptions,
}

impl SolveOptions {
    pub fn with_sensitivities() -> Self {
        Self { sensitivities: true, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverPath {
    Picard { iterations: usize },
    /// Reduced ODE; `fallback_reason` is set when the fixed-point solver failed.
    Ode { fallback_reason: Option<String> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossCheck {
    /// Sup over sampled `u` of the coordinate differences.
    pub residual: f64,
    /// Drift of `g(γ̇, γ̇)` along the generic trajectory.
    pub norm_drift: f64,
    /// Sup of `|u(t) − t|` along the generic trajectory.
    pub affine_drift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicPoint {
    pub u: f64,
    pub x: [f64; 2],
    pub xdot: [f64; 2],
    pub v: f64,
    pub vdot: f64,
}

/// Derivatives with respect to the initial data; `dx[i][j] = ∂x^i/∂x₀^j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sensitivity {
    pub dx: [[f64; 2]; 2],
    pub dxdot: [[f64; 2]; 2],
    pub dv: [f64; 2],
    pub dvdot: [f64; 2],
    pub dv_dv0: f64,
}

#[derive(Debug, Clone)]
struct Panels {
    rule: PanelRule,
    a: f64,
    h: f64,
    count: usize,
}

impl Panels {
    fn new(a: f64, b: f64, count: usize, nodes: usize) -> Self {
        Self { rule: PanelRule::new(nodes), a, h: (b - a) / count as f64, count }
    }

    fn nodes(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.count * self.rule.nodes.len());
        for m in 0..self.count {
            let left = self.a + m as f64 * self.h;
            out.extend(self.rule.nodes.iter().map(|t| left + 0.5 * self.h * (t + 1.0)));
        }
        out
    }

    /// `∫_a^{u_k} g` at every node, and `∫_a^b g`.
    fn cumulative(&self, g: &[f64]) -> (Vec<f64>, f64) {
        let n = self.rule.nodes.len();
        let half = 0.5 * self.h;
        let mut out = Vec::with_capacity(g.len());
        let mut start = 0.0;
        for m in 0..self.count {
            let gm = &g[m * n..(m + 1) * n];
            for row in &self.rule.cumulative {
                out.push(start + half * row.iter().zip(gm).map(|(c, v)| c * v).sum::<f64>());
            }
            start += half * self.rule.weights.iter().zip(gm).map(|(w, v)| w * v).sum::<f64>();
        }
        (out, start)
    }

    fn interpolate(&self, values: &[f64], u: f64) -> f64 {
        let n = self.rule.nodes.len();
        let m = (((u - self.a) / self.h).floor() as isize).clamp(0, self.count as isize - 1) as usize;
        let s = 2.0 * (u - self.a - m as f64 * self.h) / self.h - 1.0;
        self.rule.interpolate(&values[m * n..(m + 1) * n], s)
    }
}

#[derive(Debug, Clone)]
enum Dense {
    Panels { panels: Panels, values: Vec<Vec<f64>> },
    Ode(DenseSolution),
}

/// One geodesic `u ↦ (u, v_ε, x_ε, y_ε)` at fixed ε, with optional
/// sensitivities, dense on `[−1, 1]`.
#[derive(Debug, Clone)]
pub struct GeodesicFamily {
    pub eps: f64,
    pub x0: [f64; 2],
    pub v0: f64,
    pub path: SolverPath,
    pub cross_check: Option<CrossCheck>,
    window: (f64, f64),
    width: usize,
    dense: Dense,
    end: Vec<f64>,
    metric: PpWaveMetric,
}

fn initial_vector(x0: [f64; 2], v0: f64, width: usize) -> Vec<f64> {
    let mut y = vec![0.0; width];
    y[IX] = x0[0];
    y[IY] = x0[1];
    y[IV] = v0;
    if width > BASE {
        y[BASE + IX] = 1.0;
        y[2 * BASE + IY] = 1.0;
    }
    y
}

impl GeodesicFamily {
    /// `[a, b]` outside of which the geodesic is a straight line.
    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn has_sensitivities(&self) -> bool {
        self.width > BASE
    }

    pub fn profile(&self) -> &ProfileFunction {
        &self.metric.profile
    }

    fn raw(&self, u: f64) -> Vec<f64> {
        let (a, b) = self.window;
        if u <= a {
            return initial_vector(self.x0, self.v0, self.width);
        }
        if u >= b {
            let d = u - b;
            let mut y = self.end.clone();
            for off in (0..self.width).step_by(BASE) {
                y[off + IX] += d * self.end[off + IP];
                y[off + IY] += d * self.end[off + IQ];
                y[off + IV] += d * self.end[off + IS];
            }
            return y;
        }
        match &self.dense {
            Dense::Panels { panels, values } => values.iter().map(|c| panels.interpolate(c, u)).collect(),
            Dense::Ode(sol) => sol.eval(u),
        }
    }

    pub fn state(&self, u: f64) -> GeodesicPoint {
        let y = self.raw(u);
        let rho = self.metric.delta.value(self.eps, u);
        let f = self.metric.profile.value(y[IX], y[IY]);
        GeodesicPoint { u, x: [y[IX], y[IY]], xdot: [y[IP], y[IQ]], v: y[IV], vdot: f * rho + y[IS] }
    }

    pub fn sensitivity(&self, u: f64) -> Option<Sensitivity> {
        if !self.has_sensitivities() {
            return None;
        }
        let y = self.raw(u);
        let rho = self.metric.delta.value(self.eps, u);
        let grad = self.metric.profile.gradient(y[IX], y[IY]);
        let mut s = Sensitivity { dx: [[0.0; 2]; 2], dxdot: [[0.0; 2]; 2], dv: [0.0; 2], dvdot: [0.0; 2], dv_dv0: 1.0 };
        for j in 0..2 {
            let c = &y[BASE * (j + 1)..BASE * (j + 2)];
            s.dx[0][j] = c[IX];
            s.dx[1][j] = c[IY];
            s.dxdot[0][j] = c[IP];
            s.dxdot[1][j] = c[IQ];
            s.dv[j] = c[IV];
            s.dvdot[j] = (grad[0] * c[IX] + grad[1] * c[IY]) * rho + c[IS];
        }
        Some(s)
    }

    /// State right after the window.
    pub fn exit_state(&self) -> GeodesicPoint {
        self.state(self.window.1)
    }
}

struct Reduced<'a> {
    metric: &'a PpWaveMetric,
    eps: f64,
    width: usize,
}

impl OdeSystem for Reduced<'_> {
    fn dim(&self) -> usize {
        self.width
    }

    fn rhs(&self, u: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let f = &self.metric.profile;
        let rho = self.metric.delta.value(self.eps, u);
        let (x, yy, p, q) = (y[IX], y[IY], y[IP], y[IQ]);
        let g = f.gradient(x, yy);
        dy[IX] = p;
        dy[IY] = q;
        dy[IP] = 0.5 * g[0] * rho;
        dy[IQ] = 0.5 * g[1] * rho;
        dy[IV] = f.value(x, yy) * rho + y[IS];
        dy[IS] = (g[0] * p + g[1] * q) * rho;
        if self.width > BASE {
            let hs = f.hessian(x, yy);
            for off in [BASE, 2 * BASE] {
                let c = &y[off..off + BASE];
                let hx = hs[0][0] * c[IX] + hs[0][1] * c[IY];
                let hy = hs[1][0] * c[IX] + hs[1][1] * c[IY];
                dy[off + IX] = c[IP];
                dy[off + IY] = c[IQ];
                dy[off + IP] = 0.5 * hx * rho;
                dy[off + IQ] = 0.5 * hy * rho;
                dy[off + IV] = (g[0] * c[IX] + g[1] * c[IY]) * rho + c[IS];
                dy[off + IS] = (hx * p + hy * q + g[0] * c[IP] + g[1] * c[IQ]) * rho;
            }
        }
        if dy.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::GeodesicDivergence(format!("non-finite right-hand side at u = {u}")))
        }
    }

    fn max_step(&self, _t: f64, _y: &[f64]) -> f64 {
        0.1 * self.eps
    }
}

struct PicardSolution {
    values: Vec<Vec<f64>>,
    end: Vec<f64>,
    iterations: usize,
}

fn picard(
    metric: &PpWaveMetric,
    eps: f64,
    x0: [f64; 2],
    v0: f64,
    panels: &Panels,
    opts: &PicardOptions,
    sensitivities: bool,
) -> std::result::Result<PicardSolution, String> {
    let f = &metric.profile;
    let us = panels.nodes();
    let n = us.len();
    let rho: Vec<f64> = us.iter().map(|&u| metric.delta.value(eps, u)).collect();
    let mut xs = vec![x0[0]; n];
    let mut ys = vec![x0[1]; n];
    let forcing = |xs: &[f64], ys: &[f64], a: u32, b: u32| -> Vec<f64> {
        (0..n).map(|k| f.partial(a, b, xs[k], ys[k]) * rho[k]).collect()
    };
    let mut iterations = 0;
    loop {
        iterations += 1;
        let (px, _) = panels.cumulative(&forcing(&xs, &ys, 1, 0));
        let (py, _) = panels.cumulative(&forcing(&xs, &ys, 0, 1));
        let (ix, _) = panels.cumulative(&px);
        let (iy, _) = panels.cumulative(&py);
        let mut change: f64 = 0.0;
        for k in 0..n {
            let nx = x0[0] + 0.5 * ix[k];
            let ny = x0[1] + 0.5 * iy[k];
            change = change.max((nx - xs[k]).abs()).max((ny - ys[k]).abs());
            xs[k] += opts.damping * (nx - xs[k]);
            ys[k] += opts.damping * (ny - ys[k]);
        }
        if !change.is_finite() || change > 1e6 {
            return Err(format!("fixed-point iteration diverged at iteration {iterations} (sup change {change:e})"));
        }
        if change < opts.tolerance {
            break;
        }
        if iterations >= opts.max_iterations {
            return Err(format!("no fixed-point convergence in {iterations} iterations (sup change {change:e})"));
        }
    }

    let width = if sensitivities { 3 * BASE } else { BASE };
    let mut values = vec![vec![0.0; n]; width];
    let mut end = vec![0.0; width];

    let gx = forcing(&xs, &ys, 1, 0);
    let gy = forcing(&xs, &ys, 0, 1);
    let (px, px_end) = panels.cumulative(&gx);
    let (py, py_end) = panels.cumulative(&gy);
    let (ix, ix_end) = panels.cumulative(&px);
    let (iy, iy_end) = panels.cumulative(&py);
    let p: Vec<f64> = px.iter().map(|v| 0.5 * v).collect();
    let q: Vec<f64> = py.iter().map(|v| 0.5 * v).collect();
    let (pe, qe) = (0.5 * px_end, 0.5 * py_end);
    let w: Vec<f64> = (0..n).map(|k| gx[k] * p[k] + gy[k] * q[k]).collect();
    let (s, s_end) = panels.cumulative(&w);
    let fr = forcing(&xs, &ys, 0, 0);
    let vd: Vec<f64> = (0..n).map(|k| fr[k] + s[k]).collect();
    let (iv, iv_end) = panels.cumulative(&vd);
    for k in 0..n {
        values[IX][k] = x0[0] + 0.5 * ix[k];
        values[IY][k] = x0[1] + 0.5 * iy[k];
        values[IP][k] = p[k];
        values[IQ][k] = q[k];
        values[IV][k] = v0 + iv[k];
        values[IS][k] = s[k];
    }
    end[IX] = x0[0] + 0.5 * ix_end;
    end[IY] = x0[1] + 0.5 * iy_end;
    end[IP] = pe;
    end[IQ] = qe;
    end[IV] = v0 + iv_end;
    end[IS] = s_end;

    if sensitivities {
        let hxx = forcing(&xs, &ys, 2, 0);
        let hxy = forcing(&xs, &ys, 1, 1);
        let hyy = forcing(&xs, &ys, 0, 2);
        for j in 0..2 {
            let off = BASE * (j + 1);
            let e = if j == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
            let mut dx = vec![e[0]; n];
            let mut dy = vec![e[1]; n];
            // linear Volterra equation: plain iteration converges
            for it in 0.. {
                let hx: Vec<f64> = (0..n).map(|k| hxx[k] * dx[k] + hxy[k] * dy[k]).collect();
                let hy: Vec<f64> = (0..n).map(|k| hxy[k] * dx[k] + hyy[k] * dy[k]).collect();
                let (ix, _) = panels.cumulative(&panels.cumulative(&hx).0);
                let (iy, _) = panels.cumulative(&panels.cumulative(&hy).0);
                let mut change: f64 = 0.0;
                let mut scale: f64 = 1.0;
                for k in 0..n {
                    let nx = e[0] + 0.5 * ix[k];
                    let ny = e[1] + 0.5 * iy[k];
                    change = change.max((nx - dx[k]).abs()).max((ny - dy[k]).abs());
                    scale = scale.max(nx.abs()).max(ny.abs());
                    dx[k] = nx;
                    dy[k] = ny;
                }
                if !change.is_finite() {
                    return Err("variational iteration diverged".into());
                }
                if change <= 1e-15 * scale {
                    break;
                }
                if it >= opts.max_iterations {
                    return Err(format!("variational iteration did not converge (sup change {change:e})"));
                }
            }
            let hx: Vec<f64> = (0..n).map(|k| hxx[k] * dx[k] + hxy[k] * dy[k]).collect();
            let hy: Vec<f64> = (0..n).map(|k| hxy[k] * dx[k] + hyy[k] * dy[k]).collect();
            let (dpx, dpx_end) = panels.cumulative(&hx);
            let (dpy, dpy_end) = panels.cumulative(&hy);
            let (ddx, ddx_end) = panels.cumulative(&dpx);
            let (ddy, ddy_end) = panels.cumulative(&dpy);
            let dp: Vec<f64> = dpx.iter().map(|v| 0.5 * v).collect();
            let dq: Vec<f64> = dpy.iter().map(|v| 0.5 * v).collect();
            let ws: Vec<f64> = (0..n).map(|k| hx[k] * p[k] + hy[k] * q[k] + gx[k] * dp[k] + gy[k] * dq[k]).collect();
            let (ds, ds_end) = panels.cumulative(&ws);
            let wv: Vec<f64> = (0..n).map(|k| gx[k] * dx[k] + gy[k] * dy[k] + ds[k]).collect();
            let (dv, dv_end) = panels.cumulative(&wv);
            for k in 0..n {
                values[off + IX][k] = e[0] + 0.5 * ddx[k];
                values[off + IY][k] = e[1] + 0.5 * ddy[k];
                values[off + IP][k] = dp[k];
                values[off + IQ][k] = dq[k];
                values[off + IV][k] = dv[k];
                values[off + IS][k] = ds[k];
            }
            end[off + IX] = e[0] + 0.5 * ddx_end;
            end[off + IY] = e[1] + 0.5 * ddy_end;
            end[off + IP] = 0.5 * dpx_end;
            end[off + IQ] = 0.5 * dpy_end;
            end[off + IV] = dv_end;
            end[off + IS] = ds_end;
        }
    }
    Ok(PicardSolution { values, end, iterations })
}

/// Solves the geodesic with initial data `(x₀, y₀, v₀)` at `u = −1`.
///
/// The fixed-point form is solved by damped Picard iteration on
/// Gauss–Legendre panels covering the window; if it fails to contract the
/// reduced ODE is integrated instead, and the reason is kept in
/// [`GeodesicFamily::path`].
pub fn solve_geodesic(
    metric: &PpWaveMetric,
    eps: f64,
    x0: [f64; 2],
    v0: f64,
    opts: &SolveOptions,
) -> Result<GeodesicFamily> {
    crate::gfn::net::check_eps(eps)?;
    if x0.iter().any(|v| !v.is_finite()) || !v0.is_finite() {
        return Err(Error::InvalidArgument("initial data must be finite".into()));
    }
    let r = metric.delta.support_radius(eps);
    if r >= -U_START || r >= U_END {
        return Err(Error::InvalidArgument(format!("shock window ±{r} does not fit inside [-1, 1]")));
    }
    let (a, b) = (-r, r);
    let width = if opts.sensitivities { 3 * BASE } else { BASE };
    let panels = Panels::new(a, b, opts.picard.panels.max(1), opts.picard.nodes_per_panel.max(2));

    let picard_result = if opts.force_ode {
        Err(None)
    } else {
        picard(metric, eps, x0, v0, &panels, &opts.picard, opts.sensitivities).map_err(Some)
    };
    let (dense, end, path) = match picard_result {
        Ok(sol) => (Dense::Panels { panels, values: sol.values }, sol.end, SolverPath::Picard { iterations: sol.iterations }),
        Err(reason) => {
            let sys = Reduced { metric, eps, width };
            let ode = OdeOptions { breakpoints: vec![0.0], ..opts.ode.clone() };
            let sol = integrate(&sys, a, &initial_vector(x0, v0, width), b, &ode);
            if !sol.completed() {
                return Err(Error::GeodesicDivergence(format!(
                    "x₀ = {x0:?}, ε = {eps}: {}; ODE fallback stopped: {:?}",
                    reason.as_deref().unwrap_or("fixed-point solver skipped"),
                    sol.termination
                )));
            }
            let end = sol.final_state();
            (Dense::Ode(sol), end, SolverPath::Ode { fallback_reason: reason })
        }
    };
    let mut family = GeodesicFamily {
        eps,
        x0,
        v0,
        path,
        cross_check: None,
        window: (a, b),
        width,
        dense,
        end,
        metric: metric.clone(),
    };
    if opts.cross_validate {
        let check = cross_validate(&family, &opts.ode)?;
        family.cross_check = Some(check);
        if check.residual > CROSS_CHECK_TOL {
            return Err(Error::CrossCheck {
                what: format!("reduced vs generic geodesic (x₀ = {x0:?}, ε = {eps})"),
                difference: check.residual,
                tolerance: CROSS_CHECK_TOL,
            });
        }
    }
    Ok(family)
}

fn cross_validate(family: &GeodesicFamily, ode: &OdeOptions) -> Result<CrossCheck> {
    let (a, b) = family.window;
    let start = GeodesicState::new(U_START, vec![U_START, family.v0, family.x0[0], family.x0[1]], vec![1.0, 0.0, 0.0, 0.0])?;
    let controls = GeodesicControls { ode: OdeOptions { breakpoints: vec![a, 0.0, b], ..ode.clone() }, ..Default::default() };
    let tr = integrate_geodesic(&family.metric.metric, family.eps, &start, U_END, &controls)?;
    tr.check()?;
    let mut samples: Vec<f64> = (0..=400).map(|i| U_START + (U_END - U_START) * i as f64 / 400.0).collect();
    samples.extend((0..=64).map(|i| a + (b - a) * i as f64 / 64.0));
    let mut residual: f64 = 0.0;
    let mut affine_drift: f64 = 0.0;
    for u in samples {
        let g = tr.state(u);
        let p = family.state(u);
        affine_drift = affine_drift.max((g.position[0] - u).abs());
        residual = residual
            .max((g.position[2] - p.x[0]).abs())
            .max((g.position[3] - p.x[1]).abs())
            .max((g.position[1] - p.v).abs());
    }
    Ok(CrossCheck { residual, norm_drift: tr.norm_drift, affine_drift })
}

/// Kink/jump description of an ε → 0 trajectory:
/// `x^i = x₀^i + x_jump^i H(u) + x_kink^i u₊`, `v = v₀ + v_jump H(u) + v_kink u₊`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitProfile {
    pub x0: [f64; 2],
    pub v0: f64,
    pub x_jump: [f64; 2],
    pub x_kink: [f64; 2],
    pub v_jump: f64,
    pub v_kink: f64,
}

impl LimitProfile {
    /// Leading-order small-ε prediction: slope change `½∇f(x₀)`, v-jump
    /// `f(x₀)` and v-slope `¼|∇f(x₀)|²`.
    pub fn first_order(f: &ProfileFunction, x0: [f64; 2], v0: f64) -> Self {
        let g = f.gradient(x0[0], x0[1]);
        Self {
            x0,
            v0,
            x_jump: [0.0; 2],
            x_kink: [0.5 * g[0], 0.5 * g[1]],
            v_jump: f.value(x0[0], x0[1]),
            v_kink: 0.25 * (g[0] * g[0] + g[1] * g[1]),
        }
    }

    /// `(x, y, v)` at `u`, with `H(0) = ½`.
    pub fn eval(&self, u: f64) -> ([f64; 2], f64) {
        let h = if u > 0.0 {
            1.0
        } else if u < 0.0 {
            0.0
        } else {
            0.5
        };
        let up = u.max(0.0);
        let x = [0, 1].map(|i| self.x0[i] + self.x_jump[i] * h + self.x_kink[i] * up);
        (x, self.v0 + self.v_jump * h + self.v_kink * up)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitSample {
    pub eps: f64,
    pub x_jump: [f64; 2],
    pub x_kink: [f64; 2],
    pub v_jump: f64,
    pub v_kink: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitVerdict {
    Converged,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct LimitReport {
    pub samples: Vec<LimitSample>,
    pub families: Vec<GeodesicFamily>,
    /// Extrapolated coefficients.
    pub profile: LimitProfile,
    /// Extrapolations of `x_kink`, `x_jump`, `v_jump`, `v_kink`.
    pub extrapolations: Vec<(String, Extrapolation)>,
    pub verdict: LimitVerdict,
}

/// `u` samples used for sup distances: uniform on `[−1, 1]` plus the window.
pub fn sample_parameters(window: (f64, f64)) -> Vec<f64> {
    let mut us: Vec<f64> = (0..=800).map(|i| U_START + (U_END - U_START) * i as f64 / 800.0).collect();
    us.extend((0..=128).map(|i| window.0 + (window.1 - window.0) * i as f64 / 128.0));
    us.sort_by(f64::total_cmp);
    us
}

impl LimitReport {
    /// Per ε: sup over `u ∈ [−1, 1]` of `|x_ε − x_lim|`, and sup of
    /// `|v_ε − v_lim|` off the shock window.
    pub fn sup_distances(&self, limit: &LimitProfile) -> Vec<(f64, f64, f64)> {
        self.families
            .iter()
            .map(|fam| {
                let (a, b) = fam.window();
                let mut dx: f64 = 0.0;
                let mut dv: f64 = 0.0;
                for u in sample_parameters(fam.window()) {
                    let s = fam.state(u);
                    let (xl, vl) = limit.eval(u);
                    dx = dx.max((s.x[0] - xl[0]).abs()).max((s.x[1] - xl[1]).abs());
                    if u < a || u > b {
                        dv = dv.max((s.v - vl).abs());
                    }
                }
                (fam.eps, dx, dv)
            })
            .collect()
    }

    /// Fitted order of the sup x-distance to `limit`; `None` if the
    /// distances are all zero.
    pub fn x_order(&self, limit: &LimitProfile) -> Option<f64> {
        let d = self.sup_distances(limit);
        let (e, v): (Vec<f64>, Vec<f64>) = d.iter().map(|t| (t.0, t.1)).unzip();
        power_law_fit(&e, &v).map(|f| f.slope)
    }
}

fn cauchy(values: &[f64]) -> bool {
    let n = values.len();
    n < 4
        || values[n - 4..]
            .windows(2)
            .all(|w| (w[1] - w[0]).abs() < crate::gfn::shadow::CAUCHY_TOL * (1.0 + w[0].abs()))
}

/// Solves over the schedule and measures the kink/jump coefficients at
/// `u = 0` for each ε, then extrapolates them.
pub fn geodesic_limit(
    metric: &PpWaveMetric,
    x0: [f64; 2],
    v0: f64,
    schedule: &EpsSchedule,
    opts: &SolveOptions,
) -> Result<LimitReport> {
    let families: Vec<GeodesicFamily> = schedule
        .values()
        .par_iter()
        .map(|&eps| solve_geodesic(metric, eps, x0, v0, opts))
        .collect::<Result<_>>()?;
    let samples: Vec<LimitSample> = families
        .iter()
        .map(|fam| {
            let (a, b) = fam.window();
            let before = fam.state(a);
            let after = fam.state(b);
            LimitSample {
                eps: fam.eps,
                x_jump: [0, 1].map(|i| (after.x[i] - before.x[i]) - 0.5 * (b - a) * after.xdot[i]),
                x_kink: [0, 1].map(|i| after.xdot[i] - before.xdot[i]),
                v_jump: (after.v - before.v) - 0.5 * (b - a) * after.vdot,
                v_kink: after.vdot - before.vdot,
            }
        })
        .collect();
    let eps: Vec<f64> = samples.iter().map(|s| s.eps).collect();
    let mut extrapolations = Vec::new();
    let mut verdict = LimitVerdict::Converged;
    let mut extrapolate = |name: String, vals: Vec<f64>| {
        if !cauchy(&vals) {
            verdict = LimitVerdict::Inconclusive;
        }
        let ex = richardson(&eps, &vals);
        extrapolations.push((name, ex));
        ex.limit
    };
    let x_kink = [0, 1].map(|i| extrapolate(format!("x_kink[{i}]"), samples.iter().map(|s| s.x_kink[i]).collect()));
    let x_jump = [0, 1].map(|i| extrapolate(format!("x_jump[{i}]"), samples.iter().map(|s| s.x_jump[i]).collect()));
    let v_jump = extrapolate("v_jump".into(), samples.iter().map(|s| s.v_jump).collect());
    let v_kink = extrapolate("v_kink".into(), samples.iter().map(|s| s.v_kink).collect());
    let profile = LimitProfile { x0, v0, x_jump, x_kink, v_jump, v_kink };
    Ok(LimitReport { samples, families, profile, extrapolations, verdict })
}
