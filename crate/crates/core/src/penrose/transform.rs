//! The ε-family of coordinate maps `(u, V, X, Y) ↦ (u, v, x, y)` built from
//! the geodesics that start at `u = −1` with transverse position `(X, Y)`
//! and `v = V`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{Matrix2, Matrix4, Vector2};

use crate::error::{Error, Result};
use crate::gfn::CompactBox;
use crate::ppwave::geodesic::{solve_geodesic, GeodesicFamily, SolveOptions, U_END, U_START};
use crate::ppwave::{LimitProfile, PpWaveMetric};

/// Working boxes: `omega` in new coordinates `(u, V, X, Y)`, `omega_tilde`
/// in old coordinates `(u, v, x, y)`, `omega_one` in new coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Domains {
    pub omega: CompactBox,
    pub omega_tilde: CompactBox,
    pub omega_one: CompactBox,
}

impl Default for Domains {
    fn default() -> Self {
        Self {
            omega: CompactBox::new(vec![-1.0, -1.0, -1.0, -1.0], vec![0.9, 1.0, 1.0, 1.0]).expect("valid box"),
            omega_tilde: CompactBox::new(vec![-1.0, -0.25, -0.5, -0.05], vec![0.9, 0.25, 0.5, 0.05]).expect("valid box"),
            omega_one: CompactBox::new(vec![-1.0, -0.1, -0.2, -0.04], vec![0.9, 0.1, 0.2, 0.04]).expect("valid box"),
        }
    }
}

impl Domains {
    pub fn new(omega: CompactBox, omega_tilde: CompactBox, omega_one: CompactBox) -> Result<Self> {
        for (name, b) in [("omega", &omega), ("omega_tilde", &omega_tilde), ("omega_one", &omega_one)] {
            if b.dim() != 4 {
                return Err(Error::InvalidArgument(format!("{name} must be 4-dimensional, got {}", b.dim())));
            }
            if b.lower()[0] < U_START || b.upper()[0] > U_END {
                return Err(Error::InvalidArgument(format!(
                    "{name}: u-range [{}, {}] leaves [{U_START}, {U_END}]",
                    b.lower()[0],
                    b.upper()[0]
                )));
            }
        }
        Ok(Self { omega, omega_tilde, omega_one })
    }
}

#[derive(Debug, Clone)]
pub struct TransformOptions {
    pub solve: SolveOptions,
    /// Newton stops once the transverse residual is below this.
    pub newton_tolerance: f64,
    pub newton_max_iterations: usize,
    /// Transverse Jacobian determinants below this are treated as a caustic.
    pub caustic_threshold: f64,
}

impl Default for TransformOptions {
    fn default() -> Self {
        Self {
            solve: SolveOptions::with_sensitivities(),
            newton_tolerance: 1e-11,
            newton_max_iterations: 40,
            caustic_threshold: 1e-10,
        }
    }
}

/// The coordinate map at one ε. Geodesic families are cached by initial
/// transverse position, so repeated evaluations along `u` or `V` are cheap.
#[derive(Debug)]
pub struct Transform {
    eps: f64,
    metric: PpWaveMetric,
    omega: CompactBox,
    options: TransformOptions,
    families: Mutex<HashMap<(u64, u64), Arc<GeodesicFamily>>>,
    inverses: Mutex<HashMap<[u64; 3], [f64; 2]>>,
}

const CACHE_LIMIT: usize = 20_000;

/// Sets up `t_ε` on `omega` (new coordinates).
pub fn build_transform(metric: &PpWaveMetric, eps: f64, omega: &CompactBox, options: &TransformOptions) -> Result<Transform> {
    crate::gfn::net::check_eps(eps)?;
    if omega.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: omega.dim() });
    }
    if omega.lower()[0] < U_START || omega.upper()[0] > U_END {
        return Err(Error::InvalidArgument(format!("u-range of Ω must lie in [{U_START}, {U_END}]")));
    }
    let mut options = options.clone();
    options.solve.sensitivities = true;
    options.solve.cross_validate = false;
    let t = Transform {
        eps,
        metric: metric.clone(),
        omega: omega.clone(),
        options,
        families: Mutex::new(HashMap::new()),
        inverses: Mutex::new(HashMap::new()),
    };
    // fail early if the geodesics through the box centre cannot be solved
    let c: Vec<f64> = (0..4).map(|i| 0.5 * (omega.lower()[i] + omega.upper()[i])).collect();
    t.family([c[2], c[3]])?;
    Ok(t)
}

fn insert_bounded<K: std::hash::Hash + Eq, V>(map: &mut HashMap<K, V>, k: K, v: V) {
    if map.len() >= CACHE_LIMIT {
        map.clear();
    }
    map.insert(k, v);
}

impl Transform {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn metric(&self) -> &PpWaveMetric {
        &self.metric
    }

    pub fn omega(&self) -> &CompactBox {
        &self.omega
    }

    /// Geodesic with initial transverse position `xy` and `v₀ = 0`.
    pub fn family(&self, xy: [f64; 2]) -> Result<Arc<GeodesicFamily>> {
        let key = (xy[0].to_bits(), xy[1].to_bits());
        if let Some(f) = self.families.lock().expect("cache lock").get(&key) {
            return Ok(f.clone());
        }
        let fam = Arc::new(solve_geodesic(&self.metric, self.eps, xy, 0.0, &self.options.solve)?);
        insert_bounded(&mut self.families.lock().expect("cache lock"), key, fam.clone());
        Ok(fam)
    }

    /// `t_ε(u, V, X, Y) = (u, V + v_ε(X, Y, u), x_ε(X, Y, u), y_ε(X, Y, u))`.
    pub fn forward(&self, q: [f64; 4]) -> Result<[f64; 4]> {
        let s = self.family([q[2], q[3]])?.state(q[0]);
        Ok([q[0], q[1] + s.v, s.x[0], s.x[1]])
    }

    /// `∂(u, v, x, y)/∂(u, V, X, Y)`.
    pub fn jacobian(&self, q: [f64; 4]) -> Result<Matrix4<f64>> {
        let fam = self.family([q[2], q[3]])?;
        let s = fam.state(q[0]);
        let d = fam.sensitivity(q[0]).expect("transform families carry sensitivities");
        Ok(Matrix4::new(
            1.0, 0.0, 0.0, 0.0, //
            s.vdot, 1.0, d.dv[0], d.dv[1], //
            s.xdot[0], 0.0, d.dx[0][0], d.dx[0][1], //
            s.xdot[1], 0.0, d.dx[1][0], d.dx[1][1],
        ))
    }

    /// Determinant of the Jacobian, which equals that of the transverse block.
    pub fn determinant(&self, q: [f64; 4]) -> Result<f64> {
        let d = self.family([q[2], q[3]])?.sensitivity(q[0]).expect("sensitivities");
        Ok(d.dx[0][0] * d.dx[1][1] - d.dx[0][1] * d.dx[1][0])
    }

    /// Newton seed from the small-ε map `x = X + ½∇f(X) u₊`.
    pub fn seed(&self, p: [f64; 4]) -> [f64; 2] {
        let up = p[0].max(0.0);
        let mut xy = [p[2], p[3]];
        if up == 0.0 {
            return xy;
        }
        for _ in 0..20 {
            let g = LimitProfile::first_order(&self.metric.profile, xy, 0.0).x_kink;
            let next = [p[2] - g[0] * up, p[3] - g[1] * up];
            if next.iter().any(|v| !v.is_finite() || v.abs() > 1e6) {
                return [p[2], p[3]];
            }
            xy = next;
        }
        xy
    }

    /// `t_ε^{-1}` by damped Newton on the shooting map `(X, Y) ↦ x_ε(X, Y, u)`.
    pub fn inverse(&self, p: [f64; 4]) -> Result<[f64; 4]> {
        let key = [p[0].to_bits(), p[2].to_bits(), p[3].to_bits()];
        let cached = self.inverses.lock().expect("cache lock").get(&key).copied();
        let xy = match cached {
            Some(xy) => xy,
            None => {
                let xy = self.shoot(p)?;
                insert_bounded(&mut self.inverses.lock().expect("cache lock"), key, xy);
                xy
            }
        };
        let s = self.family(xy)?.state(p[0]);
        Ok([p[0], p[1] - s.v, xy[0], xy[1]])
    }

    fn residual(&self, xy: [f64; 2], p: [f64; 4]) -> Result<(Vector2<f64>, Arc<GeodesicFamily>)> {
        let fam = self.family(xy)?;
        let s = fam.state(p[0]);
        Ok((Vector2::new(s.x[0] - p[2], s.x[1] - p[3]), fam))
    }

    fn shoot(&self, p: [f64; 4]) -> Result<[f64; 2]> {
        let u = p[0];
        let mut xy = self.seed(p);
        let (mut r, mut fam) = self.residual(xy, p)?;
        for _ in 0..self.options.newton_max_iterations {
            if r.amax() <= self.options.newton_tolerance {
                return Ok(xy);
            }
            let d = fam.sensitivity(u).expect("sensitivities");
            let jac = Matrix2::new(d.dx[0][0], d.dx[0][1], d.dx[1][0], d.dx[1][1]);
            let det = jac.determinant();
            if det.abs() < self.options.caustic_threshold {
                return Err(Error::Caustic { location: vec![u, p[1], p[2], p[3]], det });
            }
            let step = jac.try_inverse().ok_or(Error::Caustic { location: vec![u, p[1], p[2], p[3]], det })? * r;
            let mut lambda = 1.0;
            loop {
                let trial = [xy[0] - lambda * step[0], xy[1] - lambda * step[1]];
                let (rt, ft) = self.residual(trial, p)?;
                if rt.amax() < r.amax() || lambda < 1.0 / 64.0 {
                    xy = trial;
                    r = rt;
                    fam = ft;
                    break;
                }
                lambda *= 0.5;
            }
        }
        if r.amax() <= self.options.newton_tolerance {
            Ok(xy)
        } else {
            Err(Error::Newton { target: p.to_vec(), residual: r.amax() })
        }
    }
}

/// The generalized coordinate change: one [`Transform`] per ε, built on
/// demand and kept.
#[derive(Debug)]
pub struct GeneralizedDiffeo {
    metric: PpWaveMetric,
    domains: Domains,
    options: TransformOptions,
    transforms: Mutex<Vec<(u64, Arc<Transform>)>>,
}

impl GeneralizedDiffeo {
    pub fn new(metric: PpWaveMetric, domains: Domains, options: TransformOptions) -> Self {
        Self { metric, domains, options, transforms: Mutex::new(Vec::new()) }
    }

    pub fn metric(&self) -> &PpWaveMetric {
        &self.metric
    }

    pub fn domains(&self) -> &Domains {
        &self.domains
    }

    pub fn options(&self) -> &TransformOptions {
        &self.options
    }

    pub fn at(&self, eps: f64) -> Result<Arc<Transform>> {
        let key = eps.to_bits();
        if let Some((_, t)) = self.transforms.lock().expect("cache lock").iter().find(|(k, _)| *k == key) {
            return Ok(t.clone());
        }
        let t = Arc::new(build_transform(&self.metric, eps, &self.domains.omega, &self.options)?);
        let mut cache = self.transforms.lock().expect("cache lock");
        if cache.len() >= 64 {
            cache.remove(0);
        }
        cache.push((key, t.clone()));
        Ok(t)
    }
}
