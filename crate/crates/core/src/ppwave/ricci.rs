//! Weak limits of the pp-wave Ricci tensor along `u` at fixed transverse
//! points.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::geometry::{ricci_scalar_einstein, riemann};
use crate::gfn::{distributional_shadow, DensityShadow, EpsSchedule, EpsilonNet, Feature, ShadowOptions, TestDensity};
use crate::jet::Jet;

use super::metric::PpWaveMetric;

/// `R_uu = RICCI_UU_COEFFICIENT · Δf · ρ_ε(u)` for the regularized pp-wave;
/// every other Ricci component vanishes.
pub const RICCI_UU_COEFFICIENT: f64 = -0.5;

#[derive(Debug, Clone)]
pub struct RicciShadowOptions {
    /// Largest allowed `|limit − expected|`.
    pub tolerance: f64,
    pub shadow: ShadowOptions,
}

impl Default for RicciShadowOptions {
    fn default() -> Self {
        Self { tolerance: 1e-3, shadow: ShadowOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct RicciShadowEntry {
    pub point: [f64; 2],
    /// `(a, b)` with `a ≤ b` in `(u, v, x, y)` order.
    pub component: (usize, usize),
    pub shadow: DensityShadow,
    pub expected: f64,
    /// Pairing at the smallest ε.
    pub last_pairing: f64,
}

impl RicciShadowEntry {
    pub fn deviation(&self) -> f64 {
        (self.shadow.limit() - self.expected).abs()
    }
}

#[derive(Debug, Clone)]
pub struct RicciShadowReport {
    pub entries: Vec<RicciShadowEntry>,
    pub max_deviation: f64,
    pub passed: bool,
}

type RicciCache = Arc<Mutex<HashMap<(u64, u64), Arc<Vec<f64>>>>>;

/// Pairs every Ricci component `R_ab(·, 0, x, y)` with each `u`-density
/// over the schedule and compares the limits with the weak pp-wave Ricci
/// tensor `c Δf(x, y) φ(0) du²`.
pub fn ricci_shadow_check(
    metric: &PpWaveMetric,
    densities: &[TestDensity],
    points: &[[f64; 2]],
    schedule: &EpsSchedule,
    opts: &RicciShadowOptions,
) -> Result<RicciShadowReport> {
    if let Some(d) = densities.iter().find(|d| d.dim() != 1) {
        return Err(Error::DimensionMismatch { expected: 1, found: d.dim() });
    }
    let curv = ricci_scalar_einstein(&riemann(&metric.metric)?, &metric.metric)?;
    let mut shadow_opts = opts.shadow.clone();
    shadow_opts.features.push(Feature::Hyperplane { axis: 0, center: 0.0 });
    shadow_opts.support_radius = metric.delta.profile().radius();

    let mut entries = Vec::new();
    for &point in points {
        let cache: RicciCache = Arc::new(Mutex::new(HashMap::new()));
        let lap = metric.profile.laplacian(point[0], point[1]);
        for a in 0..4 {
            for b in a..4 {
                let (curv, cache) = (curv.clone(), cache.clone());
                let label = format!("Ric_{a}{b}(u; x={}, y={})", point[0], point[1]);
                let net = EpsilonNet::new(1, 0, label, move |eps, u, order| {
                    let key = (eps.to_bits(), u[0].to_bits());
                    let cached = cache.lock().expect("cache lock").get(&key).cloned();
                    let ricci = match cached {
                        Some(r) => r,
                        None => {
                            let r = match curv.jets(eps, &[u[0], 0.0, point[0], point[1]], 0) {
                                Ok(j) => Arc::new(j.ricci.iter().map(Jet::value).collect::<Vec<f64>>()),
                                Err(_) => Arc::new(vec![f64::NAN; 16]),
                            };
                            cache.lock().expect("cache lock").insert(key, r.clone());
                            r
                        }
                    };
                    Jet::constant(1, order, ricci[4 * a + b])
                });
                let report = distributional_shadow(&net, densities, schedule, &shadow_opts)?;
                for (density, shadow) in densities.iter().zip(report.densities) {
                    let expected =
                        if (a, b) == (0, 0) { RICCI_UU_COEFFICIENT * lap * density.eval(&[0.0]) } else { 0.0 };
                    let last_pairing = shadow.pairings.last().map_or(f64::NAN, |p| p.1);
                    entries.push(RicciShadowEntry { point, component: (a, b), shadow, expected, last_pairing });
                }
            }
        }
    }
    let max_deviation = entries.iter().map(RicciShadowEntry::deviation).fold(0.0, f64::max);
    let passed = entries.iter().all(|e| e.shadow.failures.is_empty() && e.deviation() < opts.tolerance);
    Ok(RicciShadowReport { entries, max_deviation, passed })
}
