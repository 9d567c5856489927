use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gfn::growth::MODERATE_MAX_RESIDUAL;
use crate::gfn::{CompactBox, EpsSchedule, EpsilonNet, Feature, SamplingPlan};
use crate::jet::Jet;
use crate::numerics::extrapolation::power_law_fit;

type MatrixFn = dyn Fn(f64, &[f64], usize) -> Result<Vec<Jet>> + Send + Sync;

/// Evidence that `inf_K |det g_ε| ≥ ε^m` on a box.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityCertificate {
    pub m: f64,
    pub region: CompactBox,
}

/// Symmetric `n × n` matrix of ε-nets, either covariant `g_ij` or
/// contravariant `g^ij`. All components come from one shared evaluator, so
/// `g_ij = g_ji` holds bit for bit.
#[derive(Clone)]
pub struct MetricNet {
    dim: usize,
    max_order: usize,
    label: String,
    signature: String,
    contravariant: bool,
    features: Vec<Feature>,
    certificate: Option<AdmissibilityCertificate>,
    eval: Arc<MatrixFn>,
}

impl fmt::Debug for MetricNet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricNet")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("max_order", &self.max_order)
            .field("contravariant", &self.contravariant)
            .field("certificate", &self.certificate)
            .finish()
    }
}

pub(crate) fn upper_len(n: usize) -> usize {
    n * (n + 1) / 2
}

fn mirror(n: usize, upper: Vec<Jet>) -> Vec<Jet> {
    let mut out: Vec<Option<Jet>> = vec![None; n * n];
    let mut it = upper.into_iter();
    for i in 0..n {
        for j in i..n {
            let v = it.next().expect("upper triangle length checked");
            if i != j {
                out[j * n + i] = Some(v.clone());
            }
            out[i * n + j] = Some(v);
        }
    }
    out.into_iter().map(|v| v.expect("filled")).collect()
}

impl MetricNet {
    /// From the upper triangle `g_00, g_01, …, g_0n, g_11, …` in row order.
    pub fn from_components(
        label: impl Into<String>,
        signature: impl Into<String>,
        upper: Vec<EpsilonNet>,
    ) -> Result<Self> {
        let n = (1..=16).find(|&n| upper_len(n) == upper.len()).ok_or_else(|| {
            Error::InvalidArgument(format!("{} components do not form an upper triangle", upper.len()))
        })?;
        if let Some(bad) = upper.iter().find(|c| c.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: bad.dim() });
        }
        let max_order = upper.iter().map(EpsilonNet::max_order).min().unwrap_or(0);
        let eval = move |eps: f64, p: &[f64], order: usize| -> Result<Vec<Jet>> {
            let tri = upper.iter().map(|c| c.jet(eps, p, order)).collect::<Result<Vec<_>>>()?;
            Ok(mirror(n, tri))
        };
        Ok(Self::from_parts(n, max_order, label.into(), signature.into(), Arc::new(eval)))
    }

    /// From a closure mapping coordinate jets to the upper triangle.
    pub fn from_jet_fn(
        dim: usize,
        max_order: usize,
        label: impl Into<String>,
        signature: impl Into<String>,
        f: impl Fn(f64, &[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    ) -> Self {
        let eval = move |eps: f64, p: &[f64], order: usize| -> Result<Vec<Jet>> {
            let tri = f(eps, &Jet::variables(p, order));
            if tri.len() != upper_len(dim) {
                return Err(Error::DimensionMismatch { expected: upper_len(dim), found: tri.len() });
            }
            Ok(mirror(dim, tri))
        };
        Self::from_parts(dim, max_order, label.into(), signature.into(), Arc::new(eval))
    }

    /// A constant symmetric matrix.
    pub fn constant(label: impl Into<String>, signature: impl Into<String>, matrix: &DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n || (matrix - matrix.transpose()).amax() > 0.0 {
            return Err(Error::InvalidArgument("constant metric must be a symmetric square matrix".into()));
        }
        let m = matrix.clone();
        Ok(Self::from_jet_fn(n, usize::MAX, label, signature, move |_, x| {
            let order = x[0].order();
            let mut out = Vec::with_capacity(upper_len(n));
            for i in 0..n {
                for j in i..n {
                    out.push(Jet::constant(n, order, m[(i, j)]));
                }
            }
            out
        }))
    }

    pub fn minkowski(dim: usize) -> Self {
        let mut m = DMatrix::identity(dim, dim);
        m[(0, 0)] = -1.0;
        Self::constant(format!("minkowski{dim}"), "Lorentzian (-,+,…,+)", &m).expect("diagonal metric")
    }

    fn from_parts(dim: usize, max_order: usize, label: String, signature: String, eval: Arc<MatrixFn>) -> Self {
        Self { dim, max_order, label, signature, contravariant: false, features: Vec::new(), certificate: None, eval }
    }

    pub fn with_features(mut self, features: Vec<Feature>) -> Self {
        self.features = features;
        self
    }

    /// Attaches a certificate without sampling; for determinants known in
    /// closed form.
    pub fn assume_certificate(mut self, certificate: AdmissibilityCertificate) -> Self {
        self.certificate = Some(certificate);
        self
    }

    /// Attaches the certificate of a positive admissibility check.
    pub fn certify(self, report: &AdmissibilityReport) -> Result<Self> {
        match &report.verdict {
            Admissibility::Admissible { m } => {
                let cert = AdmissibilityCertificate { m: *m, region: report.region.clone() };
                Ok(self.assume_certificate(cert))
            }
            other => Err(Error::NotAdmissible(format!("{}: {other:?}", self.label))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn signature(&self) -> &str {
        &self.signature
    }

    pub fn is_contravariant(&self) -> bool {
        self.contravariant
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn certificate(&self) -> Option<&AdmissibilityCertificate> {
        self.certificate.as_ref()
    }

    /// Row-major `n × n` jets of all components.
    pub fn jets(&self, eps: f64, point: &[f64], order: usize) -> Result<Vec<Jet>> {
        crate::gfn::net::check_eps(eps)?;
        crate::gfn::net::check_point(self.dim, point)?;
        crate::gfn::net::check_order(&self.label, order, self.max_order)?;
        (self.eval)(eps, point, order)
    }

    pub fn values(&self, eps: f64, point: &[f64]) -> Result<DMatrix<f64>> {
        let j = self.jets(eps, point, 0)?;
        Ok(DMatrix::from_fn(self.dim, self.dim, |i, k| j[i * self.dim + k].value()))
    }

    pub fn determinant(&self, eps: f64, point: &[f64]) -> Result<f64> {
        Ok(self.values(eps, point)?.determinant())
    }

    /// Component `(i, j)` as a standalone net.
    pub fn component(&self, i: usize, j: usize) -> EpsilonNet {
        let me = self.clone();
        let n = self.dim;
        let (a, b) = (i.min(j), i.max(j));
        let label = if self.contravariant {
            format!("{}^{a}{b}", self.label)
        } else {
            format!("{}_{a}{b}", self.label)
        };
        EpsilonNet::new(n, self.max_order, label, move |eps, p, order| match (me.eval)(eps, p, order) {
            Ok(mut jets) => jets.swap_remove(a * n + b),
            Err(_) => Jet::constant(n, order, f64::NAN),
        })
    }
}

/// Outcome of an admissibility check.
#[derive(Debug, Clone, PartialEq)]
pub enum Admissibility {
    /// `inf |det| ~ ε^m` with the fitted exponent `m`.
    Admissible { m: f64 },
    /// `det` vanishes exactly at `witness`.
    Inadmissible { eps: f64, witness: Vec<f64> },
    /// No power law fits the infima.
    Undetermined,
}

#[derive(Debug, Clone)]
pub struct AdmissibilitySample {
    pub eps: f64,
    pub inf_abs_det: f64,
    pub argmin: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    pub region: CompactBox,
    pub samples: Vec<AdmissibilitySample>,
    /// Smallest `m` with `inf |det| ≥ ε^m` at every sampled ε.
    pub bound_exponent: f64,
    pub verdict: Admissibility,
}

/// Fits `log inf_K |det g_ε|` against `log ε`.
pub fn check_admissibility(
    metric: &MetricNet,
    region: &CompactBox,
    schedule: &EpsSchedule,
    plan: &SamplingPlan,
) -> Result<AdmissibilityReport> {
    if region.dim() != metric.dim() {
        return Err(Error::DimensionMismatch { expected: metric.dim(), found: region.dim() });
    }
    let mut plan = plan.clone();
    plan.features.extend(metric.features().iter().cloned());
    let samples = schedule
        .values()
        .par_iter()
        .map(|&eps| {
            let mut best = AdmissibilitySample { eps, inf_abs_det: f64::INFINITY, argmin: Vec::new() };
            for p in plan.grid(region, eps) {
                let d = metric.determinant(eps, &p)?.abs();
                if !(d >= best.inf_abs_det) {
                    best.inf_abs_det = d;
                    best.argmin = p;
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;

    if let Some(s) = samples.iter().find(|s| s.inf_abs_det == 0.0 || s.inf_abs_det.is_nan()) {
        let verdict = Admissibility::Inadmissible { eps: s.eps, witness: s.argmin.clone() };
        return Ok(AdmissibilityReport { region: region.clone(), samples, bound_exponent: f64::INFINITY, verdict });
    }
    let bound_exponent = samples.iter().map(|s| s.inf_abs_det.ln() / s.eps.ln()).fold(0.0, f64::max);
    let eps: Vec<f64> = samples.iter().map(|s| s.eps).collect();
    let infs: Vec<f64> = samples.iter().map(|s| s.inf_abs_det).collect();
    let verdict = match power_law_fit(&eps, &infs) {
        Some(fit) if fit.residual < MODERATE_MAX_RESIDUAL && fit.slope.is_finite() => {
            let m = if fit.slope.abs() < 1e-9 { 0.0 } else { fit.slope };
            Admissibility::Admissible { m }
        }
        _ => Admissibility::Undetermined,
    };
    Ok(AdmissibilityReport { region: region.clone(), samples, bound_exponent, verdict })
}

fn zero_like(j: &Jet) -> Jet {
    Jet::zero(j.dim(), j.order())
}

/// `a · b` for row-major square matrices of jets.
pub(crate) fn mat_mul(n: usize, a: &[Jet], b: &[Jet]) -> Vec<Jet> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = zero_like(&a[0]);
            for k in 0..n {
                acc = acc + &a[i * n + k] * &b[k * n + j];
            }
            out.push(acc);
        }
    }
    out
}

/// Inverse of a matrix of jets: with `G = G₀ + N`, `N` the non-constant part,
/// `G⁻¹ = Σ_k (−G₀⁻¹N)^k G₀⁻¹`, which terminates because `N^k` vanishes
/// beyond the jet order.
pub(crate) fn invert_jets(n: usize, g: &[Jet]) -> Result<Vec<Jet>> {
    let dim = g[0].dim();
    let order = g[0].order();
    let g0 = DMatrix::from_fn(n, n, |i, j| g[i * n + j].value());
    let inv = g0.clone().try_inverse().ok_or_else(|| Error::NotAdmissible("singular metric matrix".into()))?;
    let inv_jets: Vec<Jet> = (0..n * n).map(|k| Jet::constant(dim, order, inv[(k / n, k % n)])).collect();
    if order == 0 {
        return Ok(inv_jets);
    }
    let nil: Vec<Jet> = g.iter().map(|j| j.add_scalar(-j.value())).collect();
    let a: Vec<Jet> = mat_mul(n, &inv_jets, &nil).into_iter().map(|j| -j).collect();
    let mut r = inv_jets.clone();
    for _ in 0..order {
        r = mat_mul(n, &a, &r).into_iter().zip(&inv_jets).map(|(x, b)| x + b).collect();
    }
    for i in 0..n {
        for j in i + 1..n {
            let s = (&r[i * n + j] + &r[j * n + i]).scale(0.5);
            r[j * n + i] = s.clone();
            r[i * n + j] = s;
        }
    }
    Ok(r)
}

/// Contravariant metric `g^ij`; refused without an admissibility certificate.
pub fn inverse_metric(metric: &MetricNet) -> Result<MetricNet> {
    if metric.certificate.is_none() {
        return Err(Error::NotAdmissible(format!("{}: no admissibility certificate", metric.label)));
    }
    if metric.contravariant {
        return Err(Error::InvalidArgument(format!("{} is already contravariant", metric.label)));
    }
    let src = metric.clone();
    let n = metric.dim;
    let eval = move |eps: f64, p: &[f64], order: usize| -> Result<Vec<Jet>> { invert_jets(n, &src.jets(eps, p, order)?) };
    let mut inv = MetricNet::from_parts(n, metric.max_order, metric.label.clone(), metric.signature.clone(), Arc::new(eval));
    inv.contravariant = true;
    inv.features = metric.features.clone();
    inv.certificate = metric.certificate.clone();
    Ok(inv)
}
