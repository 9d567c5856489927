//! Mollifier profiles and strict delta nets `ρ_ε(x) = ρ(x/ε)/ε`.
//!
//! A strict delta net has shrinking support, unit mass in the limit and a
//! uniformly bounded L¹ norm. Nonnegativity is not required, so signed
//! profiles are admissible.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::gfn::{EpsSchedule, EpsilonNet};
use crate::jet::Jet;
use crate::numerics::extrapolation::power_law_fit;
use crate::numerics::quadrature::{integrate, QuadratureOptions};

/// Admissible profiles must integrate to one within this.
pub const PROFILE_MASS_TOL: f64 = 1e-12;
/// Masses of the scaled net must be within this of one.
pub const NET_MASS_TOL: f64 = 1e-10;

type DerivFn = dyn Fn(f64, usize) -> Vec<f64> + Send + Sync;

fn tight() -> QuadratureOptions {
    QuadratureOptions { abs_tol: 1e-14, rel_tol: 1e-14, max_intervals: 10_000 }
}

fn raw_bump_derivs(t: f64, order: usize) -> Vec<f64> {
    if t.abs() >= 1.0 {
        return vec![0.0; order + 1];
    }
    let x = Jet::variable(1, order, t, 0);
    let w = (&x * &x).scale(-1.0).add_scalar(1.0);
    let q = -w.recip();
    if q.value() < -745.0 {
        return vec![0.0; order + 1];
    }
    let e = q.exp();
    (0..=order).map(|k| e.partial(&[k]).expect("within order")).collect()
}

/// `∫_{-1}^{1} exp(-1/(1-t²)) dt`.
fn bump_normalization() -> f64 {
    static Z: OnceLock<f64> = OnceLock::new();
    *Z.get_or_init(|| {
        integrate(|t| raw_bump_derivs(t, 0)[0], -1.0, 1.0, &[0.0], &tight())
            .expect("bump normalization converges")
            .value
    })
}

/// `∫ t² ρ_bump(t) dt` for the normalized bump.
fn bump_second_moment() -> f64 {
    static M2: OnceLock<f64> = OnceLock::new();
    *M2.get_or_init(|| {
        let z = bump_normalization();
        integrate(|t| t * t * raw_bump_derivs(t, 0)[0] / z, -1.0, 1.0, &[0.0], &tight())
            .expect("bump moment converges")
            .value
    })
}

/// `1.25 (1-r)³ (1+3r)` as a polynomial in `s = 1 - r`, exact near the edge.
const SPLINE_IN_S: [f64; 5] = [0.0, 0.0, 0.0, 5.0, -3.75];

fn spline_derivs(t: f64, order: usize) -> Vec<f64> {
    let r = t.abs();
    let mut out = vec![0.0; order + 1];
    if r >= 1.0 {
        return out;
    }
    let s = 1.0 - r;
    // d/dt = -sign(t) d/ds
    let step: f64 = if t < 0.0 { 1.0 } else { -1.0 };
    let mut coeffs = SPLINE_IN_S.to_vec();
    for (k, o) in out.iter_mut().enumerate() {
        let v = coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c);
        *o = v * step.powi(k as i32);
        coeffs = coeffs.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect();
        if coeffs.is_empty() {
            break;
        }
    }
    out
}

/// The ρ generating a delta net, with analytic derivatives.
#[derive(Clone)]
pub struct MollifierProfile {
    label: String,
    radius: f64,
    max_order: usize,
    even: bool,
    mass: f64,
    l1_norm: f64,
    derivs: Arc<DerivFn>,
}

impl fmt::Debug for MollifierProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MollifierProfile")
            .field("label", &self.label)
            .field("radius", &self.radius)
            .field("mass", &self.mass)
            .field("l1_norm", &self.l1_norm)
            .finish()
    }
}

impl MollifierProfile {
    /// Builds a profile from `derivs(t, n) = [ρ(t), ρ'(t), …, ρ^(n)(t)]`,
    /// measuring mass and L¹ norm by quadrature.
    pub fn custom(
        label: impl Into<String>,
        radius: f64,
        max_order: usize,
        even: bool,
        derivs: impl Fn(f64, usize) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("profile radius {radius} must be positive")));
        }
        let derivs: Arc<DerivFn> = Arc::new(derivs);
        let bps = [-radius, 0.0, radius];
        let d = Arc::clone(&derivs);
        let mass = integrate(|t| d(t, 0)[0], -radius, radius, &bps, &tight())?.value;
        let l1_norm = integrate(|t| d(t, 0)[0].abs(), -radius, radius, &bps, &tight())?.value;
        Ok(Self { label: label.into(), radius, max_order, even, mass, l1_norm, derivs })
    }

    /// Normalized `exp(-1/(1-t²))` on `(-1, 1)`; C^∞ and even.
    pub fn bump() -> Self {
        let z = bump_normalization();
        Self::custom("bump", 1.0, 8, true, move |t, n| raw_bump_derivs(t, n).into_iter().map(|d| d / z).collect())
            .expect("bump profile")
    }

    /// Quartic `1.25 (1-|t|)³ (1+3|t|)`: even, C² only, third derivative one-sided.
    pub fn quartic_spline() -> Self {
        Self::custom("quartic-spline", 1.0, 3, true, spline_derivs).expect("spline profile")
    }

    /// Signed, asymmetric `(α + γt + βt²)·bump(t)` with unit mass.
    pub fn signed() -> Self {
        Self::signed_with(0.5, -10.5)
    }

    pub fn signed_with(linear: f64, quadratic: f64) -> Self {
        let z = bump_normalization();
        let alpha = 1.0 - quadratic * bump_second_moment();
        let label = format!("signed({alpha:.6}{linear:+}t{quadratic:+}t²)");
        Self::custom(label, 1.0, 8, linear == 0.0, move |t, n| {
            let b: Vec<f64> = raw_bump_derivs(t, n).into_iter().map(|d| d / z).collect();
            let bj = Jet::from_derivatives(&b);
            let x = Jet::variable(1, n, t, 0);
            let poly = (&x * &x).scale(quadratic) + x.scale(linear).add_scalar(alpha);
            let p = &poly * &bj;
            (0..=n).map(|k| p.partial(&[k]).expect("within order")).collect()
        })
        .expect("signed profile")
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "bump" => Ok(Self::bump()),
            "spline" | "quartic-spline" => Ok(Self::quartic_spline()),
            "signed" => Ok(Self::signed()),
            other => Err(Error::InvalidArgument(format!("unknown mollifier profile `{other}`"))),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn is_even(&self) -> bool {
        self.even
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    /// `[ρ(t), …, ρ^(n)(t)]`.
    pub fn derivatives(&self, t: f64, n: usize) -> Vec<f64> {
        (self.derivs)(t, n)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.derivatives(t, 0)[0]
    }

    /// `∫_{-radius}^{t} ρ`.
    pub fn primitive(&self, t: f64) -> f64 {
        let t = t.clamp(-self.radius, self.radius);
        let d = Arc::clone(&self.derivs);
        integrate(|s| d(s, 0)[0], -self.radius, t, &[0.0], &tight()).expect("profile primitive converges").value
    }
}

/// Net `ρ_ε(x) = ε^{-a} ρ(x/ε^s)`; strict delta nets have `a = s = 1`.
#[derive(Debug, Clone)]
pub struct StrictDeltaNet {
    profile: MollifierProfile,
    amplitude_exponent: f64,
    support_exponent: f64,
}

/// The strict delta net `ρ(x/ε)/ε` of a unit-mass profile.
pub fn model_delta(profile: MollifierProfile) -> Result<StrictDeltaNet> {
    if (profile.mass - 1.0).abs() > PROFILE_MASS_TOL {
        return Err(Error::ProfileMass { mass: profile.mass });
    }
    Ok(StrictDeltaNet { profile, amplitude_exponent: 1.0, support_exponent: 1.0 })
}

impl StrictDeltaNet {
    /// A candidate net with a non-standard scaling law, for strictness checks.
    pub fn with_scaling(profile: MollifierProfile, amplitude_exponent: f64, support_exponent: f64) -> Self {
        Self { profile, amplitude_exponent, support_exponent }
    }

    pub fn profile(&self) -> &MollifierProfile {
        &self.profile
    }

    pub fn max_order(&self) -> usize {
        self.profile.max_order
    }

    fn scale(&self, eps: f64) -> f64 {
        eps.powf(self.support_exponent)
    }

    /// Declared support radius of `ρ_ε`.
    pub fn support_radius(&self, eps: f64) -> f64 {
        self.profile.radius * self.scale(eps)
    }

    /// `[ρ_ε(x), ρ_ε'(x), …]` via `∂^n ρ_ε(x) = ε^{-a-ns} ρ^(n)(x/ε^s)`.
    pub fn derivatives(&self, eps: f64, x: f64, n: usize) -> Vec<f64> {
        let s = self.scale(eps);
        let amp = eps.powf(-self.amplitude_exponent);
        let mut factor = amp;
        self.profile
            .derivatives(x / s, n)
            .into_iter()
            .map(|d| {
                let v = d * factor;
                factor /= s;
                v
            })
            .collect()
    }

    pub fn value(&self, eps: f64, x: f64) -> f64 {
        self.derivatives(eps, x, 0)[0]
    }

    /// `ρ_ε ∘ arg` for a coordinate jet `arg`.
    pub fn compose(&self, eps: f64, arg: &Jet) -> Jet {
        arg.compose(&self.derivatives(eps, arg.value(), arg.order()))
    }

    /// The net as a function on ℝ.
    pub fn net(&self) -> EpsilonNet {
        self.embedded_along(1, 0)
    }

    /// `ρ_ε(x_axis)` as a net on ℝ^dim.
    pub fn embedded_along(&self, dim: usize, axis: usize) -> EpsilonNet {
        let me = self.clone();
        let label = format!("ρ_ε[{}](x{axis})", self.profile.label);
        EpsilonNet::new(dim, self.max_order(), label, move |eps, p, order| {
            let x = Jet::variable(dim, order, p[axis], axis);
            me.compose(eps, &x)
        })
    }

    /// Smoothed Heaviside `∫_{-∞}^x ρ_ε`.
    pub fn primitive_net(&self) -> EpsilonNet {
        let me = self.clone();
        let label = format!("∫ρ_ε[{}]", self.profile.label);
        EpsilonNet::new(1, self.max_order() + 1, label, move |eps, p, order| {
            let s = me.scale(eps);
            let base = s * eps.powf(-me.amplitude_exponent) * me.profile.primitive(p[0] / s);
            let mut derivs = vec![base];
            if order > 0 {
                derivs.extend(me.derivatives(eps, p[0], order - 1));
            }
            Jet::variable(1, order, p[0], 0).compose(&derivs)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrictnessCondition {
    /// (a) support shrinks to the origin.
    SupportShrinks,
    /// (b) masses tend to one.
    UnitMass,
    /// (c) L¹ norms are uniformly bounded.
    BoundedL1,
}

#[derive(Debug, Clone)]
pub struct StrictnessRow {
    pub eps: f64,
    pub declared_radius: f64,
    /// Outermost point where the sampled net is nonzero.
    pub measured_radius: f64,
    pub mass: f64,
    pub l1_norm: f64,
}

#[derive(Debug, Clone)]
pub struct StrictnessReport {
    pub rows: Vec<StrictnessRow>,
    pub l1_bound: f64,
    pub failures: Vec<StrictnessCondition>,
}

impl StrictnessReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn measured_radius(net: &StrictDeltaNet, eps: f64) -> f64 {
    let reach = 2.0 * net.support_radius(eps);
    let n = 4000;
    let xs: Vec<f64> = (0..=n).map(|i| -reach + 2.0 * reach * i as f64 / n as f64).collect();
    let nonzero = |x: f64| net.value(eps, x) != 0.0;
    let refine = |mut inside: f64, mut outside: f64| {
        for _ in 0..60 {
            let mid = 0.5 * (inside + outside);
            if nonzero(mid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    let Some(first) = xs.iter().position(|&x| nonzero(x)) else {
        return 0.0;
    };
    let last = xs.iter().rposition(|&x| nonzero(x)).expect("some nonzero sample");
    let left = if first > 0 { refine(xs[first], xs[first - 1]) } else { xs[0] };
    let right = if last < n { refine(xs[last], xs[last + 1]) } else { xs[n] };
    left.abs().max(right.abs())
}

/// Checks conditions (a)–(c) of a strict delta net over the schedule.
pub fn verify_strictness(net: &StrictDeltaNet, schedule: &EpsSchedule) -> Result<StrictnessReport> {
    let opts = tight();
    let mut rows = Vec::with_capacity(schedule.len());
    for &eps in schedule.values() {
        let r = net.support_radius(eps);
        let bps = [-r, 0.0, r];
        let mass = integrate(|x| net.value(eps, x), -r, r, &bps, &opts)?.value;
        let l1_norm = integrate(|x| net.value(eps, x).abs(), -r, r, &bps, &opts)?.value;
        rows.push(StrictnessRow { eps, declared_radius: r, measured_radius: measured_radius(net, eps), mass, l1_norm });
    }
    let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    let mut failures = Vec::new();

    let radii: Vec<f64> = rows.iter().map(|r| r.measured_radius).collect();
    let shrinking = match power_law_fit(&eps, &radii) {
        Some(fit) => fit.slope > 0.5 && radii.last() < radii.first(),
        None => radii.iter().all(|r| *r == 0.0),
    };
    if !shrinking {
        failures.push(StrictnessCondition::SupportShrinks);
    }

    let tail = rows.len().min(3);
    if rows[rows.len() - tail..].iter().any(|r| (r.mass - 1.0).abs() > NET_MASS_TOL) {
        failures.push(StrictnessCondition::UnitMass);
    }

    let l1: Vec<f64> = rows.iter().map(|r| r.l1_norm).collect();
    let l1_bound = l1.iter().copied().fold(0.0, f64::max);
    let bounded = l1_bound.is_finite() && power_law_fit(&eps, &l1).is_none_or(|fit| fit.slope >= -0.1);
    if !bounded {
        failures.push(StrictnessCondition::BoundedL1);
    }
    Ok(StrictnessReport { rows, l1_bound, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn builtin_profiles_have_unit_mass() {
        for p in [MollifierProfile::bump(), MollifierProfile::quartic_spline(), MollifierProfile::signed()] {
            assert_abs_diff_eq!(p.mass(), 1.0, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(bump_normalization(), 0.443_993_816_168_079_3, epsilon = 1e-14);
    }

    #[test]
    fn signed_profile_l1_exceeds_one() {
        let p = MollifierProfile::signed();
        assert!(p.l1_norm() > 1.75 && p.l1_norm() < 1.85, "{}", p.l1_norm());
        assert!(!p.is_even());
    }

    #[test]
    fn spline_is_c2_at_the_edges() {
        let p = MollifierProfile::quartic_spline();
        let inside = p.derivatives(1.0 - 1e-9, 3);
        assert!(inside[0].abs() < 1e-20 && inside[1].abs() < 1e-15 && inside[2].abs() < 1e-7);
        // third derivative jumps: C² only
        assert!(inside[3].abs() > 1.0);
        let left = p.derivatives(-0.3, 2);
        let right = p.derivatives(0.3, 2);
        assert_abs_diff_eq!(left[0], right[0]);
        assert_abs_diff_eq!(left[1], -right[1]);
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let p = MollifierProfile::bump();
        let h = 1e-5;
        for t in [-0.7, 0.0, 0.35, 0.9] {
            let d = p.derivatives(t, 3);
            let dd = p.derivatives(t + h, 2);
            let dm = p.derivatives(t - h, 2);
            for k in 0..3 {
                let fd = (dd[k] - dm[k]) / (2.0 * h);
                assert!((fd - d[k + 1]).abs() < 1e-6 * (1.0 + d[k + 1].abs()), "t={t} k={k}");
            }
        }
    }

    #[test]
    fn scaling_of_model_delta() {
        let p = MollifierProfile::bump();
        let rho0 = p.value(0.0);
        let d = model_delta(p).unwrap();
        assert_abs_diff_eq!(d.value(0.5, 0.0), 2.0 * rho0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.value(0.25, 0.0), 4.0 * rho0, epsilon = 1e-15);
        assert_eq!(d.value(0.25, 0.26), 0.0);
        assert_eq!(d.support_radius(0.25), 0.25);
        let net = d.net();
        assert_abs_diff_eq!(net.evaluate(0.5, &[0.0], &[0]).unwrap(), 2.0 * rho0, epsilon = 1e-15);
        assert_eq!(net.value(0.5, &[0.6]).unwrap(), 0.0);
    }

    #[test]
    fn unnormalized_profile_is_rejected() {
        let p = MollifierProfile::custom("half", 1.0, 2, true, |t, n| {
            let mut v = vec![0.0; n + 1];
            if t.abs() < 1.0 {
                v[0] = 0.25;
            }
            v
        })
        .unwrap();
        assert!(matches!(model_delta(p), Err(Error::ProfileMass { .. })));
    }

    #[test]
    fn strictness_of_builtins() {
        let sched = EpsSchedule::dyadic(3, 8).unwrap();
        for p in [MollifierProfile::bump(), MollifierProfile::quartic_spline(), MollifierProfile::signed()] {
            let r = verify_strictness(&model_delta(p).unwrap(), &sched).unwrap();
            assert!(r.passed(), "{:?}", r.failures);
            for row in &r.rows {
                assert!((row.mass - 1.0).abs() < NET_MASS_TOL);
                assert_eq!(row.declared_radius, row.eps);
                assert!(row.measured_radius <= row.declared_radius);
            }
        }
    }

    #[test]
    fn wrong_scaling_breaks_unit_mass() {
        let net = StrictDeltaNet::with_scaling(MollifierProfile::bump(), 2.0, 1.0);
        let r = verify_strictness(&net, &EpsSchedule::dyadic(3, 8).unwrap()).unwrap();
        assert!(r.failures.contains(&StrictnessCondition::UnitMass));
        assert!(!r.failures.contains(&StrictnessCondition::SupportShrinks));
        for row in &r.rows {
            assert_abs_diff_eq!(row.mass, 1.0 / row.eps, epsilon = 1e-8 / row.eps);
        }
    }

    #[test]
    fn fixed_support_breaks_shrinking() {
        let net = StrictDeltaNet::with_scaling(MollifierProfile::bump(), 0.0, 0.0);
        let r = verify_strictness(&net, &EpsSchedule::dyadic(3, 8).unwrap()).unwrap();
        assert_eq!(r.failures, vec![StrictnessCondition::SupportShrinks]);
    }

    #[test]
    fn primitive_is_smoothed_heaviside() {
        let d = model_delta(MollifierProfile::bump()).unwrap();
        let h = d.primitive_net();
        assert_abs_diff_eq!(h.value(0.1, &[-0.2]).unwrap(), 0.0);
        assert_abs_diff_eq!(h.value(0.1, &[0.2]).unwrap(), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(h.value(0.1, &[0.0]).unwrap(), 0.5, epsilon = 1e-13);
        assert_abs_diff_eq!(h.evaluate(0.1, &[0.03], &[1]).unwrap(), d.value(0.1, 0.03), epsilon = 1e-12);
    }
}
