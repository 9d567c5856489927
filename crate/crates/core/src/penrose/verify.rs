//! Sampled checks that an ε-family of coordinate maps is a generalized
//! diffeomorphism on the working boxes.

use rayon::prelude::*;

use crate::error::Result;
use crate::gfn::{CompactBox, EpsSchedule, Feature, SamplingPlan};
use crate::numerics::extrapolation::power_law_fit;

use super::transform::{GeneralizedDiffeo, Transform};

/// Largest allowed composition error `‖t∘t⁻¹ − id‖`, `‖t⁻¹∘t − id‖`.
pub const COMPOSITION_TOL: f64 = 1e-6;
/// Fitted exponent of `inf |det Dt_ε|` against ε above which the
/// determinant is judged to degenerate as ε → 0.
pub const DET_DECAY_MAX_SLOPE: f64 = 0.25;
/// Smallest accepted `inf |det Dt_ε|` at a single ε.
pub const DET_FLOOR: f64 = 1e-8;
/// Slack for box membership of mapped sample points.
pub const INCLUSION_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DiffeoSample {
    pub eps: f64,
    pub min_abs_det: f64,
    pub det_argmin: [f64; 4],
    /// Every sampled determinant has the same sign.
    pub det_sign_consistent: bool,
    /// Points of `Ω̃` whose preimage is not in `Ω` (or could not be found).
    pub tilde_inclusion_failures: Vec<[f64; 4]>,
    /// Points of `Ω₁` whose image is not in `Ω̃`.
    pub one_inclusion_failures: Vec<[f64; 4]>,
    /// `sup |t(t⁻¹(p)) − p|` over `Ω̃` samples.
    pub forward_composition: f64,
    /// `sup |t⁻¹(t(q)) − q|` over `Ω₁` samples.
    pub inverse_composition: f64,
    pub errors: Vec<String>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausticWitness {
    pub eps: f64,
    pub point: [f64; 4],
    pub det: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffeoReport {
    pub samples: Vec<DiffeoSample>,
    /// Fitted exponent of `inf |det|` against ε.
    pub det_exponent: Option<f64>,
    /// Largest ε such that it and every smaller scheduled ε pass.
    pub eta: Option<f64>,
    /// Smallest-|det| sample at the smallest ε when the check fails.
    pub caustic_witness: Option<CausticWitness>,
    pub passed: bool,
}

/// Default sampling: 3 cells per axis, `u` refined near the shock plane.
pub fn default_plan() -> SamplingPlan {
    SamplingPlan { base_cells: 3, refine_spacing: 1.0, refine_halfwidth: 2.0, ..SamplingPlan::default() }
        .with_features(vec![Feature::Hyperplane { axis: 0, center: 0.0 }])
}

fn grid(plan: &SamplingPlan, bx: &CompactBox, eps: f64) -> Vec<[f64; 4]> {
    plan.grid(bx, eps).into_iter().map(|p| [p[0], p[1], p[2], p[3]]).collect()
}

fn dist(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn check_one(diffeo: &GeneralizedDiffeo, t: &Transform, plan: &SamplingPlan) -> DiffeoSample {
    let eps = t.eps();
    let d = diffeo.domains();
    let mut errors = Vec::new();

    let dets: Vec<Result<([f64; 4], f64)>> =
        grid(plan, &d.omega, eps).par_iter().map(|&q| t.determinant(q).map(|v| (q, v))).collect();
    let mut min_abs_det = f64::INFINITY;
    let mut det_argmin = [f64::NAN; 4];
    let (mut pos, mut neg) = (false, false);
    for r in dets {
        match r {
            Ok((q, v)) => {
                pos |= v > 0.0;
                neg |= v <= 0.0;
                if v.abs() < min_abs_det {
                    min_abs_det = v.abs();
                    det_argmin = q;
                }
            }
            Err(e) => errors.push(format!("Jacobian: {e}")),
        }
    }

    let tilde: Vec<([f64; 4], Result<([f64; 4], [f64; 4])>)> = grid(plan, &d.omega_tilde, eps)
        .par_iter()
        .map(|&p| {
            let r = t.inverse(p).and_then(|q| t.forward(q).map(|back| (q, back)));
            (p, r)
        })
        .collect();
    let mut tilde_inclusion_failures = Vec::new();
    let mut forward_composition: f64 = 0.0;
    for (p, r) in tilde {
        match r {
            Ok((q, back)) => {
                if !d.omega.contains_with_slack(&q, INCLUSION_SLACK) {
                    tilde_inclusion_failures.push(p);
                }
                forward_composition = forward_composition.max(dist(&back, &p));
            }
            Err(_) => tilde_inclusion_failures.push(p),
        }
    }

    let one: Vec<([f64; 4], Result<([f64; 4], [f64; 4])>)> = grid(plan, &d.omega_one, eps)
        .par_iter()
        .map(|&q| {
            let r = t.forward(q).and_then(|p| t.inverse(p).map(|back| (p, back)));
            (q, r)
        })
        .collect();
    let mut one_inclusion_failures = Vec::new();
    let mut inverse_composition: f64 = 0.0;
    for (q, r) in one {
        match r {
            Ok((p, back)) => {
                if !d.omega_tilde.contains_with_slack(&p, INCLUSION_SLACK) {
                    one_inclusion_failures.push(q);
                }
                inverse_composition = inverse_composition.max(dist(&back, &q));
            }
            Err(e) => {
                one_inclusion_failures.push(q);
                errors.push(format!("inverse of t({q:?}): {e}"));
            }
        }
    }

    let det_sign_consistent = !(pos && neg);
    let passed = errors.is_empty()
        && det_sign_consistent
        && min_abs_det > DET_FLOOR
        && tilde_inclusion_failures.is_empty()
        && one_inclusion_failures.is_empty()
        && forward_composition < COMPOSITION_TOL
        && inverse_composition < COMPOSITION_TOL;
    DiffeoSample {
        eps,
        min_abs_det,
        det_argmin,
        det_sign_consistent,
        tilde_inclusion_failures,
        one_inclusion_failures,
        forward_composition,
        inverse_composition,
        errors,
        passed,
    }
}

/// Runs every check at every scheduled ε.
///
/// The family passes when some tail of the schedule passes every per-ε
/// check and `inf |det|` does not decay like a positive power of ε.
pub fn verify_diffeo(diffeo: &GeneralizedDiffeo, schedule: &EpsSchedule, plan: &SamplingPlan) -> Result<DiffeoReport> {
    let mut samples = Vec::with_capacity(schedule.len());
    for &eps in schedule.values() {
        let t = diffeo.at(eps)?;
        samples.push(check_one(diffeo, &t, plan));
    }
    let (eps, dets): (Vec<f64>, Vec<f64>) = samples.iter().map(|s| (s.eps, s.min_abs_det)).unzip();
    let det_exponent = power_law_fit(&eps, &dets).map(|f| f.slope);
    let eta = samples.iter().rev().take_while(|s| s.passed).last().map(|s| s.eps);
    let bounded = det_exponent.is_none_or(|m| m <= DET_DECAY_MAX_SLOPE);
    let passed = eta.is_some() && bounded;
    let caustic_witness = if passed {
        None
    } else {
        samples.last().map(|s| CausticWitness { eps: s.eps, point: s.det_argmin, det: s.min_abs_det })
    };
    Ok(DiffeoReport { samples, det_exponent, eta, caustic_witness, passed })
}
