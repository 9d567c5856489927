use rayon::prelude::*;

use super::domain::{CompactBox, EpsSchedule, SamplingPlan};
use super::growth::{GrowthEstimate, GrowthOutcome};
use super::net::{EpsilonNet, SmoothField};
use crate::error::{Error, Result};
use crate::jet::{multi_indices, Jet};

/// Sup-norms below this are treated as exact zeros.
pub const NUMERICAL_ZERO: f64 = 1e-12;
/// Minimum fitted decay exponent for "sup → 0".
pub const DECAY_SLOPE: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct DerivativeDecay {
    pub alpha: Vec<usize>,
    pub growth: GrowthEstimate,
    pub decays: bool,
}

#[derive(Debug, Clone)]
pub struct KAssociationReport {
    pub k: usize,
    pub entries: Vec<DerivativeDecay>,
    /// `verdicts[j]` is true iff `u_ε ≈_j f`.
    pub verdicts: Vec<bool>,
}

impl KAssociationReport {
    pub fn associated(&self) -> bool {
        self.verdicts[self.k]
    }
}

fn decays(g: &GrowthEstimate) -> bool {
    let last = g.samples.last().map_or(0.0, |s| s.1);
    if last <= NUMERICAL_ZERO {
        return true;
    }
    match g.outcome {
        GrowthOutcome::IdenticallyZero | GrowthOutcome::EventuallyZero { .. } => true,
        GrowthOutcome::Fitted { slope, .. } => slope >= DECAY_SLOPE && g.samples[0].1 > last,
        GrowthOutcome::Undetermined => false,
    }
}

/// Checks `u_ε ≈_k f`: uniform convergence on the box of every derivative of
/// total order `≤ k` of `u_ε − f` (`f = 0` when `target` is `None`).
pub fn k_association_check(
    net: &EpsilonNet,
    target: Option<&SmoothField>,
    k: usize,
    bx: &CompactBox,
    schedule: &EpsSchedule,
    plan: &SamplingPlan,
) -> Result<KAssociationReport> {
    let dim = net.dim();
    if bx.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: bx.dim() });
    }
    if let Some(t) = target {
        if t.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: t.dim() });
        }
    }
    let alphas = multi_indices(dim, k);
    // sups[e][a]: sup over the grid of |∂^α (u_ε − f)| at schedule entry e.
    let sups: Vec<Vec<f64>> = schedule
        .values()
        .par_iter()
        .map(|&eps| {
            let mut sup = vec![0.0f64; alphas.len()];
            for p in plan.grid(bx, eps) {
                let mut j = net.jet(eps, &p, k)?;
                if let Some(t) = target {
                    j = &j - &t.jet(&p, k)?;
                }
                for (s, a) in sup.iter_mut().zip(&alphas) {
                    *s = s.max(partial_abs(&j, a));
                }
            }
            Ok(sup)
        })
        .collect::<Result<_>>()?;

    let entries: Vec<DerivativeDecay> = alphas
        .iter()
        .enumerate()
        .map(|(ai, alpha)| {
            let samples = schedule.values().iter().zip(&sups).map(|(e, s)| (*e, s[ai])).collect();
            let growth = GrowthEstimate::from_samples(samples);
            let decays = decays(&growth);
            DerivativeDecay { alpha: alpha.clone(), growth, decays }
        })
        .collect();
    let mut verdicts = Vec::with_capacity(k + 1);
    let mut ok = true;
    for order in 0..=k {
        ok = ok && entries.iter().filter(|e| e.alpha.iter().sum::<usize>() == order).all(|e| e.decays);
        verdicts.push(ok);
    }
    Ok(KAssociationReport { k, entries, verdicts })
}

fn partial_abs(j: &Jet, alpha: &[usize]) -> f64 {
    j.partial(alpha).map_or(0.0, f64::abs)
}
