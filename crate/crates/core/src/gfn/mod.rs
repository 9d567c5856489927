//! Generalized functions as ε-nets of smooth fields.
//!
//! A generalized function is represented by one of its representatives
//! `(u_ε)_ε`. Everything here is pointwise in ε: algebraic operations act on
//! each representative, and asymptotic properties (moderateness,
//! negligibility, association) are estimated from a finite ε-schedule.

pub mod algebra;
pub mod association;
pub mod domain;
pub mod growth;
pub mod net;
pub mod shadow;

pub use algebra::{net_algebra, NetExpr};
pub use association::{k_association_check, KAssociationReport};
pub use domain::{CompactBox, EpsSchedule, Feature, SamplingPlan};
pub use growth::{estimate_growth, point_value, GeneralizedNumber, GrowthEstimate, GrowthOutcome};
pub use net::{embed_smooth, evaluate_jet, EpsilonNet, SmoothField, UNBOUNDED_ORDER};
pub use shadow::{distributional_shadow, pairing, DensityShadow, ShadowOptions, ShadowReport, ShadowVerdict, TestDensity};
