//! Coordinates adapted to the geodesics crossing an impulsive pp-wave, and
//! the continuous metric they produce in the limit.

pub mod limit;
pub mod metric;
pub mod transform;
pub mod verify;

pub use limit::{association_breaking, macroscopic_limit, AssociationBreakingReport, ComponentShadow, MacroReport};
pub use metric::{
    pushforward_metric, rosen_shadow, transformed_metric_net, RosenForm, RosenPlan, RosenReport, RosenRow,
    RosenVerdict, TransformedMetric,
};
pub use transform::{build_transform, Domains, GeneralizedDiffeo, Transform, TransformOptions};
pub use verify::{default_plan, verify_diffeo, CausticWitness, DiffeoReport, DiffeoSample};
