//! The impulsive pp-wave `ds² = f(x,y) D(u) du² − du dv + dx² + dy²` with
//! `D` represented by a strict delta net.

pub mod deviation;
pub mod geodesic;
pub mod metric;
pub mod profile;
pub mod ricci;

pub use deviation::{geodesic_deviation, JacobiTrajectory};
pub use geodesic::{
    geodesic_limit, solve_geodesic, CrossCheck, GeodesicFamily, GeodesicPoint, LimitProfile, LimitReport,
    LimitVerdict, PicardOptions, Sensitivity, SolveOptions, SolverPath,
};
pub use metric::{ppwave_metric, PpWaveMetric};
pub use profile::ProfileFunction;
pub use ricci::{ricci_shadow_check, RicciShadowEntry, RicciShadowOptions, RicciShadowReport, RICCI_UU_COEFFICIENT};
