//! Generalized pseudo-Riemannian geometry on a chart: every quantity is the
//! classical coordinate formula applied to each representative `g_ε`.

pub mod connection;
pub mod curvature;
pub mod geodesic;
pub mod metric;

pub use connection::{christoffel, covariant_derivative, gamma_index, ChristoffelField};
pub use curvature::{ricci_scalar_einstein, riemann, riemann_index, CurvatureFields, CurvatureJets, IdentityResiduals};
pub use geodesic::{integrate_geodesic, GeodesicControls, GeodesicState, GeodesicTrajectory};
pub use metric::{
    check_admissibility, inverse_metric, Admissibility, AdmissibilityCertificate, AdmissibilityReport,
    AdmissibilitySample, MetricNet,
};
