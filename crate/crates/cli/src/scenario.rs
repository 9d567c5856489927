//! Scenario configuration: JSON input, defaults taken from the bundled
//! schema, and validation with field paths.

use std::path::Path;

use serde::Deserialize;
use serde_json::{Map, Value};
use thiserror::Error;

use colombeau::delta::{model_delta, MollifierProfile, StrictDeltaNet};
use colombeau::gfn::{CompactBox, EpsSchedule, TestDensity};
use colombeau::penrose::Domains;
use colombeau::ppwave::{ppwave_metric, PpWaveMetric, ProfileFunction};

/// The published scenario schema; every default lives here.
pub const SCHEMA: &str = include_str!("../scenario.schema.json");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: invalid JSON: {source}")]
    Syntax { path: String, source: serde_json::Error },
    #[error("{field}: {message}")]
    Field { field: String, message: String },
}

fn field(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Zero,
    Quadrupole,
    Axisymmetric,
    Cross,
    Linear,
    Polynomial,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub i: u32,
    pub j: u32,
    pub c: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub kind: ProfileKind,
    pub linear: [f64; 2],
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MollifierSpec {
    pub kind: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub epsilons: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Boxes {
    pub omega: BoxSpec,
    pub omega_tilde: BoxSpec,
    pub omega_one: BoxSpec,
    pub rosen_region: BoxSpec,
    pub curvature: BoxSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureSpec {
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeodesicSpec {
    pub initial_data: Vec<[f64; 3]>,
    pub u_samples: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviationSpec {
    pub base: [f64; 3],
    pub initial: [f64; 4],
    pub rate: [f64; 4],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformSpec {
    pub points: Vec<[f64; 4]>,
    pub geodesics: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub center: f64,
    pub radius: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShadowSpec {
    pub density: DensitySpec,
    pub ricci_points: Vec<[f64; 2]>,
    pub association_point: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    pub diffeo_cells: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub identity: f64,
    pub ricci: f64,
    pub association: f64,
    pub deviation_fd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
pub enum Stage {
    #[serde(rename = "verify-delta")]
    VerifyDelta,
    #[serde(rename = "curvature")]
    Curvature,
    #[serde(rename = "geodesic")]
    Geodesic,
    #[serde(rename = "deviation")]
    Deviation,
    #[serde(rename = "transform")]
    Transform,
    #[serde(rename = "shadow")]
    Shadow,
    #[serde(rename = "verify-diffeo")]
    VerifyDiffeo,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::VerifyDelta => "verify-delta",
            Stage::Curvature => "curvature",
            Stage::Geodesic => "geodesic",
            Stage::Deviation => "deviation",
            Stage::Transform => "transform",
            Stage::Shadow => "shadow",
            Stage::VerifyDiffeo => "verify-diffeo",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub profile: ProfileSpec,
    pub mollifier: MollifierSpec,
    pub schedule: ScheduleSpec,
    pub boxes: Boxes,
    pub curvature: CurvatureSpec,
    pub geodesic: GeodesicSpec,
    pub deviation: DeviationSpec,
    pub transform: TransformSpec,
    pub shadow: ShadowSpec,
    pub sampling: SamplingSpec,
    pub tolerances: Tolerances,
    pub outputs: Vec<Stage>,
}

/// A validated scenario with its resolved JSON (defaults filled in), which
/// is what the provenance hash covers.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub resolved: Value,
}

/// Fills every absent property that has a schema default, recursing into
/// objects.
fn apply_defaults(schema: &Value, value: &mut Value) {
    let (Some(props), Some(obj)) = (schema.get("properties").and_then(Value::as_object), value.as_object_mut()) else {
        return;
    };
    for (key, sub) in props {
        if !obj.contains_key(key) {
            if let Some(d) = sub.get("default") {
                obj.insert(key.clone(), d.clone());
            }
        }
        if let Some(child) = obj.get_mut(key) {
            apply_defaults(sub, child);
        }
    }
}

fn schema() -> Value {
    serde_json::from_str(SCHEMA).expect("bundled schema is valid JSON")
}

pub fn parse(text: &str, origin: &str) -> Result<LoadedScenario, ConfigError> {
    let mut value: Value =
        serde_json::from_str(text).map_err(|e| ConfigError::Syntax { path: origin.to_string(), source: e })?;
    if !value.is_object() {
        return Err(field("$", "scenario must be a JSON object"));
    }
    apply_defaults(&schema(), &mut value);
    let scenario: Scenario = serde_path_to_error::deserialize(value.clone()).map_err(|e| {
        let path = e.path().to_string();
        field(if path == "." { "$".to_string() } else { path }, e.into_inner().to_string())
    })?;
    scenario.validate()?;
    Ok(LoadedScenario { scenario, resolved: value })
}

pub fn load(path: &Path) -> Result<LoadedScenario, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.display().to_string(), source: e })?;
    parse(&text, &path.display().to_string())
}

fn check_box(name: &str, b: &BoxSpec, dim: usize) -> Result<CompactBox, ConfigError> {
    if b.lower.len() != dim {
        return Err(field(format!("{name}.lower"), format!("expected {dim} entries, found {}", b.lower.len())));
    }
    if b.upper.len() != dim {
        return Err(field(format!("{name}.upper"), format!("expected {dim} entries, found {}", b.upper.len())));
    }
    for (i, (l, u)) in b.lower.iter().zip(&b.upper).enumerate() {
        if !(l.is_finite() && u.is_finite() && l < u) {
            return Err(field(format!("{name}.upper[{i}]"), format!("must exceed lower[{i}] = {l}, found {u}")));
        }
    }
    CompactBox::new(b.lower.clone(), b.upper.clone()).map_err(|e| field(name, e.to_string()))
}

impl Scenario {
    fn validate(&self) -> Result<(), ConfigError> {
        if self.name.trim().is_empty() {
            return Err(field("name", "must be nonempty"));
        }
        let eps = &self.schedule.epsilons;
        if eps.is_empty() {
            return Err(field("schedule.epsilons", "must contain at least one value"));
        }
        for (i, e) in eps.iter().enumerate() {
            if !(*e > 0.0 && *e <= 1.0) {
                return Err(field(format!("schedule.epsilons[{i}]"), format!("{e} is outside (0, 1]")));
            }
            if i > 0 && *e >= eps[i - 1] {
                return Err(field(format!("schedule.epsilons[{i}]"), format!("{e} does not decrease from {}", eps[i - 1])));
            }
        }
        self.profile_function()?;
        MollifierProfile::by_name(&self.mollifier.kind).map_err(|e| field("mollifier.kind", e.to_string()))?;
        self.domains()?;
        check_box("boxes.rosen_region", &self.boxes.rosen_region, 3)?;
        check_box("boxes.curvature", &self.boxes.curvature, 3)?;
        if let Some(i) = self.transform.points.iter().position(|p| p[0] == 0.0) {
            return Err(field(format!("transform.points[{i}][0]"), "u = 0 lies on the shock plane"));
        }
        self.density()?;
        for (name, v) in [
            ("tolerances.identity", self.tolerances.identity),
            ("tolerances.ricci", self.tolerances.ricci),
            ("tolerances.association", self.tolerances.association),
            ("tolerances.deviation_fd", self.tolerances.deviation_fd),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(field(name, format!("{v} must be positive")));
            }
        }
        if self.curvature.samples == 0 {
            return Err(field("curvature.samples", "must be at least 1"));
        }
        if self.geodesic.initial_data.is_empty() {
            return Err(field("geodesic.initial_data", "must contain at least one entry"));
        }
        if self.geodesic.u_samples < 2 {
            return Err(field("geodesic.u_samples", "must be at least 2"));
        }
        if self.sampling.diffeo_cells == 0 {
            return Err(field("sampling.diffeo_cells", "must be at least 1"));
        }
        Ok(())
    }

    pub fn schedule(&self) -> EpsSchedule {
        EpsSchedule::new(self.schedule.epsilons.clone()).expect("validated schedule")
    }

    pub fn profile_function(&self) -> Result<ProfileFunction, ConfigError> {
        let p = &self.profile;
        Ok(match p.kind {
            ProfileKind::Zero => ProfileFunction::zero(),
            ProfileKind::Quadrupole => ProfileFunction::quadrupole(),
            ProfileKind::Axisymmetric => ProfileFunction::axisymmetric(),
            ProfileKind::Cross => ProfileFunction::cross(),
            ProfileKind::Linear => {
                ProfileFunction::linear(p.linear[0], p.linear[1]).map_err(|e| field("profile.linear", e.to_string()))?
            }
            ProfileKind::Polynomial => {
                let terms: Vec<(u32, u32, f64)> = p.terms.iter().map(|t| (t.i, t.j, t.c)).collect();
                ProfileFunction::polynomial("polynomial", &terms).map_err(|e| field("profile.terms", e.to_string()))?
            }
        })
    }

    pub fn delta(&self) -> StrictDeltaNet {
        model_delta(MollifierProfile::by_name(&self.mollifier.kind).expect("validated")).expect("built-in profiles have unit mass")
    }

    pub fn metric(&self) -> PpWaveMetric {
        ppwave_metric(self.profile_function().expect("validated"), self.delta())
    }

    pub fn domains(&self) -> Result<Domains, ConfigError> {
        let b = &self.boxes;
        let omega = check_box("boxes.omega", &b.omega, 4)?;
        let tilde = check_box("boxes.omega_tilde", &b.omega_tilde, 4)?;
        let one = check_box("boxes.omega_one", &b.omega_one, 4)?;
        Domains::new(omega, tilde, one).map_err(|e| field("boxes", e.to_string()))
    }

    pub fn rosen_region(&self) -> CompactBox {
        check_box("boxes.rosen_region", &self.boxes.rosen_region, 3).expect("validated")
    }

    pub fn curvature_box(&self) -> CompactBox {
        check_box("boxes.curvature", &self.boxes.curvature, 3).expect("validated")
    }

    pub fn density(&self) -> Result<TestDensity, ConfigError> {
        let d = &self.shadow.density;
        TestDensity::modulated_bump_1d(d.center, d.radius, d.a, d.b).map_err(|e| field("shadow.density", e.to_string()))
    }
}

/// Canonical text of the resolved scenario (keys sorted).
pub fn canonical(resolved: &Value) -> String {
    fn sort(v: &Value) -> Value {
        match v {
            Value::Object(m) => {
                let mut keys: Vec<&String> = m.keys().collect();
                keys.sort();
                Value::Object(keys.into_iter().map(|k| (k.clone(), sort(&m[k]))).collect::<Map<_, _>>())
            }
            Value::Array(a) => Value::Array(a.iter().map(sort).collect()),
            other => other.clone(),
        }
    }
    serde_json::to_string(&sort(resolved)).expect("serializable")
}
