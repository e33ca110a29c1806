//! Run configuration: a TOML document with `[scenario]`, `[grid]`, `[engine]`
//! and `[output]` tables.
//!
//! ```toml
//! [scenario]
//! name = "theorem1"      # a preset, or "custom"
//! k = 2                  # any scenario key overrides the preset
//!
//! [grid]
//! num_points = 256
//!
//! [engine]
//! cfl = 0.2
//! normalization = "normalized_pde"
//!
//! [output]
//! dir = "out"
//! formats = ["csv", "json"]
//! ```
//!
//! Unknown keys are rejected. [`RunConfig::emit`] writes every resolved value
//! explicitly and parses back to an equal configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::Normalization;
use crate::scenarios::{self, ExpectedOutcome, InitialKind, PhiKind, ScenarioDef, ScenarioSpec};

pub const DEFAULT_NUM_POINTS: usize = 256;
pub const DEFAULT_CFL: f64 = 0.2;
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-6;
pub const DEFAULT_SAMPLE_STRIDE: usize = 100;
pub const DEFAULT_CHECK_STRIDE: usize = 10;
pub const DEFAULT_BREAKDOWN_ZETA_TOL: f64 = -1e-8;
pub const DEFAULT_OUTPUT_DIR: &str = "out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub cfl: f64,
    pub t_max: f64,
    pub residual_tol: f64,
    pub normalization: Normalization,
    pub projection: bool,
    pub sample_stride: usize,
    pub check_stride: usize,
    pub breakdown_zeta_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<OutputFormat>,
}

/// Fully resolved and validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioDef,
    pub num_points: usize,
    pub engine: EngineConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: ScenarioField,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    engine: RawEngine,
    #[serde(default)]
    output: RawOutput,
}

/// `scenario = "name"` is shorthand for a `[scenario]` table holding only the name.
#[derive(Debug, Serialize)]
#[serde(untagged)]
enum ScenarioField {
    Name(String),
    Table(RawScenario),
}

impl<'de> Deserialize<'de> for ScenarioField {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct Visitor;
        impl<'de> serde::de::Visitor<'de> for Visitor {
            type Value = ScenarioField;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a scenario name or a [scenario] table")
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                Ok(ScenarioField::Name(v.to_string()))
            }

            fn visit_map<A: serde::de::MapAccess<'de>>(self, map: A) -> std::result::Result<Self::Value, A::Error> {
                RawScenario::deserialize(serde::de::value::MapAccessDeserializer::new(map)).map(ScenarioField::Table)
            }
        }
        d.deserialize_any(Visitor)
    }
}

impl Default for ScenarioField {
    fn default() -> Self {
        ScenarioField::Table(RawScenario::default())
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phi: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phi_eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phi_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phi_delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    expected: Option<ExpectedOutcome>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    num_points: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEngine {
    cfl: Option<f64>,
    t_max: Option<f64>,
    residual_tol: Option<f64>,
    normalization: Option<Normalization>,
    projection: Option<bool>,
    sample_stride: Option<usize>,
    check_stride: Option<usize>,
    breakdown_zeta_tol: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
    formats: Option<Vec<OutputFormat>>,
}

fn semantic(msg: impl Into<String>) -> Error {
    Error::Semantic(msg.into())
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Syntax {
        line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
        message: e.message().to_string(),
    })?;
    let config = resolve(raw)?;
    config.validate()?;
    Ok(config)
}

fn resolve(raw: RawConfig) -> Result<RunConfig> {
    let s = match raw.scenario {
        ScenarioField::Name(name) => RawScenario {
            name,
            ..Default::default()
        },
        ScenarioField::Table(t) => t,
    };
    let base = if s.name == "custom" {
        None
    } else {
        Some(scenarios::preset(&s.name).ok_or_else(|| {
            semantic(format!(
                "unknown scenario {:?}; expected one of {} or \"custom\"",
                s.name,
                scenarios::SCENARIO_NAMES.join(", ")
            ))
        })?)
    };
    let required = |what: &str| semantic(format!("custom scenarios must set scenario.{what}"));
    let n = s.n.or(base.as_ref().map(|b| b.n)).ok_or_else(|| required("n"))?;
    let k = s.k.or(base.as_ref().map(|b| b.k)).ok_or_else(|| required("k"))?;
    let p = s.p.or(base.as_ref().map(|b| b.p)).ok_or_else(|| required("p"))?;
    let default_m = p + k as f64 - 1.0;

    let base_phi = base.as_ref().map(|b| b.phi).unwrap_or(PhiKind::Constant);
    let phi_name = s.phi.clone().unwrap_or_else(|| base_phi.name().to_string());
    let reject = |key: &str, value: Option<f64>| -> Result<()> {
        match value {
            Some(_) => Err(semantic(format!("scenario.{key} does not apply to phi = {phi_name:?}"))),
            None => Ok(()),
        }
    };
    let phi = match phi_name.as_str() {
        "constant" => {
            reject("phi_eps", s.phi_eps)?;
            reject("phi_m", s.phi_m)?;
            reject("phi_delta", s.phi_delta)?;
            PhiKind::Constant
        }
        "sin2_power" => {
            reject("phi_delta", s.phi_delta)?;
            let eps = match (s.phi_eps, base_phi) {
                (Some(e), _) => e,
                (None, PhiKind::Sin2Power { eps, .. }) => eps,
                (None, _) => 0.2,
            };
            PhiKind::Sin2Power {
                eps,
                m: s.phi_m.unwrap_or(default_m),
            }
        }
        "tilted" => {
            reject("phi_eps", s.phi_eps)?;
            reject("phi_m", s.phi_m)?;
            let delta = match (s.phi_delta, base_phi) {
                (Some(d), _) => d,
                (None, PhiKind::Tilted { delta }) => delta,
                (None, _) => 0.3,
            };
            PhiKind::Tilted { delta }
        }
        "counterexample" => {
            reject("phi_eps", s.phi_eps)?;
            reject("phi_delta", s.phi_delta)?;
            PhiKind::Counterexample {
                m: s.phi_m.unwrap_or(default_m),
            }
        }
        other => {
            return Err(semantic(format!(
                "unknown phi kind {other:?}; expected constant, sin2_power, tilted or counterexample"
            )))
        }
    };

    let base_initial = base
        .as_ref()
        .map(|b| b.initial)
        .unwrap_or(InitialKind::Sphere { radius: 1.0 });
    let initial_name = s.initial.clone().unwrap_or_else(|| base_initial.name().to_string());
    let reject_init = |key: &str, value: Option<f64>| -> Result<()> {
        match value {
            Some(_) => Err(semantic(format!(
                "scenario.{key} does not apply to initial = {initial_name:?}"
            ))),
            None => Ok(()),
        }
    };
    let initial = match initial_name.as_str() {
        "sphere" => {
            reject_init("initial_a", s.initial_a)?;
            reject_init("initial_c", s.initial_c)?;
            let radius = match (s.initial_radius, base_initial) {
                (Some(r), _) => r,
                (None, InitialKind::Sphere { radius }) => radius,
                (None, _) => 1.0,
            };
            InitialKind::Sphere { radius }
        }
        "spheroid" => {
            reject_init("initial_radius", s.initial_radius)?;
            let (a0, c0) = match base_initial {
                InitialKind::Spheroid { a, c } => (a, c),
                _ => (1.0, 1.3),
            };
            InitialKind::Spheroid {
                a: s.initial_a.unwrap_or(a0),
                c: s.initial_c.unwrap_or(c0),
            }
        }
        "counterexample" => {
            reject_init("initial_radius", s.initial_radius)?;
            reject_init("initial_a", s.initial_a)?;
            reject_init("initial_c", s.initial_c)?;
            InitialKind::Counterexample
        }
        other => {
            return Err(semantic(format!(
                "unknown initial kind {other:?}; expected sphere, spheroid or counterexample"
            )))
        }
    };

    let e = raw.engine;
    let normalization = e
        .normalization
        .or(base.as_ref().map(|b| b.normalization))
        .unwrap_or(Normalization::NormalizedPde);
    let t_max = e.t_max.or(base.as_ref().map(|b| b.t_max)).unwrap_or(50.0);
    let engine = EngineConfig {
        cfl: e.cfl.unwrap_or(DEFAULT_CFL),
        t_max,
        residual_tol: e.residual_tol.unwrap_or(DEFAULT_RESIDUAL_TOL),
        normalization,
        projection: e.projection.unwrap_or(false),
        sample_stride: e.sample_stride.unwrap_or(DEFAULT_SAMPLE_STRIDE),
        check_stride: e.check_stride.unwrap_or(DEFAULT_CHECK_STRIDE),
        breakdown_zeta_tol: e.breakdown_zeta_tol.unwrap_or(DEFAULT_BREAKDOWN_ZETA_TOL),
    };

    let scenario = ScenarioDef {
        name: s.name.clone(),
        n,
        k,
        p,
        phi,
        initial,
        normalization,
        t_max,
        expected: s
            .expected
            .or(base.as_ref().map(|b| b.expected))
            .unwrap_or(ExpectedOutcome::Converge),
        notes: base
            .map(|b| b.notes)
            .unwrap_or_else(|| "custom scenario".to_string()),
    };

    let mut formats = raw
        .output
        .formats
        .unwrap_or_else(|| vec![OutputFormat::Csv, OutputFormat::Json]);
    formats.dedup();
    Ok(RunConfig {
        scenario,
        num_points: raw.grid.num_points.unwrap_or(DEFAULT_NUM_POINTS),
        engine,
        output: OutputConfig {
            dir: PathBuf::from(raw.output.dir.unwrap_or_else(|| DEFAULT_OUTPUT_DIR.to_string())),
            formats,
        },
    })
}

impl RunConfig {
    /// Check every precondition; building the scenario exercises the flow-level ones.
    pub fn validate(&self) -> Result<()> {
        let as_semantic = |e: Error| match e {
            Error::Parameter(m) | Error::Domain(m) => Error::Semantic(m),
            other => other,
        };
        self.scenario.check().map_err(as_semantic)?;
        if self.engine.sample_stride == 0 || self.engine.check_stride == 0 {
            return Err(semantic("engine strides must be at least 1"));
        }
        self.to_spec().map_err(as_semantic)?;
        Ok(())
    }

    /// Build the scenario with the engine settings applied.
    pub fn to_spec(&self) -> Result<ScenarioSpec> {
        let mut def = self.scenario.clone();
        def.t_max = self.engine.t_max;
        def.normalization = self.engine.normalization;
        let mut spec = def.build(self.num_points)?;
        let params = &mut spec.params;
        params.cfl = self.engine.cfl;
        params.residual_tol = self.engine.residual_tol;
        params.renorm_projection = self.engine.projection;
        params.sample_stride = self.engine.sample_stride;
        params.check_stride = self.engine.check_stride;
        params.breakdown_zeta_tol = self.engine.breakdown_zeta_tol;
        params.validate()?;
        Ok(spec)
    }

    /// Serialize with every value explicit.
    pub fn emit(&self) -> String {
        let s = &self.scenario;
        let mut scenario = RawScenario {
            name: s.name.clone(),
            n: Some(s.n),
            k: Some(s.k),
            p: Some(s.p),
            phi: Some(s.phi.name().to_string()),
            initial: Some(s.initial.name().to_string()),
            expected: Some(s.expected),
            ..Default::default()
        };
        match s.phi {
            PhiKind::Constant => {}
            PhiKind::Sin2Power { eps, m } => {
                scenario.phi_eps = Some(eps);
                scenario.phi_m = Some(m);
            }
            PhiKind::Tilted { delta } => scenario.phi_delta = Some(delta),
            PhiKind::Counterexample { m } => scenario.phi_m = Some(m),
        }
        match s.initial {
            InitialKind::Sphere { radius } => scenario.initial_radius = Some(radius),
            InitialKind::Spheroid { a, c } => {
                scenario.initial_a = Some(a);
                scenario.initial_c = Some(c);
            }
            InitialKind::Counterexample => {}
        }
        let e = &self.engine;
        let raw = RawConfig {
            scenario: ScenarioField::Table(scenario),
            grid: RawGrid {
                num_points: Some(self.num_points),
            },
            engine: RawEngine {
                cfl: Some(e.cfl),
                t_max: Some(e.t_max),
                residual_tol: Some(e.residual_tol),
                normalization: Some(e.normalization),
                projection: Some(e.projection),
                sample_stride: Some(e.sample_stride),
                check_stride: Some(e.check_stride),
                breakdown_zeta_tol: Some(e.breakdown_zeta_tol),
            },
            output: RawOutput {
                dir: Some(self.output.dir.to_string_lossy().into_owned()),
                formats: Some(self.output.formats.clone()),
            },
        };
        toml::to_string(&raw).expect("configuration serializes to TOML")
    }
}
