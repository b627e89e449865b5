//! Scenario documents.
//!
//! A scenario is a TOML document. Overrides and sweep parameters address
//! values by dotted path (`time.dt`, `model.params.gamma`, `mu.0.rate`) and
//! are applied to the parsed document before validation.
//!
//! ```toml
//! name = "exp_metric_drive"
//! seed = 7
//! pictures = ["right", "left", "standard"]
//!
//! [model]
//! family = "triangular2"
//! dimension = 2
//! params = { e1 = 1.0, e2 = 2.0, c = 0.0 }
//!
//! [[mu]]
//! kind = "exponential"
//! base = 1.0
//! rate = 0.3
//!
//! [[mu]]
//! kind = "exponential"
//! base = 1.0
//! rate = -0.1
//!
//! [time]
//! t0 = 0.0
//! t1 = 1.0
//! dt = 1e-3
//!
//! [initial_state]
//! preset = "uniform"
//! ```

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

/// A parsed scenario document.
pub type Document = Table;

use crate::dressing::OmegaDotMode;
use crate::error::{Error, Result};
use crate::evolution::GeneratorChoice;
use crate::model::{Family, HamiltonianModel, ObservableSpec};
use crate::schedule::{Scalar, ScheduleSpec};
use crate::spectral::RealityPolicy;
use crate::verify::{default_threshold, ALL_CHECKS, LEFT_PICTURE_CHECKS};

/// Extra CSV columns that are not observables.
pub const GENERATOR_DEVIATION: &str = "generator_deviation";
pub const DUALITY_RESIDUAL: &str = "duality_residual";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    seed: Option<u64>,
    model: Option<RawModel>,
    mu: Option<Vec<ScheduleSpec>>,
    time: Option<RawTime>,
    initial_state: Option<RawInitial>,
    pictures: Option<Vec<String>>,
    checks: Option<Vec<RawCheck>>,
    outputs: Option<Vec<String>>,
    integrator: Option<RawIntegrator>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    family: Option<String>,
    dimension: Option<usize>,
    reality: Option<RealityPolicy>,
    seed: Option<u64>,
    #[serde(default)]
    params: BTreeMap<String, Scalar>,
    #[serde(default)]
    schedules: BTreeMap<String, ScheduleSpec>,
    #[serde(default)]
    observables: Vec<ObservableSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    t0: Option<f64>,
    t1: Option<f64>,
    dt: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    preset: Option<String>,
    level: Option<usize>,
    vector: Option<Vec<Scalar>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawCheck {
    Name(String),
    WithThreshold {
        name: String,
        threshold: Option<f64>,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntegrator {
    generator: Option<GeneratorChoice>,
    omega_dot: Option<OmegaDotMode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// Right eigenket `|k⟩` of `H(t0)`.
    Eigenstate(usize),
    /// `(1, …, 1)` in the reference space.
    Uniform,
    Vector(Vec<Complex64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Pictures {
    pub right: bool,
    pub left: bool,
    pub standard: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum OutputColumn {
    Observable(String),
    GeneratorDeviation,
    DualityResidual,
}

impl OutputColumn {
    pub fn label(&self) -> &str {
        match self {
            OutputColumn::Observable(name) => name,
            OutputColumn::GeneratorDeviation => GENERATOR_DEVIATION,
            OutputColumn::DualityResidual => DUALITY_RESIDUAL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct IntegratorOptions {
    pub generator: GeneratorChoice,
    pub omega_dot: OmegaDotMode,
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub model: HamiltonianModel,
    pub reality: RealityPolicy,
    pub mu: Vec<ScheduleSpec>,
    pub time: TimeGrid,
    pub initial_state: InitialState,
    pub pictures: Pictures,
    /// `(check name, threshold)` in report order.
    pub checks: Vec<(String, f64)>,
    pub outputs: Vec<OutputColumn>,
    pub integrator: IntegratorOptions,
    /// The document after overrides, echoed into reports.
    pub document: Table,
}

pub fn parse_document(text: &str) -> Result<Table> {
    text.parse::<Table>()
        .map_err(|e| Error::Parse(e.to_string()))
}

/// Parses a TOML literal; anything that is not one is taken as a string.
pub fn parse_value(text: &str) -> Value {
    format!("v = {text}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(text.to_string()))
}

fn segments(path: &str) -> Vec<&str> {
    path.split('.').filter(|s| !s.is_empty()).collect()
}

/// Looks up a dotted path; numeric segments index arrays.
pub fn get_path<'a>(doc: &'a Table, path: &str) -> Option<&'a Value> {
    let segs = segments(path);
    let (first, rest) = segs.split_first()?;
    let mut cur = doc.get(*first)?;
    for seg in rest {
        cur = match cur {
            Value::Table(t) => t.get(*seg)?,
            Value::Array(a) => a.get(seg.parse::<usize>().ok()?)?,
            _ => return None,
        };
    }
    Some(cur)
}

/// Sets a dotted path. With `create`, missing table levels are added;
/// otherwise the full path must already exist.
pub fn set_path(doc: &mut Table, path: &str, value: Value, create: bool) -> Result<()> {
    let unresolved = || Error::UnresolvedPath(path.to_string());
    let segs = segments(path);
    let (last, parents) = segs.split_last().ok_or_else(unresolved)?;
    let mut cur: &mut Value = {
        let Some((first, _)) = parents.split_first() else {
            if !create && !doc.contains_key(*last) {
                return Err(unresolved());
            }
            doc.insert(last.to_string(), value);
            return Ok(());
        };
        if create && !doc.contains_key(*first) {
            doc.insert(first.to_string(), Value::Table(Table::new()));
        }
        doc.get_mut(*first).ok_or_else(unresolved)?
    };
    for seg in &parents[1..] {
        cur = match cur {
            Value::Table(t) => {
                if create && !t.contains_key(*seg) {
                    t.insert(seg.to_string(), Value::Table(Table::new()));
                }
                t.get_mut(*seg).ok_or_else(unresolved)?
            }
            Value::Array(a) => {
                let i: usize = seg.parse().map_err(|_| unresolved())?;
                a.get_mut(i).ok_or_else(unresolved)?
            }
            _ => return Err(unresolved()),
        };
    }
    match cur {
        Value::Table(t) => {
            if !create && !t.contains_key(*last) {
                return Err(unresolved());
            }
            t.insert(last.to_string(), value);
        }
        Value::Array(a) => {
            let i: usize = last.parse().map_err(|_| unresolved())?;
            *a.get_mut(i).ok_or_else(unresolved)? = value;
        }
        _ => return Err(unresolved()),
    }
    Ok(())
}

/// Applies `key=value` overrides in order.
pub fn apply_overrides(doc: &mut Table, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (key, value) = item.split_once('=').ok_or_else(|| {
            Error::invalid("--override", format!("expected key=value, got `{item}`"))
        })?;
        set_path(doc, key.trim(), parse_value(value.trim()), true)?;
    }
    Ok(())
}

pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    from_document(parse_document(text)?, None)
}

/// Validates a (possibly overridden) document. `default_name` is used when
/// the document has no `name` key.
pub fn from_document(doc: Table, default_name: Option<&str>) -> Result<ScenarioConfig> {
    let raw: RawScenario = Value::Table(doc.clone())
        .try_into()
        .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;

    let seed = raw.seed.unwrap_or(0);
    let name = raw
        .name
        .or_else(|| default_name.map(str::to_string))
        .unwrap_or_else(|| "scenario".to_string());

    let time = raw.time.ok_or_else(|| Error::MissingKey("time".into()))?;
    let t0 = time.t0.unwrap_or(0.0);
    let t1 = time.t1.ok_or_else(|| Error::MissingKey("time.t1".into()))?;
    let dt = time.dt.ok_or_else(|| Error::MissingKey("time.dt".into()))?;
    let time = time_grid(t0, t1, dt)?;

    let raw_model = raw.model.ok_or_else(|| Error::MissingKey("model".into()))?;
    let family: Family = raw_model
        .family
        .ok_or_else(|| Error::MissingKey("model.family".into()))?
        .parse()?;
    let dimension = raw_model
        .dimension
        .ok_or_else(|| Error::MissingKey("model.dimension".into()))?;
    let reality = raw_model.reality.unwrap_or(match family {
        Family::CubicTrunc => RealityPolicy::Report,
        _ => RealityPolicy::Assert,
    });
    let params = raw_model
        .params
        .into_iter()
        .map(|(k, v)| (k, v.0))
        .collect();
    let model = HamiltonianModel::new(
        dimension,
        family,
        params,
        raw_model.schedules,
        raw_model.observables,
        raw_model.seed.unwrap_or(seed),
        t0,
    )?;

    let mu = raw.mu.ok_or_else(|| Error::MissingKey("mu".into()))?;
    if mu.len() != dimension {
        return Err(Error::DimensionMismatch {
            expected: dimension,
            found: mu.len(),
            context: "`mu` needs one schedule per level".into(),
        });
    }
    for (k, s) in mu.iter().enumerate() {
        s.validate_nonvanishing(&format!("mu.{k}"), time.t0, time.t1)?;
    }

    let initial_state = match raw.initial_state {
        None => InitialState::Uniform,
        Some(init) => initial_state(init, dimension)?,
    };

    let pictures = match raw.pictures {
        None => Pictures {
            right: true,
            left: true,
            standard: true,
        },
        Some(list) => {
            let mut p = Pictures {
                right: false,
                left: false,
                standard: false,
            };
            for item in &list {
                match item.as_str() {
                    "right" => p.right = true,
                    "left" => p.left = true,
                    "standard" => p.standard = true,
                    other => {
                        return Err(Error::invalid(
                            "pictures",
                            format!("unknown picture `{other}`"),
                        ))
                    }
                }
            }
            if !p.right {
                return Err(Error::invalid(
                    "pictures",
                    "the right picture is always integrated",
                ));
            }
            p
        }
    };

    let checks = select_checks(raw.checks, pictures.left)?;

    let outputs = match raw.outputs {
        None => model
            .observables()
            .iter()
            .map(|o| OutputColumn::Observable(o.name.clone()))
            .collect(),
        Some(list) => list
            .into_iter()
            .map(|item| match item.as_str() {
                GENERATOR_DEVIATION => Ok(OutputColumn::GeneratorDeviation),
                DUALITY_RESIDUAL if pictures.left => Ok(OutputColumn::DualityResidual),
                DUALITY_RESIDUAL => Err(Error::invalid(
                    "outputs",
                    "duality_residual needs the left picture",
                )),
                name if model.observables().iter().any(|o| o.name == name) => {
                    Ok(OutputColumn::Observable(item))
                }
                _ => Err(Error::invalid(
                    "outputs",
                    format!("unknown column `{item}`"),
                )),
            })
            .collect::<Result<Vec<_>>>()?,
    };

    let integrator = raw.integrator.unwrap_or_default();
    let integrator = IntegratorOptions {
        generator: integrator.generator.unwrap_or_default(),
        omega_dot: integrator.omega_dot.unwrap_or_default(),
    };
    if integrator.omega_dot == OmegaDotMode::AnalyticMuOnly && model.is_time_dependent() {
        return Err(Error::InconsistentMode);
    }

    Ok(ScenarioConfig {
        name,
        seed,
        model,
        reality,
        mu,
        time,
        initial_state,
        pictures,
        checks,
        outputs,
        integrator,
        document: doc,
    })
}

fn time_grid(t0: f64, t1: f64, dt: f64) -> Result<TimeGrid> {
    if !(t0.is_finite() && t1.is_finite()) {
        return Err(Error::invalid("time", "t0 and t1 must be finite"));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid(
            "time.dt",
            format!("must be positive, got {dt}"),
        ));
    }
    if !(t1 > t0) {
        return Err(Error::invalid("time.t1", "must be greater than time.t0"));
    }
    let ratio = (t1 - t0) / dt;
    let steps = ratio.round();
    if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::invalid(
            "time.dt",
            format!("(t1 - t0)/dt = {ratio} is not an integer number of steps"),
        ));
    }
    if steps < 5.0 {
        return Err(Error::invalid(
            "time.dt",
            "at least five steps are required",
        ));
    }
    Ok(TimeGrid {
        t0,
        t1,
        dt,
        steps: steps as usize,
    })
}

fn initial_state(raw: RawInitial, n: usize) -> Result<InitialState> {
    match (raw.preset.as_deref(), raw.vector) {
        (Some(_), Some(_)) => Err(Error::invalid(
            "initial_state",
            "give either `preset` or `vector`, not both",
        )),
        (None, Some(v)) => {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: v.len(),
                    context: "initial_state.vector".into(),
                });
            }
            if v.iter().all(|z| z.0.norm() == 0.0) {
                return Err(Error::invalid("initial_state.vector", "must be nonzero"));
            }
            Ok(InitialState::Vector(v.into_iter().map(|z| z.0).collect()))
        }
        (Some("uniform"), None) => Ok(InitialState::Uniform),
        (Some("eigenstate"), None) => {
            let level = raw.level.unwrap_or(0);
            if level >= n {
                return Err(Error::invalid(
                    "initial_state.level",
                    format!("level {level} out of range for dimension {n}"),
                ));
            }
            Ok(InitialState::Eigenstate(level))
        }
        (Some(other), None) => Err(Error::invalid(
            "initial_state.preset",
            format!("unknown preset `{other}`"),
        )),
        (None, None) => Err(Error::MissingKey("initial_state.preset".into())),
    }
}

fn select_checks(raw: Option<Vec<RawCheck>>, left: bool) -> Result<Vec<(String, f64)>> {
    let Some(list) = raw else {
        return Ok(ALL_CHECKS
            .iter()
            .filter(|(name, _)| left || !LEFT_PICTURE_CHECKS.contains(name))
            .map(|(name, t)| (name.to_string(), *t))
            .collect());
    };
    let mut out: Vec<(String, f64)> = Vec::new();
    for item in list {
        let (name, threshold) = match item {
            RawCheck::Name(name) => (name, None),
            RawCheck::WithThreshold { name, threshold } => (name, threshold),
        };
        let default = default_threshold(&name)
            .ok_or_else(|| Error::invalid("checks", format!("unknown check `{name}`")))?;
        if !left && LEFT_PICTURE_CHECKS.contains(&name.as_str()) {
            return Err(Error::invalid(
                "checks",
                format!("`{name}` needs the left picture"),
            ));
        }
        let threshold = threshold.unwrap_or(default);
        if !(threshold > 0.0) {
            return Err(Error::invalid(
                "checks",
                format!("threshold for `{name}` must be positive"),
            ));
        }
        if let Some(slot) = out.iter_mut().find(|(n, _)| *n == name) {
            slot.1 = threshold;
        } else {
            out.push((name, threshold));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[model]
family = "triangular2"
dimension = 2
params = { e1 = 1.0, e2 = 2.0, c = 1.0 }

[[mu]]
kind = "constant"
value = 1.0

[[mu]]
kind = "constant"
value = 1.0

[time]
t1 = 1.0
dt = 1e-3
"#;

    #[test]
    fn minimal_document_fills_defaults() {
        let cfg = parse_scenario(MINIMAL).unwrap();
        assert_eq!(cfg.name, "scenario");
        assert_eq!(cfg.time.t0, 0.0);
        assert_eq!(cfg.time.steps, 1000);
        assert_eq!(cfg.initial_state, InitialState::Uniform);
        assert!(cfg.pictures.left && cfg.pictures.standard);
        assert_eq!(cfg.checks.len(), ALL_CHECKS.len());
        assert_eq!(cfg.integrator.generator, GeneratorChoice::Full);
        assert_eq!(cfg.reality, RealityPolicy::Assert);
    }

    #[test]
    fn missing_dt_is_named() {
        let text = MINIMAL.replace("dt = 1e-3", "");
        let err = parse_scenario(&text).unwrap_err();
        assert!(
            matches!(&err, Error::MissingKey(k) if k == "time.dt"),
            "{err}"
        );
        assert!(err.to_string().contains("time.dt"));
    }

    #[test]
    fn vanishing_mu_is_rejected() {
        let text = MINIMAL.replacen(
            "kind = \"constant\"\nvalue = 1.0",
            "kind = \"sinusoidal\"\nbase = 1.0\namplitude = 1.0\nfrequency = 2.0",
            1,
        );
        let err = parse_scenario(&text).unwrap_err();
        assert!(matches!(err, Error::VanishingSchedule { .. }), "{err}");
    }

    #[test]
    fn bad_time_grids() {
        for (from, to) in [
            ("dt = 1e-3", "dt = 0.0"),
            ("dt = 1e-3", "dt = 0.3"),
            ("t1 = 1.0", "t1 = -1.0"),
        ] {
            let err = parse_scenario(&MINIMAL.replace(from, to)).unwrap_err();
            assert!(matches!(err, Error::InvalidValue { .. }), "{to}: {err}");
        }
    }

    #[test]
    fn mu_dimension_mismatch() {
        let text = MINIMAL.replacen("[[mu]]\nkind = \"constant\"\nvalue = 1.0\n", "", 1);
        assert!(matches!(
            parse_scenario(&text),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn unknown_family() {
        let text = MINIMAL.replace("triangular2", "qubit");
        assert!(matches!(
            parse_scenario(&text),
            Err(Error::UnknownFamily(_))
        ));
    }

    #[test]
    fn overrides_and_paths() {
        let mut doc = parse_document(MINIMAL).unwrap();
        apply_overrides(
            &mut doc,
            &[
                "time.dt=5e-4".into(),
                "mu.1.value=2.0".into(),
                "integrator.generator=hamiltonian-only".into(),
            ],
        )
        .unwrap();
        let cfg = from_document(doc.clone(), Some("x")).unwrap();
        assert_eq!(cfg.name, "x");
        assert_eq!(cfg.time.steps, 2000);
        assert_eq!(cfg.mu[1], ScheduleSpec::constant(2.0));
        assert_eq!(cfg.integrator.generator, GeneratorChoice::HamiltonianOnly);
        assert!(matches!(
            set_path(&mut doc, "time.nope", Value::Float(1.0), false),
            Err(Error::UnresolvedPath(_))
        ));
        assert!(get_path(&doc, "model.params.e1").is_some());
        assert!(get_path(&doc, "mu.7.value").is_none());
    }

    #[test]
    fn check_selection_and_thresholds() {
        let text = format!(
            "checks = [\"equivalence\", {{ name = \"theta-norm-conservation\", threshold = 1e-6 }}]\n{MINIMAL}"
        );
        let cfg = parse_scenario(&text).unwrap();
        assert_eq!(
            cfg.checks,
            vec![
                ("equivalence".to_string(), 1e-7),
                ("theta-norm-conservation".to_string(), 1e-6)
            ]
        );
        let bad = format!("checks = [\"nope\"]\n{MINIMAL}");
        assert!(matches!(
            parse_scenario(&bad),
            Err(Error::InvalidValue { .. })
        ));
        let left_only =
            format!("pictures = [\"right\"]\nchecks = [\"left-right-consistency\"]\n{MINIMAL}");
        assert!(parse_scenario(&left_only).is_err());
        let right = format!("pictures = [\"right\", \"standard\"]\n{MINIMAL}");
        let cfg = parse_scenario(&right).unwrap();
        assert!(cfg
            .checks
            .iter()
            .all(|(n, _)| !LEFT_PICTURE_CHECKS.contains(&n.as_str())));
    }

    #[test]
    fn integer_literals_are_accepted_as_reals() {
        let text = MINIMAL
            .replace("t1 = 1.0", "t1 = 1")
            .replace("e1 = 1.0", "e1 = 1");
        assert!(parse_scenario(&text).is_ok());
    }

    #[test]
    fn parse_value_literals() {
        assert_eq!(parse_value("1e-3"), Value::Float(1e-3));
        assert_eq!(parse_value("3"), Value::Integer(3));
        assert_eq!(parse_value("full"), Value::String("full".into()));
        assert_eq!(parse_value("\"full\""), Value::String("full".into()));
    }
}
