//! Running scenarios and sweeps, and writing their outputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use toml::Table;

use crate::dressing::{
    quasi_hermiticity_residual, theta_inner, DerivativeSource, DressingTrack, TrackSpec,
};
use crate::error::{Error, ErrorKind, Result};
use crate::evolution::{expectation, propagate_quasi, GeneratorChoice, Trajectory};
use crate::exec::Execution;
use crate::linalg::{max_norm, CVector, ONE};
use crate::scenario::{
    from_document, get_path, parse_value, set_path, InitialState, OutputColumn, ScenarioConfig,
};
use crate::verify::{check_equivalence, CheckContext, InvariantReport};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Fixed leading CSV columns. `theta_norm` is ⟨Φ|Θ|Φ⟩, `std_norm` the
/// unweighted ⟨Φ|Φ⟩ of the same ket.
pub const BASE_COLUMNS: [&str; 7] = [
    "t",
    "theta_norm",
    "std_norm",
    "equivalence_residual",
    "quasi_hermiticity_residual",
    "theta_min_eig",
    "theta_cond",
];

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub version: String,
    pub family: String,
    pub dimension: usize,
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub steps: usize,
    pub generator: GeneratorChoice,
    pub omega_dot: DerivativeSource,
    pub columns: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Vec<f64>>,
    pub invariants: Vec<InvariantReport>,
    pub warnings: Vec<String>,
    pub wall_clock_seconds: f64,
    pub passed: bool,
    pub document: Table,
}

impl RunReport {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn invariant(&self, name: &str) -> Option<&InvariantReport> {
        self.invariants.iter().find(|r| r.name == name)
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.invariants
            .iter()
            .filter(|r| !r.passed)
            .map(|r| r.name.as_str())
            .collect()
    }

    /// Rows formatted with 17 significant digits; identical inputs give
    /// byte-identical output.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario   {}", self.scenario);
        let _ = writeln!(s, "family     {} (N = {})", self.family, self.dimension);
        let _ = writeln!(
            s,
            "time       [{}, {}], dt = {}, {} steps",
            self.t0, self.t1, self.dt, self.steps
        );
        let _ = writeln!(
            s,
            "generator  {:?}, omega_dot {:?}",
            self.generator, self.omega_dot
        );
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<30} {:>12} {:>12}  result",
            "check", "max", "threshold"
        );
        for r in &self.invariants {
            let _ = writeln!(
                s,
                "{:<30} {:>12.3e} {:>12.3e}  {}",
                r.name,
                r.max_residual,
                r.threshold,
                if r.passed { "pass" } else { "FAIL" }
            );
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{} ({:.3} s)",
            if self.passed {
                "all checks passed"
            } else {
                "some checks failed"
            },
            self.wall_clock_seconds
        );
        s
    }

    /// JSON report; per-time series are left to the CSV.
    pub fn to_json(&self) -> String {
        let mut lean = self.clone();
        for r in &mut lean.invariants {
            r.per_time_series = None;
        }
        serde_json::to_string_pretty(&lean).expect("report serializes")
    }

    /// Writes `<name>.csv`, `<name>.summary.txt` and `<name>.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let stem = file_stem(&self.scenario);
        let files = [
            (dir.join(format!("{stem}.csv")), self.to_csv()),
            (dir.join(format!("{stem}.summary.txt")), self.summary()),
            (dir.join(format!("{stem}.json")), self.to_json()),
        ];
        for (path, body) in &files {
            std::fs::write(path, body)?;
        }
        Ok(files.into_iter().map(|(p, _)| p).collect())
    }
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Full results of one run, for callers that need more than the report.
pub struct RunArtifacts {
    pub track: DressingTrack,
    pub trajectory: Trajectory,
    pub report: RunReport,
}

pub fn run(config: &ScenarioConfig, exec: Execution) -> Result<RunReport> {
    run_detailed(config, exec).map(|a| a.report)
}

pub fn run_detailed(config: &ScenarioConfig, exec: Execution) -> Result<RunArtifacts> {
    let start = Instant::now();
    let time = config.time;
    let track = DressingTrack::build(
        &TrackSpec {
            model: &config.model,
            mu: &config.mu,
            reality: config.reality,
            t0: time.t0,
            t1: time.t1,
            steps: time.steps,
            mode: config.integrator.omega_dot,
        },
        exec,
    )?;
    for w in &track.warnings {
        log::warn!("{}: {w}", config.name);
    }

    let phi0 = initial_vector(config, &track)?;
    let trajectory = propagate_quasi(
        &track,
        &phi0,
        config.pictures.left,
        config.integrator.generator,
    )?;
    let observables = config.model.observables();
    let ctx = CheckContext::new(&track, &trajectory, observables)?;
    let invariants = ctx.run(&config.checks, exec);

    let n = config.model.dimension();
    let mut columns: Vec<String> = BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
    for k in 0..n {
        columns.push(format!("E{k}_re"));
        columns.push(format!("E{k}_im"));
    }
    for out in &config.outputs {
        match out {
            OutputColumn::Observable(name) => {
                columns.push(format!("{name}_re"));
                columns.push(format!("{name}_im"));
            }
            other => columns.push(other.label().to_string()),
        }
    }

    let equivalence = check_equivalence(&trajectory, &track);
    let rows = exec
        .map_range(track.grid_len(), |k| -> Result<Vec<f64>> {
            let map = track.grid(k);
            let state = &trajectory.states[k];
            let phi = &state.phi_right;
            let mut row = vec![
                map.t,
                theta_inner(phi, phi, &map.theta).re,
                phi.norm_squared(),
                equivalence[k].1,
                quasi_hermiticity_residual(&map.hamiltonian, &map.theta),
                map.metric.min_eig,
                map.metric.cond,
            ];
            for e in &map.frame.energies {
                row.push(e.re);
                row.push(e.im);
            }
            for out in &config.outputs {
                match out {
                    OutputColumn::Observable(name) => {
                        let j = observables
                            .iter()
                            .position(|o| &o.name == name)
                            .expect("validated");
                        let v = expectation(state, &ctx.realized[j][k], &map.theta)?;
                        row.push(v.re);
                        row.push(v.im);
                    }
                    OutputColumn::GeneratorDeviation => {
                        row.push(max_norm(&(&map.generator - &map.hamiltonian)));
                    }
                    OutputColumn::DualityResidual => {
                        let left = state.phi_left.as_ref().expect("validated");
                        row.push((left - &map.theta * phi).camax());
                    }
                }
            }
            Ok(row)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let passed = invariants.iter().all(|r| r.passed);
    let report = RunReport {
        scenario: config.name.clone(),
        version: VERSION.to_string(),
        family: config.model.family().as_str().to_string(),
        dimension: n,
        t0: time.t0,
        t1: time.t1,
        dt: time.dt,
        steps: time.steps,
        generator: config.integrator.generator,
        omega_dot: track.mode,
        columns,
        rows,
        invariants,
        warnings: track.warnings.clone(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        passed,
        document: config.document.clone(),
    };
    Ok(RunArtifacts {
        track,
        trajectory,
        report,
    })
}

/// The initial right ket, scaled to unit Θ(t0)-norm.
fn initial_vector(config: &ScenarioConfig, track: &DressingTrack) -> Result<CVector> {
    let n = config.model.dimension();
    let first = track.grid(0);
    let raw = match &config.initial_state {
        InitialState::Uniform => CVector::from_element(n, ONE),
        InitialState::Eigenstate(k) => first.frame.right_kets[*k].clone(),
        InitialState::Vector(v) => CVector::from_column_slice(v),
    };
    let norm = theta_inner(&raw, &raw, &first.theta).re;
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm);
    }
    Ok(raw.unscale(norm.sqrt()))
}

pub struct SweepPoint {
    pub value: String,
    pub outcome: Result<RunReport>,
}

pub struct SweepReport {
    pub scenario: String,
    pub path: String,
    pub points: Vec<SweepPoint>,
}

impl SweepReport {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "sweep of {} over {}", self.scenario, self.path);
        let _ = writeln!(
            s,
            "{:<16} {:<8} {:>14}  failing checks / error",
            "value", "status", "worst ratio"
        );
        for p in &self.points {
            match &p.outcome {
                Ok(r) => {
                    let worst = r
                        .invariants
                        .iter()
                        .map(|i| i.max_residual / i.threshold)
                        .fold(0.0_f64, f64::max);
                    let status = if r.passed { "pass" } else { "FAIL" };
                    let _ = writeln!(
                        s,
                        "{:<16} {:<8} {:>14.3e}  {}",
                        p.value,
                        status,
                        worst,
                        r.failed_checks().join(", ")
                    );
                }
                Err(e) => {
                    let _ = writeln!(s, "{:<16} {:<8} {:>14}  {e}", p.value, "error", "-");
                }
            }
        }
        s
    }

    pub fn to_json(&self) -> String {
        let points: Vec<serde_json::Value> = self
            .points
            .iter()
            .map(|p| match &p.outcome {
                Ok(r) => serde_json::json!({
                    "value": p.value,
                    "passed": r.passed,
                    "invariants": r.invariants.iter().map(|i| serde_json::json!({
                        "name": i.name,
                        "max_residual": i.max_residual,
                        "threshold": i.threshold,
                        "passed": i.passed,
                    })).collect::<Vec<_>>(),
                }),
                Err(e) => serde_json::json!({ "value": p.value, "error": e.to_string() }),
            })
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({
            "scenario": self.scenario,
            "path": self.path,
            "version": VERSION,
            "points": points,
        }))
        .expect("sweep serializes")
    }

    /// The most severe outcome: the first error kind in value order, if any.
    pub fn first_error_kind(&self) -> Option<ErrorKind> {
        self.points
            .iter()
            .find_map(|p| p.outcome.as_ref().err().map(Error::kind))
    }

    pub fn all_passed(&self) -> bool {
        self.points
            .iter()
            .all(|p| matches!(&p.outcome, Ok(r) if r.passed))
    }

    /// Writes one CSV per successful point plus `sweep_summary.txt` and
    /// `sweep.json`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let stem = file_stem(&self.scenario);
        for (i, p) in self.points.iter().enumerate() {
            if let Ok(r) = &p.outcome {
                std::fs::write(dir.join(format!("{stem}_{i:03}.csv")), r.to_csv())?;
            }
        }
        std::fs::write(dir.join("sweep_summary.txt"), self.summary())?;
        std::fs::write(dir.join("sweep.json"), self.to_json())?;
        Ok(())
    }
}

/// Runs one scenario per value of `path`, at most `jobs` at a time.
///
/// The path must already exist in the document. Each point is validated
/// independently, so a bad value fails only its own point.
pub fn sweep(
    doc: &Table,
    default_name: &str,
    path: &str,
    values: &[String],
    jobs: Option<usize>,
    exec: Execution,
) -> Result<SweepReport> {
    if get_path(doc, path).is_none() {
        return Err(Error::UnresolvedPath(path.to_string()));
    }
    let base_name = doc
        .get("name")
        .and_then(|v| v.as_str())
        .unwrap_or(default_name)
        .to_string();
    let points = exec.with_jobs(jobs, || {
        exec.map(values.to_vec(), |value| {
            let outcome = (|| {
                let mut point = doc.clone();
                set_path(&mut point, path, parse_value(&value), false)?;
                point.insert(
                    "name".into(),
                    toml::Value::String(format!("{base_name}[{path}={value}]")),
                );
                let config = from_document(point, None)?;
                run(&config, exec)
            })();
            SweepPoint { value, outcome }
        })
    });
    Ok(SweepReport {
        scenario: base_name,
        path: path.to_string(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;

    const DOC: &str = r#"
name = "unit"
outputs = ["energy", "generator_deviation", "duality_residual"]

[model]
family = "triangular2"
dimension = 2
params = { e1 = 1.0, e2 = 2.0, c = 1.0 }

[[model.observables]]
name = "energy"
source = "hamiltonian-itself"

[[mu]]
kind = "exponential"
base = 1.0
rate = 0.3

[[mu]]
kind = "exponential"
base = 1.0
rate = -0.1

[time]
t1 = 0.5
dt = 0.01
"#;

    #[test]
    fn columns_rows_and_checks() {
        let cfg = parse_scenario(DOC).unwrap();
        let r = run(&cfg, Execution::Sequential).unwrap();
        assert_eq!(r.rows.len(), 51);
        assert_eq!(&r.columns[..7], &BASE_COLUMNS);
        assert_eq!(
            &r.columns[7..],
            [
                "E0_re",
                "E0_im",
                "E1_re",
                "E1_im",
                "energy_re",
                "energy_im",
                "generator_deviation",
                "duality_residual"
            ]
        );
        assert!(r.rows.iter().all(|row| row.len() == r.columns.len()));
        assert!(r.passed, "{}", r.summary());
        let norm = r.column("theta_norm").unwrap();
        assert!((norm[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn csv_is_deterministic_across_modes() {
        let cfg = parse_scenario(DOC).unwrap();
        let a = run(&cfg, Execution::Sequential).unwrap().to_csv();
        let b = run(&cfg, Execution::Parallel).unwrap().to_csv();
        assert_eq!(a, b);
        let first = a.lines().nth(1).unwrap();
        assert!(first.starts_with("0.0000000000000000e0,"));
    }

    #[test]
    fn sweep_handles_empty_and_bad_paths() {
        let doc = crate::scenario::parse_document(DOC).unwrap();
        let empty = sweep(&doc, "x", "time.dt", &[], Some(2), Execution::Parallel).unwrap();
        assert!(empty.points.is_empty());
        assert!(matches!(
            sweep(
                &doc,
                "x",
                "model.params.nope",
                &["1".into()],
                None,
                Execution::Parallel
            ),
            Err(Error::UnresolvedPath(_))
        ));
        let s = sweep(
            &doc,
            "x",
            "time.dt",
            &["0.02".into(), "0.3".into()],
            Some(2),
            Execution::Parallel,
        )
        .unwrap();
        assert!(s.points[0].outcome.is_ok());
        assert_eq!(s.first_error_kind(), Some(ErrorKind::Config));
        assert!(s.summary().contains("error"));
    }
}
