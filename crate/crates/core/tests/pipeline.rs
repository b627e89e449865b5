use std::path::PathBuf;

use qhevolve::exec::Execution;
use qhevolve::run::{run, sweep};
use qhevolve::scenario::{apply_overrides, from_document, parse_document, ScenarioConfig};
use qhevolve::Error;

fn scenario(name: &str, overrides: &[&str]) -> ScenarioConfig {
    let path =
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../scenarios/{name}.toml"));
    let mut doc = parse_document(&std::fs::read_to_string(path).unwrap()).unwrap();
    let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    apply_overrides(&mut doc, &overrides).unwrap();
    from_document(doc, Some(name)).unwrap()
}

#[test]
fn eigenstate_stays_in_its_level() {
    let r = run(&scenario("eigenstate_static", &[]), Execution::Parallel).unwrap();
    assert!(r.passed, "{}", r.summary());
    for v in r.column("middle_projector_re").unwrap() {
        assert!((v - 1.0).abs() < 1e-10, "{v}");
    }
    for v in r.column("energy_re").unwrap() {
        assert!((v - 1.0).abs() < 1e-10, "{v}");
    }
}

#[test]
fn hermitian_limit_has_no_generator_correction() {
    let r = run(&scenario("static_hermitian", &[]), Execution::Parallel).unwrap();
    assert!(r
        .column("generator_deviation")
        .unwrap()
        .iter()
        .all(|&d| d == 0.0));
    let theta = r.column("theta_norm").unwrap();
    let std = r.column("std_norm").unwrap();
    for (a, b) in theta.iter().zip(&std) {
        assert!((a - b).abs() < 1e-12);
    }
    // Rabi oscillation of |1,0⟩ under σx: ⟨σx⟩ = 0 throughout.
    for v in r.column("energy_re").unwrap() {
        assert!(v.abs() < 1e-12, "{v}");
    }
}

#[test]
fn exponential_metric_shifts_the_generator_by_its_rates() {
    let r = run(&scenario("exp_metric_drive", &[]), Execution::Parallel).unwrap();
    for d in r.column("generator_deviation").unwrap() {
        assert!((d - 0.3).abs() < 1e-9, "{d}");
    }
    let theta = r.column("theta_norm").unwrap();
    let std = r.column("std_norm").unwrap();
    assert!(theta.iter().all(|v| (v - 1.0).abs() < 1e-8));
    // Components scale as e^{-0.3t} and e^{0.1t}: ⟨Φ|Φ⟩ = (e^{-0.6t} + e^{0.2t})/2.
    let t1 = *r.column("t").unwrap().last().unwrap();
    let expected = ((-0.6 * t1).exp() + (0.2 * t1).exp()) / 2.0;
    assert!(
        (std.last().unwrap() - expected).abs() < 1e-9,
        "{} vs {expected}",
        std.last().unwrap()
    );
    assert!((std[0] - 1.0).abs() < 1e-14);
}

#[test]
fn csv_is_identical_across_execution_modes() {
    let cfg = scenario("similarity_sched", &["time.dt=0.005"]);
    let a = run(&cfg, Execution::Sequential).unwrap().to_csv();
    let b = run(&cfg, Execution::Parallel).unwrap().to_csv();
    assert_eq!(a, b);
    let header = a.lines().next().unwrap();
    assert!(header.starts_with(
        "t,theta_norm,std_norm,equivalence_residual,quasi_hermiticity_residual,theta_min_eig,theta_cond,E0_re,E0_im"
    ));
    assert!(header.ends_with("energy_re,energy_im,top_projector_re,top_projector_im"));
    assert_eq!(a.lines().count(), 1 + 201);
}

#[test]
fn report_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(
        &scenario("triangular_drive", &["time.dt=0.01"]),
        Execution::Parallel,
    )
    .unwrap();
    let files = r.write_to(dir.path()).unwrap();
    assert_eq!(files.len(), 3);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&files[2]).unwrap()).unwrap();
    assert_eq!(json["scenario"], "triangular_drive");
    assert_eq!(json["steps"], 100);
    assert!(json["invariants"].as_array().unwrap().len() >= 10);
    assert_eq!(json["document"]["time"]["dt"], 0.01);
}

#[test]
fn sweep_over_ramp_rate() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/pt2_ramp.toml");
    let doc = parse_document(&std::fs::read_to_string(path).unwrap()).unwrap();
    let values: Vec<String> = ["0.2", "0.4", "0.6", "0.8"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let s = sweep(
        &doc,
        "pt2_ramp",
        "model.schedules.gamma.rate",
        &values,
        Some(2),
        Execution::Parallel,
    )
    .unwrap();
    assert_eq!(s.points.len(), 4);
    assert!(s.all_passed(), "{}", s.summary());
    // Faster ramps end closer to the exceptional point.
    let final_cond: Vec<f64> = s
        .points
        .iter()
        .map(|p| {
            *p.outcome
                .as_ref()
                .unwrap()
                .column("theta_cond")
                .unwrap()
                .last()
                .unwrap()
        })
        .collect();
    assert!(final_cond.windows(2).all(|w| w[0] < w[1]), "{final_cond:?}");

    assert!(matches!(
        sweep(
            &doc,
            "pt2_ramp",
            "model.schedules.delta",
            &values,
            None,
            Execution::Parallel
        ),
        Err(Error::UnresolvedPath(_))
    ));
}

#[test]
fn sweep_into_the_exceptional_point_fails_only_that_point() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/pt2_ramp.toml");
    let doc = parse_document(&std::fs::read_to_string(path).unwrap()).unwrap();
    let values: Vec<String> = ["0.5", "1.0"].iter().map(|s| s.to_string()).collect();
    let s = sweep(
        &doc,
        "pt2_ramp",
        "model.schedules.gamma.rate",
        &values,
        None,
        Execution::Parallel,
    )
    .unwrap();
    assert!(s.points[0].outcome.is_ok());
    assert!(matches!(
        s.points[1].outcome,
        Err(Error::ExceptionalPoint { .. })
    ));
}

#[test]
fn falsification_switch_breaks_conservation() {
    let r = run(
        &scenario(
            "triangular_drive",
            &["integrator.generator=hamiltonian-only"],
        ),
        Execution::Parallel,
    )
    .unwrap();
    assert!(!r.passed);
    assert!(r.failed_checks().contains(&"theta-norm-conservation"));
}
