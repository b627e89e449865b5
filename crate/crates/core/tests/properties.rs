use std::collections::BTreeMap;

use proptest::prelude::*;
use qhevolve::dressing::{DressingTrack, OmegaDotMode, TrackSpec};
use qhevolve::evolution::{propagate_quasi, GeneratorChoice};
use qhevolve::exec::Execution;
use qhevolve::model::{Family, HamiltonianModel};
use qhevolve::schedule::ScheduleSpec;
use qhevolve::spectral::RealityPolicy;
use qhevolve::verify::{
    check_equivalence, check_intertwining, check_isospectrality, check_left_right_consistency,
    check_norm_conservation, check_quasi_hermiticity,
};
use qhevolve::{CVector, Complex64};

fn worst(series: &[(f64, f64)]) -> f64 {
    series.iter().map(|p| p.1).fold(0.0, f64::max)
}

fn mu_schedule() -> impl Strategy<Value = ScheduleSpec> {
    prop_oneof![
        (0.3..2.0_f64).prop_map(ScheduleSpec::constant),
        (0.5..1.5_f64, -0.5..0.5_f64).prop_map(|(b, r)| ScheduleSpec::exponential(b, r)),
        (0.5..1.5_f64, 0.0..0.6_f64, 0.5..4.0_f64)
            .prop_map(|(b, a, w)| ScheduleSpec::sinusoidal(b, a, w, 0.0)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Random seeded similarity models with random metric weights keep every
    /// invariant at a modest step size.
    #[test]
    fn random_similarity_models_keep_invariants(
        n in 2usize..=5,
        seed in 0u64..1000,
        gaps in prop::collection::vec(0.3..1.5_f64, 5),
        ramp in -0.3..0.3_f64,
        mu in prop::collection::vec(mu_schedule(), 5),
        phi in prop::collection::vec((-1.0..1.0_f64, -1.0..1.0_f64), 5),
    ) {
        let mut e = -1.0;
        let mut params = BTreeMap::new();
        for (k, gap) in gaps.iter().take(n).enumerate() {
            params.insert(format!("e{}", k + 1), Complex64::new(e, 0.0));
            e += gap;
        }
        // The top level moves by at most 0.075, well inside its gap.
        let mut schedules = BTreeMap::new();
        let top = format!("e{n}");
        schedules.insert(top.clone(), ScheduleSpec::linear_ramp(params[&top], ramp));
        let model = HamiltonianModel::new(n, Family::SimilarityRand, params, schedules, vec![], seed, 0.0).unwrap();
        let mu = &mu[..n];
        let track = DressingTrack::build(
            &TrackSpec { model: &model, mu, reality: RealityPolicy::Assert, t0: 0.0, t1: 0.25, steps: 100, mode: OmegaDotMode::Auto },
            Execution::Sequential,
        ).unwrap();
        let phi0 = CVector::from_iterator(n, phi.iter().take(n).map(|&(a, b)| Complex64::new(a, b)));
        prop_assume!(phi0.norm() > 0.1);
        let traj = propagate_quasi(&track, &phi0, true, GeneratorChoice::Full).unwrap();

        let scale = phi0.norm_squared().max(1.0);
        prop_assert!(worst(&check_norm_conservation(&traj, &track)) < 1e-8 * scale);
        prop_assert!(worst(&check_equivalence(&traj, &track)) < 1e-7);
        prop_assert!(worst(&check_left_right_consistency(&traj, &track)) < 1e-7 * scale);
        prop_assert!(worst(&check_intertwining(&traj)) < 1e-7);
        prop_assert!(worst(&check_quasi_hermiticity(&track)) < 1e-9);
        prop_assert!(worst(&check_isospectrality(&track)) < 1e-9);
    }
}
