//! Named invariant diagnostics with measured residuals.
//!
//! All residuals are max-norms. Each check reports its worst residual over
//! the output grid together with the per-time series.

use serde::Serialize;

use crate::dressing::{quasi_hermiticity_residual, theta_inner, DressingTrack};
use crate::error::Result;
use crate::evolution::{expectation, Trajectory};
use crate::exec::Execution;
use crate::linalg::{eigenvalues, max_norm, sort_complex, CMatrix};
use crate::model::ObservableSpec;

pub const THETA_NORM: &str = "theta-norm-conservation";
pub const DUALITY_NORM: &str = "duality-norm-conservation";
pub const LEFT_RIGHT: &str = "left-right-consistency";
pub const EQUIVALENCE: &str = "equivalence";
pub const STANDARD_UNITARITY: &str = "standard-unitarity";
pub const PROPAGATOR_RIGHT: &str = "propagator-right";
pub const PROPAGATOR_LEFT: &str = "propagator-left";
pub const INTERTWINING: &str = "propagator-intertwining";
pub const QUASI_HERMITICITY: &str = "quasi-hermiticity";
pub const ISOSPECTRALITY: &str = "isospectrality";
pub const PARTNER_HERMITICITY: &str = "partner-hermiticity";
pub const OBSERVABLE_QUASI_HERMITICITY: &str = "observable-quasi-hermiticity";
pub const OBSERVABLE_REALITY: &str = "observable-reality";

/// Every check with its default threshold, in report order.
pub const ALL_CHECKS: [(&str, f64); 13] = [
    (THETA_NORM, 1e-8),
    (DUALITY_NORM, 1e-8),
    (LEFT_RIGHT, 1e-7),
    (EQUIVALENCE, 1e-7),
    (STANDARD_UNITARITY, 1e-10),
    (PROPAGATOR_RIGHT, 1e-8),
    (PROPAGATOR_LEFT, 1e-8),
    (INTERTWINING, 1e-7),
    (QUASI_HERMITICITY, 1e-9),
    (ISOSPECTRALITY, 1e-9),
    (PARTNER_HERMITICITY, 1e-9),
    (OBSERVABLE_QUASI_HERMITICITY, 1e-9),
    (OBSERVABLE_REALITY, 1e-9),
];

/// Checks that need the independently integrated left picture.
pub const LEFT_PICTURE_CHECKS: [&str; 4] =
    [DUALITY_NORM, LEFT_RIGHT, PROPAGATOR_LEFT, INTERTWINING];

pub fn default_threshold(name: &str) -> Option<f64> {
    ALL_CHECKS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantReport {
    pub name: String,
    pub max_residual: f64,
    pub threshold: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_time_series: Option<Vec<(f64, f64)>>,
}

impl InvariantReport {
    pub fn from_series(name: &str, threshold: f64, series: Vec<(f64, f64)>) -> Self {
        // NaN residuals never pass.
        let max_residual = series.iter().fold(0.0_f64, |m, &(_, r)| {
            if r.is_nan() || m.is_nan() {
                f64::NAN
            } else {
                m.max(r)
            }
        });
        InvariantReport {
            name: name.to_string(),
            max_residual,
            threshold,
            passed: max_residual < threshold,
            per_time_series: Some(series),
        }
    }
}

/// Everything the checks read; built once per run.
pub struct CheckContext<'a> {
    pub track: &'a DressingTrack,
    pub trajectory: &'a Trajectory,
    pub observables: &'a [ObservableSpec],
    /// `realized[j][k]`: observable `j` at grid point `k`.
    pub realized: Vec<Vec<CMatrix>>,
}

impl<'a> CheckContext<'a> {
    pub fn new(
        track: &'a DressingTrack,
        trajectory: &'a Trajectory,
        observables: &'a [ObservableSpec],
    ) -> Result<Self> {
        let realized = observables
            .iter()
            .map(|spec| {
                (0..track.grid_len())
                    .map(|k| track.grid(k).realize_observable(spec))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CheckContext {
            track,
            trajectory,
            observables,
            realized,
        })
    }

    pub fn has_left_picture(&self) -> bool {
        self.trajectory.initial().phi_left.is_some()
    }

    fn run_one(&self, name: &str, threshold: f64) -> InvariantReport {
        let series = match name {
            THETA_NORM => check_norm_conservation(self.trajectory, self.track),
            DUALITY_NORM => check_duality_norm(self.trajectory),
            LEFT_RIGHT => check_left_right_consistency(self.trajectory, self.track),
            EQUIVALENCE => check_equivalence(self.trajectory, self.track),
            STANDARD_UNITARITY => check_standard_unitarity(self.trajectory),
            PROPAGATOR_RIGHT => check_propagator_right(self.trajectory, self.track),
            PROPAGATOR_LEFT => check_propagator_left(self.trajectory, self.track),
            INTERTWINING => check_intertwining(self.trajectory),
            QUASI_HERMITICITY => check_quasi_hermiticity(self.track),
            ISOSPECTRALITY => check_isospectrality(self.track),
            PARTNER_HERMITICITY => check_partner_hermiticity(self.track),
            OBSERVABLE_QUASI_HERMITICITY => check_observable_quasi_hermiticity(self),
            OBSERVABLE_REALITY => check_observable_reality(self),
            other => unreachable!("unknown check `{other}` passed validation"),
        };
        InvariantReport::from_series(name, threshold, series)
    }

    /// Runs the selected checks (name, threshold) concurrently.
    pub fn run(&self, selected: &[(String, f64)], exec: Execution) -> Vec<InvariantReport> {
        exec.map(selected.to_vec(), |(name, threshold)| {
            self.run_one(&name, threshold)
        })
    }
}

type Series = Vec<(f64, f64)>;

fn grid_series(track: &DressingTrack, f: impl Fn(usize) -> f64) -> Series {
    (0..track.grid_len())
        .map(|k| (track.grid(k).t, f(k)))
        .collect()
}

/// `|⟨Φ(t)|Θ(t)|Φ(t)⟩ − ⟨Φ(0)|Θ(0)|Φ(0)⟩|`
pub fn check_norm_conservation(traj: &Trajectory, track: &DressingTrack) -> Series {
    let norm = |k: usize| {
        let phi = &traj.states[k].phi_right;
        theta_inner(phi, phi, &track.grid(k).theta).re
    };
    let n0 = norm(0);
    grid_series(track, |k| (norm(k) - n0).abs())
}

/// `|⟨⟨Φ(t)|Φ(t)⟩ − ⟨⟨Φ(0)|Φ(0)⟩|` from the independently integrated kets.
pub fn check_duality_norm(traj: &Trajectory) -> Series {
    let pairing = |k: usize| {
        let s = &traj.states[k];
        s.phi_left
            .as_ref()
            .map_or(f64::NAN, |l| l.dotc(&s.phi_right).re)
    };
    let p0 = pairing(0);
    (0..traj.states.len())
        .map(|k| (traj.states[k].t, (pairing(k) - p0).abs()))
        .collect()
}

/// `‖|Φ⟩⟩ − Θ|Φ⟩‖_max`
pub fn check_left_right_consistency(traj: &Trajectory, track: &DressingTrack) -> Series {
    grid_series(track, |k| {
        let s = &traj.states[k];
        s.phi_left.as_ref().map_or(f64::NAN, |l| {
            (l - &track.grid(k).theta * &s.phi_right).camax()
        })
    })
}

/// `‖Φ(t) − Ω⁻¹(t) u(t) Ω(0) Φ(0)‖_max / ‖Φ(0)‖_max`
pub fn check_equivalence(traj: &Trajectory, track: &DressingTrack) -> Series {
    let phi0 = &traj.states[0].phi_right;
    let scale = phi0.camax();
    grid_series(track, |k| {
        let s = &traj.states[k];
        let oracle = &track.grid(k).omega_inv * &s.phi_standard;
        (&s.phi_right - oracle).camax() / scale
    })
}

/// `‖u†u − I‖_max`
pub fn check_standard_unitarity(traj: &Trajectory) -> Series {
    traj.propagators
        .iter()
        .map(|p| {
            let n = p.u_std.nrows();
            (
                p.t,
                max_norm(&(p.u_std.adjoint() * &p.u_std - CMatrix::identity(n, n))),
            )
        })
        .collect()
}

/// `‖U_R(t) − Ω⁻¹(t) u(t) Ω(0)‖_max`
pub fn check_propagator_right(traj: &Trajectory, track: &DressingTrack) -> Series {
    let omega0 = &track.grid(0).omega;
    grid_series(track, |k| {
        let p = &traj.propagators[k];
        max_norm(&(&p.u_right - &track.grid(k).omega_inv * &p.u_std * omega0))
    })
}

/// `‖U_L†(t) − Ω†(t) u(t) (Ω⁻¹(0))†‖_max`
pub fn check_propagator_left(traj: &Trajectory, track: &DressingTrack) -> Series {
    let omega0_inv_dag = track.grid(0).omega_inv.adjoint();
    grid_series(track, |k| {
        let p = &traj.propagators[k];
        p.u_left_dag.as_ref().map_or(f64::NAN, |ul| {
            max_norm(&(ul - track.grid(k).omega.adjoint() * &p.u_std * &omega0_inv_dag))
        })
    })
}

/// `‖U_L(t) U_R(t) − I‖_max`
pub fn check_intertwining(traj: &Trajectory) -> Series {
    traj.propagators
        .iter()
        .map(|p| {
            let n = p.u_right.nrows();
            let r = p.u_left_dag.as_ref().map_or(f64::NAN, |ul| {
                max_norm(&(ul.adjoint() * &p.u_right - CMatrix::identity(n, n)))
            });
            (p.t, r)
        })
        .collect()
}

/// `‖H†Θ − ΘH‖_max`
pub fn check_quasi_hermiticity(track: &DressingTrack) -> Series {
    grid_series(track, |k| {
        let s = track.grid(k);
        quasi_hermiticity_residual(&s.hamiltonian, &s.theta)
    })
}

/// Largest gap between the sorted spectra of `h = ΩHΩ⁻¹` and `H`.
pub fn check_isospectrality(track: &DressingTrack) -> Series {
    grid_series(track, |k| {
        let s = track.grid(k);
        let (Ok(mut eh), Ok(mut e_big)) = (
            eigenvalues(&s.hermitian_partner()),
            eigenvalues(&s.hamiltonian),
        ) else {
            return f64::NAN;
        };
        sort_complex(&mut eh);
        sort_complex(&mut e_big);
        eh.iter()
            .zip(&e_big)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    })
}

/// `‖h − h†‖_max`
pub fn check_partner_hermiticity(track: &DressingTrack) -> Series {
    grid_series(track, |k| {
        let h = track.grid(k).hermitian_partner();
        max_norm(&(&h - h.adjoint()))
    })
}

/// Worst `‖A†Θ − ΘA‖_max` over the declared observables.
pub fn check_observable_quasi_hermiticity(ctx: &CheckContext<'_>) -> Series {
    grid_series(ctx.track, |k| {
        ctx.realized
            .iter()
            .map(|a| quasi_hermiticity_residual(&a[k], &ctx.track.grid(k).theta))
            .fold(0.0, f64::max)
    })
}

/// Worst `|Im ⟨A⟩|` over observables that pass the quasi-Hermiticity check
/// at that grid point.
pub fn check_observable_reality(ctx: &CheckContext<'_>) -> Series {
    let qh = default_threshold(OBSERVABLE_QUASI_HERMITICITY).unwrap_or(1e-9);
    grid_series(ctx.track, |k| {
        let theta = &ctx.track.grid(k).theta;
        ctx.realized
            .iter()
            .filter(|a| quasi_hermiticity_residual(&a[k], theta) < qh)
            .map(|a| {
                expectation(&ctx.trajectory.states[k], &a[k], theta)
                    .map_or(f64::NAN, |e| e.im.abs())
            })
            .fold(0.0, f64::max)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passed_iff_below_threshold() {
        let r = InvariantReport::from_series("x", 1e-8, vec![(0.0, 0.0), (1.0, 5e-9)]);
        assert!(r.passed);
        assert_eq!(r.max_residual, 5e-9);
        let r = InvariantReport::from_series("x", 1e-8, vec![(0.0, 1e-8)]);
        assert!(!r.passed);
        let r = InvariantReport::from_series("x", 1e-8, vec![(0.0, f64::NAN), (1.0, 0.0)]);
        assert!(!r.passed);
    }

    #[test]
    fn every_check_has_a_default() {
        for (name, t) in ALL_CHECKS {
            assert_eq!(default_threshold(name), Some(t));
        }
        assert_eq!(default_threshold("nope"), None);
    }
}
