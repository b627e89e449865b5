//! Time evolution in the three pictures.
//!
//! - Right kets obey `i∂ₜ|Φ⟩ = H_gen|Φ⟩`, left kets `i∂ₜ|Φ⟩⟩ = H_gen†|Φ⟩⟩`.
//!   Both are integrated with classical fixed-step RK4, together with the
//!   propagators `U_R` and `U_L†` that solve the same equations from the
//!   identity.
//! - The standard-space propagator is diagonal, `u(t) = diag(exp(−i∫Eₙ))`,
//!   because `h(t) = diag(Eₙ(t))` in the canonical basis. The phase integrals
//!   use composite Simpson over the grid and its midpoints.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dressing::{theta_inner, DressingTrack};
use crate::error::{Error, Result};
use crate::linalg::{is_finite, CMatrix, CVector, I};
use crate::spectral::REALITY_TOLERANCE;

#[derive(Debug, Clone)]
pub struct EvolutionState {
    pub t: f64,
    /// `|Φ(t)⟩`
    pub phi_right: CVector,
    /// `|Φ(t)⟩⟩`, integrated independently when the left picture is enabled.
    pub phi_left: Option<CVector>,
    /// `|φ(t)≻ = u(t) Ω(0) |Φ(0)⟩`
    pub phi_standard: CVector,
}

#[derive(Debug, Clone)]
pub struct PropagatorPair {
    pub t: f64,
    pub u_std: CMatrix,
    pub u_right: CMatrix,
    pub u_left_dag: Option<CMatrix>,
}

/// Which operator drives the quasi-Hermitian equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorChoice {
    /// `H_gen = H − iΩ⁻¹Ω̇`
    #[default]
    Full,
    /// `H` alone. Breaks Θ-norm conservation whenever `Ω̇ ≠ 0`; kept as a
    /// falsification switch.
    HamiltonianOnly,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub generator: GeneratorChoice,
    pub states: Vec<EvolutionState>,
    pub propagators: Vec<PropagatorPair>,
}

impl Trajectory {
    pub fn initial(&self) -> &EvolutionState {
        &self.states[0]
    }

    pub fn last(&self) -> &EvolutionState {
        self.states
            .last()
            .expect("trajectory has at least one state")
    }
}

/// One RK4 step of `i ẏ = G(t) y` given `G` at `t`, `t + dt/2` and `t + dt`.
pub fn rk4_step(y: &CMatrix, g0: &CMatrix, g_mid: &CMatrix, g1: &CMatrix, dt: f64) -> CMatrix {
    let minus_i = -I;
    let half = Complex64::new(0.5 * dt, 0.0);
    let full = Complex64::new(dt, 0.0);
    let k1 = g0 * y * minus_i;
    let k2 = g_mid * (y + &k1 * half) * minus_i;
    let k3 = g_mid * (y + &k2 * half) * minus_i;
    let k4 = g1 * (y + &k3 * full) * minus_i;
    y + (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * Complex64::new(dt / 6.0, 0.0)
}

/// Advances the right ket with `H_gen` and the left ket with `H_gen†`.
pub fn step_generator(
    state: &EvolutionState,
    generators: [&CMatrix; 3],
    dt: f64,
) -> Result<EvolutionState> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "step must be positive"));
    }
    let [g0, gm, g1] = generators;
    let t = state.t + dt;
    let as_col = |v: &CVector| CMatrix::from_column_slice(v.len(), 1, v.as_slice());
    let right = rk4_step(&as_col(&state.phi_right), g0, gm, g1, dt);
    if !is_finite(&right) {
        return Err(Error::NonFinite { t });
    }
    let left = match &state.phi_left {
        Some(l) => {
            let next = rk4_step(&as_col(l), &g0.adjoint(), &gm.adjoint(), &g1.adjoint(), dt);
            if !is_finite(&next) {
                return Err(Error::NonFinite { t });
            }
            Some(next.column(0).into_owned())
        }
        None => None,
    };
    Ok(EvolutionState {
        t,
        phi_right: right.column(0).into_owned(),
        phi_left: left,
        phi_standard: state.phi_standard.clone(),
    })
}

/// Accumulated phases `∫_{t0}^{t_k} Eₙ(s) ds` on every grid point.
pub fn standard_phases(track: &DressingTrack) -> Result<Vec<Vec<f64>>> {
    let n = track.samples[0].frame.dimension();
    for s in &track.samples {
        let max_imag = s.frame.max_imag_energy();
        if max_imag >= REALITY_TOLERANCE {
            return Err(Error::ComplexSpectrum { t: s.t, max_imag });
        }
    }
    let dt = track.dt();
    let mut phases = vec![vec![0.0; n]];
    for k in 0..track.steps {
        let (a, m, b) = (track.grid(k), track.midpoint(k), track.grid(k + 1));
        let prev = &phases[k];
        let next: Vec<f64> = (0..n)
            .map(|i| {
                let e =
                    a.frame.energies[i].re + 4.0 * m.frame.energies[i].re + b.frame.energies[i].re;
                prev[i] + dt / 6.0 * e
            })
            .collect();
        phases.push(next);
    }
    Ok(phases)
}

pub fn standard_propagator(phases: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        phases.len(),
        phases.iter().map(|&p| Complex64::from_polar(1.0, -p)),
    ))
}

/// `u(t_k)` for every grid point of the track.
pub fn propagate_standard(track: &DressingTrack) -> Result<Vec<CMatrix>> {
    Ok(standard_phases(track)?
        .iter()
        .map(|p| standard_propagator(p))
        .collect())
}

/// Integrates the quasi-Hermitian equations over the whole track.
///
/// `phi0` is `|Φ(t0)⟩`; the left ket starts at `Θ(t0)|Φ(t0)⟩`.
pub fn propagate_quasi(
    track: &DressingTrack,
    phi0: &CVector,
    left_picture: bool,
    generator: GeneratorChoice,
) -> Result<Trajectory> {
    let n = track.samples[0].omega.nrows();
    if phi0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: phi0.len(),
            context: "initial state".into(),
        });
    }
    let u_std = propagate_standard(track)?;
    let g = |j: usize| match generator {
        GeneratorChoice::Full => &track.samples[j].generator,
        GeneratorChoice::HamiltonianOnly => &track.samples[j].hamiltonian,
    };
    let dt = track.dt();
    let first = track.grid(0);
    let mapped0 = &first.omega * phi0;

    // Columns: state, then the propagator started from the identity.
    let mut right = CMatrix::zeros(n, n + 1);
    right.set_column(0, phi0);
    right
        .view_mut((0, 1), (n, n))
        .copy_from(&CMatrix::identity(n, n));
    let mut left = left_picture.then(|| {
        let mut m = CMatrix::zeros(n, n + 1);
        m.set_column(0, &(&first.theta * phi0));
        m.view_mut((0, 1), (n, n))
            .copy_from(&CMatrix::identity(n, n));
        m
    });

    let mut states = Vec::with_capacity(track.grid_len());
    let mut propagators = Vec::with_capacity(track.grid_len());
    let mut record = |k: usize, right: &CMatrix, left: Option<&CMatrix>| {
        let t = track.grid(k).t;
        states.push(EvolutionState {
            t,
            phi_right: right.column(0).into_owned(),
            phi_left: left.map(|m| m.column(0).into_owned()),
            phi_standard: &u_std[k] * &mapped0,
        });
        propagators.push(PropagatorPair {
            t,
            u_std: u_std[k].clone(),
            u_right: right.columns(1, n).into_owned(),
            u_left_dag: left.map(|m| m.columns(1, n).into_owned()),
        });
    };
    record(0, &right, left.as_ref());

    for k in 0..track.steps {
        let (g0, gm, g1) = (g(2 * k), g(2 * k + 1), g(2 * k + 2));
        let t = track.grid(k + 1).t;
        right = rk4_step(&right, g0, gm, g1, dt);
        if !is_finite(&right) {
            return Err(Error::NonFinite { t });
        }
        if let Some(l) = left.as_mut() {
            *l = rk4_step(l, &g0.adjoint(), &gm.adjoint(), &g1.adjoint(), dt);
            if !is_finite(l) {
                return Err(Error::NonFinite { t });
            }
        }
        record(k + 1, &right, left.as_ref());
    }
    Ok(Trajectory {
        generator,
        states,
        propagators,
    })
}

/// `⟨Φ|ΘA|Φ⟩ / ⟨Φ|Θ|Φ⟩`
pub fn expectation(state: &EvolutionState, a: &CMatrix, theta: &CMatrix) -> Result<Complex64> {
    let phi = &state.phi_right;
    let norm = theta_inner(phi, phi, theta);
    if norm.norm() == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(theta_inner(phi, &(a * phi), theta) / norm)
}
