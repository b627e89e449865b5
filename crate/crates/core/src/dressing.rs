//! Dressing map `Ω(t)`, metric `Θ(t)`, Hermitian partner `h(t)` and the
//! evolution generator `H_gen(t) = H(t) − i Ω⁻¹(t) Ω̇(t)`.
//!
//! The standard-space basis is the canonical basis, so row `n` of `Ω` is
//! `μₙ ⟨⟨n|` and `h = Ω H Ω⁻¹ = diag(Eₙ)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{hermitian_eigenvalues, inverse, max_norm, CMatrix, CVector, I};
use crate::model::{
    matrix_from_rows, FrameRule, HamiltonianModel, ObservableSource, ObservableSpec,
};
use crate::schedule::ScheduleSpec;
use crate::spectral::{eig_biorthogonal, track_continuity, BiorthogonalFrame, RealityPolicy};

/// `cond(Θ)` above which a warning is recorded.
pub const COND_WARN: f64 = 1e8;
/// `cond(Θ)` above which the run aborts.
pub const COND_LIMIT: f64 = 1e12;

/// Row `n` of the result is `μₙ ⟨⟨n|`.
pub fn build_omega(frame: &BiorthogonalFrame, mu: &[Complex64]) -> Result<CMatrix> {
    let n = frame.dimension();
    if mu.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: mu.len(),
            context: "mu coefficients".into(),
        });
    }
    if let Some(index) = mu.iter().position(|m| m.norm() == 0.0) {
        return Err(Error::ZeroMu { index });
    }
    let rows: Vec<_> = frame
        .left_bras
        .iter()
        .zip(mu)
        .map(|(l, &m)| l * m)
        .collect();
    Ok(CMatrix::from_rows(&rows))
}

/// `Θ = Ω†Ω`, checked to be positive definite.
pub fn build_theta(omega: &CMatrix) -> Result<CMatrix> {
    let theta = omega.adjoint() * omega;
    let min_eig = hermitian_eigenvalues(&theta)[0];
    if !(min_eig > 0.0) {
        return Err(Error::NotPositiveDefinite { min_eig });
    }
    Ok(theta)
}

/// `Σₙ |n⟩⟩ |μₙ|² ⟨⟨n|` with `|n⟩⟩ = (⟨⟨n|)†`; equal to `Ω†Ω` by construction.
pub fn theta_from_frame(frame: &BiorthogonalFrame, mu: &[Complex64]) -> CMatrix {
    let n = frame.dimension();
    let mut theta = CMatrix::zeros(n, n);
    for (l, m) in frame.left_bras.iter().zip(mu) {
        theta += l.adjoint() * l * Complex64::new(m.norm_sqr(), 0.0);
    }
    theta
}

/// `h = Ω H Ω⁻¹`
pub fn hermitize(omega: &CMatrix, h: &CMatrix) -> Result<CMatrix> {
    let omega_inv = inverse(omega, "dressing map")?;
    Ok(omega * h * omega_inv)
}

/// `‖A†Θ − ΘA‖_max`; zero certifies `A` as an observable in the Θ-space.
pub fn quasi_hermiticity_residual(a: &CMatrix, theta: &CMatrix) -> f64 {
    max_norm(&(a.adjoint() * theta - theta * a))
}

/// `H_gen = H − i Ω⁻¹ Ω̇`
pub fn build_generator(h: &CMatrix, omega: &CMatrix, omega_dot: &CMatrix) -> Result<CMatrix> {
    let omega_inv = inverse(omega, "dressing map")?;
    Ok(generator_from_inverse(h, &omega_inv, omega_dot))
}

fn generator_from_inverse(h: &CMatrix, omega_inv: &CMatrix, omega_dot: &CMatrix) -> CMatrix {
    h - omega_inv * omega_dot * I
}

/// `⟨a|Θ|b⟩`
pub fn theta_inner(a: &CVector, b: &CVector, theta: &CMatrix) -> Complex64 {
    a.dotc(&(theta * b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OmegaDotMode {
    /// Analytic when `H` is static, finite differences otherwise.
    #[default]
    Auto,
    /// Differentiates only `μₙ(t)`; the frame must be constant.
    AnalyticMuOnly,
    /// Fourth-order differences of the tracked `Ω(t)` samples.
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeSource {
    Analytic,
    FiniteDifference,
}

/// Fourth-order derivative of sample `i` of an equally spaced sequence.
///
/// Uses the central stencil where it fits and one-sided five-point stencils
/// at the ends. Needs at least five samples.
pub fn five_point_derivative(samples: &[&CMatrix], i: usize, h: f64) -> CMatrix {
    let m = samples.len();
    assert!(m >= 5, "five-point stencil needs at least five samples");
    let (start, weights): (usize, [f64; 5]) = if i >= 2 && i + 2 < m {
        (i - 2, [1.0, -8.0, 0.0, 8.0, -1.0])
    } else if i == 0 {
        (0, [-25.0, 48.0, -36.0, 16.0, -3.0])
    } else if i == 1 {
        (0, [-3.0, -10.0, 18.0, -6.0, 1.0])
    } else if i == m - 1 {
        (m - 5, [3.0, -16.0, 36.0, -48.0, 25.0])
    } else {
        (m - 5, [-1.0, 6.0, -18.0, 10.0, 3.0])
    };
    let rows = samples[0].nrows();
    let cols = samples[0].ncols();
    let mut d = CMatrix::zeros(rows, cols);
    for (k, w) in weights.iter().enumerate() {
        if *w != 0.0 {
            d += samples[start + k] * Complex64::new(*w, 0.0);
        }
    }
    d / Complex64::new(12.0 * h, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricSpectrum {
    pub min_eig: f64,
    pub max_eig: f64,
    pub cond: f64,
}

impl MetricSpectrum {
    pub fn of(theta: &CMatrix) -> Self {
        let e = hermitian_eigenvalues(theta);
        let (min_eig, max_eig) = (e[0], e[e.len() - 1]);
        MetricSpectrum {
            min_eig,
            max_eig,
            cond: max_eig / min_eig,
        }
    }
}

/// Everything the dynamics needs at one time point.
#[derive(Debug, Clone)]
pub struct DressingMap {
    pub t: f64,
    pub hamiltonian: CMatrix,
    pub frame: BiorthogonalFrame,
    pub mu: Vec<Complex64>,
    pub mu_dot: Vec<Complex64>,
    pub omega: CMatrix,
    pub omega_inv: CMatrix,
    pub omega_dot: CMatrix,
    pub theta: CMatrix,
    pub theta_source: DerivativeSource,
    pub metric: MetricSpectrum,
    pub generator: CMatrix,
}

impl DressingMap {
    pub fn hermitian_partner(&self) -> CMatrix {
        &self.omega * &self.hamiltonian * &self.omega_inv
    }

    /// `Aⱼ(t)` for an observable description.
    pub fn realize_observable(&self, spec: &ObservableSpec) -> Result<CMatrix> {
        let n = self.omega.nrows();
        let key = format!("observables.{}", spec.name);
        Ok(match &spec.source {
            ObservableSource::HamiltonianItself => self.hamiltonian.clone(),
            ObservableSource::UserMatrix { matrix } => matrix_from_rows(matrix, n, &key)?,
            ObservableSource::FunctionOfFrame { rule } => match rule {
                FrameRule::Projector { level } => {
                    &self.frame.right_kets[*level] * &self.frame.left_bras[*level]
                }
                FrameRule::Dressed { seed, scale } => {
                    let x = matrix_from_rows(seed, n, &key)?;
                    let f = scale.map_or(Complex64::new(1.0, 0.0), |s| s.eval(self.t));
                    &self.omega_inv * x * &self.omega * f
                }
                FrameRule::MetricInverse { seed } => {
                    let x = matrix_from_rows(seed, n, &key)?;
                    inverse(&self.theta, "metric")? * x
                }
            },
        })
    }
}

/// Dressing data on the half-step grid `t0 + j·dt/2`, `j = 0..=2·steps`.
///
/// Even samples are the output grid, odd samples the RK4 midpoints. Frames
/// are continuity-tracked along the whole half-step sequence; finite
/// differences use samples of equal parity, i.e. the stencil step is `dt`.
#[derive(Debug, Clone)]
pub struct DressingTrack {
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
    pub mode: DerivativeSource,
    pub samples: Vec<DressingMap>,
    pub warnings: Vec<String>,
}

pub struct TrackSpec<'a> {
    pub model: &'a HamiltonianModel,
    pub mu: &'a [ScheduleSpec],
    pub reality: RealityPolicy,
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
    pub mode: OmegaDotMode,
}

impl DressingTrack {
    pub fn build(spec: &TrackSpec<'_>, exec: Execution) -> Result<Self> {
        let TrackSpec {
            model,
            mu,
            reality,
            t0,
            t1,
            steps,
            mode,
        } = *spec;
        let n = model.dimension();
        if mu.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: mu.len(),
                context: "one mu schedule per level".into(),
            });
        }
        if steps < 5 {
            return Err(Error::invalid(
                "time.dt",
                "at least five steps are required",
            ));
        }
        let source = match mode {
            OmegaDotMode::AnalyticMuOnly if model.is_time_dependent() => {
                return Err(Error::InconsistentMode)
            }
            OmegaDotMode::AnalyticMuOnly => DerivativeSource::Analytic,
            OmegaDotMode::Auto if !model.is_time_dependent() => DerivativeSource::Analytic,
            OmegaDotMode::Auto | OmegaDotMode::FiniteDifference => {
                DerivativeSource::FiniteDifference
            }
        };

        let count = 2 * steps + 1;
        let time = |j: usize| t0 + (t1 - t0) * j as f64 / (2 * steps) as f64;

        // Eigensystems are independent per time point; tracking is sequential.
        let raw: Vec<Result<(CMatrix, BiorthogonalFrame)>> = exec.map_range(count, |j| {
            let t = time(j);
            let h = model.build_hamiltonian(t)?;
            let frame = eig_biorthogonal(&h, t, reality)?;
            Ok((h, frame))
        });
        let mut hamiltonians = Vec::with_capacity(count);
        let mut frames: Vec<BiorthogonalFrame> = Vec::with_capacity(count);
        for item in raw {
            let (h, frame) = item?;
            let frame = match frames.last() {
                Some(prev) => track_continuity(prev, &frame)?,
                None => frame,
            };
            hamiltonians.push(h);
            frames.push(frame);
        }

        struct Partial {
            mu: Vec<Complex64>,
            mu_dot: Vec<Complex64>,
            omega: CMatrix,
            omega_inv: CMatrix,
            theta: CMatrix,
            metric: MetricSpectrum,
        }
        let partial: Vec<Result<Partial>> = exec.map_range(count, |j| {
            let t = time(j);
            let mu_t: Vec<Complex64> = mu.iter().map(|s| s.eval(t)).collect();
            let mu_dot: Vec<Complex64> = mu.iter().map(|s| s.derivative(t)).collect();
            let omega = build_omega(&frames[j], &mu_t)?;
            let omega_inv = inverse(&omega, "dressing map")?;
            let theta = omega.adjoint() * &omega;
            let metric = MetricSpectrum::of(&theta);
            Ok(Partial {
                mu: mu_t,
                mu_dot,
                omega,
                omega_inv,
                theta,
                metric,
            })
        });
        let mut parts = Vec::with_capacity(count);
        let mut warnings = Vec::new();
        for (j, p) in partial.into_iter().enumerate() {
            let p = p?;
            let t = time(j);
            if !(p.metric.min_eig > 0.0) {
                return Err(Error::NotPositiveDefinite {
                    min_eig: p.metric.min_eig,
                });
            }
            if !(p.metric.cond <= COND_LIMIT) {
                return Err(Error::IllConditioned {
                    t,
                    cond: p.metric.cond,
                    limit: COND_LIMIT,
                });
            }
            if p.metric.cond > COND_WARN && warnings.is_empty() {
                let msg = format!(
                    "cond(Theta) = {:.3e} exceeds {COND_WARN:.0e} at t = {t}",
                    p.metric.cond
                );
                log::warn!("{msg}");
                warnings.push(msg);
            }
            parts.push(p);
        }

        let dt = (t1 - t0) / steps as f64;
        let omegas: Vec<&CMatrix> = parts.iter().map(|p| &p.omega).collect();
        let omega_dots: Vec<CMatrix> = exec.map_range(count, |j| match source {
            DerivativeSource::Analytic => analytic_omega_dot(&frames[j], &parts[j].mu_dot),
            DerivativeSource::FiniteDifference => parity_derivative(&omegas, j, dt),
        });

        let samples = frames
            .into_iter()
            .zip(hamiltonians)
            .zip(parts)
            .zip(omega_dots)
            .enumerate()
            .map(|(j, (((frame, hamiltonian), p), omega_dot))| {
                let generator = generator_from_inverse(&hamiltonian, &p.omega_inv, &omega_dot);
                DressingMap {
                    t: time(j),
                    hamiltonian,
                    frame,
                    mu: p.mu,
                    mu_dot: p.mu_dot,
                    omega: p.omega,
                    omega_inv: p.omega_inv,
                    omega_dot,
                    theta: p.theta,
                    theta_source: source,
                    metric: p.metric,
                    generator,
                }
            })
            .collect();

        Ok(DressingTrack {
            t0,
            t1,
            steps,
            mode: source,
            samples,
            warnings,
        })
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.steps as f64
    }

    /// Output-grid sample `k`.
    pub fn grid(&self, k: usize) -> &DressingMap {
        &self.samples[2 * k]
    }

    /// Midpoint sample between grid points `k` and `k + 1`.
    pub fn midpoint(&self, k: usize) -> &DressingMap {
        &self.samples[2 * k + 1]
    }

    pub fn grid_len(&self) -> usize {
        self.steps + 1
    }

    /// `Ω̇` at half-step sample `j` in the requested mode, independently of
    /// the mode the track was built with.
    pub fn omega_dot_at(&self, j: usize, mode: OmegaDotMode) -> Result<CMatrix> {
        match mode {
            OmegaDotMode::AnalyticMuOnly => {
                let sample = &self.samples[j];
                Ok(analytic_omega_dot(&sample.frame, &sample.mu_dot))
            }
            OmegaDotMode::FiniteDifference => {
                let omegas: Vec<&CMatrix> = self.samples.iter().map(|s| &s.omega).collect();
                Ok(parity_derivative(&omegas, j, self.dt()))
            }
            OmegaDotMode::Auto => Ok(self.samples[j].omega_dot.clone()),
        }
    }
}

/// Rows `μ̇ₙ ⟨⟨n|`; exact when the frame does not move.
fn analytic_omega_dot(frame: &BiorthogonalFrame, mu_dot: &[Complex64]) -> CMatrix {
    let rows: Vec<_> = frame
        .left_bras
        .iter()
        .zip(mu_dot)
        .map(|(l, &m)| l * m)
        .collect();
    CMatrix::from_rows(&rows)
}

fn parity_derivative(omegas: &[&CMatrix], j: usize, dt: f64) -> CMatrix {
    let same_parity: Vec<&CMatrix> = omegas.iter().skip(j % 2).step_by(2).copied().collect();
    five_point_derivative(&same_parity, j / 2, dt)
}
