//! Built-in Hamiltonian families, observables and their time dependence.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, max_norm, CMatrix, I};
use crate::schedule::{Scalar, ScheduleSpec};

/// Upper bound on the condition number of the seeded similarity transform.
pub const SIMILARITY_COND_LIMIT: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `[[e1, c], [0, e2]]`
    Triangular2,
    /// `[[iγ, s], [s, −iγ]]`, real spectrum `±√(s² − γ²)` for `|γ| < s`.
    Pt2,
    /// `S·diag(e1..eN)·S⁻¹` with a seeded, well-conditioned `S`.
    SimilarityRand,
    /// `p² + i g x³` truncated to the lowest `N` oscillator states.
    CubicTrunc,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Triangular2 => "triangular2",
            Family::Pt2 => "pt2",
            Family::SimilarityRand => "similarity-rand",
            Family::CubicTrunc => "cubic-trunc",
        }
    }

    fn required_params(self, dimension: usize) -> Vec<String> {
        match self {
            Family::Triangular2 => vec!["e1".into(), "e2".into(), "c".into()],
            Family::Pt2 => vec!["gamma".into(), "s".into()],
            Family::SimilarityRand => (1..=dimension).map(|k| format!("e{k}")).collect(),
            Family::CubicTrunc => vec!["g".into()],
        }
    }

    /// Parameters that may carry a complex value.
    fn complex_params(self) -> &'static [&'static str] {
        match self {
            Family::Triangular2 => &["c"],
            _ => &[],
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "triangular2" => Ok(Family::Triangular2),
            "pt2" => Ok(Family::Pt2),
            "similarity-rand" => Ok(Family::SimilarityRand),
            "cubic-trunc" => Ok(Family::CubicTrunc),
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }
}

/// Complex matrix written as a list of rows of scalars.
pub type MatrixRows = Vec<Vec<Scalar>>;

pub fn matrix_from_rows(rows: &MatrixRows, n: usize, key: &str) -> Result<CMatrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rows.len(),
            context: format!("matrix `{key}` must be {n}x{n}"),
        });
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j].0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FrameRule {
    /// `|k⟩⟨⟨k|`
    Projector { level: usize },
    /// `f(t)·Ω⁻¹(t) X Ω(t)` for a Hermitian seed `X`.
    Dressed {
        seed: MatrixRows,
        #[serde(default)]
        scale: Option<ScheduleSpec>,
    },
    /// `Θ⁻¹(t) X` for a Hermitian seed `X`.
    MetricInverse { seed: MatrixRows },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum ObservableSource {
    HamiltonianItself,
    UserMatrix { matrix: MatrixRows },
    FunctionOfFrame { rule: FrameRule },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSpec {
    pub name: String,
    #[serde(flatten)]
    pub source: ObservableSource,
}

impl ObservableSpec {
    fn validate(&self, n: usize) -> Result<()> {
        let key = format!("observables.{}", self.name);
        let hermitian_seed = |rows: &MatrixRows| -> Result<()> {
            let x = matrix_from_rows(rows, n, &key)?;
            if max_norm(&(&x - x.adjoint())) > 1e-12 {
                return Err(Error::invalid(&key, "seed matrix must be Hermitian"));
            }
            Ok(())
        };
        match &self.source {
            ObservableSource::HamiltonianItself => Ok(()),
            ObservableSource::UserMatrix { matrix } => {
                matrix_from_rows(matrix, n, &key).map(|_| ())
            }
            ObservableSource::FunctionOfFrame { rule } => match rule {
                FrameRule::Projector { level } if *level >= n => Err(Error::invalid(
                    &key,
                    format!("projector level {level} >= {n}"),
                )),
                FrameRule::Projector { .. } => Ok(()),
                FrameRule::Dressed { seed, scale } => {
                    if let Some(s) = scale {
                        s.validate_finite(&key)?;
                    }
                    hermitian_seed(seed)
                }
                FrameRule::MetricInverse { seed } => hermitian_seed(seed),
            },
        }
    }
}

/// A validated, parametrized Hamiltonian family.
#[derive(Debug, Clone)]
pub struct HamiltonianModel {
    dimension: usize,
    family: Family,
    params: BTreeMap<String, Complex64>,
    schedules: BTreeMap<String, ScheduleSpec>,
    observables: Vec<ObservableSpec>,
    seed: u64,
    similarity: Option<(CMatrix, CMatrix)>,
}

impl HamiltonianModel {
    /// Validates the description at `t0` and precomputes any fixed data.
    pub fn new(
        dimension: usize,
        family: Family,
        params: BTreeMap<String, Complex64>,
        schedules: BTreeMap<String, ScheduleSpec>,
        observables: Vec<ObservableSpec>,
        seed: u64,
        t0: f64,
    ) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::Model(format!(
                "dimension must be >= 2, got {dimension}"
            )));
        }
        if matches!(family, Family::Triangular2 | Family::Pt2) && dimension != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: dimension,
                context: format!("family `{family}` is 2x2"),
            });
        }
        for name in family.required_params(dimension) {
            if !params.contains_key(&name) {
                return Err(Error::MissingKey(format!("model.params.{name}")));
            }
        }
        for (name, schedule) in &schedules {
            if !params.contains_key(name) {
                return Err(Error::Model(format!(
                    "schedule references unknown parameter `{name}`"
                )));
            }
            schedule.validate_finite(&format!("model.schedules.{name}"))?;
        }
        let complex_ok = family.complex_params();
        for (name, value) in &params {
            let scheduled_complex = schedules.get(name).is_some_and(|s| s.has_imaginary_part());
            if (value.im != 0.0 || scheduled_complex) && !complex_ok.contains(&name.as_str()) {
                return Err(Error::Model(format!("parameter `{name}` must be real")));
            }
        }
        let mut observable_names = std::collections::BTreeSet::new();
        for obs in &observables {
            if !observable_names.insert(obs.name.as_str()) {
                return Err(Error::Model(format!("duplicate observable `{}`", obs.name)));
            }
            obs.validate(dimension)?;
        }

        let mut model = HamiltonianModel {
            dimension,
            family,
            params,
            schedules,
            observables,
            seed,
            similarity: None,
        };
        model.check_domain(t0)?;
        if family == Family::SimilarityRand {
            model.similarity = Some(seeded_similarity(dimension, seed)?);
        }
        Ok(model)
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        match self.family {
            Family::Triangular2 => Ok(()),
            Family::Pt2 => {
                let gamma = self.real_param("gamma", t);
                let s = self.real_param("s", t);
                if s <= 0.0 {
                    return Err(Error::Model(format!("pt2 requires s > 0, got {s}")));
                }
                if gamma.abs() >= s {
                    return Err(Error::Model(format!(
                        "pt2 requires |gamma| < s at t0 for a real spectrum (gamma = {gamma}, s = {s})"
                    )));
                }
                Ok(())
            }
            Family::SimilarityRand => {
                let mut e = self.energies(t);
                e.sort_by(f64::total_cmp);
                if e.windows(2).any(|w| (w[1] - w[0]).abs() < 1e-8) {
                    return Err(Error::Model(
                        "similarity-rand requires distinct energies".into(),
                    ));
                }
                Ok(())
            }
            Family::CubicTrunc => {
                let g = self.real_param("g", t);
                if g <= 0.0 {
                    return Err(Error::Model(format!("cubic-trunc requires g > 0, got {g}")));
                }
                Ok(())
            }
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn observables(&self) -> &[ObservableSpec] {
        &self.observables
    }

    pub fn schedules(&self) -> &BTreeMap<String, ScheduleSpec> {
        &self.schedules
    }

    /// True when some parameter carries a non-constant schedule.
    pub fn is_time_dependent(&self) -> bool {
        self.schedules.values().any(|s| !s.is_constant())
    }

    pub fn param(&self, name: &str, t: f64) -> Complex64 {
        match self.schedules.get(name) {
            Some(s) => s.eval(t),
            None => self.params[name],
        }
    }

    fn real_param(&self, name: &str, t: f64) -> f64 {
        self.param(name, t).re
    }

    fn energies(&self, t: f64) -> Vec<f64> {
        (1..=self.dimension)
            .map(|k| self.real_param(&format!("e{k}"), t))
            .collect()
    }

    /// The similarity transform `S` and its inverse (family `similarity-rand` only).
    pub fn similarity(&self) -> Option<&(CMatrix, CMatrix)> {
        self.similarity.as_ref()
    }

    /// `H(t)` for the model's family.
    pub fn build_hamiltonian(&self, t: f64) -> Result<CMatrix> {
        if !t.is_finite() {
            return Err(Error::invalid("t", "time must be finite"));
        }
        let h = match self.family {
            Family::Triangular2 => {
                let e1 = self.real_param("e1", t);
                let e2 = self.real_param("e2", t);
                let coupling = self.param("c", t);
                CMatrix::from_row_slice(2, 2, &[c(e1, 0.0), coupling, c(0.0, 0.0), c(e2, 0.0)])
            }
            Family::Pt2 => {
                let gamma = self.real_param("gamma", t);
                let s = c(self.real_param("s", t), 0.0);
                CMatrix::from_row_slice(2, 2, &[I * gamma, s, s, -I * gamma])
            }
            Family::SimilarityRand => {
                let (s, s_inv) = self
                    .similarity
                    .as_ref()
                    .expect("similarity transform built at validation");
                let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    self.dimension,
                    self.energies(t).into_iter().map(|e| c(e, 0.0)),
                ));
                s * diag * s_inv
            }
            Family::CubicTrunc => cubic_oscillator(self.dimension, self.real_param("g", t)),
        };
        if !crate::linalg::is_finite(&h) {
            return Err(Error::NonFinite { t });
        }
        Ok(h)
    }
}

/// Truncation of `p² + i g x³` to the lowest `n` harmonic-oscillator states,
/// with `x = (a + a†)/√2` and `p = i(a† − a)/√2`.
///
/// Products are formed in a basis three states larger than `n` so the kept
/// block carries exact matrix elements of `p²` and `x³`.
pub fn cubic_oscillator(n: usize, g: f64) -> CMatrix {
    let m = n + 3;
    let a = DMatrix::<f64>::from_fn(
        m,
        m,
        |i, j| {
            if j == i + 1 {
                (j as f64).sqrt()
            } else {
                0.0
            }
        },
    );
    let x = (&a + a.transpose()) / std::f64::consts::SQRT_2;
    // p² = −(a† − a)²/2
    let d = a.transpose() - &a;
    let p2 = -(&d * &d) / 2.0;
    let x3 = &x * &x * &x;
    CMatrix::from_fn(n, n, |i, j| c(p2[(i, j)], g * x3[(i, j)]))
}

fn seeded_similarity(n: usize, seed: u64) -> Result<(CMatrix, CMatrix)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 0.5 / (n as f64).sqrt();
    for _ in 0..1000 {
        let s = CMatrix::from_fn(n, n, |i, j| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let diag = if i == j { 1.0 } else { 0.0 };
            c(diag + scale * re, scale * im)
        });
        let sv = s.clone().svd(false, false).singular_values;
        let (max, min) = sv.iter().fold((0.0_f64, f64::INFINITY), |(hi, lo), &v| {
            (hi.max(v), lo.min(v))
        });
        if min > 0.0 && max / min < SIMILARITY_COND_LIMIT {
            let s_inv = crate::linalg::inverse(&s, "similarity transform")?;
            return Ok((s, s_inv));
        }
    }
    Err(Error::Model(
        "could not draw a well-conditioned similarity transform".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigenvalues, sort_complex};

    fn params(entries: &[(&str, f64)]) -> BTreeMap<String, Complex64> {
        entries
            .iter()
            .map(|(k, v)| (k.to_string(), c(*v, 0.0)))
            .collect()
    }

    fn model(family: Family, n: usize, p: &[(&str, f64)]) -> HamiltonianModel {
        HamiltonianModel::new(n, family, params(p), BTreeMap::new(), vec![], 7, 0.0).unwrap()
    }

    #[test]
    fn triangular_fixture() {
        let m = model(
            Family::Triangular2,
            2,
            &[("e1", 1.0), ("e2", 2.0), ("c", 1.0)],
        );
        let h = m.build_hamiltonian(0.0).unwrap();
        let expected = crate::linalg::real_matrix(2, 2, &[1.0, 1.0, 0.0, 2.0]);
        assert_eq!(h, expected);
    }

    #[test]
    fn pt2_at_zero_gamma_is_hermitian() {
        let m = model(Family::Pt2, 2, &[("gamma", 0.0), ("s", 1.0)]);
        let h = m.build_hamiltonian(0.0).unwrap();
        assert_eq!(h, crate::linalg::real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert_eq!(max_norm(&(&h - h.adjoint())), 0.0);
    }

    #[test]
    fn pt2_eigenvalues_are_real_below_threshold() {
        let (gamma, s) = (0.6, 1.0);
        let m = model(Family::Pt2, 2, &[("gamma", gamma), ("s", s)]);
        let mut e = eigenvalues(&m.build_hamiltonian(0.0).unwrap()).unwrap();
        sort_complex(&mut e);
        let root = (s * s - gamma * gamma).sqrt();
        assert!((e[0] - c(-root, 0.0)).norm() < 1e-10);
        assert!((e[1] - c(root, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn pt2_rejects_gamma_at_threshold() {
        let err = HamiltonianModel::new(
            2,
            Family::Pt2,
            params(&[("gamma", 1.0), ("s", 1.0)]),
            BTreeMap::new(),
            vec![],
            0,
            0.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Model(_)));
    }

    #[test]
    fn triangular_spectrum_ignores_coupling() {
        let mut schedules = BTreeMap::new();
        schedules.insert(
            "c".to_string(),
            ScheduleSpec::sinusoidal(1.0, 0.5, 3.0, 0.0),
        );
        let m = HamiltonianModel::new(
            2,
            Family::Triangular2,
            params(&[("e1", 1.0), ("e2", 2.0), ("c", 1.0)]),
            schedules,
            vec![],
            0,
            0.0,
        )
        .unwrap();
        for k in 0..10 {
            let mut e = eigenvalues(&m.build_hamiltonian(0.1 * k as f64).unwrap()).unwrap();
            sort_complex(&mut e);
            assert!((e[0].re - 1.0).abs() < 1e-14 && e[0].im.abs() < 1e-14);
            assert!((e[1].re - 2.0).abs() < 1e-14 && e[1].im.abs() < 1e-14);
        }
    }

    #[test]
    fn similarity_spectrum_matches_diagonal() {
        let energies = [0.3, -1.2, 2.5, 0.9, 1.7, -0.4];
        let p: Vec<(String, f64)> = energies
            .iter()
            .enumerate()
            .map(|(k, &e)| (format!("e{}", k + 1), e))
            .collect();
        let p: Vec<(&str, f64)> = p.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        let m = model(Family::SimilarityRand, 6, &p);
        let (s, s_inv) = m.similarity().unwrap();
        let sv = s.clone().svd(false, false).singular_values;
        assert!(sv.max() / sv.min() < SIMILARITY_COND_LIMIT);
        assert!(max_norm(&(s * s_inv - CMatrix::identity(6, 6))) < 1e-12);
        let mut e = eigenvalues(&m.build_hamiltonian(0.0).unwrap()).unwrap();
        sort_complex(&mut e);
        let mut want = energies.to_vec();
        want.sort_by(f64::total_cmp);
        for (got, want) in e.iter().zip(&want) {
            assert!((got - c(*want, 0.0)).norm() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn similarity_is_reproducible_for_a_seed() {
        let p = [("e1", 1.0), ("e2", 2.0), ("e3", 3.0)];
        let a = model(Family::SimilarityRand, 3, &p);
        let b = model(Family::SimilarityRand, 3, &p);
        assert_eq!(
            a.build_hamiltonian(0.0).unwrap(),
            b.build_hamiltonian(0.0).unwrap()
        );
    }

    /// Fock-space action of the ladder operators, independent of matrix products.
    fn ladder_element(m: usize, n: usize, ops: &[bool]) -> f64 {
        // ops applied right to left: true = a†, false = a
        let mut states: Vec<(usize, f64)> = vec![(n, 1.0)];
        for &raise in ops.iter().rev() {
            states = states
                .into_iter()
                .filter_map(|(k, amp)| {
                    if raise {
                        Some((k + 1, amp * ((k + 1) as f64).sqrt()))
                    } else if k > 0 {
                        Some((k - 1, amp * (k as f64).sqrt()))
                    } else {
                        None
                    }
                })
                .collect();
        }
        states.iter().filter(|(k, _)| *k == m).map(|(_, a)| a).sum()
    }

    fn x3_element(m: usize, n: usize) -> f64 {
        // x³ = (a + a†)³ / 2^{3/2}
        let mut total = 0.0;
        for bits in 0..8u8 {
            let ops = [bits & 1 != 0, bits & 2 != 0, bits & 4 != 0];
            total += ladder_element(m, n, &ops);
        }
        total / 2.0_f64.powf(1.5)
    }

    fn p2_element(m: usize, n: usize) -> f64 {
        // p² = −(a† − a)²/2
        let mut total = 0.0;
        for bits in 0..4u8 {
            let ops = [bits & 1 != 0, bits & 2 != 0];
            let sign = ops.iter().filter(|&&r| !r).count() % 2;
            let s = if sign == 0 { 1.0 } else { -1.0 };
            total += s * ladder_element(m, n, &ops);
        }
        -total / 2.0
    }

    #[test]
    fn cubic_matches_fock_space_algebra() {
        let g = 0.7;
        let n = 6;
        let h = cubic_oscillator(n, g);
        for i in 0..n {
            for j in 0..n {
                let want = c(p2_element(i, j), g * x3_element(i, j));
                assert!((h[(i, j)] - want).norm() < 1e-12, "({i},{j})");
            }
        }
        assert!((h[(0, 0)] - c(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn cubic_reports_reality_for_small_coupling() {
        let h = cubic_oscillator(4, 0.06);
        let e = eigenvalues(&h).unwrap();
        assert!(e.iter().all(|z| z.im.abs() < 1e-10));
    }

    #[test]
    fn unknown_family_is_rejected() {
        assert!(matches!(
            "qubit".parse::<Family>(),
            Err(Error::UnknownFamily(_))
        ));
        assert_eq!("cubic-trunc".parse::<Family>().unwrap(), Family::CubicTrunc);
    }

    #[test]
    fn schedule_must_reference_a_parameter() {
        let mut schedules = BTreeMap::new();
        schedules.insert("omega".to_string(), ScheduleSpec::constant(1.0));
        let err = HamiltonianModel::new(
            2,
            Family::Pt2,
            params(&[("gamma", 0.0), ("s", 1.0)]),
            schedules,
            vec![],
            0,
            0.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Model(_)));
    }
}
