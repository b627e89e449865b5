//! Biorthogonal eigensystems of non-Hermitian matrices.
//!
//! For a diagonalizable `H` the right kets `|n⟩` and left bras `⟨⟨n|` satisfy
//!
//! ```text
//! H|n⟩ = Eₙ|n⟩,   ⟨⟨n|H = Eₙ⟨⟨n|,   ⟨⟨m|n⟩ = δₘₙ,   Σₙ |n⟩⟨⟨n| = I.
//! ```
//!
//! Gauge: every right ket has unit 2-norm and a designated pivot component
//! that is real and positive. [`eig_biorthogonal`] picks the pivot as the
//! largest-magnitude component; [`track_continuity`] keeps the pivots of the
//! previous frame, so a tracked sequence of frames uses one fixed pivot per
//! level and varies smoothly in `t`.

use nalgebra::RowDVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inverse, max_norm, CMatrix, CVector};

/// Smallest admissible overlap between unit left and right eigenvectors.
pub const OVERLAP_THRESHOLD: f64 = 1e-8;
/// Largest admissible `|Im Eₙ|` under [`RealityPolicy::Assert`].
pub const REALITY_TOLERANCE: f64 = 1e-10;
/// Minimum separation between the best and second-best matching candidate.
pub const MATCH_GAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RealityPolicy {
    #[default]
    Assert,
    Report,
}

#[derive(Debug, Clone)]
pub struct BiorthogonalFrame {
    pub t: f64,
    pub energies: Vec<Complex64>,
    pub right_kets: Vec<CVector>,
    pub left_bras: Vec<RowDVector<Complex64>>,
    /// `|⟨l̂ₙ|r̂ₙ⟩|` for unit-normalized left and right eigenvectors, i.e. the
    /// inverse eigenvalue condition number.
    pub raw_overlaps: Vec<f64>,
    /// Index of the real-positive component of each right ket.
    pub pivots: Vec<usize>,
}

impl BiorthogonalFrame {
    pub fn dimension(&self) -> usize {
        self.energies.len()
    }

    /// Right kets as matrix columns.
    pub fn right_matrix(&self) -> CMatrix {
        CMatrix::from_columns(&self.right_kets)
    }

    /// Left bras as matrix rows.
    pub fn left_matrix(&self) -> CMatrix {
        CMatrix::from_rows(&self.left_bras)
    }

    /// `Σₙ |n⟩ Eₙ ⟨⟨n|`
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.dimension();
        let mut h = CMatrix::zeros(n, n);
        for k in 0..n {
            h += &self.right_kets[k] * (&self.left_bras[k] * self.energies[k]);
        }
        h
    }

    /// `max |⟨⟨m|n⟩ − δₘₙ|`
    pub fn biorthonormality_residual(&self) -> f64 {
        let n = self.dimension();
        max_norm(&(self.left_matrix() * self.right_matrix() - CMatrix::identity(n, n)))
    }

    /// `max |Σₙ |n⟩⟨⟨n| − I|`
    pub fn completeness_residual(&self) -> f64 {
        let n = self.dimension();
        max_norm(&(self.right_matrix() * self.left_matrix() - CMatrix::identity(n, n)))
    }

    /// Largest right or left eigen-equation residual against `h`.
    pub fn eigen_residual(&self, h: &CMatrix) -> f64 {
        (0..self.dimension())
            .map(|k| {
                let e = self.energies[k];
                let r = h * &self.right_kets[k] - &self.right_kets[k] * e;
                let l = &self.left_bras[k] * h - &self.left_bras[k] * e;
                r.camax().max(l.camax())
            })
            .fold(0.0, f64::max)
    }

    pub fn max_imag_energy(&self) -> f64 {
        self.energies.iter().fold(0.0, |m, e| m.max(e.im.abs()))
    }

    pub fn min_raw_overlap(&self) -> f64 {
        self.raw_overlaps
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Right eigenvectors of an upper-triangular matrix by back substitution.
fn triangular_right_eigenvectors(t: &CMatrix) -> Vec<CVector> {
    let n = t.nrows();
    let small = f64::EPSILON * max_norm(t).max(f64::MIN_POSITIVE);
    (0..n)
        .map(|k| {
            let lambda = t[(k, k)];
            let mut x = CVector::zeros(n);
            x[k] = Complex64::new(1.0, 0.0);
            for i in (0..k).rev() {
                let mut s = Complex64::new(0.0, 0.0);
                for j in i + 1..=k {
                    s += t[(i, j)] * x[j];
                }
                let mut den = t[(i, i)] - lambda;
                if den.norm() < small {
                    den = Complex64::new(small, 0.0);
                }
                x[i] = -s / den;
            }
            x
        })
        .collect()
}

fn pivot_index(v: &CVector) -> usize {
    let max = v.camax();
    v.iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-9))
        .unwrap_or(0)
}

/// Biorthonormal eigensystem of a complex square matrix.
///
/// Eigenpairs are ordered by `(Re Eₙ, Im Eₙ)`. Fails with
/// [`Error::ExceptionalPoint`] when the matrix is (numerically) defective and
/// with [`Error::ComplexSpectrum`] when `policy` is `Assert` and some energy
/// has `|Im Eₙ| ≥ 1e−10`.
pub fn eig_biorthogonal(h: &CMatrix, t: f64, policy: RealityPolicy) -> Result<BiorthogonalFrame> {
    let n = h.nrows();
    assert_eq!(n, h.ncols(), "eig_biorthogonal needs a square matrix");
    if !crate::linalg::is_finite(h) {
        return Err(Error::NonFinite { t });
    }
    let schur = nalgebra::linalg::Schur::try_new(h.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Singular(format!("Schur iteration failed at t = {t}")))?;
    let (q, tri) = schur.unpack();

    let mut pairs: Vec<(Complex64, CVector)> = triangular_right_eigenvectors(&tri)
        .into_iter()
        .enumerate()
        .map(|(k, x)| {
            let v = &q * x;
            let norm = v.norm();
            (tri[(k, k)], v / Complex64::new(norm, 0.0))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));

    let energies: Vec<Complex64> = pairs.iter().map(|p| p.0).collect();
    let mut right_kets: Vec<CVector> = pairs.into_iter().map(|p| p.1).collect();

    let r = CMatrix::from_columns(&right_kets);
    let r_inv = inverse(&r, "eigenvector matrix").map_err(|_| Error::ExceptionalPoint {
        t,
        level: 0,
        overlap: 0.0,
    })?;
    let mut left_bras: Vec<RowDVector<Complex64>> =
        (0..n).map(|k| r_inv.row(k).into_owned()).collect();

    let raw_overlaps: Vec<f64> = left_bras.iter().map(|l| 1.0 / l.norm()).collect();
    if let Some((level, &overlap)) = raw_overlaps
        .iter()
        .enumerate()
        .find(|(_, &o)| !(o >= OVERLAP_THRESHOLD))
    {
        return Err(Error::ExceptionalPoint { t, level, overlap });
    }

    let mut pivots = Vec::with_capacity(n);
    for k in 0..n {
        let p = pivot_index(&right_kets[k]);
        let z = right_kets[k][p];
        let phase = z / z.norm();
        right_kets[k] /= phase;
        left_bras[k] *= phase;
        pivots.push(p);
    }

    let frame = BiorthogonalFrame {
        t,
        energies,
        right_kets,
        left_bras,
        raw_overlaps,
        pivots,
    };
    if policy == RealityPolicy::Assert {
        let max_imag = frame.max_imag_energy();
        if max_imag >= REALITY_TOLERANCE {
            return Err(Error::ComplexSpectrum { t, max_imag });
        }
    }
    Ok(frame)
}

/// Reorders and re-phases `cur` to continue `prev` smoothly.
///
/// Level `i` of the result is the eigenpair of `cur` with the largest
/// `|⟨⟨iₚᵣₑᵥ|j_cur⟩|`. The phase of each ket is fixed on the pivot component
/// inherited from `prev`, which leaves `⟨⟨iₚᵣₑᵥ|i⟩` with positive real part for
/// neighbouring frames.
pub fn track_continuity(
    prev: &BiorthogonalFrame,
    cur: &BiorthogonalFrame,
) -> Result<BiorthogonalFrame> {
    let n = prev.dimension();
    if cur.dimension() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: cur.dimension(),
            context: "frames being tracked".into(),
        });
    }
    let ambiguous = |reason: String| Error::AmbiguousMatching { t: cur.t, reason };

    let mut perm = Vec::with_capacity(n);
    for i in 0..n {
        let mut scores: Vec<(usize, f64)> = (0..n)
            .map(|j| (j, (&prev.left_bras[i] * &cur.right_kets[j])[0].norm()))
            .collect();
        scores.sort_by(|a, b| b.1.total_cmp(&a.1));
        if n > 1 && scores[0].1 - scores[1].1 < MATCH_GAP {
            return Err(ambiguous(format!(
                "level {i} overlaps {:.3e} and {:.3e} are indistinguishable",
                scores[0].1, scores[1].1
            )));
        }
        perm.push(scores[0].0);
    }
    let mut seen = vec![false; n];
    for &j in &perm {
        if std::mem::replace(&mut seen[j], true) {
            return Err(ambiguous(format!("eigenpair {j} matched twice")));
        }
    }

    let mut energies = Vec::with_capacity(n);
    let mut right_kets = Vec::with_capacity(n);
    let mut left_bras = Vec::with_capacity(n);
    let mut raw_overlaps = Vec::with_capacity(n);
    for (i, &j) in perm.iter().enumerate() {
        let mut r = cur.right_kets[j].clone();
        let mut l = cur.left_bras[j].clone();
        let p = prev.pivots[i];
        let (target, current) = (prev.right_kets[i][p], r[p]);
        if current.norm() > f64::EPSILON && target.norm() > f64::EPSILON {
            let z = (target / target.norm()) / (current / current.norm());
            r *= z;
            l *= z.conj();
        }
        let overlap = (&prev.left_bras[i] * &r)[0];
        if overlap.re <= 0.0 && overlap.norm() > 0.0 {
            let z = overlap.conj() / overlap.norm();
            r *= z;
            l *= z.conj();
        }
        let norm = (&l * &r)[0];
        l /= norm;
        energies.push(cur.energies[j]);
        right_kets.push(r);
        left_bras.push(l);
        raw_overlaps.push(cur.raw_overlaps[j]);
    }
    Ok(BiorthogonalFrame {
        t: cur.t,
        energies,
        right_kets,
        left_bras,
        raw_overlaps,
        pivots: prev.pivots.clone(),
    })
}
