//! Global attitude determination from vector measurements.
//!
//! Given inertial directions `E`, body-frame measurements `B̃` and positive
//! weights `W`, the weighted least-squares cost
//!
//! ```text
//! J₀(Ĉ) = ½ ⟨E − ĈB̃, (E − ĈB̃) W⟩
//! ```
//!
//! is stationary on SO(3) exactly when `ĈᵀL` is symmetric, with
//! `L = E W B̃ᵀ`. Its minimizer is `Ĉ = S L` where `S` is the symmetric
//! positive-definite matrix obtained from the QR factorization `L = Q R`
//! (`Q` proper) as `S = Q √((R Rᵀ)⁻¹) Qᵀ`.

use nalgebra::{DVector, Matrix3, Matrix3xX, Vector3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::so3::{exp_so3, trace_inner, RotationMatrix, SkewMatrix, SymmetricPd};

/// Minimum ratio between the third and first singular value of a vector set.
pub const RANK_RATIO_TOL: f64 = 1e-6;
/// Column-norm tolerance for sets flagged as unit vectors.
pub const UNIT_NORM_TOL: f64 = 1e-6;
/// `|det L|` must exceed this multiple of `‖L‖_F³`.
pub const SINGULAR_DET_TOL: f64 = 1e-12;
/// Eigenvalues of `RRᵀ` below this fraction of the largest are rejected.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// A 3×n set of direction vectors, stored column-wise. Always rank 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct VectorSet {
    columns: Matrix3xX<f64>,
}

impl VectorSet {
    pub fn new(columns: Matrix3xX<f64>) -> Result<Self> {
        if !columns.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite { what: "vector set" });
        }
        let n = columns.ncols();
        if n < 3 {
            return Err(Error::SingularProfile {
                reason: format!("{n} vectors cannot determine an attitude (rank 3 needed)"),
            });
        }
        let sv = columns.singular_values();
        let (max, min) = sv
            .iter()
            .fold((0.0_f64, f64::INFINITY), |(hi, lo), s| (hi.max(*s), lo.min(*s)));
        if !(max > 0.0) || min < RANK_RATIO_TOL * max {
            return Err(Error::SingularProfile {
                reason: format!("vector set is rank deficient (singular values {:?})", sv.as_slice()),
            });
        }
        Ok(Self { columns })
    }

    /// Like [`VectorSet::new`], additionally requiring unit columns.
    pub fn unit(columns: Matrix3xX<f64>) -> Result<Self> {
        for (index, c) in columns.column_iter().enumerate() {
            let norm = c.norm();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::NotUnitVector { index, norm });
            }
        }
        Self::new(columns)
    }

    pub fn from_columns(cols: &[Vector3<f64>]) -> Result<Self> {
        Self::new(Matrix3xX::from_columns(cols))
    }

    /// Parses `3n` row-major numbers: first row, then second, then third.
    pub fn from_row_major(data: &[f64]) -> Result<Self> {
        if data.is_empty() || data.len() % 3 != 0 {
            return Err(Error::ShapeMismatch {
                expected: "3×n row-major entries".into(),
                found: format!("{} entries", data.len()),
            });
        }
        Self::new(Matrix3xX::from_row_slice(data))
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = Vec::with_capacity(3 * n);
        for r in 0..3 {
            out.extend((0..n).map(|c| self.columns[(r, c)]));
        }
        out
    }

    pub fn columns(&self) -> &Matrix3xX<f64> {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rotates every column: returns `C · columns`.
    pub fn rotated(&self, c: &RotationMatrix) -> Self {
        Self {
            columns: c.matrix() * &self.columns,
        }
    }
}

impl TryFrom<Vec<f64>> for VectorSet {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::from_row_major(&v)
    }
}

impl From<VectorSet> for Vec<f64> {
    fn from(v: VectorSet) -> Self {
        v.to_row_major()
    }
}

/// Positive diagonal weights `W = diag(wᵢ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightMatrix {
    diagonal: DVector<f64>,
}

impl WeightMatrix {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights {
                reason: "no weights".into(),
            });
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidWeights {
                reason: format!("weight {i} = {} is not positive", weights[i]),
            });
        }
        Ok(Self {
            diagonal: DVector::from_vec(weights),
        })
    }

    pub fn uniform(n: usize, w: f64) -> Result<Self> {
        Self::new(vec![w; n])
    }

    pub fn identity(n: usize) -> Self {
        Self {
            diagonal: DVector::from_element(n, 1.0),
        }
    }

    pub fn diagonal(&self) -> &DVector<f64> {
        &self.diagonal
    }

    pub fn len(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonal.is_empty()
    }

    pub fn scaled(&self, a: f64) -> Result<Self> {
        Self::new(self.diagonal.iter().map(|w| w * a).collect())
    }
}

impl TryFrom<Vec<f64>> for WeightMatrix {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<WeightMatrix> for Vec<f64> {
    fn from(w: WeightMatrix) -> Self {
        w.diagonal.iter().copied().collect()
    }
}

/// The attitude profile matrix `L`, checked nonsingular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeProfile {
    l: Matrix3<f64>,
    det: f64,
}

impl AttitudeProfile {
    pub fn new(l: Matrix3<f64>) -> Result<Self> {
        if !l.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite {
                what: "attitude profile",
            });
        }
        let det = l.determinant();
        let scale = l.norm();
        if !(det.abs() > SINGULAR_DET_TOL * scale * scale * scale) {
            return Err(Error::SingularProfile {
                reason: format!("det(L) = {det:e} with ‖L‖ = {scale:e}"),
            });
        }
        Ok(Self { l, det })
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.l
    }

    pub fn det(&self) -> f64 {
        self.det
    }
}

fn check_pair(e: &VectorSet, w: &WeightMatrix, b: &VectorSet) -> Result<()> {
    if e.len() != b.len() || w.len() != e.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} inertial vectors, measurements and weights", e.len()),
            found: format!("{} measurements, {} weights", b.len(), w.len()),
        });
    }
    Ok(())
}

/// Weighted sum of outer products, `E W Bᵀ`, without the singularity check.
pub(crate) fn weighted_outer(e: &VectorSet, w: &WeightMatrix, b: &VectorSet) -> Result<Matrix3<f64>> {
    check_pair(e, w, b)?;
    Ok(weighted_columns(e.columns(), w) * b.columns().transpose())
}

/// `L = E W B̃ᵀ`.
pub fn build_profile(e: &VectorSet, w: &WeightMatrix, b: &VectorSet) -> Result<AttitudeProfile> {
    AttitudeProfile::new(weighted_outer(e, w, b)?)
}

/// Optimal attitude and its symmetric factor, `Ĉ = S L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeSolution {
    pub c_hat: RotationMatrix,
    pub s: SymmetricPd,
}

/// QR factorization with the orthogonal factor forced into SO(3).
fn proper_qr(l: &Matrix3<f64>) -> (Matrix3<f64>, Matrix3<f64>) {
    let qr = l.qr();
    let mut q = qr.q();
    let mut r = qr.r();
    if q.determinant() < 0.0 {
        q.column_mut(2).neg_mut();
        r.row_mut(2).neg_mut();
    }
    (q, r)
}

/// Principal inverse square root of a symmetric positive-definite matrix.
fn inverse_sqrt_spd(m: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let eig = m.symmetric_eigen();
    let max = eig.eigenvalues.max();
    if !(max > 0.0) || eig.eigenvalues.iter().any(|l| *l <= EIGEN_FLOOR * max) {
        return Err(Error::SingularProfile {
            reason: format!("RRᵀ eigenvalues {:?} are not well separated from zero", eig.eigenvalues.as_slice()),
        });
    }
    let d = Matrix3::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Ok(eig.eigenvectors * d * eig.eigenvectors.transpose())
}

/// Solves for the unique minimizing attitude `Ĉ = S L`.
///
/// Requires `det L > 0`; a non-positive determinant is reported as
/// [`Error::ReflectionProfile`] instead of returning an improper matrix.
pub fn solve_attitude(profile: &AttitudeProfile) -> Result<AttitudeSolution> {
    if profile.det() <= 0.0 {
        return Err(Error::ReflectionProfile { det: profile.det() });
    }
    let l = profile.matrix();
    let (q, r) = proper_qr(l);
    let root = inverse_sqrt_spd(&(r * r.transpose()))?;
    let s = q * root * q.transpose();
    let s = (s + s.transpose()) * 0.5;
    let c_hat = s * l;
    let c_hat = RotationMatrix::new(c_hat).map_err(|e| Error::SingularProfile {
        reason: format!("profile too ill-conditioned for an accurate solution ({e})"),
    })?;
    Ok(AttitudeSolution {
        c_hat,
        s: SymmetricPd::new(s)?,
    })
}

/// Nearest proper rotation from the SVD `L = UΣVᵀ`:
/// `U diag(1, 1, det(UVᵀ)) Vᵀ`. Used only as an opt-in fallback when
/// `det L ≤ 0`.
pub fn procrustes_rotation(l: &Matrix3<f64>) -> Result<RotationMatrix> {
    let svd = l.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => {
            return Err(Error::SingularProfile {
                reason: "SVD did not converge".into(),
            })
        }
    };
    let d = (u * v_t).determinant().signum();
    let c = u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * v_t;
    RotationMatrix::new(c)
}

/// [`solve_attitude`] with the SVD fallback for non-positive `det L`.
pub fn solve_attitude_or_procrustes(profile: &AttitudeProfile) -> Result<RotationMatrix> {
    match solve_attitude(profile) {
        Ok(sol) => Ok(sol.c_hat),
        Err(Error::ReflectionProfile { .. }) => procrustes_rotation(profile.matrix()),
        Err(e) => Err(e),
    }
}

/// `max |ĈᵀL − LᵀĈ|`; zero at a stationary point.
pub fn stationarity_residual(c_hat: &RotationMatrix, l: &Matrix3<f64>) -> f64 {
    let m = c_hat.matrix().transpose() * l;
    (m - m.transpose()).amax()
}

/// Residual directions `E − ĈB̃`.
pub fn residual(c_hat: &RotationMatrix, e: &VectorSet, b: &VectorSet) -> Result<Matrix3xX<f64>> {
    if e.len() != b.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} columns", e.len()),
            found: format!("{} columns", b.len()),
        });
    }
    Ok(e.columns() - c_hat.matrix() * b.columns())
}

/// Weighted least-squares cost `J₀ = ½⟨E − ĈB̃, (E − ĈB̃)W⟩`.
pub fn cost_j0(c_hat: &RotationMatrix, e: &VectorSet, b: &VectorSet, w: &WeightMatrix) -> Result<f64> {
    check_pair(e, w, b)?;
    let r = residual(c_hat, e, b)?;
    Ok(0.5 * trace_inner(&r, &weighted_columns(&r, w))?)
}

fn weighted_columns(r: &Matrix3xX<f64>, w: &WeightMatrix) -> Matrix3xX<f64> {
    let mut out = r.clone();
    for (mut col, wi) in out.column_iter_mut().zip(w.diagonal().iter()) {
        col *= *wi;
    }
    out
}

/// Probes the cost along `Ĉ exp(±ε U)` for each given direction `U`.
/// Returns `false` as soon as a probe lowers the cost by more than `1e-12`.
pub fn check_local_minimality_along(
    c_hat: &RotationMatrix,
    e: &VectorSet,
    b: &VectorSet,
    w: &WeightMatrix,
    directions: &[Vector3<f64>],
    eps: f64,
) -> Result<bool> {
    let base = cost_j0(c_hat, e, b, w)?;
    for dir in directions {
        for sign in [1.0, -1.0] {
            let step = exp_so3(&SkewMatrix::from_vector(&(dir * (sign * eps))));
            if cost_j0(&c_hat.compose(&step), e, b, w)? < base - 1e-12 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Second-order check of a candidate optimum using `n_probes` random unit
/// tangent directions at step `eps`.
pub fn check_local_minimality<R: Rng + ?Sized>(
    c_hat: &RotationMatrix,
    e: &VectorSet,
    b: &VectorSet,
    w: &WeightMatrix,
    n_probes: usize,
    eps: f64,
    rng: &mut R,
) -> Result<bool> {
    let directions: Vec<Vector3<f64>> = (0..n_probes)
        .map(|_| {
            let v = Vector3::<f64>::from_fn(|_, _| StandardNormal.sample(rng));
            v / v.norm()
        })
        .collect();
    check_local_minimality_along(c_hat, e, b, w, &directions, eps)
}
