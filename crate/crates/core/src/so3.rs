//! Rotation matrices, skew matrices and the handful of maps between them.
//!
//! Everything here works directly on 3×3 matrices. Attitudes are direction
//! cosine matrices `C` taking body-frame vectors to the inertial frame, and
//! angular velocities are skew matrices `Ω` with `Ċ = CΩ`.

use std::fmt;

use nalgebra::{Dim, Matrix, Matrix3, RawStorage, Vector3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Orthogonality and determinant tolerance for [`RotationMatrix`].
pub const ROTATION_TOL: f64 = 1e-9;
/// Tolerance on `max |X + Xᵀ|` for [`SkewMatrix`].
pub const SKEW_TOL: f64 = 1e-12;
/// Tolerance on `max |S - Sᵀ|` for [`SymmetricPd`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Below this rotation angle `exp_so3` switches to its Taylor expansion.
const EXP_TAYLOR_ANGLE: f64 = 1e-6;

fn max_abs(m: &Matrix3<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

fn ensure_finite(m: &Matrix3<f64>, what: &'static str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { what })
    }
}

fn to_row_major(m: &Matrix3<f64>) -> [f64; 9] {
    let mut out = [0.0; 9];
    for r in 0..3 {
        for c in 0..3 {
            out[3 * r + c] = m[(r, c)];
        }
    }
    out
}

/// Builds a 3×3 matrix from nine row-major entries.
pub fn matrix_from_row_major(v: &[f64; 9]) -> Matrix3<f64> {
    Matrix3::from_row_slice(v)
}

/// An element of SO(3).
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 9]", into = "[f64; 9]")]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        ensure_finite(&m, "rotation matrix")?;
        let orthogonality = max_abs(&(m.transpose() * m - Matrix3::identity()));
        let det = m.determinant();
        if orthogonality > ROTATION_TOL || (det - 1.0).abs() > ROTATION_TOL {
            return Err(Error::NotRotation { orthogonality, det });
        }
        Ok(Self(m))
    }

    /// Wraps a matrix the caller knows to be a rotation (products of
    /// rotations, exponentials, solver output).
    pub(crate) fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Self(m)
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Group product `self · other`.
    pub fn compose(&self, other: &RotationMatrix) -> Self {
        Self(self.0 * other.0)
    }

    /// `max |CᵀC − I|`.
    pub fn orthogonality_error(&self) -> f64 {
        max_abs(&(self.0.transpose() * self.0 - Matrix3::identity()))
    }
}

impl TryFrom<[f64; 9]> for RotationMatrix {
    type Error = Error;
    fn try_from(v: [f64; 9]) -> Result<Self> {
        Self::new(matrix_from_row_major(&v))
    }
}

impl From<RotationMatrix> for [f64; 9] {
    fn from(c: RotationMatrix) -> Self {
        to_row_major(&c.0)
    }
}

impl fmt::Debug for RotationMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RotationMatrix{:?}", to_row_major(&self.0))
    }
}

/// An element of so(3), stored as a matrix but always exactly skew.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 9]", into = "[f64; 9]")]
pub struct SkewMatrix(Matrix3<f64>);

impl SkewMatrix {
    /// Validates the skew invariant and stores the exactly antisymmetrized
    /// matrix.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        ensure_finite(&m, "skew matrix")?;
        let asymmetry = max_abs(&(m + m.transpose()));
        if asymmetry > SKEW_TOL {
            return Err(Error::NotSkew { asymmetry });
        }
        Ok(Self::from_vector(&vee_unchecked(&m)))
    }

    pub fn zero() -> Self {
        Self(Matrix3::zeros())
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self(hat(v))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn to_vector(&self) -> Vector3<f64> {
        vee_unchecked(&self.0)
    }

    pub fn scale(&self, a: f64) -> Self {
        Self(self.0 * a)
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

impl std::ops::Add for SkewMatrix {
    type Output = SkewMatrix;
    fn add(self, rhs: SkewMatrix) -> SkewMatrix {
        SkewMatrix(self.0 + rhs.0)
    }
}

impl std::ops::Sub for SkewMatrix {
    type Output = SkewMatrix;
    fn sub(self, rhs: SkewMatrix) -> SkewMatrix {
        SkewMatrix(self.0 - rhs.0)
    }
}

impl std::ops::Neg for SkewMatrix {
    type Output = SkewMatrix;
    fn neg(self) -> SkewMatrix {
        SkewMatrix(-self.0)
    }
}

impl TryFrom<[f64; 9]> for SkewMatrix {
    type Error = Error;
    fn try_from(v: [f64; 9]) -> Result<Self> {
        Self::new(matrix_from_row_major(&v))
    }
}

impl From<SkewMatrix> for [f64; 9] {
    fn from(x: SkewMatrix) -> Self {
        to_row_major(&x.0)
    }
}

impl fmt::Debug for SkewMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SkewMatrix{:?}", self.to_vector().as_slice())
    }
}

/// Symmetric positive-definite 3×3 matrix: inertia and design weights.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 9]", into = "[f64; 9]")]
pub struct SymmetricPd(Matrix3<f64>);

impl SymmetricPd {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        ensure_finite(&m, "symmetric matrix")?;
        let asymmetry = max_abs(&(m - m.transpose()));
        if asymmetry > SYMMETRY_TOL {
            return Err(Error::NotSymmetricPd {
                reason: format!("max |S - S^T| = {asymmetry:e}"),
            });
        }
        let sym = (m + m.transpose()) * 0.5;
        if sym.cholesky().is_none() {
            return Err(Error::NotSymmetricPd {
                reason: "not positive definite".into(),
            });
        }
        Ok(Self(sym))
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn scaled_identity(a: f64) -> Result<Self> {
        Self::new(Matrix3::identity() * a)
    }

    pub fn diagonal(d: [f64; 3]) -> Result<Self> {
        Self::new(Matrix3::from_diagonal(&Vector3::from(d)))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// `trace(S)·I − S`, the matrix that acts on `vee` coordinates the way
    /// `X ↦ SX + XS` acts on skew matrices. Positive definite whenever `S` is.
    pub fn vee_operator(&self) -> Matrix3<f64> {
        Matrix3::identity() * self.0.trace() - self.0
    }

    /// Sum of two SPD matrices is SPD.
    pub fn sum(&self, other: &SymmetricPd) -> Self {
        Self(self.0 + other.0)
    }
}

impl TryFrom<[f64; 9]> for SymmetricPd {
    type Error = Error;
    fn try_from(v: [f64; 9]) -> Result<Self> {
        Self::new(matrix_from_row_major(&v))
    }
}

impl From<SymmetricPd> for [f64; 9] {
    fn from(s: SymmetricPd) -> Self {
        to_row_major(&s.0)
    }
}

impl fmt::Debug for SymmetricPd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymmetricPd{:?}", to_row_major(&self.0))
    }
}

/// Cross-product matrix: `hat(v) w = v × w`.
pub fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

fn vee_unchecked(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// Inverse of [`hat`] for a matrix that is skew within [`SKEW_TOL`].
pub fn vee(m: &Matrix3<f64>) -> Result<Vector3<f64>> {
    Ok(SkewMatrix::new(*m)?.to_vector())
}

/// Matrix exponential of a skew matrix (Rodrigues).
pub fn exp_so3(x: &SkewMatrix) -> RotationMatrix {
    let w = x.to_vector();
    let theta = w.norm();
    let k = x.matrix();
    let k2 = k * k;
    let m = if theta < EXP_TAYLOR_ANGLE {
        Matrix3::identity() + k + k2 * 0.5
    } else {
        let half = 0.5 * theta;
        let s = half.sin() / half;
        Matrix3::identity() + k * (theta.sin() / theta) + k2 * (0.5 * s * s)
    };
    RotationMatrix::from_matrix_unchecked(m)
}

/// Trace inner product `⟨A, B⟩ = trace(AᵀB)`.
pub fn trace_inner<R, C, S1, S2>(a: &Matrix<f64, R, C, S1>, b: &Matrix<f64, R, C, S2>) -> Result<f64>
where
    R: Dim,
    C: Dim,
    S1: RawStorage<f64, R, C>,
    S2: RawStorage<f64, R, C>,
{
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?}", a.shape()),
            found: format!("{:?}", b.shape()),
        });
    }
    Ok(a.column_iter()
        .zip(b.column_iter())
        .map(|(ca, cb)| ca.dot(&cb))
        .sum())
}

/// Rotation angle of `C1ᵀC2`, in `[0, π]`.
pub fn principal_angle(c1: &RotationMatrix, c2: &RotationMatrix) -> f64 {
    let tr = (c1.matrix().transpose() * c2.matrix()).trace();
    ((tr - 1.0) * 0.5).clamp(-1.0, 1.0).acos()
}

/// Attitude error matrix `ĈᵀC − I₃`.
pub fn error_matrix(c_hat: &RotationMatrix, c_true: &RotationMatrix) -> Matrix3<f64> {
    c_hat.matrix().transpose() * c_true.matrix() - Matrix3::identity()
}

/// Haar-distributed random rotation (QR of a Gaussian matrix with the
/// sign ambiguity removed).
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> RotationMatrix {
    loop {
        let g = Matrix3::<f64>::from_fn(|_, _| StandardNormal.sample(rng));
        let qr = g.qr();
        let r = qr.r();
        if (0..3).any(|i| r[(i, i)].abs() < 1e-8) {
            continue;
        }
        let mut q = qr.q();
        for i in 0..3 {
            if r[(i, i)] < 0.0 {
                q.column_mut(i).neg_mut();
            }
        }
        if q.determinant() < 0.0 {
            q.column_mut(0).neg_mut();
        }
        return RotationMatrix::from_matrix_unchecked(q);
    }
}

/// Random vector with i.i.d. standard normal entries scaled by `scale`.
pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Vector3<f64> {
    Vector3::<f64>::from_fn(|_, _| {
        let z: f64 = StandardNormal.sample(rng);
        scale * z
    })
}
