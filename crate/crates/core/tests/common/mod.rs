// Independent reference implementations used as test oracles.
#![allow(dead_code)]

use attitude_core::wahba::{VectorSet, WeightMatrix};
use attitude_core::{RotationMatrix, SymmetricPd};
use nalgebra::{Matrix3, Matrix3xX, Matrix4, SMatrix, SVector, Vector3, Vector4};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Inertial directions of the seven-star example, rows of a 3×7 matrix.
pub const PAPER_E: [[f64; 7]; 3] = [
    [0.3817, 0.3077, 0.2324, 0.3374, 0.3161, 0.2975, 0.2807],
    [-0.5450, -0.6045, -0.5824, -0.5675, -0.6582, -0.6046, -0.5912],
    [0.7465, 0.7347, 0.7789, 0.7511, 0.6832, 0.7389, 0.7561],
];

/// Noisy body-frame measurements of the same stars.
pub const PAPER_B: [[f64; 7]; 3] = [
    [0.1287, 0.0975, 0.1580, 0.1264, 0.0210, 0.1020, 0.1249],
    [-0.9628, -0.9843, -0.9833, -0.9750, -0.9904, -0.9829, -0.9836],
    [-0.2394, -0.1517, -0.0862, -0.1904, -0.1414, -0.1404, -0.1279],
];

pub const PAPER_C_TRUE: [[f64; 3]; 3] = [
    [-0.2029, -0.1865, -0.9613],
    [0.6385, 0.7191, -0.2743],
    [0.7424, -0.6694, -0.0269],
];

pub const PAPER_C_HAT: [[f64; 3]; 3] = [
    [-0.2042, -0.1856, -0.9612],
    [0.6386, 0.7190, -0.2745],
    [0.7420, -0.6698, -0.0283],
];

pub const PAPER_SIGMA: f64 = 0.002;

pub fn rows3x7(rows: &[[f64; 7]; 3]) -> Matrix3xX<f64> {
    Matrix3xX::from_fn(7, |i, j| rows[i][j])
}

pub fn rows3x3(rows: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| rows[i][j])
}

/// The printed directions as given, without re-normalization.
pub fn paper_sets() -> (VectorSet, VectorSet) {
    (
        VectorSet::new(rows3x7(&PAPER_E)).unwrap(),
        VectorSet::new(rows3x7(&PAPER_B)).unwrap(),
    )
}

/// The printed inertial directions scaled to unit length.
pub fn paper_refs_unit() -> VectorSet {
    let mut e = rows3x7(&PAPER_E);
    for mut c in e.column_iter_mut() {
        c.normalize_mut();
    }
    VectorSet::new(e).unwrap()
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

pub fn gaussian3<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    Vector3::from_fn(|_, _| StandardNormal.sample(rng))
}

pub fn unit3<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    gaussian3(rng).normalize()
}

/// Random rotation from a random unit quaternion.
pub fn quat_rotation<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    let q = Vector4::<f64>::from_fn(|_, _| StandardNormal.sample(rng)).normalize();
    quat_to_matrix(&q)
}

/// `q = (x, y, z, w)` to the rotation it represents.
pub fn quat_to_matrix(q: &Vector4<f64>) -> Matrix3<f64> {
    let (x, y, z, w) = (q[0], q[1], q[2], q[3]);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - z * w),
        2.0 * (x * z + y * w),
        2.0 * (x * y + z * w),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - x * w),
        2.0 * (x * z - y * w),
        2.0 * (y * z + x * w),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Random SPD matrix with eigenvalues in `[lo, hi]`.
pub fn random_spd<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> Matrix3<f64> {
    let r = quat_rotation(rng);
    let d = Vector3::from_fn(|_, _| rng.random_range(lo..hi));
    r * Matrix3::from_diagonal(&d) * r.transpose()
}

pub fn spd<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> SymmetricPd {
    SymmetricPd::new(random_spd(rng, lo, hi)).unwrap()
}

pub fn random_weights<R: Rng + ?Sized>(rng: &mut R, n: usize) -> WeightMatrix {
    WeightMatrix::new((0..n).map(|_| rng.random_range(0.2..2.0)).collect()).unwrap()
}

/// `L = Σ wᵢ eᵢ bᵢᵀ`, one outer product at a time.
pub fn profile_by_outer_products(e: &Matrix3xX<f64>, w: &[f64], b: &Matrix3xX<f64>) -> Matrix3<f64> {
    let mut l = Matrix3::zeros();
    for i in 0..e.ncols() {
        l += w[i] * e.column(i) * b.column(i).transpose();
    }
    l
}

/// Nearest rotation to `L` from its SVD.
pub fn svd_procrustes(l: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = l.svd(true, true);
    let u = svd.u.unwrap();
    let v_t = svd.v_t.unwrap();
    let d = (u * v_t).determinant().signum();
    u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * v_t
}

/// Davenport's q-method: the rotation maximizing `tr(CᵀL)` from the top
/// eigenvector of the 4×4 symmetric matrix built from `L`.
pub fn davenport(l: &Matrix3<f64>) -> Matrix3<f64> {
    // maximize tr(Cᵀ L) = tr(C Lᵀ); write B = Lᵀ so the q-method's B is Σ w b eᵀ
    let b = l.transpose();
    let s = b + b.transpose();
    let sigma = b.trace();
    let z = Vector3::new(b[(1, 2)] - b[(2, 1)], b[(2, 0)] - b[(0, 2)], b[(0, 1)] - b[(1, 0)]);
    let mut k = Matrix4::zeros();
    k.fixed_view_mut::<3, 3>(0, 0).copy_from(&(s - Matrix3::identity() * sigma));
    k.fixed_view_mut::<3, 1>(0, 3).copy_from(&z);
    k.fixed_view_mut::<1, 3>(3, 0).copy_from(&z.transpose());
    k[(3, 3)] = sigma;
    let eig = k.symmetric_eigen();
    let i = eig.eigenvalues.imax();
    let q: Vector4<f64> = eig.eigenvectors.column(i).into();
    // body-from-inertial is R(q)ᵀ in this convention, so C = R(q)
    quat_to_matrix(&q)
}

fn vec9(m: &Matrix3<f64>) -> SVector<f64, 9> {
    SVector::<f64, 9>::from_column_slice(m.as_slice())
}

fn unvec9(v: &SVector<f64, 9>) -> Matrix3<f64> {
    Matrix3::from_column_slice(v.as_slice())
}

/// Solves `A X + X B = M` through the 9×9 system
/// `(I ⊗ A + Bᵀ ⊗ I) vec(X) = vec(M)`.
pub fn sylvester_kron(a: &Matrix3<f64>, b: &Matrix3<f64>, m: &Matrix3<f64>) -> Matrix3<f64> {
    let i3 = Matrix3::<f64>::identity();
    let op: SMatrix<f64, 9, 9> = i3.kronecker(a) + b.transpose().kronecker(&i3);
    unvec9(&op.lu().solve(&vec9(m)).expect("nonsingular Sylvester operator"))
}

/// `ω̇ = K⁻¹((Kω) × ω)`, the classical torque-free Euler equations.
pub fn classical_euler(k: &Matrix3<f64>, w: &Vector3<f64>) -> Vector3<f64> {
    k.try_inverse().unwrap() * (k * w).cross(w)
}

/// Rotation angle of `AᵀB` via `atan2`, accurate at small angles.
pub fn angle_between(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let r = a.transpose() * b;
    let s = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]).norm() * 0.5;
    let c = 0.5 * (r.trace() - 1.0);
    s.atan2(c)
}

pub fn rot(m: Matrix3<f64>) -> RotationMatrix {
    RotationMatrix::new(m).unwrap()
}
