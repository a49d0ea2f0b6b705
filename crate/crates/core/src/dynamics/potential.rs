//! Attitude-dependent potentials `V(C)` and their ambient gradients `∂V/∂C`.

use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::so3::{exp_so3, random_rotation, random_vector, RotationMatrix, SkewMatrix, SymmetricPd};

/// A potential energy on SO(3).
///
/// `gradient` is the plain 3×3 derivative of `value` with respect to the
/// matrix entries of `C`; the dynamics forms the skew moment from it.
pub trait Potential: Debug + Send + Sync {
    fn name(&self) -> &str;
    fn value(&self, c: &RotationMatrix) -> f64;
    fn gradient(&self, c: &RotationMatrix) -> Matrix3<f64>;
}

/// `V ≡ 0`: the free rigid body.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroPotential;

impl Potential for ZeroPotential {
    fn name(&self) -> &str {
        "zero"
    }
    fn value(&self, _c: &RotationMatrix) -> f64 {
        0.0
    }
    fn gradient(&self, _c: &RotationMatrix) -> Matrix3<f64> {
        Matrix3::zeros()
    }
}

/// `V(C) = trace(AᵀC)`, optionally with a deliberately wrong gradient
/// `gradient_scale · A` (used to exercise [`validate_potential`]).
#[derive(Debug, Clone, Copy)]
pub struct LinearPotential {
    pub a: Matrix3<f64>,
    pub gradient_scale: f64,
}

impl LinearPotential {
    pub fn new(a: Matrix3<f64>) -> Self {
        Self { a, gradient_scale: 1.0 }
    }
}

impl Potential for LinearPotential {
    fn name(&self) -> &str {
        "linear"
    }
    fn value(&self, c: &RotationMatrix) -> f64 {
        self.a.dot(c.matrix())
    }
    fn gradient(&self, _c: &RotationMatrix) -> Matrix3<f64> {
        self.a * self.gradient_scale
    }
}

/// Gravity-gradient potential for a fixed inertial nadir direction `r̂`:
/// `V(C) = −k · r̂ᵀ C Λ Cᵀ r̂` with `k = 3μ/(2r³)` and `Λ` the body's
/// mass-distribution matrix (constant terms dropped).
#[derive(Debug, Clone, Copy)]
pub struct GravityGradientPotential {
    pub strength: f64,
    pub direction: Vector3<f64>,
    pub lambda: Matrix3<f64>,
}

impl GravityGradientPotential {
    pub fn new(mu_over_r3: f64, direction: Vector3<f64>, lambda: &SymmetricPd) -> Result<Self> {
        let norm = direction.norm();
        if !(norm > 0.0) || !mu_over_r3.is_finite() {
            return Err(Error::InvalidConfig("gravity-gradient needs a nonzero direction and finite μ/r³".into()));
        }
        Ok(Self {
            strength: 1.5 * mu_over_r3,
            direction: direction / norm,
            lambda: *lambda.matrix(),
        })
    }
}

impl Potential for GravityGradientPotential {
    fn name(&self) -> &str {
        "gravity-gradient"
    }
    fn value(&self, c: &RotationMatrix) -> f64 {
        let rb = c.matrix().transpose() * self.direction;
        -self.strength * rb.dot(&(self.lambda * rb))
    }
    fn gradient(&self, c: &RotationMatrix) -> Matrix3<f64> {
        let rrt = self.direction * self.direction.transpose();
        rrt * c.matrix() * self.lambda * (-2.0 * self.strength)
    }
}

/// Serializable potential selection, looked up by its `kind` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialSpec {
    #[default]
    Zero,
    Linear {
        /// Row-major `A`.
        a: [f64; 9],
    },
    GravityGradient {
        mu_over_r3: f64,
        direction: [f64; 3],
    },
}

impl PotentialSpec {
    pub const NAMES: [&'static str; 3] = ["zero", "linear", "gravity-gradient"];

    /// Instantiates the potential. `lambda` is the body's inertia, needed
    /// by potentials that depend on mass distribution.
    pub fn build(&self, lambda: &SymmetricPd) -> Result<Arc<dyn Potential>> {
        Ok(match self {
            PotentialSpec::Zero => Arc::new(ZeroPotential),
            PotentialSpec::Linear { a } => Arc::new(LinearPotential::new(Matrix3::from_row_slice(a))),
            PotentialSpec::GravityGradient { mu_over_r3, direction } => Arc::new(GravityGradientPotential::new(
                *mu_over_r3,
                Vector3::from(*direction),
                lambda,
            )?),
        })
    }
}

/// Finite-difference gradient check results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialReport {
    pub max_relative_error: f64,
    pub checks: usize,
    pub passed: bool,
}

pub const DIRECTIONS_PER_SAMPLE: usize = 20;
pub const GRADIENT_REL_TOL: f64 = 1e-5;
const FD_STEP: f64 = 1e-4;

/// Compares the directional derivative `⟨∂V/∂C, CU⟩` with a central
/// difference of `V(C exp(±εU))` at `n_samples` random attitudes, each
/// along [`DIRECTIONS_PER_SAMPLE`] random unit directions.
pub fn validate_potential<R: Rng + ?Sized>(potential: &dyn Potential, n_samples: usize, rng: &mut R) -> PotentialReport {
    let mut worst = 0.0_f64;
    let mut checks = 0;
    for _ in 0..n_samples {
        let c = random_rotation(rng);
        let grad = potential.gradient(&c);
        let floor = 1e-3 * grad.norm();
        for _ in 0..DIRECTIONS_PER_SAMPLE {
            let u = random_vector(rng, 1.0).normalize();
            let plus = c.compose(&exp_so3(&SkewMatrix::from_vector(&(u * FD_STEP))));
            let minus = c.compose(&exp_so3(&SkewMatrix::from_vector(&(u * -FD_STEP))));
            let fd = (potential.value(&plus) - potential.value(&minus)) / (2.0 * FD_STEP);
            let analytic = grad.dot(&(c.matrix() * SkewMatrix::from_vector(&u).matrix()));
            let diff = (analytic - fd).abs();
            let err = if diff == 0.0 {
                0.0
            } else {
                diff / fd.abs().max(floor).max(f64::MIN_POSITIVE)
            };
            worst = if err.is_nan() { f64::INFINITY } else { worst.max(err) };
            checks += 1;
        }
    }
    PotentialReport {
        max_relative_error: worst,
        checks,
        passed: worst <= GRADIENT_REL_TOL,
    }
}
