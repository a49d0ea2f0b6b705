//! Rigid body in an attitude-dependent potential.
//!
//! Kinematics `Ċ = CΩ` and Euler's equation written on so(3):
//!
//! ```text
//! J(Ω̇) = [J(Ω), Ω] − Cᵀ ∂V/∂C + (∂V/∂C)ᵀ C,    J(Ω) = ΛΩ + ΩΛ
//! ```
//!
//! `Λ` is the symmetric mass-distribution matrix. On vee coordinates `J`
//! acts as the classical inertia `K = trace(Λ)I − Λ`, which is how it is
//! inverted.

pub mod integrator;
pub mod potential;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::so3::{trace_inner, RotationMatrix, SkewMatrix, SymmetricPd};

pub use integrator::{integrator_by_name, Integrator, IntegratorConfig, LieEuler, Rkmk2, Rkmk4};
pub use potential::{
    validate_potential, GravityGradientPotential, LinearPotential, Potential, PotentialReport, PotentialSpec,
    ZeroPotential,
};

/// Relative skew tolerance for the right-hand side of Euler's equation.
const RHS_SKEW_TOL: f64 = 1e-12;

/// Inertia `Λ` with the cached classical inertia `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertiaSpec {
    lambda: SymmetricPd,
    classical: Matrix3<f64>,
}

impl InertiaSpec {
    /// `K` is SPD automatically: its eigenvalues are pairwise sums of those of `Λ`.
    pub fn new(lambda: SymmetricPd) -> Self {
        Self {
            lambda,
            classical: lambda.vee_operator(),
        }
    }

    /// Builds `Λ` from principal moments of inertia `K = diag(k)`.
    /// Requires the triangle inequalities `kᵢ < kⱼ + kₗ`.
    pub fn from_principal_moments(k: [f64; 3]) -> Result<Self> {
        let half = 0.5 * (k[0] + k[1] + k[2]);
        SymmetricPd::diagonal([half - k[0], half - k[1], half - k[2]]).map(Self::new)
    }

    pub fn lambda(&self) -> &SymmetricPd {
        &self.lambda
    }

    /// Classical inertia matrix `trace(Λ)I − Λ`.
    pub fn classical(&self) -> &Matrix3<f64> {
        &self.classical
    }
}

impl Serialize for InertiaSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.lambda.serialize(s)
    }
}

impl<'de> Deserialize<'de> for InertiaSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        SymmetricPd::deserialize(d).map(Self::new)
    }
}

/// `(t, C, Ω)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyState {
    pub t: f64,
    pub c: RotationMatrix,
    pub omega: SkewMatrix,
}

impl BodyState {
    pub fn new(t: f64, c: RotationMatrix, omega: SkewMatrix) -> Self {
        Self { t, c, omega }
    }
}

/// `J(Ω) = ΛΩ + ΩΛ`.
pub fn j_apply(inertia: &InertiaSpec, omega: &SkewMatrix) -> SkewMatrix {
    j_operator(inertia.lambda(), omega)
}

/// `J_K(X) = KX + XK` for any SPD `K`.
pub fn j_operator(k: &SymmetricPd, x: &SkewMatrix) -> SkewMatrix {
    let k = k.matrix();
    let m = k * x.matrix() + x.matrix() * k;
    // skew up to rounding; re-project
    SkewMatrix::from_vector(&vee_of(&m))
}

fn vee_of(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// Unique skew `Ω` with `KΩ + ΩK = M`.
pub fn j_solve(k: &SymmetricPd, m: &SkewMatrix) -> SkewMatrix {
    let reduced = k.vee_operator();
    let v = reduced
        .cholesky()
        .expect("trace(K)I − K is positive definite for SPD K")
        .solve(&m.to_vector());
    SkewMatrix::from_vector(&v)
}

/// Kinetic energy `½⟨Ω, ΩΛ⟩`.
pub fn kinetic_energy(inertia: &InertiaSpec, omega: &SkewMatrix) -> f64 {
    0.5 * trace_inner(omega.matrix(), &(omega.matrix() * inertia.lambda().matrix())).unwrap_or(f64::NAN)
}

/// Spatial angular momentum `C J(Ω) Cᵀ`.
pub fn spatial_momentum(inertia: &InertiaSpec, state: &BodyState) -> Matrix3<f64> {
    let c = state.c.matrix();
    c * j_apply(inertia, &state.omega).matrix() * c.transpose()
}

/// The potential moment `−Cᵀ∂V/∂C + (∂V/∂C)ᵀC`.
pub fn potential_moment(c: &RotationMatrix, potential: &dyn Potential) -> Matrix3<f64> {
    let g = potential.gradient(c);
    let ctg = c.matrix().transpose() * g;
    ctg.transpose() - ctg
}

/// Time derivatives `(Ċ, Ω̇)` of a state.
pub fn euler_rhs(
    state: &BodyState,
    inertia: &InertiaSpec,
    potential: &dyn Potential,
) -> Result<(Matrix3<f64>, SkewMatrix)> {
    let c_dot = state.c.matrix() * state.omega.matrix();
    let omega_dot = omega_dot(&state.c, &state.omega, inertia, potential)?;
    Ok((c_dot, omega_dot))
}

fn omega_dot(
    c: &RotationMatrix,
    omega: &SkewMatrix,
    inertia: &InertiaSpec,
    potential: &dyn Potential,
) -> Result<SkewMatrix> {
    let jw = j_apply(inertia, omega);
    let bracket = jw.matrix() * omega.matrix() - omega.matrix() * jw.matrix();
    let moment = potential_moment(c, potential);
    let rhs = bracket + moment;
    let scale = 1.0_f64.max(bracket.amax()).max(moment.amax());
    let residual = (rhs + rhs.transpose()).amax();
    if !(residual <= RHS_SKEW_TOL * scale) {
        return Err(Error::PotentialGradientNotSkewCompatible { residual });
    }
    Ok(j_solve(inertia.lambda(), &SkewMatrix::from_vector(&vee_of(&rhs))))
}

/// A configured integrator with its nominal step.
#[derive(Debug)]
pub struct Propagator {
    integrator: Box<dyn Integrator>,
    step: f64,
}

impl Propagator {
    pub fn new(cfg: &IntegratorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            integrator: integrator_by_name(&cfg.scheme)?,
            step: cfg.step,
        })
    }

    pub fn integrator(&self) -> &dyn Integrator {
        self.integrator.as_ref()
    }

    /// Integrates from `state.t` to `t_end` with full steps of the nominal
    /// size followed by one partial step for the remainder.
    pub fn propagate(
        &self,
        state: &BodyState,
        inertia: &InertiaSpec,
        potential: &dyn Potential,
        t_end: f64,
    ) -> Result<BodyState> {
        if !t_end.is_finite() || t_end < state.t {
            return Err(Error::InvalidTimeSpan {
                reason: format!("cannot propagate from t = {} to t = {}", state.t, t_end),
            });
        }
        let span = t_end - state.t;
        let h = self.step;
        // remainders below this are absorbed into the last full step
        let slack = 1e-9 * h;
        let full = ((span + slack) / h).floor() as u64;
        let remainder = span - full as f64 * h;

        let rate = |c: &RotationMatrix, w: &Vector3<f64>| -> Result<Vector3<f64>> {
            Ok(omega_dot(c, &SkewMatrix::from_vector(w), inertia, potential)?.to_vector())
        };

        let t0 = state.t;
        let mut cur = *state;
        for i in 0..full {
            let step_h = if i + 1 == full && remainder.abs() <= slack {
                h + remainder
            } else {
                h
            };
            cur = self.integrator.step(&cur, step_h, &rate)?;
            cur.t = t0 + (i + 1) as f64 * h;
        }
        if remainder > slack {
            cur = self.integrator.step(&cur, remainder, &rate)?;
        }
        cur.t = t_end;
        Ok(cur)
    }
}

/// Integrates the attitude dynamics from `state.t` to `t_end`.
pub fn propagate(
    state: &BodyState,
    inertia: &InertiaSpec,
    potential: &dyn Potential,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<BodyState> {
    Propagator::new(cfg)?.propagate(state, inertia, potential, t_end)
}
