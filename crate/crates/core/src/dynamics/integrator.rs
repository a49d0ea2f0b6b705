//! One-step schemes for `Ċ = CΩ`, `J(Ω̇) = [J(Ω),Ω] + moment(C)`.
//!
//! Every scheme advances the attitude by right-multiplying an exponential,
//! `C ← C exp(hat(θ))`, so the result stays on SO(3) up to rounding.

use std::f64::consts::FRAC_PI_4;
use std::fmt::Debug;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::so3::{exp_so3, RotationMatrix, SkewMatrix};

use super::BodyState;

/// Largest rotation a single step may perform.
pub const MAX_STEP_ROTATION: f64 = FRAC_PI_4;
pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_SCHEME: &str = "rkmk4";

/// Right-hand side of the body-rate equation in vee coordinates.
pub type RateFn<'a> = dyn Fn(&RotationMatrix, &Vector3<f64>) -> Result<Vector3<f64>> + 'a;

pub trait Integrator: Debug + Send + Sync {
    fn name(&self) -> &'static str;
    /// Classical order of accuracy.
    fn order(&self) -> u32;
    fn step(&self, state: &BodyState, h: f64, rate: &RateFn<'_>) -> Result<BodyState>;
}

/// Inverse of the left-trivialized differential of `exp` on so(3):
/// the `θ̇` for which `d/dt exp(hat θ) = exp(hat θ) hat(ω)`.
pub fn dexp_inv(theta: &Vector3<f64>, omega: &Vector3<f64>) -> Vector3<f64> {
    let cross = theta.cross(omega);
    omega + cross * 0.5 + theta.cross(&cross) * second_order_coeff(theta.norm())
}

/// `(1 − (a/2)·cot(a/2)) / a²`, with its series below `a = 1e-4`.
fn second_order_coeff(a: f64) -> f64 {
    if a < 1e-4 {
        1.0 / 12.0 + a * a / 720.0
    } else {
        let half = 0.5 * a;
        (1.0 - half * half.cos() / half.sin()) / (a * a)
    }
}

fn advance(state: &BodyState, theta: &Vector3<f64>, omega: Vector3<f64>, h: f64) -> Result<BodyState> {
    let angle = theta.norm();
    if !(angle <= MAX_STEP_ROTATION) {
        return Err(Error::StepTooLarge {
            angle,
            limit: MAX_STEP_ROTATION,
        });
    }
    Ok(BodyState {
        t: state.t + h,
        c: state.c.compose(&exp_so3(&SkewMatrix::from_vector(theta))),
        omega: SkewMatrix::from_vector(&omega),
    })
}

/// Classical fourth-order Runge–Kutta–Munthe-Kaas.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rkmk4;

impl Integrator for Rkmk4 {
    fn name(&self) -> &'static str {
        "rkmk4"
    }
    fn order(&self) -> u32 {
        4
    }
    fn step(&self, state: &BodyState, h: f64, rate: &RateFn<'_>) -> Result<BodyState> {
        let c0 = state.c;
        let w0 = state.omega.to_vector();
        let at = |theta: &Vector3<f64>| c0.compose(&exp_so3(&SkewMatrix::from_vector(theta)));

        let th1 = Vector3::zeros();
        let k1 = (w0, rate(&c0, &w0)?);

        let th2 = k1.0 * (0.5 * h);
        let w2 = w0 + k1.1 * (0.5 * h);
        let k2 = (dexp_inv(&th2, &w2), rate(&at(&th2), &w2)?);

        let th3 = k2.0 * (0.5 * h);
        let w3 = w0 + k2.1 * (0.5 * h);
        let k3 = (dexp_inv(&th3, &w3), rate(&at(&th3), &w3)?);

        let th4 = k3.0 * h;
        let w4 = w0 + k3.1 * h;
        let k4 = (dexp_inv(&th4, &w4), rate(&at(&th4), &w4)?);

        let theta = th1 + (k1.0 + (k2.0 + k3.0) * 2.0 + k4.0) * (h / 6.0);
        let omega = w0 + (k1.1 + (k2.1 + k3.1) * 2.0 + k4.1) * (h / 6.0);
        advance(state, &theta, omega, h)
    }
}

/// Second-order Heun-type RKMK scheme.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rkmk2;

impl Integrator for Rkmk2 {
    fn name(&self) -> &'static str {
        "rkmk2"
    }
    fn order(&self) -> u32 {
        2
    }
    fn step(&self, state: &BodyState, h: f64, rate: &RateFn<'_>) -> Result<BodyState> {
        let c0 = state.c;
        let w0 = state.omega.to_vector();
        let k1 = (w0, rate(&c0, &w0)?);
        let th2 = k1.0 * h;
        let w2 = w0 + k1.1 * h;
        let c2 = c0.compose(&exp_so3(&SkewMatrix::from_vector(&th2)));
        let k2 = (dexp_inv(&th2, &w2), rate(&c2, &w2)?);
        let theta = (k1.0 + k2.0) * (0.5 * h);
        let omega = w0 + (k1.1 + k2.1) * (0.5 * h);
        advance(state, &theta, omega, h)
    }
}

/// First-order Lie–Euler.
#[derive(Debug, Clone, Copy, Default)]
pub struct LieEuler;

impl Integrator for LieEuler {
    fn name(&self) -> &'static str {
        "lie-euler"
    }
    fn order(&self) -> u32 {
        1
    }
    fn step(&self, state: &BodyState, h: f64, rate: &RateFn<'_>) -> Result<BodyState> {
        let w0 = state.omega.to_vector();
        let wdot = rate(&state.c, &w0)?;
        advance(state, &(w0 * h), w0 + wdot * h, h)
    }
}

pub const INTEGRATOR_NAMES: [&str; 3] = ["rkmk4", "rkmk2", "lie-euler"];

pub fn integrator_by_name(name: &str) -> Result<Box<dyn Integrator>> {
    match name {
        "rkmk4" => Ok(Box::new(Rkmk4)),
        "rkmk2" => Ok(Box::new(Rkmk2)),
        "lie-euler" => Ok(Box::new(LieEuler)),
        _ => Err(Error::UnknownStrategy {
            kind: "integrator",
            name: name.to_string(),
            available: INTEGRATOR_NAMES.join(", "),
        }),
    }
}

/// Fixed-step integration settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub step: f64,
    pub scheme: String,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step: DEFAULT_STEP,
            scheme: DEFAULT_SCHEME.to_string(),
        }
    }
}

impl IntegratorConfig {
    pub fn new(step: f64, scheme: &str) -> Self {
        Self {
            step,
            scheme: scheme.to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidConfig(format!("integrator step must be positive, got {}", self.step)));
        }
        integrator_by_name(&self.scheme).map(|_| ())
    }
}
