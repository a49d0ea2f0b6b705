//! Continuous-discrete attitude filters.
//!
//! Between measurement instants the estimate `(Ĉ, Ω̂)` follows the rigid-body
//! dynamics exactly. At each instant `t_k` the attitude is updated by the
//! attitude-determination solver applied to
//!
//! ```text
//! L_k = Ĉ_k⁻ Δ + E_k W_k B̃_kᵀ,     Ĉ_k⁺ = S_k L_k
//! ```
//!
//! and the angular velocity by one of two rules (see [`OmegaUpdate`]):
//!
//! * `no-gyro`: `Ω̂⁺Π + ΠΩ̂⁺ = (Ĉ⁺)ᵀĈ⁻Ω̂⁻Π + ΠΩ̂⁻(Ĉ⁻)ᵀĈ⁺`
//! * `with-gyro`: `J_{X+Γ}(Ω̂⁺) = J_X(Ω̃) + J_Γ(Ω̂⁻)`

use std::fmt::Debug;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::dynamics::{j_operator, j_solve, BodyState, InertiaSpec, IntegratorConfig, Potential, Propagator};
use crate::error::{Error, Result};
use crate::so3::{RotationMatrix, SkewMatrix, SymmetricPd};
use crate::wahba::{build_profile, solve_attitude, weighted_outer, AttitudeProfile, VectorSet, WeightMatrix};

/// Largest tolerated symmetric part of the no-gyro update's right side.
pub const SYMMETRIC_RESIDUAL_TOL: f64 = 1e-9;

/// Design weights, fixed for a filter run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    /// Trust in the propagated attitude.
    pub delta: SymmetricPd,
    /// Rate-matching weight of the no-gyro update.
    pub pi: SymmetricPd,
    /// Trust in the propagated angular velocity, gyro update.
    pub gamma: SymmetricPd,
    pub integrator: IntegratorConfig,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            delta: SymmetricPd::identity(),
            pi: SymmetricPd::identity(),
            gamma: SymmetricPd::identity(),
            integrator: IntegratorConfig::default(),
        }
    }
}

/// Vector measurements taken at one instant, with an optional gyro reading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementBatch {
    pub t: f64,
    /// Inertial reference directions `E_k`.
    #[serde(rename = "E")]
    pub e: VectorSet,
    /// Measured body directions `B̃_k`.
    #[serde(rename = "B")]
    pub b: VectorSet,
    #[serde(rename = "W")]
    pub w: WeightMatrix,
    /// Gyro error weight `X_k`.
    #[serde(rename = "X", default, skip_serializing_if = "Option::is_none")]
    pub x: Option<SymmetricPd>,
    /// Measured angular velocity `Ω̃_k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_meas: Option<SkewMatrix>,
}

impl MeasurementBatch {
    pub fn new(t: f64, e: VectorSet, b: VectorSet, w: WeightMatrix) -> Result<Self> {
        let batch = Self {
            t,
            e,
            b,
            w,
            x: None,
            omega_meas: None,
        };
        batch.validate()?;
        Ok(batch)
    }

    pub fn with_gyro(mut self, omega_meas: SkewMatrix, x: SymmetricPd) -> Self {
        self.omega_meas = Some(omega_meas);
        self.x = Some(x);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.t.is_finite() {
            return Err(Error::InvalidTimeSpan {
                reason: "batch time is not finite".into(),
            });
        }
        if self.e.len() != self.b.len() || self.w.len() != self.e.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} columns in E, B and W", self.e.len()),
                found: format!("B: {}, W: {}", self.b.len(), self.w.len()),
            });
        }
        Ok(())
    }

    /// `E W B̃ᵀ`.
    pub fn profile_term(&self) -> Result<Matrix3<f64>> {
        weighted_outer(&self.e, &self.w, &self.b)
    }
}

/// Propagated (`minus`) and updated (`plus`) estimates at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterEstimate {
    pub t: f64,
    pub c_minus: RotationMatrix,
    pub c_plus: RotationMatrix,
    pub omega_minus: SkewMatrix,
    pub omega_plus: SkewMatrix,
}

/// Initial conditions. Missing attitude is bootstrapped from the first
/// batch; missing angular velocity falls back to the first gyro reading
/// when the update rule uses one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterInit {
    #[serde(default)]
    pub attitude: Option<RotationMatrix>,
    #[serde(default)]
    pub omega: Option<SkewMatrix>,
}

impl FilterInit {
    pub fn exact(state: &BodyState) -> Self {
        Self {
            attitude: Some(state.c),
            omega: Some(state.omega),
        }
    }
}

/// `L_k = Ĉ_k⁻Δ + E_k W_k B̃_kᵀ`.
pub fn update_profile(c_minus: &RotationMatrix, batch: &MeasurementBatch, delta: &SymmetricPd) -> Result<AttitudeProfile> {
    AttitudeProfile::new(c_minus.matrix() * delta.matrix() + batch.profile_term()?)
}

/// Attitude update `Ĉ_k⁺ = S_k L_k`.
pub fn update_attitude(c_minus: &RotationMatrix, batch: &MeasurementBatch, cfg: &FilterConfig) -> Result<RotationMatrix> {
    Ok(solve_attitude(&update_profile(c_minus, batch, &cfg.delta)?)?.c_hat)
}

/// Angular-velocity update without gyro measurements.
pub fn update_omega_no_gyro(
    c_minus: &RotationMatrix,
    c_plus: &RotationMatrix,
    omega_minus: &SkewMatrix,
    pi: &SymmetricPd,
) -> Result<SkewMatrix> {
    let d = c_plus.matrix().transpose() * c_minus.matrix();
    let w = omega_minus.matrix();
    let p = pi.matrix();
    let rhs = d * w * p + p * w * d.transpose();
    let residual = 0.5 * (rhs + rhs.transpose()).amax();
    if !(residual <= SYMMETRIC_RESIDUAL_TOL) {
        return Err(Error::InconsistentUpdate { residual });
    }
    let skew = SkewMatrix::new((rhs - rhs.transpose()) * 0.5)?;
    Ok(j_solve(pi, &skew))
}

/// Angular-velocity update with a gyro reading `Ω̃` weighted by `X`.
pub fn update_omega_with_gyro(
    omega_minus: &SkewMatrix,
    omega_meas: &SkewMatrix,
    x: &SymmetricPd,
    gamma: &SymmetricPd,
) -> SkewMatrix {
    let rhs = j_operator(x, omega_meas) + j_operator(gamma, omega_minus);
    j_solve(&x.sum(gamma), &rhs)
}

/// Everything an angular-velocity update rule may consume.
#[derive(Debug, Clone, Copy)]
pub struct OmegaUpdateInput<'a> {
    pub index: usize,
    pub c_minus: &'a RotationMatrix,
    pub c_plus: &'a RotationMatrix,
    pub omega_minus: &'a SkewMatrix,
    pub batch: &'a MeasurementBatch,
    pub cfg: &'a FilterConfig,
}

/// An angular-velocity update rule.
pub trait OmegaUpdate: Debug + Send + Sync {
    fn name(&self) -> &'static str;
    fn uses_gyro(&self) -> bool;
    fn update(&self, input: &OmegaUpdateInput<'_>) -> Result<SkewMatrix>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoGyroUpdate;

impl OmegaUpdate for NoGyroUpdate {
    fn name(&self) -> &'static str {
        "no-gyro"
    }
    fn uses_gyro(&self) -> bool {
        false
    }
    fn update(&self, input: &OmegaUpdateInput<'_>) -> Result<SkewMatrix> {
        update_omega_no_gyro(input.c_minus, input.c_plus, input.omega_minus, &input.cfg.pi)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GyroUpdate;

impl OmegaUpdate for GyroUpdate {
    fn name(&self) -> &'static str {
        "with-gyro"
    }
    fn uses_gyro(&self) -> bool {
        true
    }
    fn update(&self, input: &OmegaUpdateInput<'_>) -> Result<SkewMatrix> {
        let (meas, x) = gyro_of(input.batch, input.index)?;
        Ok(update_omega_with_gyro(input.omega_minus, meas, x, &input.cfg.gamma))
    }
}

fn gyro_of(batch: &MeasurementBatch, index: usize) -> Result<(&SkewMatrix, &SymmetricPd)> {
    match (&batch.omega_meas, &batch.x) {
        (Some(m), Some(x)) => Ok((m, x)),
        _ => Err(Error::MissingGyro { index }),
    }
}

/// Which angular-velocity update the filter runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FilterMode {
    #[default]
    NoGyro,
    WithGyro,
}

impl FilterMode {
    pub const NAMES: [&'static str; 2] = ["no-gyro", "with-gyro"];

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "no-gyro" => Ok(Self::NoGyro),
            "with-gyro" => Ok(Self::WithGyro),
            _ => Err(Error::UnknownStrategy {
                kind: "filter mode",
                name: name.to_string(),
                available: Self::NAMES.join(", "),
            }),
        }
    }

    pub fn name(&self) -> &'static str {
        self.omega_update().name()
    }

    pub fn omega_update(&self) -> Box<dyn OmegaUpdate> {
        match self {
            Self::NoGyro => Box::new(NoGyroUpdate),
            Self::WithGyro => Box::new(GyroUpdate),
        }
    }
}

impl std::str::FromStr for FilterMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::from_name(s)
    }
}

/// Recursive filter state; feed batches in time order with [`AttitudeFilter::process`].
#[derive(Debug)]
pub struct AttitudeFilter<'a> {
    inertia: &'a InertiaSpec,
    potential: &'a dyn Potential,
    cfg: &'a FilterConfig,
    propagator: Propagator,
    rule: Box<dyn OmegaUpdate>,
    init: FilterInit,
    last: Option<FilterEstimate>,
    processed: usize,
}

impl<'a> AttitudeFilter<'a> {
    pub fn new(
        init: FilterInit,
        inertia: &'a InertiaSpec,
        potential: &'a dyn Potential,
        cfg: &'a FilterConfig,
        mode: FilterMode,
    ) -> Result<Self> {
        Ok(Self {
            inertia,
            potential,
            cfg,
            propagator: Propagator::new(&cfg.integrator)?,
            rule: mode.omega_update(),
            init,
            last: None,
            processed: 0,
        })
    }

    pub fn last(&self) -> Option<&FilterEstimate> {
        self.last.as_ref()
    }

    pub fn process(&mut self, batch: &MeasurementBatch) -> Result<FilterEstimate> {
        batch.validate()?;
        let index = self.processed;
        if self.rule.uses_gyro() {
            gyro_of(batch, index)?;
        }
        let est = match self.last {
            None => self.initialize(batch)?,
            Some(prev) => {
                if !(batch.t > prev.t) {
                    return Err(Error::InvalidTimeSpan {
                        reason: format!("batch {index} at t = {} does not follow t = {}", batch.t, prev.t),
                    });
                }
                let start = BodyState::new(prev.t, prev.c_plus, prev.omega_plus);
                let pred = self.propagator.propagate(&start, self.inertia, self.potential, batch.t)?;
                let c_plus = update_attitude(&pred.c, batch, self.cfg)?;
                let omega_plus = self.rule.update(&OmegaUpdateInput {
                    index,
                    c_minus: &pred.c,
                    c_plus: &c_plus,
                    omega_minus: &pred.omega,
                    batch,
                    cfg: self.cfg,
                })?;
                FilterEstimate {
                    t: batch.t,
                    c_minus: pred.c,
                    c_plus,
                    omega_minus: pred.omega,
                    omega_plus,
                }
            }
        };
        self.last = Some(est);
        self.processed += 1;
        Ok(est)
    }

    /// First instant: `Ĉ₀⁺ = Ĉ₀⁻`, `Ω̂₀⁺ = Ω̂₀⁻`, no update.
    fn initialize(&self, batch: &MeasurementBatch) -> Result<FilterEstimate> {
        let c0 = match self.init.attitude {
            Some(c) => c,
            None => solve_attitude(&build_profile(&batch.e, &batch.w, &batch.b)?)?.c_hat,
        };
        let omega0 = match (self.init.omega, self.rule.uses_gyro()) {
            (Some(w), _) => w,
            (None, true) => *gyro_of(batch, 0)?.0,
            (None, false) => return Err(Error::MissingInitialOmega),
        };
        Ok(FilterEstimate {
            t: batch.t,
            c_minus: c0,
            c_plus: c0,
            omega_minus: omega0,
            omega_plus: omega0,
        })
    }
}

/// Runs the filter over a time-ordered batch sequence.
pub fn run_filter(
    init: FilterInit,
    batches: &[MeasurementBatch],
    inertia: &InertiaSpec,
    potential: &dyn Potential,
    cfg: &FilterConfig,
    mode: FilterMode,
) -> Result<Vec<FilterEstimate>> {
    if batches.is_empty() {
        return Err(Error::NoBatches);
    }
    if mode == FilterMode::WithGyro {
        if let Some(index) = batches.iter().position(|b| b.omega_meas.is_none() || b.x.is_none()) {
            return Err(Error::MissingGyro { index });
        }
    }
    let mut filter = AttitudeFilter::new(init, inertia, potential, cfg, mode)?;
    batches.iter().map(|b| filter.process(b)).collect()
}
