//! Ground-truth trajectories and synthetic sensors.
//!
//! Vector sensors perturb each true body direction `Cᵀeᵢ` with i.i.d.
//! per-axis Gaussian noise and renormalize; gyros add per-axis Gaussian
//! noise to the true body rate. All randomness comes from ChaCha8 streams
//! keyed by `(seed, stream)`, so a scenario reproduces bit for bit.

use nalgebra::{Matrix3xX, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dynamics::{BodyState, InertiaSpec, IntegratorConfig, PotentialSpec, Propagator};
use crate::error::{Error, Result};
use crate::filter::MeasurementBatch;
use crate::so3::{random_vector, SkewMatrix, SymmetricPd};
use crate::wahba::{VectorSet, WeightMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Per-axis standard deviation of body-vector perturbations, rad.
    pub sigma_vec: f64,
    /// Per-axis standard deviation of gyro noise, rad/s.
    #[serde(default)]
    pub sigma_gyro: f64,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma_vec: f64, sigma_gyro: f64, seed: u64) -> Result<Self> {
        let n = Self {
            sigma_vec,
            sigma_gyro,
            seed,
        };
        n.validate()?;
        Ok(n)
    }

    pub fn noiseless() -> Self {
        Self {
            sigma_vec: 0.0,
            sigma_gyro: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, s) in [("sigma_vec", self.sigma_vec), ("sigma_gyro", self.sigma_gyro)] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be a finite non-negative number, got {s}")));
            }
        }
        Ok(())
    }
}

/// Independent random stream `stream` of the generator keyed by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn normal(sigma: f64) -> Normal<f64> {
    Normal::new(0.0, sigma).expect("validated non-negative sigma")
}

/// Noisy unit body-frame measurements of the inertial directions `e`.
pub fn gen_vector_measurements<R: Rng + ?Sized>(
    state: &BodyState,
    e: &VectorSet,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<VectorSet> {
    noise.validate()?;
    let ct = state.c.matrix().transpose();
    let dist = normal(noise.sigma_vec);
    let cols: Vec<Vector3<f64>> = e
        .columns()
        .column_iter()
        .map(|col| {
            let mut b = ct * col;
            if noise.sigma_vec > 0.0 {
                b += Vector3::from_fn(|_, _| dist.sample(rng));
            }
            b.normalize()
        })
        .collect();
    VectorSet::from_columns(&cols)
}

/// `Ω̃ = Ω + hat(p)` with per-axis Gaussian `p`.
pub fn gen_gyro_measurement<R: Rng + ?Sized>(omega: &SkewMatrix, noise: &NoiseSpec, rng: &mut R) -> SkewMatrix {
    if noise.sigma_gyro == 0.0 {
        return *omega;
    }
    let dist = normal(noise.sigma_gyro);
    let p = Vector3::from_fn(|_, _| dist.sample(rng));
    *omega + SkewMatrix::from_vector(&p)
}

/// `n` unit vectors drawn uniformly from the spherical cap of the given
/// half-angle around `boresight` (a star-tracker field of view).
pub fn clustered_references<R: Rng + ?Sized>(
    n: usize,
    boresight: &Vector3<f64>,
    half_angle: f64,
    rng: &mut R,
) -> Result<VectorSet> {
    if !(half_angle > 0.0 && half_angle <= std::f64::consts::PI) || !(boresight.norm() > 0.0) {
        return Err(Error::InvalidConfig("cone needs a nonzero axis and a half-angle in (0, π]".into()));
    }
    let z = boresight.normalize();
    let helper = if z.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let x = z.cross(&helper).normalize();
    let y = z.cross(&x);
    let cos_min = half_angle.cos();
    let cols: Vec<Vector3<f64>> = (0..n)
        .map(|_| {
            let cz: f64 = rng.random_range(cos_min..=1.0);
            let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let s = (1.0 - cz * cz).max(0.0).sqrt();
            (x * (s * phi.cos()) + y * (s * phi.sin()) + z * cz).normalize()
        })
        .collect();
    VectorSet::new(Matrix3xX::from_columns(&cols))
}

/// `n` i.i.d. uniformly distributed unit vectors.
pub fn random_unit_vectors<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<VectorSet> {
    let cols: Vec<Vector3<f64>> = (0..n).map(|_| random_vector(rng, 1.0).normalize()).collect();
    VectorSet::new(Matrix3xX::from_columns(&cols))
}

/// `n` instants `t0, t0 + dt, …`.
pub fn uniform_schedule(t0: f64, dt: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| t0 + dt * k as f64).collect()
}

/// A complete simulated experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    /// Inertial reference directions `E`, reused at every instant.
    pub inertial_refs: VectorSet,
    /// Inertia `Λ`, row-major.
    #[serde(rename = "lambda")]
    pub inertia: InertiaSpec,
    #[serde(default)]
    pub potential: PotentialSpec,
    pub init: BodyState,
    pub schedule: Vec<f64>,
    pub noise: NoiseSpec,
    /// Vector weights `W`; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightMatrix>,
    /// Gyro weight `X_k`; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gyro_weight: Option<SymmetricPd>,
    #[serde(default)]
    pub truth_integrator: IntegratorConfig,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        self.truth_integrator.validate()?;
        if let Some(first) = self.schedule.first() {
            if !(*first >= self.init.t) {
                return Err(Error::InvalidTimeSpan {
                    reason: format!("schedule starts at {first}, before the initial state at {}", self.init.t),
                });
            }
        }
        if let Some(k) = self.schedule.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidTimeSpan {
                reason: format!("schedule is not strictly increasing at index {}", k + 1),
            });
        }
        if let Some(w) = &self.weights {
            if w.len() != self.inertial_refs.len() {
                return Err(Error::ShapeMismatch {
                    expected: format!("{} weights", self.inertial_refs.len()),
                    found: format!("{} weights", w.len()),
                });
            }
        }
        Ok(())
    }

    pub fn weights(&self) -> WeightMatrix {
        self.weights
            .clone()
            .unwrap_or_else(|| WeightMatrix::identity(self.inertial_refs.len()))
    }

    pub fn gyro_weight(&self) -> SymmetricPd {
        self.gyro_weight.unwrap_or_else(SymmetricPd::identity)
    }
}

/// True states at every scheduled instant.
pub fn gen_truth(scn: &ScenarioSpec) -> Result<Vec<BodyState>> {
    scn.validate()?;
    let potential = scn.potential.build(scn.inertia.lambda())?;
    let propagator = Propagator::new(&scn.truth_integrator)?;
    let mut state = scn.init;
    scn.schedule
        .iter()
        .map(|&t| {
            state = propagator.propagate(&state, &scn.inertia, potential.as_ref(), t)?;
            Ok(state)
        })
        .collect()
}

/// Measurement batches along a truth trajectory, drawn from random stream
/// `stream` of the scenario seed. Every batch carries a gyro reading.
pub fn simulate_batches(scn: &ScenarioSpec, truth: &[BodyState], stream: u64) -> Result<Vec<MeasurementBatch>> {
    let mut rng = stream_rng(scn.noise.seed, stream);
    let w = scn.weights();
    let x = scn.gyro_weight();
    truth
        .iter()
        .map(|state| {
            let b = gen_vector_measurements(state, &scn.inertial_refs, &scn.noise, &mut rng)?;
            let gyro = gen_gyro_measurement(&state.omega, &scn.noise, &mut rng);
            Ok(MeasurementBatch::new(state.t, scn.inertial_refs.clone(), b, w.clone())?.with_gyro(gyro, x))
        })
        .collect()
}
