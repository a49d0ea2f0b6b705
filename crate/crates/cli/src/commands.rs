use std::fmt;
use std::fs;
use std::path::Path;

use attitude_core::campaign::{run_campaign, run_trial, CampaignSpec, InitPolicy, CSV_HEADER};
use attitude_core::dynamics::{kinetic_energy, BodyState, InertiaSpec, IntegratorConfig, PotentialSpec, Propagator};
use attitude_core::filter::{FilterConfig, FilterMode};
use attitude_core::sim::{gen_truth, ScenarioSpec};
use attitude_core::so3::matrix_from_row_major;
use attitude_core::wahba::{
    build_profile, cost_j0, residual, solve_attitude, solve_attitude_or_procrustes, stationarity_residual, VectorSet,
    WeightMatrix,
};
use attitude_core::{principal_angle, Error, RotationMatrix};
use nalgebra::{Matrix3, Matrix3xX};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::output::{csv_row, json, OutputTarget};
use crate::{EXIT_CONFIG, EXIT_GOLDEN_MISMATCH, EXIT_REFLECTION_PROFILE, EXIT_RUNTIME, EXIT_SINGULAR_PROFILE};

pub const SCHEMA_VERSION: u32 = 1;
pub const GOLDEN_TOL: f64 = 2e-3;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    GoldenMismatch(f64),
    Core(Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::GoldenMismatch(_) => EXIT_GOLDEN_MISMATCH,
            Failure::Core(Error::SingularProfile { .. }) => EXIT_SINGULAR_PROFILE,
            Failure::Core(Error::ReflectionProfile { .. }) => EXIT_REFLECTION_PROFILE,
            Failure::Core(
                Error::ShapeMismatch { .. }
                | Error::NotSkew { .. }
                | Error::NotRotation { .. }
                | Error::NotSymmetricPd { .. }
                | Error::NonFinite { .. }
                | Error::NotUnitVector { .. }
                | Error::InvalidWeights { .. }
                | Error::InvalidTimeSpan { .. }
                | Error::MissingGyro { .. }
                | Error::MissingInitialOmega
                | Error::NoBatches
                | Error::UnknownStrategy { .. }
                | Error::InvalidConfig(_),
            ) => EXIT_CONFIG,
            Failure::Core(_) | Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(msg) => write!(f, "invalid config: {msg}"),
            Failure::GoldenMismatch(dev) => {
                write!(f, "golden mismatch: Ĉ deviates from the published matrix by {dev:.3e} > {GOLDEN_TOL:e}")
            }
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

type Outcome = Result<(), Failure>;

/// Reads a JSON config and checks its schema version before decoding.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T, Failure> {
    let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| Failure::Config(e.to_string()))?;
    let schema = value.as_object_mut().and_then(|o| o.remove("schema"));
    match schema.as_ref().and_then(serde_json::Value::as_u64) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => {}
        Some(v) => return Err(Failure::Config(format!("unsupported schema {v}, expected {SCHEMA_VERSION}"))),
        None => return Err(Failure::Config("missing \"schema\" field".into())),
    }
    serde_json::from_value(value).map_err(|e| Failure::Config(e.to_string()))
}

mod golden {
    pub const E: [f64; 21] = [
        0.3817, 0.3077, 0.2324, 0.3374, 0.3161, 0.2975, 0.2807, //
        -0.5450, -0.6045, -0.5824, -0.5675, -0.6582, -0.6046, -0.5912, //
        0.7465, 0.7347, 0.7789, 0.7511, 0.6832, 0.7389, 0.7561,
    ];
    pub const B: [f64; 21] = [
        0.1287, 0.0975, 0.1580, 0.1264, 0.0210, 0.1020, 0.1249, //
        -0.9628, -0.9843, -0.9833, -0.9750, -0.9904, -0.9829, -0.9836, //
        -0.2394, -0.1517, -0.0862, -0.1904, -0.1414, -0.1404, -0.1279,
    ];
    pub const C_TRUE: [f64; 9] = [
        -0.2029, -0.1865, -0.9613, //
        0.6385, 0.7191, -0.2743, //
        0.7424, -0.6694, -0.0269,
    ];
    pub const C_HAT: [f64; 9] = [
        -0.2042, -0.1856, -0.9612, //
        0.6386, 0.7190, -0.2745, //
        0.7420, -0.6698, -0.0283,
    ];
}

#[derive(Debug, Serialize)]
struct PaperReport {
    c_hat: [f64; 9],
    error_matrix: [f64; 9],
    residual: Vec<f64>,
    max_deviation_from_published: f64,
    tolerance: f64,
    passed: bool,
}

fn row_major(m: &Matrix3<f64>) -> [f64; 9] {
    std::array::from_fn(|k| m[(k / 3, k % 3)])
}

fn row_major_3xn(m: &Matrix3xX<f64>) -> Vec<f64> {
    (0..3).flat_map(|i| m.row(i).iter().copied().collect::<Vec<_>>()).collect()
}

fn format_matrix(name: &str, rows: usize, cols: usize, at: impl Fn(usize, usize) -> f64) -> String {
    let mut s = format!("{name} =\n");
    for i in 0..rows {
        let cells: Vec<String> = (0..cols).map(|j| format!("{:>10.6}", at(i, j))).collect();
        s.push_str(&format!("  [{} ]\n", cells.join(" ")));
    }
    s
}

pub fn paper_example(json_target: Option<&OutputTarget>) -> Outcome {
    let e = VectorSet::from_row_major(&golden::E)?;
    let b = VectorSet::from_row_major(&golden::B)?;
    let sol = solve_attitude(&build_profile(&e, &WeightMatrix::identity(7), &b)?)?;
    let c_hat = sol.c_hat.matrix();
    let c_true = matrix_from_row_major(&golden::C_TRUE);
    let e_c = c_hat.transpose() * c_true - Matrix3::identity();
    let r = residual(&sol.c_hat, &e, &b)?;
    let deviation = (c_hat - matrix_from_row_major(&golden::C_HAT)).amax();
    let passed = deviation <= GOLDEN_TOL;

    let mut text = String::from("Seven-star example, identity weights\n");
    text.push_str(&format_matrix("C_hat", 3, 3, |i, j| c_hat[(i, j)]));
    text.push_str(&format_matrix("e_C = C_hat^T C - I", 3, 3, |i, j| e_c[(i, j)]));
    text.push_str(&format_matrix("E - C_hat B", 3, 7, |i, j| r[(i, j)]));
    text.push_str(&format!(
        "max |C_hat - published C_hat| = {deviation:.3e} (tolerance {GOLDEN_TOL:e}): {}\n",
        if passed { "ok" } else { "MISMATCH" }
    ));
    OutputTarget::Stdout.write(&text)?;

    if let Some(target) = json_target {
        target.write(&json(&PaperReport {
            c_hat: row_major(c_hat),
            error_matrix: row_major(&e_c),
            residual: row_major_3xn(&r),
            max_deviation_from_published: deviation,
            tolerance: GOLDEN_TOL,
            passed,
        })?)?;
    }
    if passed {
        Ok(())
    } else {
        Err(Failure::GoldenMismatch(deviation))
    }
}

/// One-shot determination input. Matrices are row-major, `3 × n` for the
/// vector sets.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetermineConfig {
    #[serde(rename = "E")]
    pub e: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    #[serde(rename = "W", default)]
    pub w: Option<Vec<f64>>,
    /// True attitude for the principal-angle diagnostic.
    #[serde(default)]
    pub truth: Option<[f64; 9]>,
    /// Fall back to the SVD solution when `det L ≤ 0`.
    #[serde(default)]
    pub procrustes_fallback: bool,
}

#[derive(Debug, Serialize)]
struct DetermineReport {
    c_hat: RotationMatrix,
    s: Option<[f64; 9]>,
    det_l: f64,
    #[serde(rename = "cost_J0")]
    cost_j0: f64,
    stationarity_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    principal_angle_rad: Option<f64>,
}

pub fn determine(config: &Path, target: &OutputTarget) -> Outcome {
    let cfg: DetermineConfig = load(config)?;
    let e = VectorSet::from_row_major(&cfg.e)?;
    let b = VectorSet::from_row_major(&cfg.b)?;
    let w = match cfg.w {
        Some(w) => WeightMatrix::new(w)?,
        None => WeightMatrix::identity(e.len()),
    };
    let profile = build_profile(&e, &w, &b)?;
    let (c_hat, s) = match solve_attitude(&profile) {
        Ok(sol) => (sol.c_hat, Some(row_major(sol.s.matrix()))),
        Err(Error::ReflectionProfile { .. }) if cfg.procrustes_fallback => {
            (solve_attitude_or_procrustes(&profile)?, None)
        }
        Err(err) => return Err(err.into()),
    };
    let angle = match cfg.truth {
        Some(t) => Some(principal_angle(&c_hat, &RotationMatrix::try_from(t)?)),
        None => None,
    };
    let report = DetermineReport {
        c_hat,
        s,
        det_l: profile.det(),
        cost_j0: cost_j0(&c_hat, &e, &b, &w)?,
        stationarity_residual: stationarity_residual(&c_hat, profile.matrix()),
        principal_angle_rad: angle,
    };
    target.write(&json(&report)?)?;
    eprintln!(
        "determined attitude from {} vectors: cost_J0 = {:.3e}, stationarity residual = {:.1e}{}",
        e.len(),
        report.cost_j0,
        report.stationarity_residual,
        angle.map(|a| format!(", error vs truth = {a:.3e} rad")).unwrap_or_default()
    );
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagateConfig {
    pub lambda: InertiaSpec,
    #[serde(default)]
    pub potential: PotentialSpec,
    pub init: BodyState,
    pub t_end: f64,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    /// Number of equal intervals sampled between the initial and final time.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    100
}

pub const PROPAGATE_HEADER: &str =
    "t,c11,c12,c13,c21,c22,c23,c31,c32,c33,omega_x,omega_y,omega_z,kinetic_energy,potential_energy";

pub fn propagate(config: &Path, target: &OutputTarget) -> Outcome {
    let cfg: PropagateConfig = load(config)?;
    if cfg.samples == 0 {
        return Err(Failure::Config("samples must be at least 1".into()));
    }
    if !(cfg.t_end >= cfg.init.t) {
        return Err(Error::InvalidTimeSpan {
            reason: format!("t_end = {} precedes the initial time {}", cfg.t_end, cfg.init.t),
        }
        .into());
    }
    let potential = cfg.potential.build(cfg.lambda.lambda())?;
    let propagator = Propagator::new(&cfg.integrator)?;
    let row = |s: &BodyState| {
        let mut v = vec![s.t];
        v.extend(row_major(s.c.matrix()));
        v.extend(s.omega.to_vector().iter());
        v.push(kinetic_energy(&cfg.lambda, &s.omega));
        v.push(potential.value(&s.c));
        csv_row(&v)
    };
    let mut out = format!("{PROPAGATE_HEADER}\n");
    let mut state = cfg.init;
    out.push_str(&row(&state));
    let t0 = cfg.init.t;
    let dt = (cfg.t_end - t0) / cfg.samples as f64;
    for k in 1..=cfg.samples {
        let t = if k == cfg.samples { cfg.t_end } else { t0 + dt * k as f64 };
        state = propagator.propagate(&state, &cfg.lambda, potential.as_ref(), t)?;
        out.push_str(&row(&state));
    }
    target.write(&out)?;
    let e0 = kinetic_energy(&cfg.lambda, &cfg.init.omega) + potential.value(&cfg.init.c);
    let e1 = kinetic_energy(&cfg.lambda, &state.omega) + potential.value(&state.c);
    eprintln!(
        "propagated to t = {} with {} (step {}): energy change {:.3e}, orthogonality error {:.1e}",
        cfg.t_end,
        cfg.integrator.scheme,
        cfg.integrator.step,
        e1 - e0,
        state.c.orthogonality_error()
    );
    Ok(())
}

/// A simulated filter run; also the Monte-Carlo config with `trials`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub mode: FilterMode,
    #[serde(default)]
    pub init: InitPolicy,
    #[serde(default)]
    pub trials: Option<usize>,
}

impl RunConfig {
    fn apply(&mut self, seed: Option<u64>, mode: Option<FilterMode>) {
        if let Some(seed) = seed {
            self.scenario.noise.seed = seed;
        }
        if let Some(mode) = mode {
            self.mode = mode;
        }
    }
}

pub fn filter(config: &Path, target: &OutputTarget, seed: Option<u64>, mode: Option<FilterMode>) -> Outcome {
    let mut cfg: RunConfig = load(config)?;
    cfg.apply(seed, mode);
    let truth = gen_truth(&cfg.scenario)?;
    let run = run_trial(&cfg.scenario, &truth, &cfg.filter, cfg.mode, &cfg.init, 0)?;
    let mut out = format!("{CSV_HEADER}\n");
    for m in &run.metrics {
        let v = m.values();
        out.push_str(&csv_row(&[m.t, v[0], v[1], v[2], v[3], v[4]]));
    }
    target.write(&out)?;
    let n = run.metrics.len().max(1) as f64;
    eprintln!(
        "{} filter, {} epochs, seed {}: mean post-update attitude error {:.3e} rad, mean rate error {:.3e} rad/s",
        cfg.mode.name(),
        run.metrics.len(),
        cfg.scenario.noise.seed,
        run.metrics.iter().map(|m| m.err_att_post_rad).sum::<f64>() / n,
        run.metrics.iter().map(|m| m.err_omega_post).sum::<f64>() / n,
    );
    Ok(())
}

pub fn montecarlo(
    config: &Path,
    target: &OutputTarget,
    seed: Option<u64>,
    mode: Option<FilterMode>,
    trials: Option<usize>,
) -> Outcome {
    let mut cfg: RunConfig = load(config)?;
    cfg.apply(seed, mode);
    let trials = trials
        .or(cfg.trials)
        .ok_or_else(|| Failure::Config("trials must be given in the config or with --trials".into()))?;
    let spec = CampaignSpec {
        scenario: cfg.scenario,
        filter: cfg.filter,
        mode: cfg.mode,
        trials,
        init: cfg.init,
    };
    let summary = run_campaign(&spec)?;
    target.write(&json(&summary)?)?;
    eprintln!(
        "{} trials ({}), master seed {}: mean post-update attitude error {:.3e} rad (std {:.3e}, max {:.3e})",
        summary.trials,
        summary.mode.name(),
        summary.master_seed,
        summary.aggregate.err_att_post_rad.mean,
        summary.aggregate.err_att_post_rad.std,
        summary.aggregate.err_att_post_rad.max,
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_is_required_and_checked() {
        let missing = parse::<serde_json::Value>("{}");
        assert!(matches!(missing, Err(Failure::Config(_))));
        let wrong = parse::<serde_json::Value>(r#"{"schema": 2}"#);
        assert!(matches!(wrong, Err(Failure::Config(ref m)) if m.contains("schema 2")));
        assert!(parse::<serde_json::Value>(r#"{"schema": 1}"#).is_ok());
    }

    #[test]
    fn exit_codes_are_distinct() {
        let codes = [
            Failure::Config(String::new()).exit_code(),
            Failure::GoldenMismatch(1.0).exit_code(),
            Failure::Core(Error::SingularProfile { reason: String::new() }).exit_code(),
            Failure::Core(Error::ReflectionProfile { det: -1.0 }).exit_code(),
            Failure::Core(Error::StepTooLarge { angle: 1.0, limit: 0.5 }).exit_code(),
        ];
        assert_eq!(codes, [2, 3, 4, 5, 1]);
    }

    #[test]
    fn golden_fixtures_are_row_major() {
        let e = VectorSet::from_row_major(&golden::E).unwrap();
        assert_eq!(e.len(), 7);
        assert_eq!(e.columns()[(1, 0)], -0.5450);
        assert_eq!(row_major(&matrix_from_row_major(&golden::C_HAT)), golden::C_HAT);
    }
}
