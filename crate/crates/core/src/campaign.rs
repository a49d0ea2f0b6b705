//! Filter runs against simulated truth, and Monte-Carlo campaigns of them.

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::BodyState;
use crate::error::{Error, Result};
use crate::filter::{run_filter, FilterConfig, FilterEstimate, FilterInit, FilterMode, MeasurementBatch};
use crate::sim::{gen_truth, simulate_batches, ScenarioSpec};
use crate::so3::{principal_angle, SkewMatrix};
use crate::wahba::cost_j0;

/// How the filter is started relative to the truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct InitPolicy {
    /// Determine the initial attitude from the first batch instead of
    /// starting at the true attitude.
    pub bootstrap_attitude: bool,
    /// Error added to the true initial body rate, rad/s.
    pub omega_offset: [f64; 3],
}

impl InitPolicy {
    pub fn filter_init(&self, truth0: &BodyState) -> FilterInit {
        FilterInit {
            attitude: (!self.bootstrap_attitude).then_some(truth0.c),
            omega: Some(truth0.omega + SkewMatrix::from_vector(&Vector3::from(self.omega_offset))),
        }
    }
}

/// Error metrics at one measurement instant. Field names double as the
/// CSV header.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub t: f64,
    pub err_att_pre_rad: f64,
    pub err_att_post_rad: f64,
    pub err_omega_pre: f64,
    pub err_omega_post: f64,
    #[serde(rename = "cost_J0")]
    pub cost_j0: f64,
}

pub const CSV_HEADER: &str = "t,err_att_pre_rad,err_att_post_rad,err_omega_pre,err_omega_post,cost_J0";

impl EpochMetrics {
    pub fn values(&self) -> [f64; 5] {
        [
            self.err_att_pre_rad,
            self.err_att_post_rad,
            self.err_omega_pre,
            self.err_omega_post,
            self.cost_j0,
        ]
    }
}

/// Compares estimates with truth; `cost_J0` is the measurement cost of
/// the updated attitude.
pub fn evaluate(truth: &[BodyState], batches: &[MeasurementBatch], estimates: &[FilterEstimate]) -> Result<Vec<EpochMetrics>> {
    if truth.len() != estimates.len() || batches.len() != estimates.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} truth states and batches", estimates.len()),
            found: format!("{} truth states, {} batches", truth.len(), batches.len()),
        });
    }
    truth
        .iter()
        .zip(batches)
        .zip(estimates)
        .map(|((s, b), est)| {
            Ok(EpochMetrics {
                t: est.t,
                err_att_pre_rad: principal_angle(&est.c_minus, &s.c),
                err_att_post_rad: principal_angle(&est.c_plus, &s.c),
                err_omega_pre: (est.omega_minus.to_vector() - s.omega.to_vector()).norm(),
                err_omega_post: (est.omega_plus.to_vector() - s.omega.to_vector()).norm(),
                cost_j0: cost_j0(&est.c_plus, &b.e, &b.b, &b.w)?,
            })
        })
        .collect()
}

/// One filter run over its own noise realization.
#[derive(Debug, Clone)]
pub struct TrialOutput {
    pub batches: Vec<MeasurementBatch>,
    pub estimates: Vec<FilterEstimate>,
    pub metrics: Vec<EpochMetrics>,
}

/// Runs the filter on random stream `stream` of the scenario seed.
pub fn run_trial(
    scn: &ScenarioSpec,
    truth: &[BodyState],
    cfg: &FilterConfig,
    mode: FilterMode,
    init: &InitPolicy,
    stream: u64,
) -> Result<TrialOutput> {
    let first = truth.first().ok_or(Error::NoBatches)?;
    let batches = simulate_batches(scn, truth, stream)?;
    let potential = scn.potential.build(scn.inertia.lambda())?;
    let estimates = run_filter(init.filter_init(first), &batches, &scn.inertia, potential.as_ref(), cfg, mode)?;
    let metrics = evaluate(truth, &batches, &estimates)?;
    Ok(TrialOutput {
        batches,
        estimates,
        metrics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
                max: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            std: var.sqrt(),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub err_att_pre_rad: Stats,
    pub err_att_post_rad: Stats,
    pub err_omega_pre: Stats,
    pub err_omega_post: Stats,
    #[serde(rename = "cost_J0")]
    pub cost_j0: Stats,
}

impl MetricStats {
    pub fn of<'a>(rows: impl Iterator<Item = &'a EpochMetrics> + Clone) -> Self {
        let column = |i: usize| Stats::of(&rows.clone().map(|m| m.values()[i]).collect::<Vec<_>>());
        Self {
            err_att_pre_rad: column(0),
            err_att_post_rad: column(1),
            err_omega_pre: column(2),
            err_omega_post: column(3),
            cost_j0: column(4),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochSummary {
    pub index: usize,
    pub t: f64,
    #[serde(flatten)]
    pub stats: MetricStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub trials: usize,
    pub mode: FilterMode,
    pub master_seed: u64,
    pub per_epoch: Vec<EpochSummary>,
    pub aggregate: MetricStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSpec {
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub mode: FilterMode,
    pub trials: usize,
    #[serde(default)]
    pub init: InitPolicy,
}

/// Runs `trials` independent noise realizations (stream `i` for trial `i`,
/// in parallel) and reduces them in trial order.
pub fn run_campaign(spec: &CampaignSpec) -> Result<CampaignSummary> {
    if spec.trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let truth = gen_truth(&spec.scenario)?;
    let runs: Vec<Vec<EpochMetrics>> = (0..spec.trials as u64)
        .into_par_iter()
        .map(|i| run_trial(&spec.scenario, &truth, &spec.filter, spec.mode, &spec.init, i).map(|o| o.metrics))
        .collect::<Result<_>>()?;
    Ok(summarize(&runs, spec.mode, spec.scenario.noise.seed))
}

pub fn summarize(runs: &[Vec<EpochMetrics>], mode: FilterMode, master_seed: u64) -> CampaignSummary {
    let epochs = runs.first().map_or(0, Vec::len);
    let per_epoch = (0..epochs)
        .map(|k| EpochSummary {
            index: k,
            t: runs[0][k].t,
            stats: MetricStats::of(runs.iter().map(|r| &r[k])),
        })
        .collect();
    CampaignSummary {
        trials: runs.len(),
        mode,
        master_seed,
        per_epoch,
        aggregate: MetricStats::of(runs.iter().flatten()),
    }
}
