mod common;

use attitude_core::campaign::{evaluate, run_campaign, run_trial, CampaignSpec, InitPolicy};
use attitude_core::dynamics::{j_operator, BodyState, InertiaSpec, IntegratorConfig, PotentialSpec, ZeroPotential};
use attitude_core::filter::{
    run_filter, update_attitude, update_omega_no_gyro, update_omega_with_gyro, AttitudeFilter, FilterConfig,
    FilterInit, FilterMode, MeasurementBatch,
};
use attitude_core::sim::{gen_truth, simulate_batches, uniform_schedule, NoiseSpec, ScenarioSpec};
use attitude_core::wahba::{VectorSet, WeightMatrix};
use attitude_core::{Error, SkewMatrix, SymmetricPd};
use common::*;
use nalgebra::{Matrix3, Vector3, Vector4};
use proptest::prelude::*;

fn rotation() -> impl Strategy<Value = Matrix3<f64>> {
    prop::array::uniform4(-1.0..1.0_f64)
        .prop_filter("away from zero", |q| q.iter().map(|x| x * x).sum::<f64>() > 1e-2)
        .prop_map(|q| quat_to_matrix(&Vector4::from(q).normalize()))
}

fn spd_matrix(lo: f64, hi: f64) -> impl Strategy<Value = SymmetricPd> {
    (rotation(), prop::array::uniform3(lo..hi)).prop_map(|(r, d)| {
        SymmetricPd::new(r * Matrix3::from_diagonal(&Vector3::from(d)) * r.transpose()).unwrap()
    })
}

fn skew_matrix(scale: f64) -> impl Strategy<Value = SkewMatrix> {
    prop::array::uniform3(-scale..scale).prop_map(|v| SkewMatrix::from_vector(&Vector3::from(v)))
}

fn scenario(sigma_vec: f64, sigma_gyro: f64, seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        inertial_refs: paper_refs_unit(),
        inertia: InertiaSpec::from_principal_moments([1.0, 1.6, 2.1]).unwrap(),
        potential: PotentialSpec::Zero,
        init: BodyState::new(
            0.0,
            rot(svd_procrustes(&rows3x3(&PAPER_C_TRUE))),
            SkewMatrix::from_vector(&Vector3::new(0.05, -0.08, 0.12)),
        ),
        schedule: uniform_schedule(0.0, 0.1, 30),
        noise: NoiseSpec::new(sigma_vec, sigma_gyro, seed).unwrap(),
        weights: None,
        gyro_weight: None,
        truth_integrator: IntegratorConfig::default(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn exact_measurements_leave_exact_prediction_alone(c in rotation(), delta in spd_matrix(0.01, 10.0)) {
        let e = paper_refs_unit();
        let b = VectorSet::new(c.transpose() * e.columns()).unwrap();
        let batch = MeasurementBatch::new(0.0, e, b, WeightMatrix::identity(7)).unwrap();
        let cfg = FilterConfig { delta, ..FilterConfig::default() };
        let c_plus = update_attitude(&rot(c), &batch, &cfg).unwrap();
        prop_assert!((c_plus.matrix() - c).amax() <= 1e-12);
    }

    #[test]
    fn no_gyro_update_solves_its_lyapunov_equation(
        c_minus in rotation(), c_plus in rotation(), w in skew_matrix(3.0), pi in spd_matrix(0.1, 5.0),
    ) {
        let (cm, cp) = (rot(c_minus), rot(c_plus));
        let d = c_plus.transpose() * c_minus;
        let rhs = d * w.matrix() * pi.matrix() + pi.matrix() * w.matrix() * d.transpose();
        let updated = update_omega_no_gyro(&cm, &cp, &w, &pi).unwrap();
        prop_assert!((updated.matrix() - sylvester_kron(pi.matrix(), pi.matrix(), &rhs)).amax() <= 1e-10);
        let closed = 0.5 * (d * w.matrix() + w.matrix() * d.transpose());
        let identity = update_omega_no_gyro(&cm, &cp, &w, &SymmetricPd::identity()).unwrap();
        prop_assert!((identity.matrix() - closed).amax() <= 1e-12);
    }

    #[test]
    fn unchanged_attitude_keeps_the_rate(c in rotation(), w in skew_matrix(3.0), pi in spd_matrix(0.1, 5.0)) {
        let c = rot(c);
        let updated = update_omega_no_gyro(&c, &c, &w, &pi).unwrap();
        prop_assert!((updated.matrix() - w.matrix()).amax() <= 1e-11);
    }

    #[test]
    fn gyro_update_satisfies_its_defining_equation(
        w_minus in skew_matrix(2.0), w_meas in skew_matrix(2.0), x in spd_matrix(0.05, 5.0), gamma in spd_matrix(0.05, 5.0),
    ) {
        let plus = update_omega_with_gyro(&w_minus, &w_meas, &x, &gamma);
        let lhs = j_operator(&x.sum(&gamma), &plus);
        let rhs = j_operator(&x, &w_meas) + j_operator(&gamma, &w_minus);
        prop_assert!((lhs.matrix() - rhs.matrix()).amax() <= 1e-10);
        let id = SymmetricPd::identity();
        let mean = update_omega_with_gyro(&w_minus, &w_meas, &id, &id);
        prop_assert!((mean.matrix() - (w_minus.matrix() + w_meas.matrix()) * 0.5).amax() <= 1e-12);
    }

    #[test]
    fn gyro_update_is_a_weighted_average(
        w_minus in skew_matrix(2.0), w_meas in skew_matrix(2.0), a in 0.01..100.0_f64, b in 0.01..100.0_f64,
    ) {
        let x = SymmetricPd::scaled_identity(a).unwrap();
        let gamma = SymmetricPd::scaled_identity(b).unwrap();
        let plus = update_omega_with_gyro(&w_minus, &w_meas, &x, &gamma);
        let expected = (w_meas.matrix() * a + w_minus.matrix() * b) / (a + b);
        prop_assert!((plus.matrix() - expected).amax() <= 1e-12);
    }
}

#[test]
fn noise_free_filter_is_exact_in_both_modes() {
    let scn = scenario(0.0, 0.0, 0);
    let truth = gen_truth(&scn).unwrap();
    let batches = simulate_batches(&scn, &truth, 0).unwrap();
    for mode in [FilterMode::NoGyro, FilterMode::WithGyro] {
        for delta in [0.1, 1.0, 10.0] {
            let cfg = FilterConfig {
                delta: SymmetricPd::scaled_identity(delta).unwrap(),
                ..FilterConfig::default()
            };
            let est = run_filter(FilterInit::exact(&truth[0]), &batches, &scn.inertia, &ZeroPotential, &cfg, mode).unwrap();
            for m in evaluate(&truth, &batches, &est).unwrap() {
                assert!(m.err_att_pre_rad <= 1e-6 && m.err_att_post_rad <= 1e-6, "{m:?}");
                assert!(m.err_omega_pre <= 1e-6 && m.err_omega_post <= 1e-6, "{m:?}");
                assert!(m.cost_j0 < 1e-20);
            }
        }
    }
}

#[test]
fn first_instant_is_not_updated() {
    let scn = scenario(0.002, 0.01, 4);
    let truth = gen_truth(&scn).unwrap();
    let batches = simulate_batches(&scn, &truth, 0).unwrap();
    let init = FilterInit {
        attitude: Some(rot(quat_to_matrix(&Vector4::new(0.2, 0.1, -0.3, 0.9).normalize()))),
        omega: Some(SkewMatrix::from_vector(&Vector3::new(0.1, 0.2, 0.3))),
    };
    let est = run_filter(init, &batches, &scn.inertia, &ZeroPotential, &FilterConfig::default(), FilterMode::WithGyro).unwrap();
    assert_eq!(est[0].c_minus, init.attitude.unwrap());
    assert_eq!(est[0].c_plus, est[0].c_minus);
    assert_eq!(est[0].omega_plus, init.omega.unwrap());
    assert_eq!(est[0].omega_plus, est[0].omega_minus);
}

#[test]
fn streaming_matches_batch_run() {
    let scn = scenario(0.002, 0.01, 5);
    let truth = gen_truth(&scn).unwrap();
    let batches = simulate_batches(&scn, &truth, 2).unwrap();
    let cfg = FilterConfig::default();
    let all = run_filter(FilterInit::exact(&truth[0]), &batches, &scn.inertia, &ZeroPotential, &cfg, FilterMode::WithGyro).unwrap();
    let mut f = AttitudeFilter::new(FilterInit::exact(&truth[0]), &scn.inertia, &ZeroPotential, &cfg, FilterMode::WithGyro).unwrap();
    for (b, expected) in batches.iter().zip(&all) {
        assert_eq!(&f.process(b).unwrap(), expected);
    }
}

#[test]
fn bootstrap_initialization_uses_first_batch() {
    let scn = scenario(0.0, 0.0, 0);
    let truth = gen_truth(&scn).unwrap();
    let batches = simulate_batches(&scn, &truth, 0).unwrap();
    let est = run_filter(FilterInit::default(), &batches, &scn.inertia, &ZeroPotential, &FilterConfig::default(), FilterMode::WithGyro).unwrap();
    assert!((est[0].c_plus.matrix() - truth[0].c.matrix()).amax() < 1e-9);
    assert_eq!(est[0].omega_plus, truth[0].omega);
    let no_rate = run_filter(FilterInit::default(), &batches, &scn.inertia, &ZeroPotential, &FilterConfig::default(), FilterMode::NoGyro);
    assert!(matches!(no_rate, Err(Error::MissingInitialOmega)));
}

#[test]
fn malformed_batch_sequences_are_rejected() {
    let scn = scenario(0.0, 0.0, 0);
    let truth = gen_truth(&scn).unwrap();
    let mut batches = simulate_batches(&scn, &truth, 0).unwrap();
    let init = FilterInit::exact(&truth[0]);
    let cfg = FilterConfig::default();
    assert!(matches!(run_filter(init, &[], &scn.inertia, &ZeroPotential, &cfg, FilterMode::NoGyro), Err(Error::NoBatches)));

    let mut out_of_order = batches.clone();
    out_of_order.swap(3, 4);
    assert!(matches!(
        run_filter(init, &out_of_order, &scn.inertia, &ZeroPotential, &cfg, FilterMode::NoGyro),
        Err(Error::InvalidTimeSpan { .. })
    ));

    batches[5].omega_meas = None;
    assert!(matches!(
        run_filter(init, &batches, &scn.inertia, &ZeroPotential, &cfg, FilterMode::WithGyro),
        Err(Error::MissingGyro { index: 5 })
    ));
    assert!(run_filter(init, &batches, &scn.inertia, &ZeroPotential, &cfg, FilterMode::NoGyro).is_ok());
}

#[test]
fn reflected_profile_surfaces_during_filtering() {
    let scn = scenario(0.0, 0.0, 0);
    let truth = gen_truth(&scn).unwrap();
    let mut batches = simulate_batches(&scn, &truth, 0).unwrap();
    // measurements of a mirrored body drive det L negative once Δ is small
    let mirror = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
    let b = &batches[1].b;
    batches[1].b = VectorSet::new(mirror * b.columns()).unwrap();
    let cfg = FilterConfig {
        delta: SymmetricPd::scaled_identity(1e-6).unwrap(),
        ..FilterConfig::default()
    };
    let r = run_filter(FilterInit::exact(&truth[0]), &batches, &scn.inertia, &ZeroPotential, &cfg, FilterMode::NoGyro);
    assert!(matches!(r, Err(Error::ReflectionProfile { .. })), "{r:?}");
}

#[test]
fn gyro_aided_rates_beat_no_gyro_rates_over_twenty_seeds() {
    let init = InitPolicy {
        bootstrap_attitude: false,
        omega_offset: [0.02, -0.015, 0.01],
    };
    let cfg = FilterConfig::default();
    let mut wins = 0;
    let (mut gyro_total, mut plain_total) = (0.0, 0.0);
    for seed in 0..20 {
        let scn = scenario(0.002, 0.005, seed);
        let truth = gen_truth(&scn).unwrap();
        let mean_rate = |mode| {
            let out = run_trial(&scn, &truth, &cfg, mode, &init, 0).unwrap();
            out.metrics.iter().map(|m| m.err_omega_post).sum::<f64>() / out.metrics.len() as f64
        };
        let (g, p) = (mean_rate(FilterMode::WithGyro), mean_rate(FilterMode::NoGyro));
        gyro_total += g;
        plain_total += p;
        if g <= p {
            wins += 1;
        }
    }
    assert!(gyro_total <= plain_total, "with-gyro {gyro_total} vs no-gyro {plain_total}");
    assert_eq!(wins, 20);
}

fn campaign(trials: usize, mode: FilterMode) -> CampaignSpec {
    CampaignSpec {
        scenario: scenario(0.002, 0.005, 11),
        filter: FilterConfig::default(),
        mode,
        trials,
        init: InitPolicy::default(),
    }
}

#[test]
fn single_trial_campaign_matches_the_trial() {
    let spec = campaign(1, FilterMode::WithGyro);
    let summary = run_campaign(&spec).unwrap();
    let truth = gen_truth(&spec.scenario).unwrap();
    let out = run_trial(&spec.scenario, &truth, &spec.filter, spec.mode, &spec.init, 0).unwrap();
    assert_eq!(summary.per_epoch.len(), out.metrics.len());
    for (row, m) in summary.per_epoch.iter().zip(&out.metrics) {
        assert_eq!(row.stats.err_att_post_rad.mean, m.err_att_post_rad);
        assert_eq!(row.stats.err_omega_pre.max, m.err_omega_pre);
        assert_eq!(row.stats.cost_j0.std, 0.0);
    }
    let n = out.metrics.len() as f64;
    let mean = out.metrics.iter().map(|m| m.err_att_post_rad).sum::<f64>() / n;
    assert!((summary.aggregate.err_att_post_rad.mean - mean).abs() < 1e-15);
}

#[test]
fn campaigns_are_reproducible_and_trials_differ() {
    let spec = campaign(8, FilterMode::NoGyro);
    let a = run_campaign(&spec).unwrap();
    let b = run_campaign(&spec).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert!(a.per_epoch[5].stats.err_att_post_rad.std > 0.0);
    assert_eq!(a.trials, 8);
    assert!(matches!(run_campaign(&campaign(0, FilterMode::NoGyro)), Err(Error::InvalidConfig(_))));
}

#[test]
fn campaign_spec_round_trips_through_json() {
    let spec = campaign(3, FilterMode::WithGyro);
    let text = serde_json::to_string(&spec).unwrap();
    let back: CampaignSpec = serde_json::from_str(&text).unwrap();
    assert_eq!(back, spec);
}
