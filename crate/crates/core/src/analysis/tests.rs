use super::*;
use crate::celsius_to_kelvin;
use crate::circuits::{build_fixture, build_readout, FixtureKind, ReadoutConfig};
use crate::devices::{nernst_slope, IsfetModel, MosfetModel, T_REF};
use crate::netlist::{elaborate, Circuit, ProbeSpec, SweepAxis, SweepVariable};
use crate::solver::SolverConfig;
use alloc::vec;
use alloc::vec::Vec;
use proptest::prelude::*;

fn readout(cfg: &ReadoutConfig) -> Circuit {
    elaborate(&build_readout(cfg).unwrap()).unwrap()
}

fn sweep(c: &Circuit) -> SweepResult {
    run_sweep(
        c,
        &SweepSpec::from_circuit(c).unwrap(),
        &SolverConfig::default(),
    )
    .unwrap()
}

fn sample(ph: f64, temp_c: f64, vo: f64) -> Sample {
    Sample {
        ph: Some(ph),
        temp_c,
        vo,
        converged: true,
    }
}

fn ph_only(cfg: ReadoutConfig) -> ReadoutConfig {
    ReadoutConfig {
        temp_sweep: None,
        ..cfg
    }
}

#[test]
fn divider_source_sweep() {
    let c = elaborate(&build_fixture(FixtureKind::Divider)).unwrap();
    let spec = SweepSpec {
        axes: vec![SweepAxis::new(
            SweepVariable::Source("v1".into()),
            0.0,
            1.0,
            0.5,
        )],
        probe: Probe::Nodes(ProbeSpec::node("2")),
    };
    let r = run_sweep(&c, &spec, &SolverConfig::default()).unwrap();
    let vo: Vec<f64> = r.points.iter().map(|p| p.vo).collect();
    assert_eq!(r.shape, [3]);
    for (got, want) in vo.iter().zip([0.0, 0.25, 0.5]) {
        assert!((got - want).abs() < 1e-12, "{vo:?}");
    }
    assert_eq!(r.probe_label, "v(2)");
    // an element probe reads the voltage across it
    let spec = SweepSpec {
        probe: Probe::Element("R1".into()),
        ..spec
    };
    let r = run_sweep(&c, &spec, &SolverConfig::default()).unwrap();
    assert!((r.points[2].vo - 0.5).abs() < 1e-12);
}

#[test]
fn readout_ph_axis_converges_everywhere() {
    let r = sweep(&readout(&ph_only(ReadoutConfig::default())));
    assert_eq!(r.points.len(), 13);
    assert!(r.points.iter().all(|p| p.converged), "{:?}", r.points);
    assert!(r.points.iter().all(|p| p.max_kcl_residual <= 1e-12));
}

#[test]
fn full_grid_shape_and_oracle_agreement() {
    let cfg = ReadoutConfig::default();
    let r = sweep(&readout(&cfg));
    assert_eq!(r.shape, [13, 21]);
    assert_eq!(r.points.len(), 273);
    assert_eq!(r.failures(), 0);
    let p = r.get(&[6, 5]).unwrap();
    assert_eq!((p.ph, p.temp_c), (Some(7.0), 25.0));
    assert!(r.get(&[13, 0]).is_none());
    for p in &r.points {
        let t = celsius_to_kelvin(p.temp_c);
        let want = closed_form_vo(
            &cfg.nmos_model,
            &cfg.isfet_model,
            cfg.i_bias,
            cfg.w,
            cfg.l,
            p.ph.unwrap(),
            t,
        )
        .unwrap();
        assert!((p.vo - want).abs() <= 1e-3, "{p:?} vs {want}");
    }
}

#[test]
fn sensitivity_matches_nernst_scaling() {
    for (alpha, want, tol) in [
        (1.0, 0.05916, 1e-4),
        (0.93, 0.05502, 5e-4),
        (0.0, 0.0, 1e-9),
    ] {
        let mut cfg = ph_only(ReadoutConfig::default());
        cfg.isfet_model.alpha = alpha;
        let r = sweep(&readout(&cfg));
        let s = sensitivity(&r.samples(), 25.0).unwrap();
        assert!(
            (s.volts_per_ph - want).abs() <= tol,
            "alpha {alpha}: {}",
            s.volts_per_ph
        );
        assert!((s.volts_per_ph - alpha * nernst_slope(T_REF)).abs() < 1e-6);
        if alpha > 0.0 {
            assert!(s.r2 > 0.999_999);
        }
    }
}

#[test]
fn sensitivity_needs_a_ph_axis() {
    let s = [sample(7.0, 25.0, 1.0), sample(7.0, 30.0, 1.1)];
    assert_eq!(sensitivity(&s, 25.0), Err(AnalysisError::MissingAxis("ph")));
}

#[test]
fn linear_fit_examples() {
    let xs = [0.0, 1.0, 2.0, 3.0];
    let f = linear_fit(&xs, &[1.0, 3.0, 5.0, 7.0]).unwrap();
    assert!((f.slope - 2.0).abs() < 1e-15 && (f.intercept - 1.0).abs() < 1e-15 && f.r2 == 1.0);
    let f = linear_fit(&xs, &[4.0; 4]).unwrap();
    assert_eq!(f.slope, 0.0);
    let f = linear_fit(&[0.0, 1.0, 2.0], &[0.0, 1.0, 1.0]).unwrap();
    assert!((f.slope - 0.5).abs() < 1e-15);
    assert!((f.intercept - 1.0 / 6.0).abs() < 1e-15);
    assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    assert!(linear_fit(&[1.0], &[0.0]).is_err());
}

#[test]
fn tc_examples() {
    let flat: Vec<Sample> = (0..=20).map(|i| sample(7.0, 5.0 * i as f64, 0.4)).collect();
    assert_eq!(temperature_coefficient(&flat, 7.0), Ok(0.0));
    assert_eq!(tc_joint(&flat), Ok(0.0));
    let s = [
        sample(7.0, 0.0, 0.98),
        sample(7.0, 50.0, 1.0),
        sample(7.0, 100.0, 1.02),
    ];
    assert!((temperature_coefficient(&s, 7.0).unwrap() - 400.0).abs() < 1e-9);
    let z = [sample(7.0, 0.0, -1.0), sample(7.0, 100.0, 1.0)];
    assert_eq!(
        temperature_coefficient(&z, 7.0),
        Err(AnalysisError::ZeroMean)
    );
    assert_eq!(
        temperature_coefficient(&s, 3.0),
        Err(AnalysisError::MissingAxis("temp"))
    );
}

fn matched_no_drift() -> ReadoutConfig {
    let mut cfg = ReadoutConfig::default();
    cfg.isfet_model.de_ref_dt = 0.0;
    cfg.ph_sweep = None;
    cfg.ph = cfg.isfet_model.ph_pzc;
    cfg
}

#[test]
fn cancellation_at_pzc() {
    let r = sweep(&readout(&matched_no_drift()));
    assert_eq!(r.points.len(), 21);
    let vo: Vec<f64> = r.points.iter().map(|p| p.vo).collect();
    let spread = vo.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - vo.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    assert!(spread <= 10e-6, "{spread}");
    let tc = temperature_coefficient(&r.samples(), 2.2).unwrap();
    assert!(tc <= 1.0, "{tc}");
}

#[test]
fn common_mode_threshold_shift_is_invisible() {
    let base = ReadoutConfig::default();
    let mut shifted = base.clone();
    shifted.nmos_model.vto += 0.1;
    shifted.isfet_model.mos.vto += 0.1;
    let a = sweep(&readout(&base));
    let b = sweep(&readout(&shifted));
    for (p, q) in a.points.iter().zip(&b.points) {
        assert!((p.vo - q.vo).abs() <= 10e-6, "{p:?} {q:?}");
    }
}

#[test]
fn tc_scales_linearly_with_tcv_mismatch() {
    let tcs: Vec<f64> = [0.05e-3, 0.1e-3, 0.2e-3]
        .iter()
        .map(|d| {
            let mut cfg = matched_no_drift();
            cfg.nmos_model.tcv += d;
            temperature_coefficient(&sweep(&readout(&cfg)).samples(), 2.2).unwrap()
        })
        .collect();
    for (tc, k) in tcs.iter().zip([1.0, 2.0, 4.0]) {
        let ratio = tc / (k * tcs[0]);
        assert!((ratio - 1.0).abs() <= 0.05, "{tcs:?}");
    }
}

#[test]
fn closed_form_examples() {
    let m = MosfetModel::default();
    let shifted = IsfetModel {
        mos: m,
        e_ref: 0.3,
        de_ref_dt: 0.0,
        ..IsfetModel::default()
    };
    let vo = closed_form_vo(&m, &shifted, 100e-6, 840e-6, 18e-6, shifted.ph_pzc, T_REF).unwrap();
    assert!((vo + 0.3).abs() < 1e-12);
    let zero = IsfetModel {
        e_ref: 0.0,
        ..shifted
    };
    assert!(
        closed_form_vo(&m, &zero, 100e-6, 840e-6, 18e-6, zero.ph_pzc, T_REF)
            .unwrap()
            .abs()
            < 1e-15
    );
    // K' = 1e-3; (W/L)_isfet = 2, (W/L)_nmos = 1
    let k = MosfetModel { kp: 1e-3, ..m };
    let iso = IsfetModel { mos: k, ..zero };
    let vo = closed_form_vo_sized(
        &k,
        (1e-6, 1e-6),
        &iso,
        (2e-6, 1e-6),
        100e-6,
        iso.ph_pzc,
        T_REF,
    )
    .unwrap();
    assert!((vo - (libm::sqrt(0.2) - libm::sqrt(0.1))).abs() < 1e-12);
    assert!((vo - 0.1309).abs() < 1e-4);
    assert_eq!(
        closed_form_vo(&m, &zero, 0.0, 1e-6, 1e-6, 7.0, T_REF),
        Err(AnalysisError::Cutoff(0.0))
    );
}

#[test]
fn isothermal_drift_flattens_the_chosen_slice() {
    let mut cfg = ReadoutConfig::default();
    cfg.isfet_model.alpha = 0.93;
    cfg.isfet_model.ph_pzc = 6.0;
    cfg.isfet_model.de_ref_dt = isothermal_de_ref_dt(0.93, 7.0, 6.0);
    assert!((cfg.isfet_model.de_ref_dt + 1.8453e-4).abs() < 1e-8);
    let r = sweep(&readout(&cfg));
    let report = MetricsReport::from_samples(&r.samples()).unwrap();
    let (best_ph, best) = report.tc_per_ph_best.unwrap();
    assert_eq!(best_ph, 7.0);
    assert!(best < 1.0, "{best}");
    assert!(report.tc_per_ph_worst.unwrap().1 > best);
}

#[test]
fn failure_threshold() {
    let c = elaborate(&build_fixture(FixtureKind::Divider)).unwrap();
    let spec = SweepSpec {
        axes: vec![SweepAxis::new(
            SweepVariable::Source("v1".into()),
            0.0,
            1.0,
            0.1,
        )],
        probe: Probe::Nodes(ProbeSpec::node("2")),
    };
    let plan = SweepPlan::new(&c, spec).unwrap();
    let mut r = plan.finish(vec![plan.solve_row(&SolverConfig::default(), 0)]);
    assert_eq!(r.points.len(), 11);
    r.points[0].converged = false;
    assert!(r.check().is_ok());
    r.points[1].converged = false;
    assert_eq!(
        r.check(),
        Err(AnalysisError::TooManyFailures {
            failed: 2,
            total: 11
        })
    );
}

#[test]
fn plan_rejects_bad_specs() {
    let c = elaborate(&build_fixture(FixtureKind::Divider)).unwrap();
    let bad_probe = SweepSpec {
        axes: Vec::new(),
        probe: Probe::Nodes(ProbeSpec::node("nowhere")),
    };
    assert!(matches!(
        SweepPlan::new(&c, bad_probe),
        Err(AnalysisError::UnknownProbe(_))
    ));
    let ph = SweepSpec {
        axes: vec![SweepAxis::new(SweepVariable::Ph, 1.0, 2.0, 1.0)],
        probe: Probe::Nodes(ProbeSpec::node("2")),
    };
    assert!(matches!(
        SweepPlan::new(&c, ph),
        Err(AnalysisError::Unresolvable(_))
    ));
}

#[test]
fn rows_are_order_independent() {
    let c = readout(&ReadoutConfig::default());
    let plan = SweepPlan::new(&c, SweepSpec::from_circuit(&c).unwrap()).unwrap();
    let cfg = SolverConfig::default();
    let forward: Vec<_> = (0..plan.row_count())
        .map(|r| plan.solve_row(&cfg, r))
        .collect();
    let mut backward: Vec<_> = (0..plan.row_count())
        .rev()
        .map(|r| plan.solve_row(&cfg, r))
        .collect();
    backward.reverse();
    assert_eq!(plan.finish(forward), plan.finish(backward));
}

proptest! {
    #[test]
    fn fit_recovers_lines(slope in -10.0f64..10.0, icpt in -5.0f64..5.0, n in 2usize..20) {
        let xs: Vec<f64> = (0..n).map(|i| i as f64 * 0.5).collect();
        let ys: Vec<f64> = xs.iter().map(|x| slope * x + icpt).collect();
        let f = linear_fit(&xs, &ys).unwrap();
        prop_assert!((f.slope - slope).abs() < 1e-9);
        prop_assert!((f.intercept - icpt).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&f.r2));
    }

    #[test]
    fn report_invariants(vos in proptest::collection::vec(0.1f64..2.0, 6)) {
        let samples: Vec<Sample> = vos
            .iter()
            .enumerate()
            .map(|(i, &v)| sample((i % 3) as f64 + 4.0, (i / 3) as f64 * 50.0, v))
            .collect();
        let r = MetricsReport::from_samples(&samples).unwrap();
        prop_assert!(r.vo_min <= r.vo_mean && r.vo_mean <= r.vo_max);
        prop_assert!(r.tc_joint.unwrap() >= 0.0);
        for (_, tc) in &r.tc_by_ph {
            prop_assert!(tc.unwrap() >= 0.0);
        }
        prop_assert_eq!(r.sensitivity_by_temp.len(), 2);
    }
}
