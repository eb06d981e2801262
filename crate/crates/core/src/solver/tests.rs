use super::*;
use crate::devices::{eval_mosfet, MosfetModel};
use crate::netlist::{elaborate, parse, Circuit};
use alloc::vec;

fn circuit(text: &str) -> Circuit {
    elaborate(&parse(text).unwrap()).unwrap()
}

fn solve(c: &Circuit) -> OperatingPoint {
    newton_dc(c, &SolverConfig::default(), None).unwrap()
}

const DIODE: &str =
    "diode\nI1 0 d 100u\nM1 d d 0 0 n W=10u L=1u\n.model n NMOS (VTO=0.7 KP=100u)\n.end";

#[test]
fn divider_is_linear_and_direct() {
    let c = circuit("div\nV1 1 0 1\nR1 1 2 1k\nR2 2 0 1k\n.end");
    let op = solve(&c);
    assert_eq!(op.strategy, Strategy::Direct);
    assert!(op.iterations <= 2, "{}", op.iterations);
    assert!((op.node_voltages[1] - 0.5).abs() < 1e-12);
    // 0.5 mA flows out of the + terminal
    assert!((op.branch_currents[0] + 0.5e-3).abs() < 1e-15);
}

#[test]
fn diode_connected_settles_at_vth_plus_overdrive() {
    // beta = 1 mA/V², vov = sqrt(2·100µ/1m)
    let op = solve(&circuit(DIODE));
    let want = 0.7 + libm::sqrt(0.2);
    assert!(
        (op.node_voltages[0] - want).abs() < 1e-6,
        "{}",
        op.node_voltages[0]
    );
    assert!((want - 1.1472).abs() < 1e-4);
    assert!(op.max_kcl_residual <= 1e-12);
    assert_eq!(
        op.device_evals[0].1.region(),
        crate::devices::Region::Saturation
    );
}

#[test]
fn warm_start_converges_quickly() {
    let c = circuit(DIODE);
    let first = solve(&c);
    let cfg = SolverConfig::default();
    let again = newton_dc(&c, &cfg, Some(&first.unknowns())).unwrap();
    assert!(again.iterations <= 2, "{}", again.iterations);
    assert_eq!(again.strategy, Strategy::Direct);
    assert!((again.node_voltages[0] - first.node_voltages[0]).abs() < 1e-9);
}

#[test]
fn solves_are_bit_identical() {
    let c = circuit(DIODE);
    assert_eq!(solve(&c), solve(&c));
}

#[test]
fn wrong_guess_length_is_rejected() {
    let c = circuit(DIODE);
    let e = newton_dc(&c, &SolverConfig::default(), Some(&[0.0, 1.0])).unwrap_err();
    assert_eq!(
        e,
        SolveError::GuessLength {
            expected: 1,
            found: 2
        }
    );
}

#[test]
fn config_is_validated() {
    let cfg = SolverConfig {
        gmin_ladder: vec![1e-6, 1e-3],
        ..SolverConfig::default()
    };
    assert!(matches!(
        newton_dc(&circuit(DIODE), &cfg, None),
        Err(SolveError::Config(_))
    ));
}

#[test]
fn wrong_way_diode_fails_and_names_the_node() {
    // the source pulls 100 µA out of a node that can only sink current
    let c = circuit("bad\nI1 d 0 100u\nM1 d d 0 0 n W=10u L=1u\n.model n NMOS ()\n.end");
    let e = newton_dc(&c, &SolverConfig::default(), None).unwrap_err();
    let msg = alloc::format!("{e}");
    assert!(msg.contains(" d"), "{msg}");
    match e {
        SolveError::Singular { node, .. } | SolveError::NonConvergence { node, .. } => {
            assert_eq!(node, "d")
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn high_gain_feedback_from_zero() {
    // unity-gain buffer around a 10meg VCVS
    let c = circuit("buf\nV1 in 0 1.25\nE1 out 0 in out 10meg\nR1 out 0 1k\n.end");
    let op = solve(&c);
    let out = op.node_voltages[1];
    assert!((out - 1.25 * 1e7 / (1e7 + 1.0)).abs() < 1e-12, "{out}");
}

#[test]
fn source_follower_kcl_holds() {
    let c = circuit(
        "sf\nV1 d 0 3\nV2 g 0 2\nM1 d g s 0 n W=20u L=2u\nR1 s 0 10k\n.model n NMOS (LAMBDA=0.05)\n.end",
    );
    let op = solve(&c);
    assert!(op.max_kcl_residual <= 1e-12);
    let vs = op.node_voltages[2];
    let e = eval_mosfet(
        &MosfetModel {
            lambda: 0.05,
            ..MosfetModel::default()
        },
        20e-6,
        2e-6,
        2.0 - vs,
        3.0 - vs,
        c.temperature,
    )
    .unwrap();
    assert!((e.id - vs / 10e3).abs() < 1e-12);
}

/// Minimize the worst KCL residual over a 1 mV lattice.
fn lattice_min<F: Fn(f64, f64) -> f64>(
    a_range: (f64, f64),
    b_range: (f64, f64),
    residual: F,
) -> (f64, f64) {
    let step = 1e-3;
    let na = libm::round((a_range.1 - a_range.0) / step) as usize;
    let nb = libm::round((b_range.1 - b_range.0) / step) as usize;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..=na {
        let a = a_range.0 + i as f64 * step;
        for j in 0..=nb {
            let b = b_range.0 + j as f64 * step;
            let r = residual(a, b);
            if r < best.0 {
                best = (r, a, b);
            }
        }
    }
    (best.1, best.2)
}

#[test]
fn agrees_with_lattice_search_on_source_follower() {
    let m = MosfetModel::default();
    let t = crate::devices::T_REF;
    let (vs, _) = lattice_min((0.0, 3.0), (0.0, 0.0), |vs, _| {
        let id = eval_mosfet(&m, 20e-6, 2e-6, 2.0 - vs, 3.0 - vs, t)
            .unwrap()
            .id;
        (id - vs / 10e3).abs()
    });
    let op = solve(&circuit(
        "sf\nV1 d 0 3\nV2 g 0 2\nM1 d g s 0 n W=20u L=2u\nR1 s 0 10k\n.model n NMOS ()\n.end",
    ));
    assert!(
        (op.node_voltages[2] - vs).abs() <= 1e-3,
        "{} vs {vs}",
        op.node_voltages[2]
    );
}

#[test]
fn agrees_with_lattice_search_on_diode_stack() {
    let m = MosfetModel {
        lambda: 0.03,
        ..MosfetModel::default()
    };
    let t = crate::devices::T_REF;
    let (va, vb) = lattice_min((1.5, 2.6), (0.9, 1.4), |va, vb| {
        let top = eval_mosfet(&m, 10e-6, 1e-6, va - vb, va - vb, t)
            .unwrap()
            .id;
        let bot = eval_mosfet(&m, 10e-6, 1e-6, vb, vb, t).unwrap().id;
        (top - 100e-6).abs().max((bot - top).abs())
    });
    let op = solve(&circuit(
        "stack\nI1 0 a 100u\nM1 a a b 0 n W=10u L=1u\nM2 b b 0 0 n W=10u L=1u\n.model n NMOS (LAMBDA=0.03)\n.end",
    ));
    assert!(op.max_kcl_residual <= 1e-12);
    assert!(
        (op.node_voltages[0] - va).abs() <= 1e-3,
        "{} vs {va}",
        op.node_voltages[0]
    );
    assert!(
        (op.node_voltages[1] - vb).abs() <= 1e-3,
        "{} vs {vb}",
        op.node_voltages[1]
    );
}
