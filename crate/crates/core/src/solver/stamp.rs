//! Modified nodal analysis in residual form.
//!
//! Unknowns are node voltages followed by branch currents of voltage
//! sources and VCVS outputs. Node rows hold the sum of currents leaving the
//! node, branch rows hold the branch voltage constraint. Newton then solves
//! `J·Δx = −f`.

use alloc::vec;
use alloc::vec::Vec;

use super::lu::DenseMatrix;
use crate::devices::{
    flatband_shift, mosfet_kp_at, mosfet_vth_at, square_law, DeviceError, DeviceEval, Region,
};
use crate::netlist::{Circuit, ElementKind, Node};

/// Per-solve constants of one transistor.
#[derive(Debug, Clone, Copy)]
struct Transistor {
    element: usize,
    drain: Node,
    gate: Node,
    source: Node,
    beta: f64,
    vth: f64,
    lambda: f64,
    /// Electrochemical gate shift (ISFET only).
    shift: f64,
}

/// A transistor's linearization in netlist orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalEval {
    /// Evaluation in the device's effective orientation (`vds >= 0`).
    pub eval: DeviceEval,
    /// Drain current flowing netlist drain → source; negative when reversed.
    pub id: f64,
    pub reversed: bool,
    /// ∂id/∂(vd, vg, vs) in netlist orientation.
    pub d_vd: f64,
    pub d_vg: f64,
    pub d_vs: f64,
}

/// A circuit frozen at one temperature and pH, ready to be stamped.
#[derive(Debug, Clone)]
pub struct MnaSystem<'c> {
    circuit: &'c Circuit,
    transistors: Vec<Transistor>,
}

fn v(x: &[f64], n: Node) -> f64 {
    n.index().map_or(0.0, |i| x[i])
}

fn add(f: &mut [f64], n: Node, value: f64) {
    if let Some(i) = n.index() {
        f[i] += value;
    }
}

fn add_j(j: &mut DenseMatrix, r: Node, c: Node, value: f64) {
    if let (Some(r), Some(c)) = (r.index(), c.index()) {
        j[(r, c)] += value;
    }
}

impl<'c> MnaSystem<'c> {
    pub fn new(circuit: &'c Circuit) -> Result<Self, DeviceError> {
        let t = circuit.temperature;
        let mut transistors = Vec::new();
        for (idx, e) in circuit.elements.iter().enumerate() {
            let tr = match &e.kind {
                ElementKind::Mosfet {
                    drain,
                    gate,
                    source,
                    w,
                    l,
                    model,
                    ..
                } => Transistor {
                    element: idx,
                    drain: *drain,
                    gate: *gate,
                    source: *source,
                    beta: mosfet_kp_at(model, t) * (w / l),
                    vth: mosfet_vth_at(model, t),
                    lambda: model.lambda,
                    shift: 0.0,
                },
                ElementKind::Isfet {
                    drain,
                    reference,
                    source,
                    w,
                    l,
                    ph,
                    model,
                    ..
                } => Transistor {
                    element: idx,
                    drain: *drain,
                    gate: *reference,
                    source: *source,
                    beta: mosfet_kp_at(&model.mos, t) * (w / l),
                    vth: mosfet_vth_at(&model.mos, t),
                    lambda: model.mos.lambda,
                    shift: flatband_shift(model, *ph, t)?,
                },
                _ => continue,
            };
            if !(tr.beta > 0.0) {
                return Err(DeviceError::Geometry { w: 0.0, l: 0.0 });
            }
            transistors.push(tr);
        }
        Ok(Self {
            circuit,
            transistors,
        })
    }

    pub fn circuit(&self) -> &Circuit {
        self.circuit
    }

    pub fn size(&self) -> usize {
        self.circuit.unknown_count()
    }

    fn eval_transistor(tr: &Transistor, x: &[f64]) -> TerminalEval {
        let (vd, vg, vs) = (v(x, tr.drain), v(x, tr.gate), v(x, tr.source));
        if vd >= vs {
            let e = square_law(tr.beta, tr.vth, tr.lambda, (vg - vs) - tr.shift, vd - vs);
            TerminalEval {
                eval: e,
                id: e.id,
                reversed: false,
                d_vd: e.gds,
                d_vg: e.gm,
                d_vs: -e.gm - e.gds,
            }
        } else {
            let e = square_law(tr.beta, tr.vth, tr.lambda, (vg - vd) - tr.shift, vs - vd);
            TerminalEval {
                eval: e,
                id: -e.id,
                reversed: true,
                d_vd: e.gm + e.gds,
                d_vg: -e.gm,
                d_vs: -e.gds,
            }
        }
    }

    /// Marks nodes wired to a transistor terminal. Only these see Newton
    /// step limiting; the rest of the circuit is linear.
    pub fn nonlinear_nodes(&self) -> Vec<bool> {
        let mut mark = vec![false; self.circuit.nodes.len()];
        for tr in &self.transistors {
            for n in [tr.drain, tr.gate, tr.source] {
                if let Some(i) = n.index() {
                    mark[i] = true;
                }
            }
        }
        mark
    }

    /// Linearizations of every transistor at `x`, keyed by element index.
    pub fn device_evals(&self, x: &[f64]) -> Vec<(usize, TerminalEval)> {
        self.transistors
            .iter()
            .map(|tr| (tr.element, Self::eval_transistor(tr, x)))
            .collect()
    }

    /// Jacobian and residual at `x` with `gmin` from every node to ground.
    pub fn stamp(&self, x: &[f64], gmin: f64) -> (DenseMatrix, Vec<f64>) {
        self.stamp_scaled(x, gmin, 1.0)
    }

    /// As [`stamp`](Self::stamp) with every independent source scaled by
    /// `scale`.
    pub fn stamp_scaled(&self, x: &[f64], gmin: f64, scale: f64) -> (DenseMatrix, Vec<f64>) {
        let n = self.size();
        assert_eq!(x.len(), n, "unknown vector has the wrong length");
        let mut jac = DenseMatrix::zeros(n);
        let mut f = vec![0.0; n];

        for e in &self.circuit.elements {
            match e.kind {
                ElementKind::Resistor { a, b, resistance } => {
                    let g = 1.0 / resistance;
                    let i = g * (v(x, a) - v(x, b));
                    add(&mut f, a, i);
                    add(&mut f, b, -i);
                    add_j(&mut jac, a, a, g);
                    add_j(&mut jac, a, b, -g);
                    add_j(&mut jac, b, a, -g);
                    add_j(&mut jac, b, b, g);
                }
                ElementKind::VoltageSource {
                    pos,
                    neg,
                    value,
                    branch,
                } => {
                    let k = Node::Index(branch);
                    add(&mut f, pos, x[branch]);
                    add(&mut f, neg, -x[branch]);
                    add_j(&mut jac, pos, k, 1.0);
                    add_j(&mut jac, neg, k, -1.0);
                    f[branch] = v(x, pos) - v(x, neg) - scale * value;
                    add_j(&mut jac, k, pos, 1.0);
                    add_j(&mut jac, k, neg, -1.0);
                }
                ElementKind::CurrentSource { pos, neg, value } => {
                    add(&mut f, pos, scale * value);
                    add(&mut f, neg, -scale * value);
                }
                ElementKind::Vcvs {
                    out_pos,
                    out_neg,
                    in_pos,
                    in_neg,
                    gain,
                    limits,
                    branch,
                } => {
                    let k = Node::Index(branch);
                    add(&mut f, out_pos, x[branch]);
                    add(&mut f, out_neg, -x[branch]);
                    add_j(&mut jac, out_pos, k, 1.0);
                    add_j(&mut jac, out_neg, k, -1.0);
                    let mut target = gain * (v(x, in_pos) - v(x, in_neg));
                    let mut slope = gain;
                    if let Some((lo, hi)) = limits {
                        if target < lo || target > hi {
                            target = target.clamp(lo, hi);
                            slope = 0.0;
                        }
                    }
                    f[branch] = v(x, out_pos) - v(x, out_neg) - target;
                    add_j(&mut jac, k, out_pos, 1.0);
                    add_j(&mut jac, k, out_neg, -1.0);
                    add_j(&mut jac, k, in_pos, -slope);
                    add_j(&mut jac, k, in_neg, slope);
                }
                ElementKind::Mosfet { .. } | ElementKind::Isfet { .. } => {}
            }
        }

        for tr in &self.transistors {
            let te = Self::eval_transistor(tr, x);
            add(&mut f, tr.drain, te.id);
            add(&mut f, tr.source, -te.id);
            for (row, sign) in [(tr.drain, 1.0), (tr.source, -1.0)] {
                add_j(&mut jac, row, tr.drain, sign * te.d_vd);
                add_j(&mut jac, row, tr.gate, sign * te.d_vg);
                add_j(&mut jac, row, tr.source, sign * te.d_vs);
            }
        }

        if gmin > 0.0 {
            for i in 0..self.circuit.nodes.len() {
                f[i] += gmin * x[i];
                jac[(i, i)] += gmin;
            }
        }
        (jac, f)
    }
}

/// Stamp `circuit` at `x`. Convenience wrapper around [`MnaSystem`].
pub fn stamp(
    circuit: &Circuit,
    x: &[f64],
    gmin: f64,
) -> Result<(DenseMatrix, Vec<f64>), DeviceError> {
    Ok(MnaSystem::new(circuit)?.stamp(x, gmin))
}

impl TerminalEval {
    pub fn region(&self) -> Region {
        self.eval.region
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::{eval_mosfet, MosfetModel};
    use crate::netlist::{elaborate, parse};

    fn circuit(text: &str) -> Circuit {
        elaborate(&parse(text).unwrap()).unwrap()
    }

    #[test]
    fn divider_residual_is_source_injection() {
        let c = circuit("d\nV1 1 0 1\nR1 1 2 1k\nR2 2 0 1k\n.end");
        let (j, f) = stamp(&c, &[0.0; 3], 0.0).unwrap();
        assert_eq!(f, vec![0.0, 0.0, -1.0]);
        assert_eq!(j.row(0), &[1e-3, -1e-3, 1.0]);
        assert_eq!(j.row(1), &[-1e-3, 2e-3, 0.0]);
        assert_eq!(j.row(2), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn gmin_adds_to_node_diagonal_only() {
        let c = circuit("d\nV1 1 0 1\nR1 1 2 1k\nR2 2 0 1k\n.end");
        let x = [0.3, 0.2, 1e-4];
        let (j0, f0) = stamp(&c, &x, 0.0).unwrap();
        let (j1, f1) = stamp(&c, &x, 1e-3).unwrap();
        for r in 0..3 {
            for col in 0..3 {
                let d = j1[(r, col)] - j0[(r, col)];
                let want = if r == col && r < 2 { 1e-3 } else { 0.0 };
                assert!((d - want).abs() < 1e-18, "({r},{col})");
            }
        }
        assert!((f1[0] - f0[0] - 1e-3 * 0.3).abs() < 1e-18);
        assert_eq!(f1[2], f0[2]);
    }

    #[test]
    fn saturated_mosfet_stamp_matches_hand_linearization() {
        // drain held by V1, gate by V2, source node s with the transistor
        // current and a 10k resistor to ground
        let c = circuit(
            "m\nV1 d 0 2\nV2 g 0 1.5\nM1 d g s 0 n W=10u L=1u\nR1 s 0 10k\n.model n NMOS (VTO=0.7 KP=100u LAMBDA=0.02)\n.end",
        );
        let (d, g, s) = (0usize, 1usize, 2usize);
        let mut x = vec![0.0; c.unknown_count()];
        x[d] = 2.0;
        x[g] = 1.5;
        x[s] = 0.3;
        let (j, f) = stamp(&c, &x, 0.0).unwrap();
        let m = MosfetModel {
            lambda: 0.02,
            ..MosfetModel::default()
        };
        let e = eval_mosfet(&m, 10e-6, 1e-6, 1.2, 1.7, c.temperature).unwrap();
        assert_eq!(e.region, Region::Saturation);
        // 2x2 block on the (drain, source) rows versus (gate, source) columns
        assert!((j[(d, g)] - e.gm).abs() < 1e-15);
        assert!((j[(d, d)] - e.gds).abs() < 1e-15);
        assert!((j[(d, s)] + e.gm + e.gds).abs() < 1e-15);
        assert!((j[(s, g)] + e.gm).abs() < 1e-15);
        assert!((j[(s, s)] - (e.gm + e.gds + 1e-4)).abs() < 1e-15);
        assert!((f[s] - (0.3 / 10e3 - e.id)).abs() < 1e-18);
    }

    #[test]
    fn reversed_bias_swaps_terminals() {
        let c = circuit(
            "m\nV1 d 0 0\nV2 g 0 2\nVs s 0 1\nM1 d g s 0 n W=10u L=1u\n.model n NMOS (VTO=0.7 KP=100u)\n.end",
        );
        let sys = MnaSystem::new(&c).unwrap();
        let mut x = vec![0.0; c.unknown_count()];
        x[0] = 0.0;
        x[1] = 2.0;
        x[2] = 1.0;
        let (_, te) = sys.device_evals(&x)[0];
        assert!(te.reversed);
        // effective vgs = 2 − 0, vds = 1: triode, current flows s → d
        let e = eval_mosfet(
            &MosfetModel::default(),
            10e-6,
            1e-6,
            2.0,
            1.0,
            c.temperature,
        )
        .unwrap();
        assert_eq!(te.id, -e.id);
        assert_eq!(te.d_vg, -e.gm);
    }
}
