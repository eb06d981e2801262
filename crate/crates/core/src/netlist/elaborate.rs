//! Cards to a solvable circuit: dense node numbering, bound models,
//! connectivity check, validated sweeps.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::{
    Card, DeviceCard, DeviceKind, Directive, ModelCard, ModelKind, Netlist, ProbeSpec, SweepAxis,
    SweepVariable,
};
use crate::devices::{IsfetModel, MosfetModel};
use crate::{celsius_to_kelvin, kelvin_to_celsius};

/// Default analysis temperature, °C.
pub const DEFAULT_TEMP_C: f64 = 25.0;
/// pH of an ISFET instance without a `PH=` parameter.
pub const DEFAULT_PH: f64 = 7.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Ground,
    Index(usize),
}

impl Node {
    pub fn index(self) -> Option<usize> {
        match self {
            Node::Ground => None,
            Node::Index(i) => Some(i),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementKind {
    Resistor {
        a: Node,
        b: Node,
        resistance: f64,
    },
    VoltageSource {
        pos: Node,
        neg: Node,
        value: f64,
        /// Row of the branch current in the unknown vector, after the nodes.
        branch: usize,
    },
    /// Current flows from `pos` through the source to `neg`.
    CurrentSource {
        pos: Node,
        neg: Node,
        value: f64,
    },
    /// `v(out_pos) − v(out_neg) = clamp(gain·(v(in_pos) − v(in_neg)))`.
    Vcvs {
        out_pos: Node,
        out_neg: Node,
        in_pos: Node,
        in_neg: Node,
        gain: f64,
        /// Optional output limits `(min, max)`.
        limits: Option<(f64, f64)>,
        branch: usize,
    },
    Mosfet {
        drain: Node,
        gate: Node,
        source: Node,
        bulk: Node,
        w: f64,
        l: f64,
        model_name: String,
        model: MosfetModel,
    },
    Isfet {
        drain: Node,
        reference: Node,
        source: Node,
        bulk: Node,
        w: f64,
        l: f64,
        ph: f64,
        model_name: String,
        model: IsfetModel,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub name: String,
    pub kind: ElementKind,
}

impl Element {
    pub fn is_transistor(&self) -> bool {
        matches!(
            self.kind,
            ElementKind::Mosfet { .. } | ElementKind::Isfet { .. }
        )
    }
}

/// An elaborated, immutable-by-convention circuit. Sweep drivers clone it
/// and adjust pH, temperature or a source value per point.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub title: String,
    /// Node labels by dense index; ground is not included.
    pub nodes: Vec<String>,
    pub elements: Vec<Element>,
    /// Number of branch-current unknowns (voltage sources and VCVS).
    pub branch_count: usize,
    /// Analysis temperature, K.
    pub temperature: f64,
    pub op: bool,
    /// Validated sweep axes in file order.
    pub sweeps: Vec<SweepAxis>,
    pub probe: Option<ProbeSpec>,
}

impl Circuit {
    /// Size of the MNA unknown vector.
    pub fn unknown_count(&self) -> usize {
        self.nodes.len() + self.branch_count
    }

    pub fn node(&self, label: &str) -> Option<Node> {
        if label == "0" {
            return Some(Node::Ground);
        }
        self.nodes
            .iter()
            .position(|n| n.eq_ignore_ascii_case(label))
            .map(Node::Index)
    }

    pub fn node_label(&self, node: Node) -> &str {
        match node {
            Node::Ground => "0",
            Node::Index(i) => &self.nodes[i],
        }
    }

    pub fn element(&self, name: &str) -> Option<&Element> {
        self.elements
            .iter()
            .find(|e| e.name.eq_ignore_ascii_case(name))
    }

    pub fn temperature_c(&self) -> f64 {
        kelvin_to_celsius(self.temperature)
    }

    pub fn set_temperature_c(&mut self, c: f64) {
        self.temperature = celsius_to_kelvin(c);
    }

    /// Set the pH of every ISFET instance.
    pub fn set_ph(&mut self, value: f64) {
        for e in &mut self.elements {
            if let ElementKind::Isfet { ph, .. } = &mut e.kind {
                *ph = value;
            }
        }
    }

    /// pH of the first ISFET instance.
    pub fn ph(&self) -> Option<f64> {
        self.elements.iter().find_map(|e| match e.kind {
            ElementKind::Isfet { ph, .. } => Some(ph),
            _ => None,
        })
    }

    pub fn has_isfet(&self) -> bool {
        self.ph().is_some()
    }

    /// Set the value of an independent source. Returns `false` if no
    /// voltage or current source has that name.
    pub fn set_source(&mut self, name: &str, v: f64) -> bool {
        for e in &mut self.elements {
            if !e.name.eq_ignore_ascii_case(name) {
                continue;
            }
            match &mut e.kind {
                ElementKind::VoltageSource { value, .. }
                | ElementKind::CurrentSource { value, .. } => {
                    *value = v;
                    return true;
                }
                _ => return false,
            }
        }
        false
    }

    pub fn source_value(&self, name: &str) -> Option<f64> {
        self.element(name).and_then(|e| match e.kind {
            ElementKind::VoltageSource { value, .. } | ElementKind::CurrentSource { value, .. } => {
                Some(value)
            }
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElaborateError {
    UnknownModel {
        device: String,
        model: String,
    },
    ModelKindMismatch {
        device: String,
        model: String,
        expected: ModelKind,
    },
    InvalidModel {
        model: String,
        reason: String,
    },
    InvalidDevice {
        device: String,
        reason: String,
    },
    FloatingNodes(Vec<String>),
    BadSweep {
        variable: String,
        reason: String,
    },
    UnknownSource(String),
    UnknownProbeNode(String),
}

impl fmt::Display for ElaborateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElaborateError::UnknownModel { device, model } => {
                write!(f, "device {device} references undefined model '{model}'")
            }
            ElaborateError::ModelKindMismatch {
                device,
                model,
                expected,
            } => write!(
                f,
                "device {device} needs an {expected} model but '{model}' is not one"
            ),
            ElaborateError::InvalidModel { model, reason } => {
                write!(f, "model '{model}': {reason}")
            }
            ElaborateError::InvalidDevice { device, reason } => write!(f, "{device}: {reason}"),
            ElaborateError::FloatingNodes(nodes) => {
                write!(f, "no DC path to ground from node(s) {}", nodes.join(", "))
            }
            ElaborateError::BadSweep { variable, reason } => {
                write!(f, "sweep of {variable}: {reason}")
            }
            ElaborateError::UnknownSource(s) => write!(f, ".dc names unknown source '{s}'"),
            ElaborateError::UnknownProbeNode(n) => write!(f, "probe node '{n}' does not exist"),
        }
    }
}

impl core::error::Error for ElaborateError {}

fn mosfet_model(card: &ModelCard) -> MosfetModel {
    let d = MosfetModel::default();
    MosfetModel {
        vto: card.param("VTO").unwrap_or(d.vto),
        kp: card.param("KP").unwrap_or(d.kp),
        lambda: card.param("LAMBDA").unwrap_or(d.lambda),
        tcv: card.param("TCV").unwrap_or(d.tcv),
        mu_exp: card.param("MUEXP").unwrap_or(d.mu_exp),
        t_nom: card.param("TNOM").map(celsius_to_kelvin).unwrap_or(d.t_nom),
    }
}

fn isfet_model(card: &ModelCard) -> IsfetModel {
    let d = IsfetModel::default();
    IsfetModel {
        mos: mosfet_model(card),
        alpha: card.param("ALPHA").unwrap_or(d.alpha),
        ph_pzc: card.param("PHPZC").unwrap_or(d.ph_pzc),
        e_ref: card.param("EREF").unwrap_or(d.e_ref),
        de_ref_dt: card.param("EREFTC").unwrap_or(d.de_ref_dt),
        chi_sol: card.param("CHISOL").unwrap_or(d.chi_sol),
        dphi_lj: card.param("DPHILJ").unwrap_or(d.dphi_lj),
        e0: card.param("E0").unwrap_or(d.e0),
        c_helm: card.param("CHELM").unwrap_or(d.c_helm),
        c_gouy_n0: card.param("N0").unwrap_or(d.c_gouy_n0),
    }
}

fn check_mos(name: &str, m: &MosfetModel) -> Result<(), ElaborateError> {
    let bad = |reason: &str| {
        Err(ElaborateError::InvalidModel {
            model: name.to_string(),
            reason: reason.to_string(),
        })
    };
    if !(m.kp > 0.0) {
        return bad("KP must be positive");
    }
    if !(m.t_nom > 0.0) {
        return bad("TNOM must be above absolute zero");
    }
    if !(m.lambda >= 0.0) {
        return bad("LAMBDA must be non-negative");
    }
    Ok(())
}

fn check_isfet(name: &str, m: &IsfetModel) -> Result<(), ElaborateError> {
    check_mos(name, &m.mos)?;
    let bad = |reason: &str| {
        Err(ElaborateError::InvalidModel {
            model: name.to_string(),
            reason: reason.to_string(),
        })
    };
    if !(0.0..=1.0).contains(&m.alpha) {
        return bad("ALPHA must lie in 0..=1");
    }
    if !(0.0..=14.0).contains(&m.ph_pzc) {
        return bad("PHPZC must lie in 0..=14");
    }
    Ok(())
}

struct DisjointSet(Vec<usize>);

impl DisjointSet {
    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra] = rb;
        }
    }
}

/// Nodes that have no conducting path to ground. Transistor gates and VCVS
/// inputs draw no current and do not count as paths.
fn floating_nodes(node_count: usize, elements: &[Element]) -> Vec<usize> {
    // slot 0 is ground
    let slot = |n: Node| n.index().map_or(0, |i| i + 1);
    let mut set = DisjointSet((0..=node_count).collect());
    for e in elements {
        let (a, b) = match &e.kind {
            ElementKind::Resistor { a, b, .. } => (*a, *b),
            ElementKind::VoltageSource { pos, neg, .. }
            | ElementKind::CurrentSource { pos, neg, .. } => (*pos, *neg),
            ElementKind::Vcvs {
                out_pos, out_neg, ..
            } => (*out_pos, *out_neg),
            ElementKind::Mosfet { drain, source, .. }
            | ElementKind::Isfet { drain, source, .. } => (*drain, *source),
        };
        set.union(slot(a), slot(b));
    }
    let ground = set.find(0);
    (0..node_count)
        .filter(|&i| set.find(i + 1) != ground)
        .collect()
}

fn check_axis(axis: &SweepAxis) -> Result<(), ElaborateError> {
    if axis.step == 0.0 {
        return Err(ElaborateError::BadSweep {
            variable: axis.variable.to_string(),
            reason: "step must be non-zero".into(),
        });
    }
    if axis.len().is_none() {
        return Err(ElaborateError::BadSweep {
            variable: axis.variable.to_string(),
            reason: format!(
                "step sign inconsistent with range {} to {} (step {})",
                axis.start, axis.stop, axis.step
            ),
        });
    }
    Ok(())
}

fn device_geometry(card: &DeviceCard) -> Result<(f64, f64), ElaborateError> {
    let w = card.param("W").unwrap_or(0.0);
    let l = card.param("L").unwrap_or(0.0);
    if !(w > 0.0 && l > 0.0) {
        return Err(ElaborateError::InvalidDevice {
            device: card.name.clone(),
            reason: format!("W and L must be positive (W={w}, L={l})"),
        });
    }
    Ok((w, l))
}

/// Bind models, number nodes in first-appearance order and validate the
/// analyses of a parsed netlist.
pub fn elaborate(netlist: &Netlist) -> Result<Circuit, ElaborateError> {
    let models: BTreeMap<&str, &ModelCard> =
        netlist.models().map(|m| (m.name.as_str(), m)).collect();

    let mut nodes: Vec<String> = Vec::new();
    let mut intern = |label: &str| -> Node {
        if label == "0" {
            return Node::Ground;
        }
        match nodes.iter().position(|n| n == label) {
            Some(i) => Node::Index(i),
            None => {
                nodes.push(label.to_string());
                Node::Index(nodes.len() - 1)
            }
        }
    };

    let mut elements = Vec::new();
    let mut branch_count = 0;
    for card in netlist.devices() {
        let t: Vec<Node> = card.nodes.iter().map(|n| intern(n)).collect();
        let value = card.value.unwrap_or(0.0);
        let kind = match card.kind {
            DeviceKind::Resistor => {
                if value == 0.0 || !value.is_finite() {
                    return Err(ElaborateError::InvalidDevice {
                        device: card.name.clone(),
                        reason: format!("resistance {value} is not usable"),
                    });
                }
                ElementKind::Resistor {
                    a: t[0],
                    b: t[1],
                    resistance: value,
                }
            }
            DeviceKind::VoltageSource => {
                branch_count += 1;
                ElementKind::VoltageSource {
                    pos: t[0],
                    neg: t[1],
                    value,
                    branch: branch_count - 1,
                }
            }
            DeviceKind::CurrentSource => ElementKind::CurrentSource {
                pos: t[0],
                neg: t[1],
                value,
            },
            DeviceKind::Vcvs => {
                let limits = match (card.param("VMIN"), card.param("VMAX")) {
                    (None, None) => None,
                    (lo, hi) => {
                        let (lo, hi) =
                            (lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY));
                        if !(lo < hi) {
                            return Err(ElaborateError::InvalidDevice {
                                device: card.name.clone(),
                                reason: format!("VMIN={lo} must be below VMAX={hi}"),
                            });
                        }
                        Some((lo, hi))
                    }
                };
                branch_count += 1;
                ElementKind::Vcvs {
                    out_pos: t[0],
                    out_neg: t[1],
                    in_pos: t[2],
                    in_neg: t[3],
                    gain: value,
                    limits,
                    branch: branch_count - 1,
                }
            }
            DeviceKind::Mosfet | DeviceKind::Isfet => {
                let model_name = card.model.clone().unwrap_or_default();
                let Some(mc) = models.get(model_name.as_str()) else {
                    return Err(ElaborateError::UnknownModel {
                        device: card.name.clone(),
                        model: model_name,
                    });
                };
                let expected = if card.kind == DeviceKind::Mosfet {
                    ModelKind::Nmos
                } else {
                    ModelKind::Isfet
                };
                if mc.kind != expected {
                    return Err(ElaborateError::ModelKindMismatch {
                        device: card.name.clone(),
                        model: model_name,
                        expected,
                    });
                }
                let (w, l) = device_geometry(card)?;
                if expected == ModelKind::Nmos {
                    let model = mosfet_model(mc);
                    check_mos(&model_name, &model)?;
                    ElementKind::Mosfet {
                        drain: t[0],
                        gate: t[1],
                        source: t[2],
                        bulk: t[3],
                        w,
                        l,
                        model_name,
                        model,
                    }
                } else {
                    let model = isfet_model(mc);
                    check_isfet(&model_name, &model)?;
                    ElementKind::Isfet {
                        drain: t[0],
                        reference: t[1],
                        source: t[2],
                        bulk: t[3],
                        w,
                        l,
                        ph: card.param("PH").unwrap_or(DEFAULT_PH),
                        model_name,
                        model,
                    }
                }
            }
        };
        elements.push(Element {
            name: card.name.clone(),
            kind,
        });
    }
    // Voltage-defined branches are numbered after all nodes.
    let node_count = nodes.len();
    for e in &mut elements {
        match &mut e.kind {
            ElementKind::VoltageSource { branch, .. } | ElementKind::Vcvs { branch, .. } => {
                *branch += node_count;
            }
            _ => {}
        }
    }

    let floating = floating_nodes(node_count, &elements);
    if !floating.is_empty() {
        return Err(ElaborateError::FloatingNodes(
            floating.into_iter().map(|i| nodes[i].clone()).collect(),
        ));
    }

    let mut circuit = Circuit {
        title: netlist.title.clone(),
        nodes,
        elements,
        branch_count,
        temperature: celsius_to_kelvin(DEFAULT_TEMP_C),
        op: false,
        sweeps: Vec::new(),
        probe: None,
    };

    for entry in &netlist.cards {
        let Card::Directive(d) = &entry.card else {
            continue;
        };
        match d {
            Directive::Op => circuit.op = true,
            Directive::Temp(c) => circuit.set_temperature_c(*c),
            Directive::Dc(axis) | Directive::Sweep(axis) => {
                check_axis(axis)?;
                match &axis.variable {
                    SweepVariable::Source(name) => {
                        if circuit.source_value(name).is_none() {
                            return Err(ElaborateError::UnknownSource(name.clone()));
                        }
                    }
                    SweepVariable::Ph => {
                        if !circuit.has_isfet() {
                            return Err(ElaborateError::BadSweep {
                                variable: "ph".into(),
                                reason: "circuit has no ISFET".into(),
                            });
                        }
                        if axis.start.min(axis.stop) < 0.0 || axis.start.max(axis.stop) > 14.0 {
                            return Err(ElaborateError::BadSweep {
                                variable: "ph".into(),
                                reason: "range must stay within 0..=14".into(),
                            });
                        }
                    }
                    SweepVariable::Temperature => {
                        if celsius_to_kelvin(axis.start.min(axis.stop)) <= 0.0 {
                            return Err(ElaborateError::BadSweep {
                                variable: "temp".into(),
                                reason: "range reaches absolute zero".into(),
                            });
                        }
                    }
                }
                circuit.sweeps.push(axis.clone());
            }
            Directive::Probe(p) => {
                for n in core::iter::once(&p.pos).chain(p.neg.iter()) {
                    if circuit.node(n).is_none() {
                        return Err(ElaborateError::UnknownProbeNode(n.clone()));
                    }
                }
                circuit.probe = Some(p.clone());
            }
        }
    }
    Ok(circuit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse;

    fn build(text: &str) -> Result<Circuit, ElaborateError> {
        elaborate(&parse(text).unwrap())
    }

    #[test]
    fn divider_counts() {
        let c = build("div\nV1 1 0 1\nR1 1 2 1k\nR2 2 0 1k\n.end").unwrap();
        assert_eq!(c.nodes, ["1", "2"]);
        assert_eq!(c.elements.len(), 3);
        assert_eq!(c.branch_count, 1);
        assert_eq!(c.unknown_count(), 3);
        match c.elements[0].kind {
            ElementKind::VoltageSource { branch, .. } => assert_eq!(branch, 2),
            _ => panic!(),
        }
        assert!((c.temperature - 298.16).abs() < 1e-12);
    }

    #[test]
    fn missing_model_is_named() {
        let e = build("t\nV1 d 0 1\nM7 d d 0 0 NX W=1u L=1u\n.end").unwrap_err();
        assert_eq!(
            e,
            ElaborateError::UnknownModel {
                device: "M7".into(),
                model: "nx".into()
            }
        );
        let msg = alloc::format!("{e}");
        assert!(msg.contains("nx") && msg.contains("M7"));
    }

    #[test]
    fn model_kind_must_match() {
        let e =
            build("t\nV1 d 0 1\nM1 d d 0 0 iso W=1u L=1u\n.model iso ISFET ()\n.end").unwrap_err();
        assert!(matches!(e, ElaborateError::ModelKindMismatch { .. }));
    }

    #[test]
    fn reversed_sweep_is_rejected() {
        let e = build("t\nV1 1 0 1\nR1 1 0 1k\n.sweep temp 100 0 5\n.end").unwrap_err();
        match e {
            ElaborateError::BadSweep { reason, .. } => assert!(reason.contains("sign")),
            other => panic!("{other:?}"),
        }
        let e = build("t\nV1 1 0 1\nR1 1 0 1k\n.sweep temp 0 100 0\n.end").unwrap_err();
        assert!(matches!(e, ElaborateError::BadSweep { .. }));
    }

    #[test]
    fn floating_nodes_are_reported() {
        // node g only touches a gate
        let e = build("t\nV1 d 0 1\nM1 d g 0 0 n W=1u L=1u\n.model n NMOS ()\n.end").unwrap_err();
        assert_eq!(e, ElaborateError::FloatingNodes(alloc::vec!["g".into()]));
        let e = build("t\nV1 1 0 1\nR1 1 0 1k\nR2 5 6 1k\n.end").unwrap_err();
        assert_eq!(
            e,
            ElaborateError::FloatingNodes(alloc::vec!["5".into(), "6".into()])
        );
    }

    #[test]
    fn models_get_defaults_and_overrides() {
        let c = build(
            "t\nV1 d 0 3\nVr r 0 1\nF1 d r s 0 iso W=840u L=18u PH=4\nI1 s 0 100u\n.model iso ISFET (ALPHA=0.93 VTO=0.8 TNOM=27)\n.end",
        )
        .unwrap();
        let ElementKind::Isfet { model, ph, w, .. } = &c.elements[2].kind else {
            panic!()
        };
        assert_eq!(*ph, 4.0);
        assert_eq!(*w, 840e-6);
        assert_eq!(model.alpha, 0.93);
        assert_eq!(model.mos.vto, 0.8);
        assert!((model.mos.t_nom - 300.16).abs() < 1e-12);
        assert_eq!(model.ph_pzc, 2.2);
        assert_eq!(model.e_ref, 0.205);
    }

    #[test]
    fn bad_model_values() {
        let e = build("t\nV1 d 0 3\nVr r 0 1\nF1 d r s 0 iso W=1u L=1u\nI1 s 0 1u\n.model iso ISFET (ALPHA=1.5)\n.end")
            .unwrap_err();
        assert!(matches!(e, ElaborateError::InvalidModel { .. }));
    }

    #[test]
    fn circuit_mutators() {
        let mut c =
            build("t\nV1 1 0 1\nR1 1 0 1k\n.dc v1 0 1 0.5\n.probe 1\n.temp 50\n.end").unwrap();
        assert!((c.temperature_c() - 50.0).abs() < 1e-12);
        assert_eq!(c.sweeps.len(), 1);
        assert!(c.set_source("V1", 2.0));
        assert_eq!(c.source_value("v1"), Some(2.0));
        assert!(!c.set_source("R1", 2.0));
        assert!(build("t\nV1 1 0 1\nR1 1 0 1k\n.dc v9 0 1 0.5\n.end").is_err());
        assert_eq!(
            build("t\nV1 1 0 1\nR1 1 0 1k\n.probe 7\n.end").unwrap_err(),
            ElaborateError::UnknownProbeNode("7".into())
        );
    }
}
