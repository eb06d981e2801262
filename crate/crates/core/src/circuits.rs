//! Netlist builders: the ISFET/MOSFET readout pair, its Widlar bias, and
//! the small fixtures used across the tests.
//!
//! Every builder writes its full configuration into the netlist as comment
//! lines, so a generated file documents how it was made.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::devices::{mosfet_kp_at, mosfet_vth_at, IsfetModel, MosfetModel, T_REF};
use crate::kelvin_to_celsius;
use crate::netlist::{
    format_value, Directive, ModelKind, Netlist, ProbeSpec, SweepAxis, SweepVariable,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitError(pub String);

impl fmt::Display for CircuitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid circuit configuration: {}", self.0)
    }
}

impl core::error::Error for CircuitError {}

fn invalid<T>(msg: impl Into<String>) -> Result<T, CircuitError> {
    Err(CircuitError(msg.into()))
}

fn fv(v: f64) -> String {
    format_value(v)
}

/// TNOM is written in °C; rounding keeps 298.16 K from printing as
/// 25.000000000000028.
fn tnom_c(t_nom: f64) -> f64 {
    libm::round(kelvin_to_celsius(t_nom) * 1e9) / 1e9
}

fn mos_params(m: &MosfetModel) -> Vec<(&'static str, f64)> {
    alloc::vec![
        ("VTO", m.vto),
        ("KP", m.kp),
        ("LAMBDA", m.lambda),
        ("TCV", m.tcv),
        ("MUEXP", m.mu_exp),
        ("TNOM", tnom_c(m.t_nom)),
    ]
}

fn isfet_params(m: &IsfetModel) -> Vec<(&'static str, f64)> {
    let mut p = mos_params(&m.mos);
    p.extend([
        ("ALPHA", m.alpha),
        ("PHPZC", m.ph_pzc),
        ("EREF", m.e_ref),
        ("EREFTC", m.de_ref_dt),
        ("CHISOL", m.chi_sol),
        ("DPHILJ", m.dphi_lj),
        ("E0", m.e0),
        ("CHELM", m.c_helm),
        ("N0", m.c_gouy_n0),
    ]);
    p
}

fn describe_params(params: &[(&str, f64)]) -> String {
    params
        .iter()
        .map(|(k, v)| format!("{}={}", k.to_ascii_lowercase(), fv(*v)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Widlar current source feeding two mirror output legs.
///
/// A reference resistor from the top rail sets the current through a
/// diode-connected device. Each output leg is `mirror_ratio_wl` times wider
/// and has a source-degeneration resistor, which lowers its current below
/// the plain mirror value. `r_emitter_deg = 0` drops the resistors and gives
/// a simple mirror.
#[derive(Debug, Clone, PartialEq)]
pub struct WidlarConfig {
    pub mirror_model: MosfetModel,
    /// Reference device geometry, m.
    pub w: f64,
    pub l: f64,
    pub r_ref: f64,
    pub r_emitter_deg: f64,
    /// Voltage across the reference branch, V.
    pub supply: f64,
    /// Output-leg W/L over reference W/L.
    pub mirror_ratio_wl: f64,
}

impl Default for WidlarConfig {
    /// 100 µA in and out of a 3.3 V supply.
    fn default() -> Self {
        Self::tuned(
            MosfetModel::default(),
            10e-6,
            1e-6,
            100e-6,
            100e-6,
            3.3,
            4.0,
        )
        .expect("default Widlar sizing is feasible")
    }
}

impl WidlarConfig {
    /// Size the resistors for `i_ref` in the reference branch and `i_out` in
    /// each output leg at 25 °C, from the square law with λ ignored.
    pub fn tuned(
        model: MosfetModel,
        w: f64,
        l: f64,
        i_ref: f64,
        i_out: f64,
        supply: f64,
        ratio: f64,
    ) -> Result<Self, CircuitError> {
        if !(i_ref > 0.0 && i_out > 0.0 && w > 0.0 && l > 0.0 && ratio > 0.0) {
            return invalid("currents, geometry and ratio must be positive");
        }
        let beta = mosfet_kp_at(&model, T_REF) * w / l;
        let vov_ref = libm::sqrt(2.0 * i_ref / beta);
        let vov_out = libm::sqrt(2.0 * i_out / (beta * ratio));
        let vgs = mosfet_vth_at(&model, T_REF) + vov_ref;
        if vov_out > vov_ref {
            return invalid(format!(
                "i_out={} needs more drive than the reference provides; raise mirror_ratio_wl",
                fv(i_out)
            ));
        }
        if !(supply > vgs) {
            return invalid(format!(
                "supply {} is below the reference V_GS {vgs:.4}",
                fv(supply)
            ));
        }
        let cfg = Self {
            mirror_model: model,
            w,
            l,
            r_ref: (supply - vgs) / i_ref,
            r_emitter_deg: (vov_ref - vov_out) / i_out,
            supply,
            mirror_ratio_wl: ratio,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        if !(self.r_ref > 0.0) {
            return invalid("r_ref must be positive");
        }
        if !(self.r_emitter_deg >= 0.0) {
            return invalid("r_emitter_deg must not be negative");
        }
        if !(self.w > 0.0 && self.l > 0.0 && self.mirror_ratio_wl > 0.0) {
            return invalid("mirror geometry must be positive");
        }
        if !self.mirror_model.is_valid() {
            return invalid("mirror model is not valid");
        }
        Ok(())
    }

    fn describe(&self) -> String {
        format!(
            "widlar: r_ref={} r_deg={} supply={} w={} l={} ratio={} model: {}",
            fv(self.r_ref),
            fv(self.r_emitter_deg),
            fv(self.supply),
            fv(self.w),
            fv(self.l),
            fv(self.mirror_ratio_wl),
            describe_params(&mos_params(&self.mirror_model))
        )
    }
}

/// Model name used for the mirror devices.
pub const MIRROR_MODEL: &str = "nmir";

/// Append the Widlar reference branch and two output legs to `n`.
///
/// The reference resistor runs from `top` to the bias node `nbias`; device
/// sources sit on `rail`. Leg `k` sinks its current from `outputs[k]`. The
/// mirror model card is added as [`MIRROR_MODEL`].
pub fn splice_widlar(
    n: &mut Netlist,
    cfg: &WidlarConfig,
    top: &str,
    rail: &str,
    outputs: [&str; 2],
) {
    let geo = [("W", cfg.w), ("L", cfg.l)];
    let leg = [("W", cfg.w * cfg.mirror_ratio_wl), ("L", cfg.l)];
    n.device("Rref", &[top, "nbias"], Some(cfg.r_ref), None, &[]);
    n.device(
        "Mref",
        &["nbias", "nbias", rail, rail],
        None,
        Some(MIRROR_MODEL),
        &geo,
    );
    for (k, out) in outputs.iter().enumerate() {
        let (m, e, r) = (
            format!("Mcs{}", k + 1),
            format!("e{}", k + 1),
            format!("Rdeg{}", k + 1),
        );
        if cfg.r_emitter_deg > 0.0 {
            n.device(
                &m,
                &[out, "nbias", &e, rail],
                None,
                Some(MIRROR_MODEL),
                &leg,
            );
            n.device(&r, &[&e, rail], Some(cfg.r_emitter_deg), None, &[]);
        } else {
            n.device(
                &m,
                &[out, "nbias", rail, rail],
                None,
                Some(MIRROR_MODEL),
                &leg,
            );
        }
    }
    n.model(
        MIRROR_MODEL,
        ModelKind::Nmos,
        &mos_params(&cfg.mirror_model),
    );
}

/// Standalone Widlar source. Output legs hang from the supply through 0 V
/// ammeter sources `Vm1` and `Vm2`, so the leg currents are branch currents.
pub fn build_widlar(cfg: &WidlarConfig) -> Result<Netlist, CircuitError> {
    cfg.validate()?;
    let mut n = Netlist::new("Widlar current source");
    n.comment(cfg.describe());
    n.comment("leg currents are the branch currents of Vm1 and Vm2");
    n.device("Vdd", &["vdd", "0"], Some(cfg.supply), None, &[]);
    n.device("Vm1", &["vdd", "o1"], Some(0.0), None, &[]);
    n.device("Vm2", &["vdd", "o2"], Some(0.0), None, &[]);
    splice_widlar(&mut n, cfg, "vdd", "0", ["o1", "o2"]);
    n.directive(Directive::Op);
    n.directive(Directive::Probe(ProbeSpec::node("nbias")));
    Ok(n)
}

#[derive(Debug, Clone, PartialEq)]
pub enum BiasMode {
    /// Two ideal current sinks.
    IdealSources,
    /// Widlar mirror legs; the reference resistor hangs from ground, so the
    /// mirror sees `0 − vss` as its supply.
    Widlar(WidlarConfig),
}

/// The readout pair: an ISFET and an NMOS with equal bias currents, and a
/// high-gain VCVS that drives the NMOS gate until both sources agree.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutConfig {
    pub nmos_model: MosfetModel,
    pub isfet_model: IsfetModel,
    /// Geometry shared by both devices, m.
    pub w: f64,
    pub l: f64,
    pub i_bias: f64,
    pub bias_mode: BiasMode,
    pub opamp_gain: f64,
    /// Optional op-amp output clipping `(min, max)`, V.
    pub opamp_limits: Option<(f64, f64)>,
    pub v_ref_electrode: f64,
    pub vdd: f64,
    pub vss: f64,
    /// Load on the op-amp output, Ω.
    pub r_load: f64,
    pub ph: f64,
    pub temp_c: f64,
    /// `(start, stop, step)` of the emitted pH sweep.
    pub ph_sweep: Option<(f64, f64, f64)>,
    /// `(start, stop, step)` of the emitted temperature sweep, °C.
    pub temp_sweep: Option<(f64, f64, f64)>,
    /// Put the ISFET in the feedback branch and the NMOS on the reference
    /// electrode. This negates V_O.
    pub isfet_in_feedback: bool,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        Self {
            nmos_model: MosfetModel::default(),
            isfet_model: IsfetModel::default(),
            w: 840e-6,
            l: 18e-6,
            i_bias: 100e-6,
            bias_mode: BiasMode::IdealSources,
            opamp_gain: 1e7,
            opamp_limits: None,
            v_ref_electrode: 0.0,
            vdd: 3.3,
            vss: -3.3,
            r_load: 1e6,
            ph: 7.0,
            temp_c: 25.0,
            ph_sweep: Some((1.0, 13.0, 1.0)),
            temp_sweep: Some((0.0, 100.0, 5.0)),
            isfet_in_feedback: false,
        }
    }
}

impl ReadoutConfig {
    /// The Widlar bias tuned so each leg carries `i_bias`.
    pub fn widlar_bias(&self) -> Result<BiasMode, CircuitError> {
        let supply = -self.vss;
        Ok(BiasMode::Widlar(WidlarConfig::tuned(
            MosfetModel::default(),
            10e-6,
            1e-6,
            self.i_bias,
            self.i_bias,
            supply,
            4.0,
        )?))
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        if !(self.w > 0.0 && self.l > 0.0) {
            return invalid("w and l must be positive");
        }
        if !(self.i_bias > 0.0) {
            return invalid("i_bias must be positive");
        }
        if !(self.opamp_gain >= 1e4) {
            return invalid("opamp_gain must be at least 1e4");
        }
        if !(self.vdd > self.vss) {
            return invalid("vdd must be above vss");
        }
        if !(self.r_load > 0.0) {
            return invalid("r_load must be positive");
        }
        if !(0.0..=14.0).contains(&self.ph) {
            return invalid("ph must lie in 0..=14");
        }
        if let Some((lo, hi)) = self.opamp_limits {
            if !(lo < hi) {
                return invalid("op-amp limits must satisfy min < max");
            }
        }
        if !self.nmos_model.is_valid() || !self.isfet_model.is_valid() {
            return invalid("device model parameters out of range");
        }
        if let BiasMode::Widlar(w) = &self.bias_mode {
            w.validate()?;
        }
        Ok(())
    }

    fn header(&self) -> Vec<String> {
        let mut h = alloc::vec![
            format!(
                "pair: w={} l={} i_bias={} vref={} vdd={} vss={} ph={} temp={}",
                fv(self.w),
                fv(self.l),
                fv(self.i_bias),
                fv(self.v_ref_electrode),
                fv(self.vdd),
                fv(self.vss),
                fv(self.ph),
                fv(self.temp_c)
            ),
            format!(
                "op-amp: gain={} limits={} load={}",
                fv(self.opamp_gain),
                match self.opamp_limits {
                    Some((lo, hi)) => format!("{}..{}", fv(lo), fv(hi)),
                    None => "none".to_string(),
                },
                fv(self.r_load)
            ),
            format!(
                "branches: isfet in {} branch, nmos in {} branch",
                if self.isfet_in_feedback {
                    "feedback"
                } else {
                    "reference"
                },
                if self.isfet_in_feedback {
                    "reference"
                } else {
                    "feedback"
                },
            ),
            "bias: equal pull-down sinks from each transistor source to vss".to_string(),
        ];
        h.push(match &self.bias_mode {
            BiasMode::IdealSources => "bias mode: ideal current sources".to_string(),
            BiasMode::Widlar(w) => w.describe(),
        });
        h.push(format!(
            "nmos: {}",
            describe_params(&mos_params(&self.nmos_model))
        ));
        h.push(format!(
            "isfet: {}",
            describe_params(&isfet_params(&self.isfet_model))
        ));
        h
    }
}

/// Emit the readout pair netlist.
///
/// The probe is the op-amp output measured against the reference electrode,
/// so V_O is independent of `v_ref_electrode`.
pub fn build_readout(cfg: &ReadoutConfig) -> Result<Netlist, CircuitError> {
    cfg.validate()?;
    let mut n = Netlist::new("ISFET readout pair");
    for line in cfg.header() {
        n.comment(line);
    }
    let geo = [("W", cfg.w), ("L", cfg.l)];
    let (isfet_gate, isfet_src, nmos_gate, nmos_src) = if cfg.isfet_in_feedback {
        ("vo", "s2", "ref", "s1")
    } else {
        ("ref", "s1", "vo", "s2")
    };
    n.device("Vdd", &["vdd", "0"], Some(cfg.vdd), None, &[]);
    n.device("Vss", &["vss", "0"], Some(cfg.vss), None, &[]);
    n.device("Vref", &["ref", "0"], Some(cfg.v_ref_electrode), None, &[]);
    n.device(
        "F1",
        &["vdd", isfet_gate, isfet_src, "vss"],
        None,
        Some("isfet"),
        &[geo[0], geo[1], ("PH", cfg.ph)],
    );
    n.device(
        "M2",
        &["vdd", nmos_gate, nmos_src, "vss"],
        None,
        Some("nmos"),
        &geo,
    );
    match &cfg.bias_mode {
        BiasMode::IdealSources => {
            n.device("I1", &["s1", "vss"], Some(cfg.i_bias), None, &[]);
            n.device("I2", &["s2", "vss"], Some(cfg.i_bias), None, &[]);
        }
        BiasMode::Widlar(w) => splice_widlar(&mut n, w, "0", "vss", ["s1", "s2"]),
    }
    // non-inverting input on the reference-driven branch (s1)
    let limits: Vec<(&str, f64)> = match cfg.opamp_limits {
        Some((lo, hi)) => alloc::vec![("VMIN", lo), ("VMAX", hi)],
        None => Vec::new(),
    };
    n.device(
        "E1",
        &["vo", "0", "s1", "s2"],
        Some(cfg.opamp_gain),
        None,
        &limits,
    );
    n.device("RL", &["vo", "0"], Some(cfg.r_load), None, &[]);
    n.model("nmos", ModelKind::Nmos, &mos_params(&cfg.nmos_model));
    n.model("isfet", ModelKind::Isfet, &isfet_params(&cfg.isfet_model));
    n.directive(Directive::Temp(cfg.temp_c));
    if let Some((a, b, s)) = cfg.ph_sweep {
        n.directive(Directive::Sweep(SweepAxis::new(SweepVariable::Ph, a, b, s)));
    }
    if let Some((a, b, s)) = cfg.temp_sweep {
        n.directive(Directive::Sweep(SweepAxis::new(
            SweepVariable::Temperature,
            a,
            b,
            s,
        )));
    }
    n.directive(Directive::Probe(ProbeSpec::pair("vo", "ref")));
    Ok(n)
}

/// Small fixtures used throughout the tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FixtureKind {
    Divider,
    DiodeConnected,
    SingleIsfet,
}

impl FixtureKind {
    pub const ALL: [FixtureKind; 3] = [
        FixtureKind::Divider,
        FixtureKind::DiodeConnected,
        FixtureKind::SingleIsfet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FixtureKind::Divider => "divider",
            FixtureKind::DiodeConnected => "diode_connected",
            FixtureKind::SingleIsfet => "single_isfet",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// Build a fixture.
///
/// - `divider`: 1 V across two 1 kΩ resistors, probe at the mid node `2`.
/// - `diode_connected`: NMOS (W/L = 10) with gate tied to drain, fed 100 µA.
/// - `single_isfet`: ISFET at pH 7 with the reference electrode swept 0–3 V
///   and V_DS held at 1 V. Drain current flows through a 1 Ω sense resistor,
///   so the probe reads amperes as volts.
pub fn build_fixture(kind: FixtureKind) -> Netlist {
    let mut n = Netlist::new(format!("{} fixture", kind.name()));
    match kind {
        FixtureKind::Divider => {
            n.device("V1", &["1", "0"], Some(1.0), None, &[]);
            n.device("R1", &["1", "2"], Some(1e3), None, &[]);
            n.device("R2", &["2", "0"], Some(1e3), None, &[]);
            n.directive(Directive::Op);
            n.directive(Directive::Probe(ProbeSpec::node("2")));
        }
        FixtureKind::DiodeConnected => {
            n.device("I1", &["0", "d"], Some(100e-6), None, &[]);
            n.device(
                "M1",
                &["d", "d", "0", "0"],
                None,
                Some("nmos"),
                &[("W", 10e-6), ("L", 1e-6)],
            );
            n.model("nmos", ModelKind::Nmos, &[("VTO", 0.7), ("KP", 100e-6)]);
            n.directive(Directive::Op);
            n.directive(Directive::Probe(ProbeSpec::node("d")));
        }
        FixtureKind::SingleIsfet => {
            n.comment("probe reads drain current: 1 V per A across Rs");
            n.device("Vd", &["dd", "0"], Some(1.0), None, &[]);
            n.device("Rs", &["dd", "d"], Some(1.0), None, &[]);
            n.device("Vg", &["ref", "0"], Some(1.5), None, &[]);
            n.device(
                "F1",
                &["d", "ref", "0", "0"],
                None,
                Some("isfet"),
                &[("W", 840e-6), ("L", 18e-6), ("PH", 7.0)],
            );
            n.model("isfet", ModelKind::Isfet, &[]);
            n.directive(Directive::Dc(SweepAxis::new(
                SweepVariable::Source("vg".into()),
                0.0,
                3.0,
                0.1,
            )));
            n.directive(Directive::Probe(ProbeSpec::pair("dd", "d")));
        }
    }
    n
}
