//! `--set key=value` handling.
//!
//! Simulation commands accept solver tolerances, analysis settings and model
//! parameters (`<model>.<PARAM>`). `gen` accepts builder settings; bare MOS
//! keys there apply to both transistors, `nmos.` or `isfet.` target one.

use isfetsim_core::celsius_to_kelvin;
use isfetsim_core::circuits::{BiasMode, ReadoutConfig, WidlarConfig};
use isfetsim_core::devices::{IsfetModel, MosfetModel};
use isfetsim_core::netlist::{
    elaborate, parse_value, Circuit, ModelKind, Netlist, ProbeSpec, SweepAxis, SweepVariable,
};
use isfetsim_core::solver::SolverConfig;

use crate::error::CliError;

/// Keys accepted by `run` and `sweep`, besides `<model>.<PARAM>` and
/// `source.<name>`.
pub const SIM_KEYS: &[&str] = &[
    "abstol",
    "reltol",
    "vntol",
    "max_iter",
    "vstep_limit",
    "source_steps",
    "temp",
    "ph",
    "probe",
    "ph_sweep",
    "temp_sweep",
    "dc",
];

/// Keys accepted by `gen readout`, besides MOS parameters.
pub const READOUT_KEYS: &[&str] = &[
    "w",
    "l",
    "ibias",
    "gain",
    "vref",
    "vdd",
    "vss",
    "rload",
    "ph",
    "temp",
    "vmin",
    "vmax",
    "swap",
    "ph_sweep",
    "temp_sweep",
];

/// Keys accepted by `gen widlar`, besides MOS parameters.
pub const WIDLAR_KEYS: &[&str] = &[
    "w", "l", "iref", "iout", "supply", "ratio", "r_ref", "r_deg",
];

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Split `key=value` items. Keys are lower-cased.
pub fn parse_pairs(items: &[String]) -> Result<Vec<(String, String)>, CliError> {
    items
        .iter()
        .map(|item| match item.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => {
                Ok((k.trim().to_ascii_lowercase(), v.trim().to_string()))
            }
            _ => Err(usage(format!("override `{item}` is not key=value"))),
        })
        .collect()
}

pub fn number(key: &str, v: &str) -> Result<f64, CliError> {
    parse_value(v).map_err(|e| usage(format!("{key}: {}", e.message)))
}

fn count(key: &str, v: &str) -> Result<usize, CliError> {
    v.parse()
        .map_err(|_| usage(format!("{key}: `{v}` is not a non-negative integer")))
}

fn flag(key: &str, v: &str) -> Result<bool, CliError> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(usage(format!("{key}: `{v}` is not a boolean"))),
    }
}

/// `start:stop:step`.
pub fn range(key: &str, v: &str) -> Result<(f64, f64, f64), CliError> {
    let parts: Vec<&str> = v.split(':').collect();
    let [a, b, c] = parts[..] else {
        return Err(usage(format!("{key}: expected start:stop:step, got `{v}`")));
    };
    Ok((number(key, a)?, number(key, b)?, number(key, c)?))
}

fn axis(key: &str, var: SweepVariable, (a, b, s): (f64, f64, f64)) -> Result<SweepAxis, CliError> {
    let ax = SweepAxis::new(var, a, b, s);
    if ax.len().is_none_or(|n| n == 0) {
        return Err(usage(format!("{key}: {a}:{b}:{s} has no points")));
    }
    if ax.variable == SweepVariable::Ph && (a.min(b) < 0.0 || a.max(b) > 14.0) {
        return Err(usage(format!("{key}: pH range must stay within 0..=14")));
    }
    Ok(ax)
}

pub fn set_mos_param(m: &mut MosfetModel, key: &str, v: f64) -> bool {
    match key.to_ascii_uppercase().as_str() {
        "VTO" => m.vto = v,
        "KP" => m.kp = v,
        "LAMBDA" => m.lambda = v,
        "TCV" => m.tcv = v,
        "MUEXP" => m.mu_exp = v,
        "TNOM" => m.t_nom = celsius_to_kelvin(v),
        _ => return false,
    }
    true
}

pub fn set_isfet_param(m: &mut IsfetModel, key: &str, v: f64) -> bool {
    match key.to_ascii_uppercase().as_str() {
        "ALPHA" => m.alpha = v,
        "PHPZC" => m.ph_pzc = v,
        "EREF" => m.e_ref = v,
        "EREFTC" => m.de_ref_dt = v,
        "CHISOL" => m.chi_sol = v,
        "DPHILJ" => m.dphi_lj = v,
        "E0" => m.e0 = v,
        "CHELM" => m.c_helm = v,
        "N0" => m.c_gouy_n0 = v,
        _ => return set_mos_param(&mut m.mos, key, v),
    }
    true
}

/// A netlist with overrides applied, ready to solve.
#[derive(Debug, Clone)]
pub struct SimSetup {
    pub circuit: Circuit,
    pub solver: SolverConfig,
    /// `scan=<source>:start:stop:step` for `run`.
    pub scan: Option<SweepAxis>,
}

fn set_axis(c: &mut Circuit, var: SweepVariable, ax: Option<SweepAxis>) {
    match (c.sweeps.iter().position(|a| a.variable == var), ax) {
        (Some(i), Some(ax)) => c.sweeps[i] = ax,
        (Some(i), None) => {
            c.sweeps.remove(i);
        }
        (None, Some(ax)) => c.sweeps.push(ax),
        (None, None) => {}
    }
}

/// Apply simulation overrides. Model parameters are set on the cards
/// before elaboration; everything else on the elaborated circuit.
pub fn apply_sim(
    mut netlist: Netlist,
    pairs: &[(String, String)],
    allow_scan: bool,
) -> Result<SimSetup, CliError> {
    let mut rest = Vec::new();
    for (k, v) in pairs {
        if let Some((model, param)) = k.split_once('.') {
            if model == "source" {
                rest.push((k.clone(), v.clone()));
                continue;
            }
            let value = number(k, v)?;
            let card = netlist
                .find_model_mut(model)
                .ok_or_else(|| usage(format!("{k}: no model named `{model}`")))?;
            let param = param.to_ascii_uppercase();
            if !card.kind.accepts(&param) {
                return Err(usage(format!(
                    "{k}: {} models have no {param} parameter",
                    card.kind
                )));
            }
            match card.params.iter_mut().find(|(p, _)| *p == param) {
                Some(slot) => slot.1 = value,
                None => card.params.push((param, value)),
            }
        } else {
            rest.push((k.clone(), v.clone()));
        }
    }

    let mut c = elaborate(&netlist).map_err(|e| CliError::Parse(e.to_string()))?;
    let mut solver = SolverConfig::default();
    let mut scan = None;
    for (k, v) in &rest {
        match k.as_str() {
            "abstol" => solver.abstol = number(k, v)?,
            "reltol" => solver.reltol = number(k, v)?,
            "vntol" => solver.vntol = number(k, v)?,
            "vstep_limit" => solver.vstep_limit = number(k, v)?,
            "max_iter" => solver.max_iter = count(k, v)?,
            "source_steps" => solver.source_steps = count(k, v)?,
            "temp" => {
                let t = number(k, v)?;
                if celsius_to_kelvin(t) <= 0.0 {
                    return Err(usage("temp: below absolute zero"));
                }
                c.set_temperature_c(t);
            }
            "ph" => {
                let ph = number(k, v)?;
                if !c.has_isfet() {
                    return Err(usage("ph: circuit has no ISFET"));
                }
                if !(0.0..=14.0).contains(&ph) {
                    return Err(usage("ph: must lie in 0..=14"));
                }
                c.set_ph(ph);
            }
            "probe" => {
                let spec = match v.split_once(':') {
                    Some((p, n)) => ProbeSpec::pair(p, n),
                    None => ProbeSpec::node(v),
                };
                for n in std::iter::once(&spec.pos).chain(spec.neg.iter()) {
                    if c.node(n).is_none() {
                        return Err(usage(format!("probe: node `{n}` does not exist")));
                    }
                }
                c.probe = Some(spec);
            }
            "ph_sweep" | "temp_sweep" => {
                let var = if k == "ph_sweep" {
                    SweepVariable::Ph
                } else {
                    SweepVariable::Temperature
                };
                let ax = if v.eq_ignore_ascii_case("none") {
                    None
                } else {
                    Some(axis(k, var.clone(), range(k, v)?)?)
                };
                set_axis(&mut c, var, ax);
            }
            "dc" | "scan" => {
                if k == "scan" && !allow_scan {
                    return Err(usage("scan is only available to `run`"));
                }
                if k == "dc" && v.eq_ignore_ascii_case("none") {
                    c.sweeps
                        .retain(|a| !matches!(a.variable, SweepVariable::Source(_)));
                    continue;
                }
                let (name, r) = v
                    .split_once(':')
                    .ok_or_else(|| usage(format!("{k}: expected <source>:start:stop:step")))?;
                let name = name.to_ascii_lowercase();
                if c.source_value(&name).is_none() {
                    return Err(usage(format!("{k}: no independent source named `{name}`")));
                }
                let var = SweepVariable::Source(name);
                let ax = axis(k, var.clone(), range(k, r)?)?;
                if k == "scan" {
                    scan = Some(ax);
                } else {
                    set_axis(&mut c, var, Some(ax));
                }
            }
            _ => {
                if let Some(name) = k.strip_prefix("source.") {
                    if !c.set_source(name, number(k, v)?) {
                        return Err(usage(format!("{k}: no independent source named `{name}`")));
                    }
                    continue;
                }
                return Err(usage(format!(
                    "unknown override `{k}`; known keys: {}, <model>.<param>, source.<name>",
                    SIM_KEYS.join(", ")
                )));
            }
        }
    }
    solver.validate().map_err(|e| usage(e.to_string()))?;
    Ok(SimSetup {
        circuit: c,
        solver,
        scan,
    })
}

fn model_key(k: &str) -> Option<(Option<&str>, &str)> {
    match k.split_once('.') {
        Some((prefix, param)) => Some((Some(prefix), param)),
        None if ModelKind::MOS_KEYS
            .iter()
            .any(|m| m.eq_ignore_ascii_case(k)) =>
        {
            Some((None, k))
        }
        None => None,
    }
}

/// Readout builder configuration from `gen` overrides.
pub fn readout_config(pairs: &[(String, String)], widlar: bool) -> Result<ReadoutConfig, CliError> {
    let mut cfg = ReadoutConfig::default();
    let mut mirror = MosfetModel::default();
    let (mut vmin, mut vmax) = (None, None);
    for (k, v) in pairs {
        let sweep = |var| -> Result<Option<(f64, f64, f64)>, CliError> {
            if v.eq_ignore_ascii_case("none") {
                return Ok(None);
            }
            let r = range(k, v)?;
            axis(k, var, r)?;
            Ok(Some(r))
        };
        match k.as_str() {
            "w" => cfg.w = number(k, v)?,
            "l" => cfg.l = number(k, v)?,
            "ibias" => cfg.i_bias = number(k, v)?,
            "gain" => cfg.opamp_gain = number(k, v)?,
            "vref" => cfg.v_ref_electrode = number(k, v)?,
            "vdd" => cfg.vdd = number(k, v)?,
            "vss" => cfg.vss = number(k, v)?,
            "rload" => cfg.r_load = number(k, v)?,
            "ph" => cfg.ph = number(k, v)?,
            "temp" => cfg.temp_c = number(k, v)?,
            "vmin" => vmin = Some(number(k, v)?),
            "vmax" => vmax = Some(number(k, v)?),
            "swap" => cfg.isfet_in_feedback = flag(k, v)?,
            "ph_sweep" => cfg.ph_sweep = sweep(SweepVariable::Ph)?,
            "temp_sweep" => cfg.temp_sweep = sweep(SweepVariable::Temperature)?,
            _ => {
                let value = number(k, v)?;
                let ok = match model_key(k) {
                    Some((None, p)) => {
                        set_mos_param(&mut cfg.nmos_model, p, value)
                            && set_mos_param(&mut cfg.isfet_model.mos, p, value)
                    }
                    Some((Some("nmos"), p)) => set_mos_param(&mut cfg.nmos_model, p, value),
                    Some((Some("isfet"), p)) => set_isfet_param(&mut cfg.isfet_model, p, value),
                    Some((Some("mirror"), p)) if widlar => set_mos_param(&mut mirror, p, value),
                    _ => false,
                };
                if !ok {
                    return Err(usage(format!(
                        "unknown override `{k}`; known keys: {}, MOS parameters ({}), nmos.<param>, isfet.<param>{}",
                        READOUT_KEYS.join(", "),
                        ModelKind::MOS_KEYS.join(", ").to_ascii_lowercase(),
                        if widlar { ", mirror.<param>" } else { "" }
                    )));
                }
            }
        }
    }
    if vmin.is_some() || vmax.is_some() {
        cfg.opamp_limits = Some((
            vmin.unwrap_or(f64::NEG_INFINITY),
            vmax.unwrap_or(f64::INFINITY),
        ));
    }
    if widlar {
        let w = WidlarConfig::tuned(mirror, 10e-6, 1e-6, cfg.i_bias, cfg.i_bias, -cfg.vss, 4.0)
            .map_err(|e| usage(e.to_string()))?;
        cfg.bias_mode = BiasMode::Widlar(w);
    }
    Ok(cfg)
}

/// Widlar builder configuration from `gen` overrides.
pub fn widlar_config(pairs: &[(String, String)]) -> Result<WidlarConfig, CliError> {
    let mut model = MosfetModel::default();
    let (mut w, mut l, mut iref, mut iout, mut supply, mut ratio) =
        (10e-6, 1e-6, 100e-6, 100e-6, 3.3, 4.0);
    let (mut r_ref, mut r_deg) = (None, None);
    for (k, v) in pairs {
        let x = number(k, v)?;
        match k.as_str() {
            "w" => w = x,
            "l" => l = x,
            "iref" => iref = x,
            "iout" => iout = x,
            "supply" => supply = x,
            "ratio" => ratio = x,
            "r_ref" => r_ref = Some(x),
            "r_deg" => r_deg = Some(x),
            _ => {
                let p = k.strip_prefix("mirror.").unwrap_or(k);
                if !set_mos_param(&mut model, p, x) {
                    return Err(usage(format!(
                        "unknown override `{k}`; known keys: {}, MOS parameters",
                        WIDLAR_KEYS.join(", ")
                    )));
                }
            }
        }
    }
    let mut cfg = WidlarConfig::tuned(model, w, l, iref, iout, supply, ratio)
        .map_err(|e| usage(e.to_string()))?;
    cfg.r_ref = r_ref.unwrap_or(cfg.r_ref);
    cfg.r_emitter_deg = r_deg.unwrap_or(cfg.r_emitter_deg);
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}
