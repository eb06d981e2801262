//! The five subcommands. Data goes to `out`; progress and diagnostics go to
//! the error stream.

use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::time::Instant;

use isfetsim_core::analysis::{AnalysisError, MetricsReport, SweepPlan, SweepSpec};
use isfetsim_core::circuits::{build_fixture, build_readout, build_widlar, FixtureKind};
use isfetsim_core::devices::{double_layer_capacitance, surface_potential};
use isfetsim_core::netlist::{parse, Circuit, ElementKind, Netlist, SweepVariable};
use isfetsim_core::solver::{newton_dc, OperatingPoint, SolverConfig};

use crate::csv_io::{read_sweep, write_sweep, SweepTable};
use crate::error::CliError;
use crate::overrides::{apply_sim, parse_pairs, readout_config, widlar_config};
use crate::parallel::solve_plan;
use crate::plot::render_svg;

/// Circuits `gen` can emit.
pub const GEN_NAMES: &[&str] = &[
    "readout",
    "widlar",
    "divider",
    "diode_connected",
    "single_isfet",
];

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))
}

pub fn load_netlist(path: &Path) -> Result<Netlist, CliError> {
    let text = read_text(path)?;
    parse(&text).map_err(|e| {
        let lines: Vec<String> = e
            .diagnostics
            .iter()
            .map(|d| format!("{}:{d}", path.display()))
            .collect();
        CliError::Parse(lines.join("\n"))
    })
}

fn write_output(path: Option<&Path>, bytes: &[u8], out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::io(p.display().to_string(), e)),
        None => out.write_all(bytes).map_err(CliError::stdout),
    }
}

fn analysis_error(e: AnalysisError) -> CliError {
    match e {
        AnalysisError::TooManyFailures { .. } => CliError::Solve(e.to_string()),
        _ => CliError::Usage(e.to_string()),
    }
}

fn load_csv(path: &Path) -> Result<SweepTable, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    read_sweep(io::BufReader::new(file))
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn probe_voltage(c: &Circuit, op: &OperatingPoint) -> Option<(String, f64)> {
    let p = c.probe.as_ref()?;
    let v = |n: &str| c.node(n).map(|n| op.voltage(n));
    let value = v(&p.pos)? - p.neg.as_deref().map_or(Some(0.0), v)?;
    Some((p.label(), value))
}

fn print_op(c: &Circuit, op: &OperatingPoint, w: &mut dyn Write) -> io::Result<()> {
    writeln!(w, "circuit: {}", c.title)?;
    writeln!(w, "temperature: {} °C", c.temperature_c())?;
    writeln!(
        w,
        "strategy: {}  iterations: {}  max KCL residual: {:.3e} A",
        op.strategy, op.iterations, op.max_kcl_residual
    )?;
    writeln!(w)?;
    writeln!(w, "{:<16} {:>15}", "node", "voltage (V)")?;
    for (name, v) in c.nodes.iter().zip(&op.node_voltages) {
        writeln!(w, "{name:<16} {v:>15.6e}")?;
    }

    let branches: Vec<(&str, usize)> = c
        .elements
        .iter()
        .filter_map(|e| match e.kind {
            ElementKind::VoltageSource { branch, .. } | ElementKind::Vcvs { branch, .. } => {
                Some((e.name.as_str(), branch - c.nodes.len()))
            }
            _ => None,
        })
        .collect();
    if !branches.is_empty() {
        writeln!(w)?;
        writeln!(w, "{:<16} {:>15}", "branch", "current (A)")?;
        for (name, b) in branches {
            writeln!(w, "{name:<16} {:>15.6e}", op.branch_currents[b])?;
        }
    }

    if !op.device_evals.is_empty() {
        writeln!(w)?;
        writeln!(
            w,
            "{:<16} {:<11} {:>14} {:>14} {:>14}",
            "device", "region", "id (A)", "gm (S)", "gds (S)"
        )?;
        for (idx, t) in &op.device_evals {
            let e = &c.elements[*idx];
            let region = if t.reversed {
                format!("{}*", t.eval.region)
            } else {
                t.eval.region.to_string()
            };
            writeln!(
                w,
                "{:<16} {region:<11} {:>14.6e} {:>14.6e} {:>14.6e}",
                e.name, t.id, t.eval.gm, t.eval.gds
            )?;
        }
        if op.device_evals.iter().any(|(_, t)| t.reversed) {
            writeln!(w, "(* drain and source exchanged)")?;
        }
    }

    for e in &c.elements {
        if let ElementKind::Isfet {
            ph,
            model,
            w: width,
            l,
            ..
        } = &e.kind
        {
            if let Ok(psi0) = surface_potential(*ph, model, c.temperature) {
                let cdl = double_layer_capacitance(model, psi0, c.temperature, width * l);
                writeln!(
                    w,
                    "{}: pH {ph}  psi0 {psi0:.6e} V  double-layer capacitance {cdl:.6e} F",
                    e.name
                )?;
            }
        }
    }

    if let Some((label, v)) = probe_voltage(c, op) {
        writeln!(w)?;
        writeln!(w, "probe {label} = {v:.6e}")?;
    }
    Ok(())
}

fn all_saturated(op: &OperatingPoint) -> bool {
    op.device_evals
        .iter()
        .all(|(_, t)| t.eval.region == isfetsim_core::devices::Region::Saturation)
}

pub fn cmd_run(path: &Path, sets: &[String], out: &mut dyn Write) -> Result<(), CliError> {
    let netlist = load_netlist(path)?;
    let pairs = parse_pairs(sets)?;
    let setup = apply_sim(netlist, &pairs, true)?;
    let c = &setup.circuit;

    if let Some(scan) = &setup.scan {
        let SweepVariable::Source(name) = &scan.variable else {
            unreachable!("scan axes always name a source");
        };
        return bias_scan(c, name, &scan.points(), &setup.solver, out);
    }

    let op = newton_dc(c, &setup.solver, None)
        .map_err(|e| CliError::Solve(format!("{}: {e}", path.display())))?;
    print_op(c, &op, out).map_err(CliError::stdout)
}

/// Step a source and report where every transistor stays saturated.
fn bias_scan(
    c: &Circuit,
    source: &str,
    values: &[f64],
    cfg: &SolverConfig,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let mut circuit = c.clone();
    let mut guess: Option<Vec<f64>> = None;
    let mut window: Option<(f64, f64)> = None;
    let mut best_run: Option<(f64, f64)> = None;
    let probe = c
        .probe
        .as_ref()
        .map(|p| p.label())
        .unwrap_or_else(|| "-".into());
    writeln!(
        out,
        "{:>14} {:>15} {:>10} {:>11}",
        source, probe, "converged", "saturated"
    )
    .map_err(CliError::stdout)?;
    for &v in values {
        circuit.set_source(source, v);
        let res = newton_dc(&circuit, cfg, guess.as_deref());
        let line = match &res {
            Ok(op) => {
                let sat = all_saturated(op);
                let pv = probe_voltage(&circuit, op).map_or(f64::NAN, |p| p.1);
                if sat {
                    window = Some(window.map_or((v, v), |(a, _)| (a, v)));
                } else {
                    window = None;
                }
                if let Some(w) = window {
                    if best_run.is_none_or(|b| w.1 - w.0 > b.1 - b.0) {
                        best_run = Some(w);
                    }
                }
                guess = Some(op.unknowns());
                format!("{v:>14.6e} {pv:>15.6e} {:>10} {:>11}", true, sat)
            }
            Err(_) => {
                window = None;
                guess = None;
                format!("{v:>14.6e} {:>15} {:>10} {:>11}", "nan", false, false)
            }
        };
        writeln!(out, "{line}").map_err(CliError::stdout)?;
    }
    match best_run {
        Some((a, b)) => {
            let mid = 0.5 * (a + b);
            writeln!(
                out,
                "saturated window: {a:.6e} .. {b:.6e}  suggested {source} = {mid:.6e}"
            )
            .map_err(CliError::stdout)?;
            Ok(())
        }
        None => Err(CliError::Solve(format!(
            "no {source} value in the scan keeps every transistor saturated"
        ))),
    }
}

pub fn cmd_sweep(
    path: &Path,
    sets: &[String],
    output: Option<&Path>,
    jobs: usize,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let netlist = load_netlist(path)?;
    let pairs = parse_pairs(sets)?;
    let setup = apply_sim(netlist, &pairs, false)?;
    let c = &setup.circuit;
    if c.sweeps.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: no sweep axis (add .sweep/.dc or --set ph_sweep=...)",
            path.display()
        )));
    }
    let spec = SweepSpec::from_circuit(c).map_err(analysis_error)?;
    let plan = SweepPlan::new(c, spec).map_err(analysis_error)?;

    let start = Instant::now();
    let result = solve_plan(&plan, &setup.solver, jobs);
    let elapsed = start.elapsed();

    let mut buf = Vec::new();
    write_sweep(&result, &mut buf).map_err(|e| CliError::Io {
        path: "<csv>".into(),
        source: io::Error::other(e),
    })?;
    write_output(output, &buf, out)?;
    eprintln!(
        "points={} failures={} iterations={} wall_time={:.3}s",
        result.points.len(),
        result.failures(),
        result.total_iterations(),
        elapsed.as_secs_f64()
    );
    for p in result.points.iter().filter(|p| !p.converged).take(5) {
        if let Some(e) = &p.error {
            eprintln!("  failed at {:?}: {e}", p.coords);
        }
    }
    result.check().map_err(analysis_error)
}

/// `{}` keeps zero as `0`; undefined values print as `nan`.
fn kv(w: &mut dyn Write, key: &str, v: Option<f64>) -> io::Result<()> {
    writeln!(w, "{key}={}", v.unwrap_or(f64::NAN))
}

pub fn cmd_metrics(path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let table = load_csv(path)?;
    let r = MetricsReport::from_samples(&table.samples)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    write_report(&table.probe, &r, out).map_err(CliError::stdout)
}

fn write_report(probe: &str, r: &MetricsReport, w: &mut dyn Write) -> io::Result<()> {
    writeln!(
        w,
        "probe {probe}: {} points, {} failed",
        r.points, r.failures
    )?;
    for s in &r.sensitivity_by_temp {
        writeln!(
            w,
            "sensitivity at {} °C: {:.4} mV/pH (r² = {:.6}, {} points)",
            s.temp_c,
            s.volts_per_ph * 1e3,
            s.r2,
            s.points
        )?;
    }
    for (ph, tc) in &r.tc_by_ph {
        match tc {
            Some(tc) => writeln!(w, "tc at pH {ph}: {tc:.4} ppm/°C")?,
            None => writeln!(w, "tc at pH {ph}: undefined (zero mean)")?,
        }
    }
    match r.tc_joint {
        Some(tc) => writeln!(w, "tc over the whole grid: {tc:.4} ppm/°C")?,
        None => writeln!(w, "tc over the whole grid: undefined")?,
    }
    writeln!(
        w,
        "vo: mean {:.6e} V, min {:.6e} V, max {:.6e} V",
        r.vo_mean, r.vo_min, r.vo_max
    )?;

    writeln!(w, "---")?;
    writeln!(w, "points={}", r.points)?;
    writeln!(w, "failures={}", r.failures)?;
    kv(
        w,
        "sensitivity_mv_per_ph",
        r.sensitivity.map(|s| s.volts_per_ph * 1e3),
    )?;
    kv(w, "sensitivity_temp_c", r.sensitivity.map(|s| s.temp_c))?;
    kv(w, "sensitivity_r2", r.sensitivity.map(|s| s.r2))?;
    kv(w, "tc_joint", r.tc_joint)?;
    kv(w, "tc_per_ph_worst", r.tc_per_ph_worst.map(|p| p.1))?;
    kv(w, "tc_per_ph_worst_ph", r.tc_per_ph_worst.map(|p| p.0))?;
    kv(w, "tc_per_ph_best", r.tc_per_ph_best.map(|p| p.1))?;
    kv(w, "tc_per_ph_best_ph", r.tc_per_ph_best.map(|p| p.0))?;
    kv(w, "vo_mean", Some(r.vo_mean))?;
    kv(w, "vo_min", Some(r.vo_min))?;
    kv(w, "vo_max", Some(r.vo_max))
}

pub fn cmd_plot(path: &Path, output: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    let table = load_csv(path)?;
    let svg = render_svg(&table.samples, &table.probe)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    write_output(output, svg.as_bytes(), out)
}

pub fn cmd_gen(
    name: &str,
    widlar_bias: bool,
    sets: &[String],
    output: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let pairs = parse_pairs(sets)?;
    let netlist = match name.to_ascii_lowercase().as_str() {
        "readout" => build_readout(&readout_config(&pairs, widlar_bias)?),
        "widlar" => build_widlar(&widlar_config(&pairs)?),
        other => match FixtureKind::from_name(other) {
            Some(kind) => {
                if let Some((k, _)) = pairs.first() {
                    return Err(CliError::Usage(format!(
                        "fixture `{other}` takes no overrides (got `{k}`)"
                    )));
                }
                Ok(build_fixture(kind))
            }
            None => {
                return Err(CliError::Usage(format!(
                    "unknown circuit `{name}`; valid names: {}",
                    GEN_NAMES.join(", ")
                )))
            }
        },
    }
    .map_err(|e| CliError::Usage(e.to_string()))?;
    if widlar_bias && name != "readout" {
        return Err(CliError::Usage("--bias applies to `readout` only".into()));
    }
    write_output(output, netlist.to_string().as_bytes(), out)
}
