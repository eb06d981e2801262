//! Damped Newton–Raphson with gmin and source-stepping continuation.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::lu::lu_solve;
use super::stamp::MnaSystem;
use super::{OperatingPoint, SolveError, SolverConfig, Strategy};
use crate::netlist::Circuit;

#[derive(Debug)]
enum Outcome {
    Converged,
    Singular(usize),
    Diverged,
}

struct Attempt {
    x: Vec<f64>,
    iterations: usize,
    outcome: Outcome,
    /// Node-row residual at the last stamped iterate.
    residual: Vec<f64>,
}

fn max_kcl(f: &[f64], nodes: usize) -> f64 {
    f[..nodes].iter().fold(0.0, |m, r| m.max(r.abs()))
}

/// One Newton run at fixed `gmin` and source scale.
fn attempt(
    sys: &MnaSystem<'_>,
    cfg: &SolverConfig,
    mut x: Vec<f64>,
    gmin: f64,
    scale: f64,
) -> Attempt {
    let nodes = sys.circuit().nodes.len();
    let limited = sys.nonlinear_nodes();
    let mut step_ok = false;
    let mut residual = Vec::new();
    for k in 0..=cfg.max_iter {
        let (jac, f) = sys.stamp_scaled(&x, gmin, scale);
        let kcl = max_kcl(&f, nodes);
        if k > 0 && step_ok && kcl <= cfg.abstol {
            return Attempt {
                x,
                iterations: k,
                outcome: Outcome::Converged,
                residual: f,
            };
        }
        if k == cfg.max_iter || !kcl.is_finite() {
            residual = f;
            break;
        }
        let rhs: Vec<f64> = f.iter().map(|r| -r).collect();
        let dx = match lu_solve(jac, rhs) {
            Ok(dx) => dx,
            Err(e) => {
                return Attempt {
                    x,
                    iterations: k + 1,
                    outcome: Outcome::Singular(e.row),
                    residual: f,
                }
            }
        };
        step_ok = true;
        for (i, (xi, mut d)) in x.iter_mut().zip(dx).enumerate() {
            let tol = if i < nodes { cfg.vntol } else { cfg.abstol };
            if i < nodes && limited[i] && d.abs() > cfg.vstep_limit {
                d = d.signum() * cfg.vstep_limit;
                step_ok = false;
            }
            let next = *xi + d;
            if d.abs() > cfg.reltol * xi.abs().max(next.abs()) + tol {
                step_ok = false;
            }
            *xi = next;
        }
    }
    Attempt {
        x,
        iterations: cfg.max_iter,
        outcome: Outcome::Diverged,
        residual,
    }
}

fn worst_node(circuit: &Circuit, residual: &[f64]) -> (String, f64) {
    let nodes = circuit.nodes.len();
    residual
        .iter()
        .take(nodes)
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, r)| match best {
            Some((_, b)) if b >= r.abs() => best,
            _ => Some((i, r.abs())),
        })
        .map(|(i, r)| (circuit.nodes[i].clone(), r))
        .unwrap_or_else(|| ("0".to_string(), 0.0))
}

fn unknown_label(circuit: &Circuit, row: usize) -> String {
    if row < circuit.nodes.len() {
        return circuit.nodes[row].clone();
    }
    circuit
        .elements
        .iter()
        .find_map(|e| match e.kind {
            crate::netlist::ElementKind::VoltageSource { branch, .. }
            | crate::netlist::ElementKind::Vcvs { branch, .. }
                if branch == row =>
            {
                Some(alloc::format!("branch of {}", e.name))
            }
            _ => None,
        })
        .unwrap_or_else(|| alloc::format!("unknown {row}"))
}

struct Tracker<'a> {
    circuit: &'a Circuit,
    iterations: usize,
    last_singular: Option<usize>,
    last_residual: Vec<f64>,
}

impl Tracker<'_> {
    fn record(&mut self, a: &Attempt) -> bool {
        self.iterations += a.iterations;
        match a.outcome {
            Outcome::Converged => true,
            Outcome::Singular(row) => {
                self.last_singular = Some(row);
                self.last_residual.clone_from(&a.residual);
                false
            }
            Outcome::Diverged => {
                self.last_singular = None;
                self.last_residual.clone_from(&a.residual);
                false
            }
        }
    }

    fn error(&self) -> SolveError {
        if let Some(row) = self.last_singular {
            return SolveError::Singular {
                row,
                node: unknown_label(self.circuit, row),
            };
        }
        let (node, residual) = worst_node(self.circuit, &self.last_residual);
        SolveError::NonConvergence {
            node,
            residual,
            iterations: self.iterations,
        }
    }
}

/// Solve the DC operating point.
///
/// Tries a plain Newton run from `initial_guess` (or zero), then gmin
/// stepping down `config.gmin_ladder` with each level warm-started, then
/// source stepping. The strategy that succeeded is recorded in the result;
/// `iterations` counts every Newton iteration spent, failed attempts
/// included.
pub fn newton_dc(
    circuit: &Circuit,
    config: &SolverConfig,
    initial_guess: Option<&[f64]>,
) -> Result<OperatingPoint, SolveError> {
    config.validate()?;
    let sys = MnaSystem::new(circuit)?;
    let n = sys.size();
    let start = match initial_guess {
        Some(g) if g.len() != n => {
            return Err(SolveError::GuessLength {
                expected: n,
                found: g.len(),
            })
        }
        Some(g) => g.to_vec(),
        None => vec![0.0; n],
    };
    let mut track = Tracker {
        circuit,
        iterations: 0,
        last_singular: None,
        last_residual: Vec::new(),
    };

    let direct = attempt(&sys, config, start.clone(), 0.0, 1.0);
    if track.record(&direct) {
        return Ok(finish(&sys, direct.x, track.iterations, Strategy::Direct));
    }

    let mut x = start;
    let mut ok = true;
    for &g in &config.gmin_ladder {
        let a = attempt(&sys, config, x.clone(), g, 1.0);
        ok = track.record(&a);
        x = a.x;
        if !ok {
            break;
        }
    }
    if ok {
        let a = attempt(&sys, config, x, 0.0, 1.0);
        if track.record(&a) {
            return Ok(finish(&sys, a.x, track.iterations, Strategy::Gmin));
        }
    }

    let floor = config.gmin_ladder.last().copied().unwrap_or(0.0);
    let mut x = vec![0.0; n];
    let mut ok = true;
    for step in 1..=config.source_steps {
        let scale = step as f64 / config.source_steps as f64;
        let a = attempt(&sys, config, x.clone(), floor, scale);
        ok = track.record(&a);
        x = a.x;
        if !ok {
            break;
        }
    }
    if ok {
        let a = attempt(&sys, config, x, 0.0, 1.0);
        if track.record(&a) {
            return Ok(finish(&sys, a.x, track.iterations, Strategy::SourceStep));
        }
    }
    Err(track.error())
}

fn finish(
    sys: &MnaSystem<'_>,
    x: Vec<f64>,
    iterations: usize,
    strategy: Strategy,
) -> OperatingPoint {
    let nodes = sys.circuit().nodes.len();
    let (_, f) = sys.stamp(&x, 0.0);
    let device_evals = sys.device_evals(&x);
    let mut node_voltages = x;
    let branch_currents = node_voltages.split_off(nodes);
    OperatingPoint {
        node_voltages,
        branch_currents,
        device_evals,
        iterations,
        strategy,
        max_kcl_residual: max_kcl(&f, nodes),
    }
}
