//! Parametric sweeps over pH, temperature and source values.
//!
//! The grid is split into rows along the innermost axis. Each row starts
//! from a cold solve and warm-starts every later point from the previous
//! converged one, so a row's result does not depend on which thread or in
//! what order the rows were run.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{AnalysisError, Sample};
use crate::netlist::{Circuit, ElementKind, Node, ProbeSpec, SweepAxis, SweepVariable};
use crate::solver::{newton_dc, SolveError, SolverConfig, Strategy};

/// What the sweep reports as V_O.
#[derive(Debug, Clone, PartialEq)]
pub enum Probe {
    /// Voltage of a node, or between two nodes.
    Nodes(ProbeSpec),
    /// Voltage across the terminals of a named element.
    Element(String),
}

impl Probe {
    pub fn label(&self) -> String {
        match self {
            Probe::Nodes(p) => p.label(),
            Probe::Element(name) => alloc::format!("v({})", name.to_ascii_lowercase()),
        }
    }

    fn resolve(&self, c: &Circuit) -> Result<(Node, Node), AnalysisError> {
        match self {
            Probe::Nodes(p) => {
                let find = |n: &str| {
                    c.node(n)
                        .ok_or_else(|| AnalysisError::UnknownProbe(n.to_string()))
                };
                let pos = find(&p.pos)?;
                let neg = match &p.neg {
                    Some(n) => find(n)?,
                    None => Node::Ground,
                };
                Ok((pos, neg))
            }
            Probe::Element(name) => {
                let e = c
                    .element(name)
                    .ok_or_else(|| AnalysisError::UnknownProbe(name.clone()))?;
                match e.kind {
                    ElementKind::Resistor { a, b, .. } => Ok((a, b)),
                    ElementKind::VoltageSource { pos, neg, .. }
                    | ElementKind::CurrentSource { pos, neg, .. } => Ok((pos, neg)),
                    ElementKind::Vcvs {
                        out_pos, out_neg, ..
                    } => Ok((out_pos, out_neg)),
                    _ => Err(AnalysisError::UnknownProbe(name.clone())),
                }
            }
        }
    }
}

impl From<ProbeSpec> for Probe {
    fn from(p: ProbeSpec) -> Self {
        Probe::Nodes(p)
    }
}

/// Axes in row-major order (last axis varies fastest) and the output probe.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axes: Vec<SweepAxis>,
    pub probe: Probe,
}

impl SweepSpec {
    /// The sweeps and probe declared in the netlist.
    pub fn from_circuit(c: &Circuit) -> Result<Self, AnalysisError> {
        let probe = c.probe.clone().ok_or(AnalysisError::NoProbe)?;
        Ok(Self {
            axes: c.sweeps.clone(),
            probe: Probe::Nodes(probe),
        })
    }

    /// Point count per axis; `None` if an axis is empty or malformed.
    pub fn shape(&self) -> Option<Vec<usize>> {
        self.axes
            .iter()
            .map(|a| a.len().filter(|&n| n > 0))
            .collect()
    }
}

/// One solved (or failed) grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    /// Value of each axis at this point, in axis order.
    pub coords: Vec<f64>,
    /// ISFET pH, if the circuit has one.
    pub ph: Option<f64>,
    pub temp_c: f64,
    /// Probe voltage; NaN when the point did not converge.
    pub vo: f64,
    pub converged: bool,
    pub iterations: usize,
    pub strategy: Option<Strategy>,
    pub max_kcl_residual: f64,
    pub error: Option<SolveError>,
}

impl SweepPoint {
    pub fn sample(&self) -> Sample {
        Sample {
            ph: self.ph,
            temp_c: self.temp_c,
            vo: self.vo,
            converged: self.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axes: Vec<SweepAxis>,
    pub shape: Vec<usize>,
    pub probe_label: String,
    /// Row-major over `shape`.
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| !p.converged).count()
    }

    /// More than a tenth of the points failing fails the run.
    pub fn check(&self) -> Result<(), AnalysisError> {
        let failed = self.failures();
        let total = self.points.len();
        if failed * 10 > total {
            return Err(AnalysisError::TooManyFailures { failed, total });
        }
        Ok(())
    }

    pub fn samples(&self) -> Vec<Sample> {
        self.points.iter().map(SweepPoint::sample).collect()
    }

    /// Point at a multi-index.
    pub fn get(&self, index: &[usize]) -> Option<&SweepPoint> {
        if index.len() != self.shape.len() || index.iter().zip(&self.shape).any(|(i, n)| i >= n) {
            return None;
        }
        let flat = index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (i, n)| acc * n + i);
        self.points.get(flat)
    }

    pub fn total_iterations(&self) -> usize {
        self.points.iter().map(|p| p.iterations).sum()
    }
}

/// A validated sweep, ready to be solved row by row.
#[derive(Debug, Clone)]
pub struct SweepPlan<'c> {
    circuit: &'c Circuit,
    spec: SweepSpec,
    shape: Vec<usize>,
    probe: (Node, Node),
}

fn apply(c: &mut Circuit, var: &SweepVariable, value: f64) {
    match var {
        SweepVariable::Ph => c.set_ph(value),
        SweepVariable::Temperature => c.set_temperature_c(value),
        SweepVariable::Source(name) => {
            c.set_source(name, value);
        }
    }
}

impl<'c> SweepPlan<'c> {
    pub fn new(circuit: &'c Circuit, spec: SweepSpec) -> Result<Self, AnalysisError> {
        for axis in &spec.axes {
            if axis.len().is_none_or(|n| n == 0) {
                return Err(AnalysisError::EmptyAxis(axis.variable.to_string()));
            }
            match &axis.variable {
                SweepVariable::Ph if !circuit.has_isfet() => {
                    return Err(AnalysisError::Unresolvable(
                        "ph: circuit has no ISFET".into(),
                    ))
                }
                SweepVariable::Source(name) if circuit.source_value(name).is_none() => {
                    return Err(AnalysisError::Unresolvable(alloc::format!(
                        "no source named {name}"
                    )))
                }
                _ => {}
            }
        }
        let shape = spec.shape().expect("axes checked above");
        let probe = spec.probe.resolve(circuit)?;
        Ok(Self {
            circuit,
            spec,
            shape,
            probe,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn point_count(&self) -> usize {
        self.shape.iter().product()
    }

    /// Number of independent rows (product of all but the innermost axis).
    pub fn row_count(&self) -> usize {
        match self.shape.split_last() {
            Some((_, outer)) => outer.iter().product(),
            None => 1,
        }
    }

    fn row_len(&self) -> usize {
        self.shape.last().copied().unwrap_or(1)
    }

    /// Solve one row. Pure in `(circuit, spec, config, row)`.
    pub fn solve_row(&self, config: &SolverConfig, row: usize) -> Vec<SweepPoint> {
        let axes = &self.spec.axes;
        let mut c = self.circuit.clone();
        let mut coords = alloc::vec![0.0; axes.len()];
        // decode the row index over the outer axes, last outer axis fastest
        let mut rest = row;
        for k in (0..axes.len().saturating_sub(1)).rev() {
            let i = rest % self.shape[k];
            rest /= self.shape[k];
            coords[k] = axes[k].points()[i];
            apply(&mut c, &axes[k].variable, coords[k]);
        }
        let inner = axes.last().map(|a| a.points());
        let mut guess: Option<Vec<f64>> = None;
        let mut out = Vec::with_capacity(self.row_len());
        for j in 0..self.row_len() {
            if let (Some(axis), Some(points)) = (axes.last(), &inner) {
                coords[axes.len() - 1] = points[j];
                apply(&mut c, &axis.variable, points[j]);
            }
            let temp_c = axes
                .iter()
                .zip(&coords)
                .find(|(a, _)| a.variable == SweepVariable::Temperature)
                .map_or_else(|| c.temperature_c(), |(_, &v)| v);
            let mut point = SweepPoint {
                coords: coords.clone(),
                ph: c.ph(),
                temp_c,
                vo: f64::NAN,
                converged: false,
                iterations: 0,
                strategy: None,
                max_kcl_residual: f64::NAN,
                error: None,
            };
            match newton_dc(&c, config, guess.as_deref()) {
                Ok(op) => {
                    point.vo = op.voltage(self.probe.0) - op.voltage(self.probe.1);
                    point.converged = true;
                    point.iterations = op.iterations;
                    point.strategy = Some(op.strategy);
                    point.max_kcl_residual = op.max_kcl_residual;
                    guess = Some(op.unknowns());
                }
                Err(e) => {
                    if let SolveError::NonConvergence { iterations, .. } = e {
                        point.iterations = iterations;
                    }
                    point.error = Some(e);
                }
            }
            out.push(point);
        }
        out
    }

    /// Assemble rows (in row order) into the result grid.
    pub fn finish(&self, rows: Vec<Vec<SweepPoint>>) -> SweepResult {
        assert_eq!(rows.len(), self.row_count(), "row count mismatch");
        SweepResult {
            axes: self.spec.axes.clone(),
            shape: self.shape.clone(),
            probe_label: self.spec.probe.label(),
            points: rows.into_iter().flatten().collect(),
        }
    }
}

/// Solve every grid point sequentially.
///
/// Non-converged points are flagged in the result; the run fails only when
/// more than 10% of the points fail.
pub fn run_sweep(
    circuit: &Circuit,
    spec: &SweepSpec,
    config: &SolverConfig,
) -> Result<SweepResult, AnalysisError> {
    let plan = SweepPlan::new(circuit, spec.clone())?;
    let rows = (0..plan.row_count())
        .map(|r| plan.solve_row(config, r))
        .collect();
    let result = plan.finish(rows);
    result.check()?;
    Ok(result)
}
