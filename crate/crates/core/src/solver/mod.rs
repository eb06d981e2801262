//! DC operating point by Newton–Raphson on the MNA residual.

mod lu;
mod newton;
mod stamp;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use lu::{lu_solve, DenseMatrix, SingularMatrix, PIVOT_EPSILON};
pub use newton::newton_dc;
pub use stamp::{stamp, MnaSystem, TerminalEval};

use crate::devices::DeviceError;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// KCL residual bound for node rows, A. Also the update tolerance for
    /// branch currents.
    pub abstol: f64,
    pub reltol: f64,
    /// Absolute update tolerance for node voltages, V.
    pub vntol: f64,
    /// Newton iterations allowed per attempt.
    pub max_iter: usize,
    /// Largest change applied in one iteration to a node touching a
    /// transistor, V.
    pub vstep_limit: f64,
    /// Strictly decreasing gmin values tried after a failed direct solve.
    pub gmin_ladder: Vec<f64>,
    /// Ramp steps for source stepping; zero disables it.
    pub source_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            abstol: 1e-12,
            reltol: 1e-6,
            vntol: 1e-6,
            max_iter: 100,
            vstep_limit: 0.5,
            gmin_ladder: alloc::vec![1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11, 1e-12],
            source_steps: 10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |what: &'static str| Err(SolveError::Config(what));
        if !(self.abstol > 0.0 && self.reltol >= 0.0 && self.vntol >= 0.0) {
            return bad("tolerances must be positive");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1");
        }
        if !(self.vstep_limit > 0.0) {
            return bad("vstep_limit must be positive");
        }
        if self.gmin_ladder.iter().any(|g| !(*g > 0.0)) {
            return bad("gmin values must be positive");
        }
        if self.gmin_ladder.windows(2).any(|w| w[1] >= w[0]) {
            return bad("gmin ladder must be strictly decreasing");
        }
        Ok(())
    }
}

/// Which continuation method produced the solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Direct,
    Gmin,
    SourceStep,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Direct => "direct",
            Strategy::Gmin => "gmin",
            Strategy::SourceStep => "source-step",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    /// Indexed like `Circuit::nodes`.
    pub node_voltages: Vec<f64>,
    /// Branch currents of voltage sources and VCVS outputs, in branch order.
    /// Positive current flows into the `+` terminal.
    pub branch_currents: Vec<f64>,
    /// Transistor linearizations keyed by element index.
    pub device_evals: Vec<(usize, TerminalEval)>,
    pub iterations: usize,
    pub strategy: Strategy,
    /// Largest node-row KCL residual at the solution, A.
    pub max_kcl_residual: f64,
}

impl OperatingPoint {
    /// Full unknown vector, usable as a warm start.
    pub fn unknowns(&self) -> Vec<f64> {
        let mut x = self.node_voltages.clone();
        x.extend_from_slice(&self.branch_currents);
        x
    }

    pub fn voltage(&self, node: crate::netlist::Node) -> f64 {
        node.index().map_or(0.0, |i| self.node_voltages[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveError {
    /// The Jacobian lost rank; `node` names the offending unknown.
    Singular {
        row: usize,
        node: String,
    },
    NonConvergence {
        node: String,
        residual: f64,
        iterations: usize,
    },
    Device(DeviceError),
    GuessLength {
        expected: usize,
        found: usize,
    },
    Config(&'static str),
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::Singular { node, .. } => write!(
                f,
                "singular matrix at {node}: node may be floating or driven only by ideal sources"
            ),
            SolveError::NonConvergence {
                node,
                residual,
                iterations,
            } => write!(
                f,
                "no convergence after {iterations} iterations; worst KCL residual {residual:.3e} A at node {node}"
            ),
            SolveError::Device(e) => write!(f, "device evaluation failed: {e}"),
            SolveError::GuessLength { expected, found } => {
                write!(f, "initial guess has {found} entries, circuit has {expected} unknowns")
            }
            SolveError::Config(what) => write!(f, "invalid solver configuration: {what}"),
        }
    }
}

impl core::error::Error for SolveError {}

impl From<DeviceError> for SolveError {
    fn from(e: DeviceError) -> Self {
        SolveError::Device(e)
    }
}

#[cfg(test)]
mod tests;
