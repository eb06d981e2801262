//! Sweeps and the metrics extracted from them.

mod metrics;
mod oracle;
mod sweep;

use alloc::string::String;
use core::fmt;

pub use metrics::{
    distinct, linear_fit, sensitivity, tc_joint, temperature_coefficient, LinearFit, MetricsReport,
    Sensitivity, SENSITIVITY_TEMP_C,
};
pub use oracle::{closed_form_vo, closed_form_vo_sized, isothermal_de_ref_dt};
pub use sweep::{run_sweep, Probe, SweepPlan, SweepPoint, SweepResult, SweepSpec};

use crate::devices::DeviceError;

/// The per-point data the metrics need. Built from a [`SweepResult`] or
/// read back from CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub ph: Option<f64>,
    pub temp_c: f64,
    pub vo: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisError {
    NoProbe,
    UnknownProbe(String),
    EmptyAxis(String),
    Unresolvable(String),
    TooManyFailures {
        failed: usize,
        total: usize,
    },
    /// Not enough distinct points along the named axis.
    MissingAxis(&'static str),
    Degenerate(&'static str),
    /// The temperature coefficient divides by a zero mean output.
    ZeroMean,
    NoData,
    Cutoff(f64),
    Device(DeviceError),
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisError::NoProbe => f.write_str("no probe given (add .probe or --set probe=...)"),
            AnalysisError::UnknownProbe(n) => write!(f, "probe target '{n}' does not exist"),
            AnalysisError::EmptyAxis(v) => write!(f, "sweep of {v} has no points"),
            AnalysisError::Unresolvable(why) => write!(f, "cannot sweep {why}"),
            AnalysisError::TooManyFailures { failed, total } => {
                write!(f, "{failed} of {total} sweep points failed to converge")
            }
            AnalysisError::MissingAxis(a) => write!(f, "need at least two distinct {a} values"),
            AnalysisError::Degenerate(why) => write!(f, "degenerate fit: {why}"),
            AnalysisError::ZeroMean => {
                f.write_str("temperature coefficient undefined: mean output is zero")
            }
            AnalysisError::NoData => f.write_str("no converged points"),
            AnalysisError::Cutoff(i) => write!(f, "bias current {i} A leaves the pair in cutoff"),
            AnalysisError::Device(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for AnalysisError {}

impl From<DeviceError> for AnalysisError {
    fn from(e: DeviceError) -> Self {
        AnalysisError::Device(e)
    }
}

#[cfg(test)]
mod tests;
