//! Stateless compact models.
//!
//! [`mosfet`] holds the level-1 square-law transistor with linear threshold
//! drift and power-law mobility drift. [`isfet`] stacks the electrolyte,
//! reference electrode and membrane potentials on top of it as a gate shift.

use core::fmt;

pub mod isfet;
pub mod mosfet;

pub use isfet::{
    double_layer_capacitance, eval_isfet, flatband_shift, gouy_chapman_capacitance, isfet_vth_at,
    surface_potential, IsfetModel,
};
pub use mosfet::{eval_mosfet, mosfet_kp_at, mosfet_vth_at, square_law, MosfetModel};

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602176634e-19;
/// Reference temperature of the electrode drift term, K.
pub const T_REF: f64 = 298.16;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
/// Relative permittivity of the electrolyte (water).
pub const WATER_PERMITTIVITY: f64 = 78.5;

/// The physical constants the models are built on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub k: f64,
    pub q: f64,
    pub t_ref: f64,
}

impl PhysicalConstants {
    pub const SI: PhysicalConstants = PhysicalConstants {
        k: BOLTZMANN,
        q: ELEMENTARY_CHARGE,
        t_ref: T_REF,
    };

    /// Thermal voltage kT/q.
    pub fn thermal_voltage(&self, t: f64) -> f64 {
        self.k * t / self.q
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::SI
    }
}

/// Ideal pH response ln(10)·kT/q in V/pH.
pub fn nernst_slope(t: f64) -> f64 {
    core::f64::consts::LN_10 * PhysicalConstants::SI.thermal_voltage(t)
}

/// Operating region of an n-channel device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Cutoff,
    Triode,
    Saturation,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::Cutoff => "cutoff",
            Region::Triode => "triode",
            Region::Saturation => "saturation",
        })
    }
}

/// Drain current and its small-signal linearization at one bias point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceEval {
    /// Drain current, A.
    pub id: f64,
    /// ∂id/∂vgs, S.
    pub gm: f64,
    /// ∂id/∂vds, S.
    pub gds: f64,
    pub region: Region,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DeviceError {
    /// Channel width or length not strictly positive.
    Geometry { w: f64, l: f64 },
    /// pH outside 0..=14.
    PhOutOfRange(f64),
    /// Bias current that cannot hold a device in saturation.
    Bias(f64),
}

impl fmt::Display for DeviceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeviceError::Geometry { w, l } => {
                write!(f, "channel geometry must be positive (W={w}, L={l})")
            }
            DeviceError::PhOutOfRange(ph) => write!(f, "pH {ph} outside 0..=14"),
            DeviceError::Bias(i) => write!(f, "bias current {i} A leaves the pair in cutoff"),
        }
    }
}

impl core::error::Error for DeviceError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nernst_slope_at_reference() {
        assert!((nernst_slope(298.16) - 0.05916).abs() < 1e-4);
        assert!((nernst_slope(298.16) * 1e3 - 59.16).abs() < 0.01);
    }

    #[test]
    fn nernst_slope_is_linear_in_t() {
        assert_eq!(nernst_slope(0.0), 0.0);
        assert!((nernst_slope(373.16) - 0.07404).abs() < 1e-5);
        assert!((nernst_slope(2.0 * 300.0) - 2.0 * nernst_slope(300.0)).abs() < 1e-15);
    }
}
