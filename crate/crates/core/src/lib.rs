//! Compact device models, a SPICE-style netlist front end, and a Newton DC
//! solver for ISFET/MOSFET readout circuits.
//!
//! The crate is `no_std` and only needs `alloc`. File IO, CSV, plotting and
//! the command-line tool live in the `isfetsim` crate.
//!
//! Module map:
//!
//! - [`devices`]: level-1 MOSFET and ISFET electrochemical gate models.
//! - [`netlist`]: value parsing, card parsing, canonical printing, elaboration.
//! - [`solver`]: dense LU, MNA stamping, Newton with gmin/source continuation.
//! - [`analysis`]: sweeps, linear fits, sensitivity, temperature coefficient.
//! - [`circuits`]: builders for the readout pair, the Widlar bias and fixtures.
#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is how validation rejects NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod circuits;
pub mod devices;
pub mod netlist;
pub mod solver;

/// Offset between the Celsius scale used at the interfaces and kelvin.
///
/// 273.16 puts 25 °C at 298.16 K, the electrode reference temperature.
pub const CELSIUS_OFFSET: f64 = 273.16;

/// Convert a temperature in °C to kelvin.
pub fn celsius_to_kelvin(c: f64) -> f64 {
    c + CELSIUS_OFFSET
}

/// Convert a temperature in kelvin to °C.
pub fn kelvin_to_celsius(k: f64) -> f64 {
    k - CELSIUS_OFFSET
}
