//! Closed-form output of the readout pair, used as an independent check on
//! the solver.
//!
//! The op-amp holds both sources at the same potential and both branches
//! carry the same current, so each device's gate-source drive is its
//! threshold plus its overdrive. Relative to the reference electrode:
//!
//! V_O = vov_nmos + vth_nmos − vov_isfet − vth_isfet
//!
//! which collapses to `vth_nmos − vth_isfet` when K′·W/L match.

use super::AnalysisError;
use crate::devices::{
    isfet_vth_at, mosfet_kp_at, mosfet_vth_at, IsfetModel, MosfetModel, BOLTZMANN,
    ELEMENTARY_CHARGE,
};

fn overdrive(model: &MosfetModel, w: f64, l: f64, i: f64, t: f64) -> Result<f64, AnalysisError> {
    if !(w > 0.0 && l > 0.0) {
        return Err(AnalysisError::Device(
            crate::devices::DeviceError::Geometry { w, l },
        ));
    }
    Ok(libm::sqrt(2.0 * i / (mosfet_kp_at(model, t) * (w / l))))
}

/// Closed-form V_O for a matched-geometry pair at bias current `i_bias`,
/// pH `ph` and temperature `t` (K).
pub fn closed_form_vo(
    nmos: &MosfetModel,
    isfet: &IsfetModel,
    i_bias: f64,
    w: f64,
    l: f64,
    ph: f64,
    t: f64,
) -> Result<f64, AnalysisError> {
    closed_form_vo_sized(nmos, (w, l), isfet, (w, l), i_bias, ph, t)
}

/// As [`closed_form_vo`] with separate `(w, l)` for each device.
pub fn closed_form_vo_sized(
    nmos: &MosfetModel,
    nmos_wl: (f64, f64),
    isfet: &IsfetModel,
    isfet_wl: (f64, f64),
    i_bias: f64,
    ph: f64,
    t: f64,
) -> Result<f64, AnalysisError> {
    if !(i_bias > 0.0 && i_bias.is_finite()) {
        return Err(AnalysisError::Cutoff(i_bias));
    }
    let vov_n = overdrive(nmos, nmos_wl.0, nmos_wl.1, i_bias, t)?;
    let vov_i = overdrive(&isfet.mos, isfet_wl.0, isfet_wl.1, i_bias, t)?;
    let vth_i = isfet_vth_at(isfet, ph, t)?;
    Ok(vov_n + mosfet_vth_at(nmos, t) - vov_i - vth_i)
}

/// Reference-electrode drift (V/K) that makes a matched pair's output flat
/// in temperature at `ph`.
///
/// The surface potential drifts by `α·ln10·k/q·(pH − pH_pzc)` per kelvin;
/// the electrode has to cancel it.
pub fn isothermal_de_ref_dt(alpha: f64, ph: f64, ph_pzc: f64) -> f64 {
    -alpha * core::f64::consts::LN_10 * BOLTZMANN / ELEMENTARY_CHARGE * (ph - ph_pzc)
}
