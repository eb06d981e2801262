//! Level-1 n-channel MOSFET.

use super::{DeviceError, DeviceEval, Region, T_REF};

/// Level-1 parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MosfetModel {
    /// Zero-bias threshold at `t_nom`, V.
    pub vto: f64,
    /// Transconductance parameter K′ = µn·Cox at `t_nom`, A/V².
    pub kp: f64,
    /// Channel-length modulation, 1/V.
    pub lambda: f64,
    /// Threshold drift dVth/dT, V/K.
    pub tcv: f64,
    /// Mobility temperature exponent.
    pub mu_exp: f64,
    /// Temperature the parameters were extracted at, K.
    pub t_nom: f64,
}

impl Default for MosfetModel {
    fn default() -> Self {
        Self {
            vto: 0.7,
            kp: 1e-4,
            lambda: 0.0,
            tcv: -1.4e-3,
            mu_exp: -1.5,
            t_nom: T_REF,
        }
    }
}

impl MosfetModel {
    pub fn is_valid(&self) -> bool {
        self.kp > 0.0 && self.t_nom > 0.0 && self.lambda >= 0.0
    }
}

/// Threshold at temperature `t`: `vto + tcv·(t − t_nom)`.
pub fn mosfet_vth_at(model: &MosfetModel, t: f64) -> f64 {
    model.vto + model.tcv * (t - model.t_nom)
}

/// K′ at temperature `t`: `kp·(t/t_nom)^mu_exp`.
pub fn mosfet_kp_at(model: &MosfetModel, t: f64) -> f64 {
    if model.mu_exp == 0.0 {
        return model.kp;
    }
    model.kp * libm::pow(t / model.t_nom, model.mu_exp)
}

/// Square-law current for `vds >= 0` with gain factor `beta = K′·W/L`.
///
/// `(1 + lambda·vds)` scales both triode and saturation so that `id` and
/// `gds` are continuous at `vds = vgs − vth`.
pub fn square_law(beta: f64, vth: f64, lambda: f64, vgs: f64, vds: f64) -> DeviceEval {
    let vov = vgs - vth;
    if vov <= 0.0 {
        return DeviceEval {
            id: 0.0,
            gm: 0.0,
            gds: 0.0,
            region: Region::Cutoff,
        };
    }
    let clm = 1.0 + lambda * vds;
    if vds < vov {
        let core = vov * vds - 0.5 * vds * vds;
        DeviceEval {
            id: beta * core * clm,
            gm: beta * vds * clm,
            gds: beta * (vov - vds) * clm + beta * core * lambda,
            region: Region::Triode,
        }
    } else {
        let core = 0.5 * vov * vov;
        DeviceEval {
            id: beta * core * clm,
            gm: beta * vov * clm,
            gds: beta * core * lambda,
            region: Region::Saturation,
        }
    }
}

/// Evaluate the transistor at `(vgs, vds)` and temperature `t`.
///
/// `vds` is expected to be non-negative; the solver swaps drain and source
/// before calling in when the bias reverses.
pub fn eval_mosfet(
    model: &MosfetModel,
    w: f64,
    l: f64,
    vgs: f64,
    vds: f64,
    t: f64,
) -> Result<DeviceEval, DeviceError> {
    if !(w > 0.0 && l > 0.0) {
        return Err(DeviceError::Geometry { w, l });
    }
    let beta = mosfet_kp_at(model, t) * (w / l);
    Ok(square_law(
        beta,
        mosfet_vth_at(model, t),
        model.lambda,
        vgs,
        vds,
    ))
}
