//! ISFET macro-model: a MOSFET whose gate sees the reference electrode through
//! the electrolyte, so every electrochemical potential appears as a shift of
//! the effective gate drive.

use super::mosfet::{eval_mosfet, mosfet_vth_at, MosfetModel};
use super::{
    nernst_slope, DeviceError, DeviceEval, PhysicalConstants, T_REF, VACUUM_PERMITTIVITY,
    WATER_PERMITTIVITY,
};

/// Electrochemical parameters layered on an underlying [`MosfetModel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsfetModel {
    pub mos: MosfetModel,
    /// Fraction of the ideal pH response realised by the membrane, 0..=1.
    pub alpha: f64,
    /// pH at the point of zero charge.
    pub ph_pzc: f64,
    /// Reference electrode potential at [`T_REF`], V.
    pub e_ref: f64,
    /// Reference electrode drift, V/K.
    pub de_ref_dt: f64,
    /// Surface dipole potential of the electrolyte, V.
    pub chi_sol: f64,
    /// Liquid-junction potential drop, V.
    pub dphi_lj: f64,
    /// Extra pH- and temperature-independent membrane offset, V.
    pub e0: f64,
    /// Helmholtz layer capacitance, F/m².
    pub c_helm: f64,
    /// Bulk ion number density for the diffuse layer, 1/m³.
    pub c_gouy_n0: f64,
}

impl Default for IsfetModel {
    fn default() -> Self {
        Self {
            mos: MosfetModel::default(),
            alpha: 1.0,
            ph_pzc: 2.2,
            e_ref: 0.205,
            de_ref_dt: -1.4e-4,
            chi_sol: 0.0,
            dphi_lj: 0.0,
            e0: 0.0,
            c_helm: 0.2,
            // 0.1 mol/L
            c_gouy_n0: 6.022_140_76e25,
        }
    }
}

impl IsfetModel {
    pub fn is_valid(&self) -> bool {
        self.mos.is_valid()
            && (0.0..=1.0).contains(&self.alpha)
            && (0.0..=14.0).contains(&self.ph_pzc)
    }

    /// The pH- and temperature-independent part of the threshold folded
    /// into one constant, so that
    /// `isfet_vth_at(ph, t) = alpha·nernst_slope(t)·ph + lumped_offset(t)`.
    ///
    /// With `tcv = 0` and `de_ref_dt = 0` this is independent of `t` apart
    /// from the `-alpha·nernst_slope(t)·ph_pzc` term.
    pub fn lumped_offset(&self, t: f64) -> f64 {
        mosfet_vth_at(&self.mos, t)
            + self.e_ref
            + self.de_ref_dt * (t - T_REF)
            + self.chi_sol
            + self.dphi_lj
            + self.e0
            - self.alpha * nernst_slope(t) * self.ph_pzc
    }
}

fn check_ph(ph: f64) -> Result<(), DeviceError> {
    if (0.0..=14.0).contains(&ph) {
        Ok(())
    } else {
        Err(DeviceError::PhOutOfRange(ph))
    }
}

/// Membrane surface potential `−alpha·ln10·kT/q·(ph_pzc − ph)`.
pub fn surface_potential(ph: f64, model: &IsfetModel, t: f64) -> Result<f64, DeviceError> {
    check_ph(ph)?;
    Ok(-model.alpha * nernst_slope(t) * (model.ph_pzc - ph))
}

/// Total electrochemical shift of the gate drive (the flat-band shift).
///
/// Sum of the electrode potential with its drift, the dipole and junction
/// potentials, the membrane offset `e0` and the surface potential.
pub fn flatband_shift(model: &IsfetModel, ph: f64, t: f64) -> Result<f64, DeviceError> {
    let psi0 = surface_potential(ph, model, t)?;
    Ok(model.e_ref
        + model.de_ref_dt * (t - T_REF)
        + model.chi_sol
        + model.dphi_lj
        + model.e0
        + psi0)
}

/// Threshold seen from the reference electrode.
pub fn isfet_vth_at(model: &IsfetModel, ph: f64, t: f64) -> Result<f64, DeviceError> {
    Ok(mosfet_vth_at(&model.mos, t) + flatband_shift(model, ph, t)?)
}

/// Evaluate the ISFET with the reference electrode at `v_ref_to_source`
/// above the source.
pub fn eval_isfet(
    model: &IsfetModel,
    w: f64,
    l: f64,
    v_ref_to_source: f64,
    vds: f64,
    ph: f64,
    t: f64,
) -> Result<DeviceEval, DeviceError> {
    let shift = flatband_shift(model, ph, t)?;
    eval_mosfet(&model.mos, w, l, v_ref_to_source - shift, vds, t)
}

/// Diffuse-layer capacitance per area for a 1:1 electrolyte,
/// `sqrt(2·εr·ε0·q²·n0/(kT))·cosh(q·psi0/(2kT))`, F/m².
pub fn gouy_chapman_capacitance(n0: f64, psi0: f64, t: f64) -> f64 {
    let c = PhysicalConstants::SI;
    let vt = c.thermal_voltage(t);
    let debye = libm::sqrt(2.0 * WATER_PERMITTIVITY * VACUUM_PERMITTIVITY * c.q * n0 / vt);
    debye * libm::cosh(psi0 / (2.0 * vt))
}

/// Helmholtz and Gouy–Chapman capacitances in series over `area`, F.
///
/// Only reported; the DC solve never stamps capacitors.
pub fn double_layer_capacitance(model: &IsfetModel, psi0: f64, t: f64, area: f64) -> f64 {
    let helm = model.c_helm * area;
    let gouy = gouy_chapman_capacitance(model.c_gouy_n0, psi0, t) * area;
    1.0 / (1.0 / helm + 1.0 / gouy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::Region;
    use proptest::prelude::*;

    fn bare() -> IsfetModel {
        IsfetModel {
            e_ref: 0.0,
            de_ref_dt: 0.0,
            chi_sol: 0.0,
            dphi_lj: 0.0,
            e0: 0.0,
            ..IsfetModel::default()
        }
    }

    #[test]
    fn surface_potential_values() {
        let m = bare();
        assert_eq!(surface_potential(2.2, &m, 310.0).unwrap(), 0.0);
        let full = surface_potential(7.0, &m, T_REF).unwrap();
        assert!((full - 0.2840).abs() < 1e-4);
        let half = IsfetModel { alpha: 0.5, ..m };
        let h = surface_potential(7.0, &half, T_REF).unwrap();
        assert!((h - 0.1420).abs() < 1e-4);
        assert!((h - full / 2.0).abs() < 1e-15);
        assert_eq!(
            surface_potential(14.5, &m, T_REF),
            Err(DeviceError::PhOutOfRange(14.5))
        );
        assert!(surface_potential(-0.1, &m, T_REF).is_err());
    }

    #[test]
    fn flatband_values() {
        let m = bare();
        assert_eq!(flatband_shift(&m, m.ph_pzc, T_REF).unwrap(), 0.0);
        let with_ref = IsfetModel { e_ref: 0.205, ..m };
        assert!((flatband_shift(&with_ref, m.ph_pzc, T_REF).unwrap() - 0.205).abs() < 1e-15);
        let drifting = IsfetModel {
            de_ref_dt: -1.4e-4,
            ..with_ref
        };
        assert!((flatband_shift(&drifting, m.ph_pzc, 348.16).unwrap() - 0.198).abs() < 1e-12);
    }

    #[test]
    fn threshold_reduces_to_mosfet() {
        let m = bare();
        assert_eq!(isfet_vth_at(&m, m.ph_pzc, m.mos.t_nom).unwrap(), m.mos.vto);
        let a = isfet_vth_at(&m, 7.0, T_REF).unwrap();
        let b = isfet_vth_at(&m, 8.0, T_REF).unwrap();
        assert!((b - a - nernst_slope(T_REF)).abs() < 1e-12);
        assert!((b - a - 0.05916).abs() < 1e-4);
        let dead = IsfetModel { alpha: 0.0, ..m };
        assert_eq!(
            isfet_vth_at(&dead, 3.0, 320.0).unwrap(),
            isfet_vth_at(&dead, 11.0, 320.0).unwrap()
        );
    }

    #[test]
    fn lumped_offset_matches_threshold() {
        let m = IsfetModel {
            alpha: 0.93,
            chi_sol: 0.01,
            e0: -0.02,
            ..IsfetModel::default()
        };
        for &t in &[273.16, 298.16, 373.16] {
            for &ph in &[1.0, 7.0, 13.0] {
                let direct = isfet_vth_at(&m, ph, t).unwrap();
                let folded = m.alpha * nernst_slope(t) * ph + m.lumped_offset(t);
                assert!((direct - folded).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_shift_is_plain_mosfet() {
        let m = IsfetModel {
            ph_pzc: 7.0,
            ..bare()
        };
        let a = eval_isfet(&m, 840e-6, 18e-6, 1.1, 2.0, 7.0, 310.0).unwrap();
        let b = eval_mosfet(&m.mos, 840e-6, 18e-6, 1.1, 2.0, 310.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn forced_current_tracks_nernst() {
        // Source voltage under a forced saturation current moves by exactly
        // the threshold shift between pH 7 and 8.
        let m = IsfetModel::default();
        let (w, l, i, t) = (840e-6, 18e-6, 100e-6, T_REF);
        let beta = m.mos.kp * w / l;
        let vov = libm::sqrt(2.0 * i / beta);
        let vs = |ph: f64| -(isfet_vth_at(&m, ph, t).unwrap() + vov);
        for ph in [7.0, 8.0] {
            let e = eval_isfet(&m, w, l, -vs(ph), 3.0, ph, t).unwrap();
            assert_eq!(e.region, Region::Saturation);
            assert!((e.id - i).abs() < 1e-12);
        }
        assert!((vs(7.0) - vs(8.0) - m.alpha * nernst_slope(t)).abs() < 1e-12);
    }

    #[test]
    fn double_layer_limits() {
        let area = 840e-6 * 18e-6;
        let m = IsfetModel {
            c_gouy_n0: f64::INFINITY,
            ..IsfetModel::default()
        };
        assert!((double_layer_capacitance(&m, 0.0, T_REF, area) - m.c_helm * area).abs() < 1e-24);

        // Pick c_helm equal to the zero-potential Gouy value: series halves it.
        let n0 = 6.022_140_76e25;
        let cg = gouy_chapman_capacitance(n0, 0.0, T_REF);
        let m = IsfetModel {
            c_helm: cg,
            c_gouy_n0: n0,
            ..IsfetModel::default()
        };
        let c = double_layer_capacitance(&m, 0.0, T_REF, area);
        assert!((c - 0.5 * cg * area).abs() / c < 1e-12);
    }

    #[test]
    fn gouy_reference_value() {
        // sqrt(2·78.5·8.8541878128e-12·1.602176634e-19·6.02214076e25 / 0.02569344)
        // evaluated independently: 0.722510 F/m² at 0.1 mol/L and 298.16 K.
        let cg = gouy_chapman_capacitance(6.022_140_76e25, 0.0, T_REF);
        assert!((cg - 0.722510).abs() < 1e-5, "{cg}");
        // cosh grows symmetrically with |psi0|
        let p = gouy_chapman_capacitance(6.022_140_76e25, 0.05, T_REF);
        let n = gouy_chapman_capacitance(6.022_140_76e25, -0.05, T_REF);
        assert!(p > cg && (p - n).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn surface_potential_linear_in_ph(
            ph in 0.0f64..13.0, alpha in 0.0f64..=1.0, t in 250.0f64..400.0,
        ) {
            let m = IsfetModel { alpha, ..bare() };
            let a = surface_potential(ph, &m, t).unwrap();
            let b = surface_potential(ph + 1.0, &m, t).unwrap();
            prop_assert!((b - a - alpha * nernst_slope(t)).abs() < 1e-12);
        }

        #[test]
        fn shift_equivalence_is_exact(
            v in -1.0f64..3.0, vds in 0.0f64..3.0, ph in 0.0f64..14.0, t in 250.0f64..400.0,
        ) {
            let m = IsfetModel { mos: MosfetModel { lambda: 0.02, ..MosfetModel::default() }, ..IsfetModel::default() };
            let shift = flatband_shift(&m, ph, t).unwrap();
            let a = eval_isfet(&m, 840e-6, 18e-6, v, vds, ph, t).unwrap();
            let b = eval_mosfet(&m.mos, 840e-6, 18e-6, v - shift, vds, t).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn matched_pair_offset_is_temperature_free(
            t in 200.0f64..450.0, e_ref in -0.5f64..0.5, chi in -0.1f64..0.1, lj in -0.05f64..0.05,
        ) {
            let m = IsfetModel { e_ref, chi_sol: chi, dphi_lj: lj, de_ref_dt: 0.0, ..IsfetModel::default() };
            let diff = isfet_vth_at(&m, m.ph_pzc, t).unwrap() - mosfet_vth_at(&m.mos, t);
            prop_assert!((diff - (e_ref + chi + lj)).abs() < 1e-12);
        }
    }
}
