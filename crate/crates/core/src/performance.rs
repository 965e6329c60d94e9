//! Aircraft performance model: maximum climb thrust, drag polar, energy
//! share factor and flight envelope.
//!
//! The coefficient set is loaded from a flat key-value file (see
//! [`crate::dataio::config`]). [`AircraftPerfModel::a320_like`] is a synthetic
//! set with A320-like magnitudes. It is not derived from any licensed
//! performance database and should not be used for anything operational.

use serde::{Deserialize, Serialize};

use crate::atmosphere::{self, AtmosphereState, ISA};
use crate::dynamics::{Layer, Mode, SpeedRegime, SpeedTrend};
use crate::error::{Error, Result};
use crate::units::{ft_to_m, m_to_ft, ms_to_kt};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AircraftPerfModel {
    pub label: String,
    /// Reference mass, kg.
    pub mass_ref: f64,
    /// kg
    pub mass_min: f64,
    /// kg
    pub mass_max: f64,
    /// Wing reference area, m².
    pub wing_area: f64,
    /// Parasitic drag coefficient.
    pub cd0: f64,
    /// Induced drag factor.
    pub cd2: f64,
    /// Maximum climb thrust polynomial: N.
    pub ctc1: f64,
    /// Maximum climb thrust polynomial: ft.
    pub ctc2: f64,
    /// Maximum climb thrust polynomial: 1/ft².
    pub ctc3: f64,
    /// Reduced climb power coefficient, multiplies the rate of climb.
    pub c_red: f64,
    /// Stall speed, kt CAS.
    pub v_stall: f64,
    /// Maximum operating speed, kt CAS.
    pub v_mo: f64,
    /// Maximum operating Mach.
    pub m_mo: f64,
    /// Ceiling, ft.
    pub h_max: f64,
    /// Energy share factor while accelerating.
    pub esf_acc: f64,
    /// Energy share factor while decelerating.
    pub esf_dec: f64,
}

impl Default for AircraftPerfModel {
    fn default() -> Self {
        Self::a320_like()
    }
}

impl AircraftPerfModel {
    /// Synthetic narrow-body coefficients (non-authoritative).
    pub fn a320_like() -> Self {
        Self {
            label: "A320-like (synthetic, non-authoritative)".to_string(),
            mass_ref: 64_000.0,
            mass_min: 39_000.0,
            mass_max: 77_000.0,
            wing_area: 122.6,
            cd0: 0.025,
            cd2: 0.038,
            ctc1: 140_000.0,
            ctc2: 50_000.0,
            ctc3: 1.0e-10,
            c_red: 1.0,
            v_stall: 120.0,
            v_mo: 350.0,
            m_mo: 0.82,
            h_max: 39_000.0,
            esf_acc: 0.3,
            esf_dec: 1.7,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let masses_ok = self.mass_min > 0.0 && self.mass_min < self.mass_ref && self.mass_ref < self.mass_max;
        if !masses_ok {
            return Err(Error::config(
                "mass",
                format!(
                    "need 0 < mass_min < mass_ref < mass_max, got {} / {} / {}",
                    self.mass_min, self.mass_ref, self.mass_max
                ),
            ));
        }
        for (key, value) in [("cd0", self.cd0), ("cd2", self.cd2), ("wing_area", self.wing_area)] {
            if !(value > 0.0) {
                return Err(Error::config(key, format!("must be positive, got {value}")));
            }
        }
        if !(self.ctc1 > 0.0 && self.ctc2 > 0.0) {
            return Err(Error::config("ctc", "ctc1 and ctc2 must be positive"));
        }
        if !(self.c_red > 0.0 && self.c_red <= 1.0) {
            return Err(Error::config(
                "c_red",
                format!("must lie in (0, 1], got {}", self.c_red),
            ));
        }
        if !(self.esf_acc > 0.0 && self.esf_acc < 1.0 && self.esf_dec > 1.0) {
            return Err(Error::config(
                "esf",
                format!(
                    "need 0 < esf_acc < 1 < esf_dec, got {} / {}",
                    self.esf_acc, self.esf_dec
                ),
            ));
        }
        if !(self.v_stall > 0.0 && self.v_stall < self.v_mo) {
            return Err(Error::config("v_stall", "need 0 < v_stall < v_mo"));
        }
        if !(self.m_mo > 0.0) {
            return Err(Error::config("m_mo", "must be positive"));
        }
        if !(self.h_max > 0.0) {
            return Err(Error::config("h_max", "must be positive"));
        }
        Ok(())
    }

    /// Ceiling in metres.
    pub fn ceiling_m(&self) -> f64 {
        ft_to_m(self.h_max)
    }

    /// Thrust polynomial without the envelope check, clamped at zero.
    #[inline]
    pub(crate) fn thrust_unchecked(&self, h: f64) -> f64 {
        let h_ft = m_to_ft(h);
        (self.ctc1 * (1.0 - h_ft / self.ctc2 + self.ctc3 * h_ft * h_ft)).max(0.0)
    }

    #[inline]
    pub(crate) fn drag_at(&self, v_tas: f64, mass: f64, atm: &AtmosphereState) -> f64 {
        let q = 0.5 * atm.density * v_tas * v_tas;
        let cl = mass * ISA.g / (q * self.wing_area);
        let cd = self.cd0 + self.cd2 * cl * cl;
        cd * q * self.wing_area
    }

    pub(crate) fn esf_at(&self, v_tas: f64, dt: f64, q: Mode, atm: &AtmosphereState) -> f64 {
        match q.trend {
            SpeedTrend::Acc => return self.esf_acc,
            SpeedTrend::Dec => return self.esf_dec,
            SpeedTrend::Cst => {}
        }
        let mach = v_tas / atm.speed_of_sound;
        let k = ISA.kappa;
        let lapse = k * ISA.r * ISA.beta / (2.0 * ISA.g) * mach * mach * (atm.temperature - dt) / atm.temperature;
        let base = 1.0 + (k - 1.0) / 2.0 * mach * mach;
        // b^(-1/(k-1)) * (b^(k/(k-1)) - 1) = b - b^(-1/(k-1))
        let compressibility = base - base.powf(-1.0 / (k - 1.0));
        match (q.regime, q.layer) {
            (SpeedRegime::Mach, Layer::High) => 1.0,
            (SpeedRegime::Mach, Layer::Low) => 1.0 / (1.0 + lapse),
            (SpeedRegime::Cas, Layer::Low) => 1.0 / (1.0 + lapse + compressibility),
            (SpeedRegime::Cas, Layer::High) => 1.0 / (1.0 + compressibility),
        }
    }
}

/// Maximum climb thrust (N) at altitude `h` (m). The temperature offset has
/// no effect on thrust in this model.
pub fn max_climb_thrust(h: f64, _dt: f64, model: &AircraftPerfModel) -> Result<f64> {
    if h > model.ceiling_m() {
        return Err(Error::Envelope(format!(
            "altitude {:.0} ft above ceiling {:.0} ft",
            m_to_ft(h),
            model.h_max
        )));
    }
    if h < 0.0 {
        return Err(Error::domain(format!("negative altitude {h} m")));
    }
    Ok(model.thrust_unchecked(h))
}

/// Drag (N) from the parabolic polar, lift taken equal to weight.
pub fn drag(v_tas: f64, h: f64, dt: f64, mass: f64, model: &AircraftPerfModel) -> Result<f64> {
    if !(v_tas > 0.0) || !(mass > 0.0) {
        return Err(Error::domain("drag needs positive speed and mass"));
    }
    let atm = atmosphere::atmosphere_at(h, dt)?;
    Ok(model.drag_at(v_tas, mass, &atm))
}

/// Fraction of excess power spent on climbing for the flight condition
/// selected by `q`.
pub fn energy_share_factor(v_tas: f64, h: f64, dt: f64, q: Mode, model: &AircraftPerfModel) -> Result<f64> {
    let atm = atmosphere::atmosphere_at(h, dt)?;
    Ok(model.esf_at(v_tas, dt, q, &atm))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvelopeViolation {
    /// CAS below stall speed, kt.
    Underspeed {
        cas_kt: f64,
    },
    /// CAS above maximum operating speed, kt.
    Overspeed {
        cas_kt: f64,
    },
    Overmach {
        mach: f64,
    },
    /// Altitude above ceiling, ft.
    Ceiling {
        alt_ft: f64,
    },
}

/// Lists every envelope limit the state violates; empty when inside.
pub fn envelope_check(v_tas: f64, h: f64, dt: f64, model: &AircraftPerfModel) -> Vec<EnvelopeViolation> {
    let atm = atmosphere::atmosphere_unchecked(h, dt);
    let cas_kt = ms_to_kt(atmosphere::tas_to_cas_at(v_tas, &atm));
    let mach = v_tas / atm.speed_of_sound;
    let mut out = Vec::new();
    if cas_kt < model.v_stall {
        out.push(EnvelopeViolation::Underspeed { cas_kt });
    }
    if cas_kt > model.v_mo {
        out.push(EnvelopeViolation::Overspeed { cas_kt });
    }
    if mach > model.m_mo {
        out.push(EnvelopeViolation::Overmach { mach });
    }
    let alt_ft = m_to_ft(h);
    if alt_ft > model.h_max {
        out.push(EnvelopeViolation::Ceiling { alt_ft });
    }
    out
}
