//! International Standard Atmosphere with a temperature offset, and the
//! CAS / TAS / Mach conversions built on it.
//!
//! The temperature offset `dT` shifts the temperature profile additively.
//! Pressure always follows the ISA (`dT = 0`) law, so density picks up the
//! offset only through the temperature.

use crate::error::{Error, Result};

/// Physical constants of the standard atmosphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Gravitational acceleration, m/s².
    pub g: f64,
    /// Specific gas constant of dry air, J/(kg·K).
    pub r: f64,
    /// Adiabatic index.
    pub kappa: f64,
    /// Tropospheric temperature lapse rate, K/m.
    pub beta: f64,
    /// Sea-level temperature, K.
    pub t0: f64,
    /// Sea-level pressure, Pa.
    pub p0: f64,
    /// Tropopause geopotential altitude, m.
    pub h_trop: f64,
}

pub const ISA: PhysicalConstants = PhysicalConstants {
    g: 9.80665,
    r: 287.05287,
    kappa: 1.4,
    beta: -0.0065,
    t0: 288.15,
    p0: 101_325.0,
    h_trop: 11_000.0,
};

impl PhysicalConstants {
    /// Sea-level ISA density.
    pub fn rho0(&self) -> f64 {
        self.p0 / (self.r * self.t0)
    }

    /// ISA temperature at the tropopause (no offset).
    pub fn t_trop_isa(&self) -> f64 {
        self.t0 + self.beta * self.h_trop
    }
}

/// Lowest altitude accepted by [`atmosphere_at`], m.
pub const H_MIN: f64 = -500.0;
/// Highest altitude accepted by [`atmosphere_at`], m.
pub const H_MAX: f64 = 50_000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtmosphereState {
    /// K
    pub temperature: f64,
    /// Pa
    pub pressure: f64,
    /// kg/m³
    pub density: f64,
    /// m/s
    pub speed_of_sound: f64,
}

fn check_altitude(h: f64) -> Result<()> {
    if !(H_MIN..=H_MAX).contains(&h) {
        return Err(Error::domain(format!("altitude {h} m outside [{H_MIN}, {H_MAX}] m")));
    }
    Ok(())
}

/// Atmospheric state at geopotential altitude `h` (m) with offset `dt` (K).
pub fn atmosphere_at(h: f64, dt: f64) -> Result<AtmosphereState> {
    check_altitude(h)?;
    Ok(atmosphere_unchecked(h, dt))
}

#[inline]
pub(crate) fn temperature(h: f64, dt: f64) -> f64 {
    let c = &ISA;
    if h <= c.h_trop {
        c.t0 + dt + c.beta * h
    } else {
        c.t0 + dt + c.beta * c.h_trop
    }
}

#[inline]
pub(crate) fn pressure(h: f64) -> f64 {
    let c = &ISA;
    let exponent = -c.g / (c.beta * c.r);
    if h <= c.h_trop {
        c.p0 * ((c.t0 + c.beta * h) / c.t0).powf(exponent)
    } else {
        let t_trop = c.t_trop_isa();
        let p_trop = c.p0 * (t_trop / c.t0).powf(exponent);
        p_trop * (-c.g / (c.r * t_trop) * (h - c.h_trop)).exp()
    }
}

/// Same as [`atmosphere_at`] without the altitude range check. Used on the
/// integrator hot path, where the simulation loop enforces its own bounds.
#[inline]
pub(crate) fn atmosphere_unchecked(h: f64, dt: f64) -> AtmosphereState {
    let temperature = temperature(h, dt);
    let pressure = pressure(h);
    let density = pressure / (ISA.r * temperature);
    AtmosphereState {
        temperature,
        pressure,
        density,
        speed_of_sound: (ISA.kappa * ISA.r * temperature).sqrt(),
    }
}

fn check_speed(what: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::domain(format!("{what} must be positive, got {v}")));
    }
    Ok(())
}

#[inline]
fn mu() -> f64 {
    (ISA.kappa - 1.0) / ISA.kappa
}

/// Sea-level impact pressure ratio q_c/p0 for a CAS. Depends on the speed
/// only, so callers with a fixed CAS can compute it once.
#[inline]
pub(crate) fn cas_impact_ratio(v_cas: f64) -> f64 {
    let mu = mu();
    (1.0 + mu / 2.0 * ISA.rho0() / ISA.p0 * v_cas * v_cas).powf(1.0 / mu) - 1.0
}

/// TAS for a given [`cas_impact_ratio`].
#[inline]
pub(crate) fn tas_from_impact_ratio(impact: f64, atm: &AtmosphereState) -> f64 {
    let mu = mu();
    let (p, rho) = (atm.pressure, atm.density);
    let inner = (1.0 + ISA.p0 / p * impact).powf(mu) - 1.0;
    (2.0 / mu * p / rho * inner).sqrt()
}

#[inline]
pub(crate) fn cas_to_tas_at(v_cas: f64, atm: &AtmosphereState) -> f64 {
    tas_from_impact_ratio(cas_impact_ratio(v_cas), atm)
}

#[inline]
pub(crate) fn tas_to_cas_at(v_tas: f64, atm: &AtmosphereState) -> f64 {
    let mu = mu();
    let (p, rho) = (atm.pressure, atm.density);
    let (p0, rho0) = (ISA.p0, ISA.rho0());
    let impact = (1.0 + mu / 2.0 * rho / p * v_tas * v_tas).powf(1.0 / mu) - 1.0;
    let inner = (1.0 + p / p0 * impact).powf(mu) - 1.0;
    (2.0 / mu * p0 / rho0 * inner).sqrt()
}

/// Calibrated to true airspeed (m/s) using compressible flow relations.
pub fn cas_to_tas(v_cas: f64, h: f64, dt: f64) -> Result<f64> {
    check_speed("CAS", v_cas)?;
    Ok(cas_to_tas_at(v_cas, &atmosphere_at(h, dt)?))
}

/// True to calibrated airspeed (m/s); inverse of [`cas_to_tas`].
pub fn tas_to_cas(v_tas: f64, h: f64, dt: f64) -> Result<f64> {
    check_speed("TAS", v_tas)?;
    Ok(tas_to_cas_at(v_tas, &atmosphere_at(h, dt)?))
}

pub fn mach_to_tas(mach: f64, h: f64, dt: f64) -> Result<f64> {
    check_speed("Mach", mach)?;
    Ok(mach * atmosphere_at(h, dt)?.speed_of_sound)
}

pub fn tas_to_mach(v_tas: f64, h: f64, dt: f64) -> Result<f64> {
    check_speed("TAS", v_tas)?;
    Ok(v_tas / atmosphere_at(h, dt)?.speed_of_sound)
}

/// Altitude (m) at which climbing at constant `v_cas` (m/s) reaches Mach
/// `mach`, in ISA conditions. Solved by bisection to 0.1 m.
pub fn crossover_altitude(v_cas: f64, mach: f64) -> Result<f64> {
    check_speed("CAS", v_cas)?;
    check_speed("Mach", mach)?;
    let gap = |h: f64| {
        let atm = atmosphere_unchecked(h, 0.0);
        cas_to_tas_at(v_cas, &atm) - mach * atm.speed_of_sound
    };
    let (mut lo, mut hi) = (0.0, ISA.h_trop + 10_000.0);
    let (g_lo, g_hi) = (gap(lo), gap(hi));
    if !(g_lo < 0.0 && g_hi >= 0.0) {
        return Err(Error::NoCrossover { v_cas, mach });
    }
    while hi - lo > 0.1 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::kt_to_ms;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn sea_level_reference() {
        let a = atmosphere_at(0.0, 0.0).unwrap();
        assert_eq!(a.temperature, 288.15);
        assert_eq!(a.pressure, 101_325.0);
        assert_relative_eq!(a.density, 1.225, max_relative = 1e-4);
    }

    #[test]
    fn tropopause_temperature() {
        let a = atmosphere_at(11_000.0, 0.0).unwrap();
        assert_relative_eq!(a.temperature, 216.65, max_relative = 1e-12);
        let warm = atmosphere_at(0.0, 10.0).unwrap();
        assert_relative_eq!(warm.temperature, 298.15, max_relative = 1e-15);
    }

    #[test]
    fn out_of_range_altitude() {
        assert!(matches!(atmosphere_at(-501.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(atmosphere_at(50_001.0, 0.0), Err(Error::Domain(_))));
        assert!(atmosphere_at(-500.0, 0.0).is_ok());
    }

    #[test]
    fn speed_of_sound_consistent() {
        for h in [0.0, 4000.0, 12_000.0] {
            let a = atmosphere_at(h, 7.0).unwrap();
            let expected = (1.4 * 287.05287 * a.temperature).sqrt();
            assert_relative_eq!(a.speed_of_sound, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn cas_tas_sea_level_identity() {
        assert_relative_eq!(cas_to_tas(150.0, 0.0, 0.0).unwrap(), 150.0, max_relative = 1e-14);
        assert_relative_eq!(tas_to_cas(150.0, 0.0, 0.0).unwrap(), 150.0, max_relative = 1e-14);
        assert!(cas_to_tas(150.0, 5000.0, 0.0).unwrap() > 150.0);
        assert!(tas_to_cas(200.0, 8000.0, 0.0).unwrap() < 200.0);
    }

    #[test]
    fn cas_tas_round_trip_grid() {
        for v in [100.0, 150.0, 250.0] {
            for h in [0.0, 3000.0, 9000.0] {
                let back = tas_to_cas(cas_to_tas(v, h, 0.0).unwrap(), h, 0.0).unwrap();
                assert_relative_eq!(back, v, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn non_positive_speeds_rejected() {
        assert!(cas_to_tas(0.0, 0.0, 0.0).is_err());
        assert!(tas_to_cas(-1.0, 0.0, 0.0).is_err());
        assert!(mach_to_tas(0.0, 0.0, 0.0).is_err());
        assert!(tas_to_mach(-3.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn mach_one_at_sea_level() {
        assert!((mach_to_tas(1.0, 0.0, 0.0).unwrap() - 340.294).abs() < 0.01);
        let expected = 0.78 * (1.4_f64 * 287.05287 * 216.65).sqrt();
        assert_relative_eq!(
            mach_to_tas(0.78, 11_000.0, 0.0).unwrap(),
            expected,
            max_relative = 1e-12
        );
    }

    #[test]
    fn crossover_constructed_fixed_point() {
        let v_mach = mach_to_tas(0.78, 6000.0, 0.0).unwrap();
        let v_cas = tas_to_cas(v_mach, 6000.0, 0.0).unwrap();
        let h = crossover_altitude(v_cas, 0.78).unwrap();
        assert!((h - 6000.0).abs() <= 0.1, "{h}");
    }

    #[test]
    fn crossover_matches_grid_scan() {
        let v_cas = kt_to_ms(310.0);
        let h = crossover_altitude(v_cas, 0.78).unwrap();
        // Brute force: first 0.25 m grid point where the CAS curve meets the Mach curve.
        let mut k = 0;
        let scan = loop {
            let hg = k as f64 * 0.25;
            let a = atmosphere_at(hg, 0.0).unwrap();
            let p0: f64 = 101_325.0;
            let rho0 = p0 / (287.05287 * 288.15);
            let mu = 0.4 / 1.4;
            // Independent route: evaluate TAS from the impact pressure.
            let qc = p0 * ((1.0 + mu / 2.0 * rho0 / p0 * v_cas * v_cas).powf(1.0 / mu) - 1.0);
            let mach_cas = ((2.0 / 0.4) * ((qc / a.pressure + 1.0).powf(mu) - 1.0)).sqrt();
            if mach_cas >= 0.78 {
                break hg;
            }
            k += 1;
            assert!(hg < 30_000.0);
        };
        assert!((h - scan).abs() < 1.0, "bisection {h} vs scan {scan}");
        assert!(h > 8000.0 && h < 10_000.0);
    }

    #[test]
    fn crossover_monotone_in_mach() {
        let v = kt_to_ms(300.0);
        let a = crossover_altitude(v, 0.76).unwrap();
        let b = crossover_altitude(v, 0.80).unwrap();
        assert!(b > a);
    }

    #[test]
    fn crossover_absent() {
        // Mach 0.2 is slower than 300 kt CAS at sea level.
        assert!(matches!(
            crossover_altitude(kt_to_ms(300.0), 0.2),
            Err(Error::NoCrossover { .. })
        ));
    }

    proptest! {
        #[test]
        fn temperature_continuous_and_flat_above_tropopause(dt in -20.0f64..20.0, dh in 1.0f64..9000.0) {
            let below = atmosphere_at(11_000.0 - 1e-6, dt).unwrap().temperature;
            let at = atmosphere_at(11_000.0, dt).unwrap().temperature;
            let above = atmosphere_at(11_000.0 + dh, dt).unwrap().temperature;
            prop_assert!((below - at).abs() < 1e-7);
            prop_assert_eq!(at, above);
        }

        #[test]
        fn pressure_and_density_decrease(h in 0.0f64..19_990.0, step in 1.0f64..10.0, dt in -20.0f64..20.0) {
            let a = atmosphere_at(h, dt).unwrap();
            let b = atmosphere_at(h + step, dt).unwrap();
            prop_assert!(b.pressure < a.pressure);
            prop_assert!(b.density < a.density);
        }

        #[test]
        fn tas_not_below_cas_for_warm_or_standard_days(v in 50.0f64..300.0, h in 1.0f64..15_000.0, dt in 0.0f64..20.0) {
            prop_assert!(cas_to_tas(v, h, dt).unwrap() > v);
        }

        #[test]
        fn conversions_round_trip(v in 50.0f64..300.0, h in -500.0f64..20_000.0, dt in -20.0f64..20.0) {
            let tas = cas_to_tas(v, h, dt).unwrap();
            prop_assert!((tas_to_cas(tas, h, dt).unwrap() - v).abs() <= 1e-9 * v);
            let m = tas_to_mach(tas, h, dt).unwrap();
            prop_assert!((mach_to_tas(m, h, dt).unwrap() - tas).abs() <= 1e-9 * tas);
        }

        #[test]
        fn mach_round_trip(h in -500.0f64..20_000.0) {
            let v = mach_to_tas(0.78, h, 0.0).unwrap();
            prop_assert!((tas_to_mach(v, h, 0.0).unwrap() - 0.78).abs() < 1e-12);
        }
    }
}
