//! The hybrid climb system: discrete modes, the target speed schedule and
//! the two continuous vector fields (rate of climb and acceleration).

use serde::{Deserialize, Serialize};

use crate::atmosphere::{self, AtmosphereState, ISA};
use crate::error::{Error, Result};
use crate::performance::AircraftPerfModel;
use crate::units::{kt_to_ms, m_to_fl};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpeedRegime {
    Cas,
    Mach,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Layer {
    /// At or below the tropopause.
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpeedTrend {
    Dec,
    Cst,
    Acc,
}

/// Discrete state of the hybrid system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mode {
    pub regime: SpeedRegime,
    pub layer: Layer,
    pub trend: SpeedTrend,
}

impl Mode {
    /// All twelve modes.
    pub fn all() -> impl Iterator<Item = Mode> {
        [SpeedRegime::Cas, SpeedRegime::Mach].into_iter().flat_map(|regime| {
            [Layer::Low, Layer::High].into_iter().flat_map(move |layer| {
                [SpeedTrend::Dec, SpeedTrend::Cst, SpeedTrend::Acc]
                    .into_iter()
                    .map(move |trend| Mode { regime, layer, trend })
            })
        })
    }
}

/// The five tuned parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningParams {
    /// kg
    pub mass: f64,
    /// Temperature offset from ISA, K.
    pub delta_t: f64,
    /// CAS between FL60 and FL100, kt.
    pub v1: f64,
    /// CAS between FL100 and the crossover altitude, kt.
    pub v2: f64,
    /// Mach above the crossover altitude.
    pub mach: f64,
}

impl TuningParams {
    pub const NAMES: [&'static str; 5] = ["mass", "dT", "v1", "v2", "mach"];

    pub fn to_array(&self) -> [f64; 5] {
        [self.mass, self.delta_t, self.v1, self.v2, self.mach]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            mass: a[0],
            delta_t: a[1],
            v1: a[2],
            v2: a[3],
            mach: a[4],
        }
    }

    /// Nominal parameters for an aircraft model: reference mass, ISA day,
    /// 250 kt / 300 kt / Mach 0.78.
    pub fn nominal(model: &AircraftPerfModel) -> Self {
        Self {
            mass: model.mass_ref,
            delta_t: 0.0,
            v1: 250.0,
            v2: 300.0,
            mach: 0.78,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.v1 > 0.0 && self.v2 > 0.0 && self.mach > 0.0) {
            return Err(Error::domain(format!("non-positive tuning parameter in {self:?}")));
        }
        if !self.delta_t.is_finite() {
            return Err(Error::domain("temperature offset must be finite"));
        }
        Ok(())
    }
}

/// Continuous plus discrete state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    /// s
    pub t: f64,
    pub q: Mode,
    /// m
    pub h: f64,
    /// TAS, m/s
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsConfig {
    /// Half-width of the constant-speed band around the target, TAS m/s.
    pub epsilon: f64,
    /// (FL ceiling, kt CAS) bands applied up to FL60, ordered by ceiling.
    pub below_fl60_schedule: Vec<(f64, f64)>,
    /// Limit the FL60–FL100 speed to 250 kt CAS.
    pub cap_250_below_fl100: bool,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            epsilon: kt_to_ms(2.0),
            below_fl60_schedule: vec![
                (15.0, 170.0),
                (30.0, 185.0),
                (40.0, 200.0),
                (50.0, 220.0),
                (60.0, 240.0),
            ],
            cap_250_below_fl100: true,
        }
    }
}

impl DynamicsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::config("epsilon", "must be positive"));
        }
        let sched = &self.below_fl60_schedule;
        if sched.is_empty() {
            return Err(Error::config("schedule", "empty"));
        }
        if sched.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::config("schedule", "FL ceilings must be strictly increasing"));
        }
        if sched.last().map(|e| e.0) != Some(60.0) {
            return Err(Error::config("schedule", "last FL ceiling must be 60"));
        }
        if sched.iter().any(|e| !(e.1 > 0.0)) {
            return Err(Error::config("schedule", "speeds must be positive"));
        }
        Ok(())
    }
}

/// Altitude of the FL60 / FL100 schedule breakpoints.
const FL60: f64 = 60.0;
const FL100: f64 = 100.0;
/// Slack on band ceilings so that e.g. 3000 ft falls in the FL30 band.
const FL_TOL: f64 = 1e-9;

/// The hybrid system for one parameter vector. Precomputes the CAS/Mach
/// crossover altitude so mode evaluation stays cheap.
#[derive(Debug, Clone)]
pub struct HybridSystem<'a> {
    pub params: TuningParams,
    pub cfg: &'a DynamicsConfig,
    pub model: &'a AircraftPerfModel,
    crossover: f64,
    /// (FL ceiling, impact pressure ratio of the band CAS)
    schedule: Vec<(f64, f64)>,
    v1_impact: f64,
    v2_impact: f64,
}

impl<'a> HybridSystem<'a> {
    pub fn new(params: TuningParams, cfg: &'a DynamicsConfig, model: &'a AircraftPerfModel) -> Result<Self> {
        params.check()?;
        let v1_kt = if cfg.cap_250_below_fl100 {
            params.v1.min(250.0)
        } else {
            params.v1
        };
        let v2_ms = kt_to_ms(params.v2);
        let crossover = match atmosphere::crossover_altitude(v2_ms, params.mach) {
            Ok(h) => h,
            // Mach target never reached in the envelope: CAS all the way.
            Err(Error::NoCrossover { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        Ok(Self {
            params,
            cfg,
            model,
            crossover,
            schedule: cfg
                .below_fl60_schedule
                .iter()
                .map(|&(fl, kt)| (fl, atmosphere::cas_impact_ratio(kt_to_ms(kt))))
                .collect(),
            v1_impact: atmosphere::cas_impact_ratio(kt_to_ms(v1_kt)),
            v2_impact: atmosphere::cas_impact_ratio(v2_ms),
        })
    }

    /// CAS/Mach crossover altitude for (v2, mach), m. Infinite when the
    /// Mach target is never reached below the tropopause + 10 km.
    pub fn crossover(&self) -> f64 {
        self.crossover
    }

    /// Target TAS (m/s) at altitude `h`.
    pub fn target_speed(&self, h: f64) -> f64 {
        self.target_speed_at(h, &atmosphere::atmosphere_unchecked(h, self.params.delta_t))
    }

    fn target_speed_at(&self, h: f64, atm: &AtmosphereState) -> f64 {
        let fl = m_to_fl(h);
        let impact = if fl <= FL60 + FL_TOL {
            self.schedule
                .iter()
                .find(|&&(ceiling, _)| fl <= ceiling + FL_TOL)
                .map_or(self.schedule[self.schedule.len() - 1].1, |e| e.1)
        } else if h > self.crossover {
            return self.params.mach * atm.speed_of_sound;
        } else if fl <= FL100 + FL_TOL {
            self.v1_impact
        } else {
            self.v2_impact
        };
        atmosphere::tas_from_impact_ratio(impact, atm)
    }

    pub fn mode_of(&self, v: f64, h: f64) -> Mode {
        self.mode_at(v, h, &atmosphere::atmosphere_unchecked(h, self.params.delta_t))
    }

    fn mode_at(&self, v: f64, h: f64, atm: &AtmosphereState) -> Mode {
        let regime = if h <= self.crossover {
            SpeedRegime::Cas
        } else {
            SpeedRegime::Mach
        };
        let layer = if h <= ISA.h_trop { Layer::Low } else { Layer::High };
        let target = self.target_speed_at(h, atm);
        let eps = self.cfg.epsilon;
        let trend = if v <= target - eps {
            SpeedTrend::Acc
        } else if v >= target + eps {
            SpeedTrend::Dec
        } else {
            SpeedTrend::Cst
        };
        Mode { regime, layer, trend }
    }

    /// Mode, rate of climb and acceleration at one point, sharing the
    /// atmosphere and force evaluations. Same values as [`Self::mode_of`],
    /// [`Self::rate_of_climb`] and [`Self::acceleration`].
    #[inline]
    pub fn slopes(&self, v: f64, h: f64) -> Slopes {
        let p = &self.params;
        let atm = atmosphere::atmosphere_unchecked(h, p.delta_t);
        let mode = self.mode_at(v, h, &atm);
        let excess = self.model.thrust_unchecked(h) - self.model.drag_at(v, p.mass, &atm);
        let roc = self.roc_from(v, mode, excess, &atm);
        let (accel, clamped) = self.accel_from(v, roc, excess);
        Slopes {
            mode,
            roc,
            accel,
            clamped,
        }
    }

    #[inline]
    fn roc_from(&self, v: f64, q: Mode, excess: f64, atm: &AtmosphereState) -> f64 {
        let p = &self.params;
        let temp_factor = (atm.temperature - p.delta_t) / atm.temperature;
        let esf = self.model.esf_at(v, p.delta_t, q, atm);
        self.model.c_red * temp_factor * excess * v / (p.mass * ISA.g) * esf
    }

    #[inline]
    fn accel_from(&self, v: f64, hdot: f64, excess: f64) -> (f64, bool) {
        let m = self.params.mass;
        let raw = hdot / v;
        let sin_gamma = raw.clamp(-1.0, 1.0);
        ((excess - m * ISA.g * sin_gamma) / m, sin_gamma != raw)
    }

    /// Rate of climb (m/s) from the total-energy equation, scaled by the
    /// reduced climb power coefficient.
    pub fn rate_of_climb(&self, v: f64, h: f64, q: Mode) -> f64 {
        let p = &self.params;
        let atm = atmosphere::atmosphere_unchecked(h, p.delta_t);
        let excess = self.model.thrust_unchecked(h) - self.model.drag_at(v, p.mass, &atm);
        self.roc_from(v, q, excess, &atm)
    }

    /// Longitudinal acceleration (m/s²) given the rate of climb. The second
    /// value is true when the flight path sine had to be clamped to [-1, 1].
    pub fn acceleration(&self, h: f64, v: f64, hdot: f64) -> (f64, bool) {
        let p = &self.params;
        let atm = atmosphere::atmosphere_unchecked(h, p.delta_t);
        let excess = self.model.thrust_unchecked(h) - self.model.drag_at(v, p.mass, &atm);
        self.accel_from(v, hdot, excess)
    }
}

/// Mode and state derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slopes {
    pub mode: Mode,
    /// m/s
    pub roc: f64,
    /// m/s²
    pub accel: f64,
    /// The flight path sine was clamped.
    pub clamped: bool,
}

pub fn mode_of(v: f64, h: f64, params: &TuningParams, cfg: &DynamicsConfig, model: &AircraftPerfModel) -> Result<Mode> {
    Ok(HybridSystem::new(*params, cfg, model)?.mode_of(v, h))
}

pub fn target_speed(h: f64, params: &TuningParams, cfg: &DynamicsConfig, model: &AircraftPerfModel) -> Result<f64> {
    Ok(HybridSystem::new(*params, cfg, model)?.target_speed(h))
}

pub fn rate_of_climb(v: f64, h: f64, q: Mode, params: &TuningParams, model: &AircraftPerfModel) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::domain("rate of climb needs positive speed"));
    }
    atmosphere::atmosphere_at(h, params.delta_t)?;
    let cfg = DynamicsConfig::default();
    Ok(HybridSystem::new(*params, &cfg, model)?.rate_of_climb(v, h, q))
}

pub fn acceleration(h: f64, v: f64, hdot: f64, params: &TuningParams, model: &AircraftPerfModel) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::domain("acceleration needs positive speed"));
    }
    atmosphere::atmosphere_at(h, params.delta_t)?;
    let cfg = DynamicsConfig::default();
    Ok(HybridSystem::new(*params, &cfg, model)?.acceleration(h, v, hdot).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atmosphere::{cas_to_tas, mach_to_tas};
    use crate::units::ft_to_m;
    use proptest::prelude::*;

    fn setup() -> (AircraftPerfModel, DynamicsConfig, TuningParams) {
        let model = AircraftPerfModel::a320_like();
        let params = TuningParams::nominal(&model);
        (model, DynamicsConfig::default(), params)
    }

    #[test]
    fn mode_space_has_twelve_elements() {
        let all: std::collections::HashSet<_> = Mode::all().collect();
        assert_eq!(all.len(), 12);
    }

    #[test]
    fn trend_thresholds() {
        let (model, cfg, params) = setup();
        let sys = HybridSystem::new(params, &cfg, &model).unwrap();
        let h = 5000.0;
        let target = sys.target_speed(h);
        assert_eq!(sys.mode_of(target, h).trend, SpeedTrend::Cst);
        assert_eq!(sys.mode_of(target - 2.0 * cfg.epsilon, h).trend, SpeedTrend::Acc);
        assert_eq!(sys.mode_of(target + 2.0 * cfg.epsilon, h).trend, SpeedTrend::Dec);
        assert_eq!(sys.mode_of(target, 11_001.0).layer, Layer::High);
        assert_eq!(sys.mode_of(target, 11_000.0).layer, Layer::Low);
    }

    #[test]
    fn schedule_segments() {
        let (model, cfg, mut params) = setup();
        params.v1 = 240.0;
        let sys = HybridSystem::new(params, &cfg, &model).unwrap();
        let h80 = ft_to_m(8000.0);
        let expected = cas_to_tas(kt_to_ms(240.0), h80, 0.0).unwrap();
        assert!((sys.target_speed(h80) - expected).abs() < 1e-9);

        let h30 = ft_to_m(3000.0);
        let expected = cas_to_tas(kt_to_ms(185.0), h30, 0.0).unwrap();
        assert!((sys.target_speed(h30) - expected).abs() < 1e-9);
        // Band (40, 200) covers FL35.
        let h35 = ft_to_m(3500.0);
        let expected = cas_to_tas(kt_to_ms(200.0), h35, 0.0).unwrap();
        assert!((sys.target_speed(h35) - expected).abs() < 1e-9);

        let h_hi = sys.crossover() + 500.0;
        let expected = mach_to_tas(params.mach, h_hi, 0.0).unwrap();
        assert!((sys.target_speed(h_hi) - expected).abs() < 1e-9);
        assert_eq!(sys.mode_of(expected, h_hi).regime, SpeedRegime::Mach);

        let h150 = ft_to_m(15_000.0);
        let expected = cas_to_tas(kt_to_ms(params.v2), h150, 0.0).unwrap();
        assert!((sys.target_speed(h150) - expected).abs() < 1e-9);
    }

    #[test]
    fn v1_cap() {
        let (model, cfg, mut params) = setup();
        params.v1 = 270.0;
        let sys = HybridSystem::new(params, &cfg, &model).unwrap();
        let h = ft_to_m(8000.0);
        let capped = cas_to_tas(kt_to_ms(250.0), h, 0.0).unwrap();
        assert!((sys.target_speed(h) - capped).abs() < 1e-9);
        let uncapped_cfg = DynamicsConfig {
            cap_250_below_fl100: false,
            ..cfg.clone()
        };
        let sys = HybridSystem::new(params, &uncapped_cfg, &model).unwrap();
        assert!(sys.target_speed(h) > capped);
    }

    #[test]
    fn zero_excess_power_gives_zero_climb() {
        let (mut model, cfg, params) = setup();
        let (h, v) = (3000.0, 150.0);
        let d = crate::performance::drag(v, h, 0.0, params.mass, &model).unwrap();
        // Pure constant thrust equal to the drag at this state.
        model.ctc1 = d;
        model.ctc2 = 1e30;
        model.ctc3 = 0.0;
        let sys = HybridSystem::new(params, &cfg, &model).unwrap();
        let q = sys.mode_of(v, h);
        assert!(sys.rate_of_climb(v, h, q).abs() < 1e-9);
        assert!(sys.acceleration(h, v, 0.0).0.abs() < 1e-12);
    }

    #[test]
    fn vertical_flight_path() {
        let (model, cfg, params) = setup();
        let sys = HybridSystem::new(params, &cfg, &model).unwrap();
        let (h, v) = (2000.0, 120.0);
        let thrust = model.thrust_unchecked(h);
        let d = crate::performance::drag(v, h, 0.0, params.mass, &model).unwrap();
        let expected = (thrust - d - params.mass * ISA.g) / params.mass;
        let (a, clamped) = sys.acceleration(h, v, v);
        assert!((a - expected).abs() < 1e-12);
        assert!(!clamped);
        let (a2, clamped) = sys.acceleration(h, v, 3.0 * v);
        assert_eq!(a2, a);
        assert!(clamped);
    }

    #[test]
    fn isa_day_temperature_factor_is_one() {
        let (model, cfg, params) = setup();
        let sys = HybridSystem::new(params, &cfg, &model).unwrap();
        let (h, v) = (11_500.0, 230.0);
        let q = Mode {
            regime: SpeedRegime::Mach,
            layer: Layer::High,
            trend: SpeedTrend::Cst,
        };
        let atm = atmosphere::atmosphere_at(h, 0.0).unwrap();
        let d = model.drag_at(v, params.mass, &atm);
        let expected = (model.thrust_unchecked(h) - d) * v / (params.mass * ISA.g);
        assert_eq!(sys.rate_of_climb(v, h, q), expected);
    }

    #[test]
    fn config_validation() {
        let mut cfg = DynamicsConfig::default();
        cfg.validate().unwrap();
        cfg.below_fl60_schedule.push((50.0, 250.0));
        assert!(cfg.validate().is_err());
        let cfg = DynamicsConfig {
            epsilon: 0.0,
            ..DynamicsConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    proptest! {
        #[test]
        fn heavier_climbs_slower(h in 0.0f64..11_000.0, cas in 160.0f64..300.0, m in 39_000.0f64..76_000.0) {
            let (model, cfg, mut params) = setup();
            let v = cas_to_tas(kt_to_ms(cas), h, 0.0).unwrap();
            params.mass = m;
            let light = HybridSystem::new(params, &cfg, &model).unwrap();
            params.mass = m + 1000.0;
            let heavy = HybridSystem::new(params, &cfg, &model).unwrap();
            let q = light.mode_of(v, h);
            let atm = atmosphere::atmosphere_at(h, 0.0).unwrap();
            let excess = model.thrust_unchecked(h) - model.drag_at(v, m, &atm);
            prop_assume!(excess > 0.0);
            prop_assert!(heavy.rate_of_climb(v, h, q) < light.rate_of_climb(v, h, q));
        }

        #[test]
        fn warm_day_factor_reduces_climb(h in 0.0f64..10_900.0, cas in 160.0f64..300.0, dt in 0.5f64..20.0) {
            // With the atmosphere-dependent terms (excess power, energy share)
            // held at their warm-day values, the temperature factor alone
            // strictly lowers a positive rate of climb.
            let (model, cfg, mut params) = setup();
            let v = cas_to_tas(kt_to_ms(cas), h, 0.0).unwrap();
            params.delta_t = dt;
            let warm = HybridSystem::new(params, &cfg, &model).unwrap();
            let q = warm.mode_of(v, h);
            let atm = atmosphere::atmosphere_at(h, dt).unwrap();
            let bracket = (model.thrust_unchecked(h) - model.drag_at(v, params.mass, &atm)) * v / (params.mass * ISA.g);
            let without_factor = model.c_red * bracket * model.esf_at(v, dt, q, &atm);
            prop_assume!(without_factor > 0.0);
            let roc = warm.rate_of_climb(v, h, q);
            prop_assert!(roc < without_factor);
            let factor = (atm.temperature - dt) / atm.temperature;
            prop_assert!((roc - factor * without_factor).abs() <= 1e-12 * without_factor);
        }

        #[test]
        fn trend_never_skips_constant(h in 0.0f64..11_000.0, v0 in 100.0f64..250.0, dv in -1.0f64..1.0) {
            let (model, cfg, params) = setup();
            let sys = HybridSystem::new(params, &cfg, &model).unwrap();
            let step = dv * 1.999 * cfg.epsilon;
            let a = sys.mode_of(v0, h).trend;
            let b = sys.mode_of(v0 + step, h).trend;
            let jump = matches!((a, b), (SpeedTrend::Acc, SpeedTrend::Dec) | (SpeedTrend::Dec, SpeedTrend::Acc));
            prop_assert!(!jump);
        }
    }
}
