//! Convergence order of the RK4 integrator.

use climb_core::atmosphere::cas_to_tas;
use climb_core::integrator::{rk4_step_with, simulate, HybridField};
use climb_core::units::{fl_to_m, kt_to_ms};
use climb_core::{
    AircraftPerfModel, DynamicsConfig, HybridSystem, Layer, Mode, SpeedRegime, SpeedTrend, State, TuningParams,
};

const FIXED: Mode = Mode {
    regime: SpeedRegime::Cas,
    layer: Layer::Low,
    trend: SpeedTrend::Cst,
};

/// ḣ = h, V̇ = 0.
struct Exponential;

impl HybridField for Exponential {
    fn mode(&self, _v: f64, _h: f64) -> Mode {
        FIXED
    }
    fn climb_rate(&self, _t: f64, h: f64, _v: f64, _q: Mode) -> f64 {
        h
    }
    fn accel(&self, _t: f64, _v: f64, _h: f64, _hdot: f64) -> (f64, bool) {
        (0.0, false)
    }
}

fn exponential_error(dt: f64) -> f64 {
    let steps = (1.0 / dt).round() as usize;
    let mut s = State {
        t: 0.0,
        q: FIXED,
        h: 1.0,
        v: 1.0,
    };
    for _ in 0..steps {
        s = rk4_step_with(&Exponential, &s, dt).unwrap().0;
    }
    assert_eq!(s.v, 1.0);
    (s.h - 1f64.exp()).abs()
}

#[test]
fn exponential_global_error_is_fourth_order() {
    for dt in [0.1, 0.05, 0.025] {
        let ratio = exponential_error(dt) / exponential_error(dt / 2.0);
        assert!((14.0..=18.0).contains(&ratio), "dt {dt}: ratio {ratio}");
    }
}

/// Altitude after 60 s of a constant-CAS climb at FL150, well clear of any
/// schedule breakpoint.
fn switch_free_endpoint(dt: f64) -> f64 {
    let model = AircraftPerfModel::a320_like();
    let cfg = DynamicsConfig::default();
    let params = TuningParams::nominal(&model);
    let h = fl_to_m(150.0);
    let v = cas_to_tas(kt_to_ms(params.v2), h, 0.0).unwrap();
    let sys = HybridSystem::new(params, &cfg, &model).unwrap();
    let s0 = State {
        t: 0.0,
        q: sys.mode_of(v, h),
        h,
        v,
    };
    let out = simulate(&params, &s0, None, 60.0, dt, &cfg, &model).unwrap();
    assert_eq!(out.mode_switch_count, 0);
    out.trajectory.last().h
}

#[test]
fn full_model_self_convergence() {
    // Coarse steps keep the differences well above round-off.
    let reference = switch_free_endpoint(0.01);
    for dt in [12.0, 6.0] {
        let e1 = (switch_free_endpoint(dt) - reference).abs();
        let e2 = (switch_free_endpoint(dt / 2.0) - reference).abs();
        assert!(e1 / e2 >= 12.0, "dt {dt}: ratio {}", e1 / e2);
    }
}
