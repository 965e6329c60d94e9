//! Fourth-order Runge-Kutta integration of the hybrid system, trajectory
//! sampling and the alignment used by the fit objectives.

use serde::{Deserialize, Serialize};

use crate::dynamics::{DynamicsConfig, HybridSystem, Mode, State, TuningParams};
use crate::error::{Error, Result};
use crate::performance::AircraftPerfModel;
use crate::units::fl_to_m;

/// Relative tolerance used when comparing sample times.
const TIME_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    /// s
    pub t: f64,
    /// m
    pub h: f64,
    /// TAS, m/s
    pub v: f64,
    /// Rate of climb, m/s
    pub roc: f64,
}

/// Uniformly sampled altitude / speed / rate-of-climb series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    t0: f64,
    dt: f64,
    samples: Vec<TrajectorySample>,
}

impl Trajectory {
    /// Builds a trajectory, checking that timestamps sit on `t0 + k·dt`.
    pub fn new(dt: f64, samples: Vec<TrajectorySample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::domain("trajectory must not be empty"));
        }
        if !(dt > 0.0) {
            return Err(Error::domain(format!("sample interval must be positive, got {dt}")));
        }
        let t0 = samples[0].t;
        for (k, s) in samples.iter().enumerate() {
            let expected = t0 + k as f64 * dt;
            if (s.t - expected).abs() > TIME_TOL * expected.abs().max(1.0) {
                return Err(Error::domain(format!(
                    "sample {k} at t={} s off the {dt} s grid (expected {expected})",
                    s.t
                )));
            }
        }
        Ok(Self { t0, dt, samples })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn altitudes(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.h).collect()
    }

    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("non-empty by construction")
    }

    /// Time span covered, s.
    pub fn span(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }

    /// Index of the sample at absolute time `t`, if `t` is on the grid.
    pub fn index_at(&self, t: f64) -> Option<usize> {
        let k = (t - self.t0) / self.dt;
        let r = k.round();
        if r < 0.0 || (k - r).abs() > 1e-6 {
            return None;
        }
        Some(r as usize)
    }

    /// First `n` samples (at least one).
    pub fn truncated(&self, n: usize) -> Trajectory {
        Trajectory {
            t0: self.t0,
            dt: self.dt,
            samples: self.samples[..n.clamp(1, self.len())].to_vec(),
        }
    }

    /// Extends the trajectory to `len` samples holding altitude `h` with zero
    /// rate of climb. No-op when already long enough.
    pub fn padded(&self, len: usize, h: f64) -> Trajectory {
        let mut samples = self.samples.clone();
        let v = self.last().v;
        while samples.len() < len {
            let t = self.t0 + samples.len() as f64 * self.dt;
            samples.push(TrajectorySample { t, h, v, roc: 0.0 });
        }
        Trajectory {
            t0: self.t0,
            dt: self.dt,
            samples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    ReachedLevel,
    Horizon,
    Ceiling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutcome {
    pub trajectory: Trajectory,
    pub termination: Termination,
    /// Slope evaluations where the flight-path sine was clamped.
    pub clamp_incidents: usize,
    /// Mode changes between consecutive samples.
    pub mode_switch_count: usize,
}

/// Slopes of a hybrid system integrated by [`rk4_step_with`].
pub trait HybridField {
    fn mode(&self, v: f64, h: f64) -> Mode;
    /// Rate of climb in mode `q`.
    fn climb_rate(&self, t: f64, h: f64, v: f64, q: Mode) -> f64;
    /// Acceleration given the rate of climb; flags a clamped flight path.
    fn accel(&self, t: f64, v: f64, h: f64, hdot: f64) -> (f64, bool);

    /// Rate of climb in the current mode and the matching acceleration.
    fn slopes(&self, t: f64, h: f64, v: f64) -> (f64, f64, bool) {
        let dh = self.climb_rate(t, h, v, self.mode(v, h));
        let (dv, clamped) = self.accel(t, v, h, dh);
        (dh, dv, clamped)
    }
}

impl HybridField for HybridSystem<'_> {
    #[inline]
    fn mode(&self, v: f64, h: f64) -> Mode {
        self.mode_of(v, h)
    }

    #[inline]
    fn climb_rate(&self, _t: f64, h: f64, v: f64, q: Mode) -> f64 {
        self.rate_of_climb(v, h, q)
    }

    #[inline]
    fn accel(&self, _t: f64, v: f64, h: f64, hdot: f64) -> (f64, bool) {
        self.acceleration(h, v, hdot)
    }

    #[inline]
    fn slopes(&self, _t: f64, h: f64, v: f64) -> (f64, f64, bool) {
        let s = HybridSystem::slopes(self, v, h);
        (s.roc, s.accel, s.clamped)
    }
}

/// Diagnostics of one step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepInfo {
    pub clamp_incidents: usize,
}

/// One RK4 step of the coupled (h, V) system. The mode is re-derived at each
/// of the four slope points, and each speed slope uses the altitude slope
/// computed at the same point as its rate of climb.
pub fn rk4_step_with<F: HybridField + ?Sized>(field: &F, s: &State, dt: f64) -> Result<(State, StepInfo)> {
    if !(dt > 0.0) {
        return Err(Error::domain(format!("step must be positive, got {dt}")));
    }
    let k1 = field.slopes(s.t, s.h, s.v);
    let (h_new, v_new, clamp_incidents) = rk4_from(field, s, dt, k1)?;
    let next = State {
        t: s.t + dt,
        q: field.mode(v_new, h_new),
        h: h_new,
        v: v_new,
    };
    Ok((next, StepInfo { clamp_incidents }))
}

/// RK4 update given the first-stage slopes `k1` = (dh, dv, clamped).
/// Returns the new (h, v) and the number of clamped stages.
#[inline]
fn rk4_from<F: HybridField + ?Sized>(field: &F, s: &State, dt: f64, k1: (f64, f64, bool)) -> Result<(f64, f64, usize)> {
    let (t, h, v) = (s.t, s.h, s.v);
    let half = 0.5 * dt;
    let (dh1, dv1, c1) = k1;
    let (dh2, dv2, c2) = field.slopes(t + half, h + dh1 * half, v + dv1 * half);
    let (dh3, dv3, c3) = field.slopes(t + half, h + dh2 * half, v + dv2 * half);
    let (dh4, dv4, c4) = field.slopes(t + dt, h + dh3 * dt, v + dv3 * dt);

    let h_new = h + dt / 6.0 * (dh1 + 2.0 * dh2 + 2.0 * dh3 + dh4);
    let v_new = v + dt / 6.0 * (dv1 + 2.0 * dv2 + 2.0 * dv3 + dv4);
    if !h_new.is_finite() || !v_new.is_finite() {
        return Err(Error::Numerical {
            state: *s,
            detail: format!("non-finite update (h={h_new}, v={v_new})"),
        });
    }
    let clamps = c1 as usize + c2 as usize + c3 as usize + c4 as usize;
    Ok((h_new, v_new, clamps))
}

/// One RK4 step of the climb model for `params`.
pub fn rk4_step(
    s: &State,
    dt: f64,
    params: &TuningParams,
    cfg: &DynamicsConfig,
    model: &AircraftPerfModel,
) -> Result<State> {
    let sys = HybridSystem::new(*params, cfg, model)?;
    Ok(rk4_step_with(&sys, s, dt)?.0)
}

/// Simulates a climb from `s0`.
///
/// Stops when the altitude reaches `level_fl` (the final sample is clamped
/// to the level with zero rate of climb), when `horizon` seconds have
/// elapsed, or at the model ceiling. Samples are recorded every `dt`.
pub fn simulate(
    params: &TuningParams,
    s0: &State,
    level_fl: Option<f64>,
    horizon: f64,
    dt: f64,
    cfg: &DynamicsConfig,
    model: &AircraftPerfModel,
) -> Result<SimulationOutcome> {
    let sys = HybridSystem::new(*params, cfg, model)?;
    simulate_system(&sys, s0, level_fl, horizon, dt)
}

pub fn simulate_system(
    sys: &HybridSystem<'_>,
    s0: &State,
    level_fl: Option<f64>,
    horizon: f64,
    dt: f64,
) -> Result<SimulationOutcome> {
    if !(horizon > 0.0) || !(dt > 0.0) {
        return Err(Error::domain("horizon and step must be positive"));
    }
    if !(s0.v > 0.0) || !(crate::atmosphere::H_MIN..=sys.model.ceiling_m()).contains(&s0.h) {
        return Err(Error::domain(format!("invalid initial state {s0:?}")));
    }
    let level_h = level_fl.map(fl_to_m);
    let ceiling = sys.model.ceiling_m();
    let steps = (horizon / dt - 1e-9).ceil() as usize;

    let mut samples = Vec::with_capacity(steps + 1);
    let mut k1 = sys.slopes(s0.v, s0.h);
    let mut state = State { q: k1.mode, ..*s0 };
    if let Some(lh) = level_h {
        if state.h >= lh {
            samples.push(TrajectorySample {
                t: state.t,
                h: state.h,
                v: state.v,
                roc: 0.0,
            });
            return Ok(SimulationOutcome {
                trajectory: Trajectory { t0: s0.t, dt, samples },
                termination: Termination::ReachedLevel,
                clamp_incidents: 0,
                mode_switch_count: 0,
            });
        }
    }
    samples.push(TrajectorySample {
        t: state.t,
        h: state.h,
        v: state.v,
        roc: k1.roc,
    });

    let mut clamp_incidents = 0;
    let mut mode_switch_count = 0;
    let mut termination = Termination::Horizon;
    for k in 1..=steps {
        // The slopes at the new state double as its mode, its recorded rate
        // of climb and the first stage of the following step.
        let (h, v, clamps) = rk4_from(sys, &state, dt, (k1.roc, k1.accel, k1.clamped))?;
        clamp_incidents += clamps;
        let t = s0.t + k as f64 * dt;
        if !(v > 0.0) || h < crate::atmosphere::H_MIN {
            return Err(Error::Numerical {
                state: State { t, q: state.q, h, v },
                detail: "state left the valid domain".into(),
            });
        }
        k1 = sys.slopes(v, h);
        let next = State { t, q: k1.mode, h, v };
        if next.q != state.q {
            mode_switch_count += 1;
        }
        if let Some(lh) = level_h {
            if next.h >= lh {
                samples.push(TrajectorySample { t, h: lh, v, roc: 0.0 });
                termination = Termination::ReachedLevel;
                break;
            }
        }
        samples.push(TrajectorySample { t, h, v, roc: k1.roc });
        if next.h >= ceiling {
            termination = Termination::Ceiling;
            break;
        }
        state = next;
    }
    Ok(SimulationOutcome {
        trajectory: Trajectory { t0: s0.t, dt, samples },
        termination,
        clamp_incidents,
        mode_switch_count,
    })
}

/// Keeps every `dt_out / dt`-th sample starting at the first one.
pub fn resample(traj: &Trajectory, dt_out: f64) -> Result<Trajectory> {
    let ratio = dt_out / traj.dt;
    let k = ratio.round();
    if !(k >= 1.0) || (ratio - k).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::domain(format!(
            "output interval {dt_out} s is not a multiple of {} s",
            traj.dt
        )));
    }
    let k = k as usize;
    Ok(Trajectory {
        t0: traj.t0,
        dt: dt_out,
        samples: traj.samples.iter().step_by(k).copied().collect(),
    })
}

/// Altitude sequences of equal length. The shorter one is extended at the
/// level altitude.
pub fn align_and_pad(pred: &Trajectory, obs: &Trajectory, level_fl: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_aligned(pred, obs)?;
    let level = fl_to_m(level_fl);
    let n = pred.len().max(obs.len());
    let mut p = pred.altitudes();
    let mut o = obs.altitudes();
    p.resize(n, level);
    o.resize(n, level);
    Ok((p, o))
}

pub(crate) fn check_aligned(a: &Trajectory, b: &Trajectory) -> Result<()> {
    if (a.dt - b.dt).abs() > TIME_TOL * a.dt {
        return Err(Error::domain(format!(
            "sample intervals differ: {} vs {} s",
            a.dt, b.dt
        )));
    }
    if (a.t0 - b.t0).abs() > 1e-6 {
        return Err(Error::domain(format!("epochs differ: {} vs {} s", a.t0, b.t0)));
    }
    Ok(())
}
